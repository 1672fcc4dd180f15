//! Particle-hole complex structure on single-plane configuration space.
//!
//! A real wave function over `2^M` spin configurations can be organized into
//! a complex wave function of the same length once a pair of real matrices
//! `(K, I)` with `K^2 = 1`, `I^2 = -1`, `{K, I} = 0` is chosen: `K` realizes
//! complex conjugation and `I` the multiplication by `i`. Here the pair is
//! built from particle-hole conjugation: `T1` flips every bit, `T3` weighs a
//! configuration by the parity of its empty-site count, `D` by the parity of
//! the empty sites at odd positions, and `B = D T1` is the conjugation used
//! throughout. This module provides those matrices, the complexification and
//! its inverse, componentwise phase rotations with their probability
//! bookkeeping, the `B`-projectors, verification of the structure algebra
//! (also for the doubled two-wave picture), the compatibility projection of
//! operators onto the complex picture, and ladder operators acting on the
//! doubled picture.

use crate::error::{PcaError, Result};
use crate::hilbert::{BasisIndexing, MAX_MODES};
use crate::lattice::LatticeSpec;
use crate::op::OperatorMatrix;
use crate::perm::SignedPermutation;
use num_complex::Complex64;

/// The four structure matrices on `2^modes` configurations, stored as signed
/// permutations (every one of them has exactly one entry of modulus 1 per
/// row).
#[derive(Clone, Debug)]
pub struct StructureMatrices {
    modes: usize,
    /// Flips every bit of the configuration.
    pub t1: SignedPermutation,
    /// Diagonal; sign is the parity of the number of empty sites.
    pub t3: SignedPermutation,
    /// Diagonal; sign is the parity of the number of empty odd positions.
    pub d: SignedPermutation,
    /// `B = D T1`, the particle-hole conjugation. Squares to one and
    /// anticommutes with `T3` exactly when `modes = 1 mod 4`.
    pub b: SignedPermutation,
}

/// A `(K, I)` pair together with the phase map used to build complex
/// amplitudes from a real wave: `phi = F_R (q + Kq) + i F_R F̃_I (q - Kq)`.
#[derive(Clone, Debug)]
pub struct ComplexStructurePair {
    pub label: String,
    /// Realizes complex conjugation on the real space.
    pub k: SignedPermutation,
    /// Realizes multiplication by `i` on the real space.
    pub i: SignedPermutation,
    /// The ratio `F_R^{-1} F_I` of the imaginary- to real-part maps.
    pub f_i_tilde: SignedPermutation,
    /// Scalar `F_R` (both concrete structures use 1/2).
    pub f_r_scale: f64,
    /// Constant in the closure relation `F̃_I I = 1 - c(1 - K)`.
    pub c: f64,
}

/// Complex amplitudes indexed by configuration. `constrained` records that
/// the wave was built from a single real wave, in which case `B phi = phi`
/// holds and ladder operators in the complex picture are unavailable.
#[derive(Clone, Debug)]
pub struct ComplexWave {
    pub phi: Vec<Complex64>,
    pub constrained: bool,
}

impl ComplexWave {
    pub fn dim(&self) -> usize {
        self.phi.len()
    }

    /// Squared norm `phi^dag phi`.
    pub fn norm_sq(&self) -> f64 {
        self.phi.iter().map(|z| z.norm_sqr()).sum()
    }
}

impl StructureMatrices {
    /// Build the structure matrices on `2^modes` configurations. Requires
    /// `modes = 1 mod 4`: that is exactly when `B` squares to `+1` (the
    /// product of the diagonal of `D` at a configuration and its complement
    /// is the parity of the odd-position count, `(modes - 1)/2`).
    pub fn new(modes: usize) -> Result<Self> {
        if modes == 0 || modes % 4 != 1 {
            return Err(PcaError::Lattice(format!(
                "complex structure needs a mode count of 1 mod 4, got {modes}"
            )));
        }
        if modes > MAX_MODES {
            return Err(PcaError::Dimension(format!(
                "{modes} modes exceed the enumerable limit of {MAX_MODES}"
            )));
        }
        let dim = 1usize << modes;
        let all = dim - 1;
        // Bit of position p is (modes - 1 - p); collect the odd positions.
        let mut odd_mask = 0usize;
        for p in (1..modes).step_by(2) {
            odd_mask |= 1 << (modes - 1 - p);
        }
        let odd_count = (modes - 1) / 2;

        let t3 = SignedPermutation::from_fn(dim, |tau| {
            let empty = modes - (tau as u64).count_ones() as usize;
            (tau, if empty % 2 == 0 { 1 } else { -1 })
        })?;
        let d = SignedPermutation::from_fn(dim, |tau| {
            let empty_odd = odd_count - (tau & odd_mask).count_ones() as usize;
            (tau, if empty_odd % 2 == 0 { 1 } else { -1 })
        })?;
        // Complementing every bit reorders a full product over all positions;
        // the resulting sign is global because the positions always sum to
        // modes(modes-1)/2, which is even in the supported regime.
        let flip_sign = if (modes * (modes - 1) / 2) % 2 == 0 {
            1
        } else {
            -1
        };
        let t1 = SignedPermutation::from_fn(dim, |tau| (all ^ tau, flip_sign))?;
        let b = d.compose(&t1)?;
        Ok(StructureMatrices {
            modes,
            t1,
            t3,
            d,
            b,
        })
    }

    /// Build for a single-plane lattice (`n_x` modes).
    pub fn for_lattice(spec: &LatticeSpec) -> Result<Self> {
        if spec.species.plane_count() != 1 {
            return Err(PcaError::Lattice(
                "the particle-hole structure is defined on a single plane".into(),
            ));
        }
        if !spec.supports_complex_structure() {
            return Err(PcaError::Lattice(format!(
                "complex structure needs n_x = 1 mod 4, got {}",
                spec.n_x
            )));
        }
        StructureMatrices::new(spec.n_x)
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn dim(&self) -> usize {
        1 << self.modes
    }

    /// `(-1)^(number of empty sites)` — the diagonal of `T3`, which also
    /// fixes the relative phase between a configuration and its conjugate.
    pub fn eta(&self, tau: usize) -> f64 {
        f64::from(self.t3.sign(tau))
    }

    /// The `(K, I)` pair acting on one real wave: `K = B`, `I = T3 B`.
    pub fn single_pair(&self) -> ComplexStructurePair {
        let i = self.t3.compose(&self.b).expect("same dimension");
        ComplexStructurePair {
            label: "single".into(),
            k: self.b.clone(),
            i,
            f_i_tilde: self.t3.clone(),
            f_r_scale: 0.5,
            c: 1.0,
        }
    }

    /// The `(K, I)` pair on the doubled space of two independent real waves
    /// stacked as `(q̃, q̄')`: both maps swap the blocks, carrying `B`
    /// respectively `T3 B`.
    pub fn doubled_pair(&self) -> ComplexStructurePair {
        let t3b = self.t3.compose(&self.b).expect("same dimension");
        ComplexStructurePair {
            label: "doubled".into(),
            k: block_swap_double(&self.b),
            i: block_swap_double(&t3b),
            f_i_tilde: block_diag_double(&self.t3),
            f_r_scale: 0.5,
            c: 1.0,
        }
    }

    /// Complex amplitudes from a forward wave `q̃` and an independent
    /// conjugate wave `q̄'`:
    /// `phi = (q̃ + B q̄')/2 + i T3 (q̃ - B q̄')/2`, componentwise
    /// `phi_tau = [q̃_tau + q̂_tau + i eta(tau)(q̃_tau - q̂_tau)]/2` with
    /// `q̂ = B q̄'`. With both inputs normalized, `phi^dag phi = 1`.
    pub fn complexify(&self, q_tilde: &[f64], q_bar: &[f64]) -> Result<ComplexWave> {
        let dim = self.dim();
        if q_tilde.len() != dim || q_bar.len() != dim {
            return Err(PcaError::Dimension(format!(
                "wave length {} / {} does not match configuration count {dim}",
                q_tilde.len(),
                q_bar.len()
            )));
        }
        let q_hat = self.b.apply_real(q_bar);
        let phi = (0..dim)
            .map(|tau| {
                let s = 0.5 * (q_tilde[tau] + q_hat[tau]);
                let a = 0.5 * self.eta(tau) * (q_tilde[tau] - q_hat[tau]);
                Complex64::new(s, a)
            })
            .collect();
        Ok(ComplexWave {
            phi,
            constrained: false,
        })
    }

    /// Complexification of a single real wave (`q̄' = q̃ = q`). The result
    /// satisfies `B phi = phi` exactly.
    pub fn complexify_single(&self, q: &[f64]) -> Result<ComplexWave> {
        let mut wave = self.complexify(q, q)?;
        wave.constrained = true;
        Ok(wave)
    }

    /// Inverse of [`complexify`](Self::complexify): recovers the forward
    /// components `q̃_tau` and the conjugate components `q̂_tau = (B q̄')_tau`
    /// via `q̃ = Re phi + eta Im phi`, `q̂ = Re phi - eta Im phi`.
    pub fn decomplexify(&self, wave: &ComplexWave) -> (Vec<f64>, Vec<f64>) {
        let dim = self.dim();
        debug_assert_eq!(wave.dim(), dim);
        let mut q_tilde = vec![0.0; dim];
        let mut q_conj = vec![0.0; dim];
        for tau in 0..dim {
            let eta = self.eta(tau);
            q_tilde[tau] = wave.phi[tau].re + eta * wave.phi[tau].im;
            q_conj[tau] = wave.phi[tau].re - eta * wave.phi[tau].im;
        }
        (q_tilde, q_conj)
    }

    /// Undo the conjugation on the second output of
    /// [`decomplexify`](Self::decomplexify): `q̄' = B q̂` (since `B^2 = 1`).
    pub fn q_bar_from_conjugate(&self, q_conj: &[f64]) -> Vec<f64> {
        self.b.apply_real(q_conj)
    }

    /// Split into the `B = +1` and `B = -1` parts:
    /// `phi± = (phi ± B phi)/2`.
    pub fn project_b(&self, wave: &ComplexWave) -> (Vec<Complex64>, Vec<Complex64>) {
        let b_phi = self.b.apply_complex(&wave.phi);
        let plus: Vec<Complex64> = wave
            .phi
            .iter()
            .zip(&b_phi)
            .map(|(p, bp)| 0.5 * (p + bp))
            .collect();
        let minus: Vec<Complex64> = wave
            .phi
            .iter()
            .zip(&b_phi)
            .map(|(p, bp)| 0.5 * (p - bp))
            .collect();
        (plus, minus)
    }

    /// Componentwise phase rotation `phi_tau -> exp(i alpha_tau) phi_tau`,
    /// with the probability bookkeeping that goes with it. Writing
    /// `p_tau = q̃_tau^2` for the forward probability and
    /// `p̄_(tau^c) = q̂_tau^2` for the conjugate-wave probability of the
    /// complementary configuration, the sum `p + p̄` is invariant while the
    /// difference rotates as
    /// `cos(2 alpha)(p - p̄) + 2 eta sin(2 alpha) q̃ q̂`.
    ///
    /// The output stays flagged as constrained only when the input was and
    /// the phases are complement-symmetric (`alpha_tau = alpha_(tau^c)`),
    /// which is what preserves `B phi = phi`.
    pub fn phase_rotate(
        &self,
        wave: &ComplexWave,
        alpha: &[f64],
    ) -> Result<(ComplexWave, PhaseRotationReport)> {
        let dim = self.dim();
        if wave.dim() != dim || alpha.len() != dim {
            return Err(PcaError::Dimension(format!(
                "wave length {} and phase count {} must both equal {dim}",
                wave.dim(),
                alpha.len()
            )));
        }
        let (qt, qc) = self.decomplexify(wave);
        let phi_new: Vec<Complex64> = (0..dim)
            .map(|tau| Complex64::from_polar(1.0, alpha[tau]) * wave.phi[tau])
            .collect();
        let symmetric = (0..dim).all(|tau| alpha[tau] == alpha[self.t1.target(tau)]);
        let rotated = ComplexWave {
            phi: phi_new,
            constrained: wave.constrained && symmetric,
        };
        let (qt2, qc2) = self.decomplexify(&rotated);

        let mut report = PhaseRotationReport {
            sum_before: vec![0.0; dim],
            sum_after: vec![0.0; dim],
            diff_before: vec![0.0; dim],
            diff_after: vec![0.0; dim],
            diff_predicted: vec![0.0; dim],
            max_sum_drift: 0.0,
            max_diff_residual: 0.0,
        };
        for tau in 0..dim {
            let eta = self.eta(tau);
            report.sum_before[tau] = qt[tau] * qt[tau] + qc[tau] * qc[tau];
            report.sum_after[tau] = qt2[tau] * qt2[tau] + qc2[tau] * qc2[tau];
            report.diff_before[tau] = qt[tau] * qt[tau] - qc[tau] * qc[tau];
            report.diff_after[tau] = qt2[tau] * qt2[tau] - qc2[tau] * qc2[tau];
            report.diff_predicted[tau] = (2.0 * alpha[tau]).cos() * report.diff_before[tau]
                + 2.0 * eta * (2.0 * alpha[tau]).sin() * qt[tau] * qc[tau];
            report.max_sum_drift = report
                .max_sum_drift
                .max((report.sum_after[tau] - report.sum_before[tau]).abs());
            report.max_diff_residual = report
                .max_diff_residual
                .max((report.diff_after[tau] - report.diff_predicted[tau]).abs());
        }
        Ok((rotated, report))
    }
}

/// Per-configuration probability bookkeeping of a phase rotation: the sum
/// `p + p̄` must stay put, the difference must follow the rotation law.
#[derive(Clone, Debug)]
pub struct PhaseRotationReport {
    pub sum_before: Vec<f64>,
    pub sum_after: Vec<f64>,
    pub diff_before: Vec<f64>,
    pub diff_after: Vec<f64>,
    pub diff_predicted: Vec<f64>,
    pub max_sum_drift: f64,
    pub max_diff_residual: f64,
}

/// `1 ⊗ p` on the doubled space: the same map in both blocks.
pub fn block_diag_double(p: &SignedPermutation) -> SignedPermutation {
    let dim = p.dim();
    SignedPermutation::from_fn(2 * dim, |idx| {
        let (block, tau) = (idx / dim, idx % dim);
        (block * dim + p.target(tau), p.sign(tau))
    })
    .expect("doubling preserves bijectivity")
}

/// `swap ⊗ p` on the doubled space: exchanges the blocks while applying `p`.
pub fn block_swap_double(p: &SignedPermutation) -> SignedPermutation {
    let dim = p.dim();
    SignedPermutation::from_fn(2 * dim, |idx| {
        let (block, tau) = (idx / dim, idx % dim);
        ((1 - block) * dim + p.target(tau), p.sign(tau))
    })
    .expect("doubling preserves bijectivity")
}

fn sp_equal(a: &SignedPermutation, b: &SignedPermutation) -> bool {
    a.dim() == b.dim() && (0..a.dim()).all(|t| a.target(t) == b.target(t) && a.sign(t) == b.sign(t))
}

fn sp_opposite(a: &SignedPermutation, b: &SignedPermutation) -> bool {
    a.dim() == b.dim()
        && (0..a.dim()).all(|t| a.target(t) == b.target(t) && a.sign(t) == -b.sign(t))
}

fn is_minus_identity(p: &SignedPermutation) -> bool {
    (0..p.dim()).all(|t| p.target(t) == t && p.sign(t) == -1)
}

/// Check the defining algebra of a structure pair against a step operator.
/// Returns the names of all violated identities; an empty list is a pass.
///
/// Checked exactly on the signed permutations: `K^2 = 1`, `I^2 = -1`,
/// `{K, I} = 0`, `[S, K] = 0`, `[S, I] = 0`, the closure relation
/// `F̃_I I = 1 - c(1 - K)`, its consequences `[F̃_I I, K] = 0` and
/// `{F̃_I, K} = 0`, and the normalization `Re(G^dag G) = 1` of the phase map
/// `G = F_R (1 + K) + i F_R F̃_I (1 - K)`.
pub fn verify_structure(pair: &ComplexStructurePair, step: &SignedPermutation) -> Vec<String> {
    let mut violated = Vec::new();
    let dim = pair.k.dim();
    if pair.i.dim() != dim || pair.f_i_tilde.dim() != dim || step.dim() != dim {
        return vec!["dimension mismatch between structure maps and step operator".into()];
    }
    let compose = |a: &SignedPermutation, b: &SignedPermutation| {
        a.compose(b).expect("dimensions already checked")
    };

    if !compose(&pair.k, &pair.k).is_identity() {
        violated.push("K^2 = 1".into());
    }
    if !is_minus_identity(&compose(&pair.i, &pair.i)) {
        violated.push("I^2 = -1".into());
    }
    if !sp_opposite(&compose(&pair.k, &pair.i), &compose(&pair.i, &pair.k)) {
        violated.push("KI + IK = 0".into());
    }
    if !sp_equal(&compose(step, &pair.k), &compose(&pair.k, step)) {
        violated.push("SK - KS = 0".into());
    }
    if !sp_equal(&compose(step, &pair.i), &compose(&pair.i, step)) {
        violated.push("SI - IS = 0".into());
    }

    let fii = compose(&pair.f_i_tilde, &pair.i);
    if (pair.c - 1.0).abs() < 1e-15 {
        if !sp_equal(&fii, &pair.k) {
            violated.push("F_I I = 1 - c(1 - K)".into());
        }
    } else {
        let lhs = OperatorMatrix::from_signed_permutation(&fii);
        let id = OperatorMatrix::identity(dim);
        let kc = OperatorMatrix::from_signed_permutation(&pair.k);
        let rhs = id
            .scale(Complex64::new(1.0 - pair.c, 0.0))
            .add(&kc.scale(Complex64::new(pair.c, 0.0)))
            .expect("same dimension");
        if lhs.distance(&rhs).expect("same dimension") > 1e-12 {
            violated.push("F_I I = 1 - c(1 - K)".into());
        }
    }
    if !sp_equal(&compose(&fii, &pair.k), &compose(&pair.k, &fii)) {
        violated.push("[F_I I, K] = 0".into());
    }
    if !sp_opposite(
        &compose(&pair.f_i_tilde, &pair.k),
        &compose(&pair.k, &pair.f_i_tilde),
    ) {
        violated.push("F_I K + K F_I = 0".into());
    }

    // Normalization of the phase map, kept sparse throughout.
    let id = OperatorMatrix::identity(dim);
    let kc = OperatorMatrix::from_signed_permutation(&pair.k);
    let fc = OperatorMatrix::from_signed_permutation(&pair.f_i_tilde);
    let f_r = Complex64::new(pair.f_r_scale, 0.0);
    let g = id
        .add(&kc)
        .expect("same dimension")
        .scale(f_r)
        .add(
            &fc.matmul(&id.sub(&kc).expect("same dimension"))
                .expect("same dimension")
                .scale(Complex64::i() * f_r),
        )
        .expect("same dimension");
    let m = g.adjoint().matmul(&g).expect("same dimension");
    let re = m
        .add(&m.conj())
        .expect("same dimension")
        .scale(Complex64::new(0.5, 0.0));
    if re.distance(&id).expect("same dimension") > 1e-12 {
        violated.push("Re(G^dag G) = 1".into());
    }
    violated
}

/// Result of testing an operator against the complex structure.
#[derive(Clone, Debug)]
pub struct CompatReport {
    /// The compatible part `(A - I A I)/2`; equals `A` when `[A, I] = 0`.
    pub a_prime: OperatorMatrix,
    /// `max |[A, I]|` over all entries.
    pub i_commutator_norm: f64,
    /// Whether `[A, I] = 0` within the tolerance.
    pub compatible: bool,
    /// For compatible operators: the complex image `A_R - i I A_I`, where
    /// `A_R`/`A_I` are the diagonal/off-diagonal parts with respect to the
    /// eigenspaces of `K`.
    pub a_c: Option<OperatorMatrix>,
    /// `max |[K, A_C]|`; zero for a correct complex image.
    pub k_commutator_norm: Option<f64>,
}

/// Project an operator onto its part compatible with the complex structure
/// and, when the operator already commutes with `I`, build its complex
/// image. Incompatibility is reported, not raised.
pub fn compat_project(
    pair: &ComplexStructurePair,
    a: &OperatorMatrix,
    tol: f64,
) -> Result<CompatReport> {
    let dim = pair.k.dim();
    if a.dim() != dim {
        return Err(PcaError::Dimension(format!(
            "operator dimension {} does not match structure dimension {dim}",
            a.dim()
        )));
    }
    let i_op = OperatorMatrix::from_signed_permutation(&pair.i);
    let k_op = OperatorMatrix::from_signed_permutation(&pair.k);
    let comm = i_op.commutator(a)?;
    let i_commutator_norm = comm.max_abs();
    let a_prime = a
        .sub(&i_op.matmul(a)?.matmul(&i_op)?)?
        .scale(Complex64::new(0.5, 0.0));
    let compatible = i_commutator_norm <= tol;
    if !compatible {
        return Ok(CompatReport {
            a_prime,
            i_commutator_norm,
            compatible,
            a_c: None,
            k_commutator_norm: None,
        });
    }
    let half = Complex64::new(0.5, 0.0);
    let id = OperatorMatrix::identity(dim);
    let p_plus = id.add(&k_op)?.scale(half);
    let p_minus = id.sub(&k_op)?.scale(half);
    let a_diag = p_plus
        .matmul(a)?
        .matmul(&p_plus)?
        .add(&p_minus.matmul(a)?.matmul(&p_minus)?)?;
    let a_off = p_plus
        .matmul(a)?
        .matmul(&p_minus)?
        .add(&p_minus.matmul(a)?.matmul(&p_plus)?)?;
    let a_c = a_diag.sub(&i_op.matmul(&a_off)?.scale(Complex64::i()))?;
    let k_commutator_norm = k_op.commutator(&a_c)?.max_abs();
    Ok(CompatReport {
        a_prime,
        i_commutator_norm,
        compatible,
        a_c: Some(a_c),
        k_commutator_norm: Some(k_commutator_norm),
    })
}

/// Complex amplitudes built directly from the structure pair:
/// `phi = (1 + K)/2 q - i I (1 - K)/2 q`. Satisfies `K phi = phi` and agrees
/// with [`StructureMatrices::complexify_single`] for the single-wave pair.
pub fn compat_wave(pair: &ComplexStructurePair, q: &[f64]) -> Result<Vec<Complex64>> {
    let dim = pair.k.dim();
    if q.len() != dim {
        return Err(PcaError::Dimension(format!(
            "wave length {} does not match structure dimension {dim}",
            q.len()
        )));
    }
    let kq = pair.k.apply_real(q);
    let plus: Vec<f64> = (0..dim).map(|t| 0.5 * (q[t] + kq[t])).collect();
    let minus: Vec<f64> = (0..dim).map(|t| 0.5 * (q[t] - kq[t])).collect();
    let i_minus = pair.i.apply_real(&minus);
    Ok((0..dim)
        .map(|t| Complex64::new(plus[t], -i_minus[t]))
        .collect())
}

/// Which doubled-picture ladder matrix to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DoubledLadder {
    /// Annihilation as a block swap between the forward wave and the
    /// conjugated wave.
    Swap,
    /// Annihilation combined with the phase `i`, block-diagonal with
    /// opposite signs.
    Phase,
    /// The occupation operator, block-diagonal and equal in both blocks.
    Number,
}

/// Ladder operators in the doubled picture, where the forward wave and the
/// conjugate wave are independent. Applying an annihilation operator to the
/// complex amplitudes lowers the forward wave while raising the conjugate
/// wave; the occupation operator acts as a number operator on the forward
/// wave and as a hole counter on the conjugate wave.
#[derive(Clone, Debug)]
pub struct DoubledLadders {
    basis: BasisIndexing,
    mats: StructureMatrices,
}

impl DoubledLadders {
    pub fn new(spec: &LatticeSpec) -> Result<Self> {
        let mats = StructureMatrices::for_lattice(spec)?;
        let basis = BasisIndexing::new(spec)?;
        Ok(DoubledLadders { basis, mats })
    }

    pub fn basis(&self) -> &BasisIndexing {
        &self.basis
    }

    pub fn mats(&self) -> &StructureMatrices {
        &self.mats
    }

    fn require_unconstrained(&self, wave: &ComplexWave) -> Result<()> {
        if wave.constrained {
            return Err(PcaError::Input(
                "ladder operators in the complex picture need independent forward and \
                 conjugate waves; they are incompatible with a wave built from a single \
                 real wave"
                    .into(),
            ));
        }
        Ok(())
    }

    fn site_matrix(&self, j: i64, dagger: bool) -> OperatorMatrix {
        let mode = self.basis.mode_at(0, j);
        if dagger {
            self.basis.op_create(mode)
        } else {
            self.basis.op_annihilate(mode)
        }
    }

    fn apply_ladder(&self, wave: &ComplexWave, j: i64, dagger: bool) -> Result<ComplexWave> {
        self.require_unconstrained(wave)?;
        let (q_tilde, q_conj) = self.mats.decomplexify(wave);
        let op = self.site_matrix(j, dagger);
        // Forward wave receives the operator applied to the conjugated
        // components; the conjugate wave receives it applied to the forward
        // components, pushed back through B.
        let new_tilde: Vec<f64> = op.apply_real(&q_conj).iter().map(|z| z.re).collect();
        let tmp: Vec<f64> = op.apply_real(&q_tilde).iter().map(|z| z.re).collect();
        let new_bar = self.mats.b.apply_real(&tmp);
        self.mats.complexify(&new_tilde, &new_bar)
    }

    /// Annihilation operator at site `j` acting on the complex amplitudes.
    pub fn annihilate(&self, wave: &ComplexWave, j: i64) -> Result<ComplexWave> {
        self.apply_ladder(wave, j, false)
    }

    /// Creation operator at site `j` acting on the complex amplitudes.
    pub fn create(&self, wave: &ComplexWave, j: i64) -> Result<ComplexWave> {
        self.apply_ladder(wave, j, true)
    }

    /// Occupation operator at site `j` in the complex picture: the forward
    /// wave is multiplied by the number operator, the conjugate wave by the
    /// hole operator.
    pub fn number_apply(&self, wave: &ComplexWave, j: i64) -> Result<ComplexWave> {
        self.require_unconstrained(wave)?;
        let (q_tilde, q_conj) = self.mats.decomplexify(wave);
        let q_bar = self.mats.q_bar_from_conjugate(&q_conj);
        let mode = self.basis.mode_at(0, j);
        let dim = self.mats.dim();
        let mut new_tilde = vec![0.0; dim];
        let mut new_bar = vec![0.0; dim];
        for tau in 0..dim {
            if self.basis.occupied(tau, mode) {
                new_tilde[tau] = q_tilde[tau];
            } else {
                new_bar[tau] = q_bar[tau];
            }
        }
        self.mats.complexify(&new_tilde, &new_bar)
    }

    /// Real-picture matrices of the ladder operators in the stacked basis
    /// `(q̃, q̂)` (forward on top, conjugated components below).
    pub fn ladder_matrix(&self, j: i64, which: DoubledLadder) -> Result<OperatorMatrix> {
        let dim = self.mats.dim();
        let mut triplets: Vec<(usize, usize, Complex64)> = Vec::new();
        match which {
            DoubledLadder::Swap => {
                let a = self.site_matrix(j, false);
                for (r, c, v) in a.triplets() {
                    triplets.push((r, dim + c, v));
                    triplets.push((dim + r, c, v));
                }
            }
            DoubledLadder::Phase => {
                let t3a = OperatorMatrix::from_signed_permutation(&self.mats.t3)
                    .matmul(&self.site_matrix(j, false))?;
                for (r, c, v) in t3a.triplets() {
                    triplets.push((r, c, v));
                    triplets.push((dim + r, dim + c, -v));
                }
            }
            DoubledLadder::Number => {
                let mode = self.basis.mode_at(0, j);
                for tau in 0..dim {
                    if self.basis.occupied(tau, mode) {
                        triplets.push((tau, tau, Complex64::ONE));
                        triplets.push((dim + tau, dim + tau, Complex64::ONE));
                    }
                }
            }
        }
        Ok(OperatorMatrix::from_triplets(2 * dim, triplets))
    }

    /// Expectation value of the occupation at site `j` for a doubled state:
    /// half the forward-wave occupation plus half the conjugate-wave hole
    /// weight. Equals 1/2 whenever the two waves coincide and are
    /// normalized.
    pub fn number_expectation(&self, q_tilde: &[f64], q_bar: &[f64], j: i64) -> Result<f64> {
        let dim = self.mats.dim();
        if q_tilde.len() != dim || q_bar.len() != dim {
            return Err(PcaError::Dimension(format!(
                "wave length {} / {} does not match configuration count {dim}",
                q_tilde.len(),
                q_bar.len()
            )));
        }
        let mode = self.basis.mode_at(0, j);
        let mut acc = 0.0;
        for tau in 0..dim {
            if self.basis.occupied(tau, mode) {
                acc += q_tilde[tau] * q_tilde[tau];
            } else {
                acc += q_bar[tau] * q_bar[tau];
            }
        }
        Ok(0.5 * acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Species;
    use crate::op::{complex_from_real, max_abs_diff};
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;
    use proptest::prelude::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn spec5() -> LatticeSpec {
        LatticeSpec::new(5, Species::MwR).unwrap()
    }

    fn random_unit(dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let n: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > 1e-3 {
                return v.iter().map(|x| x / n).collect();
            }
        }
    }

    fn rebuild_with_sign_flip(p: &SignedPermutation, at: usize) -> SignedPermutation {
        let mut target = Vec::with_capacity(p.dim());
        let mut sign = Vec::with_capacity(p.dim());
        for t in 0..p.dim() {
            target.push(p.target(t) as u32);
            sign.push(p.sign(t));
        }
        sign[at] = -sign[at];
        SignedPermutation::new(target, sign).unwrap()
    }

    /// Literal tensor-product construction: position 0 is the outermost
    /// (most significant) factor; within a slot, index 0 = empty, 1 =
    /// occupied.
    fn kron_chain(modes: usize, factor: impl Fn(usize) -> DMatrix<f64>) -> DMatrix<f64> {
        let mut m = DMatrix::<f64>::identity(1, 1);
        for p in 0..modes {
            m = m.kronecker(&factor(p));
        }
        m
    }

    fn tau1() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])
    }

    fn tau3_occupancy() -> DMatrix<f64> {
        // Occupied component (index 1) carries +1, empty carries -1.
        DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0])
    }

    #[test]
    fn structure_matrices_match_literal_tensor_products() {
        let modes = 5;
        let mats = StructureMatrices::new(modes).unwrap();
        let dim = 1 << modes;

        let t1_lit = kron_chain(modes, |_| tau1());
        let t3_lit = kron_chain(modes, |_| tau3_occupancy());
        let d_lit = kron_chain(modes, |p| {
            if p % 2 == 1 {
                tau3_occupancy()
            } else {
                DMatrix::identity(2, 2)
            }
        });
        let b_lit = &d_lit * &t1_lit;

        for (perm, lit) in [
            (&mats.t1, &t1_lit),
            (&mats.t3, &t3_lit),
            (&mats.d, &d_lit),
            (&mats.b, &b_lit),
        ] {
            let dense = OperatorMatrix::from_signed_permutation(perm)
                .to_dense(dim)
                .unwrap();
            assert_eq!(max_abs_diff(&dense, &complex_from_real(lit)), 0.0);
        }
        for tau in 0..dim {
            assert_eq!(mats.eta(tau), t3_lit[(tau, tau)]);
        }
    }

    #[test]
    fn structure_identities_and_step_compatibility() {
        for n_x in [5usize, 9, 13] {
            let mats = StructureMatrices::new(n_x).unwrap();
            assert!(mats.b.compose(&mats.b).unwrap().is_identity());
            let t3b = mats.t3.compose(&mats.b).unwrap();
            let bt3 = mats.b.compose(&mats.t3).unwrap();
            assert!(sp_opposite(&t3b, &bt3));
            let dt1 = mats.d.compose(&mats.t1).unwrap();
            let t1d = mats.t1.compose(&mats.d).unwrap();
            assert!(sp_equal(&dt1, &t1d));
            assert!(sp_equal(&mats.b, &dt1));

            let spec = LatticeSpec::new(n_x, Species::MwR).unwrap();
            let basis = BasisIndexing::new(&spec).unwrap();
            let step = basis.transport_permutation();
            assert!(verify_structure(&mats.single_pair(), &step).is_empty());
            let doubled_step = block_diag_double(&step);
            assert!(verify_structure(&mats.doubled_pair(), &doubled_step).is_empty());
        }
    }

    #[test]
    fn single_site_amplitudes_are_equal_components() {
        let mats = StructureMatrices::new(1).unwrap();
        let q = [0.6, 0.8];
        let wave = mats.complexify_single(&q).unwrap();
        let expected = Complex64::new(0.5 * (q[1] + q[0]), 0.5 * (q[1] - q[0]));
        assert_abs_diff_eq!((wave.phi[0] - expected).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((wave.phi[1] - expected).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn real_and_imaginary_components_fix_relative_sign() {
        let mats = StructureMatrices::new(5).unwrap();
        let dim = mats.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let real_wave = ComplexWave {
            phi: (0..dim)
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), 0.0))
                .collect(),
            constrained: false,
        };
        let (qt, qc) = mats.decomplexify(&real_wave);
        for tau in 0..dim {
            assert_abs_diff_eq!(qt[tau], qc[tau], epsilon = 1e-15);
        }
        let imag_wave = ComplexWave {
            phi: (0..dim)
                .map(|_| Complex64::new(0.0, rng.random_range(-1.0..1.0)))
                .collect(),
            constrained: false,
        };
        let (qt, qc) = mats.decomplexify(&imag_wave);
        for tau in 0..dim {
            assert_abs_diff_eq!(qt[tau], -qc[tau], epsilon = 1e-15);
        }
    }

    #[test]
    fn constrained_wave_satisfies_conjugation_identity() {
        let mats = StructureMatrices::new(5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let q = random_unit(mats.dim(), &mut rng);
        let wave = mats.complexify_single(&q).unwrap();
        let b_phi = mats.b.apply_complex(&wave.phi);
        for tau in 0..mats.dim() {
            assert_abs_diff_eq!((wave.phi[tau] - b_phi[tau]).norm(), 0.0, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(wave.norm_sq(), 1.0, epsilon = 1e-12);
        // The compatible-wave construction from the (K, I) pair agrees.
        let direct = compat_wave(&mats.single_pair(), &q).unwrap();
        for tau in 0..mats.dim() {
            assert_abs_diff_eq!((wave.phi[tau] - direct[tau]).norm(), 0.0, epsilon = 1e-14);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn complexify_roundtrip(seed in 0u64..1000) {
            let mats = StructureMatrices::new(5).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let q_tilde = random_unit(mats.dim(), &mut rng);
            let q_bar = random_unit(mats.dim(), &mut rng);
            let wave = mats.complexify(&q_tilde, &q_bar).unwrap();
            prop_assert!((wave.norm_sq() - 1.0).abs() < 1e-12);
            let (qt, qc) = mats.decomplexify(&wave);
            let qb = mats.q_bar_from_conjugate(&qc);
            for tau in 0..mats.dim() {
                prop_assert!((qt[tau] - q_tilde[tau]).abs() < 1e-12);
                prop_assert!((qb[tau] - q_bar[tau]).abs() < 1e-12);
            }
        }

        #[test]
        fn phase_rotation_keeps_probability_sums(seed in 0u64..1000) {
            let mats = StructureMatrices::new(5).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let q_tilde = random_unit(mats.dim(), &mut rng);
            let q_bar = random_unit(mats.dim(), &mut rng);
            let wave = mats.complexify(&q_tilde, &q_bar).unwrap();
            let alpha: Vec<f64> = (0..mats.dim())
                .map(|_| rng.random_range(-3.2..3.2))
                .collect();
            let (rotated, report) = mats.phase_rotate(&wave, &alpha).unwrap();
            prop_assert!(report.max_sum_drift < 1e-12);
            prop_assert!(report.max_diff_residual < 1e-12);
            prop_assert!((rotated.norm_sq() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn phase_rotation_identity_and_quarter_turn() {
        let mats = StructureMatrices::new(5).unwrap();
        let dim = mats.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q_tilde = random_unit(dim, &mut rng);
        let q_bar = random_unit(dim, &mut rng);
        let wave = mats.complexify(&q_tilde, &q_bar).unwrap();
        let (qt, qc) = mats.decomplexify(&wave);

        let (same, report) = mats.phase_rotate(&wave, &vec![0.0; dim]).unwrap();
        for tau in 0..dim {
            assert_eq!(same.phi[tau], wave.phi[tau]);
            assert_eq!(report.diff_after[tau], report.diff_before[tau]);
        }

        // A quarter turn swaps the roles of the forward and conjugate
        // probabilities.
        let (quarter, report) = mats
            .phase_rotate(&wave, &vec![std::f64::consts::FRAC_PI_2; dim])
            .unwrap();
        let (qt2, qc2) = mats.decomplexify(&quarter);
        for tau in 0..dim {
            assert_abs_diff_eq!(qt2[tau] * qt2[tau], qc[tau] * qc[tau], epsilon = 1e-12);
            assert_abs_diff_eq!(qc2[tau] * qc2[tau], qt[tau] * qt[tau], epsilon = 1e-12);
            assert_abs_diff_eq!(
                report.diff_after[tau],
                -report.diff_before[tau],
                epsilon = 1e-12
            );
        }

        // Complex-side forms of the same bookkeeping.
        for tau in 0..dim {
            let phi = wave.phi[tau];
            let sum = 2.0 * phi.norm_sqr();
            let diff = (-Complex64::i() * mats.eta(tau) * (phi * phi - phi.conj() * phi.conj())).re;
            assert_abs_diff_eq!(report.sum_before[tau], sum, epsilon = 1e-12);
            assert_abs_diff_eq!(report.diff_before[tau], diff, epsilon = 1e-12);
        }
    }

    #[test]
    fn projectors_split_and_are_idempotent() {
        let mats = StructureMatrices::new(5).unwrap();
        let dim = mats.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let wave = ComplexWave {
            phi: (0..dim)
                .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect(),
            constrained: false,
        };
        let (plus, minus) = mats.project_b(&wave);
        let b_plus = mats.b.apply_complex(&plus);
        let b_minus = mats.b.apply_complex(&minus);
        for tau in 0..dim {
            assert_abs_diff_eq!(
                (plus[tau] + minus[tau] - wave.phi[tau]).norm(),
                0.0,
                epsilon = 1e-14
            );
            assert_abs_diff_eq!((b_plus[tau] - plus[tau]).norm(), 0.0, epsilon = 1e-14);
            assert_abs_diff_eq!((b_minus[tau] + minus[tau]).norm(), 0.0, epsilon = 1e-14);
        }
        // Idempotence: projecting a projected part changes nothing.
        let plus_wave = ComplexWave {
            phi: plus.clone(),
            constrained: false,
        };
        let (pp, pm) = mats.project_b(&plus_wave);
        for tau in 0..dim {
            assert_abs_diff_eq!((pp[tau] - plus[tau]).norm(), 0.0, epsilon = 1e-14);
            assert_abs_diff_eq!(pm[tau].norm(), 0.0, epsilon = 1e-14);
        }
        // A constrained wave has no negative part; a negative-part input has
        // no positive part.
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let q = random_unit(dim, &mut rng);
        let constrained = mats.complexify_single(&q).unwrap();
        let (_, fm) = mats.project_b(&constrained);
        for z in &fm {
            assert_abs_diff_eq!(z.norm(), 0.0, epsilon = 1e-14);
        }
        let minus_wave = ComplexWave {
            phi: minus,
            constrained: false,
        };
        let (mp, _) = mats.project_b(&minus_wave);
        for z in &mp {
            assert_abs_diff_eq!(z.norm(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn corrupted_conjugation_is_flagged() {
        let mats = StructureMatrices::new(5).unwrap();
        let spec = spec5();
        let basis = BasisIndexing::new(&spec).unwrap();
        let step = basis.transport_permutation();

        // Corrupt one diagonal sign of D inside I only; K keeps the clean
        // conjugation. The anticommutator identity must break.
        let d_bad = rebuild_with_sign_flip(&mats.d, 5);
        let b_bad = d_bad.compose(&mats.t1).unwrap();
        let pair = ComplexStructurePair {
            label: "corrupted".into(),
            k: mats.b.clone(),
            i: mats.t3.compose(&b_bad).unwrap(),
            f_i_tilde: mats.t3.clone(),
            f_r_scale: 0.5,
            c: 1.0,
        };
        let violated = verify_structure(&pair, &step);
        assert!(violated.iter().any(|v| v == "KI + IK = 0"), "{violated:?}");

        // Flipping a sign of I directly is flagged as well.
        let mut pair = mats.single_pair();
        pair.i = rebuild_with_sign_flip(&pair.i, 3);
        let violated = verify_structure(&pair, &step);
        assert!(violated.iter().any(|v| v == "KI + IK = 0"), "{violated:?}");
    }

    #[test]
    fn operator_compatibility_examples() {
        let mats = StructureMatrices::new(5).unwrap();
        let spec = spec5();
        let basis = BasisIndexing::new(&spec).unwrap();
        let pair = mats.doubled_pair();
        let dim = mats.dim();
        let dim2 = 2 * dim;
        let mode = basis.mode_at(0, 1);

        // Identity maps to identity.
        let id = OperatorMatrix::identity(dim2);
        let report = compat_project(&pair, &id, 1e-12).unwrap();
        assert!(report.compatible);
        assert_eq!(report.a_c.as_ref().unwrap().distance(&id).unwrap(), 0.0);

        // The plain per-wave occupation operator acts identically on both
        // blocks; it fails compatibility, and conjugating it with I yields
        // minus the doubled hole operator.
        let n_single = basis.op_number(mode);
        let mut triplets: Vec<(usize, usize, Complex64)> = Vec::new();
        for (r, c, v) in n_single.triplets() {
            triplets.push((r, c, v));
            triplets.push((dim + r, dim + c, v));
        }
        let n_both = OperatorMatrix::from_triplets(dim2, triplets);
        let report = compat_project(&pair, &n_both, 1e-12).unwrap();
        assert!(!report.compatible);
        assert!(report.i_commutator_norm > 0.5);
        let i_op = OperatorMatrix::from_signed_permutation(&pair.i);
        let conjugated = i_op.matmul(&n_both).unwrap().matmul(&i_op).unwrap();
        let mut triplets: Vec<(usize, usize, Complex64)> = Vec::new();
        for tau in 0..dim {
            if !basis.occupied(tau, mode) {
                triplets.push((tau, tau, -Complex64::ONE));
                triplets.push((dim + tau, dim + tau, -Complex64::ONE));
            }
        }
        let minus_holes = OperatorMatrix::from_triplets(dim2, triplets);
        assert_eq!(conjugated.distance(&minus_holes).unwrap(), 0.0);

        // The occupation operator of the complex picture (number on the
        // forward block, holes on the conjugate block) is compatible.
        let mut triplets: Vec<(usize, usize, Complex64)> = Vec::new();
        for tau in 0..dim {
            if basis.occupied(tau, mode) {
                triplets.push((tau, tau, Complex64::ONE));
            } else {
                triplets.push((dim + tau, dim + tau, Complex64::ONE));
            }
        }
        let n_complex = OperatorMatrix::from_triplets(dim2, triplets);
        let report = compat_project(&pair, &n_complex, 1e-12).unwrap();
        assert!(report.compatible);
        assert_eq!(report.k_commutator_norm.unwrap(), 0.0);
        assert_eq!(report.a_prime.distance(&n_complex).unwrap(), 0.0);

        // The complex image reproduces the wave-level action.
        let a_c = report.a_c.as_ref().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let q = random_unit(dim2, &mut rng);
        let lhs = compat_wave(
            &pair,
            &n_complex
                .apply_real(&q)
                .iter()
                .map(|z| z.re)
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let rhs = a_c.apply(&compat_wave(&pair, &q).unwrap());
        for t in 0..dim2 {
            assert_abs_diff_eq!((lhs[t] - rhs[t]).norm(), 0.0, epsilon = 1e-12);
        }

        // Products of compatible operators map to products of the images.
        let mode2 = basis.mode_at(0, -2);
        let mut triplets: Vec<(usize, usize, Complex64)> = Vec::new();
        for tau in 0..dim {
            if basis.occupied(tau, mode2) {
                triplets.push((tau, tau, Complex64::ONE));
            } else {
                triplets.push((dim + tau, dim + tau, Complex64::ONE));
            }
        }
        let n2_complex = OperatorMatrix::from_triplets(dim2, triplets);
        let report2 = compat_project(&pair, &n2_complex, 1e-12).unwrap();
        assert!(report2.compatible);
        let product = n_complex.matmul(&n2_complex).unwrap();
        let product_image = compat_project(&pair, &product, 1e-12).unwrap().a_c.unwrap();
        let image_product = a_c.matmul(report2.a_c.as_ref().unwrap()).unwrap();
        assert!(product_image.distance(&image_product).unwrap() < 1e-12);

        // Left-multiplying by I multiplies the image by i.
        let i_a = i_op.matmul(&n_complex).unwrap();
        let image = compat_project(&pair, &i_a, 1e-12).unwrap().a_c.unwrap();
        let expected = a_c.scale(Complex64::i());
        assert!(image.distance(&expected).unwrap() < 1e-12);
    }

    #[test]
    fn doubled_ladder_consistency() {
        let spec = spec5();
        let ladders = DoubledLadders::new(&spec).unwrap();
        let mats = ladders.mats();
        let dim = mats.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let q_tilde = random_unit(dim, &mut rng);
        let q_bar = random_unit(dim, &mut rng);
        let wave = mats.complexify(&q_tilde, &q_bar).unwrap();
        let j = 1i64;

        // The real-picture route agrees with the direct complex-picture
        // formula: a phi = [(1 - i T3) a q̃ + (1 + i T3) B a^dag q̄']/2.
        let lowered = ladders.annihilate(&wave, j).unwrap();
        let a = ladders.site_matrix(j, false);
        let adag = ladders.site_matrix(j, true);
        let u = a.apply_real(&q_tilde);
        let v = mats.b.apply_complex(&adag.apply_real(&q_bar));
        for tau in 0..dim {
            let eta = mats.eta(tau);
            let direct = 0.5
                * ((Complex64::ONE - Complex64::i() * eta) * u[tau]
                    + (Complex64::ONE + Complex64::i() * eta) * v[tau]);
            assert_abs_diff_eq!((lowered.phi[tau] - direct).norm(), 0.0, epsilon = 1e-12);
        }

        // Stacked-matrix route: the swap matrix acts on (q̃, q̂) exactly as
        // the annihilation map does.
        let swap = ladders.ladder_matrix(j, DoubledLadder::Swap).unwrap();
        let (qt, qc) = mats.decomplexify(&wave);
        let stacked: Vec<f64> = qt.iter().chain(qc.iter()).copied().collect();
        let mapped = swap.apply_real(&stacked);
        let (new_t, new_c) = mats.decomplexify(&lowered);
        for tau in 0..dim {
            assert_abs_diff_eq!(mapped[tau].re, new_t[tau], epsilon = 1e-12);
            assert_abs_diff_eq!(mapped[dim + tau].re, new_c[tau], epsilon = 1e-12);
        }

        // Both ladder forms square to the same occupation matrix.
        let phase = ladders.ladder_matrix(j, DoubledLadder::Phase).unwrap();
        let number = ladders.ladder_matrix(j, DoubledLadder::Number).unwrap();
        let from_swap = swap.adjoint().matmul(&swap).unwrap();
        let from_phase = phase.adjoint().matmul(&phase).unwrap();
        assert_eq!(from_swap.distance(&number).unwrap(), 0.0);
        assert_eq!(from_phase.distance(&number).unwrap(), 0.0);

        // Occupation expectation value: identical waves give 1/2.
        let value = ladders.number_expectation(&q_tilde, &q_tilde, j).unwrap();
        assert_abs_diff_eq!(value, 0.5, epsilon = 1e-14);

        // Eigenstate: forward wave occupied at j, conjugate wave empty at j.
        let basis = ladders.basis();
        let mode = basis.mode_at(0, j);
        let occupied_tau = (0..dim).find(|&t| basis.occupied(t, mode)).unwrap();
        let empty_tau = (0..dim).find(|&t| !basis.occupied(t, mode)).unwrap();
        let mut e_occ = vec![0.0; dim];
        e_occ[occupied_tau] = 1.0;
        let mut e_emp = vec![0.0; dim];
        e_emp[empty_tau] = 1.0;
        let eigen = mats.complexify(&e_occ, &e_emp).unwrap();
        let applied = ladders.number_apply(&eigen, j).unwrap();
        for tau in 0..dim {
            assert_abs_diff_eq!(
                (applied.phi[tau] - eigen.phi[tau]).norm(),
                0.0,
                epsilon = 1e-14
            );
        }
        assert_abs_diff_eq!(
            ladders.number_expectation(&e_occ, &e_emp, j).unwrap(),
            1.0,
            epsilon = 1e-14
        );

        // Constrained waves reject ladder operators.
        let constrained = mats.complexify_single(&q_tilde).unwrap();
        assert!(ladders.annihilate(&constrained, j).is_err());
        assert!(ladders.create(&constrained, j).is_err());
    }
}
