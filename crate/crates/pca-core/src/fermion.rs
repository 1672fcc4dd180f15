//! Ladder-operator families on the spin ring, their Fourier modes, the free
//! Hamiltonians (momentum form, nonlocal position form, and the two-plane
//! form), momentum and charge operators, and measured reports for the
//! composite and conjugated families.
//!
//! Mode conventions follow [`BasisIndexing`]: bit position `p` of plane `g`
//! is mode `m = g * n_x + p`, and mode `m` occupies bit `modes - 1 - m` of
//! the configuration index. Momentum labels `k` run over the same symmetric
//! integer range as the site coordinates, with angular frequency
//! `omega(k) = 2 pi k / (n_x epsilon)`.

use crate::complex_structure::StructureMatrices;
use crate::error::{PcaError, Result};
use crate::hilbert::BasisIndexing;
use crate::lattice::{LatticeSpec, Species};
use crate::op::{hermitian_exp, max_abs_diff, OperatorMatrix, DEFAULT_DENSE_CAP};
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn local2(entries: &[(usize, usize, Complex64)]) -> OperatorMatrix {
    OperatorMatrix::from_triplets(2, entries.iter().copied())
}

/// `[[0,1],[1,0]]`: swaps empty and occupied.
fn swap_local() -> OperatorMatrix {
    local2(&[(0, 1, c(1.0, 0.0)), (1, 0, c(1.0, 0.0))])
}

/// `[[0,i],[-i,0]]`: swap with a quarter-turn phase.
fn swap_phase_local() -> OperatorMatrix {
    local2(&[(0, 1, c(0.0, 1.0)), (1, 0, c(0.0, -1.0))])
}

/// `diag(-1, 1)`: sign of the local occupation.
fn sign_local() -> OperatorMatrix {
    local2(&[(0, 0, c(-1.0, 0.0)), (1, 1, c(1.0, 0.0))])
}

/// `|empty><occupied|`.
fn lower_local() -> OperatorMatrix {
    local2(&[(0, 1, c(1.0, 0.0))])
}

/// `|occupied><empty|`.
fn raise_local() -> OperatorMatrix {
    local2(&[(1, 0, c(1.0, 0.0))])
}

/// `diag(0, 1)`: projector on the occupied state.
fn occupation_local() -> OperatorMatrix {
    local2(&[(1, 1, c(1.0, 0.0))])
}

/// `diag(1, 0)`: projector on the empty state.
fn hole_local() -> OperatorMatrix {
    local2(&[(0, 0, c(1.0, 0.0))])
}

/// Tensor chain over `slots` two-state factors; `place(q) = None` puts the
/// identity at slot `q`. Slot 0 is the most significant factor, matching the
/// bit layout of [`BasisIndexing`].
fn slot_chain(
    slots: usize,
    mut place: impl FnMut(usize) -> Option<OperatorMatrix>,
) -> OperatorMatrix {
    let mut out = OperatorMatrix::identity(1);
    for q in 0..slots {
        let factor = place(q).unwrap_or_else(|| OperatorMatrix::identity(2));
        out = out.kron(&factor);
    }
    out
}

/// Which construction of lowering operators is used on the ring.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum LadderFamily {
    /// Lowering operators carrying the occupied-count sign tail; the
    /// particle-hole involution maps them to the matching raising operators.
    SignString,
    /// Alternating-tail construction whose operators anticommute with the
    /// particle-hole involution instead.
    Alternative,
    /// Two-site composite operators that commute with the particle-hole
    /// involution; canonical pair relations hold only away from ring
    /// neighbors.
    Composite,
    /// Sign-string operators conjugated by the alternating local rotation
    /// `W`; coincides with the alternative family.
    Conjugated,
    /// A full ring of lowering operators each commuting with the
    /// particle-hole involution. No such set exists; requesting it returns
    /// the explanatory error.
    ParticleHoleCommutingFull,
}

impl LadderFamily {
    pub fn name(&self) -> &'static str {
        match self {
            LadderFamily::SignString => "sign-string",
            LadderFamily::Alternative => "alternative",
            LadderFamily::Composite => "composite",
            LadderFamily::Conjugated => "conjugated",
            LadderFamily::ParticleHoleCommutingFull => "particle-hole-commuting-full",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "sign-string" => Ok(LadderFamily::SignString),
            "alternative" => Ok(LadderFamily::Alternative),
            "composite" => Ok(LadderFamily::Composite),
            "conjugated" => Ok(LadderFamily::Conjugated),
            "particle-hole-commuting-full" => Ok(LadderFamily::ParticleHoleCommutingFull),
            other => Err(PcaError::Input(format!(
                "unknown ladder family '{other}' (expected sign-string, alternative, \
                 composite, or conjugated)"
            ))),
        }
    }
}

/// A set of lowering operators, one per mode, plus the subset of modes on
/// which the family declares canonical pair relations.
#[derive(Debug)]
pub struct LadderSet {
    spec: LatticeSpec,
    basis: BasisIndexing,
    family: LadderFamily,
    lower: Vec<OperatorMatrix>,
    declared: Vec<usize>,
    conjugator: Option<OperatorMatrix>,
}

impl LadderSet {
    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn basis(&self) -> &BasisIndexing {
        &self.basis
    }

    pub fn family(&self) -> LadderFamily {
        self.family
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn mode_count(&self) -> usize {
        self.lower.len()
    }

    /// Lowering operator of mode `m`.
    pub fn lower(&self, m: usize) -> &OperatorMatrix {
        &self.lower[m]
    }

    /// Raising operator of mode `m` (adjoint of the lowering operator).
    pub fn raise(&self, m: usize) -> OperatorMatrix {
        self.lower[m].adjoint()
    }

    /// Number operator of mode `m`.
    pub fn number(&self, m: usize) -> OperatorMatrix {
        self.raise(m)
            .matmul(&self.lower[m])
            .expect("operators share one dimension")
    }

    /// Lowering operator at site coordinate `j` of `plane`.
    pub fn lower_site(&self, plane: usize, j: i64) -> &OperatorMatrix {
        &self.lower[self.basis.mode_at(plane, j)]
    }

    /// Modes on which canonical pair relations are declared (all modes for
    /// the canonical families; even bit positions for the composite family).
    pub fn declared_modes(&self) -> &[usize] {
        &self.declared
    }

    /// The conjugating rotation `W`, present only for the conjugated family.
    pub fn conjugator(&self) -> Option<&OperatorMatrix> {
        self.conjugator.as_ref()
    }

    /// True when the family declares canonical pair relations on every mode.
    pub fn is_canonical(&self) -> bool {
        matches!(
            self.family,
            LadderFamily::SignString | LadderFamily::Alternative | LadderFamily::Conjugated
        )
    }

    /// Total number operator, summed over every mode.
    pub fn number_total(&self) -> OperatorMatrix {
        let mut total = OperatorMatrix::zeros(self.dim());
        for m in 0..self.mode_count() {
            total = total.add(&self.number(m)).expect("same dimension");
        }
        total
    }
}

/// Alternating-tail lowering operator at bit position `p` on a one-plane
/// ring of `n_x` sites.
fn alternative_lowering(n_x: usize, p: usize) -> OperatorMatrix {
    slot_chain(n_x, |q| {
        if q < p {
            Some(if q % 2 == 0 {
                swap_local()
            } else {
                swap_phase_local().scale(c(-1.0, 0.0))
            })
        } else if q == p {
            Some(if p % 2 == 0 {
                // (sign + i * phase-swap) / 2 = [[-1,-1],[1,1]] / 2
                local2(&[
                    (0, 0, c(-0.5, 0.0)),
                    (0, 1, c(-0.5, 0.0)),
                    (1, 0, c(0.5, 0.0)),
                    (1, 1, c(0.5, 0.0)),
                ])
            } else {
                // (swap - i * sign) / 2 = [[i,1],[1,-i]] / 2
                local2(&[
                    (0, 0, c(0.0, 0.5)),
                    (0, 1, c(0.5, 0.0)),
                    (1, 0, c(0.5, 0.0)),
                    (1, 1, c(0.0, -0.5)),
                ])
            })
        } else {
            None
        }
    })
}

/// Two-site composite lowering operator at bit position `p`: hops the pair
/// `(p, p+1)` between the aligned and anti-aligned states. The wrap operator
/// (`p = n_x - 1`) carries a relative minus sign between its two branches so
/// that every member commutes with the particle-hole involution.
fn composite_lowering(n_x: usize, p: usize) -> OperatorMatrix {
    if p + 1 < n_x {
        let drop = slot_chain(n_x, |q| {
            if q < p {
                Some(sign_local())
            } else if q == p {
                Some(lower_local())
            } else if q == p + 1 {
                Some(occupation_local())
            } else {
                None
            }
        });
        let lift = slot_chain(n_x, |q| {
            if q < p {
                Some(sign_local())
            } else if q == p {
                Some(raise_local())
            } else if q == p + 1 {
                Some(hole_local())
            } else {
                None
            }
        });
        drop.add(&lift).expect("same dimension")
    } else {
        let drop = slot_chain(n_x, |q| {
            if q == 0 {
                Some(occupation_local())
            } else if q < n_x - 1 {
                Some(sign_local())
            } else {
                Some(lower_local())
            }
        });
        let lift = slot_chain(n_x, |q| {
            if q == 0 {
                Some(hole_local())
            } else if q < n_x - 1 {
                Some(sign_local())
            } else {
                Some(raise_local())
            }
        });
        drop.sub(&lift).expect("same dimension")
    }
}

/// The alternating local rotation `W`: a real Hadamard-like factor at even
/// slots and its quarter-turned counterpart at odd slots. `W` is Hermitian
/// and unitary, and conjugates the sign-string family into the alternative
/// family.
fn conjugating_rotation(n_x: usize) -> OperatorMatrix {
    let r = 0.5f64.sqrt();
    slot_chain(n_x, |q| {
        Some(if q % 2 == 0 {
            // (swap + sign) / sqrt(2)
            local2(&[
                (0, 0, c(-r, 0.0)),
                (0, 1, c(r, 0.0)),
                (1, 0, c(r, 0.0)),
                (1, 1, c(r, 0.0)),
            ])
        } else {
            // (sign - phase-swap) / sqrt(2)
            local2(&[
                (0, 0, c(-r, 0.0)),
                (0, 1, c(0.0, -r)),
                (1, 0, c(0.0, r)),
                (1, 1, c(r, 0.0)),
            ])
        })
    })
}

/// Builds the lowering operators of `family` on `spec`.
///
/// The sign-string family is available for every species; the other
/// constructions are defined on one-plane rings. The conjugated family
/// stores dense matrices and is capped at [`DEFAULT_DENSE_CAP`].
pub fn build_ladders(spec: &LatticeSpec, family: LadderFamily) -> Result<LadderSet> {
    if family == LadderFamily::ParticleHoleCommutingFull {
        let n = spec.n_x;
        return Err(PcaError::Lattice(format!(
            "no set of {n} lowering operators can all commute with the particle-hole \
             involution: they would generate a 2^{n}-dimensional Fock space inside the \
             involution-invariant subspace, which has dimension 2^{}; at most {} such \
             operators exist",
            n - 1,
            n - 1
        )));
    }
    let basis = BasisIndexing::new(spec)?;
    if family != LadderFamily::SignString && spec.species.plane_count() != 1 {
        return Err(PcaError::Lattice(format!(
            "the {} family is defined on a one-plane ring; build it per plane",
            family.name()
        )));
    }
    let n_x = spec.n_x;
    let lower: Vec<OperatorMatrix> = match family {
        LadderFamily::SignString => (0..basis.spec().species.plane_count() * n_x)
            .map(|m| basis.op_annihilate(m))
            .collect(),
        LadderFamily::Alternative => (0..n_x).map(|p| alternative_lowering(n_x, p)).collect(),
        LadderFamily::Composite => (0..n_x).map(|p| composite_lowering(n_x, p)).collect(),
        LadderFamily::Conjugated => {
            if basis.dim() > DEFAULT_DENSE_CAP {
                return Err(PcaError::DenseCap {
                    need: basis.dim(),
                    cap: DEFAULT_DENSE_CAP,
                });
            }
            let w = conjugating_rotation(n_x);
            let w_dag = w.adjoint();
            let ops = (0..n_x)
                .map(|p| {
                    w.matmul(&basis.op_annihilate(p))
                        .and_then(|m| m.matmul(&w_dag))
                })
                .collect::<Result<Vec<_>>>()?;
            let declared = (0..n_x).collect();
            return Ok(LadderSet {
                spec: *spec,
                basis,
                family,
                lower: ops,
                declared,
                conjugator: Some(w),
            });
        }
        LadderFamily::ParticleHoleCommutingFull => unreachable!(),
    };
    let declared = match family {
        LadderFamily::Composite => (0..n_x).step_by(2).collect(),
        _ => (0..lower.len()).collect(),
    };
    Ok(LadderSet {
        spec: *spec,
        basis,
        family,
        lower,
        declared,
        conjugator: None,
    })
}

/// Momentum-space lowering operators of one plane: `a(k) = sum_j D(k,j) a(j)`
/// with the unitary kernel `D(k,j) = exp(-2 pi i k j / n_x) / sqrt(n_x)`.
pub struct MomentumModes {
    spec: LatticeSpec,
    plane: usize,
    lower: Vec<OperatorMatrix>,
}

impl MomentumModes {
    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn plane(&self) -> usize {
        self.plane
    }

    pub fn dim(&self) -> usize {
        self.lower[0].dim()
    }

    fn half(&self) -> i64 {
        self.spec.half()
    }

    /// Lowering operator of momentum label `k`.
    pub fn lower(&self, k: i64) -> &OperatorMatrix {
        &self.lower[(k + self.half()) as usize]
    }

    /// Raising operator of momentum label `k`.
    pub fn raise(&self, k: i64) -> OperatorMatrix {
        self.lower(k).adjoint()
    }

    /// Number operator of momentum label `k`.
    pub fn number(&self, k: i64) -> OperatorMatrix {
        self.raise(k)
            .matmul(self.lower(k))
            .expect("operators share one dimension")
    }

    /// Opposite-branch lowering operator for `k > 0`: removes a quantum from
    /// the negative-frequency partner, i.e. `raise(-k)`.
    pub fn anti_lower(&self, k: i64) -> OperatorMatrix {
        assert!(k > 0, "opposite-branch labels are positive");
        self.raise(-k)
    }

    /// Opposite-branch raising operator for `k > 0`: `lower(-k)`.
    pub fn anti_raise(&self, k: i64) -> OperatorMatrix {
        assert!(k > 0, "opposite-branch labels are positive");
        self.lower(-k).clone()
    }

    /// Total number operator summed over momentum labels.
    pub fn number_total(&self) -> OperatorMatrix {
        let mut total = OperatorMatrix::zeros(self.dim());
        for k in self.spec.momenta() {
            total = total.add(&self.number(k)).expect("same dimension");
        }
        total
    }
}

/// Fourier transform of a one-plane canonical ladder set.
pub fn fourier_modes(ladders: &LadderSet) -> Result<MomentumModes> {
    if ladders.spec().species.plane_count() != 1 {
        return Err(PcaError::Input(
            "this ladder set spans several planes; use fourier_modes_for_plane".into(),
        ));
    }
    fourier_modes_for_plane(ladders, 0)
}

/// Fourier transform of one plane of a canonical ladder set.
pub fn fourier_modes_for_plane(ladders: &LadderSet, plane: usize) -> Result<MomentumModes> {
    if !ladders.is_canonical() {
        return Err(PcaError::Input(format!(
            "momentum modes need canonical pair relations on every site; the {} family \
             does not provide them",
            ladders.family().name()
        )));
    }
    let spec = *ladders.spec();
    if plane >= spec.species.plane_count() {
        return Err(PcaError::Input(format!(
            "plane {plane} out of range for {}",
            spec.species.name()
        )));
    }
    let n = spec.n_x as f64;
    let norm = 1.0 / n.sqrt();
    let mut lower = Vec::with_capacity(spec.n_x);
    for k in spec.momenta() {
        let mut op = OperatorMatrix::zeros(ladders.dim());
        for j in spec.sites() {
            let phase = -2.0 * PI * (k * j) as f64 / n;
            let coeff = c(phase.cos(), phase.sin()).scale(norm);
            op = op.add(&ladders.lower_site(plane, j).scale(coeff))?;
        }
        lower.push(op);
    }
    Ok(MomentumModes { spec, plane, lower })
}

/// Total momentum operator of one plane: `sum_k omega(k) n(k)`.
pub fn momentum_operator(modes: &MomentumModes) -> OperatorMatrix {
    let mut p_op = OperatorMatrix::zeros(modes.dim());
    for k in modes.spec.momenta() {
        let w = modes.spec.omega(k);
        if w != 0.0 {
            p_op = p_op
                .add(&modes.number(k).scale(c(w, 0.0)))
                .expect("same dimension");
        }
    }
    p_op
}

/// Ground state of the free right-moving Hamiltonian with the zero mode in
/// its particle-hole-fixed superposition: every negative-frequency mode is
/// filled and the zero mode enters as `(1 + z raise(0)) / sqrt(2)` with
/// `z = (-1)^((n_x - 1) / 4)`, the sign that makes the state invariant under
/// the particle-hole involution in this basis. Needs `n_x = 1 mod 4`.
pub fn paired_ground_state(modes: &MomentumModes) -> Result<Vec<Complex64>> {
    let spec = &modes.spec;
    if !spec.supports_complex_structure() {
        return Err(PcaError::Lattice(format!(
            "the particle-hole-fixed pairing needs n_x = 1 mod 4, got {}",
            spec.n_x
        )));
    }
    let dim = modes.dim();
    let mut v = vec![Complex64::new(0.0, 0.0); dim];
    v[0] = Complex64::new(1.0, 0.0);
    for k in -spec.half()..0 {
        v = modes.raise(k).apply(&v);
    }
    let z = if ((spec.n_x - 1) / 4) % 2 == 0 {
        1.0
    } else {
        -1.0
    };
    let lifted = modes.raise(0).apply(&v);
    let r = 0.5f64.sqrt();
    for (x, y) in v.iter_mut().zip(lifted) {
        *x = (*x + y.scale(z)).scale(r);
    }
    Ok(v)
}

/// Drift direction of a one-plane walker.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Chirality {
    Right,
    Left,
}

impl Chirality {
    pub fn sign(self) -> f64 {
        match self {
            Chirality::Right => 1.0,
            Chirality::Left => -1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Chirality::Right => "R",
            Chirality::Left => "L",
        }
    }
}

/// Free one-plane Hamiltonian in momentum form.
pub struct MwHamiltonian {
    pub chirality: Chirality,
    /// `H = sign * sum_k omega(k) n(k)`; the right-moving form equals the
    /// momentum operator, the left-moving form is its negative.
    pub h: OperatorMatrix,
    /// `H - E0`, which matches [`oscillator_sum`] exactly.
    pub normal_ordered: OperatorMatrix,
    /// Ground-state energy `-(n_x^2 - 1) pi / (4 n_x epsilon)`.
    pub e0: f64,
    /// Branch-folded ground-state energy, equivalent to `e0` modulo
    /// `2 pi / epsilon`; informational only.
    pub e0_folded: f64,
}

/// Ground-state energy of the free one-plane Hamiltonian.
pub fn ground_energy(spec: &LatticeSpec) -> f64 {
    let n = spec.n_x as f64;
    -(n * n - 1.0) * PI / (4.0 * n * spec.epsilon)
}

/// Branch-folded ground-state energy: the representative of `ground_energy`
/// modulo `2 pi / epsilon` selected by the residue of `n_x` modulo 8.
pub fn ground_energy_folded(spec: &LatticeSpec) -> f64 {
    let n_tilde = match spec.n_x % 8 {
        1 => 0.0,
        3 => 1.0,
        5 => -2.0,
        7 => -1.0,
        _ => unreachable!("site count is odd"),
    };
    let n = spec.n_x as f64;
    -(2.0 * PI / spec.epsilon) * ((2.0 * n_tilde + 1.0) / 8.0 - 1.0 / (8.0 * n))
}

/// Free one-plane Hamiltonian of the requested chirality, with its
/// normal-ordered companion and ground-state energy.
pub fn hamiltonian_mw(modes: &MomentumModes, chirality: Chirality) -> MwHamiltonian {
    let p_op = momentum_operator(modes);
    let h = p_op.scale(c(chirality.sign(), 0.0));
    let e0 = ground_energy(&modes.spec);
    let shift = OperatorMatrix::identity(modes.dim()).scale(c(e0, 0.0));
    let normal_ordered = h.sub(&shift).expect("same dimension");
    MwHamiltonian {
        chirality,
        h,
        normal_ordered,
        e0,
        e0_folded: ground_energy_folded(&modes.spec),
    }
}

/// Oscillator form of the normal-ordered Hamiltonian:
/// `(2 pi / L) sum_{k>0} k [raise(ck) lower(ck) + anti_raise(k) anti_lower(k)]`
/// where `ck` is `k` for the right-moving branch and `-k` for the
/// left-moving one. Equals `h - e0` of [`hamiltonian_mw`] exactly.
pub fn oscillator_sum(modes: &MomentumModes, chirality: Chirality) -> OperatorMatrix {
    let spec = &modes.spec;
    let mut total = OperatorMatrix::zeros(modes.dim());
    for k in 1..=spec.half() {
        let w = 2.0 * PI * k as f64 / spec.length();
        let ck = match chirality {
            Chirality::Right => k,
            Chirality::Left => -k,
        };
        let particle = modes.number(ck);
        let anti = match chirality {
            Chirality::Right => modes
                .lower(-k)
                .matmul(&modes.raise(-k))
                .expect("same dimension"),
            Chirality::Left => modes
                .lower(k)
                .matmul(&modes.raise(k))
                .expect("same dimension"),
        };
        total = total
            .add(
                &particle
                    .add(&anti)
                    .expect("same dimension")
                    .scale(c(w, 0.0)),
            )
            .expect("same dimension");
    }
    total
}

/// Nonlocal position form of the free right-moving Hamiltonian, built from
/// the ladder set's own site operators:
/// `H = (1/2) sum_j sum_{m=1}^{n_x-1} c_m raise(j) [lower(j+m) - lower(j-m)]`
/// with `c_m = i pi (-1)^m / (L sin(pi m epsilon / L))` and periodic site
/// wrap. The half prefactor compensates the double counting of each ordered
/// hop by the wrapped `m` range, making the sum equal [`hamiltonian_mw`]'s
/// right-moving form for the same family.
pub fn hamiltonian_position(ladders: &LadderSet) -> Result<OperatorMatrix> {
    if !ladders.is_canonical() {
        return Err(PcaError::Input(format!(
            "the position-form Hamiltonian needs canonical pair relations; the {} family \
             does not provide them",
            ladders.family().name()
        )));
    }
    if ladders.spec().species.plane_count() != 1 {
        return Err(PcaError::Input(
            "the position-form Hamiltonian is defined on a one-plane ring".into(),
        ));
    }
    let spec = ladders.spec();
    let n = spec.n_x;
    let l = spec.length();
    let mut h = OperatorMatrix::zeros(ladders.dim());
    for p in 0..n {
        let raise = ladders.raise(p);
        for m in 1..n {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            let kernel = c(
                0.0,
                0.5 * PI * sign / (l * (PI * m as f64 * spec.epsilon / l).sin()),
            );
            let hop = ladders
                .lower((p + m) % n)
                .sub(ladders.lower((p + n - m) % n))?;
            h = h.add(&raise.matmul(&hop)?.scale(kernel))?;
        }
    }
    Ok(h)
}

/// Site charges and their sums for a one-plane canonical family.
pub struct ChargeSet {
    /// `Q(j) = raise(j) lower(j) - 1/2`, indexed by bit position.
    pub site: Vec<OperatorMatrix>,
    /// `Q' = sum_j Q(j)`; commutes with the momentum operator and carries
    /// half-integer eigenvalues on odd rings.
    pub total: OperatorMatrix,
    /// `Q = Q' - n(k=0) + 1/2`; integer eigenvalues, zero on the paired
    /// ground state.
    pub reduced: OperatorMatrix,
    /// Total number operator `sum_j raise(j) lower(j)`.
    pub number_total: OperatorMatrix,
}

/// Builds the charge operators of a one-plane canonical ladder set; `modes`
/// must be the Fourier transform of the same set.
pub fn charge_operators(ladders: &LadderSet, modes: &MomentumModes) -> Result<ChargeSet> {
    if !ladders.is_canonical() {
        return Err(PcaError::Input(format!(
            "charges need canonical pair relations; the {} family does not provide them",
            ladders.family().name()
        )));
    }
    if ladders.spec().species.plane_count() != 1 {
        return Err(PcaError::Input(
            "charge operators are defined per plane; build them on a one-plane ring".into(),
        ));
    }
    if ladders.dim() != modes.dim() || ladders.spec().n_x != modes.spec.n_x {
        return Err(PcaError::Dimension(
            "ladder set and momentum modes describe different rings".into(),
        ));
    }
    let dim = ladders.dim();
    let half = OperatorMatrix::identity(dim).scale(c(0.5, 0.0));
    let mut site = Vec::with_capacity(ladders.mode_count());
    let mut total = OperatorMatrix::zeros(dim);
    let mut number_total = OperatorMatrix::zeros(dim);
    for m in 0..ladders.mode_count() {
        let n_m = ladders.number(m);
        let q_m = n_m.sub(&half)?;
        total = total.add(&q_m)?;
        number_total = number_total.add(&n_m)?;
        site.push(q_m);
    }
    let reduced = total.sub(&modes.number(0))?.add(&half)?;
    Ok(ChargeSet {
        site,
        total,
        reduced,
        number_total,
    })
}

/// Free two-plane Hamiltonian split over the plane tensor factors.
#[derive(Debug)]
pub struct DiracHamiltonian {
    spec: LatticeSpec,
    dense_cap: usize,
    /// `H = H_R + H_L`.
    pub h: OperatorMatrix,
    /// Right-moving part: the one-plane momentum operator on the first
    /// factor.
    pub h_r: OperatorMatrix,
    /// Left-moving part: minus the one-plane momentum operator on the second
    /// factor.
    pub h_l: OperatorMatrix,
    /// Total momentum: the sum of the one-plane momentum operators of both
    /// factors.
    pub momentum: OperatorMatrix,
    /// One-plane momentum operator used for both factors.
    pub momentum_single: OperatorMatrix,
    /// Ground-state energy per plane.
    pub e0_single: f64,
    /// Ground-state energy of the two-plane Hamiltonian, `2 * e0_single`.
    pub vacuum_energy: f64,
}

/// Builds the two-plane Hamiltonian `H = P x 1 - 1 x P` together with the
/// total momentum `P x 1 + 1 x P`. The full dimension must stay within
/// `dense_cap`; for larger rings evolve with the signed-permutation
/// transport instead.
pub fn hamiltonian_dirac(spec: &LatticeSpec, dense_cap: usize) -> Result<DiracHamiltonian> {
    if spec.species != Species::Dirac {
        return Err(PcaError::Lattice(format!(
            "the two-plane Hamiltonian needs the two-plane species, got {}",
            spec.species.name()
        )));
    }
    let dim = 1usize << (2 * spec.n_x);
    if dim > dense_cap {
        return Err(PcaError::Dimension(format!(
            "the two-plane Hamiltonian on {} sites acts on dimension {dim}, over the \
             cap {dense_cap}; use the signed-permutation transport for large rings",
            spec.n_x
        )));
    }
    let single = LatticeSpec::new(spec.n_x, Species::MwR)?.with_epsilon(spec.epsilon)?;
    let ladders = build_ladders(&single, LadderFamily::SignString)?;
    let modes = fourier_modes(&ladders)?;
    let momentum_single = momentum_operator(&modes);
    let id = OperatorMatrix::identity(1 << spec.n_x);
    let h_r = momentum_single.kron(&id);
    let h_l = id.kron(&momentum_single).scale(c(-1.0, 0.0));
    let h = h_r.add(&h_l)?;
    let momentum = momentum_single.kron(&id).add(&id.kron(&momentum_single))?;
    let e0_single = ground_energy(spec);
    Ok(DiracHamiltonian {
        spec: *spec,
        dense_cap,
        h,
        h_r,
        h_l,
        momentum,
        momentum_single,
        e0_single,
        vacuum_energy: 2.0 * e0_single,
    })
}

impl DiracHamiltonian {
    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    /// Dense one-step evolution `exp(-i epsilon H)`. The two plane factors
    /// commute exactly by construction, so the exponential splits into the
    /// tensor product of two one-plane exponentials.
    pub fn step_exponential(&self) -> Result<DMatrix<Complex64>> {
        let p_dense = self.momentum_single.to_dense(self.dense_cap)?;
        let eps = self.spec.epsilon;
        let right = hermitian_exp(&p_dense, c(0.0, -eps))?;
        let left = hermitian_exp(&p_dense, c(0.0, eps))?;
        Ok(right.kronecker(&left))
    }
}

/// Measured identities and anomalies of the composite family.
#[derive(Clone, Debug)]
pub struct CompositeReport {
    /// `max_j |[A(j), B]|` over all sites; exact zero.
    pub particle_hole_commutator: f64,
    /// `max_j |{raise(j), lower(j)} - 1|`; exact zero.
    pub completeness: f64,
    /// `max_j |A(j)^2|`; exact zero.
    pub nilpotency: f64,
    /// Largest anticommutator residue over pairs of sites at ring distance
    /// two or more (both `{A,A}` and `{A, raise}`); exact zero.
    pub distant_pair_anticommutator: f64,
    /// Smallest and largest `|{A(j), A(j+1)}|` over ring-neighbor pairs;
    /// the composite construction leaves these at one.
    pub neighbor_anomaly_min: f64,
    pub neighbor_anomaly_max: f64,
    /// `max_j |raise(j) lower(j) - N(j)|` against the diagonal pair-alignment
    /// formula `N(j) = n(j) n(j+1) + (1 - n(j)) (1 - n(j+1))`; exact zero.
    pub number_diagonal: f64,
    /// `max_j |[B, N(j)]|`; exact zero.
    pub number_particle_hole: f64,
    /// `|[S, N_tot]|` with the one-step transport; exact zero, so the total
    /// pair-alignment count is conserved by the dynamics.
    pub step_number_commutator: f64,
    /// `|[P, N_tot]|` with the momentum operator. Nonzero on a finite ring:
    /// the transport conserves total momentum only modulo the ring winding
    /// `2 pi n_x / L`, and the composite pairing mixes winding sectors.
    pub momentum_number_commutator: f64,
    /// Closed form of the winding obstruction,
    /// `2 pi / (n_x epsilon sin(pi / n_x))`.
    pub momentum_residual_prediction: f64,
}

/// Verifies the composite-family identities and measures its anomalies.
pub fn composite_checks(ladders: &LadderSet) -> Result<CompositeReport> {
    if ladders.family() != LadderFamily::Composite {
        return Err(PcaError::Input(format!(
            "composite checks apply to the composite family, got {}",
            ladders.family().name()
        )));
    }
    let spec = ladders.spec();
    let n = spec.n_x;
    let dim = ladders.dim();
    let mats = StructureMatrices::for_lattice(spec)?;
    let b = OperatorMatrix::from_signed_permutation(&mats.b);
    let reference = build_ladders(spec, LadderFamily::SignString)?;
    let modes = fourier_modes(&reference)?;
    let p_op = momentum_operator(&modes);
    let s_op = OperatorMatrix::from_signed_permutation(&ladders.basis().transport_permutation());
    let identity = OperatorMatrix::identity(dim);

    let mut particle_hole_commutator: f64 = 0.0;
    let mut completeness: f64 = 0.0;
    let mut nilpotency: f64 = 0.0;
    let mut number_diagonal: f64 = 0.0;
    let mut number_particle_hole: f64 = 0.0;
    let mut n_tot = OperatorMatrix::zeros(dim);
    for p in 0..n {
        let a = ladders.lower(p);
        particle_hole_commutator = particle_hole_commutator.max(b.commutator(a)?.max_abs());
        completeness = completeness.max(
            ladders
                .raise(p)
                .anticommutator(a)?
                .sub(&identity)?
                .max_abs(),
        );
        nilpotency = nilpotency.max(a.matmul(a)?.max_abs());
        let n_p = ladders.number(p);
        let aligned = ladders.basis().diagonal_from(|cfg| {
            let here = cfg.occ(0, p);
            let next = cfg.occ(0, (p + 1) % n);
            if here == next {
                1.0
            } else {
                0.0
            }
        });
        number_diagonal = number_diagonal.max(n_p.sub(&aligned)?.max_abs());
        number_particle_hole = number_particle_hole.max(b.commutator(&n_p)?.max_abs());
        n_tot = n_tot.add(&n_p)?;
    }

    let mut distant_pair_anticommutator: f64 = 0.0;
    let mut neighbor_anomaly_min = f64::INFINITY;
    let mut neighbor_anomaly_max: f64 = 0.0;
    for p in 0..n {
        for q in 0..n {
            if p == q {
                continue;
            }
            let dist = (p as i64 - q as i64)
                .rem_euclid(n as i64)
                .min((q as i64 - p as i64).rem_euclid(n as i64));
            let aa = ladders.lower(p).anticommutator(ladders.lower(q))?.max_abs();
            let aad = ladders
                .lower(p)
                .anticommutator(&ladders.raise(q))?
                .max_abs();
            if dist >= 2 {
                distant_pair_anticommutator = distant_pair_anticommutator.max(aa).max(aad);
            } else {
                neighbor_anomaly_min = neighbor_anomaly_min.min(aa.max(aad));
                neighbor_anomaly_max = neighbor_anomaly_max.max(aa.max(aad));
            }
        }
    }

    Ok(CompositeReport {
        particle_hole_commutator,
        completeness,
        nilpotency,
        distant_pair_anticommutator,
        neighbor_anomaly_min,
        neighbor_anomaly_max,
        number_diagonal,
        number_particle_hole,
        step_number_commutator: s_op.commutator(&n_tot)?.max_abs(),
        momentum_number_commutator: p_op.commutator(&n_tot)?.max_abs(),
        momentum_residual_prediction: 2.0 * PI / (n as f64 * spec.epsilon * (PI / n as f64).sin()),
    })
}

/// Measured transport covariance of the conjugated family.
#[derive(Clone, Copy, Debug)]
pub struct ConjugatedInvariance {
    /// `|W S W^dag - S|`. Zero would mean the conjugating rotation commutes
    /// with the transport; on a finite odd ring the alternating local
    /// pattern is not shift-covariant, so this stays at order one.
    pub step_residual: f64,
    /// `|exp(-i epsilon W P W^dag) - W S W^dag|`: the conjugated generator
    /// does reproduce the conjugated step. Zero up to rounding.
    pub generator_exp_residual: f64,
}

/// Measures how the conjugated family transforms under one transport step.
pub fn conjugated_step_invariance(spec: &LatticeSpec) -> Result<ConjugatedInvariance> {
    let ladders = build_ladders(spec, LadderFamily::Conjugated)?;
    let w = ladders.conjugator().expect("conjugated family stores W");
    let w_dag = w.adjoint();
    let s_op = OperatorMatrix::from_signed_permutation(&ladders.basis().transport_permutation());
    let conjugated_step = w.matmul(&s_op)?.matmul(&w_dag)?;
    let step_residual = conjugated_step.distance(&s_op)?;

    let reference = build_ladders(spec, LadderFamily::SignString)?;
    let modes = fourier_modes(&reference)?;
    let p_op = momentum_operator(&modes);
    let generator = w.matmul(&p_op)?.matmul(&w_dag)?;
    let exp_generator = hermitian_exp(
        &generator.to_dense(DEFAULT_DENSE_CAP)?,
        c(0.0, -spec.epsilon),
    )?;
    let generator_exp_residual = max_abs_diff(
        &exp_generator,
        &conjugated_step.to_dense(DEFAULT_DENSE_CAP)?,
    );
    Ok(ConjugatedInvariance {
        step_residual,
        generator_exp_residual,
    })
}
