//! Discrete conjugation (`C`), parity (`P`), and time-reversal (`T`)
//! transforms of the automaton, together with their products `PT`, `CT`,
//! and `CPT`.
//!
//! Every transform acts on three levels that stay consistent with each
//! other:
//!
//! - **configurations**: plain bit maps — complement the occupations,
//!   reflect the ring, or swap drift-partner planes;
//! - **wave functions**: amplitudes are pulled back along that same
//!   configuration map (a plain basis permutation, *no* fermionic
//!   reordering signs), composed with the particle-hole involution `B`
//!   for conjugating kinds, applied with or without elementwise complex
//!   conjugation;
//! - **operators**: conjugation by that permutation, with a transpose
//!   for time-reflecting kinds and elementwise conjugation for antilinear
//!   kinds.
//!
//! The wave-function action mirrors the configuration map exactly. This
//! is deliberately *not* the signed mode relabeling that governs the
//! dynamics (transport steps are genuinely signed permutations): the
//! symmetries act on configuration amplitudes, so a product state of
//! plane factors transforms plane-by-plane. The signed alternative
//! differs by occupation-dependent reordering signs and fails to leave
//! the doubled-species vacuum invariant under `P`, `CT`, and `CPT`.
//!
//! Time reflection relabels the trajectory as `t -> -t`, so a
//! time-reflecting transform has no action on a single forward wave
//! function: it exchanges the forward and adjoint members of a
//! [`WavePair`], and on step operators it compares against the transposed
//! step. Generators of time-reflecting kinds pick up an extra overall
//! minus sign relative to step operators (`d/dt -> -d/dt`).
//!
//! Conventions frozen here (all exact, covered by tests):
//!
//! - linear parts are built as `B . relabel` (relabel first, `B` second),
//!   which makes the compositions `P . T = PT`, `C . PT = CPT`, and
//!   `C . T = CT` exact equalities; every linear part is an involution,
//!   and the plane swap commutes with the doubled involution `B (x) B`;
//! - on one plane, `C` maps every lowering operator to the matching
//!   raising operator: `C a(j) C = a^dag(j)`;
//! - on two planes, the doubled involution `B (x) B` gives
//!   `C a_R(j) C = a_R^dag(j)` but `C a_L(j) C = -a_L^dag(j)`; no real
//!   involution can avoid the extra minus on one plane, because a product
//!   of all Majorana components squares to `-1` when the mode count is
//!   `2 n_x` with `n_x` odd;
//! - pure relabels dress ladder operators with the occupation parity
//!   `Pi = (-1)^N`: reflection gives `U a(p) U = Pi a(n-1-p)` on one
//!   plane, and the plane swap gives `U a_R(p) U = Pi_R a_L(p)`, while
//!   number operators map cleanly to the relabeled sites.

use crate::complex_structure::StructureMatrices;
use crate::error::{PcaError, Result};
use crate::hilbert::{BasisIndexing, WavePair};
use crate::lattice::{LatticeSpec, SpinConfig};
use crate::op::OperatorMatrix;
use crate::perm::SignedPermutation;
use num_complex::Complex64;

/// Transformed step operators within this distance of the original count
/// as invariant.
pub const INVARIANCE_TOL: f64 = 1e-10;

/// Transformed generators within this distance of a signed Hamiltonian
/// candidate are reported as that candidate.
pub const GENERATOR_TOL: f64 = 1e-10;

/// The six discrete transforms. `C` complements occupations, `P` reflects
/// the ring, `T` reverses the direction of time; the remaining kinds are
/// their products. The products `CP` and the identity are not listed:
/// composition returns `None` for them.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum TransformKind {
    C,
    P,
    T,
    Pt,
    Ct,
    Cpt,
}

impl TransformKind {
    pub const ALL: [TransformKind; 6] = [
        TransformKind::C,
        TransformKind::P,
        TransformKind::T,
        TransformKind::Pt,
        TransformKind::Ct,
        TransformKind::Cpt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TransformKind::C => "C",
            TransformKind::P => "P",
            TransformKind::T => "T",
            TransformKind::Pt => "PT",
            TransformKind::Ct => "CT",
            TransformKind::Cpt => "CPT",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "C" => Ok(TransformKind::C),
            "P" => Ok(TransformKind::P),
            "T" => Ok(TransformKind::T),
            "PT" | "TP" => Ok(TransformKind::Pt),
            "CT" | "TC" => Ok(TransformKind::Ct),
            "CPT" | "TCP" | "PCT" => Ok(TransformKind::Cpt),
            other => Err(PcaError::Input(format!(
                "unknown transform {other:?} (expected C, P, T, PT, CT, or CPT)"
            ))),
        }
    }

    /// Whether the transform is antilinear (complements occupations and
    /// conjugates amplitudes): `C`, `CT`, `CPT`.
    pub fn conjugates(self) -> bool {
        matches!(
            self,
            TransformKind::C | TransformKind::Ct | TransformKind::Cpt
        )
    }

    /// Whether the transform reflects the ring `j -> -j`: `P`, `PT`, `CPT`.
    pub fn reflects_sites(self) -> bool {
        matches!(
            self,
            TransformKind::P | TransformKind::Pt | TransformKind::Cpt
        )
    }

    /// Whether the transform reverses time: `T`, `PT`, `CT`, `CPT`.
    pub fn reflects_time(self) -> bool {
        matches!(
            self,
            TransformKind::T | TransformKind::Pt | TransformKind::Ct | TransformKind::Cpt
        )
    }

    /// Whether the transform exchanges drift-partner planes: `P`, `T`,
    /// `CT`. Reflecting the ring and reversing time each reverse the drift,
    /// so the net swap is their parity; it only has an effect on
    /// multi-plane species.
    pub fn swaps_species(self) -> bool {
        self.reflects_sites() ^ self.reflects_time()
    }

    fn flags(self) -> (bool, bool, bool) {
        (
            self.conjugates(),
            self.reflects_sites(),
            self.reflects_time(),
        )
    }

    fn from_flags(flags: (bool, bool, bool)) -> Option<Self> {
        match flags {
            (true, false, false) => Some(TransformKind::C),
            (false, true, false) => Some(TransformKind::P),
            (false, false, true) => Some(TransformKind::T),
            (false, true, true) => Some(TransformKind::Pt),
            (true, false, true) => Some(TransformKind::Ct),
            (true, true, true) => Some(TransformKind::Cpt),
            // The identity and CP fall outside the six listed kinds.
            (false, false, false) | (true, true, false) => None,
        }
    }

    /// Group product of two kinds (each flag composes mod 2). Returns
    /// `None` when the product is the identity or `CP`, which are not
    /// among the six listed kinds.
    pub fn compose(self, rhs: TransformKind) -> Option<TransformKind> {
        let a = self.flags();
        let b = rhs.flags();
        TransformKind::from_flags((a.0 ^ b.0, a.1 ^ b.1, a.2 ^ b.2))
    }
}

impl std::fmt::Display for TransformKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One discrete transform realized on a concrete lattice: a plain
/// configuration map, its amplitude pullback composed with `B` for
/// conjugating kinds (the linear part), and conjugation plus
/// time-reflection flags.
#[derive(Clone, Debug)]
pub struct DiscreteTransform {
    spec: LatticeSpec,
    kind: TransformKind,
    linear: SignedPermutation,
}

impl DiscreteTransform {
    /// Builds the transform for the given lattice. Conjugating kinds need
    /// the particle-hole involution, which exists only for
    /// `n_x = 1 mod 4`.
    pub fn new(spec: &LatticeSpec, kind: TransformKind) -> Result<Self> {
        let basis = BasisIndexing::new(spec)?;
        let n = spec.n_x;
        let planes = spec.species.plane_count();
        let half_planes = planes / 2;
        let swaps = kind.swaps_species() && planes > 1;
        let reflects = kind.reflects_sites();

        let modes = basis.modes();
        let mode_map = move |m: usize| {
            let g = m / n;
            let p = m % n;
            let g2 = if swaps { (g + half_planes) % planes } else { g };
            let p2 = if reflects { n - 1 - p } else { p };
            g2 * n + p2
        };
        // Amplitude pullback along the configuration map: permute the set
        // bits, never a fermionic reordering sign.
        let relabel = SignedPermutation::from_fn(basis.dim(), |tau| {
            let mut out = 0usize;
            for m in 0..modes {
                if tau & (1 << (modes - 1 - m)) != 0 {
                    out |= 1 << (modes - 1 - mode_map(m));
                }
            }
            (out, 1)
        })?;

        let linear = if kind.conjugates() {
            let b_single = StructureMatrices::new(n)?.b;
            let plane_mask = (1usize << n) - 1;
            let full = (1usize << (n * planes)) - 1;
            let b_part = SignedPermutation::from_fn(basis.dim(), |tau| {
                let mut sign = 1i8;
                for g in 0..planes {
                    let bits = (tau >> (n * (planes - 1 - g))) & plane_mask;
                    sign *= b_single.sign(bits);
                }
                (full ^ tau, sign)
            })?;
            b_part.compose(&relabel)?
        } else {
            relabel
        };

        Ok(DiscreteTransform {
            spec: *spec,
            kind,
            linear,
        })
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn kind(&self) -> TransformKind {
        self.kind
    }

    /// Hilbert-space dimension the transform acts on.
    pub fn dim(&self) -> usize {
        self.linear.dim()
    }

    /// The signed basis permutation `U`. Antilinear kinds act as
    /// `phi -> U conj(phi)`; linear kinds as `phi -> U phi`.
    pub fn linear(&self) -> &SignedPermutation {
        &self.linear
    }

    /// Whether the action on amplitudes is antilinear.
    pub fn antilinear(&self) -> bool {
        self.kind.conjugates()
    }

    pub fn reflects_time(&self) -> bool {
        self.kind.reflects_time()
    }

    /// The linear part as an explicit operator matrix.
    pub fn to_operator(&self) -> OperatorMatrix {
        OperatorMatrix::from_signed_permutation(&self.linear)
    }

    /// Image of a single occupation configuration: complement for
    /// conjugating kinds, ring reflection for site-reflecting kinds, and
    /// the drift-partner plane swap for species-swapping kinds. All three
    /// maps commute, and every kind squares to the identity on
    /// configurations.
    pub fn apply_config(&self, cfg: &SpinConfig) -> SpinConfig {
        let mut out = cfg.clone();
        if self.kind.conjugates() {
            out.complement();
        }
        if self.kind.reflects_sites() {
            out.reflect();
        }
        if self.kind.swaps_species() {
            let planes = out.plane_count();
            for g in 0..planes / 2 {
                out.swap_planes(g, g + planes / 2);
            }
        }
        out
    }

    /// Image of a complex wave function on one time slice.
    ///
    /// Time-reflecting linear kinds (`T`, `PT`) have no action here: they
    /// relate the wave at `t` to the *adjoint* wave at `-t`, so they act
    /// on a [`WavePair`] (see [`DiscreteTransform::apply_pair`]) and this
    /// call returns an input error. The antilinear kinds supply the
    /// missing conjugation themselves and are fine on a single wave.
    pub fn apply_wave(&self, phi: &[Complex64]) -> Result<Vec<Complex64>> {
        if phi.len() != self.dim() {
            return Err(PcaError::Dimension(format!(
                "wave has {} amplitudes, transform acts on {}",
                phi.len(),
                self.dim()
            )));
        }
        if self.kind.reflects_time() && !self.kind.conjugates() {
            return Err(PcaError::Input(format!(
                "{} reverses time and needs the forward/adjoint pair picture; \
                 transform a WavePair instead of a single forward wave",
                self.kind
            )));
        }
        if self.antilinear() {
            let conj: Vec<Complex64> = phi.iter().map(|z| z.conj()).collect();
            Ok(self.linear.apply_complex(&conj))
        } else {
            Ok(self.linear.apply_complex(phi))
        }
    }

    /// Image of a forward/adjoint pair of real waves. Time-reflecting
    /// kinds exchange the two members (the forward wave of the reversed
    /// motion is the adjoint of the original); the signed permutation then
    /// acts on both.
    pub fn apply_pair(&self, pair: &WavePair) -> Result<WavePair> {
        if pair.dim() != self.dim() {
            return Err(PcaError::Dimension(format!(
                "pair has {} amplitudes, transform acts on {}",
                pair.dim(),
                self.dim()
            )));
        }
        let (fwd, adj) = if self.kind.reflects_time() {
            (&pair.adj, &pair.fwd)
        } else {
            (&pair.fwd, &pair.adj)
        };
        Ok(WavePair {
            fwd: self.linear.apply_real(fwd),
            adj: self.linear.apply_real(adj),
        })
    }

    /// Image of an operator: `U f(A) U^-1` with `f` the transpose for
    /// time-reflecting kinds, the elementwise conjugate for antilinear
    /// kinds, and the adjoint when both apply. Step operators transform
    /// this way; for generators use
    /// [`DiscreteTransform::apply_generator`].
    pub fn apply_operator(&self, a: &OperatorMatrix) -> Result<OperatorMatrix> {
        if a.dim() != self.dim() {
            return Err(PcaError::Dimension(format!(
                "operator dimension {} does not match transform dimension {}",
                a.dim(),
                self.dim()
            )));
        }
        let mapped = match (self.kind.reflects_time(), self.kind.conjugates()) {
            (false, false) => a.clone(),
            (true, false) => a.transpose(),
            (false, true) => a.conj(),
            (true, true) => a.adjoint(),
        };
        let u = OperatorMatrix::from_signed_permutation(&self.linear);
        let u_inv = OperatorMatrix::from_signed_permutation(&self.linear.inverse());
        u.matmul(&mapped)?.matmul(&u_inv)
    }

    /// Image of a generator (Hamiltonian): like
    /// [`DiscreteTransform::apply_operator`], with an extra overall minus
    /// sign for time-reflecting kinds, because reversing time flips the
    /// derivative the generator multiplies.
    pub fn apply_generator(&self, h: &OperatorMatrix) -> Result<OperatorMatrix> {
        let image = self.apply_operator(h)?;
        if self.kind.reflects_time() {
            Ok(image.scale(Complex64::new(-1.0, 0.0)))
        } else {
            Ok(image)
        }
    }
}

/// Verdict of one invariance check of a step operator.
#[derive(Clone, Debug)]
pub struct InvarianceCheck {
    pub kind: TransformKind,
    /// Whether the transformed step equals the original within
    /// [`INVARIANCE_TOL`].
    pub invariant: bool,
    /// Largest entry of the difference between the transformed and the
    /// original step.
    pub witness: f64,
}

/// Compares a step operator against its transform. Time-reflecting kinds
/// effectively compare the step against its transpose (the step of the
/// reversed motion), conjugating kinds against its conjugate.
pub fn check_invariance(step: &OperatorMatrix, tr: &DiscreteTransform) -> Result<InvarianceCheck> {
    let transformed = tr.apply_operator(step)?;
    let witness = transformed.distance(step)?;
    Ok(InvarianceCheck {
        kind: tr.kind(),
        invariant: witness <= INVARIANCE_TOL,
        witness,
    })
}

/// Runs all six invariance checks against the free transport step of the
/// lattice. Needs `n_x = 1 mod 4` because the conjugating kinds require
/// the particle-hole involution.
pub fn invariance_table(spec: &LatticeSpec) -> Result<Vec<InvarianceCheck>> {
    let basis = BasisIndexing::new(spec)?;
    let step = OperatorMatrix::from_signed_permutation(&basis.transport_permutation());
    TransformKind::ALL
        .iter()
        .map(|&kind| {
            let tr = DiscreteTransform::new(spec, kind)?;
            check_invariance(&step, &tr)
        })
        .collect()
}

/// One row of a generator transform report: which signed Hamiltonian the
/// transformed input matches.
#[derive(Clone, Debug)]
pub struct GeneratorImage {
    pub kind: TransformKind,
    /// Which generator was transformed: `"H_R"`, `"H_L"`, or `"H_D"`.
    pub input: &'static str,
    /// Matched candidate (`"H_R"`, `"-H_R"`, `"H_L"`, `"-H_L"`, `"H_D"`,
    /// `"-H_D"`), or `"?"` if nothing matches within [`GENERATOR_TOL`].
    pub image: &'static str,
    /// Distance to the matched candidate (to the nearest one for `"?"`).
    pub residual: f64,
}

fn classify(
    image: &OperatorMatrix,
    candidates: &[(&'static str, &OperatorMatrix)],
) -> Result<(&'static str, f64)> {
    let mut best: (&'static str, f64) = ("?", f64::INFINITY);
    for (label, cand) in candidates {
        let d = image.distance(cand)?;
        if d < best.1 {
            best = (label, d);
        }
    }
    if best.1 <= GENERATOR_TOL {
        Ok(best)
    } else {
        Ok(("?", best.1))
    }
}

/// Transforms the chiral generators and reports which signed generator
/// each image equals.
///
/// `h_r` and `h_l` are the right- and left-moving one-plane Hamiltonians
/// on the same one-plane space. On a one-plane transform the report has a
/// row for each input; on a two-plane transform the inputs are combined
/// into `H_D = H_R (x) 1 + 1 (x) H_L` and the single row classifies its
/// image against `+-H_D`.
///
/// On one plane the two inputs are numerically proportional
/// (`H_L = -H_R`), so every candidate label is aliased. Ties are resolved
/// by which model the transform maps the automaton onto:
/// species-swapping kinds (`P`, `T`, `CT`) report the opposite-chirality
/// label, the others the same-chirality label.
pub fn hamiltonian_transform_report(
    h_r: &OperatorMatrix,
    h_l: &OperatorMatrix,
    tr: &DiscreteTransform,
) -> Result<Vec<GeneratorImage>> {
    if h_r.dim() != h_l.dim() {
        return Err(PcaError::Dimension(format!(
            "generator dimensions differ: {} vs {}",
            h_r.dim(),
            h_l.dim()
        )));
    }
    let planes = tr.spec().species.plane_count();
    match planes {
        1 => {
            let minus_r = h_r.scale(Complex64::new(-1.0, 0.0));
            let minus_l = h_l.scale(Complex64::new(-1.0, 0.0));
            let right_first = [
                ("H_R", h_r),
                ("-H_R", &minus_r),
                ("H_L", h_l),
                ("-H_L", &minus_l),
            ];
            let left_first = [
                ("H_L", h_l),
                ("-H_L", &minus_l),
                ("H_R", h_r),
                ("-H_R", &minus_r),
            ];
            let swaps = tr.kind().swaps_species();
            let mut rows = Vec::with_capacity(2);
            for (input, h, own_is_right) in [("H_R", h_r, true), ("H_L", h_l, false)] {
                let image = tr.apply_generator(h)?;
                let prefer_right = own_is_right ^ swaps;
                let candidates = if prefer_right {
                    &right_first
                } else {
                    &left_first
                };
                let (label, residual) = classify(&image, candidates)?;
                rows.push(GeneratorImage {
                    kind: tr.kind(),
                    input,
                    image: label,
                    residual,
                });
            }
            Ok(rows)
        }
        2 => {
            let eye = OperatorMatrix::identity(h_r.dim());
            let h_d = h_r.kron(&eye).add(&eye.kron(h_l))?;
            if h_d.dim() != tr.dim() {
                return Err(PcaError::Dimension(format!(
                    "doubled generator dimension {} does not match transform dimension {}",
                    h_d.dim(),
                    tr.dim()
                )));
            }
            let minus_d = h_d.scale(Complex64::new(-1.0, 0.0));
            let candidates = [("H_D", &h_d), ("-H_D", &minus_d)];
            let image = tr.apply_generator(&h_d)?;
            let (label, residual) = classify(&image, &candidates)?;
            Ok(vec![GeneratorImage {
                kind: tr.kind(),
                input: "H_D",
                image: label,
                residual,
            }])
        }
        other => Err(PcaError::Lattice(format!(
            "generator report supports one- and two-plane species, got {other} planes"
        ))),
    }
}

/// Splits a wave into conjugation eigenstates
/// `phi_pm = (phi -+- C phi) / 2` with `C phi_pm = +- phi_pm`. The `+`
/// part satisfies `conj(phi_+) = B phi_+`, the `-` part
/// `conj(phi_-) = -B phi_-`, and the two parts sum back to `phi`.
pub fn c_eigenstate_split(
    tr: &DiscreteTransform,
    phi: &[Complex64],
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    if tr.kind() != TransformKind::C {
        return Err(PcaError::Input(format!(
            "the conjugation eigenstate split needs the plain C kind, got {}",
            tr.kind()
        )));
    }
    let c_phi = tr.apply_wave(phi)?;
    let plus: Vec<Complex64> = phi.iter().zip(&c_phi).map(|(a, b)| (a + b) * 0.5).collect();
    let minus: Vec<Complex64> = phi.iter().zip(&c_phi).map(|(a, b)| (a - b) * 0.5).collect();
    Ok((plus, minus))
}
