//! Interpolation kernels, continuous-label field operators, the
//! Heisenberg-picture identity, two-point functions, and the time-ordered
//! propagator.
//!
//! The interpolation kernel `delta(x) = sin(pi x / eps) / (L sin(pi x / L))`
//! is the unique band-limited function that is 1/eps at the origin and
//! zero on every other lattice site; expanding lattice operators against
//! it defines annihilation and creation fields at *continuous* positions.
//! Their Heisenberg evolution is closed: the field at time `t` equals
//! the field at time zero with its position argument drifted, so the
//! whole construction stays exact on the finite ring — no continuum
//! limit is taken, and the only trace of discreteness is that the equal
//! species anticommutator is the kernel rather than a Dirac delta.
//!
//! The positive-half kernel `delta_plus` (the sum over positive momenta
//! only) is the two-point function of the particle vacuum. It is carried
//! in two modes: the exact finite-ring geometric sum, and its infinite
//! volume limit, which evaluates on lattice separations to zero at even
//! spacing and `-1/(i pi eps n)` at odd spacing `n`, and whose smooth
//! probe averages reproduce the standard massless two-point function
//! `-1/(2 pi i (y + i eps/pi))`.
//!
//! The finite-ring kernel at coincidence is `(n_x - 1) / (2 L)`
//! (one-half of each positive-momentum phase), which equals
//! `1/(2 eps) - 1/(2 L)`; the infinite-volume kernel takes `1/(2 eps)`.
//! Both values are frozen in tests together with the bookkeeping of the
//! `1/(2 L)` vacuum constant in the two-point functions.

use crate::error::{PcaError, Result};
use crate::fermion::{momentum_operator, Chirality, LadderSet, MomentumModes};
use crate::lattice::{LatticeSpec, Species};
use crate::op::{hermitian_exp, max_abs_diff, OperatorMatrix};
use crate::vacuum::VacuumState;
use num_complex::Complex64;
use std::f64::consts::PI;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn phase(angle: f64) -> Complex64 {
    c(angle.cos(), angle.sin())
}

/// Eight-point Gauss--Legendre abscissae (positive half) and weights.
const GL8_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL8_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Composite eight-point Gauss--Legendre quadrature of `f` on `[a, b]`
/// split into `subintervals` equal pieces (so `8 * subintervals` nodes).
pub fn gauss_quadrature(f: impl Fn(f64) -> f64, a: f64, b: f64, subintervals: usize) -> f64 {
    let n = subintervals.max(1);
    let width = (b - a) / n as f64;
    let mut total = 0.0;
    for i in 0..n {
        let mid = a + (i as f64 + 0.5) * width;
        let hw = 0.5 * width;
        for (t, w) in GL8_NODES.iter().zip(GL8_WEIGHTS) {
            total += w * hw * (f(mid + hw * t) + f(mid - hw * t));
        }
    }
    total
}

/// Complex-valued variant of [`gauss_quadrature`].
pub fn gauss_quadrature_complex(
    f: impl Fn(f64) -> Complex64,
    a: f64,
    b: f64,
    subintervals: usize,
) -> Complex64 {
    let n = subintervals.max(1);
    let width = (b - a) / n as f64;
    let mut total = c(0.0, 0.0);
    for i in 0..n {
        let mid = a + (i as f64 + 0.5) * width;
        let hw = 0.5 * width;
        for (t, w) in GL8_NODES.iter().zip(GL8_WEIGHTS) {
            total += (f(mid + hw * t) + f(mid - hw * t)).scale(w * hw);
        }
    }
    total
}

/// Which kernel to evaluate.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum KernelKind {
    /// The full interpolation kernel (real and even).
    Delta,
    /// The positive-momentum half.
    DeltaPlus,
    /// The negative-momentum half (conjugate of `DeltaPlus`).
    DeltaMinus,
}

/// Finite ring or infinite-volume limit.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum KernelMode {
    FiniteL,
    InfiniteL,
}

impl KernelMode {
    pub fn name(self) -> &'static str {
        match self {
            KernelMode::FiniteL => "finite",
            KernelMode::InfiniteL => "infinite",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "finite" | "finite-l" | "ring" => Ok(KernelMode::FiniteL),
            "infinite" | "infinite-l" | "open" => Ok(KernelMode::InfiniteL),
            other => Err(PcaError::Input(format!(
                "unknown kernel mode {other:?} (expected finite or infinite)"
            ))),
        }
    }
}

/// Band-limited interpolation kernel of a ring with `n_x` sites spaced
/// `epsilon` apart.
#[derive(Clone, Copy, Debug)]
pub struct InterpolationKernel {
    n_x: usize,
    epsilon: f64,
}

impl InterpolationKernel {
    pub fn new(n_x: usize, epsilon: f64) -> Result<Self> {
        if n_x < 3 || n_x.is_multiple_of(2) {
            return Err(PcaError::Lattice(format!(
                "the interpolation kernel needs an odd ring of at least 3 sites, got {n_x}"
            )));
        }
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(PcaError::Lattice(format!(
                "lattice spacing must be positive and finite, got {epsilon}"
            )));
        }
        Ok(InterpolationKernel { n_x, epsilon })
    }

    pub fn for_spec(spec: &LatticeSpec) -> Self {
        InterpolationKernel {
            n_x: spec.n_x,
            epsilon: spec.epsilon,
        }
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Ring circumference `L = n_x * epsilon`.
    pub fn length(&self) -> f64 {
        self.n_x as f64 * self.epsilon
    }

    fn half(&self) -> i64 {
        (self.n_x as i64 - 1) / 2
    }

    /// Reduces `x` to the fundamental domain `[-L/2, L/2]`.
    fn wrap(&self, x: f64) -> f64 {
        let l = self.length();
        x - l * (x / l).round()
    }

    /// The kernel itself: 1/eps at the origin, zero on the other lattice
    /// sites, real, even, and L-periodic.
    pub fn delta(&self, x: f64) -> f64 {
        let l = self.length();
        let y = self.wrap(x);
        if y.abs() < 1e-14 * l {
            return 1.0 / self.epsilon;
        }
        (PI * y / self.epsilon).sin() / (l * (PI * y / l).sin())
    }

    /// Derivative of the kernel, evaluated through its momentum sum
    /// (exact; no finite differencing). Zero at the origin; on other
    /// lattice sites `j` it equals
    /// `pi (-1)^j / (eps^2 n_x sin(pi j / n_x))`.
    pub fn delta_prime(&self, x: f64) -> f64 {
        let l = self.length();
        let mut total = 0.0;
        for k in 1..=self.half() {
            let w = 2.0 * PI * k as f64 / l;
            total -= 2.0 * w * (w * x).sin();
        }
        total / l
    }

    /// The positive-momentum half of the kernel on the finite ring,
    /// through the closed geometric-sum form. At separations that are
    /// multiples of `L` it takes the removable value `(n_x - 1)/(2L)`.
    pub fn delta_plus(&self, y: f64) -> Complex64 {
        let l = self.length();
        let y = self.wrap(y);
        if y.abs() < 1e-12 * l {
            return c((self.n_x as f64 - 1.0) / (2.0 * l), 0.0);
        }
        let denom = phase(-2.0 * PI * y / l) - 1.0;
        let numer = c(1.0, 0.0) - phase(PI * y * (1.0 / self.epsilon - 1.0 / l));
        numer / denom.scale(l)
    }

    /// Infinite-volume limit of `delta_plus`: the half-line momentum
    /// integral cut off at `pi/eps`, with the removable value
    /// `1/(2 eps)` at coincidence.
    pub fn delta_plus_infinite(&self, y: f64) -> Complex64 {
        if y.abs() < 1e-14 * self.epsilon {
            return c(1.0 / (2.0 * self.epsilon), 0.0);
        }
        (phase(PI * y / self.epsilon) - 1.0) / c(0.0, 2.0 * PI * y)
    }

    /// Unified evaluator over kind and mode. In the infinite-volume mode
    /// the full kernel becomes `sin(pi x / eps) / (pi x)`.
    pub fn eval(&self, kind: KernelKind, mode: KernelMode, y: f64) -> Complex64 {
        match (kind, mode) {
            (KernelKind::Delta, KernelMode::FiniteL) => c(self.delta(y), 0.0),
            (KernelKind::Delta, KernelMode::InfiniteL) => {
                if y.abs() < 1e-14 * self.epsilon {
                    c(1.0 / self.epsilon, 0.0)
                } else {
                    c((PI * y / self.epsilon).sin() / (PI * y), 0.0)
                }
            }
            (KernelKind::DeltaPlus, KernelMode::FiniteL) => self.delta_plus(y),
            (KernelKind::DeltaPlus, KernelMode::InfiniteL) => self.delta_plus_infinite(y),
            (KernelKind::DeltaMinus, KernelMode::FiniteL) => self.delta_plus(y).conj(),
            (KernelKind::DeltaMinus, KernelMode::InfiniteL) => self.delta_plus_infinite(y).conj(),
        }
    }

    /// Closed form of the kernel-derivative overlap
    /// `int delta(x - eps j') d/dx delta(x - eps j) dx` as a function of
    /// the separation `j' - j`; zero at zero separation.
    pub fn derivative_overlap(&self, separation: i64) -> f64 {
        let n = self.n_x as i64;
        if separation.rem_euclid(n) == 0 {
            return 0.0;
        }
        // Both the alternating sign and the sine must see the same
        // separation: on an odd ring they flip together under shifts by
        // n, which is what makes the overlap n-periodic.
        let sign = if separation.rem_euclid(2) == 0 {
            1.0
        } else {
            -1.0
        };
        PI * sign
            / (self.epsilon
                * self.epsilon
                * self.n_x as f64
                * (PI * separation as f64 / n as f64).sin())
    }

    /// The same overlap through composite Gauss quadrature over one
    /// period (64 nodes per site).
    pub fn derivative_overlap_quadrature(&self, separation: i64) -> f64 {
        let l = self.length();
        let shift = self.epsilon * separation as f64;
        gauss_quadrature(
            |x| self.delta(x - shift) * self.delta_prime(x),
            -l / 2.0,
            l / 2.0,
            8 * self.n_x,
        )
    }

    /// Quadrature of the plain kernel-kernel overlap over one period;
    /// `1/eps` at zero separation and zero otherwise.
    pub fn kernel_overlap_quadrature(&self, separation: i64) -> f64 {
        let l = self.length();
        let shift = self.epsilon * separation as f64;
        gauss_quadrature(
            |x| self.delta(x - shift) * self.delta(x),
            -l / 2.0,
            l / 2.0,
            8 * self.n_x,
        )
    }
}

/// Annihilation (`Plus`) or creation (`Minus`) field.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum FieldSign {
    Plus,
    Minus,
}

/// The annihilation and creation fields of one plane at a continuous
/// spacetime point. The creation field is exactly the adjoint of the
/// annihilation field.
#[derive(Clone, Debug)]
pub struct FieldOperator {
    species: Species,
    plane: usize,
    t: f64,
    x: f64,
    plus: OperatorMatrix,
    minus: OperatorMatrix,
}

impl FieldOperator {
    /// Builds both fields at `(t, x)` from the Fourier ladders of a
    /// plane. The plane's drift direction fixes which light cone the
    /// fields ride: the mode coefficient is
    /// `exp(2 pi i k (x - s t) / L) / sqrt(L)` with `s` the drift sign.
    pub fn new(modes: &MomentumModes, t: f64, x: f64) -> Self {
        let spec = *modes.spec();
        let s = spec.species.plane_shift(modes.plane()) as f64;
        let l = spec.length();
        let mut plus = OperatorMatrix::zeros(modes.dim());
        let mut minus = OperatorMatrix::zeros(modes.dim());
        for k in spec.momenta() {
            let u = phase(2.0 * PI * k as f64 * (x - s * t) / l).scale(1.0 / l.sqrt());
            plus = plus
                .add(&modes.lower(k).scale(u))
                .expect("same-dimension sum");
            minus = minus
                .add(&modes.raise(k).scale(u.conj()))
                .expect("same-dimension sum");
        }
        FieldOperator {
            species: spec.species,
            plane: modes.plane(),
            t,
            x,
            plus,
            minus,
        }
    }

    pub fn species(&self) -> Species {
        self.species
    }

    pub fn plane(&self) -> usize {
        self.plane
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn position(&self) -> f64 {
        self.x
    }

    /// The annihilation field.
    pub fn plus(&self) -> &OperatorMatrix {
        &self.plus
    }

    /// The creation field (adjoint of `plus`).
    pub fn minus(&self) -> &OperatorMatrix {
        &self.minus
    }

    pub fn get(&self, sign: FieldSign) -> &OperatorMatrix {
        match sign {
            FieldSign::Plus => &self.plus,
            FieldSign::Minus => &self.minus,
        }
    }
}

/// One field matrix at a continuous spacetime point.
pub fn field_op(modes: &MomentumModes, sign: FieldSign, t: f64, x: f64) -> OperatorMatrix {
    let built = FieldOperator::new(modes, t, x);
    match sign {
        FieldSign::Plus => built.plus,
        FieldSign::Minus => built.minus,
    }
}

/// Maximal entry of `Psi(t,x) - exp(iHt) Psi(0,x) exp(-iHt)` for the
/// plane's annihilation field, with the plane Hamiltonian
/// `s * momentum`. Exactly zero at `t = 0`; below 1e-10 for lattice and
/// non-lattice times alike (the dense exponential interpolates the
/// step).
pub fn heisenberg_check(modes: &MomentumModes, t: f64, x: f64, dense_cap: usize) -> Result<f64> {
    let spec = modes.spec();
    let s = spec.species.plane_shift(modes.plane()) as f64;
    let at_t = field_op(modes, FieldSign::Plus, t, x).to_dense(dense_cap)?;
    let at_zero = field_op(modes, FieldSign::Plus, 0.0, x).to_dense(dense_cap)?;
    if t == 0.0 {
        return Ok(max_abs_diff(&at_t, &at_zero));
    }
    let h = momentum_operator(modes)
        .scale(c(s, 0.0))
        .to_dense(dense_cap)?;
    let forward = hermitian_exp(&h, c(0.0, -t))?;
    let backward = hermitian_exp(&h, c(0.0, t))?;
    let conjugated = &backward * &(&at_zero * &forward);
    Ok(max_abs_diff(&at_t, &conjugated))
}

fn require_particle_vacuum(vac: &VacuumState) -> Result<()> {
    use crate::vacuum::VacuumKind;
    match vac.kind() {
        VacuumKind::ParticleMw | VacuumKind::ParticleDirac => Ok(()),
        other => Err(PcaError::Input(format!(
            "two-point functions need a particle vacuum, got the {other} state"
        ))),
    }
}

fn chirality_plane(species: Species, chirality: Chirality) -> Result<usize> {
    match (species, chirality) {
        (Species::MwR, Chirality::Right) | (Species::MwL, Chirality::Left) => Ok(0),
        (Species::Dirac, Chirality::Right) => Ok(0),
        (Species::Dirac, Chirality::Left) => Ok(1),
        (species, chir) => Err(PcaError::Input(format!(
            "species {} has no {} plane",
            species.name(),
            chir.label()
        ))),
    }
}

/// Two-point functions of the particle vacuum against the origin,
/// evaluated analytically: the ordered function is the positive-half
/// kernel on the plane's light cone (`x - t` for right-movers, `-x - t`
/// for left-movers), and the reversed-order function is its conjugate.
/// The `1/(2L)` vacuum constant is already subtracted.
pub fn whiteman(
    vac: &VacuumState,
    chirality: Chirality,
    mode: KernelMode,
    t: f64,
    x: f64,
) -> Result<(Complex64, Complex64)> {
    require_particle_vacuum(vac)?;
    chirality_plane(vac.spec().species, chirality)?;
    let kernel = InterpolationKernel::for_spec(vac.spec());
    let w_plus = kernel.eval(KernelKind::DeltaPlus, mode, chirality.sign() * x - t);
    Ok((w_plus, w_plus.conj()))
}

/// The same two-point functions measured in the Hilbert space:
/// `<0| Psi(t,x) Psi^dag(0,0) |0> - 1/(2L)` and the reversed order,
/// using the plane's field matrices. Agrees with the analytic form to
/// rounding.
pub fn whiteman_matrix_element(
    vac: &VacuumState,
    modes: &MomentumModes,
    chirality: Chirality,
    t: f64,
    x: f64,
) -> Result<(Complex64, Complex64)> {
    require_particle_vacuum(vac)?;
    let plane = chirality_plane(vac.spec().species, chirality)?;
    if modes.plane() != plane {
        return Err(PcaError::Input(format!(
            "the {} two-point function lives on plane {plane}, but the modes \
             belong to plane {}",
            chirality.label(),
            modes.plane()
        )));
    }
    if modes.dim() != vac.dim() {
        return Err(PcaError::Dimension(format!(
            "momentum modes act on dimension {}, vacuum has {}",
            modes.dim(),
            vac.dim()
        )));
    }
    let l = vac.spec().length();
    let probe = FieldOperator::new(modes, t, x);
    let origin = FieldOperator::new(modes, 0.0, 0.0);
    let v = vac.state();

    let dot = |a: &OperatorMatrix, b: &OperatorMatrix| -> Complex64 {
        let w = a.apply(&b.apply(v));
        v.iter().zip(w).map(|(x, y)| x.conj() * y).sum()
    };
    let w_plus = dot(probe.plus(), origin.minus()) - c(0.5 / l, 0.0);
    let w_minus = dot(origin.plus(), probe.minus()) - c(0.5 / l, 0.0);
    Ok((w_plus, w_minus))
}

/// Time-ordered two-point function: the ordered function of the
/// separation for `t > t'`, minus the reversed-order function for
/// `t < t'`. Equal times leave the order undefined and are an error.
pub fn feynman(
    vac: &VacuumState,
    chirality: Chirality,
    mode: KernelMode,
    t: f64,
    x: f64,
    t2: f64,
    x2: f64,
) -> Result<Complex64> {
    if t == t2 {
        return Err(PcaError::Input(
            "the time-ordered function is undefined at equal times; \
             separate the two points in time"
                .into(),
        ));
    }
    let (w_plus, w_minus) = whiteman(vac, chirality, mode, t - t2, x - x2)?;
    Ok(if t > t2 { w_plus } else { -w_minus })
}

/// Rebuilds the plane Hamiltonian from the continuous fields: the
/// quadrature of `Psi^dag (-i s d/dx) Psi` over one period, assembled
/// as a site-pair sum with the measured kernel-derivative overlaps.
/// Matches the momentum-space Hamiltonian to the quadrature accuracy.
pub fn reconstructed_hamiltonian(
    ladders: &LadderSet,
    chirality: Chirality,
) -> Result<OperatorMatrix> {
    let spec = *ladders.spec();
    if spec.species.plane_count() != 1 {
        return Err(PcaError::Input(format!(
            "the field-bilinear reconstruction covers one plane, got species {}",
            spec.species.name()
        )));
    }
    if !ladders.is_canonical() {
        return Err(PcaError::Input(
            "the field-bilinear reconstruction needs a canonical ladder family".into(),
        ));
    }
    let kernel = InterpolationKernel::for_spec(&spec);
    let n = spec.n_x;
    let overlaps: Vec<f64> = (0..n as i64)
        .map(|d| kernel.derivative_overlap_quadrature(d))
        .collect();
    let s = chirality.sign();
    let mut h = OperatorMatrix::zeros(ladders.dim());
    for jp in spec.sites() {
        let raise = ladders.lower_site(0, jp).adjoint();
        for j in spec.sites() {
            if jp == j {
                continue;
            }
            let d = (jp - j).rem_euclid(n as i64) as usize;
            let coeff = c(0.0, -s * spec.epsilon * overlaps[d]);
            let term = raise.matmul(ladders.lower_site(0, j))?.scale(coeff);
            h = h.add(&term)?;
        }
    }
    Ok(h)
}
