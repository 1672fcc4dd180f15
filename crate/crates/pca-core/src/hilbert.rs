//! Exact Hilbert-space realization of the configuration dynamics.
//!
//! Each lattice mode (site and plane) carries one fermionic degree of
//! freedom. Basis states are indexed by the packed configuration integer of
//! [`SpinConfig::to_index`]: plane-major, most significant bit first, so the
//! mode with the smallest coordinate on plane 0 sits in the top bit.
//!
//! Basis vectors are ordered products of creation operators acting on the
//! empty state, with mode indices increasing from left to right. In this
//! basis a creation operator picks up the standard string sign
//! `(-1)^(number of occupied modes with smaller index)`.

use crate::error::{PcaError, Result};
use crate::lattice::{CellRule, Ensemble, LatticeSpec, SpinConfig, TimeStep};
use crate::op::{self, OperatorMatrix};
use crate::perm::SignedPermutation;
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Largest mode count for which basis enumeration is allowed.
pub const MAX_MODES: usize = 24;

/// Mode bookkeeping and fermionic sign conventions for one lattice.
#[derive(Clone, Debug)]
pub struct BasisIndexing {
    spec: LatticeSpec,
    modes: usize,
}

impl BasisIndexing {
    pub fn new(spec: &LatticeSpec) -> Result<Self> {
        let modes = spec.mode_count();
        if modes > MAX_MODES {
            return Err(PcaError::Dimension(format!(
                "{modes} modes exceed the enumerable limit of {MAX_MODES}"
            )));
        }
        Ok(BasisIndexing { spec: *spec, modes })
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn dim(&self) -> usize {
        1 << self.modes
    }

    /// Global mode index of bit position `p` on `plane`.
    pub fn mode(&self, plane: usize, p: usize) -> usize {
        debug_assert!(p < self.spec.n_x);
        plane * self.spec.n_x + p
    }

    /// Global mode index of site `j` on `plane`.
    pub fn mode_at(&self, plane: usize, j: i64) -> usize {
        self.mode(plane, self.spec.pos(j))
    }

    #[inline]
    pub fn occupied(&self, tau: usize, mode: usize) -> bool {
        debug_assert!(mode < self.modes);
        (tau >> (self.modes - 1 - mode)) & 1 == 1
    }

    pub fn occupied_modes(&self, tau: usize) -> Vec<usize> {
        (0..self.modes).filter(|&m| self.occupied(tau, m)).collect()
    }

    pub fn particle_number(&self, tau: usize) -> u32 {
        (tau as u64).count_ones()
    }

    pub fn config_to_index(&self, cfg: &SpinConfig) -> usize {
        cfg.to_index() as usize
    }

    pub fn index_to_config(&self, tau: usize) -> SpinConfig {
        SpinConfig::from_index(&self.spec, tau as u64)
    }

    /// Sign relating the ordered creation product for `tau` to the plain
    /// tensor-product unit vector: the parity of the sum of occupied mode
    /// indices.
    pub fn sigma(&self, tau: usize) -> i8 {
        let mut parity = 0u32;
        for m in self.occupied_modes(tau) {
            parity += m as u32;
        }
        if parity % 2 == 0 {
            1
        } else {
            -1
        }
    }

    /// Action of the creation operator for `mode`; `None` if occupied.
    #[inline]
    pub fn create(&self, tau: usize, mode: usize) -> Option<(usize, i8)> {
        let bit = 1usize << (self.modes - 1 - mode);
        if tau & bit != 0 {
            return None;
        }
        Some((tau | bit, self.string_sign(tau, mode)))
    }

    /// Action of the annihilation operator for `mode`; `None` if empty.
    #[inline]
    pub fn annihilate(&self, tau: usize, mode: usize) -> Option<(usize, i8)> {
        let bit = 1usize << (self.modes - 1 - mode);
        if tau & bit == 0 {
            return None;
        }
        Some((tau & !bit, self.string_sign(tau, mode)))
    }

    /// `(-1)^(occupied modes with index below mode)`.
    #[inline]
    pub fn string_sign(&self, tau: usize, mode: usize) -> i8 {
        let above = tau >> (self.modes - mode);
        if above.count_ones() % 2 == 0 {
            1
        } else {
            -1
        }
    }

    /// Index and sign of the state `a^dag(modes[0]) ... a^dag(modes[k]) |0>`
    /// (the rightmost factor acts first). `None` when a mode repeats.
    pub fn creation_product(&self, modes: &[usize]) -> Option<(usize, i8)> {
        let mut tau = 0usize;
        let mut sign = 1i8;
        for &m in modes.iter().rev() {
            let (t, s) = self.create(tau, m)?;
            tau = t;
            sign *= s;
        }
        Some((tau, sign))
    }

    /// Image of a basis state under an injective relabeling of modes,
    /// carrying the reordering sign of the creation product.
    pub fn map_modes(&self, tau: usize, f: impl Fn(usize) -> usize) -> (usize, i8) {
        let mapped: Vec<usize> = self.occupied_modes(tau).iter().map(|&m| f(m)).collect();
        self.creation_product(&mapped)
            .expect("mode relabeling must be injective")
    }

    /// Matrix of the creation operator for `mode`.
    pub fn op_create(&self, mode: usize) -> OperatorMatrix {
        OperatorMatrix::from_triplets(
            self.dim(),
            (0..self.dim()).filter_map(|tau| {
                self.create(tau, mode)
                    .map(|(img, s)| (img, tau, Complex64::new(s as f64, 0.0)))
            }),
        )
    }

    /// Matrix of the annihilation operator for `mode`.
    pub fn op_annihilate(&self, mode: usize) -> OperatorMatrix {
        OperatorMatrix::from_triplets(
            self.dim(),
            (0..self.dim()).filter_map(|tau| {
                self.annihilate(tau, mode)
                    .map(|(img, s)| (img, tau, Complex64::new(s as f64, 0.0)))
            }),
        )
    }

    /// Diagonal occupation operator for `mode`.
    pub fn op_number(&self, mode: usize) -> OperatorMatrix {
        OperatorMatrix::from_triplets(
            self.dim(),
            (0..self.dim())
                .filter(|&tau| self.occupied(tau, mode))
                .map(|tau| (tau, tau, Complex64::ONE)),
        )
    }

    /// Diagonal operator from a function of the configuration.
    pub fn diagonal_from(&self, f: impl Fn(&SpinConfig) -> f64) -> OperatorMatrix {
        OperatorMatrix::from_real_diagonal(
            &(0..self.dim())
                .map(|tau| f(&self.index_to_config(tau)))
                .collect::<Vec<_>>(),
        )
    }

    /// Signed permutation of the one-step drift of every plane.
    pub fn transport_permutation(&self) -> SignedPermutation {
        let n_x = self.spec.n_x;
        let species = self.spec.species;
        SignedPermutation::from_fn(self.dim(), |tau| {
            self.map_modes(tau, |m| {
                let plane = m / n_x;
                let p = m % n_x;
                let shift = species.plane_shift(plane);
                let p2 = (p as i64 + shift).rem_euclid(n_x as i64) as usize;
                plane * n_x + p2
            })
        })
        .expect("drift is a bijection")
    }

    /// Lift of a cell update table to the basis; every matrix entry is +1.
    pub fn cell_rule_permutation(&self, rule: &CellRule) -> Result<SignedPermutation> {
        let mut target = Vec::with_capacity(self.dim());
        for tau in 0..self.dim() {
            let mut cfg = self.index_to_config(tau);
            rule.apply(&mut cfg)?;
            target.push(self.config_to_index(&cfg) as u32);
        }
        SignedPermutation::new(target, vec![1; self.dim()])
    }

    /// Signed permutation of one full time step.
    pub fn step_permutation(&self, step: &TimeStep) -> Result<SignedPermutation> {
        let mut s = if step.transport {
            self.transport_permutation()
        } else {
            SignedPermutation::identity(self.dim())
        };
        if let Some(rule) = &step.rule {
            s = self.cell_rule_permutation(rule)?.compose(&s)?;
        }
        Ok(s)
    }
}

/// The pair of real wave functions evolved forwards and backwards through
/// the same chain: probabilities are the componentwise product.
#[derive(Clone, Debug)]
pub struct WavePair {
    pub fwd: Vec<f64>,
    pub adj: Vec<f64>,
}

impl WavePair {
    /// Both members equal: the boundary choice available for any automaton.
    pub fn pure(q: Vec<f64>) -> Self {
        WavePair {
            adj: q.clone(),
            fwd: q,
        }
    }

    pub fn dim(&self) -> usize {
        self.fwd.len()
    }

    /// Componentwise products, the time-local probabilities.
    pub fn probabilities(&self) -> Vec<f64> {
        self.fwd.iter().zip(&self.adj).map(|(f, a)| f * a).collect()
    }

    /// Sum of the probabilities; preserved by every valid step.
    pub fn total_probability(&self) -> f64 {
        self.fwd.iter().zip(&self.adj).map(|(f, a)| f * a).sum()
    }
}

/// One time-step operator in either exact-permutation or dense form.
#[derive(Clone, Debug)]
pub enum StepOperator<'a> {
    Jump(&'a SignedPermutation),
    Dense(&'a DMatrix<f64>),
}

impl StepOperator<'_> {
    pub fn dim(&self) -> usize {
        match self {
            StepOperator::Jump(p) => p.dim(),
            StepOperator::Dense(m) => m.nrows(),
        }
    }

    pub fn apply_forward(&self, v: &[f64]) -> Vec<f64> {
        match self {
            StepOperator::Jump(p) => p.apply_real(v),
            StepOperator::Dense(m) => {
                let x = nalgebra::DVector::from_column_slice(v);
                (*m * x).as_slice().to_vec()
            }
        }
    }

    /// Applies the inverse transpose, the evolution of the conjugate member.
    pub fn apply_adjoint_inverse(&self, v: &[f64]) -> Result<Vec<f64>> {
        match self {
            StepOperator::Jump(p) => Ok(p.apply_real(v)),
            StepOperator::Dense(m) => {
                let lu = m.transpose().lu();
                let x = nalgebra::DVector::from_column_slice(v);
                let sol = lu
                    .solve(&x)
                    .ok_or_else(|| PcaError::Numerical("singular step matrix".into()))?;
                Ok(sol.as_slice().to_vec())
            }
        }
    }

    /// Dense left multiplication `S * m`.
    fn left_mul(&self, m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        match self {
            StepOperator::Jump(p) => {
                let mut out = DMatrix::zeros(m.nrows(), m.ncols());
                for r in 0..m.nrows() {
                    let t = p.target(r);
                    let s = p.sign(r) as f64;
                    for c in 0..m.ncols() {
                        out[(t, c)] = s * m[(r, c)];
                    }
                }
                out
            }
            StepOperator::Dense(d) => op::complex_from_real(d) * m,
        }
    }
}

/// Advances the pair by one step: the forward member with the step matrix,
/// the conjugate member with its inverse transpose.
pub fn evolve_pair(pair: &mut WavePair, step: &StepOperator) -> Result<()> {
    if pair.dim() != step.dim() {
        return Err(PcaError::Dimension(format!(
            "wave dimension {} does not match step dimension {}",
            pair.dim(),
            step.dim()
        )));
    }
    pair.fwd = step.apply_forward(&pair.fwd);
    pair.adj = step.apply_adjoint_inverse(&pair.adj)?;
    Ok(())
}

/// Real sandwich `adj^T A fwd`; the imaginary part must vanish.
pub fn pair_expectation(pair: &WavePair, a: &OperatorMatrix) -> Result<f64> {
    if pair.dim() != a.dim() {
        return Err(PcaError::Dimension(format!(
            "wave dimension {} does not match operator dimension {}",
            pair.dim(),
            a.dim()
        )));
    }
    let v = a.pair_expectation(&pair.adj, &pair.fwd);
    if v.im.abs() > 1e-8 * (1.0 + v.re.abs()) {
        return Err(PcaError::Numerical(format!(
            "expectation of a non-real operator in the real picture: {v}"
        )));
    }
    Ok(v.re)
}

/// Trace of the operator chain with the observable inserted after `t` steps:
/// `tr{ S_(n-1) ... S_t A S_(t-1) ... S_0 B }`.
pub fn expectation_chain(
    boundary: &OperatorMatrix,
    steps: &[StepOperator],
    a: &OperatorMatrix,
    t: usize,
    cap: usize,
) -> Result<f64> {
    if t > steps.len() {
        return Err(PcaError::Input(format!(
            "insertion time {t} exceeds chain length {}",
            steps.len()
        )));
    }
    let mut m = boundary.to_dense(cap)?;
    for step in &steps[..t] {
        m = step.left_mul(&m);
    }
    m = sparse_dense_mul(a, &m);
    for step in &steps[t..] {
        m = step.left_mul(&m);
    }
    let tr: Complex64 = (0..m.nrows()).map(|i| m[(i, i)]).sum();
    if tr.im.abs() > 1e-8 * (1.0 + tr.re.abs()) {
        return Err(PcaError::Numerical(format!(
            "chain trace has an imaginary part: {tr}"
        )));
    }
    Ok(tr.re)
}

fn sparse_dense_mul(a: &OperatorMatrix, m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for (r, k, v) in a.triplets() {
        for c in 0..m.ncols() {
            out[(r, c)] += v * m[(k, c)];
        }
    }
    out
}

/// Transfer matrix data for the diagonal-coupling Ising chain.
pub struct IsingTransfer {
    /// Symmetric step matrix, scaled so the dominant eigenvalue is one.
    pub step: DMatrix<f64>,
    /// Additive constant per site that realizes the scaling in the action.
    pub delta: f64,
    /// Hermitian generator piece: `step = exp(-i*eps*(h + i*j))`.
    pub h: DMatrix<Complex64>,
    /// Anti-Hermitian generator piece (as the Hermitian matrix `j`).
    pub j: DMatrix<Complex64>,
}

/// Builds the transfer matrix of the periodic Ising chain whose couplings
/// pair each spin with its temporal neighbor and both spatial neighbors at
/// half strength, then extracts the generator split.
pub fn ising_transfer(n_x: usize, beta: f64, epsilon: f64, cap: usize) -> Result<IsingTransfer> {
    if n_x < 2 || n_x > 20 {
        return Err(PcaError::Lattice(format!(
            "transfer matrix site count {n_x} outside supported range 2..=20"
        )));
    }
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(PcaError::Input(format!(
            "coupling must be positive, got {beta}"
        )));
    }
    let dim = 1usize << n_x;
    if dim > cap {
        return Err(PcaError::DenseCap { need: dim, cap });
    }
    let mask = (1usize << n_x) - 1;
    let rot = |tau: usize| ((tau << 1) | (tau >> (n_x - 1))) & mask;
    // Spatial neighbor coupling of a single layer: sum over x of s(x+1)s(x)
    // equals n_x - 2 * (number of disagreeing neighbor pairs).
    let layer: Vec<f64> = (0..dim)
        .map(|tau| {
            let disagree = (tau ^ rot(tau)).count_ones() as f64;
            (0.5 * beta * (n_x as f64 - 2.0 * disagree)).exp()
        })
        .collect();
    let mut raw = DMatrix::zeros(dim, dim);
    for t in 0..dim {
        for r in 0..dim {
            let disagree = (t ^ r).count_ones() as f64;
            let temporal = (beta * (n_x as f64 - 2.0 * disagree)).exp();
            raw[(t, r)] = layer[t] * temporal * layer[r];
        }
    }
    let eig = raw.clone().symmetric_eigen();
    let lambda_max = eig.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
    if !(lambda_max > 0.0) {
        return Err(PcaError::Numerical(
            "transfer matrix has no positive dominant eigenvalue".into(),
        ));
    }
    let step = raw / lambda_max;
    let delta = 2.0 - lambda_max.ln() / (beta * n_x as f64);
    let (h, j) = op::symmetric_step_generator(&step, epsilon)?;
    Ok(IsingTransfer { step, delta, h, j })
}

/// A density matrix on the configuration space.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    pub mat: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn from_pure_real(q: &[f64]) -> Self {
        let dim = q.len();
        let mut mat = DMatrix::zeros(dim, dim);
        for r in 0..dim {
            for c in 0..dim {
                mat[(r, c)] = Complex64::new(q[r] * q[c], 0.0);
            }
        }
        DensityMatrix { mat }
    }

    pub fn from_pure(phi: &[Complex64]) -> Self {
        let dim = phi.len();
        let mut mat = DMatrix::zeros(dim, dim);
        for r in 0..dim {
            for c in 0..dim {
                mat[(r, c)] = phi[r] * phi[c].conj();
            }
        }
        DensityMatrix { mat }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let mut mat = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            mat[(i, i)] = Complex64::new(1.0 / dim as f64, 0.0);
        }
        DensityMatrix { mat }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim()).map(|i| self.mat[(i, i)]).sum()
    }

    pub fn purity(&self) -> f64 {
        (&self.mat * &self.mat)
            .diagonal()
            .iter()
            .map(|v| v.re)
            .sum()
    }

    /// `tr(rho * a)`.
    pub fn expectation(&self, a: &OperatorMatrix) -> Complex64 {
        a.triplets().map(|(r, c, v)| self.mat[(c, r)] * v).sum()
    }

    /// Hermiticity, unit trace, and positive semidefiniteness within `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        if (&self.mat - self.mat.adjoint()).camax() > tol {
            return Err(PcaError::Numerical(
                "density matrix is not Hermitian".into(),
            ));
        }
        let tr = self.trace();
        if (tr - Complex64::ONE).norm() > tol {
            return Err(PcaError::Numerical(format!(
                "density matrix trace is {tr}, expected 1"
            )));
        }
        let (vals, _) = op::hermitian_eigen(&self.mat)?;
        if vals.first().copied().unwrap_or(0.0) < -tol {
            return Err(PcaError::Numerical(format!(
                "density matrix has negative eigenvalue {}",
                vals[0]
            )));
        }
        Ok(())
    }

    /// Conjugates by the step: `rho -> S rho S^(-1)`.
    pub fn evolve(&mut self, step: &StepOperator) -> Result<()> {
        if self.dim() != step.dim() {
            return Err(PcaError::Dimension(format!(
                "density dimension {} does not match step dimension {}",
                self.dim(),
                step.dim()
            )));
        }
        match step {
            StepOperator::Jump(p) => {
                let dim = self.dim();
                let mut out = DMatrix::zeros(dim, dim);
                for r in 0..dim {
                    for c in 0..dim {
                        let v = self.mat[(r, c)];
                        if v != Complex64::ZERO {
                            out[(p.target(r), p.target(c))] = (p.sign(r) * p.sign(c)) as f64 * v;
                        }
                    }
                }
                self.mat = out;
            }
            StepOperator::Dense(d) => {
                let dc = op::complex_from_real(d);
                let x = &dc * &self.mat;
                let lu = dc.transpose().lu();
                let solved = lu
                    .solve(&x.transpose())
                    .ok_or_else(|| PcaError::Numerical("singular step matrix".into()))?;
                self.mat = solved.transpose();
            }
        }
        Ok(())
    }
}

/// Square-root wave pair of an ensemble: both members carry the square roots
/// of the initial probabilities.
pub fn ensemble_to_pair(basis: &BasisIndexing, ensemble: &Ensemble) -> Result<WavePair> {
    ensemble.validate()?;
    let mut q = vec![0.0; basis.dim()];
    for (cfg, w) in &ensemble.entries {
        if cfg.plane_count() != basis.spec().species.plane_count()
            || cfg.sites() != basis.spec().n_x
        {
            return Err(PcaError::Dimension(
                "ensemble configuration shape does not match the lattice".into(),
            ));
        }
        q[basis.config_to_index(cfg)] += w.max(0.0);
    }
    for v in q.iter_mut() {
        *v = v.sqrt();
    }
    Ok(WavePair::pure(q))
}
