//! Sparse complex operators on the configuration space, with dense bridges
//! for matrix functions.
//!
//! Operators are stored in compressed sparse row form. Dense conversions are
//! guarded by a caller-supplied cap so that exponentially large spaces are
//! never densified by accident.

use crate::error::{PcaError, Result};
use crate::perm::SignedPermutation;
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Default cap on dense matrix dimension.
pub const DEFAULT_DENSE_CAP: usize = 4096;

#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    col: Vec<u32>,
    val: Vec<Complex64>,
}

impl OperatorMatrix {
    pub fn zeros(dim: usize) -> Self {
        OperatorMatrix {
            dim,
            row_ptr: vec![0; dim + 1],
            col: Vec::new(),
            val: Vec::new(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diagonal(&vec![Complex64::ONE; dim])
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        let dim = diag.len();
        OperatorMatrix {
            dim,
            row_ptr: (0..=dim).collect(),
            col: (0..dim as u32).collect(),
            val: diag.to_vec(),
        }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        Self::from_diagonal(
            &diag
                .iter()
                .map(|&d| Complex64::new(d, 0.0))
                .collect::<Vec<_>>(),
        )
    }

    /// Builds from `(row, col, value)` triplets, summing duplicates and
    /// dropping exact zeros.
    pub fn from_triplets(
        dim: usize,
        triplets: impl IntoIterator<Item = (usize, usize, Complex64)>,
    ) -> Self {
        let mut entries: Vec<(u32, u32, Complex64)> = triplets
            .into_iter()
            .inspect(|&(r, c, _)| debug_assert!(r < dim && c < dim))
            .map(|(r, c, v)| (r as u32, c as u32, v))
            .collect();
        entries.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut merged: Vec<(u32, u32, Complex64)> = Vec::with_capacity(entries.len());
        for (r, c, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        let mut row_ptr = vec![0usize; dim + 1];
        let mut col = Vec::with_capacity(merged.len());
        let mut val = Vec::with_capacity(merged.len());
        for (r, c, v) in merged {
            if v != Complex64::ZERO {
                row_ptr[r as usize + 1] += 1;
                col.push(c);
                val.push(v);
            }
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        OperatorMatrix {
            dim,
            row_ptr,
            col,
            val,
        }
    }

    pub fn from_signed_permutation(p: &SignedPermutation) -> Self {
        let dim = p.dim();
        Self::from_triplets(
            dim,
            (0..dim).map(|tau| (p.target(tau), tau, Complex64::new(p.sign(tau) as f64, 0.0))),
        )
    }

    pub fn from_dense(m: &DMatrix<Complex64>, tol: f64) -> Self {
        assert_eq!(m.nrows(), m.ncols());
        let dim = m.nrows();
        Self::from_triplets(
            dim,
            (0..dim).flat_map(|r| {
                (0..dim).filter_map(move |c| {
                    let v = m[(r, c)];
                    if v.norm() > tol {
                        Some((r, c, v))
                    } else {
                        None
                    }
                })
            }),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.val.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col[range.clone()]
            .iter()
            .zip(&self.val[range])
            .map(|(&c, &v)| (c as usize, v))
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.dim).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    /// Removes entries with modulus at or below `tol`.
    pub fn prune(&mut self, tol: f64) {
        let mut row_ptr = vec![0usize; self.dim + 1];
        let mut col = Vec::with_capacity(self.col.len());
        let mut val = Vec::with_capacity(self.val.len());
        for r in 0..self.dim {
            for (c, v) in self.row(r) {
                if v.norm() > tol || (tol == 0.0 && v != Complex64::ZERO) {
                    col.push(c as u32);
                    val.push(v);
                }
            }
            row_ptr[r + 1] = col.len();
        }
        self.row_ptr = row_ptr;
        self.col = col;
        self.val = val;
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        let mut out = self.clone();
        for v in out.val.iter_mut() {
            *v *= factor;
        }
        out
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.check_dim(rhs)?;
        Ok(Self::from_triplets(
            self.dim,
            self.triplets().chain(rhs.triplets()),
        ))
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.add(&rhs.scale(-Complex64::ONE))
    }

    /// Matrix product `self * rhs`.
    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        self.check_dim(rhs)?;
        let dim = self.dim;
        let mut row_ptr = vec![0usize; dim + 1];
        let mut col = Vec::new();
        let mut val = Vec::new();
        let mut acc: Vec<Complex64> = vec![Complex64::ZERO; dim];
        let mut touched: Vec<u32> = Vec::new();
        for r in 0..dim {
            for (m, vm) in self.row(r) {
                for (c, vr) in rhs.row(m) {
                    if acc[c] == Complex64::ZERO {
                        touched.push(c as u32);
                    }
                    acc[c] += vm * vr;
                }
            }
            touched.sort_unstable();
            for &c in &touched {
                let v = acc[c as usize];
                if v != Complex64::ZERO {
                    col.push(c);
                    val.push(v);
                }
                acc[c as usize] = Complex64::ZERO;
            }
            touched.clear();
            row_ptr[r + 1] = col.len();
        }
        Ok(OperatorMatrix {
            dim,
            row_ptr,
            col,
            val,
        })
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(self.dim, self.triplets().map(|(r, c, v)| (c, r, v.conj())))
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(self.dim, self.triplets().map(|(r, c, v)| (c, r, v)))
    }

    pub fn conj(&self) -> Self {
        let mut out = self.clone();
        for v in out.val.iter_mut() {
            *v = v.conj();
        }
        out
    }

    pub fn commutator(&self, rhs: &Self) -> Result<Self> {
        self.matmul(rhs)?.sub(&rhs.matmul(self)?)
    }

    pub fn anticommutator(&self, rhs: &Self) -> Result<Self> {
        self.matmul(rhs)?.add(&rhs.matmul(self)?)
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.dim);
        let mut out = vec![Complex64::ZERO; self.dim];
        for r in 0..self.dim {
            let mut s = Complex64::ZERO;
            for (c, a) in self.row(r) {
                s += a * v[c];
            }
            out[r] = s;
        }
        out
    }

    pub fn apply_real(&self, v: &[f64]) -> Vec<Complex64> {
        self.apply(
            &v.iter()
                .map(|&x| Complex64::new(x, 0.0))
                .collect::<Vec<_>>(),
        )
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim)
            .flat_map(|r| self.row(r).filter(move |&(c, _)| c == r))
            .map(|(_, v)| v)
            .sum()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.val.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.val.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entry modulus of `self - rhs`.
    pub fn distance(&self, rhs: &Self) -> Result<f64> {
        Ok(self.sub(rhs)?.max_abs())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.sub(&self.adjoint())
            .map(|d| d.max_abs() <= tol)
            .unwrap_or(false)
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.max_abs() <= tol
    }

    /// `bra^dagger * self * ket`.
    pub fn expectation(&self, bra: &[Complex64], ket: &[Complex64]) -> Complex64 {
        let applied = self.apply(ket);
        bra.iter().zip(applied).map(|(b, a)| b.conj() * a).sum()
    }

    /// Real-vector sandwich `bra^T * self * ket` used by the paired real
    /// wave functions.
    pub fn pair_expectation(&self, bra: &[f64], ket: &[f64]) -> Complex64 {
        let applied = self.apply_real(ket);
        bra.iter().zip(applied).map(|(b, a)| *b * a).sum()
    }

    pub fn to_dense(&self, cap: usize) -> Result<DMatrix<Complex64>> {
        if self.dim > cap {
            return Err(PcaError::DenseCap {
                need: self.dim,
                cap,
            });
        }
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.triplets() {
            m[(r, c)] += v;
        }
        Ok(m)
    }

    /// Kronecker product; `self` indexes the most significant block.
    pub fn kron(&self, rhs: &Self) -> Self {
        let dim = self.dim * rhs.dim;
        let rd = rhs.dim;
        Self::from_triplets(
            dim,
            self.triplets().flat_map(move |(r1, c1, v1)| {
                rhs.triplets()
                    .map(move |(r2, c2, v2)| (r1 * rd + r2, c1 * rd + c2, v1 * v2))
            }),
        )
    }

    fn check_dim(&self, rhs: &Self) -> Result<()> {
        if self.dim != rhs.dim {
            return Err(PcaError::Dimension(format!(
                "operator dimensions {} and {} differ",
                self.dim, rhs.dim
            )));
        }
        Ok(())
    }
}

/// Eigen-decomposition of a Hermitian operator; eigenvalues ascending.
pub fn hermitian_eigen(m: &DMatrix<Complex64>) -> Result<(Vec<f64>, DMatrix<Complex64>)> {
    if m.nrows() != m.ncols() {
        return Err(PcaError::Dimension("matrix is not square".into()));
    }
    let herm_err = (m - m.adjoint()).camax();
    if herm_err > 1e-9 * (1.0 + m.camax()) {
        return Err(PcaError::Numerical(format!(
            "matrix is not Hermitian, deviation {herm_err:.3e}"
        )));
    }
    let eig = m.hermitian_part().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let dim = m.nrows();
    let mut vecs = DMatrix::zeros(dim, dim);
    for (newcol, &oldcol) in order.iter().enumerate() {
        vecs.set_column(newcol, &eig.eigenvectors.column(oldcol));
    }
    Ok((vals, vecs))
}

/// Applies a scalar function to a Hermitian operator through its spectrum:
/// `U f(Lambda) U^dagger`.
pub fn hermitian_matrix_function(
    m: &DMatrix<Complex64>,
    f: impl Fn(f64) -> Complex64,
) -> Result<DMatrix<Complex64>> {
    let (vals, vecs) = hermitian_eigen(m)?;
    let mut scaled = vecs.clone();
    for (c, &lambda) in vals.iter().enumerate() {
        let fv = f(lambda);
        for r in 0..scaled.nrows() {
            scaled[(r, c)] *= fv;
        }
    }
    Ok(&scaled * vecs.adjoint())
}

/// `exp(factor * m)` for Hermitian `m`.
pub fn hermitian_exp(m: &DMatrix<Complex64>, factor: Complex64) -> Result<DMatrix<Complex64>> {
    hermitian_matrix_function(m, |l| (factor * l).exp())
}

/// Splits the generator of a real symmetric step matrix into a Hermitian
/// pair `(h, j)` such that the step equals `exp(-i * eps * (h + i j))`,
/// using the principal branch for negative eigenvalues.
pub fn symmetric_step_generator(
    step: &DMatrix<f64>,
    epsilon: f64,
) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
    if step.nrows() != step.ncols() {
        return Err(PcaError::Dimension("matrix is not square".into()));
    }
    let sym_err = (step - step.transpose()).amax();
    if sym_err > 1e-9 * (1.0 + step.amax()) {
        return Err(PcaError::Numerical(format!(
            "step matrix is not symmetric, deviation {sym_err:.3e}"
        )));
    }
    let eig = step.clone().symmetric_eigen();
    let dim = step.nrows();
    let mut h = DMatrix::<Complex64>::zeros(dim, dim);
    let mut j = DMatrix::<Complex64>::zeros(dim, dim);
    for (idx, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda.abs() < 1e-300 {
            return Err(PcaError::Numerical(
                "step matrix has a vanishing eigenvalue; no generator exists".into(),
            ));
        }
        let v = eig.eigenvectors.column(idx);
        // log(lambda) = ln|lambda| + i*pi for lambda < 0 (principal branch);
        // i/eps * log gives h from the angle and j from the modulus.
        let h_val = if lambda < 0.0 {
            -std::f64::consts::PI / epsilon
        } else {
            0.0
        };
        let j_val = lambda.abs().ln() / epsilon;
        for r in 0..dim {
            for c in 0..dim {
                let outer = v[r] * v[c];
                h[(r, c)] += Complex64::new(h_val * outer, 0.0);
                j[(r, c)] += Complex64::new(j_val * outer, 0.0);
            }
        }
    }
    Ok((h, j))
}

/// Dense matrix from real entries.
pub fn complex_from_real(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|x| Complex64::new(x, 0.0))
}

pub fn max_abs_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    (a - b).camax()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn triplets_sum_duplicates() {
        let m = OperatorMatrix::from_triplets(
            2,
            vec![
                (0, 1, c(1.0, 0.0)),
                (0, 1, c(2.0, 0.0)),
                (1, 0, c(0.0, 1.0)),
            ],
        );
        assert_eq!(m.nnz(), 2);
        let entries: Vec<_> = m.triplets().collect();
        assert_eq!(entries[0], (0, 1, c(3.0, 0.0)));
        assert_eq!(entries[1], (1, 0, c(0.0, 1.0)));
    }

    #[test]
    fn matmul_matches_dense() {
        let a = OperatorMatrix::from_triplets(
            3,
            vec![
                (0, 1, c(1.0, 1.0)),
                (1, 2, c(2.0, 0.0)),
                (2, 0, c(0.0, -1.0)),
            ],
        );
        let b = OperatorMatrix::from_triplets(
            3,
            vec![
                (0, 0, c(1.0, 0.0)),
                (1, 0, c(3.0, 0.0)),
                (2, 1, c(0.0, 2.0)),
            ],
        );
        let ab = a.matmul(&b).unwrap();
        let dense = a.to_dense(10).unwrap() * b.to_dense(10).unwrap();
        assert!(max_abs_diff(&ab.to_dense(10).unwrap(), &dense) < 1e-14);
    }

    #[test]
    fn adjoint_is_conjugate_transpose() {
        let a = OperatorMatrix::from_triplets(2, vec![(0, 1, c(1.0, 2.0))]);
        let entries: Vec<_> = a.adjoint().triplets().collect();
        assert_eq!(entries, vec![(1, 0, c(1.0, -2.0))]);
    }

    #[test]
    fn hermitian_exp_of_pauli_like_matrix() {
        // exp(-i * theta * X) = cos(theta) I - i sin(theta) X
        let x =
            DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let theta = 0.7;
        let u = hermitian_exp(&x, c(0.0, -theta)).unwrap();
        let expect = DMatrix::from_row_slice(
            2,
            2,
            &[
                c(theta.cos(), 0.0),
                c(0.0, -theta.sin()),
                c(0.0, -theta.sin()),
                c(theta.cos(), 0.0),
            ],
        );
        assert!(max_abs_diff(&u, &expect) < 1e-12);
    }

    #[test]
    fn generator_split_reconstructs_symmetric_step() {
        // 2x2 symmetric with one negative eigenvalue.
        let step = DMatrix::from_row_slice(2, 2, &[0.3, 0.8, 0.8, 0.3]);
        let (h, j) = symmetric_step_generator(&step, 1.0).unwrap();
        assert!((&h - h.adjoint()).camax() < 1e-12);
        assert!((&j - j.adjoint()).camax() < 1e-12);
        // h and j commute, so the step factorizes into two Hermitian
        // exponentials computed independently of the split construction.
        let comm = (&h * &j - &j * &h).camax();
        assert!(comm < 1e-12);
        let eh = hermitian_exp(&h, c(0.0, -1.0)).unwrap();
        let ej = hermitian_exp(&j, c(1.0, 0.0)).unwrap();
        let rebuilt = eh * ej;
        assert!(max_abs_diff(&rebuilt, &complex_from_real(&step)) < 1e-12);
    }
}
