//! Signed permutation matrices.
//!
//! The step operator of an invertible automaton has exactly one entry of
//! modulus one in each row and column, and that entry is real. Such a matrix
//! is stored as a permutation together with a sign per source index:
//! `S e_tau = sign[tau] * e_target[tau]`.

use crate::error::{PcaError, Result};
use num_complex::Complex64;

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SignedPermutation {
    target: Vec<u32>,
    sign: Vec<i8>,
}

impl SignedPermutation {
    pub fn identity(dim: usize) -> Self {
        SignedPermutation {
            target: (0..dim as u32).collect(),
            sign: vec![1; dim],
        }
    }

    pub fn new(target: Vec<u32>, sign: Vec<i8>) -> Result<Self> {
        let dim = target.len();
        if sign.len() != dim {
            return Err(PcaError::Dimension(format!(
                "target has {dim} entries, sign has {}",
                sign.len()
            )));
        }
        let mut seen = vec![false; dim];
        for &t in &target {
            let t = t as usize;
            if t >= dim || seen[t] {
                return Err(PcaError::Input("target is not a permutation".into()));
            }
            seen[t] = true;
        }
        if sign.iter().any(|&s| s != 1 && s != -1) {
            return Err(PcaError::Input("signs must be +1 or -1".into()));
        }
        Ok(SignedPermutation { target, sign })
    }

    /// Builds from a map `tau -> (target, sign)`.
    pub fn from_fn(dim: usize, f: impl Fn(usize) -> (usize, i8)) -> Result<Self> {
        let mut target = Vec::with_capacity(dim);
        let mut sign = Vec::with_capacity(dim);
        for tau in 0..dim {
            let (t, s) = f(tau);
            target.push(t as u32);
            sign.push(s);
        }
        Self::new(target, sign)
    }

    pub fn dim(&self) -> usize {
        self.target.len()
    }

    #[inline]
    pub fn target(&self, tau: usize) -> usize {
        self.target[tau] as usize
    }

    #[inline]
    pub fn sign(&self, tau: usize) -> i8 {
        self.sign[tau]
    }

    /// Matrix product `self * rhs` (applies `rhs` first).
    pub fn compose(&self, rhs: &SignedPermutation) -> Result<Self> {
        if self.dim() != rhs.dim() {
            return Err(PcaError::Dimension(format!(
                "cannot compose dimensions {} and {}",
                self.dim(),
                rhs.dim()
            )));
        }
        let dim = self.dim();
        let mut target = Vec::with_capacity(dim);
        let mut sign = Vec::with_capacity(dim);
        for tau in 0..dim {
            let mid = rhs.target[tau] as usize;
            target.push(self.target[mid]);
            sign.push(rhs.sign[tau] * self.sign[mid]);
        }
        Ok(SignedPermutation { target, sign })
    }

    /// Inverse, which equals the transpose.
    pub fn inverse(&self) -> Self {
        let dim = self.dim();
        let mut target = vec![0u32; dim];
        let mut sign = vec![1i8; dim];
        for tau in 0..dim {
            let t = self.target[tau] as usize;
            target[t] = tau as u32;
            sign[t] = self.sign[tau];
        }
        SignedPermutation { target, sign }
    }

    pub fn transpose(&self) -> Self {
        self.inverse()
    }

    /// `self` raised to an integer power (negative powers use the inverse).
    pub fn pow(&self, exponent: i64) -> Self {
        let mut base = if exponent < 0 {
            self.inverse()
        } else {
            self.clone()
        };
        let mut e = exponent.unsigned_abs();
        let mut acc = Self::identity(self.dim());
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.compose(&base).expect("same dimension");
            }
            base = base.compose(&base).expect("same dimension");
            e >>= 1;
        }
        acc
    }

    pub fn apply_real(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.dim());
        let mut out = vec![0.0; v.len()];
        for tau in 0..v.len() {
            out[self.target[tau] as usize] = self.sign[tau] as f64 * v[tau];
        }
        out
    }

    pub fn apply_complex(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.dim());
        let mut out = vec![Complex64::ZERO; v.len()];
        for tau in 0..v.len() {
            out[self.target[tau] as usize] = self.sign[tau] as f64 * v[tau];
        }
        out
    }

    pub fn is_identity(&self) -> bool {
        self.target
            .iter()
            .enumerate()
            .all(|(i, &t)| i == t as usize)
            && self.sign.iter().all(|&s| s == 1)
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim())
            .filter(|&t| self.target[t] as usize == t)
            .map(|t| self.sign[t] as f64)
            .sum()
    }

    /// Cycles of the underlying permutation, each with the product of the
    /// signs collected along the cycle.
    pub fn cycles(&self) -> Vec<(Vec<usize>, i8)> {
        let dim = self.dim();
        let mut seen = vec![false; dim];
        let mut out = Vec::new();
        for start in 0..dim {
            if seen[start] {
                continue;
            }
            let mut cycle = Vec::new();
            let mut sign = 1i8;
            let mut cur = start;
            loop {
                seen[cur] = true;
                cycle.push(cur);
                sign *= self.sign[cur];
                cur = self.target[cur] as usize;
                if cur == start {
                    break;
                }
            }
            out.push((cycle, sign));
        }
        out
    }

    /// Smallest positive power equal to the identity.
    pub fn order(&self) -> u128 {
        let mut order = 1u128;
        for (cycle, sign) in self.cycles() {
            let len = cycle.len() as u128 * if sign == 1 { 1 } else { 2 };
            order = lcm(order, len);
        }
        order
    }

    /// Eigenvalue phases in `(-pi, pi]`, with multiplicity, sorted.
    ///
    /// A cycle of length `l` with sign product `+1` contributes the `l`-th
    /// roots of unity; with sign product `-1` it contributes the `2l`-th
    /// roots of `-1` style phases `(2m + 1) * pi / l`.
    pub fn eigenvalue_phases(&self) -> Vec<f64> {
        use std::f64::consts::PI;
        let mut phases = Vec::with_capacity(self.dim());
        for (cycle, sign) in self.cycles() {
            let l = cycle.len() as f64;
            for m in 0..cycle.len() {
                let mut phase = if sign == 1 {
                    2.0 * PI * m as f64 / l
                } else {
                    PI * (2 * m + 1) as f64 / l
                };
                while phase > PI {
                    phase -= 2.0 * PI;
                }
                phases.push(phase);
            }
        }
        phases.sort_by(|a, b| a.partial_cmp(b).unwrap());
        phases
    }

    /// Largest absolute difference from another signed permutation viewed as
    /// a matrix (0, 1, or 2).
    pub fn matrix_distance(&self, other: &SignedPermutation) -> f64 {
        assert_eq!(self.dim(), other.dim());
        let mut worst: f64 = 0.0;
        for tau in 0..self.dim() {
            if self.target[tau] == other.target[tau] {
                worst = worst.max((self.sign[tau] - other.sign[tau]).abs() as f64);
            } else {
                worst = worst.max(1.0);
            }
        }
        worst
    }
}

fn gcd(a: u128, b: u128) -> u128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: u128, b: u128) -> u128 {
    a / gcd(a, b) * b
}
