//! Vacuum states of the free automata and one-particle excitations above
//! them.
//!
//! Four vacua are built here. The *empty* state has no occupied sites and
//! zero energy. The *equipartition* state weights every configuration
//! equally; it is translation-invariant and charge-symmetric but not an
//! eigenstate of the free Hamiltonians. The *particle* vacua minimize the
//! free Hamiltonians: on one plane every negative-frequency momentum mode
//! is filled (right-movers fill `k < 0`, left-movers fill `k > 0`) and the
//! zero mode enters in its particle-hole-paired superposition; the
//! two-plane vacuum is the direct product of the per-plane vacua. The
//! direct product is essential: applying the left plane's raising
//! operators inside the full space would thread their sign strings
//! through the right factor, which sits in a superposition of particle
//! numbers, and the resulting state loses the parity and
//! conjugation-time invariances that characterize the doubled vacuum.
//!
//! Measured facts, frozen in the tests below: the one-plane vacuum
//! carries energy `E0 = -(n_x^2 - 1) pi / (4 n_x epsilon)` and picks up
//! the exact phase `exp(-i epsilon E0)` under one transport step; the
//! two-plane vacuum carries `2 E0`, has exactly zero momentum, is
//! invariant under the common shift of both planes and under `P`, `CT`,
//! and `CPT`, and is not invariant under `C`, `T`, or `PT`.
//!
//! One-particle excitations are stored as momentum amplitudes
//! `phi(t, k)` over a particle vacuum with the zero mode excluded. A step
//! multiplies each amplitude by `exp(-i epsilon (E_vac + omega|k|))`;
//! removing the vacuum phase and conjugating the hole side yields the
//! *rephased* wave, which evolves by a pure one-site shift in position
//! space and solves the two-component first-order wave equation with
//! symmetric lattice derivatives.

use crate::error::{PcaError, Result};
use crate::fermion::{
    build_ladders, fourier_modes, fourier_modes_for_plane, hamiltonian_mw, momentum_operator,
    paired_ground_state, Chirality, LadderFamily, LadderSet, MomentumModes,
};
use crate::hilbert::BasisIndexing;
use crate::lattice::{LatticeSpec, Species};
use crate::op::OperatorMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Residuals of the construction-time self checks (eigenvalue residual,
/// fill pattern, annihilation conditions, vacuum momentum) must stay
/// below this.
pub const VACUUM_TOL: f64 = 1e-10;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn phase(angle: f64) -> Complex64 {
    c(angle.cos(), angle.sin())
}

fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Which vacuum to build.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum VacuumKind {
    /// No occupied sites.
    Empty,
    /// Every configuration with the same amplitude.
    Equipartition,
    /// One-plane particle vacuum: drift-negative modes filled, zero mode
    /// paired.
    ParticleMw,
    /// Two-plane particle vacuum: direct product of the per-plane ones.
    ParticleDirac,
}

impl VacuumKind {
    pub const ALL: [VacuumKind; 4] = [
        VacuumKind::Empty,
        VacuumKind::Equipartition,
        VacuumKind::ParticleMw,
        VacuumKind::ParticleDirac,
    ];

    pub fn name(self) -> &'static str {
        match self {
            VacuumKind::Empty => "empty",
            VacuumKind::Equipartition => "equipartition",
            VacuumKind::ParticleMw => "particle-mw",
            VacuumKind::ParticleDirac => "particle-dirac",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "empty" => Ok(VacuumKind::Empty),
            "equipartition" | "uniform" => Ok(VacuumKind::Equipartition),
            "particle-mw" | "particle" | "mw" => Ok(VacuumKind::ParticleMw),
            "particle-dirac" | "dirac" => Ok(VacuumKind::ParticleDirac),
            other => Err(PcaError::Input(format!(
                "unknown vacuum kind {other:?} (expected empty, equipartition, \
                 particle-mw, or particle-dirac)"
            ))),
        }
    }
}

impl std::fmt::Display for VacuumKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A vacuum wave function with its measured energy.
#[derive(Clone, Debug)]
pub struct VacuumState {
    spec: LatticeSpec,
    kind: VacuumKind,
    state: Vec<Complex64>,
    energy: f64,
}

impl VacuumState {
    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn kind(&self) -> VacuumKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.state.len()
    }

    /// The wave function, one amplitude per configuration index.
    pub fn state(&self) -> &[Complex64] {
        &self.state
    }

    /// Energy of the state. For the particle vacua this is the measured
    /// eigenvalue of the free Hamiltonian (never the closed formula); for
    /// the empty and equipartition states it is exactly zero, because the
    /// momentum spectrum is symmetric and those states fill each `+k`/`-k`
    /// pair evenly.
    pub fn energy(&self) -> f64 {
        self.energy
    }

    fn is_particle(&self) -> bool {
        matches!(
            self.kind,
            VacuumKind::ParticleMw | VacuumKind::ParticleDirac
        )
    }
}

/// Zero-mode pairing sign `z = (-1)^((n_x - 1) / 4)`: the sign that makes
/// the paired plane vacuum invariant under the particle-hole involution
/// in this basis. The paired state is the `z`-eigenstate of
/// `raise(0) + lower(0)`.
pub fn zero_pairing_sign(n_x: usize) -> f64 {
    if ((n_x - 1) / 4).is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// One-plane paired vacuum with the drift-negative modes filled:
/// right-movers fill `k < 0`, left-movers fill `k > 0`; the zero mode
/// enters as `(1 + z raise(0)) / sqrt(2)`.
fn plane_paired_state(modes: &MomentumModes, chirality: Chirality) -> Result<Vec<Complex64>> {
    match chirality {
        Chirality::Right => paired_ground_state(modes),
        Chirality::Left => {
            let spec = modes.spec();
            if !spec.supports_complex_structure() {
                return Err(PcaError::Lattice(format!(
                    "the particle-hole-fixed pairing needs n_x = 1 mod 4, got {}",
                    spec.n_x
                )));
            }
            let mut v = vec![c(0.0, 0.0); modes.dim()];
            v[0] = c(1.0, 0.0);
            for k in 1..=spec.half() {
                v = modes.raise(k).apply(&v);
            }
            let z = zero_pairing_sign(spec.n_x);
            let lifted = modes.raise(0).apply(&v);
            let r = 0.5f64.sqrt();
            for (x, y) in v.iter_mut().zip(lifted) {
                *x = (*x + y.scale(z)).scale(r);
            }
            Ok(v)
        }
    }
}

/// Rayleigh quotient and eigen-residual of `h` at `v`.
fn measured_eigenvalue(h: &OperatorMatrix, v: &[Complex64]) -> (f64, f64) {
    let hv = h.apply(v);
    let e: Complex64 = v
        .iter()
        .zip(&hv)
        .map(|(a, b)| a.conj() * b)
        .sum::<Complex64>();
    let e = e.re;
    let residual = hv
        .iter()
        .zip(v)
        .map(|(a, b)| (a - b.scale(e)).norm_sqr())
        .sum::<f64>()
        .sqrt();
    (e, residual)
}

/// Verifies the fill pattern and annihilation conditions of a paired
/// plane vacuum inside whatever space `modes` acts on: occupations are
/// 1 on the filled branch, 0 on the empty branch, 1/2 on the zero mode;
/// the lowering operators of empty modes and the raising operators of
/// filled modes annihilate the state.
fn verify_fill(modes: &MomentumModes, v: &[Complex64], chirality: Chirality) -> Result<()> {
    let spec = *modes.spec();
    for k in spec.momenta() {
        let filled = match chirality {
            Chirality::Right => k < 0,
            Chirality::Left => k > 0,
        };
        let want = if k == 0 {
            0.5
        } else if filled {
            1.0
        } else {
            0.0
        };
        let got = modes.number(k).expectation(v, v).re;
        if (got - want).abs() > VACUUM_TOL {
            return Err(PcaError::Numerical(format!(
                "vacuum occupation of momentum {k} is {got}, expected {want}"
            )));
        }
        if k != 0 {
            let killer = if filled {
                modes.raise(k)
            } else {
                modes.lower(k).clone()
            };
            let gap = norm2(&killer.apply(v));
            if gap > VACUUM_TOL {
                return Err(PcaError::Numerical(format!(
                    "vacuum annihilation condition fails at momentum {k}: |residual| = {gap}"
                )));
            }
        }
    }
    Ok(())
}

/// Builds the requested vacuum for the given lattice, verifying its
/// defining conditions on the way (fill pattern, annihilation conditions,
/// eigen-residual, and — for the two-plane vacuum — zero momentum).
pub fn build_vacuum(spec: &LatticeSpec, kind: VacuumKind) -> Result<VacuumState> {
    let basis = BasisIndexing::new(spec)?;
    let dim = basis.dim();
    match kind {
        VacuumKind::Empty => {
            let mut state = vec![c(0.0, 0.0); dim];
            state[0] = c(1.0, 0.0);
            Ok(VacuumState {
                spec: *spec,
                kind,
                state,
                energy: 0.0,
            })
        }
        VacuumKind::Equipartition => {
            let amp = c(1.0 / (dim as f64).sqrt(), 0.0);
            Ok(VacuumState {
                spec: *spec,
                kind,
                state: vec![amp; dim],
                energy: 0.0,
            })
        }
        VacuumKind::ParticleMw => {
            let chirality = match spec.species {
                Species::MwR => Chirality::Right,
                Species::MwL => Chirality::Left,
                other => {
                    return Err(PcaError::Input(format!(
                        "the one-plane particle vacuum needs a one-plane species, got {}; \
                         use the two-plane kind for the doubled automaton",
                        other.name()
                    )));
                }
            };
            let ladders = build_ladders(spec, LadderFamily::SignString)?;
            let modes = fourier_modes(&ladders)?;
            let state = plane_paired_state(&modes, chirality)?;
            verify_fill(&modes, &state, chirality)?;
            let h = hamiltonian_mw(&modes, chirality).h;
            let (energy, residual) = measured_eigenvalue(&h, &state);
            if residual > VACUUM_TOL {
                return Err(PcaError::Numerical(format!(
                    "one-plane vacuum eigen-residual {residual} exceeds {VACUUM_TOL}"
                )));
            }
            Ok(VacuumState {
                spec: *spec,
                kind,
                state,
                energy,
            })
        }
        VacuumKind::ParticleDirac => {
            if spec.species != Species::Dirac {
                return Err(PcaError::Input(format!(
                    "the two-plane particle vacuum needs the doubled species, got {}",
                    spec.species.name()
                )));
            }
            // Per-plane vacua in their own one-plane spaces ...
            let plane_spec =
                LatticeSpec::new(spec.n_x, Species::MwR)?.with_epsilon(spec.epsilon)?;
            let plane_ladders = build_ladders(&plane_spec, LadderFamily::SignString)?;
            let plane_modes = fourier_modes(&plane_ladders)?;
            let v_r = plane_paired_state(&plane_modes, Chirality::Right)?;
            let v_l = plane_paired_state(&plane_modes, Chirality::Left)?;
            // ... krons into the direct-product state; the right plane is
            // the high block of the configuration index.
            let plane_dim = v_r.len();
            let mut state = vec![c(0.0, 0.0); dim];
            for (tr, ar) in v_r.iter().enumerate() {
                if ar.norm_sqr() == 0.0 {
                    continue;
                }
                for (tl, al) in v_l.iter().enumerate() {
                    state[tr * plane_dim + tl] = ar * al;
                }
            }
            let ladders = build_ladders(spec, LadderFamily::SignString)?;
            let modes_r = fourier_modes_for_plane(&ladders, 0)?;
            let modes_l = fourier_modes_for_plane(&ladders, 1)?;
            verify_fill(&modes_r, &state, Chirality::Right)?;
            verify_fill(&modes_l, &state, Chirality::Left)?;
            let p_r = momentum_operator(&modes_r);
            let p_l = momentum_operator(&modes_l);
            let momentum_gap = norm2(&p_r.add(&p_l)?.apply(&state));
            if momentum_gap > VACUUM_TOL {
                return Err(PcaError::Numerical(format!(
                    "two-plane vacuum momentum |P v| = {momentum_gap}, expected 0"
                )));
            }
            let h = p_r.sub(&p_l)?;
            let (energy, residual) = measured_eigenvalue(&h, &state);
            if residual > VACUUM_TOL {
                return Err(PcaError::Numerical(format!(
                    "two-plane vacuum eigen-residual {residual} exceeds {VACUUM_TOL}"
                )));
            }
            Ok(VacuumState {
                spec: *spec,
                kind,
                state,
                energy,
            })
        }
    }
}

/// Expected occupation of every site mode in the given vacuum, one entry
/// per mode in plane-major order. The particle vacua sit at half filling
/// on every site; the empty vacuum at zero.
pub fn half_filling_check(vac: &VacuumState, ladders: &LadderSet) -> Result<Vec<f64>> {
    if ladders.dim() != vac.dim() {
        return Err(PcaError::Dimension(format!(
            "ladder set dimension {} does not match the vacuum dimension {}",
            ladders.dim(),
            vac.dim()
        )));
    }
    Ok((0..ladders.mode_count())
        .map(|m| ladders.number(m).expectation(vac.state(), vac.state()).re)
        .collect())
}

/// A one-particle excitation over a particle vacuum, stored as momentum
/// amplitudes `phi(t, k)` with `phi(t, 0) = 0`. The excitation lives on
/// one plane; `chirality` names it (the right plane drifts right, the
/// left plane drifts left). On the particle branch (`k > 0` for
/// right-movers, `k < 0` for left-movers) the amplitude multiplies a
/// raising operator, on the opposite branch a lowering operator.
#[derive(Clone, Debug)]
pub struct OneParticleWave {
    spec: LatticeSpec,
    chirality: Chirality,
    vacuum_energy: f64,
    t: f64,
    amps: Vec<Complex64>,
}

impl OneParticleWave {
    /// Builds the excitation from momentum amplitudes indexed by
    /// `k + half` (so `amps[half]` is the zero mode, which must vanish).
    /// The amplitudes are normalized to a unit wave.
    pub fn from_momentum(
        vac: &VacuumState,
        chirality: Chirality,
        amps: &[Complex64],
    ) -> Result<Self> {
        if !vac.is_particle() {
            return Err(PcaError::Input(format!(
                "one-particle excitations need a particle vacuum, got the {} state",
                vac.kind()
            )));
        }
        let spec = *vac.spec();
        match (spec.species, chirality) {
            (Species::MwR, Chirality::Right) | (Species::MwL, Chirality::Left) => {}
            (Species::Dirac, _) => {}
            (species, chir) => {
                return Err(PcaError::Input(format!(
                    "species {} has no {} plane",
                    species.name(),
                    chir.label()
                )));
            }
        }
        if amps.len() != spec.n_x {
            return Err(PcaError::Dimension(format!(
                "expected {} momentum amplitudes, got {}",
                spec.n_x,
                amps.len()
            )));
        }
        let norm = norm2(amps);
        if norm == 0.0 {
            return Err(PcaError::Input(
                "one-particle amplitudes are all zero".into(),
            ));
        }
        let zero = amps[spec.half() as usize];
        if zero.norm() > 1e-12 * norm {
            return Err(PcaError::Input(format!(
                "the zero-momentum amplitude must vanish (the paired zero mode is part \
                 of the vacuum), got |amp| = {}",
                zero.norm()
            )));
        }
        let scale = 1.0 / norm;
        let mut amps: Vec<Complex64> = amps.iter().map(|z| z.scale(scale)).collect();
        amps[spec.half() as usize] = c(0.0, 0.0);
        Ok(OneParticleWave {
            spec,
            chirality,
            vacuum_energy: vac.energy(),
            t: 0.0,
            amps,
        })
    }

    /// Builds the excitation at `t = 0` from a rephased position wave
    /// `phi(j)`, indexed by site position. The wave must have no uniform
    /// component (that is the zero mode); anything beyond round-off there
    /// is an error.
    pub fn from_rephased_position(
        vac: &VacuumState,
        chirality: Chirality,
        phi: &[Complex64],
    ) -> Result<Self> {
        let spec = *vac.spec();
        if phi.len() != spec.n_x {
            return Err(PcaError::Dimension(format!(
                "expected {} site amplitudes, got {}",
                spec.n_x,
                phi.len()
            )));
        }
        let n = spec.n_x as f64;
        let norm = norm2(phi);
        let mut amps = vec![c(0.0, 0.0); spec.n_x];
        let s = chirality.sign();
        for k in spec.momenta() {
            let mut acc = c(0.0, 0.0);
            for j in spec.sites() {
                let ph = phase(-2.0 * PI * (k * j) as f64 / n);
                acc += ph * phi[spec.pos(j)];
            }
            acc = acc.scale(1.0 / n.sqrt());
            if k == 0 {
                if acc.norm() > 1e-10 * norm.max(1.0) {
                    return Err(PcaError::Input(format!(
                        "the position wave has a uniform (zero-momentum) component \
                         |amp| = {}; remove it before building the excitation",
                        acc.norm()
                    )));
                }
                continue;
            }
            // At t = 0 the rephased wave equals the amplitude on the
            // particle branch and its conjugate on the hole branch.
            amps[(k + spec.half()) as usize] = if (k as f64) * s > 0.0 {
                acc
            } else {
                acc.conj()
            };
        }
        OneParticleWave::from_momentum(vac, chirality, &amps)
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn chirality(&self) -> Chirality {
        self.chirality
    }

    /// Time of the current slice, a multiple of the step for stepped
    /// evolution.
    pub fn time(&self) -> f64 {
        self.t
    }

    /// Energy of the underlying vacuum (enters the evolution phases).
    pub fn vacuum_energy(&self) -> f64 {
        self.vacuum_energy
    }

    /// Momentum amplitudes indexed by `k + half`.
    pub fn momentum_amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitude(&self, k: i64) -> Complex64 {
        self.amps[(k + self.spec.half()) as usize]
    }

    /// Norms of the particle and opposite (hole) branches; they sum to
    /// one.
    pub fn sector_norms(&self) -> (f64, f64) {
        let s = self.chirality.sign();
        let mut particle = 0.0;
        let mut hole = 0.0;
        for k in self.spec.momenta() {
            let w = self.amplitude(k).norm_sqr();
            if (k as f64) * s > 0.0 {
                particle += w;
            } else if (k as f64) * s < 0.0 {
                hole += w;
            }
        }
        (particle, hole)
    }

    /// Advances the excitation by `steps` automaton steps (negative runs
    /// backwards): each amplitude picks up
    /// `exp(-i epsilon steps (E_vac + omega|k|))`.
    pub fn evolve(&self, steps: i64) -> Self {
        let eps = self.spec.epsilon;
        let mut out = self.clone();
        out.t += steps as f64 * eps;
        for k in self.spec.momenta() {
            if k == 0 {
                continue;
            }
            let energy = self.vacuum_energy + self.spec.omega(k).abs();
            let idx = (k + self.spec.half()) as usize;
            out.amps[idx] = self.amps[idx] * phase(-eps * steps as f64 * energy);
        }
        out
    }

    /// The rephased momentum wave: the vacuum phase is stripped and the
    /// hole branch conjugated, so that one step multiplies every
    /// amplitude by the same drift phase `exp(-i s omega(k) epsilon)`.
    pub fn rephased_momentum(&self) -> Vec<Complex64> {
        let s = self.chirality.sign();
        let mut out = vec![c(0.0, 0.0); self.spec.n_x];
        for k in self.spec.momenta() {
            if k == 0 {
                continue;
            }
            let idx = (k + self.spec.half()) as usize;
            out[idx] = if (k as f64) * s > 0.0 {
                phase(self.t * self.vacuum_energy) * self.amps[idx]
            } else {
                phase(-self.t * self.vacuum_energy) * self.amps[idx].conj()
            };
        }
        out
    }

    /// The rephased position wave `phi(t, j)`, indexed by site position:
    /// the uniform inverse Fourier transform of the rephased momentum
    /// wave. One step shifts it rigidly by one site in the drift
    /// direction.
    pub fn rephased_position(&self) -> Vec<Complex64> {
        let rep = self.rephased_momentum();
        let n = self.spec.n_x as f64;
        let mut out = vec![c(0.0, 0.0); self.spec.n_x];
        for j in self.spec.sites() {
            let mut acc = c(0.0, 0.0);
            for k in self.spec.momenta() {
                let ph = phase(2.0 * PI * (k * j) as f64 / n);
                acc += ph * rep[(k + self.spec.half()) as usize];
            }
            out[self.spec.pos(j)] = acc.scale(1.0 / n.sqrt());
        }
        out
    }

    /// Realizes the excitation in the automaton's Hilbert space:
    /// `sum_k phi(t, k) (raise(k) + lower(k))` applied to the vacuum.
    /// The vacuum absorbs the branch split: raising acts on the particle
    /// branch, lowering on the hole branch, and the result is a unit
    /// vector.
    pub fn hilbert_state(
        &self,
        vac: &VacuumState,
        modes: &MomentumModes,
    ) -> Result<Vec<Complex64>> {
        if modes.dim() != vac.dim() {
            return Err(PcaError::Dimension(format!(
                "momentum modes act on dimension {}, vacuum has {}",
                modes.dim(),
                vac.dim()
            )));
        }
        let expected_plane = match (self.spec.species, self.chirality) {
            (Species::Dirac, Chirality::Left) => 1,
            _ => 0,
        };
        if modes.plane() != expected_plane {
            return Err(PcaError::Input(format!(
                "the {} excitation lives on plane {expected_plane}, but the modes \
                 are the Fourier ladders of plane {}",
                self.chirality.label(),
                modes.plane()
            )));
        }
        let mut out = vec![c(0.0, 0.0); vac.dim()];
        for k in self.spec.momenta() {
            let amp = self.amplitude(k);
            if amp.norm_sqr() == 0.0 {
                continue;
            }
            let raised = modes.raise(k).apply(vac.state());
            let lowered = modes.lower(k).apply(vac.state());
            for (o, (r, l)) in out.iter_mut().zip(raised.iter().zip(lowered)) {
                *o += amp * (r + l);
            }
        }
        Ok(out)
    }
}

/// Advances a one-particle excitation by the given number of automaton
/// steps.
pub fn one_particle_evolve(wave: &OneParticleWave, steps: i64) -> OneParticleWave {
    wave.evolve(steps)
}

/// Maximal pointwise residual of the two-component first-order wave
/// equation on a stack of equal-time layers, using symmetric lattice
/// derivatives in both directions.
///
/// Each layer holds one `[right, left]` pair per site position; layers
/// are `epsilon` apart in time and sites `epsilon` apart on the ring. At
/// every interior time slice the residual components are
/// `d_t phi_R + d_x phi_R` and `d_t phi_L - d_x phi_L`; a wave generated
/// by the automaton's rigid drift satisfies both exactly.
pub fn dirac_residual(layers: &[Vec<[Complex64; 2]>], epsilon: f64) -> Result<f64> {
    if layers.len() < 3 {
        return Err(PcaError::Input(format!(
            "the symmetric time derivative needs at least 3 layers, got {}",
            layers.len()
        )));
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(PcaError::Input(format!(
            "layer spacing must be positive and finite, got {epsilon}"
        )));
    }
    let n = layers[0].len();
    if n < 3 {
        return Err(PcaError::Input(format!(
            "the symmetric space derivative needs at least 3 sites, got {n}"
        )));
    }
    if layers.iter().any(|l| l.len() != n) {
        return Err(PcaError::Dimension(
            "all layers must cover the same ring".into(),
        ));
    }
    let half_inv = 1.0 / (2.0 * epsilon);
    let mut worst = 0.0f64;
    for t in 1..layers.len() - 1 {
        for p in 0..n {
            let fwd = &layers[t + 1][p];
            let bwd = &layers[t - 1][p];
            let right = &layers[t][(p + 1) % n];
            let left = &layers[t][(p + n - 1) % n];
            for comp in 0..2 {
                let dt = (fwd[comp] - bwd[comp]).scale(half_inv);
                let dx = (right[comp] - left[comp]).scale(half_inv);
                // right-movers drift right, left-movers drift left
                let res = if comp == 0 { dt + dx } else { dt - dx };
                worst = worst.max(res.norm());
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fermion::{charge_operators, ground_energy};
    use crate::perm::SignedPermutation;
    use crate::symmetry::{DiscreteTransform, TransformKind};
    use proptest::prelude::*;

    fn spec_mw(n: usize) -> LatticeSpec {
        LatticeSpec::new(n, Species::MwR).unwrap()
    }

    fn spec_mwl(n: usize) -> LatticeSpec {
        LatticeSpec::new(n, Species::MwL).unwrap()
    }

    fn spec_dirac(n: usize) -> LatticeSpec {
        LatticeSpec::new(n, Species::Dirac).unwrap()
    }

    fn dist(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    fn scaled(v: &[Complex64], z: Complex64) -> Vec<Complex64> {
        v.iter().map(|x| x * z).collect()
    }

    #[test]
    fn kind_names_and_parse() {
        for kind in VacuumKind::ALL {
            assert_eq!(VacuumKind::parse(kind.name()).unwrap(), kind);
        }
        assert_eq!(
            VacuumKind::parse("UNIFORM").unwrap(),
            VacuumKind::Equipartition
        );
        assert!(VacuumKind::parse("flat").is_err());
    }

    #[test]
    fn empty_vacuum_facts() {
        let spec = spec_mw(5);
        let vac = build_vacuum(&spec, VacuumKind::Empty).unwrap();
        assert_eq!(vac.dim(), 32);
        assert_eq!(vac.state()[0], c(1.0, 0.0));
        assert!(vac.state()[1..].iter().all(|z| z.norm() == 0.0));
        assert_eq!(vac.energy(), 0.0);

        let ladders = build_ladders(&spec, LadderFamily::SignString).unwrap();
        let fillings = half_filling_check(&vac, &ladders).unwrap();
        assert!(fillings.iter().all(|f| f.abs() < 1e-15));

        // It is an exact eigenstate of the free Hamiltonian with
        // eigenvalue zero.
        let modes = fourier_modes(&ladders).unwrap();
        let h = hamiltonian_mw(&modes, Chirality::Right).h;
        assert!(norm2(&h.apply(vac.state())) < 1e-12);
    }

    #[test]
    fn equipartition_facts() {
        let spec = spec_mw(5);
        let vac = build_vacuum(&spec, VacuumKind::Equipartition).unwrap();
        let amp = 1.0 / 32f64.sqrt();
        assert!(vac.state().iter().all(|z| (z - c(amp, 0.0)).norm() < 1e-15));

        // Total charge vanishes and every site sits at half filling.
        let ladders = build_ladders(&spec, LadderFamily::SignString).unwrap();
        let modes = fourier_modes(&ladders).unwrap();
        let charges = charge_operators(&ladders, &modes).unwrap();
        assert!(charges.total.expectation(vac.state(), vac.state()).norm() < 1e-12);
        let fillings = half_filling_check(&vac, &ladders).unwrap();
        assert!(fillings.iter().all(|f| (f - 0.5).abs() < 1e-12));

        // Zero energy expectation, though not an eigenstate.
        let h = hamiltonian_mw(&modes, Chirality::Right).h;
        assert!(h.expectation(vac.state(), vac.state()).norm() < 1e-12);
        assert!(norm2(&h.apply(vac.state())) > 0.1);

        // The occupation-complementing map permutes configurations, so
        // the uniform probability vector is exactly invariant.
        let t_c = DiscreteTransform::new(&spec, TransformKind::C).unwrap();
        let image = t_c.apply_wave(vac.state()).unwrap();
        let probs: Vec<f64> = image.iter().map(|z| z.norm_sqr()).collect();
        assert!(probs.iter().all(|p| (p - 1.0 / 32.0).abs() < 1e-14));
    }

    #[test]
    fn paired_vacuum_energy_and_basic_facts() {
        let spec = spec_mw(5);
        let vac = build_vacuum(&spec, VacuumKind::ParticleMw).unwrap();

        // Construction matches the momentum-space product state.
        let ladders = build_ladders(&spec, LadderFamily::SignString).unwrap();
        let modes = fourier_modes(&ladders).unwrap();
        let direct = paired_ground_state(&modes).unwrap();
        assert!(dist(vac.state(), &direct) < 1e-15);

        // Measured energy equals the closed form -6 pi / 5 at n_x = 5.
        assert!((vac.energy() - (-6.0 * PI / 5.0)).abs() < 1e-10);
        assert!((vac.energy() - ground_energy(&spec)).abs() < 1e-10);

        // Unit norm; supported only on the two middle occupation sectors.
        assert!((norm2(vac.state()) - 1.0).abs() < 1e-12);
        let basis = BasisIndexing::new(&spec).unwrap();
        for tau in 0..basis.dim() {
            let n = basis.particle_number(tau);
            if vac.state()[tau].norm() > 1e-14 {
                assert!(n == 2 || n == 3, "config {tau} has {n} particles");
            }
        }
    }

    #[test]
    fn paired_vacuum_charges_and_filling() {
        let spec = spec_mw(5);
        let vac = build_vacuum(&spec, VacuumKind::ParticleMw).unwrap();
        let ladders = build_ladders(&spec, LadderFamily::SignString).unwrap();
        let modes = fourier_modes(&ladders).unwrap();

        // Half filling at every site; total occupation n_x / 2.
        let fillings = half_filling_check(&vac, &ladders).unwrap();
        assert!(fillings.iter().all(|f| (f - 0.5).abs() < 1e-12));
        let total = modes
            .number_total()
            .expectation(vac.state(), vac.state())
            .re;
        assert!((total - 2.5).abs() < 1e-12);

        // The reduced charge annihilates the vacuum; the symmetric total
        // charge has zero expectation.
        let charges = charge_operators(&ladders, &modes).unwrap();
        assert!(norm2(&charges.reduced.apply(vac.state())) < 1e-12);
        assert!(charges.total.expectation(vac.state(), vac.state()).norm() < 1e-12);

        // Zero-mode pairing: the vacuum is the z-eigenstate of
        // raise(0) + lower(0) with z = -1 at n_x = 5.
        let z = zero_pairing_sign(5);
        assert_eq!(z, -1.0);
        let paired = modes.raise(0).add(modes.lower(0)).unwrap();
        let image = paired.apply(vac.state());
        assert!(dist(&image, &scaled(vac.state(), c(z, 0.0))) < 1e-12);

        // Particle-hole involution fixes it; conjugation does not.
        let t_c = DiscreteTransform::new(&spec, TransformKind::C).unwrap();
        let b_image = t_c.linear().apply_complex(vac.state());
        assert!(dist(&b_image, vac.state()) < 1e-12);
        let c_image = t_c.apply_wave(vac.state()).unwrap();
        assert!(dist(&c_image, vac.state()) > 0.5);
    }

    #[test]
    fn paired_vacuum_step_phase() {
        // One transport step multiplies the one-plane vacuum by
        // exp(-i epsilon E0), exactly.
        let spec = spec_mw(5);
        let vac = build_vacuum(&spec, VacuumKind::ParticleMw).unwrap();
        let basis = BasisIndexing::new(&spec).unwrap();
        let stepped = basis.transport_permutation().apply_complex(vac.state());
        let expected = scaled(vac.state(), phase(-spec.epsilon * vac.energy()));
        assert!(dist(&stepped, &expected) < 1e-12);
    }

    #[test]
    fn left_mover_vacuum_mirrors_the_right_one() {
        let spec = spec_mwl(5);
        let vac = build_vacuum(&spec, VacuumKind::ParticleMw).unwrap();
        assert!((vac.energy() - ground_energy(&spec)).abs() < 1e-10);

        // Fill pattern is mirrored: positive momenta occupied.
        let ladders = build_ladders(&spec, LadderFamily::SignString).unwrap();
        let modes = fourier_modes(&ladders).unwrap();
        for k in spec.momenta() {
            let got = modes.number(k).expectation(vac.state(), vac.state()).re;
            let want = if k == 0 {
                0.5
            } else if k > 0 {
                1.0
            } else {
                0.0
            };
            assert!((got - want).abs() < 1e-12, "occupation at {k}");
        }

        // Particle-hole involution fixes it, and the left transport step
        // yields the same vacuum phase.
        let t_c = DiscreteTransform::new(&spec, TransformKind::C).unwrap();
        assert!(dist(&t_c.linear().apply_complex(vac.state()), vac.state()) < 1e-12);
        let basis = BasisIndexing::new(&spec).unwrap();
        let stepped = basis.transport_permutation().apply_complex(vac.state());
        let expected = scaled(vac.state(), phase(-spec.epsilon * vac.energy()));
        assert!(dist(&stepped, &expected) < 1e-12);
    }

    #[test]
    fn two_plane_vacuum_energy_momentum_and_step() {
        let spec = spec_dirac(5);
        let vac = build_vacuum(&spec, VacuumKind::ParticleDirac).unwrap();

        // Twice the one-plane energy, measured.
        assert!((vac.energy() - 2.0 * ground_energy(&spec)).abs() < 1e-10);
        assert!((vac.energy() - (-12.0 * PI / 5.0)).abs() < 1e-10);

        // Zero total momentum, and exact invariance under the common
        // one-site shift of both planes.
        let basis = BasisIndexing::new(&spec).unwrap();
        let shift = SignedPermutation::from_fn(basis.dim(), |tau| {
            basis.map_modes(tau, |m| {
                let g = m / 5;
                let p = m % 5;
                g * 5 + (p + 1) % 5
            })
        })
        .unwrap();
        assert!(dist(&shift.apply_complex(vac.state()), vac.state()) < 1e-12);

        // One automaton step gives the doubled vacuum phase.
        let stepped = basis.transport_permutation().apply_complex(vac.state());
        let expected = scaled(vac.state(), phase(-spec.epsilon * vac.energy()));
        assert!(dist(&stepped, &expected) < 1e-12);

        // Half filling across both planes.
        let ladders = build_ladders(&spec, LadderFamily::SignString).unwrap();
        let fillings = half_filling_check(&vac, &ladders).unwrap();
        assert_eq!(fillings.len(), 10);
        assert!(fillings.iter().all(|f| (f - 0.5).abs() < 1e-12));
    }

    #[test]
    fn two_plane_vacuum_symmetry_verdicts() {
        // Invariant under P, CT, CPT; not under C, T, PT. The two
        // time-reflecting linear kinds act here through their linear
        // parts (the vacuum is one time slice of a static state).
        let spec = spec_dirac(5);
        let vac = build_vacuum(&spec, VacuumKind::ParticleDirac).unwrap();

        for kind in [TransformKind::P, TransformKind::Ct, TransformKind::Cpt] {
            let tr = DiscreteTransform::new(&spec, kind).unwrap();
            let image = tr.apply_wave(vac.state()).unwrap();
            assert!(
                dist(&image, vac.state()) < 1e-12,
                "{kind} should fix the two-plane vacuum"
            );
        }

        let t_c = DiscreteTransform::new(&spec, TransformKind::C).unwrap();
        let c_image = t_c.apply_wave(vac.state()).unwrap();
        assert!(dist(&c_image, vac.state()) > 0.5, "C must not fix it");

        for kind in [TransformKind::T, TransformKind::Pt] {
            let tr = DiscreteTransform::new(&spec, kind).unwrap();
            assert!(tr.apply_wave(vac.state()).is_err());
            let image = tr.linear().apply_complex(vac.state());
            assert!(
                dist(&image, vac.state()) > 0.5,
                "{kind} linear part must not fix it"
            );
        }
    }

    #[test]
    fn combinatorial_expansion_cross_check() {
        // The lower occupation sector of the one-plane vacuum, expanded
        // combinatorially: sum over ordered pairs of distinct sites with
        // the Fourier phases of the two filled momenta and the fermionic
        // reordering signs, weight 1/(n sqrt(2)) — compared against the
        // sector projection of the built state.
        let spec = spec_mw(5);
        let vac = build_vacuum(&spec, VacuumKind::ParticleMw).unwrap();
        let basis = BasisIndexing::new(&spec).unwrap();

        let mut expansion = vec![c(0.0, 0.0); basis.dim()];
        for ja in spec.sites() {
            for jb in spec.sites() {
                if ja == jb {
                    continue;
                }
                // filled modes: k = -1 picks e^{-2 pi i ja / 5} on the
                // outer operator, k = -2 picks e^{-4 pi i jb / 5} on the
                // inner (first-applied) one; the slice is in operator
                // order, outer first
                let ph = phase(-2.0 * PI * (ja + 2 * jb) as f64 / 5.0);
                let (tau, sign) = basis
                    .creation_product(&[basis.mode(0, spec.pos(ja)), basis.mode(0, spec.pos(jb))])
                    .unwrap();
                expansion[tau] += ph.scale(sign as f64 / (5.0 * 2.0f64.sqrt()));
            }
        }

        let mut projected = vac.state().to_vec();
        for (tau, amp) in projected.iter_mut().enumerate() {
            if basis.particle_number(tau) != 2 {
                *amp = c(0.0, 0.0);
            }
        }
        assert!((norm2(&expansion) - 0.5f64.sqrt()).abs() < 1e-12);
        assert!(dist(&expansion, &projected) < 1e-12);
    }

    #[test]
    fn one_particle_rejects_bad_input() {
        let spec = spec_dirac(5);
        let vac = build_vacuum(&spec, VacuumKind::ParticleDirac).unwrap();

        // Nonzero zero-momentum amplitude.
        let mut amps = vec![c(0.0, 0.0); 5];
        amps[2] = c(1.0, 0.0);
        assert!(OneParticleWave::from_momentum(&vac, Chirality::Right, &amps).is_err());

        // All-zero amplitudes.
        let zeros = vec![c(0.0, 0.0); 5];
        assert!(OneParticleWave::from_momentum(&vac, Chirality::Right, &zeros).is_err());

        // Non-particle vacuum.
        let empty = build_vacuum(&spec, VacuumKind::Empty).unwrap();
        let mut ok = vec![c(0.0, 0.0); 5];
        ok[3] = c(1.0, 0.0);
        assert!(OneParticleWave::from_momentum(&empty, Chirality::Right, &ok).is_err());

        // Wrong plane for a one-plane species.
        let mw = build_vacuum(&spec_mw(5), VacuumKind::ParticleMw).unwrap();
        assert!(OneParticleWave::from_momentum(&mw, Chirality::Left, &ok).is_err());

        // Position wave with a uniform component.
        let mut delta = vec![c(0.0, 0.0); 5];
        delta[1] = c(1.0, 0.0);
        assert!(OneParticleWave::from_rephased_position(&vac, Chirality::Right, &delta).is_err());
    }

    #[test]
    fn vacuum_kind_species_mismatches() {
        assert!(build_vacuum(&spec_dirac(5), VacuumKind::ParticleMw).is_err());
        assert!(build_vacuum(&spec_mw(5), VacuumKind::ParticleDirac).is_err());
        // The pairing needs n_x = 1 mod 4.
        assert!(matches!(
            build_vacuum(&spec_mw(7), VacuumKind::ParticleMw),
            Err(PcaError::Lattice(_))
        ));
        assert!(matches!(
            build_vacuum(&spec_dirac(7), VacuumKind::ParticleDirac),
            Err(PcaError::Lattice(_))
        ));
        // The sizeless kinds work for any odd ring.
        assert!(build_vacuum(&spec_mw(7), VacuumKind::Empty).is_ok());
        assert!(build_vacuum(&spec_dirac(7), VacuumKind::Equipartition).is_ok());
    }

    #[test]
    fn momentum_eigenstate_energies_and_charges() {
        // A single-momentum excitation is an eigenstate: energy above the
        // vacuum is omega(k) = 2 pi k / L on the particle branch, and the
        // reduced charge distinguishes the branches.
        let spec = spec_mw(5);
        let vac = build_vacuum(&spec, VacuumKind::ParticleMw).unwrap();
        let ladders = build_ladders(&spec, LadderFamily::SignString).unwrap();
        let modes = fourier_modes(&ladders).unwrap();
        let h = hamiltonian_mw(&modes, Chirality::Right).h;
        let charges = charge_operators(&ladders, &modes).unwrap();

        for (k, charge) in [(1i64, 1.0), (2, 1.0), (-1, -1.0), (-2, -1.0)] {
            let mut amps = vec![c(0.0, 0.0); 5];
            amps[(k + 2) as usize] = c(1.0, 0.0);
            let wave = OneParticleWave::from_momentum(&vac, Chirality::Right, &amps).unwrap();
            let state = wave.hilbert_state(&vac, &modes).unwrap();
            assert!((norm2(&state) - 1.0).abs() < 1e-12, "norm at {k}");

            let (energy, residual) = measured_eigenvalue(&h, &state);
            assert!(residual < 1e-10, "eigen-residual at {k}");
            let gap = energy - vac.energy();
            assert!(
                (gap - spec.omega(k).abs()).abs() < 1e-10,
                "excitation energy at {k}: {gap}"
            );

            let q_image = charges.reduced.apply(&state);
            assert!(
                dist(&q_image, &scaled(&state, c(charge, 0.0))) < 1e-10,
                "charge at {k}"
            );

            let (particle, hole) = wave.sector_norms();
            if charge > 0.0 {
                assert!((particle, hole) == (1.0, 0.0));
            } else {
                assert!((particle, hole) == (0.0, 1.0));
            }
        }
    }

    #[test]
    fn full_hilbert_evolution_matches_the_phase_law() {
        // Evolving the amplitudes by the phase law and realizing the
        // result in the full space agrees with applying the automaton's
        // step operator to the realized excitation — on both planes of
        // the doubled automaton and on the one-plane ring.
        let amps_raw = [
            c(0.30, -0.44),
            c(-0.12, 0.87),
            c(0.0, 0.0),
            c(0.52, 0.11),
            c(-0.29, 0.35),
        ];

        let spec = spec_dirac(5);
        let vac = build_vacuum(&spec, VacuumKind::ParticleDirac).unwrap();
        let ladders = build_ladders(&spec, LadderFamily::SignString).unwrap();
        let basis = BasisIndexing::new(&spec).unwrap();
        let step = basis.transport_permutation();
        for (chirality, plane) in [(Chirality::Right, 0usize), (Chirality::Left, 1usize)] {
            let modes = fourier_modes_for_plane(&ladders, plane).unwrap();
            let wave = OneParticleWave::from_momentum(&vac, chirality, &amps_raw).unwrap();
            let mut full = wave.hilbert_state(&vac, &modes).unwrap();
            for steps in 1..=3 {
                full = step.apply_complex(&full);
                let advanced = wave.evolve(steps).hilbert_state(&vac, &modes).unwrap();
                assert!(
                    dist(&full, &advanced) < 1e-10,
                    "{} plane after {steps} steps",
                    chirality.label()
                );
            }
        }

        let spec1 = spec_mw(5);
        let vac1 = build_vacuum(&spec1, VacuumKind::ParticleMw).unwrap();
        let ladders1 = build_ladders(&spec1, LadderFamily::SignString).unwrap();
        let modes1 = fourier_modes(&ladders1).unwrap();
        let basis1 = BasisIndexing::new(&spec1).unwrap();
        let step1 = basis1.transport_permutation();
        let wave1 = OneParticleWave::from_momentum(&vac1, Chirality::Right, &amps_raw).unwrap();
        let mut full1 = wave1.hilbert_state(&vac1, &modes1).unwrap();
        for steps in 1..=3 {
            full1 = step1.apply_complex(&full1);
            let advanced = wave1.evolve(steps).hilbert_state(&vac1, &modes1).unwrap();
            assert!(dist(&full1, &advanced) < 1e-10, "one plane, {steps} steps");
        }
    }

    #[test]
    fn rephased_wave_shifts_rigidly() {
        let spec = spec_dirac(5);
        let vac = build_vacuum(&spec, VacuumKind::ParticleDirac).unwrap();

        // A localized bump (delta minus its uniform part).
        let mut bump = vec![c(-0.2, 0.0); 5];
        bump[3] += c(1.0, 0.0);

        for (chirality, drift) in [(Chirality::Right, 1i64), (Chirality::Left, -1i64)] {
            let wave = OneParticleWave::from_rephased_position(&vac, chirality, &bump).unwrap();
            let before = wave.rephased_position();
            let after = wave.evolve(1).rephased_position();
            // after(j) = before(j - drift), exactly
            let n = 5i64;
            for (p, moved) in after.iter().enumerate() {
                let q = ((p as i64 - drift).rem_euclid(n)) as usize;
                assert!(
                    (moved - before[q]).norm() < 1e-12,
                    "{} drift at position {p}",
                    chirality.label()
                );
            }
            // the bump profile is reproduced at t = 0
            let scale = before[3].re / bump[3].re;
            let rescaled: Vec<Complex64> = bump.iter().map(|z| z.scale(scale)).collect();
            assert!(dist(&before, &rescaled) < 1e-12);
        }
    }

    #[test]
    fn automaton_wave_solves_the_first_order_system() {
        let spec = spec_dirac(5);
        let vac = build_vacuum(&spec, VacuumKind::ParticleDirac).unwrap();

        let right_amps = [
            c(0.41, 0.10),
            c(-0.33, 0.25),
            c(0.0, 0.0),
            c(0.18, -0.52),
            c(0.27, 0.44),
        ];
        let left_amps = [
            c(-0.21, 0.36),
            c(0.55, 0.08),
            c(0.0, 0.0),
            c(-0.14, -0.31),
            c(0.43, 0.19),
        ];
        let wr = OneParticleWave::from_momentum(&vac, Chirality::Right, &right_amps).unwrap();
        let wl = OneParticleWave::from_momentum(&vac, Chirality::Left, &left_amps).unwrap();

        let layers: Vec<Vec<[Complex64; 2]>> = (0..5)
            .map(|t| {
                let r = wr.evolve(t).rephased_position();
                let l = wl.evolve(t).rephased_position();
                r.iter().zip(l).map(|(a, b)| [*a, b]).collect()
            })
            .collect();
        let residual = dirac_residual(&layers, spec.epsilon).unwrap();
        assert!(residual < 1e-12, "automaton wave residual {residual}");

        // A constant wave also solves the system trivially.
        let flat = vec![vec![[c(0.3, -0.1), c(-0.7, 0.2)]; 5]; 4];
        assert!(dirac_residual(&flat, 1.0).unwrap() < 1e-15);

        // Breaking one entry breaks the equation.
        let mut broken = layers.clone();
        broken[2][1][0] += c(0.05, 0.0);
        assert!(dirac_residual(&broken, spec.epsilon).unwrap() > 1e-3);

        // Too few layers is an input error.
        assert!(dirac_residual(&layers[..2], spec.epsilon).is_err());
        assert!(dirac_residual(&layers, 0.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn evolution_composes_and_preserves_structure(
            re in proptest::collection::vec(-1.0f64..1.0, 5),
            im in proptest::collection::vec(-1.0f64..1.0, 5),
            k1 in -4i64..4,
            k2 in -4i64..4,
        ) {
            let spec = spec_mw(5);
            let vac = build_vacuum(&spec, VacuumKind::ParticleMw).unwrap();
            let mut amps: Vec<Complex64> =
                re.iter().zip(&im).map(|(a, b)| c(*a, *b)).collect();
            amps[2] = c(0.0, 0.0);
            prop_assume!(norm2(&amps) > 1e-3);
            let wave = OneParticleWave::from_momentum(&vac, Chirality::Right, &amps).unwrap();

            // unit norm, both in momentum and in rephased position space
            prop_assert!((norm2(wave.momentum_amplitudes()) - 1.0).abs() < 1e-12);
            prop_assert!((norm2(&wave.rephased_position()) - 1.0).abs() < 1e-12);
            let (particle, hole) = wave.sector_norms();
            prop_assert!((particle + hole - 1.0).abs() < 1e-12);

            // steps compose additively and invert exactly
            let once = wave.evolve(k1).evolve(k2);
            let both = wave.evolve(k1 + k2);
            prop_assert!(dist(once.momentum_amplitudes(), both.momentum_amplitudes()) < 1e-12);
            let back = wave.evolve(k1).evolve(-k1);
            prop_assert!(dist(back.momentum_amplitudes(), wave.momentum_amplitudes()) < 1e-12);
            prop_assert!((norm2(once.momentum_amplitudes()) - 1.0).abs() < 1e-12);
        }
    }
}
