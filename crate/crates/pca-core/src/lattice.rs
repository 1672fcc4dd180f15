//! Spatial lattice, spin/occupation configurations, and configuration-level
//! dynamics.
//!
//! Sites live on a periodic chain with an odd number of points `n_x` and are
//! labeled by integer coordinates `j` running from `-(n_x-1)/2` to
//! `(n_x-1)/2`. Bit position `p = j + (n_x-1)/2` indexes storage. Each
//! species carries one or more bit planes; a plane holds one occupation
//! number (0 or 1) per site, equivalently an Ising spin `s = 2n - 1`.

use crate::bits::BitPlane;
use crate::error::{PcaError, Result};
use rand::distr::weighted::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Directed particle content carried by the lattice.
///
/// Plane order and drift directions:
/// - `MwR`: one plane, drift +1 per step.
/// - `MwL`: one plane, drift -1 per step.
/// - `Dirac`: planes `[R, L]` with drifts `[+1, -1]`.
/// - `ColoredDirac`: planes `[R1, R2, L1, L2]` with drifts `[+1, +1, -1, -1]`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Species {
    MwR,
    MwL,
    Dirac,
    ColoredDirac,
}

impl Species {
    pub fn plane_count(&self) -> usize {
        match self {
            Species::MwR | Species::MwL => 1,
            Species::Dirac => 2,
            Species::ColoredDirac => 4,
        }
    }

    /// Drift per time step of the given plane, in units of the lattice spacing.
    pub fn plane_shift(&self, plane: usize) -> i64 {
        match self {
            Species::MwR => [1][plane],
            Species::MwL => [-1][plane],
            Species::Dirac => [1, -1][plane],
            Species::ColoredDirac => [1, 1, -1, -1][plane],
        }
    }

    pub fn plane_label(&self, plane: usize) -> &'static str {
        match self {
            Species::MwR => ["R"][plane],
            Species::MwL => ["L"][plane],
            Species::Dirac => ["R", "L"][plane],
            Species::ColoredDirac => ["R1", "R2", "L1", "L2"][plane],
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "mw-r" | "mwr" | "right" => Ok(Species::MwR),
            "mw-l" | "mwl" | "left" => Ok(Species::MwL),
            "dirac" => Ok(Species::Dirac),
            "colored" | "colored-dirac" => Ok(Species::ColoredDirac),
            other => Err(PcaError::Input(format!("unknown species {other:?}"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Species::MwR => "mw-r",
            Species::MwL => "mw-l",
            Species::Dirac => "dirac",
            Species::ColoredDirac => "colored-dirac",
        }
    }
}

/// Geometry and particle content of one simulation.
#[derive(Clone, Copy, Debug)]
pub struct LatticeSpec {
    pub n_x: usize,
    pub epsilon: f64,
    pub species: Species,
}

impl LatticeSpec {
    pub fn new(n_x: usize, species: Species) -> Result<Self> {
        if n_x < 3 || n_x % 2 == 0 {
            return Err(PcaError::Lattice(format!(
                "site count must be odd and at least 3, got {n_x}"
            )));
        }
        Ok(LatticeSpec {
            n_x,
            epsilon: 1.0,
            species,
        })
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(PcaError::Lattice(format!(
                "lattice spacing must be positive and finite, got {epsilon}"
            )));
        }
        self.epsilon = epsilon;
        Ok(self)
    }

    /// Largest site coordinate; sites run from `-half()` to `half()`.
    pub fn half(&self) -> i64 {
        ((self.n_x - 1) / 2) as i64
    }

    pub fn sites(&self) -> impl Iterator<Item = i64> {
        -self.half()..=self.half()
    }

    /// Bit position of site `j`.
    pub fn pos(&self, j: i64) -> usize {
        let h = self.half();
        debug_assert!(j >= -h && j <= h, "site {j} outside [-{h}, {h}]");
        (j + h) as usize
    }

    /// Site coordinate stored at bit position `p`.
    pub fn site(&self, p: usize) -> i64 {
        debug_assert!(p < self.n_x);
        p as i64 - self.half()
    }

    /// Circumference of the spatial circle.
    pub fn length(&self) -> f64 {
        self.n_x as f64 * self.epsilon
    }

    /// Integer momentum labels; physical momentum is `2*pi*k / length()`.
    pub fn momenta(&self) -> impl Iterator<Item = i64> {
        -self.half()..=self.half()
    }

    /// Angular frequency of momentum label `k` for a right mover.
    pub fn omega(&self, k: i64) -> f64 {
        2.0 * PI * k as f64 / self.length()
    }

    /// Total number of fermionic modes (sites times planes).
    pub fn mode_count(&self) -> usize {
        self.n_x * self.species.plane_count()
    }

    /// Complexification by the half-turn site map requires `n_x = 1 mod 4`.
    pub fn supports_complex_structure(&self) -> bool {
        self.n_x % 4 == 1
    }

    /// Three-site cell updates require the site count to be a multiple of 3;
    /// combined with the complex-structure condition this means `n_x = 9 mod 12`.
    pub fn cell_anchors(&self) -> Result<impl Iterator<Item = usize>> {
        if self.n_x % 3 != 0 {
            return Err(PcaError::Lattice(format!(
                "three-site cells need n_x divisible by 3, got {}",
                self.n_x
            )));
        }
        Ok((0..self.n_x).step_by(3))
    }
}

/// Occupation numbers for every plane of a species on one time slice.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct SpinConfig {
    planes: Vec<BitPlane>,
}

impl SpinConfig {
    pub fn empty(spec: &LatticeSpec) -> Self {
        SpinConfig {
            planes: vec![BitPlane::zeros(spec.n_x); spec.species.plane_count()],
        }
    }

    pub fn filled(spec: &LatticeSpec) -> Self {
        SpinConfig {
            planes: vec![BitPlane::ones(spec.n_x); spec.species.plane_count()],
        }
    }

    pub fn from_planes(planes: Vec<BitPlane>) -> Result<Self> {
        if planes.is_empty() {
            return Err(PcaError::Input(
                "configuration needs at least one plane".into(),
            ));
        }
        let len = planes[0].len();
        if planes.iter().any(|p| p.len() != len) {
            return Err(PcaError::Input("all planes must have equal length".into()));
        }
        Ok(SpinConfig { planes })
    }

    pub fn plane(&self, g: usize) -> &BitPlane {
        &self.planes[g]
    }

    pub fn plane_mut(&mut self, g: usize) -> &mut BitPlane {
        &mut self.planes[g]
    }

    pub fn plane_count(&self) -> usize {
        self.planes.len()
    }

    pub fn sites(&self) -> usize {
        self.planes[0].len()
    }

    /// Occupation number at bit position `p` of plane `g`.
    pub fn occ(&self, g: usize, p: usize) -> bool {
        self.planes[g].get(p)
    }

    pub fn set_occ(&mut self, g: usize, p: usize, value: bool) {
        self.planes[g].set(p, value);
    }

    /// Ising spin `2n - 1` at bit position `p` of plane `g`.
    pub fn spin(&self, g: usize, p: usize) -> i8 {
        if self.occ(g, p) {
            1
        } else {
            -1
        }
    }

    pub fn total_occupation(&self, g: usize) -> usize {
        self.planes[g].count_ones()
    }

    /// Drifts every plane by its species shift (cyclic).
    pub fn transport(&mut self, species: Species) {
        for (g, plane) in self.planes.iter_mut().enumerate() {
            match species.plane_shift(g) {
                1 => plane.rotate_up(),
                -1 => plane.rotate_down(),
                other => unreachable!("unsupported drift {other}"),
            }
        }
    }

    /// Reverses every drift (cyclic).
    pub fn transport_inverse(&mut self, species: Species) {
        for (g, plane) in self.planes.iter_mut().enumerate() {
            match species.plane_shift(g) {
                1 => plane.rotate_down(),
                -1 => plane.rotate_up(),
                other => unreachable!("unsupported drift {other}"),
            }
        }
    }

    /// Flips every occupation number on every plane.
    pub fn complement(&mut self) {
        for plane in self.planes.iter_mut() {
            plane.complement();
        }
    }

    /// Reflects every plane through the center site (`j -> -j`).
    pub fn reflect(&mut self) {
        for plane in self.planes.iter_mut() {
            plane.reverse();
        }
    }

    pub fn swap_planes(&mut self, a: usize, b: usize) {
        self.planes.swap(a, b);
    }

    /// Packed integer index: plane 0 occupies the most significant block,
    /// and within each plane bit position 0 is the most significant bit.
    pub fn to_index(&self) -> u64 {
        let len = self.sites();
        assert!(len * self.planes.len() <= 63);
        let mut tau = 0u64;
        for plane in &self.planes {
            tau = (tau << len) | plane.to_index();
        }
        tau
    }

    pub fn from_index(spec: &LatticeSpec, tau: u64) -> Self {
        let len = spec.n_x;
        let count = spec.species.plane_count();
        assert!(len * count <= 63);
        let mut planes = Vec::with_capacity(count);
        for g in 0..count {
            let shift = (count - 1 - g) * len;
            let part = (tau >> shift) & ((1u64 << len) - 1);
            planes.push(BitPlane::from_index(len, part));
        }
        SpinConfig { planes }
    }

    /// Text form: planes joined by `|`, each a `0`/`1` string with the most
    /// negative site first.
    pub fn format(&self) -> String {
        self.planes
            .iter()
            .map(|p| p.to_string())
            .collect::<Vec<_>>()
            .join("|")
    }

    pub fn parse(s: &str) -> Result<Self> {
        let planes = s
            .split('|')
            .map(BitPlane::parse)
            .collect::<Result<Vec<_>>>()?;
        Self::from_planes(planes)
    }
}

/// Local update table applied to disjoint cells of `width` consecutive sites
/// across all planes.
///
/// The table index packs the cell's occupation numbers plane-major, most
/// significant bit first: for two planes of width 3 the index bits are
/// `(r-, r0, r+, l-, l0, l+)` where `-`/`0`/`+` are the three sites of the
/// cell in ascending coordinate order.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CellRule {
    width: usize,
    planes: usize,
    table: Vec<u16>,
}

impl CellRule {
    pub fn new(width: usize, planes: usize, table: Vec<u16>) -> Result<Self> {
        let bits = width * planes;
        if bits == 0 || bits > 16 {
            return Err(PcaError::Rule(format!(
                "cell carries {bits} bits, supported range is 1..=16"
            )));
        }
        let size = 1usize << bits;
        if table.len() != size {
            return Err(PcaError::Rule(format!(
                "table has {} entries, expected {size}",
                table.len()
            )));
        }
        let mut seen = vec![false; size];
        for &out in &table {
            let out = out as usize;
            if out >= size || seen[out] {
                return Err(PcaError::Rule(
                    "table is not a bijection on cell configurations".into(),
                ));
            }
            seen[out] = true;
        }
        Ok(CellRule {
            width,
            planes,
            table,
        })
    }

    pub fn identity(width: usize, planes: usize) -> Self {
        let size = 1usize << (width * planes);
        CellRule {
            width,
            planes,
            table: (0..size as u16).collect(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn planes(&self) -> usize {
        self.planes
    }

    pub fn table(&self) -> &[u16] {
        &self.table
    }

    pub fn apply_index(&self, cell: u16) -> u16 {
        self.table[cell as usize]
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0u16; self.table.len()];
        for (src, &dst) in self.table.iter().enumerate() {
            inv[dst as usize] = src as u16;
        }
        CellRule {
            width: self.width,
            planes: self.planes,
            table: inv,
        }
    }

    /// Number of cell configurations the table leaves unchanged.
    pub fn fixed_point_count(&self) -> usize {
        self.table
            .iter()
            .enumerate()
            .filter(|(i, &o)| *i == o as usize)
            .count()
    }

    /// Composition `self` after `other`.
    pub fn compose_after(&self, other: &CellRule) -> Result<Self> {
        if self.width != other.width || self.planes != other.planes {
            return Err(PcaError::Rule("cell shapes differ".into()));
        }
        let table = other
            .table
            .iter()
            .map(|&mid| self.table[mid as usize])
            .collect();
        CellRule::new(self.width, self.planes, table)
    }

    /// Checks that every transition conserves the total number of set bits.
    pub fn conserves_particle_number(&self) -> bool {
        self.table
            .iter()
            .enumerate()
            .all(|(i, &o)| (i as u16).count_ones() == o.count_ones())
    }

    fn gather(&self, cfg: &SpinConfig, start: usize) -> u16 {
        let mut idx = 0u16;
        for g in 0..self.planes {
            for i in 0..self.width {
                idx = (idx << 1) | cfg.occ(g, start + i) as u16;
            }
        }
        idx
    }

    fn scatter(&self, cfg: &mut SpinConfig, start: usize, mut idx: u16) {
        for g in (0..self.planes).rev() {
            for i in (0..self.width).rev() {
                cfg.set_occ(g, start + i, idx & 1 == 1);
                idx >>= 1;
            }
        }
    }

    /// Applies the table to every aligned cell of the configuration.
    pub fn apply(&self, cfg: &mut SpinConfig) -> Result<()> {
        if cfg.plane_count() != self.planes {
            return Err(PcaError::Rule(format!(
                "rule expects {} planes, configuration has {}",
                self.planes,
                cfg.plane_count()
            )));
        }
        let sites = cfg.sites();
        if sites % self.width != 0 {
            return Err(PcaError::Rule(format!(
                "site count {sites} is not a multiple of cell width {}",
                self.width
            )));
        }
        if self.width == 3 && self.planes == 2 {
            apply_cells_3x2(cfg, &self.table);
            return Ok(());
        }
        for start in (0..sites).step_by(self.width) {
            let idx = self.gather(cfg, start);
            let out = self.table[idx as usize];
            if out != idx {
                self.scatter(cfg, start, out);
            }
        }
        Ok(())
    }
}

/// Block kernel for the common two-plane, three-site cell shape. Cells are
/// processed in groups of 64, which occupy exactly three words per plane, so
/// groups can be handled independently.
fn apply_cells_3x2(cfg: &mut SpinConfig, table: &[u16]) {
    let sites = cfg.sites();
    let cells = sites / 3;
    let full_groups = cells / 64;
    let parallel = full_groups >= 64;

    let (head, tail) = {
        let (r, l) = cfg.planes.split_at_mut(1);
        (&mut r[0], &mut l[0])
    };
    let r_words = head.words_mut();
    let l_words = tail.words_mut();

    let kernel = |group: usize, r3: &mut [u64], l3: &mut [u64]| {
        let in_group = if (group + 1) * 64 <= cells {
            64
        } else {
            cells - group * 64
        };
        for c in 0..in_group {
            let bit = c * 3;
            let (w, off) = (bit >> 6, bit & 63);
            let read3 = |words: &[u64]| -> u64 {
                if off <= 61 {
                    (words[w] >> off) & 7
                } else {
                    ((words[w] >> off) | (words[w + 1] << (64 - off))) & 7
                }
            };
            let rv = read3(r3);
            let lv = read3(l3);
            // Storage keeps the lowest site in the lowest bit; the table
            // index wants the lowest site in the highest bit of each triple.
            let rev3 = |v: u64| ((v & 1) << 2) | (v & 2) | (v >> 2);
            let idx = ((rev3(rv) << 3) | rev3(lv)) as usize;
            let out = table[idx] as u64;
            if out == idx as u64 {
                continue;
            }
            let r_new = rev3(out >> 3);
            let l_new = rev3(out & 7);
            let write3 = |words: &mut [u64], v: u64| {
                if off <= 61 {
                    words[w] = (words[w] & !(7 << off)) | (v << off);
                } else {
                    let lo_bits = 64 - off;
                    let mask_lo = 7u64 >> (3 - lo_bits) << off;
                    words[w] = (words[w] & !mask_lo) | ((v << off) & mask_lo);
                    let hi = 3 - lo_bits;
                    let mask_hi = (1u64 << hi) - 1;
                    words[w + 1] = (words[w + 1] & !mask_hi) | (v >> lo_bits);
                }
            };
            write3(r3, r_new);
            write3(l3, l_new);
        }
    };

    if parallel {
        let groups = cells.div_ceil(64);
        let r_chunks: Vec<&mut [u64]> = r_words.chunks_mut(3).collect();
        let l_chunks: Vec<&mut [u64]> = l_words.chunks_mut(3).collect();
        r_chunks
            .into_par_iter()
            .zip(l_chunks.into_par_iter())
            .enumerate()
            .for_each(|(group, (r3, l3))| {
                if group < groups {
                    kernel(group, r3, l3);
                }
            });
    } else {
        for group in 0..cells.div_ceil(64) {
            let ws = group * 3;
            let we = (ws + 3).min(r_words.len());
            // Cells never straddle a 3-word group boundary (192 bits = 64 cells),
            // but the last group may be short.
            let (r3, l3) = (&mut r_words[ws..we], &mut l_words[ws..we]);
            kernel(group, r3, l3);
        }
    }
}

/// One time step of the configuration dynamics: optional drift followed by an
/// optional cell update.
#[derive(Clone, Debug)]
pub struct TimeStep {
    pub transport: bool,
    pub rule: Option<CellRule>,
}

/// A finite sequence of time steps.
#[derive(Clone, Debug, Default)]
pub struct Schedule {
    pub steps: Vec<TimeStep>,
}

impl Schedule {
    /// `n_t` pure-drift steps.
    pub fn free(n_t: usize) -> Self {
        Schedule {
            steps: (0..n_t)
                .map(|_| TimeStep {
                    transport: true,
                    rule: None,
                })
                .collect(),
        }
    }

    /// `n_t` steps of drift followed by a cell update.
    pub fn interacting(rule: CellRule, n_t: usize) -> Self {
        Schedule {
            steps: (0..n_t)
                .map(|_| TimeStep {
                    transport: true,
                    rule: Some(rule.clone()),
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Applies one time step in place.
pub fn step_config(cfg: &mut SpinConfig, spec: &LatticeSpec, step: &TimeStep) -> Result<()> {
    if step.transport {
        cfg.transport(spec.species);
    }
    if let Some(rule) = &step.rule {
        rule.apply(cfg)?;
    }
    Ok(())
}

/// Undoes one time step in place.
pub fn unstep_config(cfg: &mut SpinConfig, spec: &LatticeSpec, step: &TimeStep) -> Result<()> {
    if let Some(rule) = &step.rule {
        rule.inverse().apply(cfg)?;
    }
    if step.transport {
        cfg.transport_inverse(spec.species);
    }
    Ok(())
}

/// The full history of one deterministic run: `layers[t]` is the
/// configuration after `t` steps.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub layers: Vec<SpinConfig>,
}

impl Trajectory {
    pub fn layer(&self, t: usize) -> &SpinConfig {
        &self.layers[t]
    }

    pub fn steps(&self) -> usize {
        self.layers.len() - 1
    }
}

/// Runs the schedule from an initial configuration, recording every layer.
pub fn evolve_trajectory(
    initial: SpinConfig,
    spec: &LatticeSpec,
    schedule: &Schedule,
) -> Result<Trajectory> {
    let mut layers = Vec::with_capacity(schedule.len() + 1);
    let mut cfg = initial;
    layers.push(cfg.clone());
    for step in &schedule.steps {
        step_config(&mut cfg, spec, step)?;
        layers.push(cfg.clone());
    }
    Ok(Trajectory { layers })
}

/// A weighted set of initial configurations. Weights are probabilities and
/// must be nonnegative and sum to one.
#[derive(Clone, Debug, Default)]
pub struct Ensemble {
    pub entries: Vec<(SpinConfig, f64)>,
}

impl Ensemble {
    pub fn point(cfg: SpinConfig) -> Self {
        Ensemble {
            entries: vec![(cfg, 1.0)],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.entries.is_empty() {
            return Err(PcaError::Input("ensemble is empty".into()));
        }
        let mut total = 0.0;
        for (cfg, w) in &self.entries {
            if !w.is_finite() || *w < -1e-12 {
                return Err(PcaError::Input(format!(
                    "negative or non-finite weight {w} for {}",
                    cfg.format()
                )));
            }
            total += w.max(0.0);
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(PcaError::Input(format!(
                "ensemble weights sum to {total}, expected 1"
            )));
        }
        Ok(())
    }

    pub fn normalize(&mut self) -> Result<()> {
        let total: f64 = self.entries.iter().map(|(_, w)| w.max(0.0)).sum();
        if total <= 0.0 {
            return Err(PcaError::Input("total ensemble weight is zero".into()));
        }
        for (_, w) in self.entries.iter_mut() {
            *w = w.max(0.0) / total;
        }
        Ok(())
    }
}

/// A value read off a configuration.
#[derive(Clone, Debug, PartialEq)]
pub enum ObservableKind {
    /// Occupation number `n` of one site of one plane.
    Occupation { plane: usize, j: i64 },
    /// Total occupation of a plane.
    TotalOccupation { plane: usize },
    /// Ising spin `2n - 1` of one site of one plane.
    Spin { plane: usize, j: i64 },
    /// Product of two spins on the same plane.
    SpinCorrelation { plane: usize, j1: i64, j2: i64 },
}

/// Named observable for time-series output.
#[derive(Clone, Debug, PartialEq)]
pub struct Observable {
    pub id: String,
    pub kind: ObservableKind,
}

impl Observable {
    pub fn occupation(spec: &LatticeSpec, plane: usize, j: i64) -> Self {
        Observable {
            id: format!("n[{}]({j})", spec.species.plane_label(plane)),
            kind: ObservableKind::Occupation { plane, j },
        }
    }

    pub fn total_occupation(spec: &LatticeSpec, plane: usize) -> Self {
        Observable {
            id: format!("N[{}]", spec.species.plane_label(plane)),
            kind: ObservableKind::TotalOccupation { plane },
        }
    }

    pub fn spin(spec: &LatticeSpec, plane: usize, j: i64) -> Self {
        Observable {
            id: format!("s[{}]({j})", spec.species.plane_label(plane)),
            kind: ObservableKind::Spin { plane, j },
        }
    }

    pub fn evaluate(&self, cfg: &SpinConfig, spec: &LatticeSpec) -> f64 {
        match self.kind {
            ObservableKind::Occupation { plane, j } => cfg.occ(plane, spec.pos(j)) as u8 as f64,
            ObservableKind::TotalOccupation { plane } => cfg.total_occupation(plane) as f64,
            ObservableKind::Spin { plane, j } => cfg.spin(plane, spec.pos(j)) as f64,
            ObservableKind::SpinCorrelation { plane, j1, j2 } => {
                (cfg.spin(plane, spec.pos(j1)) * cfg.spin(plane, spec.pos(j2))) as f64
            }
        }
    }
}

/// How ensemble averages are computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SampleMode {
    /// Exact weighted average over every ensemble entry.
    Exhaustive,
    /// Monte Carlo average over trajectories drawn from the ensemble.
    MonteCarlo { samples: usize, seed: u64 },
}

/// One row of a sampled time series.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesPoint {
    pub t: usize,
    pub observable: String,
    pub mean: f64,
    pub stderr: f64,
}

/// Evolves the ensemble through the schedule and records each observable at
/// every time layer, including the initial one.
///
/// Exhaustive mode returns exact means with zero standard error. Monte Carlo
/// mode draws initial configurations with replacement; results are
/// reproducible for a fixed seed independent of thread count.
pub fn sample_observables(
    ensemble: &Ensemble,
    spec: &LatticeSpec,
    schedule: &Schedule,
    observables: &[Observable],
    mode: SampleMode,
) -> Result<Vec<SeriesPoint>> {
    ensemble.validate()?;
    if observables.is_empty() {
        return Err(PcaError::Input("no observables requested".into()));
    }
    let n_t = schedule.len();
    let n_obs = observables.len();
    let slots = (n_t + 1) * n_obs;

    let values_for = |cfg: &SpinConfig| -> Result<Vec<f64>> {
        let mut vals = Vec::with_capacity(slots);
        let mut state = cfg.clone();
        for obs in observables {
            vals.push(obs.evaluate(&state, spec));
        }
        for step in &schedule.steps {
            step_config(&mut state, spec, step)?;
            for obs in observables {
                vals.push(obs.evaluate(&state, spec));
            }
        }
        Ok(vals)
    };

    let (mean, stderr) = match mode {
        SampleMode::Exhaustive => {
            let partials = ensemble
                .entries
                .par_iter()
                .map(|(cfg, w)| {
                    let vals = values_for(cfg)?;
                    Ok(vals.into_iter().map(|v| v * w).collect::<Vec<_>>())
                })
                .collect::<Result<Vec<_>>>()?;
            let mut mean = vec![0.0; slots];
            for part in partials {
                for (m, v) in mean.iter_mut().zip(part) {
                    *m += v;
                }
            }
            (mean, vec![0.0; slots])
        }
        SampleMode::MonteCarlo { samples, seed } => {
            if samples == 0 {
                return Err(PcaError::Input("sample count must be positive".into()));
            }
            let weights: Vec<f64> = ensemble.entries.iter().map(|(_, w)| w.max(0.0)).collect();
            let dist = WeightedIndex::new(&weights)
                .map_err(|e| PcaError::Input(format!("bad ensemble weights: {e}")))?;
            const CHUNK: usize = 1024;
            let chunks: Vec<(usize, usize)> = (0..samples.div_ceil(CHUNK))
                .map(|c| (c, (samples - c * CHUNK).min(CHUNK)))
                .collect();
            let partials = chunks
                .par_iter()
                .map(|&(chunk, count)| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(chunk as u64 + 1);
                    let mut sum = vec![0.0; slots];
                    let mut sumsq = vec![0.0; slots];
                    for _ in 0..count {
                        let pick = dist.sample(&mut rng);
                        let vals = values_for(&ensemble.entries[pick].0)?;
                        for (i, v) in vals.into_iter().enumerate() {
                            sum[i] += v;
                            sumsq[i] += v * v;
                        }
                    }
                    Ok((sum, sumsq))
                })
                .collect::<Result<Vec<_>>>()?;
            let mut sum = vec![0.0; slots];
            let mut sumsq = vec![0.0; slots];
            for (s, s2) in partials {
                for i in 0..slots {
                    sum[i] += s[i];
                    sumsq[i] += s2[i];
                }
            }
            let n = samples as f64;
            let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
            let stderr: Vec<f64> = mean
                .iter()
                .zip(&sumsq)
                .map(|(m, s2)| {
                    if samples < 2 {
                        0.0
                    } else {
                        let var = (s2 / n - m * m).max(0.0) * n / (n - 1.0);
                        (var / n).sqrt()
                    }
                })
                .collect();
            (mean, stderr)
        }
    };

    let mut rows = Vec::with_capacity(slots);
    for t in 0..=n_t {
        for (o, obs) in observables.iter().enumerate() {
            let i = t * n_obs + o;
            rows.push(SeriesPoint {
                t,
                observable: obs.id.clone(),
                mean: mean[i],
                stderr: stderr[i],
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec5() -> LatticeSpec {
        LatticeSpec::new(5, Species::MwR).unwrap()
    }

    #[test]
    fn site_and_position_maps_are_inverse() {
        let spec = spec5();
        assert_eq!(spec.half(), 2);
        for j in spec.sites() {
            assert_eq!(spec.site(spec.pos(j)), j);
        }
        assert_eq!(spec.pos(-2), 0);
        assert_eq!(spec.pos(2), 4);
    }

    #[test]
    fn right_mover_transport_matches_example() {
        let spec = spec5();
        let mut cfg = SpinConfig::parse("10010").unwrap();
        cfg.transport(spec.species);
        assert_eq!(cfg.format(), "01001");
    }

    #[test]
    fn left_mover_transport_is_inverse_shift() {
        let spec = LatticeSpec::new(5, Species::MwL).unwrap();
        let mut cfg = SpinConfig::parse("10010").unwrap();
        cfg.transport(spec.species);
        assert_eq!(cfg.format(), "00101");
    }

    #[test]
    fn dirac_planes_drift_in_opposite_directions() {
        let spec = LatticeSpec::new(5, Species::Dirac).unwrap();
        let mut cfg = SpinConfig::parse("10010|10010").unwrap();
        cfg.transport(spec.species);
        assert_eq!(cfg.format(), "01001|00101");
    }

    #[test]
    fn index_packing_is_plane_major_msb_first() {
        let spec = LatticeSpec::new(5, Species::Dirac).unwrap();
        let cfg = SpinConfig::parse("10010|00001").unwrap();
        assert_eq!(cfg.to_index(), (0b10010 << 5) | 0b00001);
        assert_eq!(SpinConfig::from_index(&spec, cfg.to_index()), cfg);
    }

    #[test]
    fn odd_site_count_required() {
        assert!(LatticeSpec::new(4, Species::MwR).is_err());
        assert!(LatticeSpec::new(3, Species::MwR).is_ok());
    }
}
