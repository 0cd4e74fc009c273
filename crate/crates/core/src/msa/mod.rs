//! Finite-volume multi-scale analysis: resonance, singularity, tunneling,
//! multi-resonance and localization of lattice cubes.

pub mod reductions;
pub mod subharmonic;

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{
    decay_exponent, enumerate_subcubes, gamma, max_disjoint_family, max_norm_dist, Cube, ScaleSchedule, Site,
};
use crate::operator::{assemble_field, spectrum, HamiltonianMatrix, PotentialField, Resolvent, SpectralData};

pub use reductions::{common_resonance, multi_resonance_sweep, pair_resonance_gap, SweepWitness};
pub use subharmonic::{radial_descent_bound, return_radius, subharmonic_check, CubeFunction, RadialDescent, SubharmonicReport};

/// Hosts up to this radius use every sub-cube center by default.
pub const FULL_GRID_RADIUS: u64 = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationConfig {
    pub sched: ScaleSchedule,
    pub m: f64,
    pub k: u32,
    pub nu: usize,
    /// Step of the sub-cube center grid; values above 1 make negative
    /// tunneling and multi-resonance verdicts one-sided.
    pub center_step: u64,
}

impl ClassificationConfig {
    pub fn new(sched: ScaleSchedule, m: f64, k: u32, nu: usize) -> Result<Self> {
        let cfg = Self { sched, m, k, nu, center_step: 1 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m > 0.0) {
            return Err(Error::param("m", "mass must be positive"));
        }
        if self.nu == 0 {
            return Err(Error::param("nu", "phase dimension must be at least 1"));
        }
        if self.center_step == 0 {
            return Err(Error::param("center_step", "must be at least 1"));
        }
        self.sched.scale(self.k as i64)?;
        Ok(())
    }

    pub fn g(&self) -> f64 {
        self.sched.g
    }

    /// `L_k`.
    pub fn scale(&self) -> u64 {
        self.sched.scale(self.k as i64).expect("validated")
    }

    /// `L_{k−1}`.
    pub fn prev_scale(&self) -> u64 {
        self.sched.scale(self.k as i64 - 1).expect("validated")
    }

    /// `g δ_k`.
    pub fn threshold(&self) -> f64 {
        self.sched.resonance_threshold(self.k as i64).expect("validated")
    }

    /// `e^{−γ(m, L) L}` for a cube of radius `L`.
    pub fn ns_threshold(&self, radius: u64) -> f64 {
        (-decay_exponent(self.m, radius)).exp()
    }

    /// `γ(m, L_{k−1})`, with `L_{−1} = 0` replaced by 1 where `γ` is undefined.
    pub fn localization_rate(&self) -> f64 {
        gamma(self.m, self.prev_scale().max(1)).expect("m validated")
    }

    pub fn j_nu(&self) -> usize {
        ScaleSchedule::j_nu(self.nu)
    }

    /// The configuration one level down.
    pub fn lower(&self) -> Option<Self> {
        self.k.checked_sub(1).map(|k| Self { k, ..self.clone() })
    }

    fn is_coarsened(&self, host: &Cube) -> bool {
        self.center_step > 1 && host.radius > 0
    }
}

/// Operator and spectrum of one cube.
#[derive(Debug)]
pub struct CubeOperator {
    pub h: HamiltonianMatrix,
    pub spec: SpectralData,
}

/// A tabulated potential plus a cache of sub-cube spectra.
#[derive(Debug)]
pub struct CubeState {
    pub field: PotentialField,
    pub g: f64,
    cache: Mutex<HashMap<Cube, Arc<CubeOperator>>>,
}

impl CubeState {
    pub fn new(field: PotentialField, g: f64) -> Self {
        Self { field, g, cache: Mutex::new(HashMap::new()) }
    }

    pub fn operator(&self, cube: &Cube) -> Result<Arc<CubeOperator>> {
        if let Some(op) = self.cache.lock().expect("cache lock").get(cube) {
            return Ok(op.clone());
        }
        let h = assemble_field(&self.field.restrict(cube)?, self.g);
        let spec = spectrum(&h)?;
        let op = Arc::new(CubeOperator { h, spec });
        self.cache.lock().expect("cache lock").insert(cube.clone(), op.clone());
        Ok(op)
    }

    /// Decomposes the given cubes in parallel.
    pub fn precompute(&self, cubes: &[Cube]) -> Result<()> {
        cubes.par_iter().try_for_each(|c| self.operator(c).map(|_| ()))
    }
}

/// `dist(Σ, E) < g δ_k`; equality counts as non-resonant.
pub fn is_resonant(spec: &SpectralData, energy: f64, sched: &ScaleSchedule, k: u32) -> Result<bool> {
    Ok(spec.distance(energy) < sched.resonance_threshold(k as i64)?)
}

fn check_state(host: &Cube, config: &ClassificationConfig, state: &CubeState) -> Result<()> {
    if !state.field.cube.contains_cube(host) {
        return Err(Error::Precondition("host cube lies outside the sampled potential".into()));
    }
    if state.g != config.g() {
        return Err(Error::Precondition(format!("state coupling {} differs from schedule {}", state.g, config.g())));
    }
    Ok(())
}

/// Sub-cubes of `host` with radius in `[lo, hi]` on the configured grid,
/// the host included when its radius is in range.
fn family(host: &Cube, lo: u64, hi: u64, step: u64) -> Vec<Cube> {
    let mut out = Vec::new();
    for r in lo..=hi.min(host.radius) {
        if r == host.radius {
            out.push(host.clone());
        } else {
            out.extend(enumerate_subcubes(host, r, step));
        }
    }
    out
}

/// The cubes whose resonance decides CNR: radii `L_{k−1}` up to the host's.
pub fn resonance_family(host: &Cube, config: &ClassificationConfig) -> Vec<Cube> {
    family(host, config.prev_scale(), host.radius, config.center_step)
}

/// Completely non-resonant: no resonant cube of radius `≥ L_{k−1}` inside
/// the host, the host itself included.
pub fn is_cnr(host: &Cube, energy: f64, config: &ClassificationConfig, state: &CubeState) -> Result<bool> {
    check_state(host, config, state)?;
    let thr = config.threshold();
    if state.operator(host)?.spec.distance(energy) < thr {
        return Ok(false);
    }
    let cubes = resonance_family(host, config);
    state.precompute(&cubes)?;
    for c in &cubes {
        if state.operator(c)?.spec.distance(energy) < thr {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `max_{‖x−u‖ ≤ L_{k−1}} Σ_{(y,y')∈∂□} |G(x, y; E)|` by direct solves.
pub fn ns_lhs(op: &CubeOperator, energy: f64, core_radius: u64) -> Result<f64> {
    let spec = &op.spec;
    let distance = spec.distance(energy);
    if !(distance > spec.resonance_floor()) {
        return Err(Error::ResonantEnergy { energy, distance });
    }
    let cube = &spec.cube;
    let resolvent = Resolvent::new(&op.h, energy)?;
    let boundary: Vec<usize> = cube
        .boundary()
        .iter()
        .map(|(y, _)| cube.index_of(y).expect("inner boundary site"))
        .collect();
    let mut worst: f64 = 0.0;
    for x in cube.core(core_radius.min(cube.radius)) {
        let row = resolvent.column(&x)?;
        let s: f64 = boundary.iter().map(|&i| row[i].abs()).sum();
        worst = worst.max(s);
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NsVerdict {
    pub ns: bool,
    pub lhs: f64,
    pub threshold: f64,
}

/// Non-singularity at level `k`: core radius `L_{k−1}`, threshold
/// `e^{−γ(m,L)L}` with `L` the cube radius.
pub fn is_ns(op: &CubeOperator, energy: f64, config: &ClassificationConfig) -> Result<NsVerdict> {
    let lhs = ns_lhs(op, energy, config.prev_scale())?;
    let threshold = config.ns_threshold(op.spec.cube.radius);
    Ok(NsVerdict { ns: lhs <= threshold, lhs, threshold })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunnelingVerdict {
    pub tunneling: bool,
    pub witness: Option<(Cube, Cube, f64)>,
    /// Smallest radius of the partially resonant cubes considered.
    pub min_radius: u64,
}

/// Two disjoint cubes of radius `≥ L_k^{1/4}`, each containing a cube of
/// radius `≥ L_{k−1}` resonant at a common energy.
///
/// Since `L_{k−1} ≥ L_k^{1/4}`, the resonant cubes themselves can play the
/// role of the disjoint partially resonant ones, so the test runs over pairs
/// of disjoint sub-cubes with radius `≥ max(L_{k−1}, ⌈L_k^{1/4}⌉)` and
/// compares spectral gaps with `2gδ_k`.
pub fn is_tunneling(host: &Cube, config: &ClassificationConfig, state: &CubeState) -> Result<TunnelingVerdict> {
    if config.k < 1 {
        return Err(Error::Precondition("tunneling needs k ≥ 1".into()));
    }
    check_state(host, config, state)?;
    let quarter = (config.scale() as f64).powf(0.25).ceil() as u64;
    let min_radius = config.prev_scale().max(quarter);
    let cubes: Vec<Cube> = family(host, min_radius, host.radius.saturating_sub(1), config.center_step)
        .into_iter()
        .filter(|c| c != host)
        .collect();
    state.precompute(&cubes)?;
    let thr = config.threshold();
    for i in 0..cubes.len() {
        let a = state.operator(&cubes[i])?;
        for b_cube in cubes.iter().skip(i + 1) {
            if !cubes[i].is_disjoint(b_cube) {
                continue;
            }
            let b = state.operator(b_cube)?;
            if let Some(e) = common_resonance(&a.spec.eigenvalues, &b.spec.eigenvalues, thr) {
                return Ok(TunnelingVerdict {
                    tunneling: true,
                    witness: Some((cubes[i].clone(), b_cube.clone(), e)),
                    min_radius,
                });
            }
        }
    }
    Ok(TunnelingVerdict { tunneling: false, witness: None, min_radius })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiResonanceVerdict {
    pub multiresonant: bool,
    pub witness_energy: Option<f64>,
    pub members: Vec<Cube>,
    /// False when the disjoint-family count is only a lower bound (d ≥ 2).
    pub exact: bool,
}

/// `J_ν = ν + 2` disjoint cubes of radius `L_{k−1}` resonant at one energy.
pub fn is_multiresonant(host: &Cube, config: &ClassificationConfig, state: &CubeState) -> Result<MultiResonanceVerdict> {
    if config.k < 1 {
        return Err(Error::Precondition("multi-resonance needs k ≥ 1".into()));
    }
    check_state(host, config, state)?;
    let r = config.prev_scale();
    let cubes = family(host, r, r, config.center_step);
    state.precompute(&cubes)?;
    let ops = cubes.iter().map(|c| state.operator(c)).collect::<Result<Vec<_>>>()?;
    let spectra: Vec<&[f64]> = ops.iter().map(|o| o.spec.eigenvalues.as_slice()).collect();
    let exact = host.dim() == 1;
    Ok(match multi_resonance_sweep(&cubes, &spectra, config.threshold(), config.j_nu()) {
        Some(w) => MultiResonanceVerdict {
            multiresonant: true,
            witness_energy: Some(w.energy),
            members: w.members.iter().map(|&i| cubes[i].clone()).collect(),
            exact,
        },
        None => MultiResonanceVerdict { multiresonant: false, witness_energy: None, members: Vec::new(), exact },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterCount {
    pub count: usize,
    pub exact: bool,
    pub singular: Vec<Cube>,
}

/// Largest family of pairwise disjoint `(E, m)`-singular sub-cubes of radius
/// `L_k` inside `host`, singularity judged at level `k`. An energy in the
/// numerical spectrum of a sub-cube makes that sub-cube singular.
pub fn singular_cluster_count(host: &Cube, energy: f64, config: &ClassificationConfig, state: &CubeState) -> Result<ClusterCount> {
    check_state(host, config, state)?;
    let r = config.scale();
    if r > host.radius {
        return Err(Error::Precondition(format!("sub-cube radius {r} exceeds host radius {}", host.radius)));
    }
    let cubes = family(host, r, r, config.center_step);
    state.precompute(&cubes)?;
    let mut singular = Vec::new();
    for c in &cubes {
        let op = state.operator(c)?;
        let s = match is_ns(&op, energy, config) {
            Ok(v) => !v.ns,
            Err(Error::ResonantEnergy { .. }) => true,
            Err(e) => return Err(e),
        };
        if s {
            singular.push(c.clone());
        }
    }
    let (idx, exact) = max_disjoint_family(&singular);
    Ok(ClusterCount { count: idx.len(), exact, singular })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationVerdict {
    pub localized: bool,
    pub rate: f64,
    pub min_distance: f64,
    /// `(x, y, j, |ψ_j(x)ψ_j(y)|, bound)` with the largest value/bound ratio.
    pub worst: Option<(Site, Site, usize, f64, f64)>,
}

/// `|ψ_j(x)ψ_j(y)| ≤ e^{−γ(m, L_{k−1})‖x−y‖}` for all `j` and all distinct
/// `x, y` with `‖x−y‖ ≥ L_k^{7/8}`.
pub fn is_localized(spec: &SpectralData, config: &ClassificationConfig) -> LocalizationVerdict {
    let rate = config.localization_rate();
    let min_distance = (config.scale() as f64).powf(0.875);
    let sites = spec.cube.sites();
    let mut worst: Option<(Site, Site, usize, f64, f64)> = None;
    let mut worst_ratio = f64::NEG_INFINITY;
    for (i, x) in sites.iter().enumerate() {
        for (jx, y) in sites.iter().enumerate().skip(i + 1) {
            let dist = max_norm_dist(x, y) as f64;
            if dist < min_distance {
                continue;
            }
            let bound = (-rate * dist).exp();
            for j in 0..spec.len() {
                let v = (spec.eigenvectors[(i, j)] * spec.eigenvectors[(jx, j)]).abs();
                let ratio = v / bound;
                if ratio > worst_ratio {
                    worst_ratio = ratio;
                    worst = Some((x.clone(), y.clone(), j, v, bound));
                }
            }
        }
    }
    LocalizationVerdict { localized: worst_ratio <= 1.0, rate, min_distance, worst }
}

/// Energies at which a cube is classified.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyPolicy {
    pub explicit: Vec<f64>,
    /// Add every eigenvalue of every cube in the resonance family.
    pub subcube_eigenvalues: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyVerdict {
    pub energy: f64,
    pub host_distance: f64,
    pub resonant: bool,
    pub cnr: bool,
    /// `None` when the energy is numerically in the host spectrum.
    pub ns: Option<bool>,
    pub ns_lhs: Option<f64>,
    /// Disjoint singular cubes of radius `L_{k−1}` (levels `k ≥ 1`).
    pub singular_clusters: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubeReport {
    pub cube: Cube,
    pub k: u32,
    pub g: f64,
    pub m: f64,
    pub threshold: f64,
    pub ns_threshold: f64,
    pub energies: Vec<EnergyVerdict>,
    pub tunneling: Option<TunnelingVerdict>,
    pub multiresonance: Option<MultiResonanceVerdict>,
    /// No policy energy produced `J_ν` disjoint singular sub-cubes.
    pub good: Option<bool>,
    pub localization: LocalizationVerdict,
    pub coarsened: bool,
}

impl CubeReport {
    /// Policy energies where the host is good and CNR but singular.
    pub fn good_cnr_singular(&self) -> Vec<f64> {
        if self.good != Some(true) {
            return Vec::new();
        }
        self.energies.iter().filter(|v| v.cnr && v.ns == Some(false)).map(|v| v.energy).collect()
    }

    /// Policy energies where the host is non-resonant but singular.
    pub fn nr_singular(&self) -> Vec<f64> {
        self.energies.iter().filter(|v| !v.resonant && v.ns == Some(false)).map(|v| v.energy).collect()
    }
}

/// Full classification of a host cube at level `k`.
pub fn classify_cube(
    host: &Cube,
    config: &ClassificationConfig,
    state: &CubeState,
    policy: &EnergyPolicy,
) -> Result<CubeReport> {
    config.validate()?;
    check_state(host, config, state)?;
    let cubes = resonance_family(host, config);
    state.precompute(&cubes)?;
    let host_op = state.operator(host)?;

    let mut energies: Vec<f64> = policy.explicit.clone();
    if policy.subcube_eigenvalues {
        for c in &cubes {
            energies.extend(state.operator(c)?.spec.eigenvalues.iter().copied());
        }
    }
    energies.sort_by(f64::total_cmp);
    energies.dedup();

    let lower = config.lower();
    let verdicts = energies
        .par_iter()
        .map(|&e| -> Result<EnergyVerdict> {
            let host_distance = host_op.spec.distance(e);
            let resonant = host_distance < config.threshold();
            let cnr = is_cnr(host, e, config, state)?;
            let (ns, ns_lhs) = match is_ns(&host_op, e, config) {
                Ok(v) => (Some(v.ns), Some(v.lhs)),
                Err(Error::ResonantEnergy { .. }) => (None, None),
                Err(err) => return Err(err),
            };
            let singular_clusters = match &lower {
                Some(lc) => Some(singular_cluster_count(host, e, lc, state)?.count),
                None => None,
            };
            Ok(EnergyVerdict { energy: e, host_distance, resonant, cnr, ns, ns_lhs, singular_clusters })
        })
        .collect::<Result<Vec<_>>>()?;

    let (tunneling, multiresonance) = if config.k >= 1 {
        (Some(is_tunneling(host, config, state)?), Some(is_multiresonant(host, config, state)?))
    } else {
        (None, None)
    };
    let good = lower.as_ref().map(|_| {
        verdicts.iter().all(|v| v.singular_clusters.unwrap_or(0) < config.j_nu())
    });
    Ok(CubeReport {
        cube: host.clone(),
        k: config.k,
        g: config.g(),
        m: config.m,
        threshold: config.threshold(),
        ns_threshold: config.ns_threshold(host.radius),
        energies: verdicts,
        tunneling,
        multiresonance,
        good,
        localization: is_localized(&host_op.spec, config),
        coarsened: config.is_coarsened(host),
    })
}
