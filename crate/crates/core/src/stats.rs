//! Monte Carlo estimates of eigenvalue statistics and MSA event
//! probabilities over joint `(ω, θ)` samples.
//!
//! Sample `i` draws from `ChaCha8Rng::seed_from_u64(seed_base + i)`: first
//! `ω` uniform on `T^ν`, then one `u64` seeding `θ`. Samples run in parallel
//! and are collected in index order, so every output is independent of the
//! thread count.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, ContinuousCDF, DiscreteCDF, StudentsT};

use crate::dynamics::{FrequencyMatrix, TorusPoint};
use crate::error::{Error, Result};
use crate::lattice::{Cube, ScaleSchedule};
use crate::msa::{is_localized, is_tunneling, ClassificationConfig, CubeState};
use crate::operator::{assemble_field, spectrum, HullPotential, PotentialField, SpectralData};
use crate::randelette::{RandeletteEnsemble, ThetaSample};

/// Minimum sample count for any scaling fit.
pub const MIN_FIT_SAMPLES: usize = 100;
/// Points with fewer positive counts are dropped from fits.
pub const MIN_FIT_COUNT: u64 = 5;
/// Spacings at or below this count as degenerate.
pub const DEGENERACY_TOLERANCE: f64 = 1e-12;
/// Eigenvector entries below this are ignored by the decay-rate fit.
pub const DECAY_FIT_FLOOR: f64 = 1e-10;

const Z95: f64 = 1.959963984540054;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleParams {
    pub m: u32,
    pub c: f64,
    pub n_max: u32,
    pub step: u32,
}

impl EnsembleParams {
    pub fn build(&self, nu: usize) -> Result<RandeletteEnsemble> {
        RandeletteEnsemble::with_step(self.m, self.c, self.n_max, nu, self.step)
    }
}

/// One population of samples: a cube of radius `radius` at the origin,
/// coupling `g`, and the hull along the orbit of a uniformly drawn `ω`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub d: usize,
    pub nu: usize,
    pub radius: u64,
    pub g: f64,
    pub samples: usize,
    pub seed_base: u64,
    pub ensemble: EnsembleParams,
    pub freqs: FrequencyMatrix,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.freqs.lattice_dim() != self.d || self.freqs.phase_dim() != self.nu {
            return Err(Error::param("freqs", "frequency matrix does not match (d, nu)"));
        }
        if !(self.g >= 0.0) || !self.g.is_finite() {
            return Err(Error::param("g", "coupling must be finite and non-negative"));
        }
        if self.samples == 0 {
            return Err(Error::param("samples", "need at least one sample"));
        }
        self.ensemble.build(self.nu)?;
        Ok(())
    }

    pub fn cube(&self) -> Cube {
        Cube::centered(self.d, self.radius)
    }

    pub fn with_g(&self, g: f64) -> Self {
        Self { g, ..self.clone() }
    }

    pub fn with_radius(&self, radius: u64) -> Self {
        Self { radius, ..self.clone() }
    }

    /// Scaling fits need at least `MIN_FIT_SAMPLES` samples.
    pub fn check_fit(&self) -> Result<()> {
        if self.samples < MIN_FIT_SAMPLES {
            return Err(Error::param("samples", format!("scaling fits need at least {MIN_FIT_SAMPLES} samples")));
        }
        Ok(())
    }
}

/// `(ω, θ)` of sample `index`.
pub fn sample_point(cfg: &ExperimentConfig, index: usize) -> (TorusPoint, ThetaSample) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed_base.wrapping_add(index as u64));
    let omega = TorusPoint::random(cfg.nu, &mut rng);
    let theta = ThetaSample::seeded(rng.random());
    (omega, theta)
}

/// Unscaled potential of sample `index` on `cube`.
pub fn sample_field(cfg: &ExperimentConfig, ens: &RandeletteEnsemble, cube: &Cube, index: usize) -> Result<PotentialField> {
    let (omega, theta) = sample_point(cfg, index);
    let pot = HullPotential { ensemble: ens, theta: &theta, freqs: &cfg.freqs, omega };
    PotentialField::sample(cube, &pot)
}

fn par_samples<T: Send>(cfg: &ExperimentConfig, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    (0..cfg.samples).into_par_iter().map(f).collect()
}

/// Spectra of every sample at every coupling, sharing the potentials.
pub fn sample_spectra(cfg: &ExperimentConfig, gs: &[f64]) -> Result<Vec<Vec<Vec<f64>>>> {
    cfg.validate()?;
    let ens = cfg.ensemble.build(cfg.nu)?;
    let cube = cfg.cube();
    par_samples(cfg, |i| {
        let field = sample_field(cfg, &ens, &cube, i)?;
        gs.iter().map(|&g| Ok(spectrum(&assemble_field(&field, g))?.eigenvalues)).collect()
    })
}

/// Wilson score interval at 95%.
pub fn wilson_interval(count: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n_f = n as f64;
    let p = count as f64 / n_f;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n_f;
    let centre = (p + z2 / (2.0 * n_f)) / denom;
    let half = Z95 * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    let lo = if count == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if count == n { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frequency {
    pub count: u64,
    pub n: u64,
    pub p: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl Frequency {
    pub fn new(count: u64, n: u64) -> Self {
        let (ci_lo, ci_hi) = wilson_interval(count, n);
        let p = if n == 0 { 0.0 } else { count as f64 / n as f64 };
        Self { count, n, p, ci_lo, ci_hi }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalePoint {
    pub x: f64,
    pub freq: Frequency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_ci: (f64, f64),
    pub points_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub points: Vec<ScalePoint>,
    /// Least squares of `ln p` on `ln x` over points with at least
    /// `MIN_FIT_COUNT` events; `None` when fewer than two remain.
    pub fit: Option<LineFit>,
}

/// Least squares line with a 95% Student-t interval on the slope (the
/// interval is degenerate with exactly two points).
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_ci = if n > 2 {
        let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
        let se = (rss / (nf - 2.0) / sxx).sqrt();
        let t = StudentsT::new(0.0, 1.0, nf - 2.0).expect("dof ≥ 1").inverse_cdf(0.975);
        (slope - t * se, slope + t * se)
    } else {
        (slope, slope)
    };
    Some(LineFit { slope, intercept, slope_ci, points_used: n })
}

fn scaling_fit(points: Vec<ScalePoint>) -> ScalingFit {
    let used: Vec<&ScalePoint> = points.iter().filter(|p| p.x > 0.0 && p.freq.count >= MIN_FIT_COUNT).collect();
    let xs: Vec<f64> = used.iter().map(|p| p.x.ln()).collect();
    let ys: Vec<f64> = used.iter().map(|p| p.freq.p.ln()).collect();
    ScalingFit { fit: fit_line(&xs, &ys), points }
}

/// Non-negative grid whose positive points span at least one decade.
pub fn check_grid(grid: &[f64], name: &'static str) -> Result<()> {
    if grid.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
        return Err(Error::param(name, "grid values must be finite and non-negative"));
    }
    let pos: Vec<f64> = grid.iter().copied().filter(|s| *s > 0.0).collect();
    let lo = pos.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = pos.iter().copied().fold(0.0, f64::max);
    if pos.is_empty() || hi < 10.0 * lo * (1.0 - 1e-12) {
        return Err(Error::param(name, "grid must span at least one decade"));
    }
    Ok(())
}

/// Rejects a scan without a single event.
pub fn all_zero(fit: &ScalingFit) -> Result<()> {
    if fit.points.iter().all(|p| p.freq.count == 0) {
        return Err(Error::NoData("no events at any grid point; enlarge the grid".into()));
    }
    Ok(())
}

/// `P{dist(Σ(□_L), E) ≤ s}` on the grid, from precomputed spectra.
pub fn wegner_from_spectra(spectra: &[Vec<f64>], energy: f64, s_grid: &[f64]) -> ScalingFit {
    let dists: Vec<f64> = spectra
        .iter()
        .map(|ev| ev.iter().map(|l| (l - energy).abs()).fold(f64::INFINITY, f64::min))
        .collect();
    let n = dists.len() as u64;
    let points = s_grid
        .iter()
        .map(|&s| ScalePoint { x: s, freq: Frequency::new(dists.iter().filter(|&&d| d <= s).count() as u64, n) })
        .collect();
    scaling_fit(points)
}

pub fn wegner_scan(cfg: &ExperimentConfig, energy: f64, s_grid: &[f64]) -> Result<ScalingFit> {
    cfg.check_fit()?;
    check_grid(s_grid, "s_grid")?;
    let spectra: Vec<Vec<f64>> = sample_spectra(cfg, &[cfg.g])?.into_iter().map(|mut v| v.remove(0)).collect();
    let fit = wegner_from_spectra(&spectra, energy, s_grid);
    all_zero(&fit)?;
    Ok(fit)
}

/// `P{#(Σ ∩ I) ≥ J}` for `I = [E_c − ℓ/2, E_c + ℓ/2]`, `ℓ` on the grid.
pub fn minami_from_spectra(spectra: &[Vec<f64>], centre: f64, j: usize, len_grid: &[f64]) -> ScalingFit {
    let n = spectra.len() as u64;
    let points = len_grid
        .iter()
        .map(|&len| {
            let count = if len == 0.0 {
                0
            } else {
                let (lo, hi) = (centre - 0.5 * len, centre + 0.5 * len);
                spectra.iter().filter(|ev| ev.iter().filter(|&&l| lo <= l && l <= hi).count() >= j).count() as u64
            };
            ScalePoint { x: len, freq: Frequency::new(count, n) }
        })
        .collect();
    scaling_fit(points)
}

pub fn minami_scan(cfg: &ExperimentConfig, centre: f64, j: usize, len_grid: &[f64]) -> Result<ScalingFit> {
    if j == 0 {
        return Err(Error::param("J", "need J ≥ 1"));
    }
    cfg.check_fit()?;
    check_grid(len_grid, "interval_grid")?;
    let spectra: Vec<Vec<f64>> = sample_spectra(cfg, &[cfg.g])?.into_iter().map(|mut v| v.remove(0)).collect();
    let fit = minami_from_spectra(&spectra, centre, j, len_grid);
    all_zero(&fit)?;
    Ok(fit)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventEstimate {
    pub g: f64,
    pub k: u32,
    pub event: String,
    pub freq: Frequency,
    /// Per-sample outcomes in index order, for paired comparisons.
    pub outcomes: Vec<bool>,
}

/// MSA parameters shared by the event-probability experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MsaParams {
    pub l0: u64,
    pub m: f64,
    pub center_step: u64,
}

impl MsaParams {
    pub fn classification(&self, g: f64, k: u32, nu: usize) -> Result<ClassificationConfig> {
        let mut c = ClassificationConfig::new(ScaleSchedule::new(self.l0, g)?, self.m, k, nu)?;
        c.center_step = self.center_step;
        c.validate()?;
        Ok(c)
    }
}

fn event_estimate(
    cfg: &ExperimentConfig,
    msa: &MsaParams,
    k: u32,
    event: &str,
    f: impl Fn(&Cube, &ClassificationConfig, &CubeState) -> Result<bool> + Sync + Send,
) -> Result<EventEstimate> {
    cfg.validate()?;
    let class = msa.classification(cfg.g, k, cfg.nu)?;
    let ens = cfg.ensemble.build(cfg.nu)?;
    let host = Cube::centered(cfg.d, class.scale());
    let outcomes = par_samples(cfg, |i| {
        let state = CubeState::new(sample_field(cfg, &ens, &host, i)?, cfg.g);
        f(&host, &class, &state)
    })?;
    let count = outcomes.iter().filter(|b| **b).count() as u64;
    Ok(EventEstimate {
        g: cfg.g,
        k,
        event: event.to_string(),
        freq: Frequency::new(count, outcomes.len() as u64),
        outcomes,
    })
}

/// Frequency of tunneling hosts `□_{L_k}(0)`.
pub fn tunneling_probability(cfg: &ExperimentConfig, msa: &MsaParams, k: u32) -> Result<EventEstimate> {
    if k < 1 {
        return Err(Error::param("k", "tunneling needs k ≥ 1"));
    }
    event_estimate(cfg, msa, k, "tunneling", |host, class, state| Ok(is_tunneling(host, class, state)?.tunneling))
}

/// Frequency of non-localized hosts `□_{L_k}(0)`.
pub fn localization_probability(cfg: &ExperimentConfig, msa: &MsaParams, k: u32) -> Result<EventEstimate> {
    event_estimate(cfg, msa, k, "non_localized", |host, class, state| {
        Ok(!is_localized(&state.operator(host)?.spec, class).localized)
    })
}

/// Decay rate of one eigenvector: least squares slope of `−ln|ψ(x)|`
/// against `‖x − x_0‖`, `x_0` the maximum of `|ψ|`, over the other sites
/// with `|ψ(x)| ≥ DECAY_FIT_FLOOR`.
pub fn eigenvector_decay_rate(cube: &Cube, psi: &[f64]) -> Option<f64> {
    let sites = cube.sites();
    let (i0, _) = psi.iter().enumerate().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))?;
    let x0 = &sites[i0];
    let (xs, ys): (Vec<f64>, Vec<f64>) = sites
        .iter()
        .zip(psi)
        .filter(|(_, v)| v.abs() >= DECAY_FIT_FLOOR)
        .map(|(x, v)| (crate::lattice::max_norm_dist(x, x0) as f64, -v.abs().ln()))
        .unzip();
    fit_line(&xs, &ys).map(|f| f.slope)
}

/// `m̂`: median decay rate over the eigenvectors of one spectrum.
pub fn decay_rate_estimate(spec: &SpectralData) -> Option<f64> {
    let mut rates: Vec<f64> = (0..spec.len())
        .filter_map(|j| eigenvector_decay_rate(&spec.cube, &spec.eigenvector(j)))
        .collect();
    if rates.is_empty() {
        return None;
    }
    rates.sort_by(f64::total_cmp);
    let mid = rates.len() / 2;
    Some(if rates.len() % 2 == 1 { rates[mid] } else { 0.5 * (rates[mid - 1] + rates[mid]) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignTest {
    pub wins: u64,
    pub losses: u64,
    pub ties: u64,
    /// One-sided `P{Bin(wins + losses, 1/2) ≥ wins}`.
    pub p_value: f64,
}

impl SignTest {
    pub fn passes(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

/// One-sided sign test that `a` exceeds `b` on paired samples.
pub fn sign_test(a: &[f64], b: &[f64]) -> SignTest {
    let (mut wins, mut losses, mut ties) = (0u64, 0u64, 0u64);
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(std::cmp::Ordering::Greater) => wins += 1,
            Some(std::cmp::Ordering::Less) => losses += 1,
            _ => ties += 1,
        }
    }
    let n = wins + losses;
    let p_value = if n == 0 {
        1.0
    } else if wins == 0 {
        1.0
    } else {
        let bin = Binomial::new(0.5, n).expect("valid binomial");
        bin.sf(wins - 1)
    };
    SignTest { wins, losses, ties, p_value }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayComparison {
    pub g_high: f64,
    pub g_low: f64,
    pub high: Vec<Option<f64>>,
    pub low: Vec<Option<f64>>,
    pub test: SignTest,
}

/// Paired `m̂` at two couplings on the same potentials.
pub fn decay_rate_comparison(cfg: &ExperimentConfig, g_high: f64, g_low: f64) -> Result<DecayComparison> {
    cfg.validate()?;
    let ens = cfg.ensemble.build(cfg.nu)?;
    let cube = cfg.cube();
    let pairs = par_samples(cfg, |i| {
        let field = sample_field(cfg, &ens, &cube, i)?;
        let hi = decay_rate_estimate(&spectrum(&assemble_field(&field, g_high))?);
        let lo = decay_rate_estimate(&spectrum(&assemble_field(&field, g_low))?);
        Ok((hi, lo))
    })?;
    let (high, low): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    let (a, b): (Vec<f64>, Vec<f64>) = high.iter().zip(&low).filter_map(|(h, l)| Some(((*h)?, (*l)?))).unzip();
    Ok(DecayComparison { g_high, g_low, test: sign_test(&a, &b), high, low })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpacingHistogram {
    pub edges: Vec<f64>,
    /// Fraction of all nearest-neighbour spacings per bin; sums to one.
    pub mass: Vec<f64>,
    pub min_spacings: Vec<f64>,
    pub degenerate_fraction: f64,
    pub samples: usize,
}

/// Nearest-neighbour spacing histogram over `bins` equal bins on
/// `[0, max spacing]`, plus the per-sample minimum spacing.
pub fn spacing_histogram(cfg: &ExperimentConfig, bins: usize) -> Result<SpacingHistogram> {
    if bins == 0 {
        return Err(Error::param("bins", "need at least one bin"));
    }
    let spectra: Vec<Vec<f64>> = sample_spectra(cfg, &[cfg.g])?.into_iter().map(|mut v| v.remove(0)).collect();
    Ok(histogram_from_spectra(&spectra, bins))
}

pub fn histogram_from_spectra(spectra: &[Vec<f64>], bins: usize) -> SpacingHistogram {
    let spacings: Vec<Vec<f64>> = spectra.iter().map(|ev| ev.windows(2).map(|w| w[1] - w[0]).collect()).collect();
    let min_spacings: Vec<f64> = spacings.iter().map(|s| s.iter().copied().fold(f64::INFINITY, f64::min)).collect();
    let degenerate = min_spacings.iter().filter(|&&s| s <= DEGENERACY_TOLERANCE).count();
    let all: Vec<f64> = spacings.into_iter().flatten().collect();
    let top = all.iter().copied().fold(0.0, f64::max);
    let width = if top > 0.0 { top / bins as f64 } else { 1.0 };
    let mut counts = vec![0u64; bins];
    for s in &all {
        counts[((s / width) as usize).min(bins - 1)] += 1;
    }
    let total = all.len().max(1) as f64;
    SpacingHistogram {
        edges: (0..=bins).map(|i| i as f64 * width).collect(),
        mass: counts.iter().map(|&c| c as f64 / total).collect(),
        min_spacings,
        degenerate_fraction: if spectra.is_empty() { 0.0 } else { degenerate as f64 / spectra.len() as f64 },
        samples: spectra.len(),
    }
}

pub fn write_wegner_csv<W: Write>(fit: &ScalingFit, mut out: W) -> Result<()> {
    writeln!(out, "s,count,n,p,ci_lo,ci_hi")?;
    for p in &fit.points {
        let f = &p.freq;
        writeln!(out, "{:.16e},{},{},{:.16e},{:.16e},{:.16e}", p.x, f.count, f.n, f.p, f.ci_lo, f.ci_hi)?;
    }
    Ok(())
}

pub fn write_minami_csv<W: Write>(fit: &ScalingFit, j: usize, mut out: W) -> Result<()> {
    writeln!(out, "interval_len,J,count,n,p,ci_lo,ci_hi")?;
    for p in &fit.points {
        let f = &p.freq;
        writeln!(out, "{:.16e},{j},{},{},{:.16e},{:.16e},{:.16e}", p.x, f.count, f.n, f.p, f.ci_lo, f.ci_hi)?;
    }
    Ok(())
}

pub fn write_prob_csv<W: Write>(rows: &[EventEstimate], mut out: W) -> Result<()> {
    writeln!(out, "g,k,event,count,n,p,ci_lo,ci_hi")?;
    for r in rows {
        let f = &r.freq;
        writeln!(out, "{:.16e},{},{},{},{},{:.16e},{:.16e},{:.16e}", r.g, r.k, r.event, f.count, f.n, f.p, f.ci_lo, f.ci_hi)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{diophantine_frequency, FrequencyKind};

    fn config(radius: u64, g: f64, samples: usize) -> ExperimentConfig {
        ExperimentConfig {
            d: 1,
            nu: 1,
            radius,
            g,
            samples,
            seed_base: 1000,
            ensemble: EnsembleParams { m: 1, c: 0.75, n_max: 30, step: 4 },
            freqs: diophantine_frequency(&FrequencyKind::Golden, 1, 1).unwrap(),
        }
    }

    #[test]
    fn wilson_examples() {
        // closed form at p̂ = 1/2, n = 100
        let (lo, hi) = wilson_interval(50, 100);
        let z2 = Z95 * Z95;
        let half = Z95 * (0.25 / 100.0 + z2 / 40000.0).sqrt() / (1.0 + z2 / 100.0);
        assert!((lo - (0.5 - half)).abs() < 1e-15 && (hi - (0.5 + half)).abs() < 1e-15);
        let (lo, hi) = wilson_interval(0, 100);
        assert_eq!(lo, 0.0);
        assert!((hi - z2 / (100.0 + z2)).abs() < 1e-15);
        assert_eq!(wilson_interval(0, 0), (0.0, 1.0));
        for (c, n) in [(1, 3), (7, 7), (13, 1000)] {
            let f = Frequency::new(c, n);
            assert!(f.ci_lo <= f.p && f.p <= f.ci_hi);
        }
    }

    #[test]
    fn line_fit_recovers_power_law() {
        let xs: Vec<f64> = [0.01f64, 0.02, 0.05, 0.1].iter().map(|x| x.ln()).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 0.3).collect();
        let f = fit_line(&xs, &ys).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.intercept - 0.3).abs() < 1e-12);
        assert!((f.slope_ci.1 - f.slope_ci.0).abs() < 1e-9);
        assert!(fit_line(&xs[..1], &ys[..1]).is_none());
        let noisy = [0.0, 1.1, 1.9, 3.2];
        let f = fit_line(&[0.0, 1.0, 2.0, 3.0], &noisy).unwrap();
        assert!(f.slope_ci.0 < f.slope && f.slope < f.slope_ci.1);
    }

    #[test]
    fn sign_test_examples() {
        let t = sign_test(&[2.0; 10], &[1.0; 10]);
        assert_eq!((t.wins, t.losses), (10, 0));
        assert!((t.p_value - 0.5f64.powi(10)).abs() < 1e-15);
        let t = sign_test(&[1.0, 2.0], &[1.0, 3.0]);
        assert_eq!((t.wins, t.losses, t.ties), (0, 1, 1));
        assert_eq!(t.p_value, 1.0);
        assert!(!t.passes(0.05));
    }

    #[test]
    fn samples_are_reproducible_and_thread_independent() {
        let cfg = config(4, 20.0, 64);
        let a = sample_spectra(&cfg, &[20.0]).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| sample_spectra(&cfg, &[20.0]).unwrap());
        assert_eq!(a, b);
        let (w0, t0) = sample_point(&cfg, 3);
        let (w1, t1) = sample_point(&cfg, 3);
        assert_eq!(w0, w1);
        assert_eq!(t0.get(5, 1), t1.get(5, 1));
    }

    #[test]
    fn zero_width_grid_points() {
        let spectra = vec![vec![-1.0, 0.5, 2.0], vec![0.25, 0.3]];
        let w = wegner_from_spectra(&spectra, 0.0, &[0.0, 0.25, 0.5]);
        assert_eq!(w.points[0].freq.count, 0);
        assert_eq!(w.points[1].freq.count, 1);
        assert_eq!(w.points[2].freq.count, 2);
        let m = minami_from_spectra(&spectra, 0.3, 2, &[0.0, 0.06, 0.1]);
        assert_eq!(m.points[0].freq.count, 0);
        assert_eq!(m.points[2].freq.count, 1);
        assert!(wegner_scan(&config(2, 1.0, 100), 0.0, &[0.1, 0.5]).is_err());
        assert!(wegner_scan(&config(2, 1.0, 50), 0.0, &[0.01, 0.5]).is_err());
    }

    #[test]
    fn minami_with_j_one_is_a_wegner_law() {
        let spectra: Vec<Vec<f64>> = vec![vec![-0.3, 0.04], vec![0.2], vec![-0.01, 0.9]];
        let grid = [0.02, 0.1, 0.5];
        let m = minami_from_spectra(&spectra, 0.0, 1, &grid);
        let w = wegner_from_spectra(&spectra, 0.0, &[0.01, 0.05, 0.25]);
        for (a, b) in m.points.iter().zip(&w.points) {
            assert_eq!(a.freq.count, b.freq.count);
        }
    }

    #[test]
    fn free_laplacian_spacings_are_deterministic() {
        let cfg = config(5, 0.0, 20);
        let h = spacing_histogram(&cfg, 10).unwrap();
        assert!(h.min_spacings.windows(2).all(|w| w[0] == w[1]));
        assert!((h.mass.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(h.degenerate_fraction, 0.0);
        let dup = histogram_from_spectra(&[vec![0.0, 0.0, 1.0], vec![0.0, 1.0]], 4);
        assert_eq!(dup.degenerate_fraction, 0.5);
    }

    #[test]
    fn decay_rate_of_exponential_profile() {
        let cube = Cube::centered(1, 6);
        let psi: Vec<f64> = cube.sites().iter().map(|x| (-0.7 * x[0].abs() as f64).exp()).collect();
        assert!((eigenvector_decay_rate(&cube, &psi).unwrap() - 0.7).abs() < 1e-12);
    }

    #[test]
    fn free_laplacian_is_never_localized() {
        let msa = MsaParams { l0: 6, m: 0.5, center_step: 1 };
        let cfg = config(0, 0.0, 8);
        let e = localization_probability(&cfg, &msa, 1).unwrap();
        assert_eq!(e.freq.count, 8);
        let t = tunneling_probability(&cfg, &msa, 1).unwrap();
        assert_eq!(t.freq.count, 0);
    }

    #[test]
    fn csv_schemas() {
        let fit = wegner_from_spectra(&[vec![0.1]], 0.0, &[0.5]);
        let mut buf = Vec::new();
        write_wegner_csv(&fit, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "s,count,n,p,ci_lo,ci_hi");
        assert!(text.lines().nth(1).unwrap().starts_with("5.0000000000000000e-1,1,1,"));
        let mut buf = Vec::new();
        write_minami_csv(&fit, 2, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("interval_len,J,count,n,p,ci_lo,ci_hi\n"));
        let est = EventEstimate { g: 1.0, k: 1, event: "tunneling".into(), freq: Frequency::new(1, 2), outcomes: vec![] };
        let mut buf = Vec::new();
        write_prob_csv(&[est], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().nth(1).unwrap().split(',').nth(2), Some("tunneling"));
    }
}
