//! Run configuration: one TOML file, unknown keys rejected, validated with
//! field paths before anything runs.

use serde::{Deserialize, Serialize};

use qploc::dynamics::{diophantine_frequency, FrequencyKind, FrequencyMatrix};
use qploc::lattice::ScaleSchedule;
use qploc::operator::tuned_coupling;
use qploc::randelette::{default_decay, RandeletteEnsemble, DEFAULT_STEP};
use qploc::stats::{EnsembleParams, ExperimentConfig, MsaParams};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub dynamics: DynamicsBlock,
    #[serde(default)]
    pub ensemble: EnsembleBlock,
    #[serde(default)]
    pub schedule: ScheduleBlock,
    #[serde(default)]
    pub experiment: ExperimentBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsBlock {
    /// `golden`, `silver` or `custom`.
    pub kind: String,
    pub nu: usize,
    pub d: usize,
    /// Decimal strings, one row per lattice direction; required for `custom`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frequencies: Option<Vec<Vec<String>>>,
}

impl Default for DynamicsBlock {
    fn default() -> Self {
        Self { kind: "golden".into(), nu: 1, d: 1, frequencies: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleBlock {
    #[serde(rename = "M")]
    pub m: u32,
    /// Decay rate; defaults to `(M + 1) ln 2 + 1/2`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    pub n_max: u32,
    pub step: u32,
    pub seed: u64,
}

impl Default for EnsembleBlock {
    fn default() -> Self {
        Self { m: 1, c: None, n_max: 40, step: DEFAULT_STEP, seed: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleBlock {
    #[serde(rename = "L0")]
    pub l0: u64,
    /// Coupling; ignored when `tuned_margin` is set.
    pub g: f64,
    pub m: f64,
    /// Use the coupling at which the initial-scale ratio equals this.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tuned_margin: Option<f64>,
}

impl Default for ScheduleBlock {
    fn default() -> Self {
        Self { l0: 6, g: 20.0, m: 1.0, tuned_margin: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentBlock {
    pub samples: usize,
    pub seed_base: u64,
    /// Cube radius for spectral statistics.
    pub radius: u64,
    /// MSA level.
    pub k: u32,
    /// Couplings for probability scans; empty means `[schedule.g]`.
    pub g_list: Vec<f64>,
    pub energy: f64,
    pub s_grid: Vec<f64>,
    pub interval_centre: f64,
    pub interval_grid: Vec<f64>,
    #[serde(rename = "J")]
    pub j: usize,
    pub spacing_bins: usize,
    /// Sub-cube center step for tunneling and multi-resonance searches.
    pub center_step: u64,
    /// Explicit energies for `classify`.
    pub energies: Vec<f64>,
    pub subcube_eigenvalues: bool,
    /// Paired couplings `[high, low]` for the decay-rate ordering in `localize`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decay_pair: Option<[f64; 2]>,
    pub usr_exponent: f64,
    pub usr_range: u64,
    pub hull_grid: usize,
    /// Cube radii for the LVB scaling in `ensemble-inspect`.
    pub lvb_radii: Vec<u64>,
    pub gri_instances: usize,
}

impl Default for ExperimentBlock {
    fn default() -> Self {
        Self {
            samples: 1000,
            seed_base: 1,
            radius: 8,
            k: 1,
            g_list: Vec::new(),
            energy: 0.0,
            s_grid: vec![0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1],
            interval_centre: 0.0,
            interval_grid: vec![0.02, 0.05, 0.1, 0.2],
            j: 2,
            spacing_bins: 50,
            center_step: 1,
            energies: Vec::new(),
            subcube_eigenvalues: false,
            decay_pair: None,
            usr_exponent: 1.0,
            usr_range: 1000,
            hull_grid: 1000,
            lvb_radii: vec![4, 8, 16, 32],
            gri_instances: 100,
        }
    }
}

/// A validation failure at a dotted field path.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl FieldError {
    fn new(field: &str, message: impl Into<String>) -> Self {
        Self { field: field.into(), message: message.into() }
    }
}

impl std::fmt::Display for FieldError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

fn finite(field: &str, v: f64) -> Result<f64, FieldError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(FieldError::new(field, "must be finite"))
    }
}

fn grid(field: &str, v: &[f64]) -> Result<(), FieldError> {
    if v.is_empty() {
        return Err(FieldError::new(field, "must not be empty"));
    }
    if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(FieldError::new(field, "values must be finite and non-negative"));
    }
    Ok(())
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, FieldError> {
        toml::from_str(text).map_err(|e| FieldError::new("config", e.message().to_string()))
    }

    /// Checks every field and fills in derived values (`c`, tuned `g`).
    pub fn resolve(mut self) -> Result<Self, FieldError> {
        let dy = &self.dynamics;
        if dy.nu == 0 {
            return Err(FieldError::new("dynamics.nu", "must be at least 1"));
        }
        if dy.d == 0 {
            return Err(FieldError::new("dynamics.d", "must be at least 1"));
        }
        self.frequencies()?;

        let c = match self.ensemble.c {
            Some(c) => finite("ensemble.c", c)?,
            None => default_decay(self.ensemble.m),
        };
        self.ensemble.c = Some(c);
        RandeletteEnsemble::with_step(self.ensemble.m, c, self.ensemble.n_max, dy.nu, self.ensemble.step)
            .map_err(|e| FieldError::new("ensemble", e.to_string()))?;

        let s = &mut self.schedule;
        if let Some(margin) = s.tuned_margin {
            if !(margin > 0.0) || !margin.is_finite() {
                return Err(FieldError::new("schedule.tuned_margin", "must be positive"));
            }
            s.g = tuned_coupling(s.l0, self.dynamics.d, s.m, margin)
                .map_err(|e| FieldError::new("schedule.tuned_margin", e.to_string()))?;
        }
        if !(finite("schedule.g", s.g)? >= 0.0) {
            return Err(FieldError::new("schedule.g", "coupling must be non-negative"));
        }
        if !(finite("schedule.m", s.m)? > 0.0) {
            return Err(FieldError::new("schedule.m", "mass must be positive"));
        }
        ScaleSchedule::new(s.l0, s.g).map_err(|e| FieldError::new("schedule.L0", e.to_string()))?;

        let x = &self.experiment;
        if x.samples == 0 {
            return Err(FieldError::new("experiment.samples", "must be at least 1"));
        }
        for (i, g) in x.g_list.iter().enumerate() {
            if !(finite(&format!("experiment.g_list[{i}]"), *g)? >= 0.0) {
                return Err(FieldError::new(&format!("experiment.g_list[{i}]"), "coupling must be non-negative"));
            }
        }
        finite("experiment.energy", x.energy)?;
        finite("experiment.interval_centre", x.interval_centre)?;
        grid("experiment.s_grid", &x.s_grid)?;
        grid("experiment.interval_grid", &x.interval_grid)?;
        if x.j == 0 {
            return Err(FieldError::new("experiment.J", "must be at least 1"));
        }
        if x.spacing_bins == 0 {
            return Err(FieldError::new("experiment.spacing_bins", "must be at least 1"));
        }
        if x.center_step == 0 {
            return Err(FieldError::new("experiment.center_step", "must be at least 1"));
        }
        for (i, e) in x.energies.iter().enumerate() {
            finite(&format!("experiment.energies[{i}]"), *e)?;
        }
        if let Some([hi, lo]) = x.decay_pair {
            if !(hi >= 0.0 && lo >= 0.0 && hi.is_finite() && lo.is_finite()) {
                return Err(FieldError::new("experiment.decay_pair", "couplings must be finite and non-negative"));
            }
        }
        if !(finite("experiment.usr_exponent", x.usr_exponent)? > 0.0) {
            return Err(FieldError::new("experiment.usr_exponent", "must be positive"));
        }
        if x.usr_range == 0 {
            return Err(FieldError::new("experiment.usr_range", "must be at least 1"));
        }
        if x.hull_grid == 0 {
            return Err(FieldError::new("experiment.hull_grid", "must be at least 1"));
        }
        if x.lvb_radii.iter().any(|r| *r < 2) {
            return Err(FieldError::new("experiment.lvb_radii", "radii must be at least 2"));
        }
        Ok(self)
    }

    pub fn frequencies(&self) -> Result<FrequencyMatrix, FieldError> {
        let dy = &self.dynamics;
        let freqs = match (dy.kind.as_str(), &dy.frequencies) {
            ("custom", Some(rows)) => FrequencyMatrix::from_decimal_strings(rows),
            ("custom", None) => return Err(FieldError::new("dynamics.frequencies", "required for kind = \"custom\"")),
            (_, Some(_)) => {
                return Err(FieldError::new("dynamics.frequencies", "only allowed with kind = \"custom\""));
            }
            (kind, None) => {
                let kind: FrequencyKind = kind.parse().map_err(|e: qploc::Error| FieldError::new("dynamics.kind", e.to_string()))?;
                diophantine_frequency(&kind, dy.nu, dy.d)
            }
        }
        .map_err(|e| FieldError::new("dynamics.frequencies", e.to_string()))?;
        if freqs.lattice_dim() != dy.d || freqs.phase_dim() != dy.nu {
            return Err(FieldError::new("dynamics.frequencies", "shape does not match (d, nu)"));
        }
        Ok(freqs)
    }

    pub fn ensemble_params(&self) -> EnsembleParams {
        EnsembleParams {
            m: self.ensemble.m,
            c: self.ensemble.c.unwrap_or_else(|| default_decay(self.ensemble.m)),
            n_max: self.ensemble.n_max,
            step: self.ensemble.step,
        }
    }

    pub fn experiment_config(&self, radius: u64, g: f64) -> Result<ExperimentConfig, FieldError> {
        Ok(ExperimentConfig {
            d: self.dynamics.d,
            nu: self.dynamics.nu,
            radius,
            g,
            samples: self.experiment.samples,
            seed_base: self.experiment.seed_base,
            ensemble: self.ensemble_params(),
            freqs: self.frequencies()?,
        })
    }

    pub fn msa_params(&self) -> MsaParams {
        MsaParams { l0: self.schedule.l0, m: self.schedule.m, center_step: self.experiment.center_step }
    }

    pub fn g_list(&self) -> Vec<f64> {
        if self.experiment.g_list.is_empty() {
            vec![self.schedule.g]
        } else {
            self.experiment.g_list.clone()
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve() {
        let c = RunConfig::parse("").unwrap().resolve().unwrap();
        assert_eq!(c.ensemble.c, Some(default_decay(1)));
        assert_eq!(c.g_list(), vec![20.0]);
        let again = RunConfig::parse(&c.to_toml()).unwrap().resolve().unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn negative_coupling_names_the_field() {
        let e = RunConfig::parse("[schedule]\nL0 = 6\ng = -1.0\nm = 1.0\n").unwrap().resolve().unwrap_err();
        assert_eq!(e.field, "schedule.g");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::parse("[schedule]\nL0 = 6\ng = 1.0\nm = 1.0\nbogus = 3\n").is_err());
        assert!(RunConfig::parse("typo = 1\n").is_err());
    }

    #[test]
    fn tuned_margin_sets_the_coupling() {
        let c = RunConfig::parse("[schedule]\nL0 = 6\ng = 0.0\nm = 1.0\ntuned_margin = 2.0\n").unwrap().resolve().unwrap();
        assert!((c.schedule.g / 3.7e16 - 1.0).abs() < 0.05, "{}", c.schedule.g);
    }

    #[test]
    fn custom_frequencies() {
        let text = "[dynamics]\nkind = \"custom\"\nnu = 1\nd = 1\nfrequencies = [[\"0.41421356237309503\"]]\n";
        let c = RunConfig::parse(text).unwrap().resolve().unwrap();
        assert!((c.frequencies().unwrap().vectors()[0].coords()[0] - (2f64.sqrt() - 1.0)).abs() < 1e-15);
        let bad = "[dynamics]\nkind = \"custom\"\nnu = 1\nd = 1\n";
        assert_eq!(RunConfig::parse(bad).unwrap().resolve().unwrap_err().field, "dynamics.frequencies");
    }
}
