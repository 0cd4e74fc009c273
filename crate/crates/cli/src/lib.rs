//! Config-driven front end for the `qploc` experiments.
//!
//! Every run writes `config.resolved.toml`, `version.txt` and `run.json`
//! into the output directory next to its CSV/JSON artifacts. Exit codes:
//! 0 success, 1 validation error, 2 numerical failure; failures also leave
//! a `diagnostics.json`.

pub mod config;

use std::ffi::OsString;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use qploc::dynamics::{div_certificate, usr_certificate, TorusPoint};
use qploc::lattice::{Cube, Site};
use qploc::msa::{classify_cube, ClassificationConfig, CubeReport, CubeState, EnergyPolicy};
use qploc::operator::{assemble_field, gri_residual, spectrum, PotentialField, Resolvent};
use qploc::randelette::{separation_generation, ThetaSample};
use qploc::stats::{
    self, all_zero, check_grid, decay_rate_comparison, histogram_from_spectra, localization_probability,
    minami_from_spectra, sample_field, sample_spectra, sign_test, tunneling_probability, wegner_from_spectra,
    EventEstimate,
};

pub use config::{FieldError, RunConfig};

pub const OUT_ENV: &str = "QPLOC_OUT";
pub const DEFAULT_OUT: &str = "qploc-out";

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

/// `git describe` of the build, with the crate version as fallback.
pub fn version_string() -> String {
    format!(
        "qploc {} ({})",
        env!("CARGO_PKG_VERSION"),
        option_env!("QPLOC_GIT_DESCRIBE").unwrap_or("unknown")
    )
}

#[derive(Debug, Parser)]
#[command(name = "qploc", version, about = "Grand-ensemble potentials, MSA classification and eigenvalue statistics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML run configuration; built-in defaults when absent.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = OUT_ENV)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: machine parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Replaces both `ensemble.seed` and `experiment.seed_base`.
    #[arg(long, global = true)]
    pub seed_override: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// USR and DIV certificates of the configured frequencies.
    DynamicsCheck,
    /// Hull samples, coverage/overlap/gradient checks and the LVB experiment.
    EnsembleInspect,
    /// Full MSA classification of sampled host cubes.
    Classify,
    /// Wegner scaling in the distance `s`.
    Wegner,
    /// Minami scaling in the interval length, plus spacing statistics.
    Minami,
    /// Tunneling frequency against g.
    Tunneling,
    /// Non-localization frequency against g, and the paired decay-rate ordering.
    Localize,
    /// Geometric resolvent identity and other operator identities.
    GriCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::DynamicsCheck => "dynamics-check",
            Command::EnsembleInspect => "ensemble-inspect",
            Command::Classify => "classify",
            Command::Wegner => "wegner",
            Command::Minami => "minami",
            Command::Tunneling => "tunneling",
            Command::Localize => "localize",
            Command::GriCheck => "gri-check",
        }
    }
}

#[derive(Debug)]
enum Failure {
    Validation { field: String, message: String },
    Core(qploc::Error),
}

impl From<FieldError> for Failure {
    fn from(e: FieldError) -> Self {
        Failure::Validation { field: e.field, message: e.message }
    }
}

impl From<qploc::Error> for Failure {
    fn from(e: qploc::Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Core(qploc::Error::from(e))
    }
}

impl Failure {
    fn exit_code(&self) -> i32 {
        match self {
            Failure::Core(e) if e.is_numerical() => EXIT_NUMERICAL,
            _ => EXIT_VALIDATION,
        }
    }

    fn diagnostics(&self) -> serde_json::Value {
        match self {
            Failure::Validation { field, message } => json!({
                "status": "error",
                "exit_code": self.exit_code(),
                "kind": "validation",
                "field": field,
                "message": message,
            }),
            Failure::Core(e) => json!({
                "status": "error",
                "exit_code": self.exit_code(),
                "kind": if e.is_numerical() { "numerical" } else { "validation" },
                "message": e.to_string(),
            }),
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

/// Parses arguments and runs; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    run_cli(&cli)
}

pub fn run_cli(cli: &Cli) -> i32 {
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let result = load_config(cli).and_then(|cfg| {
        fs::create_dir_all(&out)?;
        let stale = out.join("diagnostics.json");
        if stale.exists() {
            fs::remove_file(stale)?;
        }
        write_provenance(&out, cli.command, &cfg)?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads.unwrap_or(0))
            .build()
            .map_err(|e| Failure::Validation { field: "--threads".into(), message: e.to_string() })?;
        pool.install(|| dispatch(cli.command, &cfg, &out))
    });
    match result {
        Ok(summary) => {
            println!("{}: {summary}", cli.command.name());
            EXIT_OK
        }
        Err(f) => {
            let diag = f.diagnostics();
            eprintln!("{}: {}", cli.command.name(), diag);
            if fs::create_dir_all(&out).is_ok() {
                let _ = fs::write(out.join("diagnostics.json"), pretty(&diag));
            }
            f.exit_code()
        }
    }
}

fn load_config(cli: &Cli) -> Outcome<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::Validation {
                field: "--config".into(),
                message: format!("cannot read {}: {e}", path.display()),
            })?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed_override {
        cfg.ensemble.seed = seed;
        cfg.experiment.seed_base = seed;
    }
    Ok(cfg.resolve()?)
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn write_json<T: Serialize>(out: &Path, name: &str, value: &T) -> Outcome<()> {
    fs::write(out.join(name), pretty(value))?;
    Ok(())
}

fn write_provenance(out: &Path, command: Command, cfg: &RunConfig) -> Outcome<()> {
    fs::write(out.join("config.resolved.toml"), cfg.to_toml())?;
    fs::write(out.join("version.txt"), format!("{}\n", version_string()))?;
    write_json(
        out,
        "run.json",
        &json!({
            "subcommand": command.name(),
            "seed": cfg.ensemble.seed,
            "seed_base": cfg.experiment.seed_base,
        }),
    )
}

fn dispatch(command: Command, cfg: &RunConfig, out: &Path) -> Outcome<String> {
    match command {
        Command::DynamicsCheck => dynamics_check(cfg, out),
        Command::EnsembleInspect => ensemble_inspect(cfg, out),
        Command::Classify => classify(cfg, out),
        Command::Wegner => wegner(cfg, out),
        Command::Minami => minami(cfg, out),
        Command::Tunneling => events(cfg, out, true),
        Command::Localize => events(cfg, out, false),
        Command::GriCheck => gri_check(cfg, out),
    }
}

fn dynamics_check(cfg: &RunConfig, out: &Path) -> Outcome<String> {
    let freqs = cfg.frequencies()?;
    let x = &cfg.experiment;
    let usr = usr_certificate(&freqs, x.usr_exponent, x.usr_range)?;
    let div = div_certificate(&freqs, x.usr_range, 1000, cfg.ensemble.seed)?;
    write_json(
        out,
        "dynamics.json",
        &json!({
            "frequencies": freqs.to_decimal_strings(),
            "usr": usr,
            "usr_valid": usr.is_valid(),
            "usr_max_cube_radius": usr.max_cube_radius(),
            "div": div,
        }),
    )?;
    Ok(format!("4·c_min = {:.6} at {:?}, DIV accepted = {}", 4.0 * usr.c_min, usr.argmin, div.accepted))
}

fn ensemble_inspect(cfg: &RunConfig, out: &Path) -> Outcome<String> {
    let nu = cfg.dynamics.nu;
    let ens = cfg.ensemble_params().build(nu)?;
    let theta = ThetaSample::seeded(cfg.ensemble.seed);
    let points = cfg.experiment.hull_grid;

    // hull along the first coordinate axis
    let rows = (0..points)
        .into_par_iter()
        .map(|i| {
            let mut coords = vec![0.0; nu];
            coords[0] = i as f64 / points as f64;
            let w = TorusPoint::new(coords)?;
            let v = ens.hull_eval(&theta, &w)?;
            let grad = ens.hull_gradient(&theta, &w)?;
            let mut covered = true;
            let mut overlap = 0;
            for n in 0..=ens.n_max() {
                covered &= ens.plateau_index(n, &w)?.is_some();
                overlap = overlap.max(ens.overlap_count(n, &w)?);
            }
            Ok((w, v, grad, covered, overlap))
        })
        .collect::<qploc::Result<Vec<_>>>()?;
    let mut csv = String::new();
    let header: Vec<String> = (1..=nu)
        .map(|i| format!("omega_{i}"))
        .chain(std::iter::once("value".into()))
        .chain((1..=nu).map(|i| format!("grad_{i}")))
        .collect();
    csv.push_str(&header.join(","));
    csv.push('\n');
    for (w, v, grad, _, _) in &rows {
        let fields: Vec<String> = w
            .coords()
            .iter()
            .chain(std::iter::once(v))
            .chain(grad.iter())
            .map(|x| format!("{x:.16e}"))
            .collect();
        csv.push_str(&fields.join(","));
        csv.push('\n');
    }
    fs::write(out.join("hull.csv"), csv)?;
    let sup_grad = rows.iter().flat_map(|r| r.2.iter()).fold(0.0f64, |a, g| a.max(g.abs()));
    let checks = json!({
        "grid_points": points,
        "coverage": rows.iter().all(|r| r.3),
        "max_overlap": rows.iter().map(|r| r.4).max().unwrap_or(0),
        "overlap_bound": ens.overlap_bound_total(),
        "tail_bound": ens.tail_bound(),
        "gradient_bound": ens.gradient_bound(),
        "sup_gradient_on_grid": sup_grad,
    });
    write_json(out, "checks.json", &checks)?;

    // LVB at the center site, one cube per configured radius
    let freqs = cfg.frequencies()?;
    let a = cfg.experiment.usr_exponent;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.ensemble.seed);
    let omega = TorusPoint::random(nu, &mut rng);
    let mut lvb = Vec::new();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for &l in &cfg.experiment.lvb_radii {
        let cube = Cube::centered(cfg.dynamics.d, l);
        let cert = usr_certificate(&freqs, a, 2 * l)?;
        let sep = separation_generation(l, a, cert.c_min)?;
        if sep.n_min > ens.n_max() {
            return Err(Failure::Validation {
                field: "ensemble.n_max".into(),
                message: format!("LVB at L = {l} needs generation {} > N_max", sep.n_min),
            });
        }
        let separated = ens.support_separation_check(&freqs, &cube, &omega, sep.n_min)?;
        let centre = vec![0i64; cfg.dynamics.d];
        let report = ens.lvb_experiment(&freqs, &cube, &centre, &omega, sep.n_min, 8, rng.random())?;
        xs.push((l as f64).ln());
        ys.push(report.density_bound.ln());
        lvb.push(json!({ "L": l, "c_min": cert.c_min, "separation": sep, "separated": separated, "report": report }));
    }
    let fit = stats::fit_line(&xs, &ys);
    write_json(
        out,
        "lvb.json",
        &json!({
            "runs": lvb,
            "density_exponent": fit.as_ref().map(|f| f.slope),
            "predicted_exponent": ens.decay() * a / std::f64::consts::LN_2,
        }),
    )?;
    Ok(format!(
        "coverage = {}, max overlap = {}, LVB density exponent = {:?}",
        checks["coverage"], checks["max_overlap"], fit.map(|f| f.slope)
    ))
}

#[derive(Serialize)]
struct SampleReport {
    sample: usize,
    report: CubeReport,
}

fn classification(cfg: &RunConfig, g: f64) -> Outcome<ClassificationConfig> {
    Ok(cfg.msa_params().classification(g, cfg.experiment.k, cfg.dynamics.nu)?)
}

fn classify(cfg: &RunConfig, out: &Path) -> Outcome<String> {
    let g = cfg.schedule.g;
    let class = classification(cfg, g)?;
    let host = Cube::centered(cfg.dynamics.d, class.scale());
    let exp = cfg.experiment_config(host.radius, g)?;
    let ens = exp.ensemble.build(exp.nu)?;
    let policy = EnergyPolicy { explicit: cfg.experiment.energies.clone(), subcube_eigenvalues: cfg.experiment.subcube_eigenvalues };
    let reports = (0..exp.samples)
        .into_par_iter()
        .map(|i| {
            let state = CubeState::new(sample_field(&exp, &ens, &host, i)?, g);
            Ok(SampleReport { sample: i, report: classify_cube(&host, &class, &state, &policy)? })
        })
        .collect::<qploc::Result<Vec<_>>>()?;
    let count = |f: &dyn Fn(&CubeReport) -> bool| reports.iter().filter(|r| f(&r.report)).count();
    let localized = count(&|r| r.localization.localized);
    let summary = json!({
        "samples": reports.len(),
        "host_radius": host.radius,
        "k": class.k,
        "g": g,
        "threshold": class.threshold(),
        "localized": localized,
        "tunneling": count(&|r| r.tunneling.as_ref().is_some_and(|t| t.tunneling)),
        "multiresonant": count(&|r| r.multiresonance.as_ref().is_some_and(|t| t.multiresonant)),
        "good_cnr_singular": count(&|r| !r.good_cnr_singular().is_empty()),
        "nr_singular": count(&|r| !r.nr_singular().is_empty()),
    });
    write_json(out, "reports.json", &reports)?;
    write_json(out, "summary.json", &summary)?;
    Ok(format!("{localized}/{} host cubes localized", reports.len()))
}

fn spectra_at(cfg: &RunConfig) -> Outcome<(stats::ExperimentConfig, Vec<Vec<f64>>)> {
    let exp = cfg.experiment_config(cfg.experiment.radius, cfg.schedule.g)?;
    exp.check_fit()?;
    let spectra = sample_spectra(&exp, &[exp.g])?.into_iter().map(|mut v| v.remove(0)).collect();
    Ok((exp, spectra))
}

fn wegner(cfg: &RunConfig, out: &Path) -> Outcome<String> {
    check_grid(&cfg.experiment.s_grid, "s_grid")?;
    let (_, spectra) = spectra_at(cfg)?;
    let fit = wegner_from_spectra(&spectra, cfg.experiment.energy, &cfg.experiment.s_grid);
    all_zero(&fit)?;
    stats::write_wegner_csv(&fit, BufWriter::new(fs::File::create(out.join("wegner.csv"))?))?;
    write_json(out, "fit.json", &fit)?;
    Ok(format!("s-exponent {:?}", fit.fit.map(|f| f.slope)))
}

fn minami(cfg: &RunConfig, out: &Path) -> Outcome<String> {
    check_grid(&cfg.experiment.interval_grid, "interval_grid")?;
    let (_, spectra) = spectra_at(cfg)?;
    let x = &cfg.experiment;
    let fit = minami_from_spectra(&spectra, x.interval_centre, x.j, &x.interval_grid);
    all_zero(&fit)?;
    stats::write_minami_csv(&fit, x.j, BufWriter::new(fs::File::create(out.join("minami.csv"))?))?;
    write_json(out, "fit.json", &fit)?;
    let hist = histogram_from_spectra(&spectra, x.spacing_bins);
    write_json(out, "spacing.json", &hist)?;
    Ok(format!(
        "|I|-exponent {:?} for J = {}, degenerate fraction {}",
        fit.fit.map(|f| f.slope),
        x.j,
        hist.degenerate_fraction
    ))
}

#[derive(Serialize)]
struct PairedComparison {
    g_a: f64,
    g_b: f64,
    /// One-sided sign test that the event is more frequent at `g_a`.
    test: stats::SignTest,
}

fn events(cfg: &RunConfig, out: &Path, tunneling: bool) -> Outcome<String> {
    let msa = cfg.msa_params();
    let k = cfg.experiment.k;
    let mut rows: Vec<EventEstimate> = Vec::new();
    for g in cfg.g_list() {
        let exp = cfg.experiment_config(0, g)?;
        rows.push(if tunneling { tunneling_probability(&exp, &msa, k)? } else { localization_probability(&exp, &msa, k)? });
    }
    stats::write_prob_csv(&rows, BufWriter::new(fs::File::create(out.join("prob.csv"))?))?;
    let as_f64 = |v: &[bool]| v.iter().map(|b| *b as u8 as f64).collect::<Vec<_>>();
    let paired: Vec<PairedComparison> = rows
        .windows(2)
        .map(|w| PairedComparison { g_a: w[0].g, g_b: w[1].g, test: sign_test(&as_f64(&w[0].outcomes), &as_f64(&w[1].outcomes)) })
        .collect();
    let mut summary = json!({
        "event": rows.first().map(|r| r.event.clone()),
        "k": k,
        "estimates": rows.iter().map(|r| json!({ "g": r.g, "freq": r.freq })).collect::<Vec<_>>(),
        "paired": paired,
    });
    if !tunneling {
        if let Some([hi, lo]) = cfg.experiment.decay_pair {
            let exp = cfg.experiment_config(cfg.experiment.radius, hi)?;
            summary["decay_rates"] = serde_json::to_value(decay_rate_comparison(&exp, hi, lo)?).expect("serializable");
        }
    }
    write_json(out, "summary.json", &summary)?;
    let line: Vec<String> = rows.iter().map(|r| format!("g={}: {}/{}", r.g, r.freq.count, r.freq.n)).collect();
    Ok(line.join(", "))
}

fn gri_check(cfg: &RunConfig, out: &Path) -> Outcome<String> {
    let g = cfg.schedule.g;
    let radius = cfg.experiment.radius.max(1);
    let exp = cfg.experiment_config(radius, g)?;
    let ens = exp.ensemble.build(exp.nu)?;
    let host = exp.cube();
    let outside_any = |inner: &Cube| host.sites().into_iter().filter(|y| !inner.contains(y)).collect::<Vec<Site>>();
    let instances = (0..cfg.experiment.gri_instances)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.ensemble.seed.wrapping_add(i as u64));
            let field = sample_field(&exp, &ens, &host, i)?;
            let inner_r = rng.random_range(0..radius);
            let slack = (radius - inner_r) as i64;
            let centre: Site = (0..exp.d).map(|_| rng.random_range(-slack..=slack)).collect();
            let inner = Cube::new(centre, inner_r)?;
            let host_spec = spectrum(&assemble_field(&field, g))?;
            let inner_spec = spectrum(&assemble_field(&field.restrict(&inner)?, g))?;
            // the energy sits midway in a gap of the combined spectra
            let mut all: Vec<f64> = host_spec.eigenvalues.iter().chain(&inner_spec.eigenvalues).copied().collect();
            all.sort_by(f64::total_cmp);
            let j = rng.random_range(0..all.len() - 1);
            let energy = 0.5 * (all[j] + all[j + 1]);
            let sites = inner.sites();
            let u = sites[rng.random_range(0..sites.len())].clone();
            let outside = outside_any(&inner);
            let y = outside[rng.random_range(0..outside.len())].clone();
            let check = gri_residual(&field, &inner, g, energy, &u, &y)?;
            let scale = 1.0 / host_spec.distance(energy).min(inner_spec.distance(energy));
            Ok(json!({
                "inner": inner, "u": u, "y": y, "energy": energy,
                "lhs": check.lhs, "rhs": check.rhs, "residual": check.residual,
                "relative_residual": check.residual / scale,
            }))
        })
        .collect::<qploc::Result<Vec<_>>>()?;
    let max_rel = instances.iter().map(|v| v["relative_residual"].as_f64().unwrap_or(f64::NAN)).fold(0.0, f64::max);

    // path graphs, Green symmetry and the resolvent bound on the first sample
    let mut path_error: f64 = 0.0;
    for r in 0..=31u64 {
        let cube = Cube::centered(1, r);
        let n = cube.site_count();
        let spec = spectrum(&assemble_field(&PotentialField::from_values(cube, vec![0.0; n])?, 0.0))?;
        let mut exact: Vec<f64> =
            (1..=n).map(|j| 2.0 * (j as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos()).collect();
        exact.sort_by(f64::total_cmp);
        path_error = spec.eigenvalues.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(path_error, f64::max);
    }
    let field = sample_field(&exp, &ens, &host, 0)?;
    let h = assemble_field(&field, g);
    let spec = spectrum(&h)?;
    let energy = spec.eigenvalues[0] - 1.0;
    let res = Resolvent::new(&h, energy)?;
    let (mut asym, mut bound_ratio): (f64, f64) = (0.0, 0.0);
    for x in host.sites() {
        let col = res.column(&x)?;
        for (j, y) in host.sites().iter().enumerate() {
            let gyx = spec.green(energy, y, &x)?;
            asym = asym.max((col[j] - gyx.value).abs() * gyx.distance);
            bound_ratio = bound_ratio.max(col[j].abs() * gyx.distance);
        }
    }
    write_json(
        out,
        "gri.json",
        &json!({
            "g": g,
            "host_radius": radius,
            "max_relative_residual": max_rel,
            "instances": instances,
            "path_graph_max_error": path_error,
            "green_symmetry_max_relative": asym,
            "resolvent_bound_max_ratio": bound_ratio,
        }),
    )?;
    Ok(format!("max relative GRI residual {max_rel:.2e}, path-graph error {path_error:.2e}"))
}
