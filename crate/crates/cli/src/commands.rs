//! Experiments: spectrum, overlap scan, trajectories and the reproduction
//! bundles that combine them.
//!
//! Mode numbers in every output file are 1-based: `k = 1` is the stationary
//! state, `k = 2` the slowest decaying mode and `k = 3` the next one.

use std::path::{Path, PathBuf};
use std::time::Instant;

use mpemba_core::dynamics::{find_plateau, spectral_trajectory, DecayFit, Plateau, TrajectoryRecord};
use mpemba_core::mpemba::{optimal_unitary, overlap_scan, MpembaRotation, OverlapScan};
use mpemba_core::spectral::{analyze, SpectralDecomposition};
use mpemba_core::spin::{all_to_all_model, amplitude_damping_model, dicke_model, pure_density, random_pure_state};
use mpemba_core::superop::{build_liouvillian, LindbladModel, Vectorization};
use mpemba_core::{ComplexMatrix, Error, C64};
use serde_json::{json, Map, Value};

use crate::config::{ExperimentConfig, ModelParams};
use crate::error::CliError;
use crate::output::{float, OutputDir, Table};

pub const SPECTRUM_FILE: &str = "spectrum.csv";
pub const SCAN_FILE: &str = "overlap_scan.csv";
pub const UNROTATED_FILE: &str = "trajectory_unrotated.csv";
pub const ROTATED_FILE: &str = "trajectory_rotated.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const ASSERTIONS_FILE: &str = "assertions.json";

/// Accepted band for fitted rate over spectral rate.
pub const RATE_RATIO_BAND: (f64, f64) = (0.95, 1.05);
/// Pointwise agreement of the overlap scan with its closed form.
pub const SCAN_LAW_TOL: f64 = 1e-10;
/// Residual overlap after rotation, relative to `max |ℓ|`.
pub const ORTHOGONALITY_TOL: f64 = 1e-9;
pub const UNITARITY_TOL: f64 = 1e-10;
/// Largest relative variation of `E_t` on a plateau.
pub const PLATEAU_VARIATION: f64 = 0.1;
/// Required ratio of un-rotated to rotated `E_t` at the plateau end.
pub const PLATEAU_CONTRAST: f64 = 10.0;
/// The plateau search starts this many fast lifetimes `1/|Re λ_3|` in, once
/// the faster modes have relaxed.
pub const PLATEAU_SETTLE: f64 = 5.0;

pub fn build_model(cfg: &ExperimentConfig) -> Result<LindbladModel, CliError> {
    let model = match &cfg.model {
        ModelParams::Dicke(p) => dicke_model(p, cfg.n)?,
        ModelParams::AllToAll(p) => all_to_all_model(p, cfg.n)?,
        ModelParams::AmplitudeDamping { kappa } => amplitude_damping_model(*kappa)?,
    };
    Ok(model)
}

/// Model, decomposition and the seeded initial state of one configuration.
pub struct Prepared {
    pub config: ExperimentConfig,
    pub model: LindbladModel,
    pub decomposition: SpectralDecomposition,
    pub psi: Vec<C64>,
    pub rho0: ComplexMatrix,
}

pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared, CliError> {
    cfg.validate()?;
    let model = build_model(cfg)?;
    let decomposition = analyze(&build_liouvillian(&model), &cfg.tolerances)?;
    let psi = random_pure_state(cfg.n, cfg.seed)?;
    let rho0 = pure_density(&psi);
    Ok(Prepared {
        config: cfg.clone(),
        model,
        decomposition,
        psi,
        rho0,
    })
}

pub fn spectrum_table(dec: &SpectralDecomposition) -> Table {
    let mut t = Table::new(&["k", "re_lambda", "im_lambda"]);
    for (k, l) in dec.eigenvalues().iter().enumerate() {
        t.push(vec![(k + 1).to_string(), float(l.re), float(l.im)]);
    }
    t
}

fn complex(z: C64) -> Value {
    json!([z.re, z.im])
}

pub fn spectrum_summary(dec: &SpectralDecomposition) -> Value {
    let d = dec.diagnostics();
    let modes = dec.num_modes();
    let lambda = |k: usize| if k < modes { complex(dec.eigenvalue(k)) } else { Value::Null };
    let (slow, next) = if modes >= 3 {
        (dec.slow_rate(), dec.next_rate())
    } else {
        (f64::NAN, f64::NAN)
    };
    json!({
        "modes": modes,
        "lambda_2": lambda(1),
        "lambda_3": lambda(2),
        "tau": if modes >= 2 { dec.tau() } else { f64::NAN },
        "abs_re_lambda_2": slow,
        "abs_re_lambda_3": next,
        "gap3": d.gap,
        "metastability_ratio": next / slow,
        "flags": {
            "enough_modes": d.flags.enough_modes,
            "unique_stationary": d.flags.unique_stationary,
            "slow_mode_real": d.flags.slow_mode_real,
            "slow_mode_isolated": d.flags.slow_mode_isolated,
            "slow_mode_hermitian": d.flags.slow_mode_hermitian,
            "clean": d.flags.clean(),
        },
    })
}

fn diagnostics_report(dec: &SpectralDecomposition) -> Value {
    let d = dec.diagnostics();
    json!({
        "stationary_count": d.stationary_count,
        "slow_imag": d.slow_imag,
        "gap": d.gap,
        "tol_zero": d.tol_zero,
        "tol_imag": d.tol_imag,
        "tol_gap": d.tol_gap,
        "max_abs_eigenvalue": d.max_abs_eigenvalue,
        "max_real_part": d.max_real_part,
        "condition": d.condition,
        "ill_conditioned": d.ill_conditioned,
        "identity_residual": d.identity_residual,
        "biorthogonality_residual": d.biorthogonality_residual,
        "stationary_min_eigenvalue": d.stationary_min_eigenvalue,
        "slow_hermiticity_residual": d.slow_hermiticity_residual,
        "conjugate_closed": d.conjugate_closed,
    })
}

pub fn scan_table(scan: &OverlapScan) -> Table {
    let mut t = Table::new(&["s", "overlap", "analytic", "unrotated"]);
    for p in &scan.points {
        t.push(vec![float(p.s), float(p.overlap), float(p.analytic), float(scan.unrotated)]);
    }
    t
}

pub fn scan_max_deviation(scan: &OverlapScan) -> f64 {
    scan.points
        .iter()
        .map(|p| (p.overlap - p.analytic).abs())
        .fold(0.0, f64::max)
}

fn scan_summary(scan: &OverlapScan) -> Value {
    json!({
        "alpha_1": scan.alpha_1,
        "alpha_n": scan.alpha_n,
        "s_bar": scan.s_bar,
        "residual": scan.residual,
        "unrotated": scan.unrotated,
        "max_deviation": scan_max_deviation(scan),
        "points": scan.points.len(),
    })
}

pub fn trajectory_table(record: &TrajectoryRecord) -> Table {
    let mut t = Table::new(&["t", "distance", "slow_overlap"]);
    for ((time, e), o) in record.times.iter().zip(&record.distances).zip(&record.slow_overlaps) {
        t.push(vec![float(*time), float(*e), float(o.norm())]);
    }
    t
}

fn fit_report(fit: &Result<DecayFit, Error>, reference: f64) -> Value {
    match fit {
        Ok(f) => json!({
            "rate": f.rate,
            "slope": f.slope,
            "intercept": f.intercept,
            "r_squared": f.r_squared,
            "rms_residual": f.rms_residual,
            "window_hi": f.window_hi,
            "window_lo": f.window_lo,
            "t_start": f.t_start,
            "t_end": f.t_end,
            "points": f.points,
            "poor_fit": f.poor_fit,
            "reference_rate": reference,
            "ratio": f.rate / reference,
        }),
        Err(e) => json!({ "error": e.code(), "message": e.to_string(), "reference_rate": reference }),
    }
}

fn rotation_report(rot: &MpembaRotation) -> Value {
    json!({
        "branch": rot.branch.name(),
        "s_bar": rot.s_bar,
        "overlap_before": rot.overlap_before,
        "residual_overlap": rot.residual_overlap,
        "unitarity_residual": rot.unitarity_residual,
        "alpha_1": rot.spectrum.alpha_1(),
        "alpha_n": rot.spectrum.alpha_n(),
    })
}

fn manifest(command: &str, prep: &Prepared, started: Instant) -> Map<String, Value> {
    let config: Map<String, Value> = prep
        .config
        .entries()
        .into_iter()
        .map(|(k, v)| (k.to_string(), Value::String(v)))
        .collect();
    let mut m = Map::new();
    m.insert("command".into(), json!(command));
    m.insert("library_version".into(), json!(mpemba_core::VERSION));
    m.insert("cli_version".into(), json!(env!("CARGO_PKG_VERSION")));
    m.insert("vectorization".into(), json!(Vectorization::ColumnStacking.tag()));
    m.insert("seed".into(), json!(prep.config.seed));
    m.insert("model".into(), json!(prep.model.label()));
    m.insert("config".into(), Value::Object(config));
    m.insert("spectrum".into(), spectrum_summary(&prep.decomposition));
    m.insert("diagnostics".into(), diagnostics_report(&prep.decomposition));
    m.insert("branch".into(), Value::Null);
    m.insert("s_bar".into(), Value::Null);
    m.insert("wall_clock_seconds".into(), json!(started.elapsed().as_secs_f64()));
    m
}

fn finish(mut m: Map<String, Value>, out: &mut OutputDir, started: Instant) -> Result<(), CliError> {
    m.insert("wall_clock_seconds".into(), json!(started.elapsed().as_secs_f64()));
    let mut files: Vec<String> = out.written().to_vec();
    files.push(MANIFEST_FILE.into());
    m.insert("files".into(), json!(files));
    out.write_json(MANIFEST_FILE, &Value::Object(m))
}

/// Where a finished command left its files.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub dir: PathBuf,
    pub files: Vec<String>,
    pub headline: String,
}

impl RunSummary {
    fn from_output(out: &OutputDir, headline: String) -> Self {
        Self {
            dir: out.root().to_path_buf(),
            files: out.written().to_vec(),
            headline,
        }
    }
}

/// Writes the spectrum and its summary. Assumption violations are reported
/// after the files are written.
pub fn cmd_spectrum(cfg: &ExperimentConfig, dir: &Path) -> Result<RunSummary, CliError> {
    let started = Instant::now();
    let prep = prepare(cfg)?;
    let dec = &prep.decomposition;
    let mut out = OutputDir::new(dir.to_path_buf());
    out.write_table(SPECTRUM_FILE, &spectrum_table(dec))?;
    let m = manifest("spectrum", &prep, started);
    finish(m, &mut out, started)?;
    dec.check_assumptions()?;
    let headline = format!(
        "tau = {:e}, |Re l2| = {:e}, |Re l3| = {:e}",
        dec.tau(),
        dec.slow_rate(),
        dec.next_rate()
    );
    Ok(RunSummary::from_output(&out, headline))
}

pub fn cmd_overlap_scan(cfg: &ExperimentConfig, dir: &Path) -> Result<RunSummary, CliError> {
    let started = Instant::now();
    let prep = prepare(cfg)?;
    let scan = overlap_scan(&prep.decomposition, &prep.psi, &cfg.scan.build())?;
    let mut out = OutputDir::new(dir.to_path_buf());
    out.write_table(SCAN_FILE, &scan_table(&scan))?;
    let mut m = manifest("overlap-scan", &prep, started);
    m.insert("branch".into(), json!("rotation"));
    m.insert("s_bar".into(), json!(scan.s_bar));
    m.insert("overlap_scan".into(), scan_summary(&scan));
    finish(m, &mut out, started)?;
    let headline = format!("s_bar = {:e}, residual = {:e}", scan.s_bar, scan.residual);
    Ok(RunSummary::from_output(&out, headline))
}

pub fn cmd_evolve(cfg: &ExperimentConfig, rotated: bool, dir: &Path) -> Result<RunSummary, CliError> {
    let started = Instant::now();
    let prep = prepare(cfg)?;
    let dec = &prep.decomposition;
    let grid = cfg.time.build()?;
    let (rho0, rotation) = if rotated {
        let rot = optimal_unitary(dec, &prep.psi)?;
        (rot.rotate(&prep.rho0)?, Some(rot))
    } else {
        (prep.rho0.clone(), None)
    };
    let record = spectral_trajectory(dec, &rho0, &grid)?;
    let (window, reference, file) = if rotated {
        (cfg.fit_window_rotated, dec.next_rate(), ROTATED_FILE)
    } else {
        (cfg.fit_window, dec.slow_rate(), UNROTATED_FILE)
    };
    let fit = record.fit(window);
    let mut out = OutputDir::new(dir.to_path_buf());
    out.write_table(file, &trajectory_table(&record))?;
    let mut m = manifest("evolve", &prep, started);
    if let Some(rot) = &rotation {
        m.insert("branch".into(), json!(rot.branch.name()));
        m.insert("s_bar".into(), json!(rot.s_bar));
        m.insert("rotation".into(), rotation_report(rot));
    }
    m.insert("rotated".into(), json!(rotated));
    m.insert("fit".into(), fit_report(&fit, reference));
    finish(m, &mut out, started)?;
    let headline = match &fit {
        Ok(f) => format!("fitted rate = {:e} (spectral {:e})", f.rate, reference),
        Err(e) => format!("no fit: {e}"),
    };
    Ok(RunSummary::from_output(&out, headline))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    Fig2,
    Fig3,
}

impl Figure {
    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
        }
    }

    pub fn config(self) -> ExperimentConfig {
        match self {
            Figure::Fig2 => ExperimentConfig::fig2(),
            Figure::Fig3 => ExperimentConfig::fig3(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assertion {
    pub name: &'static str,
    pub passed: bool,
    pub value: f64,
    pub bound: String,
}

impl Assertion {
    fn at_most(name: &'static str, value: f64, bound: f64) -> Self {
        Self {
            name,
            passed: value <= bound,
            value,
            bound: format!("<= {bound:e}"),
        }
    }

    fn within(name: &'static str, value: f64, (lo, hi): (f64, f64)) -> Self {
        Self {
            name,
            passed: value >= lo && value <= hi,
            value,
            bound: format!("in [{lo}, {hi}]"),
        }
    }

    fn holds(name: &'static str, passed: bool, value: f64, bound: &str) -> Self {
        Self {
            name,
            passed,
            value,
            bound: bound.into(),
        }
    }

    fn to_json(&self) -> Value {
        json!({ "name": self.name, "passed": self.passed, "value": self.value, "bound": self.bound })
    }
}

/// Everything a reproduction run computed.
pub struct Bundle {
    pub figure: Figure,
    pub prepared: Prepared,
    pub rotation: MpembaRotation,
    pub scan: OverlapScan,
    pub unrotated: TrajectoryRecord,
    pub rotated: TrajectoryRecord,
    pub unrotated_fit: Result<DecayFit, Error>,
    pub rotated_fit: Result<DecayFit, Error>,
    pub plateau: Option<Plateau>,
    pub assertions: Vec<Assertion>,
    pub dir: PathBuf,
    pub seconds: f64,
}

impl Bundle {
    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    pub fn failures(&self) -> Vec<String> {
        self.assertions
            .iter()
            .filter(|a| !a.passed)
            .map(|a| a.name.to_string())
            .collect()
    }

    pub fn assertion(&self, name: &str) -> Option<&Assertion> {
        self.assertions.iter().find(|a| a.name == name)
    }
}

fn fit_ratio(fit: &Result<DecayFit, Error>, reference: f64) -> f64 {
    fit.as_ref().map_or(f64::NAN, |f| f.rate / reference)
}

/// Metastable plateau of the un-rotated run: after the fast modes have
/// relaxed, a window of length `1/|Re λ_3|` on which `E_t` varies by less
/// than [`PLATEAU_VARIATION`] and still exceeds [`PLATEAU_CONTRAST`] times
/// the rotated `E_t` at its end.
pub fn detect_plateau(unrotated: &TrajectoryRecord, rotated: &TrajectoryRecord, fast_rate: f64) -> Option<Plateau> {
    let span = 1.0 / fast_rate;
    let settle = PLATEAU_SETTLE / fast_rate;
    find_plateau(&unrotated.times, &unrotated.distances, span, PLATEAU_VARIATION, |p| {
        p.t_start >= settle && unrotated.distances[p.end] >= PLATEAU_CONTRAST * rotated.distances[p.end]
    })
}

/// Runs spectrum, overlap scan and both trajectories for `cfg`, writes the
/// six bundle files into `dir` and evaluates the acceptance assertions.
pub fn reproduce(figure: Figure, cfg: &ExperimentConfig, dir: &Path) -> Result<Bundle, CliError> {
    let started = Instant::now();
    let prep = prepare(cfg)?;
    let dec = &prep.decomposition;
    dec.check_assumptions()?;
    let scan = overlap_scan(dec, &prep.psi, &cfg.scan.build())?;
    let rotation = optimal_unitary(dec, &prep.psi)?;
    let rho_rot = rotation.rotate(&prep.rho0)?;
    let grid = cfg.time.build()?;
    let unrotated = spectral_trajectory(dec, &prep.rho0, &grid)?;
    let rotated = spectral_trajectory(dec, &rho_rot, &grid)?;
    let (slow, fast) = (dec.slow_rate(), dec.next_rate());
    let unrotated_fit = unrotated.fit(cfg.fit_window);
    let rotated_fit = rotated.fit(cfg.fit_window_rotated);

    let ell = dec.left_mode(1);
    let ell_max = ell.max_abs();
    let orthogonality = dec.mode_overlaps(&rho_rot)?[1].norm();
    let stationary = dec.stationary_state();
    let e0_exact = mpemba_core::dynamics::hs_distance(&prep.rho0, stationary)? == unrotated.distances[0]
        && mpemba_core::dynamics::hs_distance(&rho_rot, stationary)? == rotated.distances[0];
    let endpoint_error = match (scan.points.first(), scan.points.last()) {
        (Some(a), Some(b)) if a.s == 0.0 && b.s == std::f64::consts::FRAC_PI_2 => {
            (a.overlap - scan.alpha_1).abs().max((b.overlap - scan.alpha_n).abs())
        }
        _ => f64::NAN,
    };

    let mut assertions = vec![
        Assertion::holds("assumptions_clean", dec.diagnostics().flags.clean(), dec.gap3(), "flags clean"),
        Assertion::within("unrotated_rate_ratio", fit_ratio(&unrotated_fit, slow), RATE_RATIO_BAND),
    ];
    if figure == Figure::Fig2 {
        assertions.push(Assertion::within(
            "rotated_rate_ratio",
            fit_ratio(&rotated_fit, fast),
            RATE_RATIO_BAND,
        ));
    }
    assertions.extend([
        Assertion::at_most("scan_law_deviation", scan_max_deviation(&scan), SCAN_LAW_TOL),
        Assertion::at_most("scan_endpoint_deviation", endpoint_error, SCAN_LAW_TOL),
        Assertion::at_most("scan_residual_at_s_bar", scan.residual / ell_max, ORTHOGONALITY_TOL),
        Assertion::at_most("rotated_slow_overlap", orthogonality / ell_max, ORTHOGONALITY_TOL),
        Assertion::at_most("unitarity_residual", rotation.unitarity_residual, UNITARITY_TOL),
        Assertion::holds("initial_distance_exact", e0_exact, unrotated.distances[0], "E_0 = ||rho_0 - rho_ss||"),
    ]);
    let plateau = if figure == Figure::Fig3 {
        assertions.push(Assertion::holds("metastability_ordering", slow < fast, fast / slow, "ratio > 1"));
        let plateau = detect_plateau(&unrotated, &rotated, fast);
        assertions.push(Assertion::holds(
            "plateau_detected",
            plateau.is_some(),
            plateau.map_or(f64::NAN, |p| p.relative_variation),
            &format!("variation < {PLATEAU_VARIATION} over >= 1/|Re l3|, contrast >= {PLATEAU_CONTRAST}"),
        ));
        plateau
    } else {
        None
    };

    let mut out = OutputDir::new(dir.to_path_buf());
    out.write_table(SPECTRUM_FILE, &spectrum_table(dec))?;
    out.write_table(SCAN_FILE, &scan_table(&scan))?;
    out.write_table(UNROTATED_FILE, &trajectory_table(&unrotated))?;
    out.write_table(ROTATED_FILE, &trajectory_table(&rotated))?;
    let passed = assertions.iter().all(|a| a.passed);
    let report = json!({
        "figure": figure.name(),
        "passed": passed,
        "assertions": assertions.iter().map(Assertion::to_json).collect::<Vec<_>>(),
        "observations": {
            "metastability_ratio": fast / slow,
            "unrotated_rate_ratio": fit_ratio(&unrotated_fit, slow),
            "rotated_rate_ratio": fit_ratio(&rotated_fit, fast),
            "plateau": plateau.map(|p| json!({
                "t_start": p.t_start,
                "t_end": p.t_end,
                "relative_variation": p.relative_variation,
                "unrotated_distance_at_end": unrotated.distances[p.end],
                "rotated_distance_at_end": rotated.distances[p.end],
            })),
        },
    });
    out.write_json(ASSERTIONS_FILE, &report)?;
    let mut m = manifest(&format!("reproduce {}", figure.name()), &prep, started);
    m.insert("branch".into(), json!(rotation.branch.name()));
    m.insert("s_bar".into(), json!(rotation.s_bar));
    m.insert("rotation".into(), rotation_report(&rotation));
    m.insert("overlap_scan".into(), scan_summary(&scan));
    m.insert(
        "fits".into(),
        json!({
            "unrotated": fit_report(&unrotated_fit, slow),
            "rotated": fit_report(&rotated_fit, fast),
        }),
    );
    finish(m, &mut out, started)?;

    Ok(Bundle {
        figure,
        prepared: prep,
        rotation,
        scan,
        unrotated,
        rotated,
        unrotated_fit,
        rotated_fit,
        plateau,
        assertions,
        dir: dir.to_path_buf(),
        seconds: started.elapsed().as_secs_f64(),
    })
}
