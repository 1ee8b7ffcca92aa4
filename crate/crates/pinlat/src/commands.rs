//! Command implementations: each runs one pipeline stage, writes its JSON
//! (and CSV, for sequences) artifacts into the output directory, and prints
//! a one-line summary.
//!
//! Artifacts embed the fully resolved config and a version stamp, and the
//! pipelines underneath are deterministic, so re-running a command with the
//! same config byte-reproduces every output file.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::json;

use pinlat_core::lattice::DEFAULT_DS;
use pinlat_core::{
    compute_b, continue_to_fold, estimate_a_plus, fredholm_gate, kernel_vector, lambda0,
    measure_speed_refined, pinning_interval, positive_spectrum_check, prop52_ordering_check,
    reduced_map_iterate, solve_standing_wave, sweep_theta, sweep_to_csv, BReport, ConditionBError,
    Direction, DynamicsError, LatticeError, Linearization, PinningInterval, SpectralError,
    SweepRow, Verdict,
};

use crate::config::RunConfig;
use crate::ARTIFACT_VERSION;

/// Why a run stopped: configuration problems exit 1, numerical failures
/// exit 2, both with a machine-readable JSON object on stderr.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Numerical { kind: String, message: String },
}

impl fmt::Display for Failure {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(msg) => write!(out, "{msg}"),
            Failure::Numerical { kind, message } => write!(out, "{kind}: {message}"),
        }
    }
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Numerical { .. } => 2,
        }
    }

    pub fn to_stderr_json(&self) -> String {
        let (kind, message) = match self {
            Failure::Usage(msg) => ("Usage".to_string(), msg.clone()),
            Failure::Numerical { kind, message } => (kind.clone(), message.clone()),
        };
        json!({
            "error": { "kind": kind, "message": message },
            "exit_code": self.exit_code(),
        })
        .to_string()
    }
}

/// The leading variant name of a Debug rendering, used as the error kind.
fn kind_of(debug: &str) -> String {
    debug.chars().take_while(|c| c.is_ascii_alphanumeric()).collect()
}

macro_rules! numerical_from {
    ($err:ty) => {
        impl From<$err> for Failure {
            fn from(e: $err) -> Self {
                Failure::Numerical { kind: kind_of(&format!("{e:?}")), message: e.to_string() }
            }
        }
    };
}

numerical_from!(LatticeError);
numerical_from!(SpectralError);
numerical_from!(DynamicsError);
numerical_from!(ConditionBError);

#[derive(Serialize)]
struct Artifact<'c, T: Serialize> {
    artifact_version: &'static str,
    config: &'c RunConfig,
    result: T,
}

fn write_json<T: Serialize>(cfg: &RunConfig, name: &str, result: T) -> Result<(), Failure> {
    let artifact = Artifact { artifact_version: ARTIFACT_VERSION, config: cfg, result };
    let body = serde_json::to_string_pretty(&artifact)
        .expect("artifact serialization cannot fail") + "\n";
    write_text(&cfg.output_dir, name, &body)
}

fn write_text(dir: &Path, name: &str, body: &str) -> Result<(), Failure> {
    fs::create_dir_all(dir)
        .map_err(|e| Failure::Usage(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, body)
        .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))
}

fn note(quiet: bool, line: String) {
    if !quiet {
        println!("{line}");
    }
}

fn out(cfg: &RunConfig, name: &str) -> String {
    cfg.output_dir.join(name).display().to_string()
}

pub fn validate(cfg: &RunConfig, quiet: bool) -> Result<(), Failure> {
    let family = cfg.family.build()?;
    let report = family
        .validate(cfg.validate.n_u, cfg.validate.n_a)
        .map_err(|e| Failure::Usage(format!("validation setup: {e}")))?;
    write_json(cfg, "validate.json", &report)?;
    note(quiet, format!(
        "validate: family {} {} on {}x{} grid -> {}",
        cfg.family.describe(),
        if report.valid { "ok" } else { "REJECTED" },
        report.grid.0,
        report.grid.1,
        out(cfg, "validate.json"),
    ));
    if !report.valid {
        return Err(Failure::Usage(format!(
            "family fails structural validation with {} violation(s), see {}",
            report.violations.len(),
            out(cfg, "validate.json"),
        )));
    }
    Ok(())
}

pub fn standing_wave(cfg: &RunConfig, quiet: bool) -> Result<(), Failure> {
    let family = cfg.family.build()?;
    let block = &cfg.standing_wave;
    let profile = solve_standing_wave(
        &family,
        block.a,
        &block.init.to_init(),
        cfg.n,
        cfg.tolerances.newton,
    )?;
    write_json(cfg, "standing_wave.json", &profile)?;
    write_text(&cfg.output_dir, "standing_wave.csv", &profile.to_csv())?;
    note(quiet, format!(
        "standing-wave: a = {}, N = {}, residual {:.2e} -> {}",
        block.a,
        cfg.n,
        profile.residual_norm(),
        out(cfg, "standing_wave.json"),
    ));
    Ok(())
}

pub fn pinning_interval_cmd(cfg: &RunConfig, quiet: bool) -> Result<(), Failure> {
    let family = cfg.family.build()?;
    let interval = pinning_interval(&family, cfg.n)?;
    write_json(cfg, "pinning_interval.json", &interval)?;
    note(quiet, format!(
        "pinning-interval: [{:.9}, {:.9}] at N = {} -> {}",
        interval.a_minus,
        interval.a_plus,
        cfg.n,
        out(cfg, "pinning_interval.json"),
    ));
    Ok(())
}

#[derive(Serialize)]
struct SpectralSummary {
    a_used: f64,
    at_fold: bool,
    lambda0: f64,
    decay_ratio_estimate: f64,
    spectrum_nonpositive: bool,
    fredholm_ok: bool,
}

pub fn spectral(cfg: &RunConfig, quiet: bool) -> Result<(), Failure> {
    let family = cfg.family.build()?;
    let block = &cfg.spectral;
    let profile = if block.at_fold {
        continue_to_fold(&family, 0.0, pinlat_core::Side::Upper, cfg.n, DEFAULT_DS)?
            .profile_at_fold
    } else {
        solve_standing_wave(
            &family,
            block.a,
            &pinlat_core::Init::OffSiteStep,
            cfg.n,
            cfg.tolerances.newton,
        )?
    };
    let lin = Linearization::assemble(&profile, &family);
    let kernel = kernel_vector(&lin)?;
    let l0 = lambda0(&lin);
    let summary = SpectralSummary {
        a_used: profile.a(),
        at_fold: block.at_fold,
        lambda0: l0,
        decay_ratio_estimate: kernel.decay_ratio_estimate(),
        spectrum_nonpositive: positive_spectrum_check(&lin),
        fredholm_ok: fredholm_gate(&family, profile.a(), l0),
    };
    write_json(cfg, "spectral.json", &summary)?;
    write_text(&cfg.output_dir, "spectral_mode.csv", &kernel.to_csv())?;
    note(quiet, format!(
        "spectral: lambda0 = {:.6e} at a = {} -> {}",
        l0,
        profile.a(),
        out(cfg, "spectral.json"),
    ));
    Ok(())
}

#[derive(Serialize)]
struct ConditionBSummary {
    a_fold: f64,
    side: crate::config::SideKind,
    report: BReport,
}

pub fn condition_b(cfg: &RunConfig, quiet: bool) -> Result<(), Failure> {
    let family = cfg.family.build()?;
    let side = cfg.condition_b.side;
    let fold = continue_to_fold(&family, 0.0, side.to_side(), cfg.n, DEFAULT_DS)?;
    let lin = Linearization::assemble(&fold.profile_at_fold, &family);
    let kernel = kernel_vector(&lin)?;
    let report = compute_b(&fold.profile_at_fold, &kernel, &family)?;
    let line = format!(
        "condition-b: {:?}, B = {:.9} at fold a = {:.9} -> {}",
        report.verdict,
        report.b,
        fold.a_fold,
        out(cfg, "condition_b.json"),
    );
    write_json(cfg, "condition_b.json", ConditionBSummary { a_fold: fold.a_fold, side, report })?;
    note(quiet, line);
    Ok(())
}

#[derive(Serialize)]
struct ReducedMapSummary {
    b: f64,
    steps_requested: usize,
    length: usize,
    truncated: bool,
    window_start: usize,
    m_coeff: f64,
    ordering: String,
}

pub fn reduced_map(cfg: &RunConfig, quiet: bool) -> Result<(), Failure> {
    let block = &cfg.reduced_map;
    let orbit = reduced_map_iterate(block.b, block.eta0, block.omega0, block.steps);
    let ordering = match prop52_ordering_check(&orbit, block.m_coeff, block.window_start) {
        Ok(true) => "holds".to_string(),
        Ok(false) => "violated".to_string(),
        Err(e) => e.to_string(),
    };
    let summary = ReducedMapSummary {
        b: block.b,
        steps_requested: block.steps,
        length: orbit.len(),
        truncated: orbit.truncated(block.steps),
        window_start: block.window_start,
        m_coeff: block.m_coeff,
        ordering: ordering.clone(),
    };
    write_json(cfg, "reduced_map.json", &summary)?;
    write_text(&cfg.output_dir, "reduced_map.csv", &orbit.to_csv())?;
    note(quiet, format!(
        "reduced-map: {} points from (eta0, omega0) = ({}, {}), ordering {} -> {}",
        orbit.len(),
        block.eta0,
        block.omega0,
        ordering,
        out(cfg, "reduced_map.json"),
    ));
    Ok(())
}

pub fn simulate(cfg: &RunConfig, quiet: bool) -> Result<(), Failure> {
    let family = cfg.family.build()?;
    let block = &cfg.simulate;
    let dir = Direction::new(block.sigma_num, block.sigma_den)?;
    let (measurement, track) =
        measure_speed_refined(&family, block.a, &dir, block.width, block.t_end, 1)?;
    write_json(cfg, "simulate.json", &measurement)?;
    write_text(&cfg.output_dir, "front_track.csv", &track.to_csv())?;
    note(quiet, format!(
        "simulate: c_est = {:.6e} ({}) at a = {}, slope {}/{} -> {}",
        measurement.c_est,
        if measurement.pinned { "pinned" } else { "depinned" },
        block.a,
        block.sigma_num,
        block.sigma_den,
        out(cfg, "simulate.json"),
    ));
    Ok(())
}

#[derive(Serialize)]
struct EstimateSummary {
    direction: Direction,
    bracket: (f64, f64),
    tol: f64,
    a_plus_est: f64,
}

pub fn estimate_a_plus_cmd(cfg: &RunConfig, quiet: bool) -> Result<(), Failure> {
    let family = cfg.family.build()?;
    let block = &cfg.estimate_a_plus;
    let dir = Direction::new(block.sigma_num, block.sigma_den)?;
    let bracket = (block.bracket_lo, block.bracket_hi);
    let est = estimate_a_plus(&family, &dir, bracket, cfg.tolerances.a_bisect)?;
    let summary =
        EstimateSummary { direction: dir, bracket, tol: cfg.tolerances.a_bisect, a_plus_est: est };
    write_json(cfg, "estimate_a_plus.json", &summary)?;
    note(quiet, format!(
        "estimate-a-plus: a+ = {:.6} for slope {}/{} -> {}",
        est,
        block.sigma_num,
        block.sigma_den,
        out(cfg, "estimate_a_plus.json"),
    ));
    Ok(())
}

fn run_sweep(cfg: &RunConfig, family: &pinlat_core::NormalFamily) -> Result<Vec<SweepRow>, Failure> {
    let block = &cfg.sweep_theta;
    let directions: Vec<Direction> = block
        .directions
        .iter()
        .map(|&(s, q)| Direction::new(s, q))
        .collect::<Result<_, _>>()?;
    Ok(sweep_theta(family, &directions, (block.bracket_lo, block.bracket_hi),
        cfg.tolerances.a_bisect)?)
}

pub fn sweep_theta_cmd(cfg: &RunConfig, quiet: bool) -> Result<(), Failure> {
    let family = cfg.family.build()?;
    let rows = run_sweep(cfg, &family)?;
    write_json(cfg, "sweep_theta.json", &rows)?;
    write_text(&cfg.output_dir, "sweep_theta.csv", &sweep_to_csv(&rows))?;
    note(quiet, format!(
        "sweep-theta: {} direction(s) -> {}",
        rows.len(),
        out(cfg, "sweep_theta.json"),
    ));
    Ok(())
}

pub fn probe_epsilon(cfg: &RunConfig, quiet: bool) -> Result<(), Failure> {
    let family = cfg.family.build()?;
    let block = &cfg.probe_epsilon;
    let probe = pinlat_core::epsilon_regime_probe(&family, block.eps, block.mode.to_mode())?;
    let line = format!(
        "probe-epsilon: a_est = {:.6} at eps = {} (threshold {:.6}) -> {}",
        probe.a_est,
        block.eps,
        probe.a_plus_reference,
        out(cfg, "probe_epsilon.json"),
    );
    write_json(cfg, "probe_epsilon.json", &probe)?;
    note(quiet, line);
    Ok(())
}

#[derive(Serialize)]
struct FullReport {
    family_valid: bool,
    pinning_interval: PinningInterval,
    lambda0_at_fold: f64,
    condition_b: BReport,
    sweep: Vec<SweepRow>,
    /// a₊(0) − a₊(θ) per tilted direction in the sweep.
    tilt_gaps: Vec<(f64, f64)>,
    verdict: String,
}

/// Chain validate → pinning-interval → spectral at the fold → condition-b →
/// sweep-theta, then consolidate a single pinning verdict for θ = 0.
pub fn full_report(cfg: &RunConfig, quiet: bool) -> Result<(), Failure> {
    let family = cfg.family.build()?;

    let report = family
        .validate(cfg.validate.n_u, cfg.validate.n_a)
        .map_err(|e| Failure::Usage(format!("validation setup: {e}")))?;
    note(quiet, format!(
        "full-report: validate {}",
        if report.valid { "ok" } else { "REJECTED" }
    ));
    if !report.valid {
        return Err(Failure::Usage("family fails structural validation".to_string()));
    }

    let interval = pinning_interval(&family, cfg.n)?;
    note(quiet, format!(
        "full-report: pinning interval [{:.9}, {:.9}]",
        interval.a_minus, interval.a_plus
    ));

    let fold = continue_to_fold(&family, 0.0, pinlat_core::Side::Upper, cfg.n, DEFAULT_DS)?;
    let lin = Linearization::assemble(&fold.profile_at_fold, &family);
    let l0 = lambda0(&lin);
    note(quiet, format!("full-report: lambda0 at fold = {l0:.3e}"));

    let kernel = kernel_vector(&lin)?;
    let b_report = compute_b(&fold.profile_at_fold, &kernel, &family)?;
    note(quiet, format!(
        "full-report: condition-b {:?}, B = {:.9}",
        b_report.verdict, b_report.b
    ));

    let sweep = run_sweep(cfg, &family)?;
    let tilt_gaps: Vec<(f64, f64)> = sweep
        .iter()
        .filter(|r| r.s != 0)
        .map(|r| (r.s as f64 / r.q as f64, interval.a_plus - r.a_plus_est))
        .collect();
    note(quiet, format!("full-report: sweep over {} direction(s)", sweep.len()));

    let answer = match b_report.verdict {
        Verdict::ConditionBHolds if interval.a_minus < 0.0 && interval.a_plus > 0.0 => "yes",
        Verdict::Fails => "no",
        _ => "inconclusive",
    };
    let verdict = format!("crystallographic pinning predicted at θ=0: {answer}");
    let full = FullReport {
        family_valid: report.valid,
        pinning_interval: interval,
        lambda0_at_fold: l0,
        condition_b: b_report,
        sweep,
        tilt_gaps,
        verdict: verdict.clone(),
    };
    write_json(cfg, "full_report.json", &full)?;
    note(quiet, format!("full-report: {verdict} -> {}", out(cfg, "full_report.json")));
    Ok(())
}
