//! Run configuration: one JSON document holding the family descriptor, the
//! truncation size, every tolerance, and one parameter block per command.
//!
//! All defaults live here, in the schema, so a published run is reproducible
//! from its config alone; code paths never invent values. Flags override
//! individual scalars after the file is loaded.

use std::fs;
use std::path::PathBuf;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use pinlat_core::NormalFamily;

use crate::commands::Failure;

/// Top-level configuration; unknown keys are rejected so typos cannot
/// silently fall back to defaults.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub family: FamilyConfig,
    /// Truncation half-width N: profiles live on n = −N..N.
    pub n: usize,
    pub tolerances: Tolerances,
    pub output_dir: PathBuf,
    pub validate: ValidateBlock,
    pub standing_wave: StandingWaveBlock,
    pub spectral: SpectralBlock,
    pub condition_b: ConditionBBlock,
    pub reduced_map: ReducedMapBlock,
    pub simulate: SimulateBlock,
    pub estimate_a_plus: EstimateAPlusBlock,
    pub sweep_theta: SweepThetaBlock,
    pub probe_epsilon: ProbeEpsilonBlock,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            family: FamilyConfig::Cubic,
            n: 200,
            tolerances: Tolerances::default(),
            output_dir: PathBuf::from("out"),
            validate: ValidateBlock::default(),
            standing_wave: StandingWaveBlock::default(),
            spectral: SpectralBlock::default(),
            condition_b: ConditionBBlock::default(),
            reduced_map: ReducedMapBlock::default(),
            simulate: SimulateBlock::default(),
            estimate_a_plus: EstimateAPlusBlock::default(),
            sweep_theta: SweepThetaBlock::default(),
            probe_epsilon: ProbeEpsilonBlock::default(),
        }
    }
}

/// Nonlinearity descriptor; `perturbed` multiplies the cubic by an even
/// polynomial γ(u) with the listed coefficients, which must stay positive.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilyConfig {
    Cubic,
    Perturbed { gamma: Vec<f64> },
}

impl FamilyConfig {
    pub fn build(&self) -> Result<NormalFamily, Failure> {
        match self {
            FamilyConfig::Cubic => Ok(NormalFamily::Cubic),
            FamilyConfig::Perturbed { gamma } => NormalFamily::Cubic
                .perturb(gamma)
                .map_err(|e| Failure::Usage(format!("invalid family: {e}"))),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            FamilyConfig::Cubic => "cubic".to_string(),
            FamilyConfig::Perturbed { gamma } => format!("perturbed γ = {gamma:?}"),
        }
    }
}

/// Named tolerances; every one must be positive.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Sup-norm defect target for standing-wave Newton solves.
    pub newton: f64,
    /// Resolution of the bisection for depinning thresholds.
    pub a_bisect: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { newton: 1e-12, a_bisect: 1e-3 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateBlock {
    /// Sample counts for the structural checks (u-grid, a-grid).
    pub n_u: usize,
    pub n_a: usize,
}

impl Default for ValidateBlock {
    fn default() -> Self {
        Self { n_u: 64, n_a: 64 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StandingWaveBlock {
    pub a: f64,
    pub init: InitKind,
}

impl Default for StandingWaveBlock {
    fn default() -> Self {
        Self { a: 0.0, init: InitKind::OffSiteStep }
    }
}

/// Initial step placement for solves; the off-site class is the stable one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    OffSiteStep,
    OnSiteStep,
}

impl InitKind {
    pub fn to_init(self) -> pinlat_core::Init {
        match self {
            InitKind::OffSiteStep => pinlat_core::Init::OffSiteStep,
            InitKind::OnSiteStep => pinlat_core::Init::OnSiteStep,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectralBlock {
    pub a: f64,
    /// Analyze at the upper fold instead of at `a`.
    pub at_fold: bool,
}

impl Default for SpectralBlock {
    fn default() -> Self {
        Self { a: 0.0, at_fold: false }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConditionBBlock {
    pub side: SideKind,
}

impl Default for ConditionBBlock {
    fn default() -> Self {
        Self { side: SideKind::Upper }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SideKind {
    Upper,
    Lower,
}

impl SideKind {
    pub fn to_side(self) -> pinlat_core::Side {
        match self {
            SideKind::Upper => pinlat_core::Side::Upper,
            SideKind::Lower => pinlat_core::Side::Lower,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReducedMapBlock {
    /// Quadratic coefficient B of the recurrence.
    pub b: f64,
    pub eta0: f64,
    pub omega0: f64,
    pub steps: usize,
    /// First index of the asymptotic ordering window.
    pub window_start: usize,
    /// Sign normalization M for the ordering check.
    pub m_coeff: f64,
}

impl Default for ReducedMapBlock {
    fn default() -> Self {
        Self { b: 1.0, eta0: -1e-3, omega0: -1.001e-3, steps: 400, window_start: 100, m_coeff: 1.0 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateBlock {
    pub a: f64,
    pub sigma_num: u32,
    pub sigma_den: u32,
    pub width: usize,
    pub t_end: f64,
}

impl Default for SimulateBlock {
    fn default() -> Self {
        Self {
            a: 0.02,
            sigma_num: 0,
            sigma_den: 1,
            width: pinlat_core::DEFAULT_STRIP_WIDTH,
            t_end: 2000.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateAPlusBlock {
    pub sigma_num: u32,
    pub sigma_den: u32,
    /// Bisection bracket: pinned at the low end, depinned at the high end.
    pub bracket_lo: f64,
    pub bracket_hi: f64,
}

impl Default for EstimateAPlusBlock {
    fn default() -> Self {
        Self { sigma_num: 0, sigma_den: 1, bracket_lo: 0.0, bracket_hi: 0.02 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepThetaBlock {
    /// Directions as (s, q) slope pairs; (0, 1) is the axis.
    pub directions: Vec<(u32, u32)>,
    pub bracket_lo: f64,
    pub bracket_hi: f64,
}

impl Default for SweepThetaBlock {
    fn default() -> Self {
        Self {
            directions: vec![(0, 1), (1, 8), (1, 4), (1, 2)],
            bracket_lo: 0.0,
            bracket_hi: 0.02,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeEpsilonBlock {
    pub eps: f64,
    pub mode: ProbeModeKind,
}

impl Default for ProbeEpsilonBlock {
    fn default() -> Self {
        Self { eps: 0.1, mode: ProbeModeKind::CEqEps }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ProbeModeKind {
    CEqEps,
    CEqEpsSq,
}

impl ProbeModeKind {
    pub fn to_mode(self) -> pinlat_core::ProbeMode {
        match self {
            ProbeModeKind::CEqEps => pinlat_core::ProbeMode::CEqEps,
            ProbeModeKind::CEqEpsSq => pinlat_core::ProbeMode::CEqEpsSq,
        }
    }
}

/// Load the config file, or the schema defaults when no file is given.
pub fn load(path: Option<&PathBuf>) -> Result<RunConfig, Failure> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", p.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| Failure::Usage(format!("invalid config {}: {e}", p.display())))
        }
    }
}

/// Enforce the cross-cutting invariants after flag overrides are applied.
///
/// Ranges that would otherwise surface as solver panics or far-downstream
/// numerical errors are rejected up front as configuration errors.
pub fn check(cfg: &RunConfig) -> Result<(), Failure> {
    fn usage(msg: String) -> Result<(), Failure> {
        Err(Failure::Usage(msg))
    }
    if cfg.n < 20 {
        return usage(format!("n = {} is below the minimum half-width 20", cfg.n));
    }
    if !(cfg.tolerances.newton > 0.0) {
        return usage(format!("tolerances.newton = {} must be positive", cfg.tolerances.newton));
    }
    if !(cfg.tolerances.a_bisect > 0.0) {
        return usage(format!("tolerances.a_bisect = {} must be positive", cfg.tolerances.a_bisect));
    }
    for (name, a) in [
        ("standing_wave.a", cfg.standing_wave.a),
        ("spectral.a", cfg.spectral.a),
        ("simulate.a", cfg.simulate.a),
    ] {
        if !(a > -1.0 && a < 1.0) {
            return usage(format!("{name} = {a} must lie strictly inside (-1, 1)"));
        }
    }
    for (name, lo, hi) in [
        ("estimate_a_plus", cfg.estimate_a_plus.bracket_lo, cfg.estimate_a_plus.bracket_hi),
        ("sweep_theta", cfg.sweep_theta.bracket_lo, cfg.sweep_theta.bracket_hi),
    ] {
        if !(lo < hi && lo > -1.0 && hi < 1.0) {
            return usage(format!("{name} bracket ({lo}, {hi}) must be increasing inside (-1, 1)"));
        }
    }
    if cfg.sweep_theta.directions.is_empty() {
        return usage("sweep_theta.directions must list at least one direction".to_string());
    }
    if cfg.sweep_theta.directions.iter().any(|&(_, q)| q == 0) {
        return usage("sweep_theta.directions: slope denominators must be nonzero".to_string());
    }
    if cfg.simulate.sigma_den == 0 || cfg.estimate_a_plus.sigma_den == 0 {
        return usage("slope denominators must be nonzero".to_string());
    }
    if !(cfg.simulate.t_end > 0.0) {
        return usage(format!("simulate.t_end = {} must be positive", cfg.simulate.t_end));
    }
    if cfg.reduced_map.m_coeff == 0.0 {
        return usage("reduced_map.m_coeff must be nonzero".to_string());
    }
    if !(cfg.probe_epsilon.eps > 0.0 && cfg.probe_epsilon.eps <= 0.3) {
        return usage(format!(
            "probe_epsilon.eps = {} must lie in (0, 0.3]",
            cfg.probe_epsilon.eps
        ));
    }
    Ok(())
}
