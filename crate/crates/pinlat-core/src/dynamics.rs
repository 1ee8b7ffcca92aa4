//! Direct time integration on sheared strips and depinning thresholds.
//!
//! A planar front moving in the rational direction (1, s/q) is simulated on
//! a strip of q rows with helical vertical identification u_{i,q} ≡
//! u_{i+s,0}, which makes the sheared front exactly compatible with the
//! boundary. The front position is the zero crossing of the row-averaged
//! profile; a least-squares fit of its drift gives the wave speed, a
//! sub-half-site displacement classifies the run as pinned, and bisection
//! on that flag estimates the direction-dependent depinning threshold.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nonlinearity::{FamilyError, NormalFamily};
use crate::tolerances::{
    BLOWUP_BOUND, DEFAULT_A_BISECT_TOL, DEFAULT_T_END, FRONT_MARGIN_SITES,
    PINNED_DISPLACEMENT_SITES, SPEED_SAMPLE_DT,
};

/// Default strip width (sites along the propagation axis).
pub const DEFAULT_STRIP_WIDTH: usize = 400;

/// Errors from strip simulation and threshold estimation.
#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error("direction denominator must be at least 1")]
    InvalidDirection,
    #[error("field blew past |u| = 2 at t = {t}; time step too large")]
    BlowUp { t: f64 },
    #[error("front reached the strip boundary even at width {width}")]
    FrontHitBoundary { width: usize },
    #[error("row-averaged profile has no sign change; initial data lost bistable structure")]
    NoFront,
    #[error("bracket does not straddle the threshold (lo pinned: {lo_pinned}, hi pinned: {hi_pinned})")]
    BadBracket { lo_pinned: bool, hi_pinned: bool },
    #[error("epsilon {eps} outside the supported range (0, 0.3]")]
    InvalidEpsilon { eps: f64 },
}

/// A propagation direction (1, s/q) with tan θ = s/q in lowest terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Direction {
    sigma_num: u32,
    sigma_den: u32,
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 { a } else { gcd(b, a % b) }
}

impl Direction {
    /// Direction with slope s/q; reduced to lowest terms, q ≥ 1 required.
    pub fn new(sigma_num: u32, sigma_den: u32) -> Result<Self, DynamicsError> {
        if sigma_den == 0 {
            return Err(DynamicsError::InvalidDirection);
        }
        let g = gcd(sigma_num.max(1), sigma_den);
        let g = if sigma_num == 0 { sigma_den } else { g };
        Ok(Self { sigma_num: sigma_num / g, sigma_den: sigma_den / g })
    }

    /// The lattice axis direction θ = 0.
    pub fn axis() -> Self {
        Self { sigma_num: 0, sigma_den: 1 }
    }

    /// First component of the direction vector; always 1 by normalization.
    pub fn kappa(&self) -> u32 {
        1
    }

    pub fn sigma_num(&self) -> u32 {
        self.sigma_num
    }

    pub fn sigma_den(&self) -> u32 {
        self.sigma_den
    }

    /// Slope ε = s/q.
    pub fn epsilon(&self) -> f64 {
        self.sigma_num as f64 / self.sigma_den as f64
    }

    /// Angle θ = arctan(s/q).
    pub fn theta(&self) -> f64 {
        self.epsilon().atan()
    }
}

/// Field on a W×q strip with helical vertical identification.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StripState {
    width: usize,
    height: usize,
    shear: i64,
    /// row-major: u[j*width + i]
    u: Vec<f64>,
    t: f64,
    dt: f64,
}

impl StripState {
    /// Sheared step front tanh(ξ − W/2) along ξ = i + (s/q)·j, with the
    /// time step set to the explicit-stability bound 0.1/(4 + max|f′|).
    pub fn sheared_front(
        f: &NormalFamily,
        a: f64,
        width: usize,
        height: usize,
        shear: i64,
    ) -> Self {
        assert!(height >= 1 && width >= 8, "degenerate strip");
        let xi0 = 0.5 * width as f64;
        let slope = shear as f64 / height as f64;
        let mut u = vec![0.0; width * height];
        for j in 0..height {
            for i in 0..width {
                let xi = i as f64 + slope * j as f64;
                u[j * width + i] = (xi - xi0).tanh();
            }
        }
        let dt = 0.1 / (4.0 + f.max_abs_fu(a));
        Self { width, height, shear, u, t: 0.0, dt }
    }

    /// Wrap an explicit field (used by diagnostics and order-preservation
    /// probes); values must respect the |u| ≤ 1 + 1e−6 range invariant.
    pub fn from_field(
        u: Vec<f64>,
        width: usize,
        height: usize,
        shear: i64,
        dt: f64,
    ) -> Self {
        assert_eq!(u.len(), width * height);
        assert!(u.iter().all(|x| x.abs() <= 1.0 + 1e-6), "field outside range");
        assert!(dt > 0.0);
        Self { width, height, shear, u, t: 0.0, dt }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn shear(&self) -> i64 {
        self.shear
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Row-major field values.
    pub fn field(&self) -> &[f64] {
        &self.u
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.u[j * self.width + i]
    }

    /// Shrink the time step by an integer factor (diagnostics: measured
    /// speeds must be insensitive to refinement).
    pub fn refine_dt(&mut self, factor: u32) {
        assert!(factor >= 1);
        self.dt /= factor as f64;
    }

    /// Row-averaged profile over j, one value per i.
    pub fn row_average(&self) -> Vec<f64> {
        let mut avg = vec![0.0; self.width];
        for j in 0..self.height {
            for i in 0..self.width {
                avg[i] += self.u[j * self.width + i];
            }
        }
        let inv = 1.0 / self.height as f64;
        avg.iter_mut().for_each(|x| *x *= inv);
        avg
    }
}

/// Neighbor lookup with helical j-wrap; i-indexes pushed out of the strip
/// by the wrap shear read the far-field values ∓1.
#[inline]
fn site(u: &[f64], width: usize, height: usize, shear: i64, i: i64, j: i64) -> f64 {
    // fold j into [0, height) while shearing i accordingly
    let (i, j) = if j < 0 {
        (i - shear, j + height as i64)
    } else if j >= height as i64 {
        (i + shear, j - height as i64)
    } else {
        (i, j)
    };
    if i < 0 {
        -1.0
    } else if i >= width as i64 {
        1.0
    } else {
        u[j as usize * width + i as usize]
    }
}

fn rhs(u: &[f64], width: usize, height: usize, shear: i64, f: &NormalFamily, a: f64, out: &mut [f64]) {
    // the first and last column are held fixed (Dirichlet data at their
    // initial values): this makes the uniform states and fully developed
    // step profiles exact equilibria of the truncation, so pinning is not
    // an artifact of boundary forcing
    for j in 0..height as i64 {
        let row = j as usize * width;
        out[row] = 0.0;
        out[row + width - 1] = 0.0;
        for i in 1..width as i64 - 1 {
            let idx = row + i as usize;
            let c = u[idx];
            let lap = u[idx - 1]
                + u[idx + 1]
                + site(u, width, height, shear, i, j - 1)
                + site(u, width, height, shear, i, j + 1)
                - 4.0 * c;
            out[idx] = lap - f.f(c, a);
        }
    }
}

/// Advance the strip by `n_steps` RK4 steps.
///
/// The time step must respect dt ≤ 0.1/(4 + max|f′|); a violated bound
/// surfaces as `BlowUp` when the field passes |u| = 2. Deterministic:
/// fixed summation order, no data-dependent branching.
pub fn step(
    state: &mut StripState,
    f: &NormalFamily,
    a: f64,
    n_steps: usize,
) -> Result<(), DynamicsError> {
    let (w, h, s) = (state.width, state.height, state.shear);
    let m = w * h;
    let dt = state.dt;
    let mut k1 = vec![0.0; m];
    let mut k2 = vec![0.0; m];
    let mut k3 = vec![0.0; m];
    let mut k4 = vec![0.0; m];
    let mut stage = vec![0.0; m];
    for _ in 0..n_steps {
        rhs(&state.u, w, h, s, f, a, &mut k1);
        for i in 0..m {
            stage[i] = state.u[i] + 0.5 * dt * k1[i];
        }
        rhs(&stage, w, h, s, f, a, &mut k2);
        for i in 0..m {
            stage[i] = state.u[i] + 0.5 * dt * k2[i];
        }
        rhs(&stage, w, h, s, f, a, &mut k3);
        for i in 0..m {
            stage[i] = state.u[i] + dt * k3[i];
        }
        rhs(&stage, w, h, s, f, a, &mut k4);
        for i in 0..m {
            state.u[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        state.t += dt;
        // written so NaN also trips the guard
        if state.u.iter().any(|x| !(x.abs() <= BLOWUP_BOUND)) {
            return Err(DynamicsError::BlowUp { t: state.t });
        }
    }
    Ok(())
}

/// Front position: linear-interpolated zero crossing of the row-averaged
/// profile, scanning from the −1 side.
pub fn front_position(state: &StripState) -> Result<f64, DynamicsError> {
    let avg = state.row_average();
    for i in 0..avg.len() - 1 {
        if avg[i] < 0.0 && avg[i + 1] >= 0.0 {
            return Ok(i as f64 + avg[i] / (avg[i] - avg[i + 1]));
        }
    }
    Err(DynamicsError::NoFront)
}

/// Speed measurement for one (a, direction) pair.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WaveSpeedMeasurement {
    pub direction: Direction,
    pub a: f64,
    /// Fitted front speed; 0 by convention when pinned.
    pub c_est: f64,
    /// RMS deviation of the front track from the linear fit.
    pub fit_residual: f64,
    pub pinned: bool,
    /// Fit window (t_start, t_end).
    pub window: (f64, f64),
}

/// Trajectory sample trail from a speed measurement, for CSV export.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FrontTrack {
    pub samples: Vec<(f64, f64)>,
}

impl FrontTrack {
    /// CSV serialization with header `t,xi_star`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,xi_star\n");
        for (t, xi) in &self.samples {
            out.push_str(&format!("{},{}\n", t, xi));
        }
        out
    }
}

/// Measure the front speed at detuning `a` in the given direction.
///
/// Evolves a sheared step front to `t_end`, sampling the front position on
/// a ~5 time-unit cadence, then fits position against time over the second
/// half of the run. The strip is widened (up to three doublings) whenever
/// the front drifts within 20 sites of an end, so fast fronts still get an
/// untainted window. Classification: pinned iff the total displacement over
/// the fit window stays under half a site.
pub fn measure_speed(
    f: &NormalFamily,
    a: f64,
    dir: &Direction,
    width: usize,
    t_end: f64,
) -> Result<WaveSpeedMeasurement, DynamicsError> {
    measure_speed_refined(f, a, dir, width, t_end, 1).map(|(m, _)| m)
}

/// Like [`measure_speed`], also returning the sampled track; `dt_refine`
/// shrinks the default time step by that factor for discretization checks.
pub fn measure_speed_refined(
    f: &NormalFamily,
    a: f64,
    dir: &Direction,
    width: usize,
    t_end: f64,
    dt_refine: u32,
) -> Result<(WaveSpeedMeasurement, FrontTrack), DynamicsError> {
    NormalFamily::check_detuning(a)?;
    let mut w = width.max(80);
    'attempt: for _ in 0..4 {
        let mut state = StripState::sheared_front(
            f,
            a,
            w,
            dir.sigma_den() as usize,
            dir.sigma_num() as i64,
        );
        state.refine_dt(dt_refine);
        let per_sample = (SPEED_SAMPLE_DT / state.dt()).ceil() as usize;
        let mut samples = vec![(state.t(), front_position(&state)?)];
        while state.t() < t_end {
            step(&mut state, f, a, per_sample)?;
            let xi = front_position(&state)?;
            if xi < FRONT_MARGIN_SITES || xi > w as f64 - FRONT_MARGIN_SITES {
                w *= 2;
                continue 'attempt;
            }
            samples.push((state.t(), xi));
        }
        let t_start = 0.5 * t_end;
        let fit: Vec<(f64, f64)> =
            samples.iter().copied().filter(|(t, _)| *t >= t_start).collect();
        let displacement = fit.last().unwrap().1 - fit.first().unwrap().1;
        let pinned = displacement.abs() < PINNED_DISPLACEMENT_SITES;
        let xs: Vec<f64> = fit.iter().map(|(t, _)| *t).collect();
        let ys: Vec<f64> = fit.iter().map(|(_, xi)| *xi).collect();
        let (c, b) = crate::linalg::fit_line(&xs, &ys);
        let rms = (xs
            .iter()
            .zip(&ys)
            .map(|(t, xi)| (xi - (c * t + b)).powi(2))
            .sum::<f64>()
            / xs.len() as f64)
            .sqrt();
        let last_t = fit.last().unwrap().0;
        return Ok((
            WaveSpeedMeasurement {
                direction: *dir,
                a,
                c_est: if pinned { 0.0 } else { c },
                fit_residual: rms,
                pinned,
                window: (t_start, last_t),
            },
            FrontTrack { samples },
        ));
    }
    Err(DynamicsError::FrontHitBoundary { width: w })
}

/// Depinning threshold in one direction: bisection on the pinned flag.
///
/// `bracket` must straddle the threshold — pinned at the low end, depinned
/// at the high end — and is narrowed to `tol` (the honest resolution given
/// the finite-time pinned classification); the midpoint is returned.
pub fn estimate_a_plus(
    f: &NormalFamily,
    dir: &Direction,
    bracket: (f64, f64),
    tol: f64,
) -> Result<f64, DynamicsError> {
    let (mut lo, mut hi) = bracket;
    assert!(lo < hi && tol > 0.0);
    let (m_lo, m_hi) = rayon::join(
        || measure_speed(f, lo, dir, DEFAULT_STRIP_WIDTH, DEFAULT_T_END),
        || measure_speed(f, hi, dir, DEFAULT_STRIP_WIDTH, DEFAULT_T_END),
    );
    let (m_lo, m_hi) = (m_lo?, m_hi?);
    if !m_lo.pinned || m_hi.pinned {
        return Err(DynamicsError::BadBracket {
            lo_pinned: m_lo.pinned,
            hi_pinned: m_hi.pinned,
        });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if measure_speed(f, mid, dir, DEFAULT_STRIP_WIDTH, DEFAULT_T_END)?.pinned {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One row of a direction sweep.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepRow {
    pub s: u32,
    pub q: u32,
    pub theta: f64,
    pub a_plus_est: f64,
    pub tol: f64,
}

/// Threshold estimates over a list of directions (computed concurrently,
/// reported in input order).
pub fn sweep_theta(
    f: &NormalFamily,
    directions: &[Direction],
    bracket: (f64, f64),
    tol: f64,
) -> Result<Vec<SweepRow>, DynamicsError> {
    directions
        .par_iter()
        .map(|dir| {
            let est = estimate_a_plus(f, dir, bracket, tol)?;
            Ok(SweepRow {
                s: dir.sigma_num(),
                q: dir.sigma_den(),
                theta: dir.theta(),
                a_plus_est: est,
                tol,
            })
        })
        .collect()
}

/// CSV for sweep results with header `s,q,theta,a_plus_est,tol`.
pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("s,q,theta,a_plus_est,tol\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{},{}\n", r.s, r.q, r.theta, r.a_plus_est, r.tol));
    }
    out
}

/// Which slow-speed scaling regime a probe targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProbeMode {
    /// Along the axis: find a with c(a, θ=0) = ε; thresholds collapse to
    /// the depinning boundary as ε ↓ 0.
    CEqEps,
    /// Tilted: find a with c(a, (1, ε)) = ε²; staying bounded away from
    /// the axis threshold is the crystallographic-pinning signature.
    CEqEpsSq,
}

/// Diagnostic record from one ε-regime probe.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EpsilonProbe {
    pub eps_requested: f64,
    /// Exact slope s/q of the direction actually simulated.
    pub eps_used: f64,
    pub mode: ProbeMode,
    pub direction: Direction,
    pub c_target: f64,
    /// Detuning at which the measured speed crosses the target.
    pub a_est: f64,
    pub c_at_a_est: f64,
    /// Simulated depinning threshold of the same direction.
    pub a_plus_reference: f64,
}

fn best_rational_slope(eps: f64, max_den: u32) -> (u32, u32) {
    let mut best = (1u32, 1u32);
    let mut err = f64::INFINITY;
    for q in 1..=max_den {
        let s = (eps * q as f64).round().max(1.0) as u32;
        let e = (eps - s as f64 / q as f64).abs();
        if e < err - 1e-15 {
            err = e;
            best = (s, q);
        }
    }
    best
}

/// Probe the slow-speed scaling regimes near the depinning transition.
///
/// For `CEqEps` the direction is the axis and the target speed is ε; for
/// `CEqEpsSq` the direction is the best rational slope s/q ≈ ε with q ≤ 16
/// and the target is (s/q)². The probe locates the detuning that attains
/// the target speed by bisection (speeds increase with a), and reports the
/// direction's own depinning threshold alongside for comparison.
pub fn epsilon_regime_probe(
    f: &NormalFamily,
    eps: f64,
    mode: ProbeMode,
) -> Result<EpsilonProbe, DynamicsError> {
    if !(eps > 0.0 && eps <= 0.3) {
        return Err(DynamicsError::InvalidEpsilon { eps });
    }
    let (dir, eps_used) = match mode {
        ProbeMode::CEqEps => (Direction::axis(), eps),
        ProbeMode::CEqEpsSq => {
            let (s, q) = best_rational_slope(eps, 16);
            (Direction::new(s, q)?, s as f64 / q as f64)
        }
    };
    let c_target = match mode {
        ProbeMode::CEqEps => eps_used,
        ProbeMode::CEqEpsSq => eps_used * eps_used,
    };
    // the threshold anchors the bisection bracket from below (c = 0 there)
    let reference = estimate_a_plus(f, &dir, (0.0, 0.05), DEFAULT_A_BISECT_TOL)
        .or_else(|e| match e {
            // thresholds can exceed the default bracket for strong tilts
            DynamicsError::BadBracket { .. } => {
                estimate_a_plus(f, &dir, (0.0, 0.3), DEFAULT_A_BISECT_TOL)
            }
            other => Err(other),
        })?;

    // speeds need a window long enough for ~40 sites of drift at target
    let t_end = (40.0 / c_target).clamp(400.0, 12_000.0);
    let speed = |a: f64| -> Result<f64, DynamicsError> {
        Ok(measure_speed(f, a, &dir, DEFAULT_STRIP_WIDTH, t_end)?.c_est)
    };

    let mut lo = reference;
    let mut hi = (reference + 0.1).min(0.9);
    let mut c_hi = speed(hi)?;
    while c_hi < c_target {
        let next = (hi + 0.1).min(0.95);
        if next == hi {
            return Err(DynamicsError::BadBracket { lo_pinned: true, hi_pinned: false });
        }
        hi = next;
        c_hi = speed(hi)?;
    }
    for _ in 0..20 {
        if hi - lo < 5e-4 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if speed(mid)? < c_target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let a_est = 0.5 * (lo + hi);
    let c_at_a_est = speed(a_est)?;
    Ok(EpsilonProbe {
        eps_requested: eps,
        eps_used,
        mode,
        direction: dir,
        c_target,
        a_est,
        c_at_a_est,
        a_plus_reference: reference,
    })
}
