//! Standing waves of the lattice equation and their parameter continuation.
//!
//! A standing wave is a monotone sequence p with p_{n+1} + p_{n−1} − 2p_n =
//! f(p_n, a) and tails approaching ∓1/±1. The module solves the truncated
//! problem (ghost values hard-clamped to ±1) by damped Newton, cross-checks
//! via an explicit damped-flow integration, follows the solution branch in
//! `a` by pseudo-arclength continuation, and locates the fold points a₊/a₋
//! that bound the pinning interval. A planar-map view of the same recursion
//! is provided for phase-plane diagnostics.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{kth_largest_eigenvalue, solve_bordered, TridiagLu};
use crate::nonlinearity::{FamilyError, NormalFamily};
use crate::tolerances::{
    FOLD_REFINE_MAX_BISECT, FOLD_REFINE_X_TOL, LINE_SEARCH_MAX_HALVINGS, MANIFOLD_SEED_DISTANCE,
    MONOTONE_SLACK, NEWTON_MAX_ITERS, PLANAR_DOMAIN_BOUND, PROFILE_BOUND_SLACK,
    TAIL_SATURATION_MARGIN, TAIL_PROXIMITY,
};

/// Errors from standing-wave solves, flows, and continuation.
#[derive(Debug, Error)]
pub enum LatticeError {
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error("half-width {0} too small; need N >= 20")]
    InvalidHalfWidth(usize),
    #[error("Newton did not converge after {iters} iterations (residual {residual:.3e}); \
             the detuning may lie outside the pinning interval")]
    NoConvergence { iters: usize, residual: f64 },
    #[error("converged profile is not strictly monotone at index {index}; wrong branch")]
    MonotonicityLost { index: i64 },
    #[error("profile value {value} at index {index} outside [-1, 1]")]
    ProfileOutOfRange { index: i64, value: f64 },
    #[error("flow still moving at t = {t} (|du/dt| = {residual:.3e}); depinned regime")]
    NotSettled { residual: f64, t: f64 },
    #[error("time step {dt} exceeds the stability bound {bound}")]
    TimeStepTooLarge { dt: f64, bound: f64 },
    #[error("continuation corrector failed at step {step}")]
    BranchLost { step: usize },
    #[error("branch left the detuning range (last a = {last_a}) without a fold")]
    NoFold { last_a: f64 },
    #[error("equilibrium is not a saddle of the planar map (f' = {slope})")]
    NotASaddle { slope: f64 },
    #[error("planar-map iterate left [-3,3]^2 at ({q}, {r}) after {iter} iterations")]
    EscapedDomain { q: f64, r: f64, iter: usize },
}

/// A truncated standing-wave profile p_{−N}..p_{N} at detuning `a`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LatticeProfile {
    half_width: usize,
    values: Vec<f64>,
    a: f64,
    residual_norm: f64,
}

impl LatticeProfile {
    /// Wrap raw values (length must be 2N+1); residual is recomputed.
    pub fn from_values(f: &NormalFamily, a: f64, values: Vec<f64>) -> Self {
        let half_width = (values.len() - 1) / 2;
        assert_eq!(values.len(), 2 * half_width + 1, "need odd length");
        let residual_norm = defect_norm(f, a, &values);
        Self { half_width, values, a, residual_norm }
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn residual_norm(&self) -> f64 {
        self.residual_norm
    }

    /// Value p_n for n ∈ [−N, N].
    pub fn get(&self, n: i64) -> f64 {
        let idx = n + self.half_width as i64;
        self.values[idx as usize]
    }

    /// All values in index order n = −N..N.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// CSV serialization with header `n,p`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,p\n");
        let n0 = self.half_width as i64;
        for (i, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{},{}\n", i as i64 - n0, v));
        }
        out
    }

    /// Check the range, monotonicity, and tail invariants.
    pub fn check_invariants(&self) -> Result<(), LatticeError> {
        let n0 = self.half_width as i64;
        for (i, &v) in self.values.iter().enumerate() {
            if v.abs() > 1.0 + PROFILE_BOUND_SLACK {
                return Err(LatticeError::ProfileOutOfRange { index: i as i64 - n0, value: v });
            }
        }
        // strict increase is only checkable where the tails have not yet
        // saturated to ±1 in double precision (the true geometric decay
        // drops below one ulp of 1 within ~30 sites of the transition)
        let strict = self.residual_norm < 1e-10;
        for i in 0..self.values.len() - 1 {
            let (a, b) = (self.values[i], self.values[i + 1]);
            if a > b + MONOTONE_SLACK {
                return Err(LatticeError::MonotonicityLost { index: i as i64 - n0 });
            }
            let resolvable = a.abs() < 1.0 - TAIL_SATURATION_MARGIN
                && b.abs() < 1.0 - TAIL_SATURATION_MARGIN;
            if strict && resolvable && !(a < b) {
                return Err(LatticeError::MonotonicityLost { index: i as i64 - n0 });
            }
        }
        let left = (self.values[0] + 1.0).abs();
        let right = (self.values[self.values.len() - 1] - 1.0).abs();
        if left > TAIL_PROXIMITY || right > TAIL_PROXIMITY {
            return Err(LatticeError::ProfileOutOfRange {
                index: if left > TAIL_PROXIMITY { -n0 } else { n0 },
                value: if left > TAIL_PROXIMITY {
                    self.values[0]
                } else {
                    self.values[self.values.len() - 1]
                },
            });
        }
        Ok(())
    }
}

/// Initial guess for the standing-wave solver.
#[derive(Clone, Debug)]
pub enum Init {
    /// tanh step with its zero between sites −1 and 0 (the stable class).
    OffSiteStep,
    /// tanh step with its zero exactly on site 0 (the companion class).
    OnSiteStep,
    /// Start from an existing profile (same half-width required).
    Profile(LatticeProfile),
}

impl Default for Init {
    fn default() -> Self {
        Init::OffSiteStep
    }
}

fn initial_values(init: &Init, n_half: usize) -> Vec<f64> {
    match init {
        Init::OffSiteStep => (-(n_half as i64)..=n_half as i64)
            .map(|n| (n as f64 + 0.5).tanh())
            .collect(),
        Init::OnSiteStep => (-(n_half as i64)..=n_half as i64)
            .map(|n| (n as f64).tanh())
            .collect(),
        Init::Profile(p) => {
            assert_eq!(p.half_width, n_half, "init profile has wrong half-width");
            p.values.clone()
        }
    }
}

/// Standing-wave defect F(p)_n = p_{n+1} + p_{n−1} − 2p_n − f(p_n, a) with
/// ghost values clamped to ∓1/±1.
pub fn defect(f: &NormalFamily, a: f64, values: &[f64]) -> Vec<f64> {
    let m = values.len();
    let mut out = vec![0.0; m];
    for i in 0..m {
        let left = if i == 0 { -1.0 } else { values[i - 1] };
        let right = if i + 1 == m { 1.0 } else { values[i + 1] };
        out[i] = right + left - 2.0 * values[i] - f.f(values[i], a);
    }
    out
}

/// Sup-norm of [`defect`].
pub fn defect_norm(f: &NormalFamily, a: f64, values: &[f64]) -> f64 {
    defect(f, a, values).iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn jacobian_diag(f: &NormalFamily, a: f64, values: &[f64]) -> Vec<f64> {
    values.iter().map(|&p| -2.0 - f.fu(p, a)).collect()
}

/// Solve the standing-wave equation by damped Newton iteration.
///
/// The Jacobian is tridiagonal (off-diagonals 1, diagonal −2 − f′(p_n, a)).
/// A residual-halving line search guards against overshooting; convergence
/// is declared on the sup-norm of the defect.
pub fn solve_standing_wave(
    f: &NormalFamily,
    a: f64,
    init: &Init,
    n_half: usize,
    tol: f64,
) -> Result<LatticeProfile, LatticeError> {
    NormalFamily::check_detuning(a)?;
    if n_half < 20 {
        return Err(LatticeError::InvalidHalfWidth(n_half));
    }
    let mut p = initial_values(init, n_half);
    let m = p.len();
    let off = vec![1.0; m - 1];

    let mut res = defect(f, a, &p);
    let mut res_norm = res.iter().fold(0.0f64, |mx, v| mx.max(v.abs()));
    for iter in 0..NEWTON_MAX_ITERS {
        if res_norm < tol {
            let profile = LatticeProfile {
                half_width: n_half,
                values: p,
                a,
                residual_norm: res_norm,
            };
            profile.check_invariants()?;
            return Ok(profile);
        }
        let diag = jacobian_diag(f, a, &p);
        let lu = TridiagLu::factor(&off, &diag, &off);
        let mut step: Vec<f64> = res.iter().map(|r| -r).collect();
        lu.solve(&mut step);

        // halve until the residual actually decreases
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..LINE_SEARCH_MAX_HALVINGS {
            let trial: Vec<f64> =
                p.iter().zip(&step).map(|(pi, si)| pi + lambda * si).collect();
            let trial_res = defect(f, a, &trial);
            let trial_norm = trial_res.iter().fold(0.0f64, |mx, v| mx.max(v.abs()));
            if trial_norm.is_finite() && (trial_norm < res_norm || trial_norm < tol) {
                p = trial;
                res = trial_res;
                res_norm = trial_norm;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(LatticeError::NoConvergence { iters: iter + 1, residual: res_norm });
        }
    }
    if res_norm < tol {
        let profile = LatticeProfile { half_width: n_half, values: p, a, residual_norm: res_norm };
        profile.check_invariants()?;
        return Ok(profile);
    }
    Err(LatticeError::NoConvergence { iters: NEWTON_MAX_ITERS, residual: res_norm })
}

/// Largest stable time step for [`damped_flow`] at this detuning.
pub fn damped_flow_stable_dt(f: &NormalFamily, a: f64) -> f64 {
    0.2 / (2.0 + f.max_abs_fu(a))
}

/// Integrate the gradient-like flow u̇_n = u_{n+1} + u_{n−1} − 2u_n − f(u_n, a)
/// until it settles; the independent brute-force oracle for the Newton solver.
///
/// Classical fourth-order Runge-Kutta stepping; stops when the sup-norm of
/// the right-hand side drops below the settle tolerance.
pub fn damped_flow(
    f: &NormalFamily,
    a: f64,
    init: &Init,
    n_half: usize,
    dt: f64,
    t_end: f64,
) -> Result<LatticeProfile, LatticeError> {
    NormalFamily::check_detuning(a)?;
    if n_half < 20 {
        return Err(LatticeError::InvalidHalfWidth(n_half));
    }
    let bound = damped_flow_stable_dt(f, a);
    if dt > bound {
        return Err(LatticeError::TimeStepTooLarge { dt, bound });
    }
    let mut u = initial_values(init, n_half);
    let m = u.len();
    let mut t = 0.0;
    let mut k1 = defect(f, a, &u);
    loop {
        let res_norm = k1.iter().fold(0.0f64, |mx, v| mx.max(v.abs()));
        if res_norm < crate::tolerances::DAMPED_FLOW_SETTLE_TOL {
            return Ok(LatticeProfile {
                half_width: n_half,
                values: u,
                a,
                residual_norm: res_norm,
            });
        }
        if t >= t_end {
            return Err(LatticeError::NotSettled { residual: res_norm, t });
        }
        let stage: Vec<f64> = (0..m).map(|i| u[i] + 0.5 * dt * k1[i]).collect();
        let k2 = defect(f, a, &stage);
        let stage: Vec<f64> = (0..m).map(|i| u[i] + 0.5 * dt * k2[i]).collect();
        let k3 = defect(f, a, &stage);
        let stage: Vec<f64> = (0..m).map(|i| u[i] + dt * k3[i]).collect();
        let k4 = defect(f, a, &stage);
        for i in 0..m {
            u[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        t += dt;
        k1 = defect(f, a, &u);
    }
}

/// Which end of the pinning interval a continuation run is headed for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Upper,
    Lower,
}

/// Outcome of a fold-finding continuation run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FoldResult {
    pub a_fold: f64,
    pub profile_at_fold: LatticeProfile,
    pub side: Side,
    /// (a, λ₀) along the branch, including refinement midpoints.
    pub branch_points: Vec<(f64, f64)>,
    pub converged: bool,
}

/// The detuning interval [a₋, a₊] on which standing waves exist.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PinningInterval {
    pub a_minus: f64,
    pub a_plus: f64,
    pub half_width_used: usize,
    pub tolerance: f64,
}

/// Continuation state: profile values plus the detuning, treated as one
/// vector x = (p, a) on the branch.
struct BranchPoint {
    p: Vec<f64>,
    a: f64,
    /// unit tangent (t_p, t_a), oriented continuously along the branch
    tangent: (Vec<f64>, f64),
}

fn branch_lambda0(f: &NormalFamily, a: f64, p: &[f64]) -> f64 {
    let diag = jacobian_diag(f, a, p);
    let off = vec![1.0; p.len() - 1];
    // defect Jacobian = linearization of the flow; its top eigenvalue is λ₀
    kth_largest_eigenvalue(&diag, &off, 0, 1e-11)
}

/// Tangent solve: [J  F_a; t_prevᵀ] t = e_last, then normalize and orient
/// along the previous tangent.
fn branch_tangent(
    f: &NormalFamily,
    p: &[f64],
    a: f64,
    prev: &(Vec<f64>, f64),
) -> (Vec<f64>, f64) {
    let m = p.len();
    let off = vec![1.0; m - 1];
    let diag = jacobian_diag(f, a, p);
    let col: Vec<f64> = p.iter().map(|&pi| -f.fa(pi, a)).collect();
    let zero = vec![0.0; m];
    let z = solve_bordered(&off, &diag, &off, &col, &prev.0, prev.1, &zero, 1.0);
    let norm = z.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut tp: Vec<f64> = z[..m].iter().map(|x| x / norm).collect();
    let mut ta = z[m] / norm;
    let dot: f64 = tp.iter().zip(&prev.0).map(|(x, y)| x * y).sum::<f64>() + ta * prev.1;
    if dot < 0.0 {
        tp.iter_mut().for_each(|x| *x = -*x);
        ta = -ta;
    }
    (tp, ta)
}

/// Newton corrector in the hyperplane through `pred` orthogonal to `tangent`.
fn branch_corrector(
    f: &NormalFamily,
    pred_p: &[f64],
    pred_a: f64,
    tangent: &(Vec<f64>, f64),
    tol: f64,
) -> Option<(Vec<f64>, f64)> {
    let m = pred_p.len();
    let off = vec![1.0; m - 1];
    let mut p = pred_p.to_vec();
    let mut a = pred_a;
    for _ in 0..12 {
        let res = defect(f, a, &p);
        let res_norm = res.iter().fold(0.0f64, |mx, v| mx.max(v.abs()));
        let plane: f64 = tangent
            .0
            .iter()
            .zip(p.iter().zip(pred_p))
            .map(|(t, (x, x0))| t * (x - x0))
            .sum::<f64>()
            + tangent.1 * (a - pred_a);
        if res_norm < tol && plane.abs() < tol.max(1e-14) {
            return Some((p, a));
        }
        let diag = jacobian_diag(f, a, &p);
        let col: Vec<f64> = p.iter().map(|&pi| -f.fa(pi, a)).collect();
        let rhs_top: Vec<f64> = res.iter().map(|r| -r).collect();
        let z = solve_bordered(&off, &diag, &off, &col, &tangent.0, tangent.1, &rhs_top, -plane);
        if z.iter().any(|x| !x.is_finite()) {
            return None;
        }
        for i in 0..m {
            p[i] += z[i];
        }
        a += z[m];
        if a.abs() >= 1.0 {
            return None;
        }
    }
    let res_norm = defect_norm(f, a, &p);
    if res_norm < tol {
        Some((p, a))
    } else {
        None
    }
}

/// Corrector tolerance used along the branch; tight enough that the profile
/// reported at the fold satisfies the defect contract of converged waves.
const BRANCH_DEFECT_TOL: f64 = 5e-13;

fn branch_to_fold(
    f: &NormalFamily,
    a_start: f64,
    side: Side,
    n_half: usize,
    ds: f64,
    init: &Init,
) -> Result<FoldResult, LatticeError> {
    let start = solve_standing_wave(f, a_start, init, n_half, 1e-12)?;
    let m = start.values.len();
    let orient = match side {
        Side::Upper => 1.0,
        Side::Lower => -1.0,
    };
    // natural-parametrization seed tangent: constraint row picks da/ds = ±1
    let seed_prev = (vec![0.0; m], orient);
    let tangent = branch_tangent(f, &start.values, a_start, &seed_prev);
    let mut cur = BranchPoint { p: start.values.clone(), a: a_start, tangent };
    let mut branch_points = vec![(a_start, branch_lambda0(f, a_start, &cur.p))];

    let mut step = ds;
    let max_steps = 10_000;
    for step_idx in 0..max_steps {
        // predictor + corrector, with step halving on corrector failure
        let mut attempt = step;
        let mut next: Option<BranchPoint> = None;
        for _ in 0..8 {
            let pred_p: Vec<f64> =
                cur.p.iter().zip(&cur.tangent.0).map(|(x, t)| x + attempt * t).collect();
            let pred_a = cur.a + attempt * cur.tangent.1;
            if let Some((p, a)) = branch_corrector(f, &pred_p, pred_a, &cur.tangent, BRANCH_DEFECT_TOL)
            {
                let tangent = branch_tangent(f, &p, a, &cur.tangent);
                next = Some(BranchPoint { p, a, tangent });
                break;
            }
            attempt *= 0.5;
        }
        let next = next.ok_or(LatticeError::BranchLost { step: step_idx })?;
        if attempt == step {
            step = (step * 1.3).min(ds);
        } else {
            step = attempt;
        }

        branch_points.push((next.a, branch_lambda0(f, next.a, &next.p)));
        if next.a.abs() >= 1.0 {
            return Err(LatticeError::NoFold { last_a: next.a });
        }

        let flipped = cur.tangent.1.signum() != next.tangent.1.signum();
        if flipped {
            let fold = refine_fold(f, cur, next, &mut branch_points);
            let profile = LatticeProfile {
                half_width: n_half,
                values: fold.0,
                a: fold.1,
                residual_norm: 0.0,
            };
            let residual_norm = defect_norm(f, profile.a, &profile.values);
            let profile = LatticeProfile { residual_norm, ..profile };
            return Ok(FoldResult {
                a_fold: profile.a,
                profile_at_fold: profile,
                side,
                branch_points,
                converged: fold.2,
            });
        }
        cur = next;
    }
    Err(LatticeError::BranchLost { step: max_steps })
}

/// Bisection on the sign of da/ds between two branch points straddling the
/// fold. Returns (profile, a, converged).
fn refine_fold(
    f: &NormalFamily,
    mut lo: BranchPoint,
    mut hi: BranchPoint,
    branch_points: &mut Vec<(f64, f64)>,
) -> (Vec<f64>, f64, bool) {
    let sign_lo = lo.tangent.1.signum();
    let mut converged = false;
    for _ in 0..FOLD_REFINE_MAX_BISECT {
        let gap = lo
            .p
            .iter()
            .zip(&hi.p)
            .fold(0.0f64, |mx, (x, y)| mx.max((x - y).abs()))
            .max((lo.a - hi.a).abs());
        if gap < FOLD_REFINE_X_TOL {
            converged = true;
            break;
        }
        let mid_p: Vec<f64> = lo.p.iter().zip(&hi.p).map(|(x, y)| 0.5 * (x + y)).collect();
        let mid_a = 0.5 * (lo.a + hi.a);
        // average tangent is a valid corrector normal: the two endpoint
        // tangents differ only in the tiny a-component near the fold
        let mut tp: Vec<f64> = lo
            .tangent
            .0
            .iter()
            .zip(&hi.tangent.0)
            .map(|(x, y)| 0.5 * (x + y))
            .collect();
        let mut ta = 0.5 * (lo.tangent.1 + hi.tangent.1);
        let norm = (tp.iter().map(|x| x * x).sum::<f64>() + ta * ta).sqrt();
        tp.iter_mut().for_each(|x| *x /= norm);
        ta /= norm;
        let guide = (tp, ta);

        let Some((p, a)) = branch_corrector(f, &mid_p, mid_a, &guide, BRANCH_DEFECT_TOL) else {
            break; // accept current bracket as best effort
        };
        let tangent = branch_tangent(f, &p, a, &guide);
        branch_points.push((a, branch_lambda0(f, a, &p)));
        let mid = BranchPoint { p, a, tangent };
        if mid.tangent.1.signum() == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // midpoint of the final bracket, corrected once more for a clean defect
    let mid_p: Vec<f64> = lo.p.iter().zip(&hi.p).map(|(x, y)| 0.5 * (x + y)).collect();
    let mid_a = 0.5 * (lo.a + hi.a);
    match branch_corrector(f, &mid_p, mid_a, &lo.tangent, BRANCH_DEFECT_TOL) {
        Some((p, a)) => (p, a, converged),
        None => (mid_p, mid_a, false),
    }
}

/// Follow the standing-wave branch from `a_start` until da/ds changes sign,
/// then refine the fold location by bisection on that sign.
///
/// Both symmetry classes of initial step are continued and the extremal
/// fold is reported (the pinning boundary is the outermost turning point).
pub fn continue_to_fold(
    f: &NormalFamily,
    a_start: f64,
    side: Side,
    n_half: usize,
    ds: f64,
) -> Result<FoldResult, LatticeError> {
    let mut best: Option<FoldResult> = None;
    let mut first_err: Option<LatticeError> = None;
    for init in [Init::OffSiteStep, Init::OnSiteStep] {
        match branch_to_fold(f, a_start, side, n_half, ds, &init) {
            Ok(fold) => {
                let better = match (&best, side) {
                    (None, _) => true,
                    (Some(b), Side::Upper) => fold.a_fold > b.a_fold,
                    (Some(b), Side::Lower) => fold.a_fold < b.a_fold,
                };
                if better {
                    best = Some(fold);
                }
            }
            Err(e) => {
                if first_err.is_none() {
                    first_err = Some(e);
                }
            }
        }
    }
    match best {
        Some(fold) => Ok(fold),
        None => Err(first_err.expect("no branch attempted")),
    }
}

/// Default arclength step for [`pinning_interval`].
pub const DEFAULT_DS: f64 = 0.01;

/// Both folds of the pinning interval via continuation from a_start = 0.
pub fn pinning_interval(f: &NormalFamily, n_half: usize) -> Result<PinningInterval, LatticeError> {
    let upper = continue_to_fold(f, 0.0, Side::Upper, n_half, DEFAULT_DS)?;
    let lower = continue_to_fold(f, 0.0, Side::Lower, n_half, DEFAULT_DS)?;
    Ok(PinningInterval {
        a_minus: lower.a_fold,
        a_plus: upper.a_fold,
        half_width_used: n_half,
        tolerance: FOLD_REFINE_X_TOL,
    })
}

/// One step of the planar recursion (q, r) ↦ (2q − r + f(q, a), q), whose
/// orbits with q_{n} = p_{n+1}, r_n = p_n are exactly the standing waves.
pub fn planar_map_step(q: f64, r: f64, f: &NormalFamily, a: f64) -> (f64, f64) {
    (2.0 * q - r + f.f(q, a), q)
}

/// Saddle equilibria of the planar map available for manifold traces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Equilibrium {
    /// (+1, +1)
    Plus,
    /// (−1, −1)
    Minus,
}

impl Equilibrium {
    fn value(self) -> f64 {
        match self {
            Equilibrium::Plus => 1.0,
            Equilibrium::Minus => -1.0,
        }
    }
}

/// Which invariant manifold of the saddle to trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ManifoldSide {
    Stable,
    Unstable,
}

/// Trace one branch of an invariant manifold of a saddle of the planar map.
///
/// Seeds `n_points` states geometrically spaced along the eigendirection at
/// distance ~1e−6 from the saddle (with a quadratic manifold correction so
/// the sampling error stays far below the seed distance), then iterates each
/// seed `n_iters` times — forward for the unstable side, with the inverse
/// map (q, r) ↦ (r, 2r − q + f(r, a)) for the stable side. The branch traced
/// is the one heading into the bistable square.
pub fn trace_manifold(
    f: &NormalFamily,
    a: f64,
    fixed_point: Equilibrium,
    side: ManifoldSide,
    n_points: usize,
    n_iters: usize,
) -> Result<Vec<(f64, f64)>, LatticeError> {
    NormalFamily::check_detuning(a)?;
    let e = fixed_point.value();
    let d = f.fu(e, a);
    if d <= 0.0 {
        return Err(LatticeError::NotASaddle { slope: d });
    }
    let tr = 2.0 + d;
    let mu_u = 0.5 * (tr + (tr * tr - 4.0).sqrt());
    let mu = match side {
        ManifoldSide::Unstable => mu_u,
        ManifoldSide::Stable => 1.0 / mu_u,
    };
    // eigenvector (μ, 1), normalized; branch pointing into the square
    let norm = (mu * mu + 1.0).sqrt();
    let sign = -e;
    let (vq, vr) = (sign * mu / norm, sign / norm);

    // quadratic term of the local manifold graph: x(ξ) = e + ξ v + ξ² w,
    // from matching the invariance equation at second order:
    // (DF − μ² I) w = −½ f″(e) v_q² e_1  (forward map; mirrored for inverse)
    let fpp = f.fuu(e, a);
    let (wq, wr) = {
        let rhs = -0.5 * fpp * vq * vq;
        match side {
            ManifoldSide::Unstable => {
                // DF = [[2+d, −1],[1, 0]]
                let m11 = tr - mu * mu;
                let m22 = -mu * mu;
                let det = m11 * m22 + 1.0;
                ((rhs * m22) / det, (-rhs) / det)
            }
            ManifoldSide::Stable => {
                // DG = [[0, 1],[−1, 2+d]] for the inverse map
                let rhs2 = -0.5 * fpp * vr * vr;
                let m11 = -mu * mu;
                let m22 = tr - mu * mu;
                let det = m11 * m22 + 1.0;
                ((-rhs2) / det, (rhs2 * m11) / det)
            }
        }
    };

    let ratio = mu_u.powf(1.0 / n_points.max(1) as f64);
    let mut polyline = Vec::with_capacity(n_points * (n_iters + 1));
    for j in 0..=n_iters {
        for k in 0..n_points {
            let delta = MANIFOLD_SEED_DISTANCE * ratio.powi(k as i32);
            let mut q = e + delta * vq + delta * delta * wq;
            let mut r = e + delta * vr + delta * delta * wr;
            for _ in 0..j {
                let (nq, nr) = match side {
                    ManifoldSide::Unstable => planar_map_step(q, r, f, a),
                    ManifoldSide::Stable => (r, 2.0 * r - q + f.f(r, a)),
                };
                q = nq;
                r = nr;
            }
            if q.abs() > PLANAR_DOMAIN_BOUND || r.abs() > PLANAR_DOMAIN_BOUND {
                return Err(LatticeError::EscapedDomain { q, r, iter: j });
            }
            polyline.push((q, r));
        }
    }
    Ok(polyline)
}
