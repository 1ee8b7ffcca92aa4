//! Named numerical tolerances used across the crate.
//!
//! Every hard-coded threshold lives here with a one-line rationale, so the
//! precision contract of the whole pipeline can be audited in one place.

/// Newton iteration cap for standing-wave solves. Quadratic convergence from
/// a tanh seed needs < 10 iterations; 50 leaves room for line-search detours.
pub const NEWTON_MAX_ITERS: usize = 50;

/// Default sup-norm defect tolerance for converged standing waves.
pub const NEWTON_DEFECT_TOL: f64 = 1e-12;

/// Residual-halving attempts per Newton step before declaring divergence.
pub const LINE_SEARCH_MAX_HALVINGS: usize = 20;

/// Damped-flow steady-state criterion: integration stops when the sup-norm
/// of the right-hand side falls below this.
pub const DAMPED_FLOW_SETTLE_TOL: f64 = 1e-10;

/// Slack allowed on the `[-1, 1]` range of profile values (roundoff only).
pub const PROFILE_BOUND_SLACK: f64 = 1e-9;

/// Slack on monotonicity comparisons of profile entries.
pub const MONOTONE_SLACK: f64 = 1e-12;

/// Profile entries within this distance of ±1 are treated as saturated:
/// the true geometric tail falls below one ulp of 1 there, so consecutive
/// stored values are bit-identical and strict ordering is unobservable.
pub const TAIL_SATURATION_MARGIN: f64 = 1e-13;

/// How close the truncated profile ends must sit to their limits ±1.
pub const TAIL_PROXIMITY: f64 = 0.05;

/// Absolute bisection tolerance for eigenvalues of the linearization.
pub const LAMBDA0_ABS_TOL: f64 = 1e-12;

/// Minimum gap between the two largest eigenvalues before the principal
/// eigenvector is considered well-defined.
pub const EIGEN_GAP_MIN: f64 = 1e-10;

/// Relative eigen-residual `‖Lv − λ₀v‖ / ‖v‖` accepted for kernel vectors.
pub const EIGEN_RESIDUAL_REL: f64 = 1e-10;

/// Unit-norm defect allowed on kernel vectors (`|Σv² − 1|`).
pub const KERNEL_NORM_TOL: f64 = 1e-12;

/// Relative deviation allowed between tail ratios `v_{n+1}/v_n` and the
/// characteristic decay root μ.
pub const TAIL_RATIO_REL_TOL: f64 = 0.05;

/// Tail-ratio checks stop this many entries before the truncation boundary,
/// where the hard-clamped end distorts the ratio.
pub const TAIL_WINDOW_END_OFFSET: usize = 5;

/// Eigenvector entries below this fraction of the maximum are rebuilt from
/// the three-term recurrence: below it, inverse iteration returns roundoff
/// noise rather than the geometric tail.
pub const TAIL_SPLICE_REL: f64 = 1e-6;

/// Sup-norm window width at which fold bisection on the branch stops.
/// Near the floor of corrector arithmetic; leaves `|λ₀|` at the reported
/// fold around 1e-11, far inside every downstream gate.
pub const FOLD_REFINE_X_TOL: f64 = 1e-12;

/// Iteration cap for fold bisection (geometric shrink from ds to the floor).
pub const FOLD_REFINE_MAX_BISECT: usize = 90;

/// `|λ₀|` gate certifying that a profile sits at a fold.
pub const FOLD_LAMBDA0_GATE: f64 = 1e-6;

/// Magnitude of B below which the verdict cannot be "holds".
pub const TOL_B: f64 = 1e-6;

/// The truncation tail estimate must stay below this fraction of |B|.
pub const TAIL_BOUND_FRACTION: f64 = 0.1;

/// Reduced-map orbits stop (truncate) once |η| exceeds this guard.
pub const REDUCED_MAP_ETA_GUARD: f64 = 1e6;

/// Ordering checks need at least this many entries past the window start.
pub const ORDERING_MIN_WINDOW: usize = 100;

/// A front is pinned when its total displacement over the final half-window
/// stays below this many lattice sites.
pub const PINNED_DISPLACEMENT_SITES: f64 = 0.5;

/// Default integration horizon for speed measurements. Long enough that a
/// front moving at the slowest classifiable speed crosses the pinned
/// threshold within the fit window.
pub const DEFAULT_T_END: f64 = 2000.0;

/// Default bisection width on `a` for threshold estimates
/// (simulation-limited; classification is honest only to about this level).
pub const DEFAULT_A_BISECT_TOL: f64 = 1e-3;

/// Minimum distance (sites) the front must keep from the strip ends.
pub const FRONT_MARGIN_SITES: f64 = 20.0;

/// Spacing of front-position samples in time units during speed fits.
pub const SPEED_SAMPLE_DT: f64 = 5.0;

/// `positive_spectrum_check` passes when λ₀ does not exceed this.
pub const POSITIVE_SPECTRUM_TOL: f64 = 1e-8;

/// Field values beyond this magnitude signal an unstable time step.
pub const BLOWUP_BOUND: f64 = 2.0;

/// Planar-map iterates outside `[-bound, bound]²` count as escaped.
pub const PLANAR_DOMAIN_BOUND: f64 = 3.0;

/// Distance from a saddle at which manifold traces are seeded.
pub const MANIFOLD_SEED_DISTANCE: f64 = 1e-6;

/// Analytic-root checks during family validation.
pub const VALIDATE_ROOT_TOL: f64 = 1e-12;
