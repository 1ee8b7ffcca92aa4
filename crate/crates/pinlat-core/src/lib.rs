//! Numerics for pinned interfaces in bistable lattice equations.
//!
//! The crate computes standing waves of u̇_n = u_{n+1} + u_{n−1} − 2u_n −
//! f(u_n, a) on the 1-d integer lattice, follows them in the detuning
//! parameter to the folds that bound the pinning interval, analyzes the
//! linearization spectrum, evaluates the pinning invariant from the kernel
//! mode at the fold, and measures direction-dependent depinning thresholds
//! by direct simulation on helically wrapped strips.
//!
//! Module map:
//! - [`nonlinearity`]: the bistable nonlinearity family f(u, a) and checks
//!   that a candidate family is admissible.
//! - [`lattice`]: standing-wave solves, damped-flow oracle, continuation to
//!   the folds, the pinning interval, and a planar-map phase-plane view.
//! - [`spectral`]: eigenvalues/eigenvectors of the linearization about a
//!   wave, decay rates, stability checks.
//! - [`condition_b`]: the scalar invariant decided at the fold and the
//!   reduced quadratic recurrence it governs.
//! - [`dynamics`]: strip simulations, front-speed measurement, and
//!   threshold estimation per direction.
//! - [`linalg`]: the tridiagonal kernels everything above runs on.
//! - [`tolerances`]: every numeric tolerance in one place, with rationale.

pub mod condition_b;
pub mod dynamics;
pub mod lattice;
pub mod linalg;
pub mod nonlinearity;
pub mod spectral;
pub mod tolerances;

pub use condition_b::{
    b_sum, compute_b, prop52_ordering_check, reduced_map_iterate, render_verdict, BReport,
    ConditionBError, ReducedOrbit, Verdict,
};
pub use dynamics::{
    epsilon_regime_probe, estimate_a_plus, front_position, measure_speed, measure_speed_refined,
    step, sweep_theta, sweep_to_csv, Direction, DynamicsError, EpsilonProbe, FrontTrack,
    ProbeMode, StripState, SweepRow, WaveSpeedMeasurement, DEFAULT_STRIP_WIDTH,
};
pub use lattice::{
    continue_to_fold, damped_flow, damped_flow_stable_dt, defect, defect_norm, pinning_interval,
    planar_map_step, solve_standing_wave, trace_manifold, Equilibrium, FoldResult, Init,
    LatticeError, LatticeProfile, ManifoldSide, PinningInterval, Side,
};
pub use nonlinearity::{FamilyError, NormalFamily, ValidationReport, Violation};
pub use spectral::{
    decay_rate, fredholm_gate, kernel_vector, lambda0, positive_spectrum_check, KernelVector,
    Linearization, SpectralError,
};
