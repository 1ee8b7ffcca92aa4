//! End-to-end runs chaining the solver, continuation, spectral, and
//! invariant stages at a moderate truncation.

use pinlat_core::{
    b_sum, compute_b, continue_to_fold, defect_norm, fredholm_gate, kernel_vector, lambda0,
    pinning_interval, planar_map_step, positive_spectrum_check, solve_standing_wave,
    trace_manifold, Equilibrium, Init, LatticeError, LatticeProfile, Linearization, ManifoldSide,
    NormalFamily, Side, Verdict,
};

const CUBIC: NormalFamily = NormalFamily::Cubic;

/// Regression value for the fold detuning a₊ of the cubic family,
/// truncation-independent to the shown digits for N ≥ 150.
const A_PLUS: f64 = 0.004316455173031;

/// Regression value of the invariant B at the upper fold.
const B_AT_FOLD: f64 = 0.112872803824;

#[test]
fn fold_pipeline_gates_hold() {
    let fold = continue_to_fold(&CUBIC, 0.0, Side::Upper, 150, 0.01).unwrap();
    assert!(fold.converged);
    assert!((fold.a_fold - A_PLUS).abs() < 1e-8, "a₊ = {}", fold.a_fold);

    let p = &fold.profile_at_fold;
    assert!(defect_norm(&CUBIC, fold.a_fold, p.values()) < 1e-10);

    let lin = Linearization::assemble(p, &CUBIC);
    let l0 = lambda0(&lin);
    assert!(l0.abs() < 1e-6, "λ₀ at fold = {l0:e}");
    assert!(positive_spectrum_check(&lin));
    assert!(fredholm_gate(&CUBIC, fold.a_fold, l0));

    let kv = kernel_vector(&lin).unwrap();
    assert!(kv.values().iter().all(|&v| v > 0.0));

    let report = compute_b(p, &kv, &CUBIC).unwrap();
    assert_eq!(report.verdict, Verdict::ConditionBHolds);
    assert_eq!(report.sign, 1);
    assert!(
        (report.b - B_AT_FOLD).abs() < 1e-8,
        "B = {} vs regression {B_AT_FOLD}",
        report.b
    );
}

#[test]
fn pinning_interval_is_symmetric_for_odd_family() {
    // f(−u, −a) = −f(u, a) maps upper-branch waves to lower-branch waves
    let iv = pinning_interval(&CUBIC, 100).unwrap();
    assert!(iv.a_plus > 0.0 && iv.a_minus < 0.0);
    assert!((iv.a_plus + iv.a_minus).abs() < 1e-9, "{} vs {}", iv.a_plus, iv.a_minus);
}

#[test]
fn b_is_covariant_under_index_shift() {
    // the sum is index-free on the infinite lattice; shifting both arrays
    // one site trades a fully saturated left pad for an underflowed right
    // tail term, neither of which carries weight
    let fold = continue_to_fold(&CUBIC, 0.0, Side::Upper, 150, 0.01).unwrap();
    let p = &fold.profile_at_fold;
    let lin = Linearization::assemble(p, &CUBIC);
    let kv = kernel_vector(&lin).unwrap();
    let base = b_sum(&CUBIC, fold.a_fold, p.values(), kv.values());

    let mut sp = vec![-1.0];
    sp.extend_from_slice(&p.values()[..p.values().len() - 1]);
    let mut sv = vec![0.0];
    sv.extend_from_slice(&kv.values()[..kv.values().len() - 1]);
    let shifted = b_sum(&CUBIC, fold.a_fold, &sp, &sv);
    assert!(
        (shifted - base).abs() < 1e-9,
        "shifted B = {shifted} vs {base}"
    );
}

#[test]
fn shifted_wave_resolves_to_shifted_values() {
    let p = solve_standing_wave(&CUBIC, 0.002, &Init::OffSiteStep, 60, 1e-12).unwrap();
    let shifted_guess: Vec<f64> = (-60i64..=60)
        .map(|n| ((n - 1) as f64 + 0.5).tanh())
        .collect();
    let guess = LatticeProfile::from_values(&CUBIC, 0.002, shifted_guess);
    let q = solve_standing_wave(&CUBIC, 0.002, &Init::Profile(guess), 60, 1e-12).unwrap();
    // translation invariance holds away from the truncation boundary
    for n in -50i64..=50 {
        assert!(
            (q.get(n) - p.get(n - 1)).abs() < 1e-8,
            "shift mismatch at n={n}"
        );
    }
}

#[test]
fn newton_reports_no_convergence_outside_interval() {
    for a in [0.05, 0.3, 0.95] {
        let err = solve_standing_wave(&CUBIC, a, &Init::OffSiteStep, 60, 1e-12).unwrap_err();
        assert!(
            matches!(err, LatticeError::NoConvergence { .. }),
            "a={a}: {err:?}"
        );
    }
}

#[test]
fn planar_map_iterates_reproduce_wave_orbit() {
    // (p_{n+1}, p_n) is an orbit of the planar map; iterating from a core
    // site re-walks the profile until the tail defect is amplified
    let p = solve_standing_wave(&CUBIC, 0.001, &Init::OffSiteStep, 60, 1e-13).unwrap();
    let (mut q, mut r) = (p.get(-9), p.get(-10));
    for n in -9i64..1 {
        assert!((q - p.get(n)).abs() < 1e-6, "orbit left profile at n={n}");
        assert!((r - p.get(n - 1)).abs() < 1e-6);
        let (nq, nr) = planar_map_step(q, r, &CUBIC, 0.001);
        q = nq;
        r = nr;
    }
}

#[test]
fn unstable_manifold_shadows_wave_orbit() {
    // the wave's planar orbit lies on the unstable manifold of (−1,−1); the
    // traced polyline must pass through the orbit points from deep in the
    // near tail up into the core. Coverage stops short of the far corner:
    // past the transverse crossing the trace peels away along the other
    // saddle's expanding direction, so the window ends at n = 2.
    let a = 0.004;
    let p = solve_standing_wave(&CUBIC, a, &Init::OffSiteStep, 60, 1e-13).unwrap();
    let branch =
        trace_manifold(&CUBIC, a, Equilibrium::Minus, ManifoldSide::Unstable, 800, 14).unwrap();
    assert!(branch.len() > 10_000);
    for n in -9i64..=2 {
        let (x, y) = (p.get(n), p.get(n - 1));
        let d = polyline_distance(&branch, x, y);
        assert!(d < 1e-6, "orbit point n={n} off the manifold by {d:e}");
    }
}

#[test]
fn stable_manifold_shadows_wave_orbit_backward() {
    // mirrored window: the backward trace from (+1,+1) covers the core and
    // the far tail, peeling off near the (−1,−1) corner instead
    let a = 0.004;
    let p = solve_standing_wave(&CUBIC, a, &Init::OffSiteStep, 60, 1e-13).unwrap();
    let branch =
        trace_manifold(&CUBIC, a, Equilibrium::Plus, ManifoldSide::Stable, 800, 16).unwrap();
    for n in -5i64..=9 {
        let d = polyline_distance(&branch, p.get(n), p.get(n - 1));
        assert!(d < 1e-6, "orbit point n={n} off the manifold by {d:e}");
    }
}

#[test]
fn interior_cancellation_survives_the_full_pipeline() {
    // at a = 0 the summand is odd under the profile symmetry; the raw sum
    // through solver + eigensolver output stays at accumulated roundoff
    let p = solve_standing_wave(&CUBIC, 0.0, &Init::OffSiteStep, 100, 1e-13).unwrap();
    let lin = Linearization::assemble(&p, &CUBIC);
    let kv = kernel_vector(&lin).unwrap();
    let b = b_sum(&CUBIC, 0.0, p.values(), kv.values());
    assert!(b.abs() < 1e-10, "B(a=0) = {b:e}");
}

fn polyline_distance(poly: &[(f64, f64)], x: f64, y: f64) -> f64 {
    let mut best = f64::INFINITY;
    for w in poly.windows(2) {
        let (ax, ay) = w[0];
        let (bx, by) = w[1];
        let (ux, uy) = (bx - ax, by - ay);
        let len2 = ux * ux + uy * uy;
        let t = if len2 > 0.0 {
            (((x - ax) * ux + (y - ay) * uy) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let (dx, dy) = (x - (ax + t * ux), y - (ay + t * uy));
        best = best.min((dx * dx + dy * dy).sqrt());
    }
    best
}
