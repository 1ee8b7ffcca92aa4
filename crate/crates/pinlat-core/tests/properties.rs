//! Property tests for the solver, family calculus, dynamics ordering, and
//! the reduced recurrence.

use proptest::prelude::*;

use pinlat_core::{
    defect_norm, lambda0, reduced_map_iterate, solve_standing_wave, step, Init, Linearization,
    NormalFamily, StripState,
};

const CUBIC: NormalFamily = NormalFamily::Cubic;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// Derivatives of every built-in family match central finite differences.
    #[test]
    fn family_derivatives_match_finite_differences(
        u in -1.2f64..1.2,
        a in -0.9f64..0.9,
        g0 in 0.5f64..2.0,
        g2 in -0.3f64..0.3,
    ) {
        let fams = [CUBIC, CUBIC.perturb(&[g0, 0.0, g2]).unwrap()];
        let h = 1e-6;
        for f in &fams {
            let e = |u: f64, a: f64| f.eval(u, a).unwrap();
            let du = (e(u + h, a) - e(u - h, a)) / (2.0 * h);
            let duu = (f.eval_du(u + h, a).unwrap() - f.eval_du(u - h, a).unwrap()) / (2.0 * h);
            let da = (e(u, a + h) - e(u, a - h)) / (2.0 * h);
            let scale = |x: f64| x.abs().max(1.0);
            prop_assert!((f.eval_du(u, a).unwrap() - du).abs() / scale(du) < 1e-6);
            prop_assert!((f.eval_duu(u, a).unwrap() - duu).abs() / scale(duu) < 1e-6);
            prop_assert!((f.eval_da(u, a).unwrap() - da).abs() / scale(da) < 1e-6);
        }
    }

    /// Interior standing waves converge with a clean re-evaluated defect,
    /// pass all profile invariants, and are spectrally stable.
    #[test]
    fn interior_waves_converge_and_are_stable(
        frac in -0.8f64..0.8,
        n_half in 30usize..50,
    ) {
        // scale into the interior of the pinning interval
        let a = frac * 0.004316;
        let p = solve_standing_wave(&CUBIC, a, &Init::OffSiteStep, n_half, 1e-12).unwrap();
        prop_assert!(defect_norm(&CUBIC, a, p.values()) < 1e-12);
        p.check_invariants().unwrap();
        let l0 = lambda0(&Linearization::assemble(&p, &CUBIC));
        prop_assert!(l0 < -1e-4, "λ₀ = {l0} at a = {a}");
    }

    /// Sitewise-ordered fields stay ordered under the strip flow.
    #[test]
    fn comparison_principle_holds(
        seed in any::<u64>(),
        a in -0.5f64..0.5,
    ) {
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(seed);
        let (w, h) = (40usize, 2usize);
        let mut lower = vec![0.0; w * h];
        let mut upper = vec![0.0; w * h];
        for i in 0..w * h {
            let base: f64 = rng.gen_range(-1.0..1.0);
            let bump: f64 = rng.gen_range(0.0..0.3);
            lower[i] = (base - bump).clamp(-1.0, 1.0);
            upper[i] = (base + bump).clamp(-1.0, 1.0);
        }
        let dt = 0.1 / (4.0 + CUBIC.max_abs_fu(a));
        let mut lo = StripState::from_field(lower, w, h, 1, dt);
        let mut hi = StripState::from_field(upper, w, h, 1, dt);
        step(&mut lo, &CUBIC, a, 60).unwrap();
        step(&mut hi, &CUBIC, a, 60).unwrap();
        for i in 0..w * h {
            prop_assert!(lo.field()[i] <= hi.field()[i] + 1e-12, "order broken at {i}");
        }
    }

    /// The recurrence is reproducible term by term: each state follows from
    /// the previous pair through the exact same expression.
    #[test]
    fn reduced_orbit_satisfies_its_recurrence(
        b in -2.0f64..2.0,
        eta0 in -0.1f64..0.1,
        omega0 in -0.1f64..0.1,
    ) {
        let orbit = reduced_map_iterate(b, eta0, omega0, 200);
        prop_assert!(orbit.len() >= 2);
        for m in 1..orbit.len() {
            prop_assert_eq!(orbit.omega[m], orbit.eta[m - 1]);
            let expect = 2.0 * orbit.eta[m - 1] - orbit.omega[m - 1]
                + b * orbit.eta[m - 1] * orbit.eta[m - 1];
            prop_assert_eq!(orbit.eta[m], expect);
        }
    }
}
