use blid_core::{builtin, BlidMap, BumpFunction, Norm, Point, Scenario, SpaceDesc};
use proptest::prelude::*;

fn coords(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, dim)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn radial_blid_is_bounded_and_local_identity(v in coords(3), exp in -6.0f64..6.0) {
        let space = SpaceDesc::finite(3, Norm::Euclidean).unwrap();
        let h = BlidMap::radial(space, BumpFunction::new(1.0, 2.0).unwrap()).unwrap();
        let x = Point::from_vec(v) * 10f64.powf(exp);
        let hx = h.eval(&x).unwrap();
        prop_assert!(space.norm_of(&hx) <= h.c0());
        if space.norm_of(&x) < h.identity_radius() {
            prop_assert_eq!(hx, x);
        }
    }

    #[test]
    fn pointwise_blid_is_bounded_and_local_identity(v in coords(16), exp in -6.0f64..6.0) {
        let space = SpaceDesc::grid(16).unwrap();
        let h = BlidMap::pointwise(space, BumpFunction::new(1.0, 2.0).unwrap()).unwrap();
        let x = Point::from_vec(v) * 10f64.powf(exp);
        let hx = h.eval(&x).unwrap();
        prop_assert!(space.norm_of(&hx) <= h.c0());
        prop_assert!(h.jacobian(&x).op_norm(Norm::Sup) <= h.c1() * (1.0 + 1e-9));
        if space.norm_of(&x) < h.identity_radius() {
            prop_assert_eq!(hx, x);
        }
    }

    #[test]
    fn cutoff_agrees_with_f_near_zero(v in coords(2), t in 0.0f64..1.0) {
        let sc = builtin("saddle-2d").unwrap();
        let g = sc.globalized().unwrap();
        let x = Point::from_vec(v);
        let n = sc.space.norm_of(&x);
        prop_assume!(n > 0.0);
        let x = x * (t * g.identity_radius() / n);
        prop_assert_eq!(g.f_tilde(&x), sc.map_spec().unwrap().nonlinear.eval(&x));
    }

    #[test]
    fn cutoff_is_bounded_everywhere(v in coords(2), exp in -3.0f64..6.0) {
        let sc = builtin("saddle-2d").unwrap();
        let g = sc.globalized().unwrap();
        let x = Point::from_vec(v) * 10f64.powf(exp);
        prop_assert!(sc.space.norm_of(&g.f_tilde(&x)) <= g.sup_f_tilde_bound() * (1.0 + 1e-12));
    }

    #[test]
    fn scenario_json_round_trips(tol in 1e-12f64..1e-6, seed in any::<u64>(), r in 0.01f64..0.4) {
        let mut sc = builtin("koenigs-1d").unwrap();
        sc.tolerances.series_tol = tol;
        sc.seed = seed;
        sc.domain_radius = r;
        prop_assert_eq!(Scenario::from_json(&sc.to_json()).unwrap(), sc);
    }
}
