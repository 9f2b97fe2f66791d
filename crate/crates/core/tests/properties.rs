use proptest::prelude::*;

use soen_core::devices::{evaluate_signal, stdp_update, SynapseSpec, SynapseState, StdpParams, WeightBounds};
use soen_core::engine::{Event, EventKind};
use soen_core::layout::{max_span, wafer_capacity_real, WaferSpec};
use soen_core::photonics::allocate_photons;
use soen_core::topology::{generate_hierarchical, generate_random, generate_small_world, required_degree, HierarchyLevel};

fn kind() -> impl Strategy<Value = EventKind> {
    prop_oneof![
        Just(EventKind::PhotonArrival),
        Just(EventKind::Fire),
        Just(EventKind::Emission),
        Just(EventKind::StdpPairing),
    ]
}

proptest! {
    #[test]
    fn stdp_stays_in_bounds(w in 0.0f64..=1.0, dt in -1e-5f64..1e-5, lo in 0.0f64..0.5, span in 0.0f64..0.5) {
        let b = WeightBounds { min: lo, max: lo + span };
        let w = w.clamp(b.min, b.max);
        let out = stdp_update(w, dt, &StdpParams::default(), b);
        prop_assert!(out >= b.min && out <= b.max);
        if dt >= 0.0 { prop_assert!(out >= w) } else { prop_assert!(out <= w) }
    }

    #[test]
    fn stdp_antisymmetric_for_symmetric_window(dt in 1e-12f64..5e-6) {
        let p = StdpParams::default();
        let b = WeightBounds { min: 0.0, max: 1.0 };
        let up = stdp_update(0.5, dt, &p, b) - 0.5;
        let down = stdp_update(0.5, -dt, &p, b) - 0.5;
        prop_assert!(up > 0.0 && down < 0.0);
        prop_assert!((up + down).abs() < 1e-15);
    }

    #[test]
    fn synaptic_signal_decays_monotonically(s in 0.0f64..10.0, t1 in 0.0f64..1e-6, gap in 0.0f64..1e-6) {
        let spec = SynapseSpec::default();
        let state = SynapseState { signal: s, ..SynapseState::new(0.5) };
        let a = evaluate_signal(&state, &spec, t1).unwrap();
        let b = evaluate_signal(&state, &spec, t1 + gap).unwrap();
        prop_assert!(b <= a && b >= 0.0);
    }

    #[test]
    fn required_degree_is_the_integer_ceiling(n in 2u64..1_000_000_000_000, l in 1u32..6) {
        let k = required_degree(n, f64::from(l));
        prop_assert!(u128::from(k).pow(l) >= u128::from(n));
        prop_assert!(u128::from(k - 1).pow(l) < u128::from(n));
    }

    #[test]
    fn capacity_scale_covariance(r in 0.01f64..0.5, p in 1u32..10, k in 10u32..10_000, s in 1u32..5) {
        let base = WaferSpec { radius: r, planes: p, k_in: k, ..WaferSpec::default() };
        let c = wafer_capacity_real(&base);
        let scaled_r = wafer_capacity_real(&WaferSpec { radius: r * f64::from(s), ..base });
        let scaled_p = wafer_capacity_real(&WaferSpec { planes: p * s, ..base });
        let scaled_k = wafer_capacity_real(&WaferSpec { k_in: k * s, ..base });
        let s2 = f64::from(s * s);
        prop_assert!((scaled_r / c - s2).abs() < 1e-9 * s2);
        prop_assert!((scaled_p / c - s2).abs() < 1e-9 * s2);
        prop_assert!((c / scaled_k - s2).abs() < 1e-9 * s2);
    }

    #[test]
    fn span_is_inverse_in_frequency(f in 1e3f64..1e9, v in 1e7f64..3e8) {
        let a = max_span(f, v).unwrap();
        let b = max_span(f / 2.0, v).unwrap();
        prop_assert!((b - 2.0 * a).abs() <= 1e-12 * b);
    }

    #[test]
    fn generators_are_seed_deterministic(n in 2usize..200, seed in any::<u64>()) {
        let k = n / 3;
        prop_assert_eq!(generate_random(n, k, seed).unwrap(), generate_random(n, k, seed).unwrap());
        let kw = (k / 2) * 2;
        prop_assert_eq!(
            generate_small_world(n, kw, 0.3, seed).unwrap(),
            generate_small_world(n, kw, 0.3, seed).unwrap()
        );
    }

    #[test]
    fn random_degree_quota_exact(n in 2usize..300, seed in any::<u64>(), frac in 0.0f64..1.0) {
        let k = ((n - 1) as f64 * frac) as usize;
        let t = generate_random(n, k, seed).unwrap();
        for i in 0..n {
            prop_assert_eq!(t.out_degree(i), k);
            prop_assert!(!t.targets_of(i).contains(&(i as u32)));
        }
    }

    #[test]
    fn hierarchical_degree_quota_exact(g0 in 2usize..12, g1 in 1usize..5, d0 in 0usize..12, d1 in 0usize..12, seed in any::<u64>()) {
        let d0 = d0.min(g0 - 1);
        let d1 = d1.min(g0 * g1 - g0);
        let levels = [HierarchyLevel { group_size: g0, degree: d0 }, HierarchyLevel { group_size: g1, degree: d1 }];
        let t = generate_hierarchical(&levels, seed).unwrap();
        for i in 0..t.n_nodes() {
            prop_assert_eq!(t.out_degree(i), d0 + d1);
        }
    }

    #[test]
    fn allocation_conserves_photons(total in 0u64..1_000_000, effs in prop::collection::vec(1e-6f64..=1.0, 1..50)) {
        let a = allocate_photons(total, &effs).unwrap();
        prop_assert_eq!(a.iter().sum::<u64>(), total);
    }

    #[test]
    fn event_order_is_strict_and_text_round_trips(
        time in any::<u64>(), k in kind(), src in any::<u32>(), dst in any::<u32>(), payload in any::<u64>()
    ) {
        let e = Event { time, kind: k, src, dst, payload };
        prop_assert_eq!(e.to_string().parse::<Event>().unwrap(), e);
        let later = Event { time: time.saturating_add(1), ..e };
        prop_assert!(time == u64::MAX || e < later);
    }
}
