use aacg_core::dynamics::pushoff_accel;
use aacg_core::events::{collision_map_post, pushoff_forces, trigger_armed};
use aacg_core::format::sig17;
use aacg_core::model::{chain, kinetic_energy};
use aacg_core::{
    DynamicsMode, GridAxis, HybridState, IntegratorConfig, LiftoffPoint, ModelParams, PushoffState,
    SingleSupportState, StrideResult, Walker,
};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = ModelParams> {
    (0.0..0.15f64, -0.6..0.1f64, 50.0..400.0f64)
        .prop_map(|(r0, trig, k)| ModelParams::with_control(r0, trig).with_stiffness(k))
}

proptest! {
    #[test]
    fn sig17_round_trips(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        let s = sig17(x);
        prop_assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
    }

    #[test]
    fn grid_axis_hits_endpoints(min in -1.0..1.0f64, span in 0.0..2.0f64, count in 2usize..200) {
        let v = GridAxis::new(min, min + span, count).values();
        prop_assert_eq!(v.len(), count);
        prop_assert_eq!(v[0], min);
        prop_assert_eq!(*v.last().unwrap(), min + span);
        prop_assert!(v.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn trigger_is_a_threshold_on_stance_angle(trig in -0.6..0.1f64, a in -0.8..0.8f64, b in -0.8..0.8f64) {
        // Arming can only switch on as the stance leg rotates forward.
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(!trigger_armed(lo, trig) || trigger_armed(hi, trig));
    }

    #[test]
    fn rest_length_chain_has_level_hips(p in params(), d in 0.3..1.2f64) {
        if let Ok(c) = chain(p.precompression, d, &p) {
            let l = p.leg_length;
            prop_assert!((l * c.front_angle.cos() - (l + p.precompression) * c.rear_angle.cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn section_points_reconstruct_the_constraint(p in params(), w in 0.2..2.0f64, tn in 0.05..0.7f64, wn in -2.0..2.0f64) {
        let q = LiftoffPoint::new(w, tn, wn);
        if let Ok(ss) = q.to_single_support(&p) {
            let l = p.leg_length;
            prop_assert!((l * ss.stance_angle.cos() - (l + p.precompression) * tn.cos()).abs() < 1e-12);
            prop_assert!(ss.stance_angle <= 0.0);
        }
    }

    #[test]
    fn heel_strike_never_adds_energy(p in params(), half in 0.02..0.7f64, w in 0.05..3.0f64, wn in -3.0..3.0f64) {
        let ss = SingleSupportState {
            stance_angle: half,
            swing_angle: -half,
            stance_rate: w,
            swing_rate: wn,
            triggered: true,
            ..Default::default()
        };
        let out = collision_map_post(&ss, &p).unwrap();
        prop_assert!(out.energy_delta <= 1e-12);
        let before = kinetic_energy(&HybridState::Single(ss), &p).unwrap();
        prop_assert!((before + out.energy_delta - kinetic_energy(&out.post_state, &p).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn pushoff_onset_sign_matches_force_test(p in params(), ts in -0.6..0.6f64, w in -2.0..2.0f64) {
        let ss = SingleSupportState { stance_angle: ts, stance_rate: w, ..Default::default() };
        let f = pushoff_forces(&ss, &p);
        let acc = pushoff_accel(&PushoffState::from_single(&ss), &p, DynamicsMode::EpsilonLimit).0[5];
        if f.margin().abs() > 1e-9 {
            prop_assert_eq!(acc > 0.0, f.exceeds());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn strides_close_their_energy_budget(
        r0 in 0.02..0.12f64,
        trig in -0.5..-0.1f64,
        dw in -0.05..0.05f64,
        dtn in -0.02..0.02f64,
        dwn in -0.1..0.1f64,
    ) {
        let w = Walker::new(ModelParams::with_control(r0, trig), IntegratorConfig::default());
        let q = LiftoffPoint::new(0.9 + dw, 0.45 + dtn, 0.65 + dwn);
        if let StrideResult::Completed { trace, next } = w.step(&q) {
            prop_assert!(trace.energy_residual().abs() < 1e-8, "residual {}", trace.energy_residual());
            prop_assert!(trace.step_length > 0.0 && trace.duration > 0.0);
            prop_assert!(next.to_array().iter().all(|v| v.is_finite()));
        }
    }
}
