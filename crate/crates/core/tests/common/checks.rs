//! Randomized comparisons between the crate and the references in `super`.

use aacg_core::dynamics::{ds_accel, pushoff_accel, ss_accel};
use aacg_core::events::{collision_map_post, collision_map_pre, impulsive_pushoff_map};
use aacg_core::model::{chain, kinetic_energy, DoubleSupportState, HybridState, PushoffState, SingleSupportState};
use aacg_core::{DynamicsMode, ModelParams};
use rand_chacha::ChaCha8Rng;

use super::*;

#[derive(Debug, Clone, Copy, Default)]
pub struct PhaseErrors {
    /// Closed-form limit vs numerical Lagrangian limit.
    pub limit: f64,
    /// Closed-form limit vs numerical Lagrangian with `m = 1e-6`.
    pub tiny_mass: f64,
    /// Crate finite-mass mode vs numerical Lagrangian, `m = 0.3`.
    pub finite_mode: f64,
}

impl PhaseErrors {
    fn absorb(&mut self, other: PhaseErrors) {
        self.limit = self.limit.max(other.limit);
        self.tiny_mass = self.tiny_mass.max(other.tiny_mass);
        self.finite_mode = self.finite_mode.max(other.finite_mode);
    }
}

fn random_single(rng: &mut ChaCha8Rng) -> SingleSupportState {
    SingleSupportState {
        stance_angle: uniform(rng, -0.7, 0.7),
        swing_angle: uniform(rng, -0.7, 0.7),
        stance_rate: uniform(rng, -2.5, 2.5),
        swing_rate: uniform(rng, -4.0, 4.0),
        ..Default::default()
    }
}

pub fn single_errors(n: usize, seed: u64) -> PhaseErrors {
    let mut rng = rng(seed);
    let mut worst = PhaseErrors::default();
    for _ in 0..n {
        let mut params = random_params(&mut rng);
        let s = random_single(&mut rng);
        let q = [s.stance_angle, s.swing_angle];
        let qd = [s.stance_rate, s.swing_rate];
        let (hip, stance, swing) = single_positions(&params, params.leg_length);
        let none = |_: &[f64]| 0.0;
        let mut oracle = Oracle {
            body_mass: params.body_mass,
            body: &hip,
            legs: vec![&stance, &swing],
            leg_mass: 1e-6,
            potential: &none,
            gravity: params.gravity,
        };
        let ours = ss_accel(&s, &params, DynamicsMode::EpsilonLimit).0;
        let ours = [ours[2], ours[3]];
        let limit = oracle.limit(&q, &qd, &[1]);
        let tiny = oracle.finite(&q, &qd);
        params.leg_mass = 0.3;
        oracle.leg_mass = 0.3;
        let fin = ss_accel(&s, &params, DynamicsMode::FiniteMass).0;
        worst.absorb(PhaseErrors {
            limit: rel_err(&ours, &limit, accel_scale(&params)),
            tiny_mass: rel_err(&ours, &tiny, accel_scale(&params)),
            finite_mode: rel_err(&[fin[2], fin[3]], &oracle.finite(&q, &qd), accel_scale(&params)),
        });
    }
    worst
}

fn random_pushoff(rng: &mut ChaCha8Rng, params: &ModelParams) -> PushoffState {
    let s = random_single(rng);
    PushoffState {
        r: uniform(rng, 0.0, params.precompression),
        dr: uniform(rng, -1.0, 1.0),
        ..PushoffState::from_single(&s)
    }
}

pub fn pushoff_errors(n: usize, seed: u64) -> PhaseErrors {
    let mut rng = rng(seed);
    let mut worst = PhaseErrors::default();
    for _ in 0..n {
        let mut params = random_params(&mut rng);
        let s = random_pushoff(&mut rng, &params);
        let q = [s.stance_angle, s.swing_angle, s.r];
        let qd = [s.stance_rate, s.swing_rate, s.dr];
        let (hip, stance, swing) = pushoff_positions(&params);
        let pot = spring(&params, 2);
        let mut oracle = Oracle {
            body_mass: params.body_mass,
            body: &hip,
            legs: vec![&stance, &swing],
            leg_mass: 1e-6,
            potential: &pot,
            gravity: params.gravity,
        };
        let d = pushoff_accel(&s, &params, DynamicsMode::EpsilonLimit).0;
        let ours = [d[3], d[4], d[5]];
        let limit = oracle.limit(&q, &qd, &[1]);
        let tiny = oracle.finite(&q, &qd);
        params.leg_mass = 0.3;
        oracle.leg_mass = 0.3;
        let f = pushoff_accel(&s, &params, DynamicsMode::FiniteMass).0;
        worst.absorb(PhaseErrors {
            limit: rel_err(&ours, &limit, accel_scale(&params)),
            tiny_mass: rel_err(&ours, &tiny, accel_scale(&params)),
            finite_mode: rel_err(&[f[3], f[4], f[5]], &oracle.finite(&q, &qd), accel_scale(&params)),
        });
    }
    worst
}

/// A solvable double-support configuration with the hip well above ground.
pub fn random_double(rng: &mut ChaCha8Rng, params: &ModelParams) -> DoubleSupportState {
    loop {
        let r = uniform(rng, 0.0, params.precompression);
        let d = uniform(rng, 0.2, 1.3);
        let Some(h) = two_circle_hip(params.leg_length, params.leg_length + r, d) else {
            continue;
        };
        // Stay clear of the collinear singularity at r = d - l.
        if h[1] < 0.3 || (d - params.leg_length - r).abs() < 0.05 {
            continue;
        }
        return DoubleSupportState {
            r,
            dr: uniform(rng, -1.0, 1.5),
            toe_distance: d,
            t: 0.0,
            x_front: d,
        };
    }
}

pub fn double_errors(n: usize, seed: u64) -> PhaseErrors {
    let mut rng = rng(seed);
    let mut worst = PhaseErrors::default();
    for _ in 0..n {
        let mut params = random_params(&mut rng);
        let s = random_double(&mut rng, &params);
        let (hip, front, rear) = double_positions(&params, s.toe_distance);
        let pot = spring(&params, 0);
        let mut oracle = Oracle {
            body_mass: params.body_mass,
            body: &hip,
            legs: vec![&front, &rear],
            leg_mass: 1e-6,
            potential: &pot,
            gravity: params.gravity,
        };
        let (q, qd) = ([s.r], [s.dr]);
        let ours = [ds_accel(&s, &params, DynamicsMode::EpsilonLimit).unwrap().0[1]];
        let limit = oracle.limit(&q, &qd, &[]);
        let tiny = oracle.finite(&q, &qd);
        params.leg_mass = 0.3;
        oracle.leg_mass = 0.3;
        let fin = [ds_accel(&s, &params, DynamicsMode::FiniteMass).unwrap().0[1]];
        worst.absorb(PhaseErrors {
            limit: rel_err(&ours, &limit, accel_scale(&params)),
            tiny_mass: rel_err(&ours, &tiny, accel_scale(&params)),
            finite_mode: rel_err(&fin, &oracle.finite(&q, &qd), accel_scale(&params)),
        });
    }
    worst
}

/// Worst error of the chain solution (hip, its first two `r` derivatives and
/// the leg-angle rates) against the law-of-cosines construction.
pub fn chain_error(n: usize, seed: u64) -> f64 {
    let mut rng = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..n {
        let params = random_params(&mut rng);
        let s = random_double(&mut rng, &params);
        let (l, d) = (params.leg_length, s.toe_distance);
        let c = chain(s.r, d, &params).unwrap();
        let hip = |r: f64| two_circle_hip(l, l + r, d).unwrap();
        let h = 1e-3;
        let dh = [d5(|r| hip(r)[0], s.r, h), d5(|r| hip(r)[1], s.r, h)];
        let ddh = [
            d5(|r| d5(|x| hip(x)[0], r, h), s.r, h),
            d5(|r| d5(|x| hip(x)[1], r, h), s.r, h),
        ];
        let front = |r: f64| {
            let p = hip(r);
            (p[0] - d).atan2(p[1])
        };
        let rear = |r: f64| {
            let p = hip(r);
            p[0].atan2(p[1])
        };
        let ours = [
            c.hip[0],
            c.hip[1],
            c.d_hip[0],
            c.d_hip[1],
            c.dd_hip[0],
            c.dd_hip[1],
            c.front_angle,
            c.rear_angle,
            c.d_front_angle,
            c.d_rear_angle,
        ];
        let theirs = [
            hip(s.r)[0],
            hip(s.r)[1],
            dh[0],
            dh[1],
            ddh[0],
            ddh[1],
            front(s.r),
            rear(s.r),
            d5(front, s.r, h),
            d5(rear, s.r, h),
        ];
        for (a, b) in ours.iter().zip(&theirs) {
            worst = worst.max((a - b).abs() / b.abs().max(1.0));
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ImpactReport {
    pub samples: usize,
    /// `|ṙ⁺ − (l/2)|θ̇_s|sin 2α|` over post-collision impacts.
    pub rate_identity: f64,
    /// Post-impact hip velocity vs the linear impact solve, both maps.
    pub oracle: f64,
    /// Largest kinetic energy change (must be ≤ 0).
    pub max_energy_delta: f64,
    /// Pre map with `r = ṙ = 0` vs post map.
    pub pre_vs_post: f64,
    /// Impulsive map vs push-then-impact oracle.
    pub impulsive: f64,
}

/// A single-support state at an admissible heel strike: legs on the ground,
/// front leg ahead, inter-leg angle in `(0, π/2)`, hip moving forward.
pub fn random_impact(rng: &mut ChaCha8Rng, rho: f64, l: f64) -> (f64, f64, f64) {
    loop {
        let swing = uniform(rng, -0.75, -0.02);
        let c = l * swing.cos() / rho;
        if c >= 1.0 {
            continue;
        }
        let stance = c.acos();
        let alpha = stance - swing;
        if alpha <= 0.0 || alpha >= std::f64::consts::FRAC_PI_2 {
            continue;
        }
        return (stance, swing, uniform(rng, 0.05, 2.5));
    }
}

fn hip_velocity_after(post: &HybridState, params: &ModelParams) -> [f64; 2] {
    aacg_core::model::hip_velocity(post, params).unwrap()
}

pub fn impact_report(n: usize, seed: u64) -> ImpactReport {
    let mut rng = rng(seed);
    let mut rep = ImpactReport {
        samples: n,
        max_energy_delta: f64::NEG_INFINITY,
        ..Default::default()
    };
    for _ in 0..n {
        let params = random_params(&mut rng);
        let l = params.leg_length;
        let mb = params.body_mass;

        // Post-collision map from ballistic single support.
        let (ts, tn, w) = random_impact(&mut rng, l, l);
        let ss = SingleSupportState {
            stance_angle: ts,
            swing_angle: tn,
            stance_rate: w,
            swing_rate: uniform(&mut rng, -3.0, 3.0),
            triggered: true,
            ..Default::default()
        };
        let out = collision_map_post(&ss, &params).unwrap();
        let HybridState::Double(ds) = out.post_state else { panic!("post map must enter double support") };
        let alpha = ts - tn;
        let expected = 0.5 * l * w.abs() * (2.0 * alpha).sin();
        rep.rate_identity = rep.rate_identity.max((ds.dr - expected).abs());
        let v_minus = [l * w * ts.cos(), -l * w * ts.sin()];
        let (v_plus, _) = impact_oracle(mb, v_minus, axis(tn));
        let v = hip_velocity_after(&out.post_state, &params);
        rep.oracle = rep.oracle.max((v[0] - v_plus[0]).abs().max((v[1] - v_plus[1]).abs()));
        rep.max_energy_delta = rep.max_energy_delta.max(out.energy_delta);
        let ke0 = 0.5 * mb * (v_minus[0].powi(2) + v_minus[1].powi(2));
        let ke1 = 0.5 * mb * (v_plus[0].powi(2) + v_plus[1].powi(2));
        rep.max_energy_delta = rep.max_energy_delta.max(ke1 - ke0);

        let pre = collision_map_pre(&PushoffState::from_single(&ss), &params).unwrap();
        let HybridState::Double(pds) = pre.post_state else { panic!() };
        rep.pre_vs_post = rep
            .pre_vs_post
            .max((pds.dr - ds.dr).abs())
            .max((pds.r - ds.r).abs())
            .max((pds.toe_distance - ds.toe_distance).abs())
            .max((pre.energy_delta - out.energy_delta).abs());

        // Pre-collision map with the spring part-way extended.
        let r = uniform(&mut rng, 0.0, params.precompression);
        let rho = l + r;
        let (ts, tn, w) = random_impact(&mut rng, rho, l);
        let dr = uniform(&mut rng, 0.0, 1.0);
        let po = PushoffState {
            stance_angle: ts,
            swing_angle: tn,
            stance_rate: w,
            swing_rate: 0.0,
            r,
            dr,
            ..Default::default()
        };
        let u = axis(ts);
        let v_minus = [dr * u[0] + rho * w * ts.cos(), dr * u[1] - rho * w * ts.sin()];
        if v_minus[0] * tn.sin() + v_minus[1] * tn.cos() < 0.0 {
            let out = collision_map_pre(&po, &params).unwrap();
            let (v_plus, _) = impact_oracle(mb, v_minus, axis(tn));
            let v = hip_velocity_after(&out.post_state, &params);
            rep.oracle = rep.oracle.max((v[0] - v_plus[0]).abs().max((v[1] - v_plus[1]).abs()));
            rep.max_energy_delta = rep.max_energy_delta.max(out.energy_delta);
            let before = kinetic_energy(&HybridState::Pushoff(po), &params).unwrap();
            let after = kinetic_energy(&out.post_state, &params).unwrap();
            rep.max_energy_delta = rep.max_energy_delta.max(after - before);
        }

        // Impulsive push along the trailing leg, then the rigid impact.
        let (ts, tn, w) = random_impact(&mut rng, l, l);
        let ss = SingleSupportState {
            stance_angle: ts,
            swing_angle: tn,
            stance_rate: w,
            ..Default::default()
        };
        let impulse = uniform(&mut rng, 0.0, 1.0);
        let u = axis(ts);
        let v0 = [l * w * ts.cos(), -l * w * ts.sin()];
        let v1 = [v0[0] + impulse / mb * u[0], v0[1] + impulse / mb * u[1]];
        if v1[0] * tn.sin() + v1[1] * tn.cos() < 0.0 {
            let out = impulsive_pushoff_map(&ss, impulse, &params).unwrap();
            let (v_plus, _) = impact_oracle(mb, v1, axis(tn));
            // New stance leg is the old swing leg.
            let e = [tn.cos(), -tn.sin()];
            let v = [l * out.state.stance_rate * e[0], l * out.state.stance_rate * e[1]];
            rep.impulsive = rep.impulsive.max((v[0] - v_plus[0]).abs().max((v[1] - v_plus[1]).abs()));
        }
    }
    rep
}
