//! Guards and jump maps between phases.
//!
//! Impacts are instantaneous and inelastic. With massless legs the contact
//! impulse at the new stance toe acts along the front leg only, so the hip
//! velocity loses exactly its component along that leg. The rear leg carries
//! no impulse: its spring is either free to extend (and finite) or already
//! latched, in which case the rear toe simply leaves the ground.

use thiserror::Error;

use crate::model::{
    axis, chain, dot, kinetic_energy, tangent, ChainGeometryError, DoubleSupportState, HybridState, LiftoffPoint,
    ModelParams, PushoffState, SingleSupportState,
};

/// Trigger condition `-stance_angle < trigger_angle`.
pub fn trigger_armed(stance_angle: f64, trigger_angle: f64) -> bool {
    -stance_angle < trigger_angle
}

/// Forces along the stance leg with the spring fully compressed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PushoffForces {
    /// Spring preload plus centrifugal load of the body (N).
    pub propulsive: f64,
    /// Radial component of the body weight (N).
    pub impeding: f64,
}

impl PushoffForces {
    pub fn exceeds(&self) -> bool {
        self.propulsive > self.impeding
    }

    pub fn margin(&self) -> f64 {
        self.propulsive - self.impeding
    }
}

pub fn pushoff_forces(state: &SingleSupportState, params: &ModelParams) -> PushoffForces {
    pushoff_forces_at(state.stance_angle, state.stance_rate, params)
}

pub(crate) fn pushoff_forces_at(stance_angle: f64, stance_rate: f64, params: &ModelParams) -> PushoffForces {
    PushoffForces {
        propulsive: params.stiffness * params.precompression
            + params.body_mass * params.leg_length * stance_rate * stance_rate,
        impeding: params.body_mass * params.gravity * stance_angle.cos(),
    }
}

/// Height of the swing toe above the ground for a stance leg of the given length.
pub fn swing_toe_height(stance_angle: f64, stance_length: f64, swing_angle: f64, params: &ModelParams) -> f64 {
    stance_length * stance_angle.cos() - params.leg_length * swing_angle.cos()
}

/// A guard crossing counts as heel strike only with the swing toe ahead of both
/// the stance toe and the hip, and the hip moving forward. Anything else
/// (including the instant the legs coincide) is mid-swing scuffing.
pub fn collision_admissible(
    stance_angle: f64,
    stance_length: f64,
    swing_angle: f64,
    hip_vx: f64,
    params: &ModelParams,
) -> bool {
    let toe_gap = stance_length * stance_angle.sin() - params.leg_length * swing_angle.sin();
    toe_gap > 0.0 && swing_angle < 0.0 && hip_vx > 0.0
}

/// Signed swing-toe height; heel strike is its admissible `+ → −` crossing.
/// Double support has no swing leg and reports zero.
pub fn collision_guard(state: &HybridState, params: &ModelParams) -> f64 {
    match state {
        HybridState::Single(s) => swing_toe_height(s.stance_angle, params.leg_length, s.swing_angle, params),
        HybridState::Pushoff(s) => {
            swing_toe_height(s.stance_angle, s.stance_length(params), s.swing_angle, params)
        }
        HybridState::Double(_) => 0.0,
    }
}

/// Inter-leg angle at impact: the angle between the two legs.
pub fn inter_leg_angle(stance_angle: f64, swing_angle: f64) -> f64 {
    stance_angle - swing_angle
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransitionKind {
    PushoffStart,
    CollisionPre,
    CollisionPost,
    Liftoff,
    Fall,
}

/// Irregular impact outcomes the simulator must act on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImpactFlag {
    /// Inter-leg angle outside (0, π/2): the impact would compress the
    /// freshly triggered spring below full compression. Rate clamped to zero.
    SpringNotReinforced,
    /// Pre-collision pushoff left the rear spring compressing after impact.
    Compression,
    /// The hip was moving away from the new contact; the front leg cannot pull.
    NonCompressive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventOutcome {
    pub kind: TransitionKind,
    pub post_state: HybridState,
    /// Kinetic energy change across the event (J).
    pub energy_delta: f64,
    pub flag: Option<ImpactFlag>,
}

/// Engages the stance spring: no jump in any coordinate.
pub fn pushoff_start(state: &SingleSupportState) -> EventOutcome {
    EventOutcome {
        kind: TransitionKind::PushoffStart,
        post_state: HybridState::Pushoff(PushoffState::from_single(state)),
        energy_delta: 0.0,
        flag: None,
    }
}

/// Heel strike from ballistic single support; the spring is triggered right
/// before impact, so the rear leg enters double support fully compressed.
///
/// The rear spring rate after impact is `(l/2)·θ̇_s·sin 2α` with `α` the
/// inter-leg angle.
pub fn collision_map_post(state: &SingleSupportState, params: &ModelParams) -> Result<EventOutcome, ChainGeometryError> {
    let l = params.leg_length;
    let alpha = inter_leg_angle(state.stance_angle, state.swing_angle);
    let toe_distance = l * state.stance_angle.sin() - l * state.swing_angle.sin();
    let mut dr = 0.5 * l * state.stance_rate * (2.0 * alpha).sin();
    let mut flag = None;
    if dr < 0.0 {
        flag = Some(ImpactFlag::SpringNotReinforced);
        dr = 0.0;
    }
    let post = HybridState::Double(DoubleSupportState {
        r: 0.0,
        dr,
        toe_distance,
        t: state.t,
        x_front: state.x_stance + toe_distance,
    });
    let before = kinetic_energy(&HybridState::Single(*state), params)?;
    let after = kinetic_energy(&post, params)?;
    Ok(EventOutcome {
        kind: TransitionKind::CollisionPost,
        post_state: post,
        energy_delta: after - before,
        flag,
    })
}

/// Heel strike during pushoff: the rear spring keeps its extension and the
/// hip velocity loses its component along the front leg.
pub fn collision_map_pre(state: &PushoffState, params: &ModelParams) -> Result<EventOutcome, ChainGeometryError> {
    let l = params.leg_length;
    let (r, dr) = if state.latched {
        (params.precompression, 0.0)
    } else {
        (state.r, state.dr)
    };
    let rho = l + r;
    let ur = axis(state.stance_angle);
    let er = tangent(state.stance_angle);
    let uf = axis(state.swing_angle);
    let v = [
        dr * ur[0] + rho * state.stance_rate * er[0],
        dr * ur[1] + rho * state.stance_rate * er[1],
    ];
    let vn = dot(v, uf);
    let post_v = [v[0] - vn * uf[0], v[1] - vn * uf[1]];
    let post_dr = dot(post_v, ur);
    let toe_distance = rho * state.stance_angle.sin() - l * state.swing_angle.sin();
    let flag = if vn >= 0.0 {
        Some(ImpactFlag::NonCompressive)
    } else if post_dr < 0.0 && (r < params.precompression || state.latched) {
        Some(ImpactFlag::Compression)
    } else {
        None
    };
    let post = HybridState::Double(DoubleSupportState {
        r,
        dr: post_dr,
        toe_distance,
        t: state.t,
        x_front: state.x_stance + toe_distance,
    });
    let pre = PushoffState { r, dr, ..*state };
    let before = kinetic_energy(&HybridState::Pushoff(pre), params)?;
    let after = kinetic_energy(&post, params)?;
    Ok(EventOutcome {
        kind: TransitionKind::CollisionPre,
        post_state: post,
        energy_delta: after - before,
        flag,
    })
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LiftoffError {
    #[error("spring at rest length is recompressing (dr = {dr})")]
    Recompressing { dr: f64 },
    #[error("spring extension {r} is not at rest length {r0}")]
    NotAtRestLength { r: f64, r0: f64 },
    #[error(transparent)]
    Chain(#[from] ChainGeometryError),
}

/// Rear toe leaves the ground once its spring reaches rest length. Legs are
/// relabelled (front becomes stance), the new swing leg retracts to `l`, and
/// the new stance spring is re-compressed for the next stride.
pub fn liftoff_map(
    state: &DoubleSupportState,
    params: &ModelParams,
) -> Result<(LiftoffPoint, SingleSupportState), LiftoffError> {
    let r0 = params.precompression;
    if (state.r - r0).abs() > 1e-9 {
        return Err(LiftoffError::NotAtRestLength { r: state.r, r0 });
    }
    if state.dr < 0.0 {
        return Err(LiftoffError::Recompressing { dr: state.dr });
    }
    let ch = chain(r0, state.toe_distance, params)?;
    let ss = SingleSupportState {
        stance_angle: ch.front_angle,
        swing_angle: ch.rear_angle,
        stance_rate: ch.d_front_angle * state.dr,
        swing_rate: ch.d_rear_angle * state.dr,
        triggered: trigger_armed(ch.front_angle, params.trigger_angle),
        t: state.t,
        x_stance: state.x_front,
    };
    let q = LiftoffPoint::new(ss.stance_rate, ss.swing_angle, ss.swing_rate);
    Ok((q, ss))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("impulsive heel strike is not compressive on the front leg")]
pub struct NonCompressiveImpact;

/// Result of an impulsive push followed by heel strike.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpulsiveOutcome {
    /// New single-support state, stance on the former swing leg.
    pub state: SingleSupportState,
    /// Kinetic energy added by the push (J).
    pub injected: f64,
    /// Kinetic energy removed by the heel strike (J, ≥ 0).
    pub dissipated: f64,
}

/// Impulse along the trailing leg immediately before a rigid heel strike
/// (no spring, no double support). The trailing toe leaves the ground.
pub fn impulsive_pushoff_map(
    state: &SingleSupportState,
    impulse: f64,
    params: &ModelParams,
) -> Result<ImpulsiveOutcome, NonCompressiveImpact> {
    let l = params.leg_length;
    let mb = params.body_mass;
    let ur = axis(state.stance_angle);
    let er = tangent(state.stance_angle);
    let uf = axis(state.swing_angle);
    let ef = tangent(state.swing_angle);
    let v0 = [l * state.stance_rate * er[0], l * state.stance_rate * er[1]];
    let push = impulse / mb;
    let v1 = [v0[0] + push * ur[0], v0[1] + push * ur[1]];
    let vn = dot(v1, uf);
    if vn >= 0.0 {
        return Err(NonCompressiveImpact);
    }
    let v2 = [v1[0] - vn * uf[0], v1[1] - vn * uf[1]];
    let toe_distance = l * state.stance_angle.sin() - l * state.swing_angle.sin();
    let next = SingleSupportState {
        stance_angle: state.swing_angle,
        swing_angle: state.stance_angle,
        stance_rate: dot(v2, ef) / l,
        swing_rate: dot(v2, er) / l,
        triggered: false,
        t: state.t,
        x_stance: state.x_stance + toe_distance,
    };
    let ke = |v: [f64; 2]| 0.5 * mb * dot(v, v);
    Ok(ImpulsiveOutcome {
        state: next,
        injected: ke(v1) - ke(v0),
        dissipated: ke(v1) - ke(v2),
    })
}
