//! Domain types, kinematics and energy bookkeeping.
//!
//! Angle convention used throughout the crate: every leg angle is measured
//! from the upward vertical at the leg's toe, positive when the hip is
//! forward (+x) of that toe. Forward walking therefore has a positive stance
//! rate, and single-support apex is exactly at `stance_angle == 0`.
//!
//! Ground is the line `y = 0`; potential energies are referenced to it.

use std::fmt;

use thiserror::Error;

/// Unit vector along a leg from its toe towards the hip.
#[inline]
pub(crate) fn axis(theta: f64) -> [f64; 2] {
    [theta.sin(), theta.cos()]
}

/// Derivative of [`axis`] with respect to the angle.
#[inline]
pub(crate) fn tangent(theta: f64) -> [f64; 2] {
    [theta.cos(), -theta.sin()]
}

#[inline]
pub(crate) fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("parameter `{name}` = {value} violates {constraint}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },
}

/// Physical constants and control parameters of the walker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Point mass at the hip (kg).
    pub body_mass: f64,
    /// Mass of each leg (kg). Zero selects the vanishing-leg-mass limit.
    pub leg_mass: f64,
    /// Leg length with the ankle spring fully compressed (m).
    pub leg_length: f64,
    /// Ankle spring stiffness (N/m).
    pub stiffness: f64,
    /// Gravitational acceleration (m/s²).
    pub gravity: f64,
    /// Spring rest length, equal to the precompression released per stride (m).
    pub precompression: f64,
    /// Trigger threshold: the spring is armed once `-stance_angle < trigger_angle` (rad).
    pub trigger_angle: f64,
    /// Distance from the hip to each leg's centre of mass (m).
    pub com_offset: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            body_mass: 1.0,
            leg_mass: 0.0,
            leg_length: 1.0,
            stiffness: 100.0,
            gravity: 9.81,
            precompression: 0.1,
            trigger_angle: -0.25,
            com_offset: 0.5,
        }
    }
}

impl ModelParams {
    /// Reference configuration with the given control parameters.
    pub fn with_control(precompression: f64, trigger_angle: f64) -> Self {
        Self {
            precompression,
            trigger_angle,
            ..Self::default()
        }
    }

    pub fn with_stiffness(mut self, stiffness: f64) -> Self {
        self.stiffness = stiffness;
        self
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        let check = |ok: bool, name: &'static str, value: f64, constraint: &'static str| {
            if ok && value.is_finite() {
                Ok(())
            } else {
                Err(ParamError::OutOfRange {
                    name,
                    value,
                    constraint,
                })
            }
        };
        check(self.body_mass > 0.0, "body_mass", self.body_mass, "> 0")?;
        check(self.leg_mass >= 0.0, "leg_mass", self.leg_mass, ">= 0")?;
        check(self.leg_length > 0.0, "leg_length", self.leg_length, "> 0")?;
        check(self.stiffness > 0.0, "stiffness", self.stiffness, "> 0")?;
        check(self.gravity > 0.0, "gravity", self.gravity, "> 0")?;
        check(
            self.precompression >= 0.0 && self.precompression < self.leg_length,
            "precompression",
            self.precompression,
            "0 <= r0 < leg_length",
        )?;
        check(
            self.trigger_angle.abs() < std::f64::consts::FRAC_PI_2,
            "trigger_angle",
            self.trigger_angle,
            "|theta_trig| < pi/2",
        )?;
        check(
            self.com_offset > 0.0 && self.com_offset < self.leg_length,
            "com_offset",
            self.com_offset,
            "0 < com_offset < leg_length",
        )?;
        Ok(())
    }

    /// Total mass used for cost of transport.
    pub fn total_mass(&self) -> f64 {
        self.body_mass + 2.0 * self.leg_mass
    }

    /// Energy stored in the spring at full compression, released once per stride.
    pub fn spring_budget(&self) -> f64 {
        0.5 * self.stiffness * self.precompression * self.precompression
    }

    /// Spring potential at extension `r` (measured from full compression).
    pub fn spring_energy(&self, r: f64) -> f64 {
        let s = self.precompression - r;
        0.5 * self.stiffness * s * s
    }
}

/// Ballistic single support: one toe on the ground, spring latched compressed.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SingleSupportState {
    pub stance_angle: f64,
    pub swing_angle: f64,
    pub stance_rate: f64,
    pub swing_rate: f64,
    /// Trigger latch; once set it stays set until liftoff.
    pub triggered: bool,
    pub t: f64,
    pub x_stance: f64,
}

/// Single support with the stance ankle spring extending.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PushoffState {
    pub stance_angle: f64,
    pub swing_angle: f64,
    pub stance_rate: f64,
    pub swing_rate: f64,
    /// Spring extension from full compression (m), `0 <= r <= r0`.
    pub r: f64,
    pub dr: f64,
    /// Set once the spring has reached its rest length and locked there.
    pub latched: bool,
    pub t: f64,
    pub x_stance: f64,
}

impl PushoffState {
    /// Effective stance leg length.
    pub fn stance_length(&self, params: &ModelParams) -> f64 {
        params.leg_length + self.r
    }

    /// Pushoff onset from a single-support state: spring at full compression, at rest.
    pub fn from_single(ss: &SingleSupportState) -> Self {
        Self {
            stance_angle: ss.stance_angle,
            swing_angle: ss.swing_angle,
            stance_rate: ss.stance_rate,
            swing_rate: ss.swing_rate,
            r: 0.0,
            dr: 0.0,
            latched: false,
            t: ss.t,
            x_stance: ss.x_stance,
        }
    }
}

/// Double support: both toes grounded, rear spring extending through the closed chain.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DoubleSupportState {
    /// Rear-leg spring extension (m).
    pub r: f64,
    pub dr: f64,
    /// Toe-to-toe distance frozen at collision (m).
    pub toe_distance: f64,
    pub t: f64,
    /// World abscissa of the front toe (m).
    pub x_front: f64,
}

impl DoubleSupportState {
    pub fn x_rear(&self) -> f64 {
        self.x_front - self.toe_distance
    }
}

/// State of the walker in whichever phase it currently is.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HybridState {
    Single(SingleSupportState),
    Pushoff(PushoffState),
    Double(DoubleSupportState),
}

impl HybridState {
    pub fn phase(&self) -> Phase {
        match self {
            HybridState::Single(_) => Phase::Single,
            HybridState::Pushoff(_) => Phase::Pushoff,
            HybridState::Double(_) => Phase::Double,
        }
    }

    pub fn t(&self) -> f64 {
        match self {
            HybridState::Single(s) => s.t,
            HybridState::Pushoff(s) => s.t,
            HybridState::Double(s) => s.t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Single,
    Pushoff,
    Double,
}

impl Phase {
    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::Single => "single",
            Phase::Pushoff => "pushoff",
            Phase::Double => "double",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SectionError {
    #[error("swing angle {swing_angle} admits no stance angle on the liftoff section")]
    Unreachable { swing_angle: f64 },
    #[error("non-finite liftoff point")]
    NonFinite,
}

/// Poincaré section coordinates, taken at liftoff: `[stance rate, swing angle, swing rate]`.
///
/// The stance angle is implied by both toes touching the ground with the
/// rear leg fully extended: `l·cos(stance) = (l + r0)·cos(swing)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LiftoffPoint {
    pub stance_rate: f64,
    pub swing_angle: f64,
    pub swing_rate: f64,
}

impl LiftoffPoint {
    pub fn new(stance_rate: f64, swing_angle: f64, swing_rate: f64) -> Self {
        Self {
            stance_rate,
            swing_angle,
            swing_rate,
        }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.stance_rate, self.swing_angle, self.swing_rate]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn get(&self, i: usize) -> f64 {
        self.to_array()[i]
    }

    pub fn with(&self, i: usize, value: f64) -> Self {
        let mut a = self.to_array();
        a[i] = value;
        Self::from_array(a)
    }

    /// Unit-weighted Euclidean distance on the section.
    pub fn distance(&self, other: &LiftoffPoint) -> f64 {
        let a = self.to_array();
        let b = other.to_array();
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }

    /// Stance angle implied by the section constraint.
    pub fn stance_angle(&self, params: &ModelParams) -> Result<f64, SectionError> {
        if !self.to_array().iter().all(|v| v.is_finite()) {
            return Err(SectionError::NonFinite);
        }
        let l = params.leg_length;
        let c = (l + params.precompression) * self.swing_angle.cos() / l;
        if !(-1.0..=1.0).contains(&c) || self.swing_angle.cos() <= 0.0 {
            return Err(SectionError::Unreachable {
                swing_angle: self.swing_angle,
            });
        }
        let magnitude = c.acos();
        Ok(if self.swing_angle >= 0.0 {
            -magnitude
        } else {
            magnitude
        })
    }

    /// Full single-support state at the start of a stride (stance toe at `x = 0`).
    pub fn to_single_support(&self, params: &ModelParams) -> Result<SingleSupportState, SectionError> {
        let stance_angle = self.stance_angle(params)?;
        Ok(SingleSupportState {
            stance_angle,
            swing_angle: self.swing_angle,
            stance_rate: self.stance_rate,
            swing_rate: self.swing_rate,
            triggered: crate::events::trigger_armed(stance_angle, params.trigger_angle),
            t: 0.0,
            x_stance: 0.0,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("closed chain unsolvable: legs {front} m and {rear} m cannot span toe distance {toe_distance} m")]
pub struct ChainGeometryError {
    pub front: f64,
    pub rear: f64,
    pub toe_distance: f64,
}

/// Double-support closed-chain geometry as a function of the rear spring extension.
///
/// Hip coordinates are relative to the rear toe; all `d_*` are derivatives
/// with respect to `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chain {
    pub hip: [f64; 2],
    pub d_hip: [f64; 2],
    pub dd_hip: [f64; 2],
    /// Front (next stance) leg angle.
    pub front_angle: f64,
    /// Rear (next swing) leg angle.
    pub rear_angle: f64,
    pub d_front_angle: f64,
    pub d_rear_angle: f64,
    pub rear_length: f64,
}

/// Solves the two-circle chain: radius `l` about the front toe and `l + r`
/// about the rear toe, hip above ground.
pub fn chain(r: f64, toe_distance: f64, params: &ModelParams) -> Result<Chain, ChainGeometryError> {
    let l = params.leg_length;
    let rear = l + r;
    let d = toe_distance;
    let err = || ChainGeometryError {
        front: l,
        rear,
        toe_distance: d,
    };
    if !(d > 0.0 && d < l + rear && (rear - l).abs() < d) || !r.is_finite() {
        return Err(err());
    }
    let x = (d * d + rear * rear - l * l) / (2.0 * d);
    let y2 = rear * rear - x * x;
    if y2 <= 0.0 {
        return Err(err());
    }
    let y = y2.sqrt();
    let dx = rear / d;
    let dy = (rear - x * dx) / y;
    let ddx = 1.0 / d;
    let ddy = (1.0 - dx * dx - x * ddx - dy * dy) / y;
    let front_angle = (x - d).atan2(y);
    let rear_angle = x.atan2(y);
    let d_front_angle = (dx * y - (x - d) * dy) / (l * l);
    let d_rear_angle = (dx * y - x * dy) / (rear * rear);
    Ok(Chain {
        hip: [x, y],
        d_hip: [dx, dy],
        dd_hip: [ddx, ddy],
        front_angle,
        rear_angle,
        d_front_angle,
        d_rear_angle,
        rear_length: rear,
    })
}

/// Leg angles in double support, labelled as they will be after liftoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainAngles {
    /// Front leg (next stance).
    pub stance_angle: f64,
    /// Rear leg (next swing).
    pub swing_angle: f64,
    /// d(stance_angle)/dr.
    pub d_stance: f64,
    /// d(swing_angle)/dr.
    pub d_swing: f64,
}

pub fn ds_chain_angles(r: f64, toe_distance: f64, params: &ModelParams) -> Result<ChainAngles, ChainGeometryError> {
    let c = chain(r, toe_distance, params)?;
    Ok(ChainAngles {
        stance_angle: c.front_angle,
        swing_angle: c.rear_angle,
        d_stance: c.d_front_angle,
        d_swing: c.d_rear_angle,
    })
}

/// Hip position in world coordinates.
pub fn hip_position(state: &HybridState, params: &ModelParams) -> Result<(f64, f64), ChainGeometryError> {
    let l = params.leg_length;
    Ok(match state {
        HybridState::Single(s) => (s.x_stance + l * s.stance_angle.sin(), l * s.stance_angle.cos()),
        HybridState::Pushoff(s) => {
            let rho = l + s.r;
            (s.x_stance + rho * s.stance_angle.sin(), rho * s.stance_angle.cos())
        }
        HybridState::Double(s) => {
            let c = chain(s.r, s.toe_distance, params)?;
            (s.x_rear() + c.hip[0], c.hip[1])
        }
    })
}

/// Hip velocity in world coordinates.
pub fn hip_velocity(state: &HybridState, params: &ModelParams) -> Result<[f64; 2], ChainGeometryError> {
    let l = params.leg_length;
    Ok(match state {
        HybridState::Single(s) => {
            let e = tangent(s.stance_angle);
            [l * s.stance_rate * e[0], l * s.stance_rate * e[1]]
        }
        HybridState::Pushoff(s) => {
            let rho = l + s.r;
            let u = axis(s.stance_angle);
            let e = tangent(s.stance_angle);
            [
                s.dr * u[0] + rho * s.stance_rate * e[0],
                s.dr * u[1] + rho * s.stance_rate * e[1],
            ]
        }
        HybridState::Double(s) => {
            let c = chain(s.r, s.toe_distance, params)?;
            [c.d_hip[0] * s.dr, c.d_hip[1] * s.dr]
        }
    })
}

/// A point mass with its world position and velocity.
#[derive(Debug, Clone, Copy)]
pub(crate) struct MassPoint {
    pub mass: f64,
    pub pos: [f64; 2],
    pub vel: [f64; 2],
}

/// Every point mass of the model, leg masses included when nonzero.
pub(crate) fn mass_points(state: &HybridState, params: &ModelParams) -> Result<Vec<MassPoint>, ChainGeometryError> {
    let c = params.com_offset;
    let m = params.leg_mass;
    let (hx, hy) = hip_position(state, params)?;
    let hv = hip_velocity(state, params)?;
    let mut out = vec![MassPoint {
        mass: params.body_mass,
        pos: [hx, hy],
        vel: hv,
    }];
    if m == 0.0 {
        return Ok(out);
    }
    // Leg mass sits `c` below the hip along a leg whose toe-to-hip axis is `u`.
    let along = |u: [f64; 2], ut: [f64; 2]| MassPoint {
        mass: m,
        pos: [hx - c * u[0], hy - c * u[1]],
        vel: [hv[0] - c * ut[0], hv[1] - c * ut[1]],
    };
    match state {
        HybridState::Single(s) => {
            let (ts, tn) = (s.stance_angle, s.swing_angle);
            let es = tangent(ts);
            let en = tangent(tn);
            out.push(along(axis(ts), [s.stance_rate * es[0], s.stance_rate * es[1]]));
            out.push(along(axis(tn), [s.swing_rate * en[0], s.swing_rate * en[1]]));
        }
        HybridState::Pushoff(s) => {
            let (ts, tn) = (s.stance_angle, s.swing_angle);
            let es = tangent(ts);
            let en = tangent(tn);
            out.push(along(axis(ts), [s.stance_rate * es[0], s.stance_rate * es[1]]));
            out.push(along(axis(tn), [s.swing_rate * en[0], s.swing_rate * en[1]]));
        }
        HybridState::Double(s) => {
            let ch = chain(s.r, s.toe_distance, params)?;
            let ef = tangent(ch.front_angle);
            let er = tangent(ch.rear_angle);
            let wf = ch.d_front_angle * s.dr;
            let wr = ch.d_rear_angle * s.dr;
            out.push(along(axis(ch.front_angle), [wf * ef[0], wf * ef[1]]));
            out.push(along(axis(ch.rear_angle), [wr * er[0], wr * er[1]]));
        }
    }
    Ok(out)
}

pub fn kinetic_energy(state: &HybridState, params: &ModelParams) -> Result<f64, ChainGeometryError> {
    Ok(mass_points(state, params)?
        .iter()
        .map(|p| 0.5 * p.mass * dot(p.vel, p.vel))
        .sum())
}

/// Potential energy of the masses plus the engaged spring, if any.
pub fn potential_energy(state: &HybridState, params: &ModelParams) -> Result<f64, ChainGeometryError> {
    let gravity: f64 = mass_points(state, params)?
        .iter()
        .map(|p| p.mass * params.gravity * p.pos[1])
        .sum();
    let spring = match state {
        HybridState::Single(_) => 0.0,
        HybridState::Pushoff(s) => params.spring_energy(s.r),
        HybridState::Double(s) => params.spring_energy(s.r),
    };
    Ok(gravity + spring)
}

/// Total mechanical energy (J), referenced to the ground.
pub fn total_energy(state: &HybridState, params: &ModelParams) -> Result<f64, ChainGeometryError> {
    Ok(kinetic_energy(state, params)? + potential_energy(state, params)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn p() -> ModelParams {
        ModelParams::default()
    }

    #[test]
    fn hip_of_vertical_stance() {
        let s = HybridState::Single(SingleSupportState::default());
        let (x, y) = hip_position(&s, &p()).unwrap();
        assert_eq!((x, y), (0.0, 1.0));
    }

    #[test]
    fn hip_of_extended_vertical_stance() {
        let s = HybridState::Pushoff(PushoffState {
            r: 0.1,
            ..Default::default()
        });
        let (x, y) = hip_position(&s, &p()).unwrap();
        assert_eq!(x, 0.0);
        assert!((y - 1.1).abs() < 1e-15);
    }

    #[test]
    fn hip_in_equilateral_double_support() {
        let s = HybridState::Double(DoubleSupportState {
            r: 0.0,
            toe_distance: 1.0,
            x_front: 1.0,
            ..Default::default()
        });
        let (x, y) = hip_position(&s, &p()).unwrap();
        assert!((x - 0.5).abs() < 1e-15);
        assert!((y - 3f64.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn equilateral_chain_angles() {
        let a = ds_chain_angles(0.0, 1.0, &p()).unwrap();
        assert!((a.stance_angle + PI / 6.0).abs() < 1e-14);
        assert!((a.swing_angle - PI / 6.0).abs() < 1e-14);
    }

    #[test]
    fn chain_at_rest_length_has_equal_hip_heights() {
        let params = ModelParams::with_control(0.12, -0.2);
        let a = ds_chain_angles(params.precompression, 0.7, &params).unwrap();
        let l = params.leg_length;
        let lhs = l * a.stance_angle.cos();
        let rhs = (l + params.precompression) * a.swing_angle.cos();
        assert!((lhs - rhs).abs() < 1e-14);
    }

    #[test]
    fn unsolvable_chain_is_reported() {
        assert!(ds_chain_angles(0.0, 2.5, &p()).is_err());
        assert!(ds_chain_angles(0.1, 0.05, &p()).is_err());
        assert!(ds_chain_angles(0.0, 0.0, &p()).is_err());
    }

    #[test]
    fn energy_at_rest_upright() {
        let s = HybridState::Single(SingleSupportState::default());
        assert!((total_energy(&s, &p()).unwrap() - 9.81).abs() < 1e-15);
    }

    #[test]
    fn spring_energy_vanishes_at_rest_length() {
        let params = p();
        let s = HybridState::Pushoff(PushoffState {
            r: params.precompression,
            ..Default::default()
        });
        let pe = potential_energy(&s, &params).unwrap();
        assert!((pe - 9.81 * 1.1).abs() < 1e-12);
    }

    #[test]
    fn energy_is_translation_invariant() {
        let mut params = p();
        params.leg_mass = 0.2;
        let a = SingleSupportState {
            stance_angle: 0.2,
            swing_angle: -0.1,
            stance_rate: 1.0,
            swing_rate: -2.0,
            ..Default::default()
        };
        let b = SingleSupportState { x_stance: 3.7, ..a };
        let ea = total_energy(&HybridState::Single(a), &params).unwrap();
        let eb = total_energy(&HybridState::Single(b), &params).unwrap();
        assert!((ea - eb).abs() < 1e-13);
    }

    #[test]
    fn section_round_trip_reconstructs_stance_angle() {
        let params = ModelParams::with_control(0.1, -0.2);
        let q = LiftoffPoint::new(1.0, 0.5, 0.3);
        let ss = q.to_single_support(&params).unwrap();
        assert!(ss.stance_angle < 0.0);
        let l = params.leg_length;
        assert!((l * ss.stance_angle.cos() - 1.1 * 0.5f64.cos()).abs() < 1e-14);
        // A too-steep rear leg is unreachable.
        assert!(LiftoffPoint::new(1.0, 0.2, 0.0).to_single_support(&params).is_err());
    }

    #[test]
    fn validation_rejects_bad_params() {
        assert!(p().validate().is_ok());
        let bad = ModelParams {
            precompression: 1.5,
            ..p()
        };
        assert!(bad.validate().is_err());
        let bad = ModelParams {
            body_mass: 0.0,
            ..p()
        };
        assert!(bad.validate().is_err());
    }
}
