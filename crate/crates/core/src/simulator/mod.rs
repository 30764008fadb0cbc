//! Stride-by-stride simulation of the hybrid walker.
//!
//! One stride runs from a liftoff section point through single support
//! (optionally switching to pushoff), heel strike, double support, and the
//! next liftoff. Events are located on the integrator's dense output.

pub(crate) mod rk;
mod trace;

use thiserror::Error;

use crate::dynamics::{double_field, pushoff_field, single_field};
use crate::events::{
    collision_admissible, collision_map_post, collision_map_pre, impulsive_pushoff_map, liftoff_map,
    pushoff_forces, pushoff_forces_at, swing_toe_height, trigger_armed, ImpactFlag,
};
use crate::model::{
    chain, total_energy, ChainGeometryError, DoubleSupportState, HybridState, LiftoffPoint, ModelParams, PushoffState,
    SectionError, SingleSupportState,
};
use rk::{integrate, Direction, Guard, Stats, Stop};

pub use trace::{EventKind, StrideTrace, TraceEvent, TraceSample, TRACE_CSV_HEADER};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Largest step the integrator may take (s).
    pub max_step: f64,
    /// Width of the final bracket around an event time (s).
    pub event_time_tol: f64,
    pub max_stride_time: f64,
    pub max_strides: usize,
    /// Keep every accepted step in the stride trace.
    pub record_samples: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: 0.02,
            event_time_tol: 1e-12,
            max_stride_time: 5.0,
            max_strides: 200,
            record_samples: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("integrator setting `{0}` must be positive")]
    NonPositive(&'static str),
    #[error("event_time_tol must not exceed max_step")]
    EventTolerance,
}

impl IntegratorConfig {
    /// Same settings with both tolerances scaled.
    pub fn with_tolerance(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, v) in [
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("max_step", self.max_step),
            ("event_time_tol", self.event_time_tol),
            ("max_stride_time", self.max_stride_time),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(ConfigError::NonPositive(name));
            }
        }
        if self.max_strides == 0 {
            return Err(ConfigError::NonPositive("max_strides"));
        }
        if self.event_time_tol > self.max_step {
            return Err(ConfigError::EventTolerance);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum FallReason {
    #[error("stance leg reached horizontal")]
    StanceFell,
    #[error("hip reversed direction")]
    Backward,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FailureReason {
    #[error("invalid section point: {0}")]
    InvalidSection(#[from] SectionError),
    #[error("stance rate is not positive at the section")]
    BackwardAtSection,
    #[error("stride exceeded the time limit")]
    Timeout,
    #[error("ankle spring returned to full compression")]
    SpringRecompressed,
    #[error("heel strike did not reinforce spring extension")]
    SpringNotReinforced,
    #[error("heel strike is not compressive on the front leg")]
    NonCompressiveImpact,
    #[error(transparent)]
    Chain(#[from] ChainGeometryError),
    #[error("integrator could not advance the state")]
    Diverged,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StrideResult {
    Completed { next: LiftoffPoint, trace: StrideTrace },
    Fell(FallReason),
    Failed(FailureReason),
}

impl StrideResult {
    pub fn completed(&self) -> Option<(&LiftoffPoint, &StrideTrace)> {
        match self {
            StrideResult::Completed { next, trace } => Some((next, trace)),
            _ => None,
        }
    }

    pub fn is_completed(&self) -> bool {
        matches!(self, StrideResult::Completed { .. })
    }

    pub fn describe(&self) -> String {
        match self {
            StrideResult::Completed { .. } => "completed".into(),
            StrideResult::Fell(r) => format!("fell: {r}"),
            StrideResult::Failed(r) => format!("failed: {r}"),
        }
    }
}

/// How energy enters the walker each stride.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Actuation {
    /// Triggered, precompressed ankle spring.
    #[default]
    AnkleSpring,
    /// Instantaneous push along the trailing leg right before a rigid heel strike.
    Impulsive { impulse: f64 },
}

/// Model, actuation and integrator settings bundled for stride evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Walker {
    pub params: ModelParams,
    pub actuation: Actuation,
    pub config: IntegratorConfig,
}

enum Phase {
    Single(SingleSupportState),
    Pushoff(PushoffState),
    Double(DoubleSupportState),
}

struct Recorder {
    keep_samples: bool,
    trace: StrideTrace,
    stats: Stats,
    h: f64,
}

impl Recorder {
    fn event(&mut self, t: f64, kind: EventKind) {
        self.trace.events.push(TraceEvent { t, kind });
    }

    fn sample(&mut self, state: HybridState, params: &ModelParams) {
        if self.keep_samples {
            let energy = total_energy(&state, params).unwrap_or(f64::NAN);
            self.trace.samples.push(TraceSample {
                t: state.t(),
                state,
                energy,
            });
        }
    }
}

/// A latched stance leg is recorded as pushoff at full extension so that
/// energy and hip position see the longer leg.
fn as_recorded(ss: SingleSupportState, extension: f64) -> HybridState {
    if extension == 0.0 {
        return HybridState::Single(ss);
    }
    HybridState::Pushoff(PushoffState {
        stance_angle: ss.stance_angle,
        swing_angle: ss.swing_angle,
        stance_rate: ss.stance_rate,
        swing_rate: ss.swing_rate,
        r: extension,
        dr: 0.0,
        latched: true,
        t: ss.t,
        x_stance: ss.x_stance,
    })
}

fn ss_from(y: &[f64; 4], t: f64, proto: &SingleSupportState) -> SingleSupportState {
    SingleSupportState {
        stance_angle: y[0],
        swing_angle: y[1],
        stance_rate: y[2],
        swing_rate: y[3],
        t,
        ..*proto
    }
}

fn po_from(y: &[f64; 6], t: f64, proto: &PushoffState) -> PushoffState {
    PushoffState {
        stance_angle: y[0],
        swing_angle: y[1],
        r: y[2],
        stance_rate: y[3],
        swing_rate: y[4],
        dr: y[5],
        t,
        ..*proto
    }
}

impl Walker {
    pub fn new(params: ModelParams, config: IntegratorConfig) -> Self {
        Self {
            params,
            actuation: Actuation::AnkleSpring,
            config,
        }
    }

    /// Impulsive-pushoff walker; the spring is removed.
    pub fn impulsive(params: ModelParams, impulse: f64, config: IntegratorConfig) -> Self {
        Self {
            params: ModelParams {
                precompression: 0.0,
                ..params
            },
            actuation: Actuation::Impulsive { impulse },
            config,
        }
    }

    /// Applies the stride map once.
    pub fn step(&self, q: &LiftoffPoint) -> StrideResult {
        if !(q.stance_rate > 0.0) {
            return if q.stance_rate.is_finite() {
                StrideResult::Failed(FailureReason::BackwardAtSection)
            } else {
                StrideResult::Failed(FailureReason::InvalidSection(SectionError::NonFinite))
            };
        }
        let start = match q.to_single_support(&self.params) {
            Ok(s) => s,
            Err(e) => return StrideResult::Failed(e.into()),
        };
        match self.actuation {
            Actuation::AnkleSpring => self.spring_stride(start),
            Actuation::Impulsive { impulse } => self.impulsive_stride(start, impulse),
        }
    }

    /// Chains up to `n` strides, stopping at the first that does not complete.
    pub fn simulate(&self, q: &LiftoffPoint, n: usize) -> Vec<StrideResult> {
        let mut out = Vec::with_capacity(n);
        let mut q = *q;
        for _ in 0..n {
            let res = self.step(&q);
            let next = res.completed().map(|(n, _)| *n);
            out.push(res);
            match next {
                Some(n) => q = n,
                None => break,
            }
        }
        out
    }

    fn recorder(&self, start: &SingleSupportState) -> Recorder {
        let mut rec = Recorder {
            keep_samples: self.config.record_samples,
            trace: StrideTrace::new(*start),
            stats: Stats::default(),
            h: 1e-3,
        };
        rec.trace.section_energy.0 = total_energy(&HybridState::Single(*start), &self.params).unwrap_or(f64::NAN);
        rec.sample(HybridState::Single(*start), &self.params);
        rec
    }

    /// Integrates single support with a stance leg of fixed length until heel
    /// strike (`Ok(state at impact)`), the trigger arms, or pushoff starts.
    fn run_single(&self, ss: SingleSupportState, stance_length: f64, rec: &mut Recorder) -> Result<SingleEnd, StrideResult> {
        let p = &self.params;
        let l = p.leg_length;
        let rho = stance_length;
        let trig = p.trigger_angle;
        let field = |y: &[f64; 4]| Some(single_field(y, rho, p));
        let toe = |y: &[f64; 4]| swing_toe_height(y[0], rho, y[1], p);
        let admissible = |y: &[f64; 4]| collision_admissible(y[0], rho, y[1], rho * y[2] * y[0].cos(), p);
        let upright = |y: &[f64; 4]| y[0].cos();
        let forward = |y: &[f64; 4]| y[2];
        let arm = |y: &[f64; 4]| y[0] + trig;
        let force = |y: &[f64; 4]| pushoff_forces_at(y[0], y[2], p).margin();
        let mut guards = vec![
            Guard {
                direction: Direction::Falling,
                value: &toe,
                accept: Some(&admissible),
            },
            Guard {
                direction: Direction::Falling,
                value: &upright,
                accept: None,
            },
            Guard {
                direction: Direction::Falling,
                value: &forward,
                accept: None,
            },
        ];
        let spring_pending = matches!(self.actuation, Actuation::AnkleSpring) && rho == l;
        if spring_pending {
            guards.push(Guard {
                direction: Direction::Rising,
                value: if ss.triggered { &force } else { &arm },
                accept: None,
            });
        }
        let y0 = [ss.stance_angle, ss.swing_angle, ss.stance_rate, ss.swing_rate];
        let proto = ss;
        let keep = rec.keep_samples;
        let mut samples = Vec::new();
        let stop = integrate(
            field,
            ss.t,
            y0,
            self.config.max_stride_time,
            &guards,
            &self.config,
            &mut rec.h,
            &mut rec.stats,
            |t, y| {
                if keep {
                    samples.push(as_recorded(ss_from(y, t, &proto), rho - l));
                }
            },
        );
        for s in samples {
            rec.sample(s, p);
        }
        match stop {
            Stop::Event { guard, t, y } => {
                let at = ss_from(&y, t, &proto);
                Ok(match guard {
                    0 => SingleEnd::Impact(at),
                    1 => return Err(StrideResult::Fell(FallReason::StanceFell)),
                    2 => return Err(StrideResult::Fell(FallReason::Backward)),
                    _ if ss.triggered => SingleEnd::Pushoff(at),
                    _ => SingleEnd::Armed(at),
                })
            }
            Stop::Timeout { .. } => Err(StrideResult::Failed(FailureReason::Timeout)),
            Stop::Diverged { .. } => Err(StrideResult::Failed(FailureReason::Diverged)),
        }
    }

    fn spring_stride(&self, start: SingleSupportState) -> StrideResult {
        let p = &self.params;
        let mut rec = self.recorder(&start);
        if start.triggered {
            rec.event(0.0, EventKind::TriggerArmed);
        }
        let mut phase = Phase::Single(start);
        let mut impact_flag = None;
        loop {
            phase = match phase {
                Phase::Single(ss) => {
                    if ss.triggered && pushoff_forces(&ss, p).exceeds() {
                        rec.event(ss.t, EventKind::PushoffStart);
                        rec.trace.energy_in += p.spring_budget();
                        Phase::Pushoff(PushoffState::from_single(&ss))
                    } else {
                        match self.run_single(ss, p.leg_length, &mut rec) {
                            Err(r) => return r,
                            Ok(SingleEnd::Armed(s)) => {
                                rec.event(s.t, EventKind::TriggerArmed);
                                Phase::Single(SingleSupportState { triggered: true, ..s })
                            }
                            Ok(SingleEnd::Pushoff(s)) => {
                                rec.event(s.t, EventKind::PushoffStart);
                                rec.trace.energy_in += p.spring_budget();
                                Phase::Pushoff(PushoffState::from_single(&s))
                            }
                            Ok(SingleEnd::Impact(s)) => {
                                rec.event(s.t, EventKind::Collision);
                                rec.trace.step_length = p.leg_length * (s.stance_angle.sin() - s.swing_angle.sin());
                                let out = match collision_map_post(&s, p) {
                                    Ok(o) => o,
                                    Err(e) => return StrideResult::Failed(e.into()),
                                };
                                if out.flag == Some(ImpactFlag::SpringNotReinforced) {
                                    return StrideResult::Failed(FailureReason::SpringNotReinforced);
                                }
                                rec.trace.energy_in += p.spring_budget();
                                rec.trace.energy_lost_collision -= out.energy_delta;
                                rec.sample(out.post_state, p);
                                let HybridState::Double(ds) = out.post_state else { unreachable!() };
                                Phase::Double(ds)
                            }
                        }
                    }
                }
                Phase::Pushoff(po) => match self.run_pushoff(po, &mut rec) {
                    Err(r) => return r,
                    Ok(PushoffEnd::Latched(po)) => Phase::Pushoff(po),
                    Ok(PushoffEnd::Impact(po)) => {
                        rec.event(po.t, EventKind::Collision);
                        let out = match collision_map_pre(&po, p) {
                            Ok(o) => o,
                            Err(e) => return StrideResult::Failed(e.into()),
                        };
                        match out.flag {
                            Some(ImpactFlag::NonCompressive) => {
                                return StrideResult::Failed(FailureReason::NonCompressiveImpact)
                            }
                            Some(ImpactFlag::Compression) if po.latched => {
                                return StrideResult::Failed(FailureReason::SpringRecompressed)
                            }
                            f => impact_flag = f,
                        }
                        rec.trace.energy_lost_collision -= out.energy_delta;
                        rec.sample(out.post_state, p);
                        let HybridState::Double(ds) = out.post_state else { unreachable!() };
                        rec.trace.step_length = ds.toe_distance;
                        Phase::Double(ds)
                    }
                },
                Phase::Double(ds) => {
                    let ds = match self.run_double(ds, &mut rec) {
                        Ok(ds) => ds,
                        Err(r) => return r,
                    };
                    let (next, end) = match liftoff_map(&ds, p) {
                        Ok(v) => v,
                        Err(crate::events::LiftoffError::Chain(e)) => return StrideResult::Failed(e.into()),
                        Err(_) => return StrideResult::Failed(FailureReason::SpringRecompressed),
                    };
                    rec.event(end.t, EventKind::Liftoff);
                    rec.sample(HybridState::Single(end), p);
                    rec.trace.impact_flag = impact_flag;
                    return self.finish(rec, next, end);
                }
            };
        }
    }

    fn finish(&self, mut rec: Recorder, next: LiftoffPoint, end: SingleSupportState) -> StrideResult {
        rec.trace.duration = end.t;
        rec.trace.end = end;
        rec.trace.section_energy.1 = total_energy(&HybridState::Single(end), &self.params).unwrap_or(f64::NAN);
        rec.trace.steps = rec.stats.accepted;
        rec.trace.error_estimate = rec.stats.error_estimate;
        StrideResult::Completed {
            next,
            trace: rec.trace,
        }
    }

    fn run_pushoff(&self, po: PushoffState, rec: &mut Recorder) -> Result<PushoffEnd, StrideResult> {
        let p = &self.params;
        if po.latched {
            let rho = p.leg_length + p.precompression;
            let ss = SingleSupportState {
                stance_angle: po.stance_angle,
                swing_angle: po.swing_angle,
                stance_rate: po.stance_rate,
                swing_rate: po.swing_rate,
                triggered: true,
                t: po.t,
                x_stance: po.x_stance,
            };
            return match self.run_single(ss, rho, rec)? {
                SingleEnd::Impact(s) => Ok(PushoffEnd::Impact(PushoffState {
                    stance_angle: s.stance_angle,
                    swing_angle: s.swing_angle,
                    stance_rate: s.stance_rate,
                    swing_rate: s.swing_rate,
                    t: s.t,
                    ..po
                })),
                _ => unreachable!("latched stance has no spring guards"),
            };
        }
        let r0 = p.precompression;
        let field = |y: &[f64; 6]| Some(pushoff_field(y, p));
        let toe = |y: &[f64; 6]| swing_toe_height(y[0], p.leg_length + y[2], y[1], p);
        let admissible = |y: &[f64; 6]| {
            let rho = p.leg_length + y[2];
            let vx = y[5] * y[0].sin() + rho * y[3] * y[0].cos();
            collision_admissible(y[0], rho, y[1], vx, p)
        };
        let upright = |y: &[f64; 6]| y[0].cos();
        let forward = |y: &[f64; 6]| y[3];
        let latch = |y: &[f64; 6]| y[2] - r0;
        let bottom = |y: &[f64; 6]| y[2] + 1e-10;
        let guards = [
            Guard {
                direction: Direction::Falling,
                value: &toe,
                accept: Some(&admissible),
            },
            Guard {
                direction: Direction::Falling,
                value: &upright,
                accept: None,
            },
            Guard {
                direction: Direction::Falling,
                value: &forward,
                accept: None,
            },
            Guard {
                direction: Direction::Rising,
                value: &latch,
                accept: None,
            },
            Guard {
                direction: Direction::Falling,
                value: &bottom,
                accept: None,
            },
        ];
        let y0 = [po.stance_angle, po.swing_angle, po.r, po.stance_rate, po.swing_rate, po.dr];
        let keep = rec.keep_samples;
        let mut samples = Vec::new();
        let stop = integrate(
            field,
            po.t,
            y0,
            self.config.max_stride_time,
            &guards,
            &self.config,
            &mut rec.h,
            &mut rec.stats,
            |t, y| {
                if keep {
                    samples.push(HybridState::Pushoff(po_from(y, t, &po)));
                }
            },
        );
        for s in samples {
            rec.sample(s, p);
        }
        match stop {
            Stop::Event { guard, t, y } => {
                let at = po_from(&y, t, &po);
                match guard {
                    0 => Ok(PushoffEnd::Impact(at)),
                    1 => Err(StrideResult::Fell(FallReason::StanceFell)),
                    2 => Err(StrideResult::Fell(FallReason::Backward)),
                    3 => {
                        // Spring locks at rest length; its radial momentum is lost.
                        rec.event(t, EventKind::SpringLatched);
                        rec.trace.energy_lost_latch += 0.5 * p.body_mass * at.dr * at.dr;
                        let latched = PushoffState {
                            r: r0,
                            dr: 0.0,
                            latched: true,
                            ..at
                        };
                        rec.sample(HybridState::Pushoff(latched), p);
                        Ok(PushoffEnd::Latched(latched))
                    }
                    _ => Err(StrideResult::Failed(FailureReason::SpringRecompressed)),
                }
            }
            Stop::Timeout { .. } => Err(StrideResult::Failed(FailureReason::Timeout)),
            Stop::Diverged { .. } => Err(StrideResult::Failed(FailureReason::Diverged)),
        }
    }

    fn run_double(&self, ds: DoubleSupportState, rec: &mut Recorder) -> Result<DoubleSupportState, StrideResult> {
        let p = &self.params;
        let r0 = p.precompression;
        if ds.r >= r0 {
            return if ds.dr >= 0.0 {
                Ok(DoubleSupportState { r: r0, ..ds })
            } else {
                Err(StrideResult::Failed(FailureReason::SpringRecompressed))
            };
        }
        let d = ds.toe_distance;
        // Liftoff needs the chain to stay closed all the way to rest length.
        if let Err(e) = chain(r0, d, p) {
            return Err(StrideResult::Failed(e.into()));
        }
        let field = |y: &[f64; 2]| double_field(y, d, p).ok();
        let lift = |y: &[f64; 2]| y[0] - r0;
        let bottom = |y: &[f64; 2]| y[0] + 1e-10;
        let guards = [
            Guard {
                direction: Direction::Rising,
                value: &lift,
                accept: None,
            },
            Guard {
                direction: Direction::Falling,
                value: &bottom,
                accept: None,
            },
        ];
        let keep = rec.keep_samples;
        let mut samples = Vec::new();
        let stop = integrate(
            field,
            ds.t,
            [ds.r, ds.dr],
            self.config.max_stride_time,
            &guards,
            &self.config,
            &mut rec.h,
            &mut rec.stats,
            |t, y| {
                if keep {
                    samples.push(HybridState::Double(DoubleSupportState { r: y[0], dr: y[1], t, ..ds }));
                }
            },
        );
        for s in samples {
            rec.sample(s, p);
        }
        match stop {
            Stop::Event { guard: 0, t, y } => Ok(DoubleSupportState { r: r0, dr: y[1], t, ..ds }),
            Stop::Event { .. } => Err(StrideResult::Failed(FailureReason::SpringRecompressed)),
            Stop::Timeout { .. } => Err(StrideResult::Failed(FailureReason::Timeout)),
            Stop::Diverged { .. } => Err(StrideResult::Failed(FailureReason::Diverged)),
        }
    }

    fn impulsive_stride(&self, start: SingleSupportState, impulse: f64) -> StrideResult {
        let p = &self.params;
        let mut rec = self.recorder(&start);
        let impact = match self.run_single(start, p.leg_length, &mut rec) {
            Ok(SingleEnd::Impact(s)) => s,
            Ok(_) => unreachable!("impulsive walker has no spring guards"),
            Err(r) => return r,
        };
        rec.event(impact.t, EventKind::Collision);
        let out = match impulsive_pushoff_map(&impact, impulse, p) {
            Ok(o) => o,
            Err(_) => return StrideResult::Failed(FailureReason::NonCompressiveImpact),
        };
        rec.event(impact.t, EventKind::Liftoff);
        rec.trace.step_length = out.state.x_stance - impact.x_stance;
        rec.trace.energy_in = out.injected;
        rec.trace.energy_lost_collision = out.dissipated;
        let end = SingleSupportState {
            triggered: trigger_armed(out.state.stance_angle, p.trigger_angle),
            ..out.state
        };
        rec.sample(HybridState::Single(end), p);
        let next = LiftoffPoint::new(end.stance_rate, end.swing_angle, end.swing_rate);
        self.finish(rec, next, end)
    }
}

enum SingleEnd {
    Impact(SingleSupportState),
    Armed(SingleSupportState),
    Pushoff(SingleSupportState),
}

enum PushoffEnd {
    Impact(PushoffState),
    Latched(PushoffState),
}

/// One application of the stride map for the spring-actuated walker.
pub fn step_stride(q: &LiftoffPoint, params: &ModelParams, cfg: &IntegratorConfig) -> StrideResult {
    Walker::new(*params, *cfg).step(q)
}

/// Multi-stride rollout; stops early on the first fall or failure.
pub fn simulate(q: &LiftoffPoint, params: &ModelParams, cfg: &IntegratorConfig, n: usize) -> Vec<StrideResult> {
    Walker::new(*params, *cfg).simulate(q, n)
}
