use std::io::{self, Write};

use crate::events::ImpactFlag;
use crate::format::sig17;
use crate::model::{ds_chain_angles, hip_position, HybridState, ModelParams, SingleSupportState};

pub const TRACE_CSV_HEADER: &str = "t,phase,theta_s,theta_n,dtheta_s,dtheta_n,r,dr,hip_x,hip_y,energy";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    TriggerArmed,
    PushoffStart,
    SpringLatched,
    Collision,
    Liftoff,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::TriggerArmed => "trigger_armed",
            EventKind::PushoffStart => "pushoff_start",
            EventKind::SpringLatched => "spring_latched",
            EventKind::Collision => "collision",
            EventKind::Liftoff => "liftoff",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEvent {
    pub t: f64,
    pub kind: EventKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample {
    pub t: f64,
    pub state: HybridState,
    pub energy: f64,
}

/// Everything recorded over one stride.
#[derive(Debug, Clone, PartialEq)]
pub struct StrideTrace {
    /// Accepted integrator points plus pre/post event states. Empty unless
    /// sample recording is enabled.
    pub samples: Vec<TraceSample>,
    pub events: Vec<TraceEvent>,
    /// Distance between stance toes at heel strike (m).
    pub step_length: f64,
    /// Liftoff-to-liftoff time (s).
    pub duration: f64,
    /// Spring energy released this stride, or the impulsive work (J).
    pub energy_in: f64,
    pub energy_lost_collision: f64,
    /// Radial kinetic energy dropped when the spring latches at rest length.
    pub energy_lost_latch: f64,
    /// Total energy at the start and end sections (J).
    pub section_energy: (f64, f64),
    pub start: SingleSupportState,
    pub end: SingleSupportState,
    pub impact_flag: Option<ImpactFlag>,
    pub steps: usize,
    /// Sum of per-step local error estimates.
    pub error_estimate: f64,
}

impl StrideTrace {
    pub(crate) fn new(start: SingleSupportState) -> Self {
        Self {
            samples: Vec::new(),
            events: Vec::new(),
            step_length: 0.0,
            duration: 0.0,
            energy_in: 0.0,
            energy_lost_collision: 0.0,
            energy_lost_latch: 0.0,
            section_energy: (f64::NAN, f64::NAN),
            start,
            end: start,
            impact_flag: None,
            steps: 0,
            error_estimate: 0.0,
        }
    }

    /// Mean forward speed over the stride (m/s).
    pub fn speed(&self) -> f64 {
        self.step_length / self.duration
    }

    /// `E_end − E_start − (in − losses)`; zero up to integration error.
    pub fn energy_residual(&self) -> f64 {
        let (e0, e1) = self.section_energy;
        (e1 - e0) - (self.energy_in - self.energy_lost_collision - self.energy_lost_latch)
    }

    pub fn has_event(&self, kind: EventKind) -> bool {
        self.events.iter().any(|e| e.kind == kind)
    }

    /// Writes the samples as CSV rows, without the header. `t_offset` shifts time
    /// so that consecutive strides can be concatenated.
    pub fn write_csv_rows<W: Write>(&self, out: &mut W, params: &ModelParams, t_offset: f64) -> io::Result<()> {
        for s in &self.samples {
            let (ts, tn, ws, wn, r, dr) = match s.state {
                HybridState::Single(ss) => (ss.stance_angle, ss.swing_angle, ss.stance_rate, ss.swing_rate, 0.0, 0.0),
                HybridState::Pushoff(po) => (po.stance_angle, po.swing_angle, po.stance_rate, po.swing_rate, po.r, po.dr),
                HybridState::Double(ds) => match ds_chain_angles(ds.r, ds.toe_distance, params) {
                    // Rear (spring) leg keeps the stance label until liftoff.
                    Ok(a) => (a.swing_angle, a.stance_angle, a.d_swing * ds.dr, a.d_stance * ds.dr, ds.r, ds.dr),
                    Err(_) => (f64::NAN, f64::NAN, f64::NAN, f64::NAN, ds.r, ds.dr),
                },
            };
            let (hx, hy) = hip_position(&s.state, params).unwrap_or((f64::NAN, f64::NAN));
            let cols = [s.t + t_offset, ts, tn, ws, wn, r, dr, hx, hy, s.energy];
            write!(out, "{}", sig17(cols[0]))?;
            write!(out, ",{}", s.state.phase().as_str())?;
            for v in &cols[1..] {
                write!(out, ",{}", sig17(*v))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}
