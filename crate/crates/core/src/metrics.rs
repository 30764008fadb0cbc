//! Per-gait measures: speed, mechanical cost of transport and pushoff region.

use std::fmt;

use crate::model::ModelParams;
use crate::simulator::{EventKind, StrideTrace};

/// Where the spring acts during a stride.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Region {
    /// Never armed before heel strike; spring released at the collision.
    R1,
    /// Armed, but pushoff did not start before heel strike.
    R2,
    /// Spring extended during single support.
    R3,
}

impl Region {
    pub fn as_str(&self) -> &'static str {
        match self {
            Region::R1 => "R1",
            Region::R2 => "R2",
            Region::R3 => "R3",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Region of one stride, from its event log alone.
pub fn classify_region(trace: &StrideTrace) -> Region {
    let collision = trace
        .events
        .iter()
        .position(|e| e.kind == EventKind::Collision)
        .unwrap_or(trace.events.len());
    let before = &trace.events[..collision];
    if before.iter().any(|e| e.kind == EventKind::PushoffStart) {
        Region::R3
    } else if before.iter().any(|e| e.kind == EventKind::TriggerArmed) {
        Region::R2
    } else {
        Region::R1
    }
}

/// Mean forward speed of a cycle: total distance over total time.
pub fn speed<'a>(traces: impl IntoIterator<Item = &'a StrideTrace>) -> f64 {
    let (d, t) = traces
        .into_iter()
        .fold((0.0, 0.0), |(d, t), tr| (d + tr.step_length, t + tr.duration));
    d / t
}

/// `(1/2)·k·r0² / (M·g·d)` averaged over the given step lengths, with `M` the
/// total mass.
pub fn mcot(params: &ModelParams, step_lengths: &[f64]) -> f64 {
    if step_lengths.is_empty() {
        return f64::NAN;
    }
    let per_stride = params.spring_budget() / (params.total_mass() * params.gravity);
    step_lengths.iter().map(|d| per_stride / d).sum::<f64>() / step_lengths.len() as f64
}

/// Cost of transport using the energy actually injected per stride (the
/// impulsive walker has no spring budget).
pub fn mcot_from_traces<'a>(params: &ModelParams, traces: impl IntoIterator<Item = &'a StrideTrace>) -> f64 {
    let weight = params.total_mass() * params.gravity;
    let v: Vec<f64> = traces.into_iter().map(|t| t.energy_in / (weight * t.step_length)).collect();
    v.iter().sum::<f64>() / v.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaitMetrics {
    /// Highest region reached over the cycle's strides.
    pub region: Region,
    pub speed: f64,
    pub mcot: f64,
    pub mean_step_length: f64,
    pub period_time: f64,
}

impl GaitMetrics {
    /// Metrics of the spring walker over one full cycle.
    pub fn from_cycle(params: &ModelParams, traces: &[StrideTrace]) -> Self {
        let steps: Vec<f64> = traces.iter().map(|t| t.step_length).collect();
        Self {
            region: traces.iter().map(classify_region).max().unwrap_or(Region::R1),
            speed: speed(traces),
            mcot: mcot(params, &steps),
            mean_step_length: steps.iter().sum::<f64>() / steps.len() as f64,
            period_time: traces.iter().map(|t| t.duration).sum(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mcot_formula() {
        let p = ModelParams::with_control(0.1, -0.2);
        assert!((mcot(&p, &[0.5]) - 0.10193679918450561).abs() < 1e-12);
        let p0 = ModelParams::with_control(0.0, -0.2);
        assert_eq!(mcot(&p0, &[0.5]), 0.0);
    }
}
