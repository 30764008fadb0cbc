//! Grid sweeps over `(r0, trigger_angle, k)` and the impulsive baseline.
//!
//! Each `(k, trigger_angle)` row is solved by continuation in `r0`, rows in
//! parallel. Cells still lacking a stable gait are then re-solved from their
//! neighbours' fixed points for a few passes. Every pass reads only the
//! previous pass's results, so output is independent of thread count.

use rayon::prelude::*;
use thiserror::Error;

use crate::metrics::{mcot_from_traces, speed, GaitMetrics};
use crate::model::{LiftoffPoint, ModelParams, ParamError};
use crate::poincare::{
    boa_all, find_fixed_point, period_of, return_map, return_orbit, BoaOptions, FixedPoint, FixedPointRecord,
    Periodicity, PERIOD_LADDER,
};
use crate::simulator::{ConfigError, IntegratorConfig, StrideResult, Walker};

/// Evenly spaced values, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridAxis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl GridAxis {
    pub fn new(min: f64, max: f64, count: usize) -> Self {
        Self { min, max, count }
    }

    pub fn single(v: f64) -> Self {
        Self::new(v, v, 1)
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 0 {
            return Vec::new();
        }
        if self.count == 1 {
            return vec![self.min];
        }
        let step = (self.max - self.min) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| if i + 1 == self.count { self.max } else { self.min + step * i as f64 })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error("grid axis `{0}` needs count ≥ 1 and min ≤ max")]
    Axis(&'static str),
    #[error("at least one stiffness value is required")]
    NoStiffness,
    #[error("periods must be drawn from 1, 2, 4, 8")]
    Periods,
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    Integrator(#[from] ConfigError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub r0: GridAxis,
    pub theta_trig: GridAxis,
    pub k_values: Vec<f64>,
    /// Periods searched, in ladder order.
    pub periods: Vec<usize>,
    pub integrator: IntegratorConfig,
    pub boa_enabled: bool,
    pub boa: BoaOptions,
    /// Remaining model parameters (masses, length, gravity, CoM offset).
    pub base: ModelParams,
    /// Neighbour-seeded refinement passes after the row continuation.
    pub refine_passes: usize,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            r0: GridAxis::new(0.0, 0.15, 76),
            theta_trig: GridAxis::new(-0.6, 0.1, 71),
            k_values: vec![100.0, 300.0],
            periods: PERIOD_LADDER.to_vec(),
            integrator: IntegratorConfig::default(),
            boa_enabled: false,
            boa: BoaOptions::default(),
            base: ModelParams::default(),
            refine_passes: 3,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), SweepError> {
        for (name, axis) in [("r0", self.r0), ("theta_trig", self.theta_trig)] {
            if axis.count == 0 || !(axis.min <= axis.max) {
                return Err(SweepError::Axis(name));
            }
        }
        if self.k_values.is_empty() {
            return Err(SweepError::NoStiffness);
        }
        if self.periods.is_empty() || self.periods.iter().any(|p| !PERIOD_LADDER.contains(p)) {
            return Err(SweepError::Periods);
        }
        self.integrator.validate()?;
        for &k in &self.k_values {
            for r0 in [self.r0.min, self.r0.max] {
                for trig in [self.theta_trig.min, self.theta_trig.max] {
                    self.params(r0, trig, k).validate()?;
                }
            }
        }
        Ok(())
    }

    pub fn params(&self, r0: f64, trig: f64, k: f64) -> ModelParams {
        ModelParams {
            precompression: r0,
            trigger_angle: trig,
            stiffness: k,
            ..self.base
        }
    }

    pub fn cell_count(&self) -> usize {
        self.r0.count * self.theta_trig.count * self.k_values.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellStatus {
    Stable,
    Unstable,
    NoGait,
}

impl CellStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            CellStatus::Stable => "stable",
            CellStatus::Unstable => "unstable",
            CellStatus::NoGait => "no_gait",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub r0: f64,
    pub theta_trig: f64,
    pub k: f64,
    pub record: Option<FixedPointRecord>,
}

impl SweepCell {
    pub fn status(&self) -> CellStatus {
        match &self.record {
            Some(r) if r.stable => CellStatus::Stable,
            Some(_) => CellStatus::Unstable,
            None => CellStatus::NoGait,
        }
    }
}

/// Section points resembling a level-ground passive stride, from slow to fast.
pub const CANNED_GUESSES: [[f64; 3]; 4] = [[0.7, 0.36, 0.57], [0.9, 0.45, 0.65], [1.17, 0.52, 0.73], [0.6, 0.3, 0.5]];

const ATTRACTOR_TRANSIENT: usize = 64;
const ATTRACTOR_WINDOW: usize = 64;
const PERIOD_TOL: f64 = 1e-6;

/// Rolls out from `start`; if the walker settles onto a cycle of a period in
/// `periods`, polishes it with Newton and returns it when stable.
fn attractor_fixed_point(start: &LiftoffPoint, walker: &Walker, periods: &[usize]) -> Option<FixedPoint> {
    let total = ATTRACTOR_TRANSIENT + ATTRACTOR_WINDOW + 8;
    let mut seq = Vec::with_capacity(total);
    let mut cur = *start;
    for _ in 0..total {
        match walker.step(&cur) {
            StrideResult::Completed { next, .. } => {
                seq.push(next);
                cur = next;
            }
            _ => return None,
        }
    }
    let Periodicity::Period(j) = period_of(&seq[ATTRACTOR_TRANSIENT..], ATTRACTOR_WINDOW, PERIOD_TOL) else {
        return None;
    };
    if !periods.contains(&j) {
        return None;
    }
    let fp = find_fixed_point(&seq[ATTRACTOR_TRANSIENT], j, walker).ok()?;
    (fp.stable() && is_primitive(&fp, walker)).then_some(fp)
}

/// A period-`j` point must not repeat after any proper divisor of `j`.
pub fn is_primitive(fp: &FixedPoint, walker: &Walker) -> bool {
    PERIOD_LADDER
        .iter()
        .filter(|&&d| d < fp.period && fp.period % d == 0)
        .all(|&d| return_map(&fp.q_star, d, walker).map_or(true, |q| q.distance(&fp.q_star) > PERIOD_TOL))
}

/// Best gait reachable from the seeds: the first stable period-1 solve, else a
/// stable higher-period attractor, else the first unstable period-1 point.
pub fn solve_cell(walker: &Walker, seeds: &[LiftoffPoint], periods: &[usize]) -> Option<FixedPoint> {
    let mut unstable: Option<FixedPoint> = None;
    let higher = periods.iter().any(|&p| p > 1);
    for seed in seeds {
        let start = match find_fixed_point(seed, 1, walker) {
            Ok(fp) if fp.stable() && periods.contains(&1) => return Some(fp),
            Ok(fp) => {
                // Nudge off the unstable point so the rollout can leave it.
                let start = fp.q_star.with(0, fp.q_star.stance_rate + 1e-6);
                unstable.get_or_insert(fp);
                start
            }
            Err(_) => *seed,
        };
        if higher || periods.contains(&1) {
            if let Some(fp) = attractor_fixed_point(&start, walker, periods) {
                return Some(fp);
            }
        }
    }
    unstable.filter(|_| periods.contains(&1))
}

/// Fills in gait metrics and, if requested, basin extents.
pub fn make_record(fp: &FixedPoint, walker: &Walker, boa: Option<&BoaOptions>) -> FixedPointRecord {
    let mut rec = FixedPointRecord::new(fp, walker);
    if let Ok(orbit) = return_orbit(&fp.q_star, fp.period, walker) {
        let traces: Vec<_> = orbit.into_iter().map(|(_, t)| t).collect();
        rec.metrics = Some(GaitMetrics::from_cycle(&walker.params, &traces));
    }
    if let (Some(opts), true) = (boa, fp.stable()) {
        rec.boa = boa_all(fp, walker, opts).ok();
    }
    rec
}

fn better(new: &FixedPoint, old: Option<&FixedPoint>) -> bool {
    match old {
        None => true,
        Some(o) => new.stable() && !o.stable(),
    }
}

fn seeds_with(first: impl IntoIterator<Item = LiftoffPoint>) -> Vec<LiftoffPoint> {
    let mut out: Vec<LiftoffPoint> = first.into_iter().collect();
    out.extend(CANNED_GUESSES.iter().map(|a| LiftoffPoint::from_array(*a)));
    out
}

/// Largest `r0` change over which a fixed point is used directly as a seed.
/// The liftoff section itself moves with `r0`, so on coarser grids the
/// solution is tracked through intermediate values first, in finer steps
/// (Newton jumps branches at the coarse step).
const CONTINUATION_STEP: f64 = 0.002;
const TRACKING_STEP: f64 = 0.0005;

/// Seed for `to` obtained by tracking `fp` (solved at `from`) in `r0`.
fn tracked_seed(walker: &impl Fn(f64) -> Walker, from: f64, fp: &FixedPoint, to: f64) -> LiftoffPoint {
    let mut q = fp.q_star;
    if (to - from).abs() <= CONTINUATION_STEP * (1.0 + 1e-9) {
        return q;
    }
    let n = ((to - from).abs() / TRACKING_STEP).ceil() as usize;
    for s in 1..n {
        let r0 = from + (to - from) * s as f64 / n as f64;
        match find_fixed_point(&q, fp.period, &walker(r0)) {
            Ok(next) => q = next.q_star,
            Err(_) => break,
        }
    }
    q
}

/// Row continuation in `r0`, ascending then descending.
fn solve_row(spec: &SweepSpec, k: f64, trig: f64, r0s: &[f64]) -> Vec<Option<FixedPoint>> {
    let walker = |r0: f64| Walker::new(spec.params(r0, trig, k), spec.integrator);
    let mut row: Vec<Option<FixedPoint>> = vec![None; r0s.len()];
    let mut prev: Option<(f64, FixedPoint)> = None;
    for (i, &r0) in r0s.iter().enumerate() {
        let seeds = seeds_with(prev.as_ref().map(|(from, fp)| tracked_seed(&walker, *from, fp, r0)));
        row[i] = solve_cell(&walker(r0), &seeds, &spec.periods);
        if let Some(fp) = &row[i] {
            prev = Some((r0, fp.clone()));
        }
    }
    for i in (0..r0s.len().saturating_sub(1)).rev() {
        if row[i].as_ref().is_some_and(|fp| fp.stable()) {
            continue;
        }
        let Some(next) = &row[i + 1] else {
            continue;
        };
        let seed = tracked_seed(&walker, r0s[i + 1], next, r0s[i]);
        if let Some(fp) = solve_cell(&walker(r0s[i]), &[seed], &spec.periods) {
            if better(&fp, row[i].as_ref()) {
                row[i] = Some(fp);
            }
        }
    }
    row
}

/// Runs the full grid. Output order: `k`, then `theta_trig`, then `r0`.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepCell>, SweepError> {
    spec.validate()?;
    let r0s = spec.r0.values();
    let trigs = spec.theta_trig.values();
    let rows: Vec<(f64, f64)> = spec
        .k_values
        .iter()
        .flat_map(|&k| trigs.iter().map(move |&t| (k, t)))
        .collect();
    let mut grid: Vec<Vec<Option<FixedPoint>>> = rows.par_iter().map(|&(k, t)| solve_row(spec, k, t, &r0s)).collect();

    let nt = trigs.len();
    let nr = r0s.len();
    let r0s = &r0s;
    for _ in 0..spec.refine_passes {
        let snapshot = &grid;
        let updates: Vec<(usize, usize, FixedPoint)> = (0..rows.len())
            .into_par_iter()
            .flat_map_iter(|ri| {
                let (k, t) = rows[ri];
                let ti = ri % nt;
                (0..nr).filter_map(move |ci| {
                    if snapshot[ri][ci].as_ref().is_some_and(|fp| fp.stable()) {
                        return None;
                    }
                    let mut seeds = Vec::new();
                    let mut push = |r: usize, c: usize| {
                        if let Some(fp) = &snapshot[r][c] {
                            seeds.push(fp.q_star);
                        }
                    };
                    if ti > 0 {
                        push(ri - 1, ci);
                    }
                    if ti + 1 < nt {
                        push(ri + 1, ci);
                    }
                    if ci > 0 {
                        push(ri, ci - 1);
                    }
                    if ci + 1 < nr {
                        push(ri, ci + 1);
                    }
                    if seeds.is_empty() {
                        return None;
                    }
                    let w = Walker::new(spec.params(r0s[ci], t, k), spec.integrator);
                    let fp = solve_cell(&w, &seeds, &spec.periods)?;
                    better(&fp, snapshot[ri][ci].as_ref()).then_some((ri, ci, fp))
                })
            })
            .collect();
        if updates.is_empty() {
            break;
        }
        for (ri, ci, fp) in updates {
            grid[ri][ci] = Some(fp);
        }
    }

    let boa = spec.boa_enabled.then_some(&spec.boa);
    let cells: Vec<SweepCell> = rows
        .par_iter()
        .zip(grid.par_iter())
        .flat_map_iter(|(&(k, t), row)| {
            r0s.iter().zip(row).map(move |(&r0, fp)| {
                let w = Walker::new(spec.params(r0, t, k), spec.integrator);
                SweepCell {
                    r0,
                    theta_trig: t,
                    k,
                    record: fp.as_ref().map(|fp| make_record(fp, &w, boa)),
                }
            })
        })
        .collect();
    Ok(cells)
}

/// One impulsive-pushoff gait.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselinePoint {
    pub impulse: f64,
    pub q_star: LiftoffPoint,
    pub speed: f64,
    pub mcot: f64,
    pub lambda_max: f64,
}

impl BaselinePoint {
    pub fn stable(&self) -> bool {
        self.lambda_max < 1.0
    }
}

/// Starting points for the impulsive walker. Right after a rigid heel strike
/// the new swing leg turns at `cos(2θ)` times the new stance rate.
fn impulsive_seeds() -> impl Iterator<Item = LiftoffPoint> {
    const RATES: [f64; 5] = [0.6, 0.8, 1.0, 1.2, 1.4];
    const ANGLES: [f64; 3] = [0.2, 0.3, 0.4];
    RATES
        .into_iter()
        .flat_map(|ws| ANGLES.into_iter().map(move |tn| LiftoffPoint::new(ws, tn, ws * (2.0 * tn).cos())))
}

/// Stable period-1 gaits of the impulsive walker, continued along the impulse
/// values in the given order. Impulses without one are skipped.
pub fn baseline_frontier(
    impulses: &[f64],
    params: &ModelParams,
    cfg: &IntegratorConfig,
) -> Result<Vec<BaselinePoint>, SweepError> {
    params.validate()?;
    cfg.validate()?;
    let mut out = Vec::new();
    let mut prev: Option<LiftoffPoint> = None;
    for &impulse in impulses {
        let w = Walker::impulsive(*params, impulse, *cfg);
        let mut seeds: Vec<LiftoffPoint> = prev.into_iter().collect();
        seeds.extend(impulsive_seeds());
        let Some(fp) = solve_cell(&w, &seeds, &[1]).filter(|fp| fp.stable()) else {
            continue;
        };
        prev = Some(fp.q_star);
        let Ok(orbit) = return_orbit(&fp.q_star, 1, &w) else {
            continue;
        };
        let traces: Vec<_> = orbit.into_iter().map(|(_, t)| t).collect();
        out.push(BaselinePoint {
            impulse,
            q_star: fp.q_star,
            speed: speed(&traces),
            mcot: mcot_from_traces(&w.params, &traces),
            lambda_max: fp.lambda_max,
        });
    }
    Ok(out)
}
