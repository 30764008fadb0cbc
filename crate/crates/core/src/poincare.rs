//! Fixed points of the stride map, their stability, periodicity and basins.
//!
//! Distances on the section use the plain Euclidean norm over
//! `[stance_rate, swing_angle, swing_rate]` with unit weights.

use nalgebra::Matrix3;
use thiserror::Error;

use crate::metrics::GaitMetrics;
use crate::model::LiftoffPoint;
use crate::simulator::{StrideResult, StrideTrace, Walker};

/// Per-coordinate multipliers applied to raw basin extents.
pub const BOA_NORMALIZATION: [f64; 3] = [5.75, 7.35, 0.195];

/// Newton stops once `‖Gʲ(q) − q‖` drops below this.
pub const FIXED_POINT_TOL: f64 = 1e-10;
pub const MAX_NEWTON_ITERATIONS: usize = 50;
const MAX_HALVINGS: usize = 8;

/// Periods tried in order when classifying an attractor.
pub const PERIOD_LADDER: [usize; 4] = [1, 2, 4, 8];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PoincareError {
    #[error("stride {stride} of the return map did not complete: {reason}")]
    FallBeforeReturn { stride: usize, reason: String },
    #[error("Newton iteration did not converge (residual {residual:e} after {iterations} iterations)")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("finite differences failed on both sides of coordinate {coordinate}")]
    JacobianUndefined { coordinate: usize },
    #[error("period must be at least 1")]
    ZeroPeriod,
    #[error("basin scan requires a stable fixed point")]
    NotStable,
    #[error("coordinate index {0} is out of range")]
    BadCoordinate(usize),
}

/// Applies the stride map `j` times.
pub fn return_map(q: &LiftoffPoint, j: usize, walker: &Walker) -> Result<LiftoffPoint, PoincareError> {
    Ok(return_orbit(q, j, walker)?
        .last()
        .map(|(q, _)| *q)
        .expect("j ≥ 1"))
}

/// Section points and traces of `j` consecutive strides.
pub fn return_orbit(q: &LiftoffPoint, j: usize, walker: &Walker) -> Result<Vec<(LiftoffPoint, StrideTrace)>, PoincareError> {
    if j == 0 {
        return Err(PoincareError::ZeroPeriod);
    }
    let mut out = Vec::with_capacity(j);
    let mut cur = *q;
    for stride in 0..j {
        match walker.step(&cur) {
            StrideResult::Completed { next, trace } => {
                out.push((next, trace));
                cur = next;
            }
            other => {
                return Err(PoincareError::FallBeforeReturn {
                    stride,
                    reason: other.describe(),
                })
            }
        }
    }
    Ok(out)
}

/// A solved fixed point of `Gʲ` with its linear stability.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPoint {
    pub q_star: LiftoffPoint,
    pub period: usize,
    pub jacobian: Matrix3<f64>,
    /// Largest eigenvalue modulus of the Jacobian of `Gʲ`.
    pub lambda_max: f64,
    pub residual: f64,
    pub iterations: usize,
}

impl FixedPoint {
    pub fn stable(&self) -> bool {
        self.lambda_max < 1.0
    }
}

/// Fixed point with its control parameters and, optionally, gait measures
/// and basin extents.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointRecord {
    pub precompression: f64,
    pub trigger_angle: f64,
    pub stiffness: f64,
    pub q_star: LiftoffPoint,
    pub period: usize,
    pub lambda_max: f64,
    pub stable: bool,
    pub metrics: Option<GaitMetrics>,
    /// Normalized extents for `[stance_rate, swing_angle, swing_rate]`.
    pub boa: Option<[f64; 3]>,
}

impl FixedPointRecord {
    pub fn new(fp: &FixedPoint, walker: &Walker) -> Self {
        Self {
            precompression: walker.params.precompression,
            trigger_angle: walker.params.trigger_angle,
            stiffness: walker.params.stiffness,
            q_star: fp.q_star,
            period: fp.period,
            lambda_max: fp.lambda_max,
            stable: fp.stable(),
            metrics: None,
            boa: None,
        }
    }
}

fn residual(q: &LiftoffPoint, j: usize, walker: &Walker) -> Result<[f64; 3], PoincareError> {
    let g = return_map(q, j, walker)?.to_array();
    let q = q.to_array();
    Ok([g[0] - q[0], g[1] - q[1], g[2] - q[2]])
}

fn norm(v: &[f64; 3]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn step_size(x: f64, rel: f64) -> f64 {
    rel * x.abs().max(1.0)
}

/// Newton iteration on `Gʲ(q) − q` with a forward-difference Jacobian and
/// step halving; stability comes from [`jacobian`] at the converged point.
pub fn find_fixed_point(guess: &LiftoffPoint, j: usize, walker: &Walker) -> Result<FixedPoint, PoincareError> {
    let mut q = *guess;
    let mut f = residual(&q, j, walker)?;
    let mut fnorm = norm(&f);
    let mut iterations = 0;
    while fnorm >= FIXED_POINT_TOL {
        if iterations == MAX_NEWTON_ITERATIONS {
            return Err(PoincareError::NoConvergence {
                iterations,
                residual: fnorm,
            });
        }
        iterations += 1;
        let mut jf = Matrix3::<f64>::zeros();
        for c in 0..3 {
            let mut h = step_size(q.get(c), 1e-7);
            // Step backwards when the forward probe leaves the domain.
            let fp = match residual(&q.with(c, q.get(c) + h), j, walker) {
                Ok(v) => v,
                Err(_) => {
                    h = -h;
                    residual(&q.with(c, q.get(c) + h), j, walker).map_err(|_| PoincareError::JacobianUndefined { coordinate: c })?
                }
            };
            for r in 0..3 {
                jf[(r, c)] = (fp[r] - f[r]) / h;
            }
        }
        let rhs = nalgebra::Vector3::new(-f[0], -f[1], -f[2]);
        let Some(dq) = jf.lu().solve(&rhs) else {
            return Err(PoincareError::NoConvergence {
                iterations,
                residual: fnorm,
            });
        };
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial = LiftoffPoint::new(q.stance_rate + scale * dq[0], q.swing_angle + scale * dq[1], q.swing_rate + scale * dq[2]);
            if let Ok(ft) = residual(&trial, j, walker) {
                let n = norm(&ft);
                if n < fnorm {
                    accepted = Some((trial, ft, n));
                    break;
                }
            }
            scale *= 0.5;
        }
        let Some((nq, nf, nn)) = accepted else {
            return Err(PoincareError::NoConvergence {
                iterations,
                residual: fnorm,
            });
        };
        q = nq;
        f = nf;
        fnorm = nn;
    }
    let jac = jacobian(&q, j, walker)?;
    Ok(FixedPoint {
        q_star: q,
        period: j,
        lambda_max: spectral_radius(&jac),
        jacobian: jac,
        residual: fnorm,
        iterations,
    })
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(m: &Matrix3<f64>) -> f64 {
    m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Central-difference Jacobian of `Gʲ` at `q`, step `1e-6·max(1, |qᵢ|)`.
/// Falls back to a one-sided difference where one probe does not complete.
pub fn jacobian(q: &LiftoffPoint, j: usize, walker: &Walker) -> Result<Matrix3<f64>, PoincareError> {
    jacobian_with_step(q, j, walker, 1e-6)
}

pub fn jacobian_with_step(q: &LiftoffPoint, j: usize, walker: &Walker, rel_step: f64) -> Result<Matrix3<f64>, PoincareError> {
    let mut out = Matrix3::zeros();
    let center = || return_map(q, j, walker).map(|p| p.to_array());
    for c in 0..3 {
        let h = step_size(q.get(c), rel_step);
        let plus = return_map(&q.with(c, q.get(c) + h), j, walker).map(|p| p.to_array());
        let minus = return_map(&q.with(c, q.get(c) - h), j, walker).map(|p| p.to_array());
        let column = match (plus, minus) {
            (Ok(p), Ok(m)) => [0, 1, 2].map(|r| (p[r] - m[r]) / (2.0 * h)),
            (Ok(p), Err(_)) => {
                let g = center()?;
                [0, 1, 2].map(|r| (p[r] - g[r]) / h)
            }
            (Err(_), Ok(m)) => {
                let g = center()?;
                [0, 1, 2].map(|r| (g[r] - m[r]) / h)
            }
            (Err(_), Err(_)) => return Err(PoincareError::JacobianUndefined { coordinate: c }),
        };
        for r in 0..3 {
            out[(r, c)] = column[r];
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Periodicity {
    Period(usize),
    Aperiodic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodOptions {
    pub transient: usize,
    pub window: usize,
    pub tol: f64,
}

impl Default for PeriodOptions {
    fn default() -> Self {
        Self {
            transient: 64,
            window: 64,
            tol: 1e-6,
        }
    }
}

/// Smallest `j` in the period ladder with `‖q[i+j] − q[i]‖ < tol` over the
/// whole post-transient window.
pub fn detect_period(q: &LiftoffPoint, walker: &Walker, opts: &PeriodOptions) -> Result<Periodicity, PoincareError> {
    let max_j = *PERIOD_LADDER.last().unwrap();
    let total = opts.transient + opts.window + max_j;
    let mut seq = Vec::with_capacity(total + 1);
    seq.push(*q);
    let mut cur = *q;
    for stride in 0..total {
        match walker.step(&cur) {
            StrideResult::Completed { next, .. } => {
                seq.push(next);
                cur = next;
            }
            other => {
                return Err(PoincareError::FallBeforeReturn {
                    stride,
                    reason: other.describe(),
                })
            }
        }
    }
    Ok(period_of(&seq[opts.transient..], opts.window, opts.tol))
}

/// Period of a section sequence; `seq` must hold at least `window + 8` points.
pub fn period_of(seq: &[LiftoffPoint], window: usize, tol: f64) -> Periodicity {
    for j in PERIOD_LADDER {
        if (0..window).all(|i| seq[i].distance(&seq[i + j]) < tol) {
            return Periodicity::Period(j);
        }
    }
    Periodicity::Aperiodic
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoaOptions {
    /// Strides allowed to return to the cycle.
    pub max_strides: usize,
    /// Section distance counted as "back on the cycle".
    pub tol: f64,
    /// Bisection stops at this interval width.
    pub resolution: f64,
    /// Initial outward marching step per coordinate.
    pub march_step: [f64; 3],
    /// Perturbation magnitude beyond which the scan stops.
    pub max_extent: [f64; 3],
}

impl Default for BoaOptions {
    fn default() -> Self {
        Self {
            max_strides: 50,
            tol: 1e-4,
            resolution: 1e-5,
            march_step: [0.01, 0.01, 0.1],
            max_extent: [5.0, 1.5, 40.0],
        }
    }
}

/// Whether a rollout from `q` returns within `tol` of any orbit point.
pub fn returns_to_cycle(q: &LiftoffPoint, orbit: &[LiftoffPoint], walker: &Walker, opts: &BoaOptions) -> bool {
    let near = |p: &LiftoffPoint| orbit.iter().any(|o| o.distance(p) < opts.tol);
    let mut cur = *q;
    for _ in 0..opts.max_strides {
        match walker.step(&cur) {
            StrideResult::Completed { next, .. } => {
                if near(&next) {
                    return true;
                }
                cur = next;
            }
            _ => return false,
        }
    }
    false
}

/// Raw one-coordinate basin interval `(a, b)`: perturbations in
/// `[q*ᵢ − a, q*ᵢ + b]` return to the cycle.
pub fn boa_interval(fp: &FixedPoint, coordinate: usize, walker: &Walker, opts: &BoaOptions) -> Result<(f64, f64), PoincareError> {
    if coordinate > 2 {
        return Err(PoincareError::BadCoordinate(coordinate));
    }
    if !fp.stable() {
        return Err(PoincareError::NotStable);
    }
    let mut orbit = vec![fp.q_star];
    let mut cur = fp.q_star;
    for _ in 1..fp.period {
        cur = return_map(&cur, 1, walker)?;
        orbit.push(cur);
    }
    let base = fp.q_star.get(coordinate);
    let ok = |delta: f64| returns_to_cycle(&fp.q_star.with(coordinate, base + delta), &orbit, walker, opts);
    let side = |sign: f64| {
        let step = opts.march_step[coordinate];
        let limit = opts.max_extent[coordinate];
        // Smallest probe first so that tiny basins are still resolved.
        let mut good = 0.0;
        let mut probe = opts.resolution;
        let bad = loop {
            if probe > limit {
                return good;
            }
            if ok(sign * probe) {
                good = probe;
                probe = if probe < step { (probe * 4.0).min(step) } else { probe + step };
            } else {
                break probe;
            }
        };
        let (mut lo, mut hi) = (good, bad);
        while hi - lo > opts.resolution {
            let mid = 0.5 * (lo + hi);
            if ok(sign * mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    Ok((side(-1.0), side(1.0)))
}

/// Normalized basin extent along one coordinate.
pub fn boa_scan(fp: &FixedPoint, coordinate: usize, walker: &Walker, opts: &BoaOptions) -> Result<f64, PoincareError> {
    let (a, b) = boa_interval(fp, coordinate, walker, opts)?;
    Ok((a + b) * BOA_NORMALIZATION[coordinate])
}

/// Normalized extents for all three coordinates.
pub fn boa_all(fp: &FixedPoint, walker: &Walker, opts: &BoaOptions) -> Result<[f64; 3], PoincareError> {
    Ok([
        boa_scan(fp, 0, walker, opts)?,
        boa_scan(fp, 1, walker, opts)?,
        boa_scan(fp, 2, walker, opts)?,
    ])
}
