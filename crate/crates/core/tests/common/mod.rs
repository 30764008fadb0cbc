//! Independent references shared by the integration tests.
//!
//! Nothing here calls into the crate's dynamics: equations of motion are
//! rebuilt numerically from mass positions alone, chain geometry from the law
//! of cosines, impacts from a linear momentum/constraint solve.

#![allow(dead_code)]

pub mod checks;

use aacg_core::ModelParams;
use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo..hi)
}

/// Five-point central difference.
pub fn d5(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
}

fn shifted(q: &[f64], dir: &[f64], s: f64) -> Vec<f64> {
    q.iter().zip(dir).map(|(a, b)| a + s * b).collect()
}

fn unit(n: usize, k: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[k] = 1.0;
    e
}

const H_POS: f64 = 1e-3;
const H_LAG: f64 = 1e-3;

type PosFn<'a> = &'a dyn Fn(&[f64]) -> [f64; 2];

/// Position Jacobian of one point by finite differences.
fn jac(p: PosFn, q: &[f64]) -> Vec<[f64; 2]> {
    (0..q.len())
        .map(|k| {
            let e = unit(q.len(), k);
            [
                d5(|s| p(&shifted(q, &e, s))[0], 0.0, H_POS),
                d5(|s| p(&shifted(q, &e, s))[1], 0.0, H_POS),
            ]
        })
        .collect()
}

fn mass_matrix(p: PosFn, q: &[f64]) -> DMatrix<f64> {
    let j = jac(p, q);
    let n = q.len();
    DMatrix::from_fn(n, n, |a, b| j[a][0] * j[b][0] + j[a][1] * j[b][1])
}

fn kinetic(p: PosFn, q: &[f64], qd: &[f64]) -> f64 {
    let j = jac(p, q);
    let mut v = [0.0; 2];
    for (k, col) in j.iter().enumerate() {
        v[0] += col[0] * qd[k];
        v[1] += col[1] * qd[k];
    }
    0.5 * (v[0] * v[0] + v[1] * v[1])
}

/// Per-unit-mass Lagrange terms of one point: `M` and the right-hand side
/// `∂T/∂q − Ṁq̇ − g ∂y/∂q`.
fn point_terms(p: PosFn, q: &[f64], qd: &[f64], g: f64) -> (DMatrix<f64>, DVector<f64>) {
    let n = q.len();
    let m = mass_matrix(p, q);
    let mut rhs = DVector::zeros(n);
    for k in 0..n {
        let e = unit(n, k);
        let dt_dq = d5(|s| kinetic(p, &shifted(q, &e, s), qd), 0.0, H_LAG);
        let dv_dq = d5(|s| g * p(&shifted(q, &e, s))[1], 0.0, H_LAG);
        rhs[k] = dt_dq - dv_dq;
    }
    let qdv = DVector::from_column_slice(qd);
    let mdot_qd = DVector::from_fn(n, |i, _| {
        d5(|s| (mass_matrix(p, &shifted(q, qd, s)) * &qdv)[i], 0.0, H_LAG)
    });
    (m, rhs - mdot_qd)
}

/// A mechanical system described only by where its masses are.
pub struct Oracle<'a> {
    pub body_mass: f64,
    pub body: PosFn<'a>,
    pub legs: Vec<PosFn<'a>>,
    pub leg_mass: f64,
    /// Extra potential (the spring), differentiated numerically.
    pub potential: &'a dyn Fn(&[f64]) -> f64,
    pub gravity: f64,
}

impl Oracle<'_> {
    fn extra_force(&self, q: &[f64]) -> DVector<f64> {
        let n = q.len();
        DVector::from_fn(n, |k, _| {
            let e = unit(n, k);
            -d5(|s| (self.potential)(&shifted(q, &e, s)), 0.0, H_LAG)
        })
    }

    /// Accelerations with the given finite leg mass.
    pub fn finite(&self, q: &[f64], qd: &[f64]) -> Vec<f64> {
        let (mut m, mut rhs) = point_terms(self.body, q, qd, self.gravity);
        m *= self.body_mass;
        rhs *= self.body_mass;
        for leg in &self.legs {
            let (ml, rl) = point_terms(*leg, q, qd, self.gravity);
            m += ml * self.leg_mass;
            rhs += rl * self.leg_mass;
        }
        rhs += self.extra_force(q);
        m.lu().solve(&rhs).expect("regular mass matrix").as_slice().to_vec()
    }

    /// Vanishing leg mass. Coordinates the body does not depend on (`free`)
    /// follow from the leg rows once the body rows are solved.
    pub fn limit(&self, q: &[f64], qd: &[f64], free: &[usize]) -> Vec<f64> {
        let n = q.len();
        let (mb, rb) = point_terms(self.body, q, qd, self.gravity);
        let force = self.extra_force(q);
        let driven: Vec<usize> = (0..n).filter(|i| !free.contains(i)).collect();
        let sub = DMatrix::from_fn(driven.len(), driven.len(), |a, b| self.body_mass * mb[(driven[a], driven[b])]);
        let rhs = DVector::from_fn(driven.len(), |a, _| self.body_mass * rb[driven[a]] + force[driven[a]]);
        let sol = sub.lu().solve(&rhs).expect("regular body block");
        let mut acc = vec![0.0; n];
        for (a, &i) in driven.iter().enumerate() {
            acc[i] = sol[a];
        }
        if free.is_empty() {
            return acc;
        }
        let mut ml = DMatrix::zeros(n, n);
        let mut rl = DVector::zeros(n);
        for leg in &self.legs {
            let (m, r) = point_terms(*leg, q, qd, self.gravity);
            ml += m;
            rl += r;
        }
        let sub = DMatrix::from_fn(free.len(), free.len(), |a, b| ml[(free[a], free[b])]);
        let rhs = DVector::from_fn(free.len(), |a, _| {
            let i = free[a];
            rl[i] - driven.iter().map(|&j| ml[(i, j)] * acc[j]).sum::<f64>()
        });
        let sol = sub.lu().solve(&rhs).expect("regular leg block");
        for (a, &i) in free.iter().enumerate() {
            acc[i] = sol[a];
        }
        acc
    }
}

pub fn axis(t: f64) -> [f64; 2] {
    [t.sin(), t.cos()]
}

/// Hip and leg masses in single support, `q = [stance, swing]`.
pub fn single_positions(params: &ModelParams, rho: f64) -> (impl Fn(&[f64]) -> [f64; 2], impl Fn(&[f64]) -> [f64; 2], impl Fn(&[f64]) -> [f64; 2]) {
    let c = params.com_offset;
    let hip = move |q: &[f64]| [rho * q[0].sin(), rho * q[0].cos()];
    let stance = move |q: &[f64]| [(rho - c) * q[0].sin(), (rho - c) * q[0].cos()];
    let swing = move |q: &[f64]| {
        let h = [rho * q[0].sin(), rho * q[0].cos()];
        [h[0] - c * q[1].sin(), h[1] - c * q[1].cos()]
    };
    (hip, stance, swing)
}

/// Same for pushoff, `q = [stance, swing, r]`.
pub fn pushoff_positions(params: &ModelParams) -> (impl Fn(&[f64]) -> [f64; 2], impl Fn(&[f64]) -> [f64; 2], impl Fn(&[f64]) -> [f64; 2]) {
    let c = params.com_offset;
    let l = params.leg_length;
    let hip = move |q: &[f64]| [(l + q[2]) * q[0].sin(), (l + q[2]) * q[0].cos()];
    let stance = move |q: &[f64]| [(l + q[2] - c) * q[0].sin(), (l + q[2] - c) * q[0].cos()];
    let swing = move |q: &[f64]| {
        let rho = l + q[2];
        [rho * q[0].sin() - c * q[1].sin(), rho * q[0].cos() - c * q[1].cos()]
    };
    (hip, stance, swing)
}

/// Hip relative to the rear toe for a rear leg of length `rear` and a front
/// leg of length `front` whose toe is `d` ahead. Law of cosines at the rear toe.
pub fn two_circle_hip(front: f64, rear: f64, d: f64) -> Option<[f64; 2]> {
    let cos_phi = (d * d + rear * rear - front * front) / (2.0 * d * rear);
    if !(-1.0..1.0).contains(&cos_phi) || d <= 0.0 {
        return None;
    }
    let phi = cos_phi.acos();
    Some([rear * phi.cos(), rear * phi.sin()])
}

/// Double-support masses, `q = [r]`, positions relative to the rear toe.
pub fn double_positions(params: &ModelParams, d: f64) -> (impl Fn(&[f64]) -> [f64; 2], impl Fn(&[f64]) -> [f64; 2], impl Fn(&[f64]) -> [f64; 2]) {
    let c = params.com_offset;
    let l = params.leg_length;
    let hip = move |q: &[f64]| two_circle_hip(l, l + q[0], d).expect("solvable chain");
    let front = move |q: &[f64]| {
        let h = two_circle_hip(l, l + q[0], d).expect("solvable chain");
        let u = [(h[0] - d) / l, h[1] / l];
        [h[0] - c * u[0], h[1] - c * u[1]]
    };
    let rear = move |q: &[f64]| {
        let len = l + q[0];
        let h = two_circle_hip(l, len, d).expect("solvable chain");
        [h[0] - c * h[0] / len, h[1] - c * h[1] / len]
    };
    (hip, front, rear)
}

/// Spring potential `½k(r0 − r)²` on coordinate `idx`.
pub fn spring(params: &ModelParams, idx: usize) -> impl Fn(&[f64]) -> f64 {
    let (k, r0) = (params.stiffness, params.precompression);
    move |q: &[f64]| 0.5 * k * (r0 - q[idx]).powi(2)
}

/// Inelastic impact of the hip mass against a massless rigid front leg pinned
/// at its toe: solves `m(v⁺ − v⁻) = P·u`, `u·v⁺ = 0` for `(v⁺, P)`.
pub fn impact_oracle(mass: f64, v_minus: [f64; 2], front_axis: [f64; 2]) -> ([f64; 2], f64) {
    let u = front_axis;
    let a = Matrix3::new(mass, 0.0, -u[0], 0.0, mass, -u[1], u[0], u[1], 0.0);
    let b = Vector3::new(mass * v_minus[0], mass * v_minus[1], 0.0);
    let x = a.lu().solve(&b).expect("regular impact system");
    ([x[0], x[1]], x[2])
}

/// Max-norm error relative to the reference, with the reference magnitude
/// floored at `scale` so that states where forces nearly cancel do not divide
/// by almost zero.
pub fn rel_err(a: &[f64], b: &[f64], scale: f64) -> f64 {
    let num = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let den = b.iter().map(|y| y.abs()).fold(0.0, f64::max);
    num / den.max(scale)
}

/// Natural acceleration scale `g/l` (rad/s², or m/s² per metre of leg).
pub fn accel_scale(params: &ModelParams) -> f64 {
    params.gravity / params.leg_length
}

/// Random model parameters around the defaults.
pub fn random_params(rng: &mut ChaCha8Rng) -> ModelParams {
    let mut p = ModelParams::with_control(uniform(rng, 0.01, 0.15), uniform(rng, -0.6, 0.1));
    p.stiffness = uniform(rng, 50.0, 400.0);
    p
}
