//! Smooth vector fields of the three phases.
//!
//! The runtime dynamics use the vanishing-leg-mass limit: the hip point mass
//! moves as if the legs were massless, and the swing leg follows as a
//! pendulum of length `com_offset` hung from the accelerating hip. The
//! finite-mass mode assembles the full Lagrangian equations from the
//! point-mass Jacobians and exists to cross-check the limit.
//!
//! State layouts:
//! - single support `[stance, swing, d stance, d swing]`
//! - pushoff `[stance, swing, r, d stance, d swing, dr]`
//! - double support `[r, dr]`
//!
//! See `docs/derivation.md` for the reductions.

use nalgebra::{DMatrix, DVector};

use crate::model::{
    axis, chain, dot, tangent, ChainGeometryError, DoubleSupportState, ModelParams, PushoffState,
    SingleSupportState,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DynamicsMode {
    /// Vanishing leg mass, closed form.
    #[default]
    EpsilonLimit,
    /// Full equations with `params.leg_mass`.
    FiniteMass,
}

/// Time derivative of a phase state vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseDerivative<const N: usize>(pub [f64; N]);

impl<const N: usize> PhaseDerivative<N> {
    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

/// Angular acceleration of a pendulum of length `c` hanging from a pivot with
/// acceleration `pivot_acc`.
#[inline]
fn driven_swing(pivot_acc: [f64; 2], swing: f64, params: &ModelParams) -> f64 {
    (dot(pivot_acc, tangent(swing)) - params.gravity * swing.sin()) / params.com_offset
}

/// Single support with a rigid stance leg of length `stance_length`.
pub fn single_field(y: &[f64; 4], stance_length: f64, params: &ModelParams) -> [f64; 4] {
    let [ts, tn, ws, wn] = *y;
    let rho = stance_length;
    let acc_s = params.gravity * ts.sin() / rho;
    let u = axis(ts);
    let e = tangent(ts);
    let hip = [
        rho * acc_s * e[0] - rho * ws * ws * u[0],
        rho * acc_s * e[1] - rho * ws * ws * u[1],
    ];
    [ws, wn, acc_s, driven_swing(hip, tn, params)]
}

/// Single support with the stance spring extending.
pub fn pushoff_field(y: &[f64; 6], params: &ModelParams) -> [f64; 6] {
    let [ts, tn, r, ws, wn, dr] = *y;
    let rho = params.leg_length + r;
    let g = params.gravity;
    let radial = rho * ws * ws + params.stiffness / params.body_mass * (params.precompression - r) - g * ts.cos();
    let acc_s = (g * ts.sin() - 2.0 * dr * ws) / rho;
    let u = axis(ts);
    let e = tangent(ts);
    let a_r = radial - rho * ws * ws;
    let a_t = rho * acc_s + 2.0 * dr * ws;
    let hip = [a_r * u[0] + a_t * e[0], a_r * u[1] + a_t * e[1]];
    [ws, wn, dr, acc_s, driven_swing(hip, tn, params), radial]
}

/// Double support, toe distance fixed.
pub fn double_field(y: &[f64; 2], toe_distance: f64, params: &ModelParams) -> Result<[f64; 2], ChainGeometryError> {
    let [r, dr] = *y;
    let c = chain(r, toe_distance, params)?;
    let mb = params.body_mass;
    let inertia = mb * dot(c.d_hip, c.d_hip);
    let coriolis = mb * dot(c.d_hip, c.dd_hip) * dr;
    let generalized = mb * params.gravity * c.d_hip[1] - params.stiffness * (params.precompression - r);
    Ok([dr, -(coriolis * dr + generalized) / inertia])
}

pub fn ss_accel(state: &SingleSupportState, params: &ModelParams, mode: DynamicsMode) -> PhaseDerivative<4> {
    let y = [state.stance_angle, state.swing_angle, state.stance_rate, state.swing_rate];
    match mode {
        DynamicsMode::EpsilonLimit => PhaseDerivative(single_field(&y, params.leg_length, params)),
        DynamicsMode::FiniteMass => PhaseDerivative(finite_single(&y, params.leg_length, params)),
    }
}

pub fn pushoff_accel(state: &PushoffState, params: &ModelParams, mode: DynamicsMode) -> PhaseDerivative<6> {
    let rho = state.stance_length(params);
    if state.latched {
        let y = [state.stance_angle, state.swing_angle, state.stance_rate, state.swing_rate];
        let d = match mode {
            DynamicsMode::EpsilonLimit => single_field(&y, rho, params),
            DynamicsMode::FiniteMass => finite_single(&y, rho, params),
        };
        return PhaseDerivative([d[0], d[1], 0.0, d[2], d[3], 0.0]);
    }
    let y = [
        state.stance_angle,
        state.swing_angle,
        state.r,
        state.stance_rate,
        state.swing_rate,
        state.dr,
    ];
    match mode {
        DynamicsMode::EpsilonLimit => PhaseDerivative(pushoff_field(&y, params)),
        DynamicsMode::FiniteMass => PhaseDerivative(finite_pushoff(&y, params)),
    }
}

pub fn ds_accel(
    state: &DoubleSupportState,
    params: &ModelParams,
    mode: DynamicsMode,
) -> Result<PhaseDerivative<2>, ChainGeometryError> {
    let y = [state.r, state.dr];
    match mode {
        DynamicsMode::EpsilonLimit => double_field(&y, state.toe_distance, params).map(PhaseDerivative),
        DynamicsMode::FiniteMass => finite_double(&y, state.toe_distance, params).map(PhaseDerivative),
    }
}

/// Point mass described by its position Jacobian and the velocity-product
/// part of its acceleration (`J̇ q̇`).
struct Mass<const N: usize> {
    mass: f64,
    jac: [[f64; N]; 2],
    convective: [f64; 2],
}

/// Solves `M q̈ = Σ m Jᵀ(g − J̇q̇) + Q`.
fn lagrange_solve<const N: usize>(masses: &[Mass<N>], generalized: [f64; N], params: &ModelParams) -> [f64; N] {
    let mut m = DMatrix::<f64>::zeros(N, N);
    let mut rhs = DVector::<f64>::from_column_slice(&generalized);
    let grav = [0.0, -params.gravity];
    for p in masses {
        for i in 0..N {
            for j in 0..N {
                m[(i, j)] += p.mass * (p.jac[0][i] * p.jac[0][j] + p.jac[1][i] * p.jac[1][j]);
            }
            for k in 0..2 {
                rhs[i] += p.mass * p.jac[k][i] * (grav[k] - p.convective[k]);
            }
        }
    }
    let mut out = [f64::NAN; N];
    if let Some(sol) = m.lu().solve(&rhs) {
        out.copy_from_slice(sol.as_slice());
    }
    out
}

fn finite_single(y: &[f64; 4], rho: f64, params: &ModelParams) -> [f64; 4] {
    let [ts, tn, ws, wn] = *y;
    let c = params.com_offset;
    let (us, es) = (axis(ts), tangent(ts));
    let (un, en) = (axis(tn), tangent(tn));
    let hip_conv = [-rho * ws * ws * us[0], -rho * ws * ws * us[1]];
    let hip = Mass {
        mass: params.body_mass,
        jac: [[rho * es[0], 0.0], [rho * es[1], 0.0]],
        convective: hip_conv,
    };
    let a = rho - c;
    let stance = Mass {
        mass: params.leg_mass,
        jac: [[a * es[0], 0.0], [a * es[1], 0.0]],
        convective: [-a * ws * ws * us[0], -a * ws * ws * us[1]],
    };
    let swing = Mass {
        mass: params.leg_mass,
        jac: [[rho * es[0], -c * en[0]], [rho * es[1], -c * en[1]]],
        convective: [hip_conv[0] + c * wn * wn * un[0], hip_conv[1] + c * wn * wn * un[1]],
    };
    let acc = lagrange_solve(&[hip, stance, swing], [0.0; 2], params);
    [ws, wn, acc[0], acc[1]]
}

fn finite_pushoff(y: &[f64; 6], params: &ModelParams) -> [f64; 6] {
    let [ts, tn, r, ws, wn, dr] = *y;
    let c = params.com_offset;
    let rho = params.leg_length + r;
    let (us, es) = (axis(ts), tangent(ts));
    let (un, en) = (axis(tn), tangent(tn));
    // Position toe + dist·u_s with dist = rho - offset, d(dist)/dt = dr.
    let along_stance = |dist: f64| -> ([[f64; 3]; 2], [f64; 2]) {
        (
            [[dist * es[0], 0.0, us[0]], [dist * es[1], 0.0, us[1]]],
            [
                2.0 * dr * ws * es[0] - dist * ws * ws * us[0],
                2.0 * dr * ws * es[1] - dist * ws * ws * us[1],
            ],
        )
    };
    let (hj, hc) = along_stance(rho);
    let (sj, sc) = along_stance(rho - c);
    let hip = Mass {
        mass: params.body_mass,
        jac: hj,
        convective: hc,
    };
    let stance = Mass {
        mass: params.leg_mass,
        jac: sj,
        convective: sc,
    };
    let swing = Mass {
        mass: params.leg_mass,
        jac: [[hj[0][0], -c * en[0], hj[0][2]], [hj[1][0], -c * en[1], hj[1][2]]],
        convective: [hc[0] + c * wn * wn * un[0], hc[1] + c * wn * wn * un[1]],
    };
    let spring = params.stiffness * (params.precompression - r);
    let acc = lagrange_solve(&[hip, stance, swing], [0.0, 0.0, spring], params);
    [ws, wn, dr, acc[0], acc[1], acc[2]]
}

fn finite_double(y: &[f64; 2], toe_distance: f64, params: &ModelParams) -> Result<[f64; 2], ChainGeometryError> {
    let [r, dr] = *y;
    let ch = chain(r, toe_distance, params)?;
    let c = params.com_offset;
    let l = params.leg_length;
    let (h1, h2) = (ch.d_hip, ch.dd_hip);
    let v2 = dr * dr;
    let hip = Mass {
        mass: params.body_mass,
        jac: [[h1[0]], [h1[1]]],
        convective: [h2[0] * v2, h2[1] * v2],
    };
    // Front leg mass: affine in the hip position.
    let kf = 1.0 - c / l;
    let front = Mass {
        mass: params.leg_mass,
        jac: [[kf * h1[0]], [kf * h1[1]]],
        convective: [kf * h2[0] * v2, kf * h2[1] * v2],
    };
    // Rear leg mass: rear_toe + w·s(r), w = hip - rear_toe, s = 1 - c/L.
    let len = ch.rear_length;
    let s = 1.0 - c / len;
    let s1 = c / (len * len);
    let s2 = -2.0 * c / (len * len * len);
    let w = ch.hip;
    let rear = Mass {
        mass: params.leg_mass,
        jac: [[h1[0] * s + w[0] * s1], [h1[1] * s + w[1] * s1]],
        convective: [
            (h2[0] * s + 2.0 * h1[0] * s1 + w[0] * s2) * v2,
            (h2[1] * s + 2.0 * h1[1] * s1 + w[1] * s2) * v2,
        ],
    };
    let spring = params.stiffness * (params.precompression - r);
    let acc = lagrange_solve(&[hip, front, rear], [spring], params);
    Ok([dr, acc[0]])
}
