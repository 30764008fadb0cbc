//! Dormand–Prince 5(4) with continuous extension and guard localization.

use super::IntegratorConfig;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Crossing direction a guard reacts to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Direction {
    Rising,
    Falling,
}

impl Direction {
    fn crossed(self, before: f64, after: f64) -> bool {
        match self {
            Direction::Rising => before < 0.0 && after >= 0.0,
            Direction::Falling => before > 0.0 && after <= 0.0,
        }
    }
}

/// Scalar event function. Guards earlier in the slice win ties.
pub(crate) struct Guard<'a, const N: usize> {
    pub direction: Direction,
    pub value: &'a dyn Fn(&[f64; N]) -> f64,
    /// Crossings where this returns false are skipped.
    pub accept: Option<&'a dyn Fn(&[f64; N]) -> bool>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Stop<const N: usize> {
    Event { guard: usize, t: f64, y: [f64; N] },
    Timeout { t: f64, y: [f64; N] },
    Diverged { t: f64 },
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    /// Sum over accepted steps of the max-norm embedded error estimate.
    pub error_estimate: f64,
}

struct Dense<const N: usize> {
    r: [[f64; N]; 5],
}

impl<const N: usize> Dense<N> {
    fn eval(&self, theta: f64) -> [f64; N] {
        let t1 = 1.0 - theta;
        let mut out = [0.0; N];
        for i in 0..N {
            out[i] = self.r[0][i]
                + theta * (self.r[1][i] + t1 * (self.r[2][i] + theta * (self.r[3][i] + t1 * self.r[4][i])));
        }
        out
    }
}

#[inline]
fn combine<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        if *c != 0.0 {
            for i in 0..N {
                out[i] += h * c * k[i];
            }
        }
    }
    out
}

/// Step attempts per call before giving up; a regular phase needs a few hundred.
const MAX_ATTEMPTS: usize = 100_000;

fn finite<const N: usize>(v: &[f64; N]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Advances `y' = f(y)` from `t0` until a guard fires or `t_end` is reached.
///
/// `f` returns `None` where the field is undefined; such steps are rejected.
/// `sample` sees every accepted step end point.
pub(crate) fn integrate<const N: usize, F, S>(
    f: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    guards: &[Guard<'_, N>],
    cfg: &IntegratorConfig,
    h_init: &mut f64,
    stats: &mut Stats,
    mut sample: S,
) -> Stop<N>
where
    F: Fn(&[f64; N]) -> Option<[f64; N]>,
    S: FnMut(f64, &[f64; N]),
{
    let mut t = t0;
    let mut y = y0;
    let Some(mut k1) = f(&y).filter(finite) else {
        return Stop::Diverged { t };
    };
    let mut g_prev: Vec<f64> = guards.iter().map(|g| (g.value)(&y)).collect();
    let mut h = h_init.min(cfg.max_step).max(1e-8);
    let min_step = 1e-14;
    let mut attempts = 0usize;

    loop {
        if t >= t_end {
            return Stop::Timeout { t, y };
        }
        attempts += 1;
        if attempts > MAX_ATTEMPTS {
            return Stop::Diverged { t };
        }
        h = h.min(t_end - t).min(cfg.max_step);
        if h < min_step {
            return Stop::Diverged { t };
        }
        let stage = (|| {
            let k2 = f(&combine(&y, h, &[(A21, &k1)]))?;
            let k3 = f(&combine(&y, h, &[(A31, &k1), (A32, &k2)]))?;
            let k4 = f(&combine(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]))?;
            let k5 = f(&combine(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?;
            let k6 = f(&combine(
                &y,
                h,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ))?;
            let y1 = combine(
                &y,
                h,
                &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
            );
            let k7 = f(&y1)?;
            Some((k2, k3, k4, k5, k6, k7, y1))
        })();
        let Some((_k2, k3, k4, k5, k6, k7, y1)) = stage.filter(|s| finite(&s.6) && finite(&s.5)) else {
            stats.rejected += 1;
            h *= 0.25;
            continue;
        };

        let mut err_sq = 0.0;
        let mut err_max: f64 = 0.0;
        for i in 0..N {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let scale = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(y1[i].abs());
            err_sq += (e / scale) * (e / scale);
            err_max = err_max.max(e.abs());
        }
        let err = (err_sq / N as f64).sqrt();
        if !(err <= 1.0) {
            stats.rejected += 1;
            let factor = if err.is_finite() { (0.9 * err.powf(-0.2)).max(0.2) } else { 0.2 };
            h *= factor;
            continue;
        }

        stats.accepted += 1;
        stats.error_estimate += err_max;
        let t1 = t + h;

        // Guard scan over the accepted step.
        let g_new: Vec<f64> = guards.iter().map(|g| (g.value)(&y1)).collect();
        let mut hit: Option<(usize, f64, [f64; N])> = None;
        if guards
            .iter()
            .enumerate()
            .any(|(i, g)| g.direction.crossed(g_prev[i], g_new[i]))
        {
            let mut dense = Dense { r: [[0.0; N]; 5] };
            for i in 0..N {
                let dy = y1[i] - y[i];
                let bspl = h * k1[i] - dy;
                dense.r[0][i] = y[i];
                dense.r[1][i] = dy;
                dense.r[2][i] = bspl;
                dense.r[3][i] = dy - h * k7[i] - bspl;
                dense.r[4][i] =
                    h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            for (i, g) in guards.iter().enumerate() {
                if !g.direction.crossed(g_prev[i], g_new[i]) {
                    continue;
                }
                let theta = localize(g, &dense, g_prev[i], g_new[i], cfg.event_time_tol / h);
                let ye = if theta >= 1.0 { y1 } else { dense.eval(theta) };
                if let Some(accept) = g.accept {
                    if !accept(&ye) {
                        continue;
                    }
                }
                let te = t + theta * h;
                let better = match hit {
                    None => true,
                    Some((_, tb, _)) => te < tb - cfg.event_time_tol,
                };
                if better {
                    hit = Some((i, te, ye));
                }
            }
        }
        if let Some((guard, t, y)) = hit {
            *h_init = h;
            return Stop::Event { guard, t, y };
        }

        t = t1;
        y = y1;
        k1 = k7;
        g_prev = g_new;
        sample(t, &y);
        *h_init = h;
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
    }
}

/// Illinois-modified regula falsi on the dense output, returning the
/// post-crossing end of the final bracket.
fn localize<const N: usize>(guard: &Guard<'_, N>, dense: &Dense<N>, g0: f64, g1: f64, tol: f64) -> f64 {
    let (mut a, mut b) = (0.0f64, 1.0f64);
    let (mut fa, mut fb) = (g0, g1);
    let mut side = 0i8;
    for _ in 0..200 {
        if b - a <= tol {
            break;
        }
        let mut m = (a * fb - b * fa) / (fb - fa);
        if !(m > a && m < b) || !m.is_finite() {
            m = 0.5 * (a + b);
        }
        // Keep the bracket shrinking even when regula falsi stalls.
        if (m - a) < 0.01 * (b - a) || (b - m) < 0.01 * (b - a) {
            m = 0.5 * (a + b);
        }
        let fm = (guard.value)(&dense.eval(m));
        if fm == 0.0 {
            // Nudge past the root so the returned point is on the far side.
            b = m;
            break;
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
            fa = fm;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = m;
            fb = fm;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> IntegratorConfig {
        IntegratorConfig::default()
    }

    #[test]
    fn harmonic_oscillator_accuracy() {
        let f = |y: &[f64; 2]| Some([y[1], -y[0]]);
        let mut h = 1e-3;
        let mut stats = Stats::default();
        let stop = integrate(f, 0.0, [1.0, 0.0], 10.0, &[], &cfg(), &mut h, &mut stats, |_, _| {});
        let Stop::Timeout { t, y } = stop else { panic!("{stop:?}") };
        assert!((t - 10.0).abs() < 1e-12);
        assert!((y[0] - 10f64.cos()).abs() < 1e-9);
        assert!((y[1] + 10f64.sin()).abs() < 1e-9);
    }

    #[test]
    fn localizes_zero_crossing() {
        let f = |y: &[f64; 2]| Some([y[1], -y[0]]);
        let value = |y: &[f64; 2]| y[0];
        let guards = [Guard {
            direction: Direction::Falling,
            value: &value,
            accept: None,
        }];
        let mut h = 1e-3;
        let mut stats = Stats::default();
        let stop = integrate(f, 0.0, [1.0, 0.0], 10.0, &guards, &cfg(), &mut h, &mut stats, |_, _| {});
        let Stop::Event { guard, t, y } = stop else { panic!() };
        assert_eq!(guard, 0);
        assert!((t - std::f64::consts::FRAC_PI_2).abs() < 1e-9);
        assert!(y[0].abs() < 1e-10);
    }

    #[test]
    fn rejected_crossings_are_skipped() {
        let f = |y: &[f64; 2]| Some([y[1], -y[0]]);
        let value = |y: &[f64; 2]| y[0];
        let accept = |y: &[f64; 2]| y[1] < 0.0;
        let guards = [Guard {
            direction: Direction::Rising,
            value: &value,
            accept: Some(&accept),
        }];
        let mut h = 1e-3;
        let mut stats = Stats::default();
        // Rising crossings of x always have v > 0, so none is accepted.
        let stop = integrate(f, 0.0, [-1.0, 0.0], 10.0, &guards, &cfg(), &mut h, &mut stats, |_, _| {});
        assert!(matches!(stop, Stop::Timeout { .. }));
    }
}
