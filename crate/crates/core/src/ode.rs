//! Dormand–Prince 5(4) integrator with continuous output.
//!
//! Fixed-size states only (`[f64; N]`); every system in this crate has two or six
//! components. Step-size control is the PI controller of Hairer's `dopri5`.

use crate::error::{Error, Result};

const C2: f64 = 0.2;
const C3: f64 = 0.3;
const C4: f64 = 0.8;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 0.2;
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

/// Tolerances and limits for [`Dopri5`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dopri5Options {
    pub rtol: f64,
    pub atol: f64,
    /// Largest allowed step; `None` means the full integration span.
    pub h_max: Option<f64>,
    pub max_steps: usize,
}

impl Default for Dopri5Options {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            h_max: None,
            max_steps: 10_000_000,
        }
    }
}

/// Counters reported after a solve.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// One accepted step with its continuous extension.
#[derive(Debug, Clone)]
pub struct DenseStep<const N: usize> {
    pub t_old: f64,
    pub h: f64,
    cont: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    pub fn t_new(&self) -> f64 {
        self.t_old + self.h
    }

    /// State at `t`, which should lie in `[t_old, t_old + h]`.
    pub fn interpolate(&self, t: f64) -> [f64; N] {
        let s = (t - self.t_old) / self.h;
        let s1 = 1.0 - s;
        let c = &self.cont;
        std::array::from_fn(|i| {
            c[0][i] + s * (c[1][i] + s1 * (c[2][i] + s * (c[3][i] + s1 * c[4][i])))
        })
    }
}

/// Adaptive Dormand–Prince 5(4) integrator.
#[derive(Debug, Clone)]
pub struct Dopri5 {
    opts: Dopri5Options,
}

impl Dopri5 {
    pub fn new(opts: Dopri5Options) -> Self {
        Self { opts }
    }

    pub fn options(&self) -> &Dopri5Options {
        &self.opts
    }

    /// Integrates `y' = f(t, y)` from `t0` to `t_end > t0`, handing every accepted
    /// step to `on_step`. Returns the final state.
    pub fn solve<const N: usize, F, S>(
        &self,
        mut f: F,
        t0: f64,
        y0: [f64; N],
        t_end: f64,
        mut on_step: S,
    ) -> Result<([f64; N], SolveStats)>
    where
        F: FnMut(f64, &[f64; N], &mut [f64; N]),
        S: FnMut(&DenseStep<N>),
    {
        let Dopri5Options {
            rtol,
            atol,
            h_max,
            max_steps,
        } = self.opts;
        let span = t_end - t0;
        if span.is_nan() || span <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "t_end",
                reason: format!("must exceed t0 = {t0}, got {t_end}"),
            });
        }
        let h_max = h_max.unwrap_or(span).min(span);
        let mut stats = SolveStats::default();

        let mut t = t0;
        let mut y = y0;
        let mut k1 = [0.0; N];
        f(t, &y, &mut k1);
        stats.evaluations += 1;
        let mut h = initial_step(&mut f, t, &y, &k1, h_max, rtol, atol);
        stats.evaluations += 1;

        let (beta, expo1) = (0.04, 0.2 - 0.04 * 0.75);
        let (fac_min, fac_max, safe) = (0.2, 10.0, 0.9);
        let mut fac_old: f64 = 1e-4;
        let mut last_rejected = false;

        let mut k2 = [0.0; N];
        let mut k3 = [0.0; N];
        let mut k4 = [0.0; N];
        let mut k5 = [0.0; N];
        let mut k6 = [0.0; N];
        let mut k7 = [0.0; N];
        let mut tmp = [0.0; N];
        let mut y_new = [0.0; N];

        loop {
            if stats.accepted + stats.rejected >= max_steps {
                return Err(Error::TooManySteps {
                    max_steps,
                    t,
                    t_end,
                });
            }
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(Error::StepUnderflow { t, h });
            }
            let last = t + h >= t_end - 1e-14 * t_end.abs().max(1.0);
            if last {
                h = t_end - t;
            }

            for i in 0..N {
                tmp[i] = y[i] + h * A21 * k1[i];
            }
            f(t + C2 * h, &tmp, &mut k2);
            for i in 0..N {
                tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
            }
            f(t + C3 * h, &tmp, &mut k3);
            for i in 0..N {
                tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            }
            f(t + C4 * h, &tmp, &mut k4);
            for i in 0..N {
                tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
            }
            f(t + C5 * h, &tmp, &mut k5);
            for i in 0..N {
                tmp[i] = y[i]
                    + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
            }
            f(t + h, &tmp, &mut k6);
            for i in 0..N {
                y_new[i] = y[i]
                    + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
            }
            f(t + h, &y_new, &mut k7);
            stats.evaluations += 6;

            let mut err = 0.0;
            for i in 0..N {
                let e = h
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = atol + rtol * y[i].abs().max(y_new[i].abs());
                err += (e / sc) * (e / sc);
            }
            let err = (err / N as f64).sqrt();
            if !err.is_finite() {
                stats.rejected += 1;
                h *= 0.1;
                last_rejected = true;
                continue;
            }

            let fac11 = err.powf(expo1);
            let fac = (fac11 / fac_old.powf(beta) / safe).clamp(1.0 / fac_max, 1.0 / fac_min);
            let mut h_new = h / fac;

            if err <= 1.0 {
                fac_old = err.max(1e-4);
                stats.accepted += 1;

                let mut cont = [[0.0; N]; 5];
                for i in 0..N {
                    let dy = y_new[i] - y[i];
                    let bspl = h * k1[i] - dy;
                    cont[0][i] = y[i];
                    cont[1][i] = dy;
                    cont[2][i] = bspl;
                    cont[3][i] = dy - h * k7[i] - bspl;
                    cont[4][i] = h
                        * (D1 * k1[i]
                            + D3 * k3[i]
                            + D4 * k4[i]
                            + D5 * k5[i]
                            + D6 * k6[i]
                            + D7 * k7[i]);
                }
                on_step(&DenseStep { t_old: t, h, cont });

                k1 = k7;
                y = y_new;
                t += h;
                if last {
                    return Ok((y, stats));
                }
                if h_new.abs() > h_max {
                    h_new = h_max;
                }
                if last_rejected {
                    h_new = h_new.min(h);
                }
                last_rejected = false;
            } else {
                h_new = h / (1.0 / fac_min).min(fac11 / safe);
                stats.rejected += 1;
                last_rejected = true;
            }
            h = h_new;
        }
    }

    /// Integrates and returns the state at each of the increasing `times`
    /// (all within `[t0, t_end]`), via continuous output.
    pub fn solve_sampled<const N: usize, F>(
        &self,
        f: F,
        t0: f64,
        y0: [f64; N],
        t_end: f64,
        times: &[f64],
    ) -> Result<(Vec<[f64; N]>, SolveStats)>
    where
        F: FnMut(f64, &[f64; N], &mut [f64; N]),
    {
        let mut out = Vec::with_capacity(times.len());
        let mut next = 0;
        while next < times.len() && times[next] <= t0 {
            out.push(y0);
            next += 1;
        }
        let (y_end, stats) = self.solve(f, t0, y0, t_end, |step| {
            let t_new = step.t_new();
            while next < times.len() && times[next] <= t_new {
                out.push(step.interpolate(times[next]));
                next += 1;
            }
        })?;
        while out.len() < times.len() {
            out.push(y_end);
        }
        Ok((out, stats))
    }
}

fn initial_step<const N: usize, F>(
    f: &mut F,
    t: f64,
    y: &[f64; N],
    k1: &[f64; N],
    h_max: f64,
    rtol: f64,
    atol: f64,
) -> f64
where
    F: FnMut(f64, &[f64; N], &mut [f64; N]),
{
    let mut dnf = 0.0;
    let mut dny = 0.0;
    for i in 0..N {
        let sk = atol + rtol * y[i].abs();
        dnf += (k1[i] / sk).powi(2);
        dny += (y[i] / sk).powi(2);
    }
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
        1e-6
    } else {
        (dny / dnf).sqrt() * 0.01
    };
    h = h.min(h_max);
    let mut y1 = [0.0; N];
    for i in 0..N {
        y1[i] = y[i] + h * k1[i];
    }
    let mut k2 = [0.0; N];
    f(t + h, &y1, &mut k2);
    let mut der2 = 0.0;
    for i in 0..N {
        let sk = atol + rtol * y[i].abs();
        der2 += ((k2[i] - k1[i]) / sk).powi(2);
    }
    let der2 = der2.sqrt() / h;
    let der12 = der2.max(dnf.sqrt());
    let h1 = if der12 <= 1e-15 {
        (h * 1e-3).max(1e-6)
    } else {
        (0.01 / der12).powf(0.2)
    };
    (100.0 * h).min(h1).min(h_max)
}
