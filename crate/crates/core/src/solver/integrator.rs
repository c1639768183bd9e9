//! Explicit Runge–Kutta time stepping: classical RK4 with a fixed step and
//! the Dormand–Prince 5(4) pair with adaptive step control.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case", deny_unknown_fields)]
pub enum Scheme {
    Rk4Fixed {
        dt: f64,
    },
    AdaptiveRk45 {
        #[serde(default = "default_rtol")]
        rtol: f64,
        #[serde(default = "default_atol")]
        atol: f64,
    },
}

fn default_rtol() -> f64 {
    1e-10
}

fn default_atol() -> f64 {
    1e-12
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    #[serde(flatten)]
    pub scheme: Scheme,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_step: Option<f64>,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
}

fn default_max_steps() -> usize {
    10_000_000
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self::adaptive(default_rtol(), default_atol())
    }
}

impl IntegratorConfig {
    pub fn adaptive(rtol: f64, atol: f64) -> Self {
        Self {
            scheme: Scheme::AdaptiveRk45 { rtol, atol },
            max_step: None,
            max_steps: default_max_steps(),
        }
    }

    pub fn rk4(dt: f64) -> Self {
        Self {
            scheme: Scheme::Rk4Fixed { dt },
            max_step: None,
            max_steps: default_max_steps(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.scheme {
            Scheme::Rk4Fixed { dt } if !(dt > 0.0 && dt.is_finite()) => {
                return Err(Error::InvalidInput(format!("time step must be positive, got {dt}")))
            }
            Scheme::AdaptiveRk45 { rtol, atol } if !(rtol > 0.0 && atol > 0.0) => {
                return Err(Error::InvalidInput(format!(
                    "tolerances must be positive, got rtol={rtol}, atol={atol}"
                )))
            }
            _ => {}
        }
        if let Some(m) = self.max_step {
            if !(m > 0.0) {
                return Err(Error::InvalidInput(format!("max_step must be positive, got {m}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Solves `y' = f(t, y)` from `t0` and records `y` at each of `samples`
/// (ascending, within `[t0, ..]`). Steps are shortened to land on samples
/// exactly.
pub fn solve<F>(mut f: F, t0: f64, y0: &[f64], samples: &[f64], cfg: &IntegratorConfig) -> Result<(Vec<Vec<f64>>, Stats)>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
{
    cfg.validate()?;
    if samples.windows(2).any(|w| w[1] < w[0]) || samples.first().is_some_and(|&s| s < t0) {
        return Err(Error::InvalidInput("sample times must be ascending and not before the start".into()));
    }
    let mut stats = Stats::default();
    let evaluations = std::cell::Cell::new(0usize);
    let mut eval = |t: f64, y: &[f64], out: &mut [f64]| -> Result<()> {
        evaluations.set(evaluations.get() + 1);
        f(t, y, out)?;
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(t));
        }
        Ok(())
    };
    let n = y0.len();
    let mut out = Vec::with_capacity(samples.len());
    let mut t = t0;
    let mut y = y0.to_vec();
    match cfg.scheme {
        Scheme::Rk4Fixed { dt } => {
            let dt = cfg.max_step.map_or(dt, |m| dt.min(m));
            let mut k = vec![vec![0.0; n]; 4];
            let mut tmp = vec![0.0; n];
            for &target in samples {
                while t < target {
                    let step = dt.min(target - t);
                    let end = if step == target - t { target } else { t + step };
                    eval(t, &y, &mut k[0])?;
                    for i in 0..n {
                        tmp[i] = y[i] + 0.5 * step * k[0][i];
                    }
                    eval(t + 0.5 * step, &tmp, &mut k[1])?;
                    for i in 0..n {
                        tmp[i] = y[i] + 0.5 * step * k[1][i];
                    }
                    eval(t + 0.5 * step, &tmp, &mut k[2])?;
                    for i in 0..n {
                        tmp[i] = y[i] + step * k[2][i];
                    }
                    eval(end, &tmp, &mut k[3])?;
                    for i in 0..n {
                        y[i] += step / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
                    }
                    t = end;
                    stats.accepted += 1;
                    if stats.accepted > cfg.max_steps {
                        return Err(Error::StepUnderflow { t, step });
                    }
                }
                out.push(y.clone());
            }
        }
        Scheme::AdaptiveRk45 { rtol, atol } => {
            let mut dp = Dopri5::new(n, rtol, atol, cfg.max_step.unwrap_or(f64::INFINITY));
            let mut k1 = vec![0.0; n];
            eval(t, &y, &mut k1)?;
            let mut step = f64::NAN;
            for &target in samples {
                while t < target {
                    if step.is_nan() {
                        step = dp.initial_step(&mut eval, t, &y, &k1, target - t)?;
                    }
                    step = dp.step(&mut eval, &mut t, &mut y, &mut k1, step, target, &mut stats)?;
                    if stats.accepted + stats.rejected > cfg.max_steps {
                        return Err(Error::StepUnderflow { t, step });
                    }
                }
                out.push(y.clone());
            }
        }
    }
    stats.evaluations = evaluations.get();
    Ok((out, stats))
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
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
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

struct Dopri5 {
    rtol: f64,
    atol: f64,
    max_step: f64,
    k: [Vec<f64>; 6],
    tmp: Vec<f64>,
    ynew: Vec<f64>,
}

impl Dopri5 {
    fn new(n: usize, rtol: f64, atol: f64, max_step: f64) -> Self {
        Self {
            rtol,
            atol,
            max_step,
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
            ynew: vec![0.0; n],
        }
    }

    fn scale(&self, a: f64, b: f64) -> f64 {
        self.atol + self.rtol * a.abs().max(b.abs())
    }

    /// Starting step from the size of the solution and its derivatives.
    fn initial_step<F>(&mut self, f: &mut F, t: f64, y: &[f64], k1: &[f64], span: f64) -> Result<f64>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    {
        let n = y.len().max(1) as f64;
        let rms = |v: &mut dyn Iterator<Item = f64>| (v.map(|x| x * x).sum::<f64>() / n).sqrt();
        let d0 = rms(&mut y.iter().map(|&v| v / self.scale(v, v)));
        let d1 = rms(&mut y.iter().zip(k1).map(|(&v, &d)| d / self.scale(v, v)));
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(span).min(self.max_step);
        for i in 0..y.len() {
            self.tmp[i] = y[i] + h0 * k1[i];
        }
        let tmp = std::mem::take(&mut self.tmp);
        f(t + h0, &tmp, &mut self.k[1])?;
        self.tmp = tmp;
        let d2 = rms(&mut y
            .iter()
            .zip(k1)
            .zip(&self.k[1])
            .map(|((&v, &a), &b)| (b - a) / self.scale(v, v)))
            / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        Ok((100.0 * h0).min(h1).min(span).min(self.max_step))
    }

    /// Attempts steps from `t` until one is accepted, never passing `target`.
    /// Returns a proposal for the next step.
    #[allow(clippy::too_many_arguments)]
    fn step<F>(
        &mut self,
        f: &mut F,
        t: &mut f64,
        y: &mut Vec<f64>,
        k1: &mut Vec<f64>,
        proposal: f64,
        target: f64,
        stats: &mut Stats,
    ) -> Result<f64>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    {
        let n = y.len();
        let mut h = proposal.min(self.max_step);
        let mut rejected_once = false;
        loop {
            let remaining = target - *t;
            let lands = h >= remaining * (1.0 - 1e-12);
            if lands {
                h = remaining;
            }
            let min_step = 1e-14 * t.abs().max(1.0);
            if h < min_step {
                return Err(Error::StepUnderflow { t: *t, step: h });
            }
            let [k2, k3, k4, k5, k6, k7] = &mut self.k;
            let tmp = &mut self.tmp;
            for i in 0..n {
                tmp[i] = y[i] + h * A21 * k1[i];
            }
            f(*t + C2 * h, tmp, k2)?;
            for i in 0..n {
                tmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
            }
            f(*t + C3 * h, tmp, k3)?;
            for i in 0..n {
                tmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            }
            f(*t + C4 * h, tmp, k4)?;
            for i in 0..n {
                tmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
            }
            f(*t + C5 * h, tmp, k5)?;
            for i in 0..n {
                tmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
            }
            let t_new = if lands { target } else { *t + h };
            f(t_new, tmp, k6)?;
            let ynew = &mut self.ynew;
            for i in 0..n {
                ynew[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
            }
            f(t_new, ynew, k7)?;
            let mut err = 0.0;
            for i in 0..n {
                let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = self.atol + self.rtol * y[i].abs().max(ynew[i].abs());
                err += (e / sc).powi(2);
            }
            let err = (err / n.max(1) as f64).sqrt();
            let factor = if err == 0.0 { 10.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 10.0) };
            if err <= 1.0 {
                stats.accepted += 1;
                *t = t_new;
                std::mem::swap(y, &mut self.ynew);
                // first same as last
                std::mem::swap(k1, &mut self.k[5]);
                let factor = if rejected_once { factor.min(1.0) } else { factor };
                // a step shortened to land on a sample says nothing about the next one
                let next = if lands { proposal.max(h) } else { h * factor };
                return Ok(next.min(self.max_step));
            }
            stats.rejected += 1;
            rejected_once = true;
            h *= factor.min(1.0);
        }
    }
}
