//! Dormand–Prince 5(4) with Hairer's dense output.

use thiserror::Error;

use crate::expr::DomainError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdeError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("step limit {0} exceeded")]
    TooManySteps(usize),
}

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> OdeOptions {
        OdeOptions { rtol: tol, atol: tol, ..OdeOptions::default() }
    }
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-12, atol: 1e-12, max_steps: 200_000 }
    }
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

/// One accepted step with its continuous extension.
#[derive(Debug, Clone)]
struct Step {
    t0: f64,
    h: f64,
    r: [Vec<f64>; 5],
}

impl Step {
    fn eval(&self, t: f64, out: &mut [f64]) {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let [r1, r2, r3, r4, r5] = &self.r;
        for i in 0..out.len() {
            out[i] = r1[i] + th * (r2[i] + th1 * (r3[i] + th * (r4[i] + th1 * r5[i])));
        }
    }
}

/// Dense solution on [t0, t1].
#[derive(Debug, Clone)]
pub struct DenseSolution {
    t0: f64,
    t1: f64,
    y0: Vec<f64>,
    y1: Vec<f64>,
    steps: Vec<Step>,
}

impl DenseSolution {
    pub fn t_start(&self) -> f64 {
        self.t0
    }

    pub fn t_end(&self) -> f64 {
        self.t1
    }

    pub fn initial(&self) -> &[f64] {
        &self.y0
    }

    pub fn last(&self) -> &[f64] {
        &self.y1
    }

    pub fn steps(&self) -> usize {
        self.steps.len()
    }

    /// Interpolated state at t; clamps to the solved interval.
    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        if self.steps.is_empty() || t <= self.t0 {
            out.copy_from_slice(&self.y0);
            return;
        }
        if t >= self.t1 {
            out.copy_from_slice(&self.y1);
            return;
        }
        let k = self.steps.partition_point(|s| s.t0 + s.h <= t).min(self.steps.len() - 1);
        self.steps[k].eval(t, out);
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.y0.len()];
        self.eval_into(t, &mut out);
        out
    }
}

fn error_norm(y: &[f64], ynew: &[f64], err: &[f64], opts: &OdeOptions) -> f64 {
    let mut acc = 0.0;
    for i in 0..y.len() {
        let sc = opts.atol + opts.rtol * y[i].abs().max(ynew[i].abs());
        acc += (err[i] / sc).powi(2);
    }
    (acc / y.len().max(1) as f64).sqrt()
}

/// Integrate y' = f(t, y) from t0 to t1 (t1 >= t0).
pub fn solve<F>(mut f: F, t0: f64, y0: &[f64], t1: f64, opts: &OdeOptions) -> Result<DenseSolution, OdeError>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), DomainError>,
{
    let n = y0.len();
    let mut sol = DenseSolution { t0, t1, y0: y0.to_vec(), y1: y0.to_vec(), steps: Vec::new() };
    if t1 <= t0 || n == 0 {
        return Ok(sol);
    }
    let span = t1 - t0;
    let mut k: [Vec<f64>; 7] = std::array::from_fn(|_| vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    let mut err = vec![0.0; n];
    let mut y = y0.to_vec();
    let mut t = t0;
    f(t, &y, &mut k[0])?;

    // initial step guess from the derivative scale
    let d0 = error_norm(&y, &y, &y, opts);
    let d1 = error_norm(&y, &y, &k[0], opts);
    let mut h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 * span } else { 0.01 * d0 / d1 };
    h = h.min(span).max(1e-4 * span.min(1.0));
    let mut attempts = 0usize;
    let mut last_rejected = false;

    while t < t1 {
        attempts += 1;
        if attempts > opts.max_steps {
            return Err(OdeError::TooManySteps(opts.max_steps));
        }
        if t + h > t1 || t1 - (t + h) < 1e-12 * span {
            h = t1 - t;
        }
        if h <= 16.0 * f64::EPSILON * t.abs().max(span) {
            return Err(OdeError::StepUnderflow { t });
        }

        let stage = |coeffs: &[(usize, f64)], k: &[Vec<f64>; 7], tmp: &mut Vec<f64>| {
            for i in 0..n {
                let mut s = 0.0;
                for &(j, a) in coeffs {
                    s += a * k[j][i];
                }
                tmp[i] = y[i] + h * s;
            }
        };
        stage(&[(0, A21)], &k, &mut tmp);
        f(t + C2 * h, &tmp, &mut k[1])?;
        stage(&[(0, A31), (1, A32)], &k, &mut tmp);
        f(t + C3 * h, &tmp, &mut k[2])?;
        stage(&[(0, A41), (1, A42), (2, A43)], &k, &mut tmp);
        f(t + C4 * h, &tmp, &mut k[3])?;
        stage(&[(0, A51), (1, A52), (2, A53), (3, A54)], &k, &mut tmp);
        f(t + C5 * h, &tmp, &mut k[4])?;
        stage(&[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)], &k, &mut tmp);
        f(t + h, &tmp, &mut k[5])?;
        stage(&[(0, A71), (2, A73), (3, A74), (4, A75), (5, A76)], &k, &mut ynew);
        f(t + h, &ynew, &mut k[6])?;
        for i in 0..n {
            err[i] = h
                * (E1 * k[0][i] + E3 * k[2][i] + E4 * k[3][i] + E5 * k[4][i] + E6 * k[5][i] + E7 * k[6][i]);
        }
        let e = error_norm(&y, &ynew, &err, opts);

        if e <= 1.0 {
            let mut r: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; n]);
            for i in 0..n {
                let dy = ynew[i] - y[i];
                let bspl = h * k[0][i] - dy;
                r[0][i] = y[i];
                r[1][i] = dy;
                r[2][i] = bspl;
                r[3][i] = dy - h * k[6][i] - bspl;
                r[4][i] = h
                    * (D1 * k[0][i] + D3 * k[2][i] + D4 * k[3][i] + D5 * k[4][i] + D6 * k[5][i] + D7 * k[6][i]);
            }
            sol.steps.push(Step { t0: t, h, r });
            t = if t1 - (t + h) <= 0.0 { t1 } else { t + h };
            std::mem::swap(&mut y, &mut ynew);
            k.swap(0, 6);
            let mut fac = if e == 0.0 { 5.0 } else { 0.9 * e.powf(-0.2) };
            fac = fac.clamp(0.2, 5.0);
            if last_rejected {
                fac = fac.min(1.0);
            }
            h *= fac;
            last_rejected = false;
        } else {
            h *= (0.9 * e.powf(-0.2)).max(0.2);
            last_rejected = true;
        }
    }
    sol.y1 = y;
    Ok(sol)
}
