use nalgebra::{DMatrix, DVector};

use super::JamMeasurement;

/// Fitter iteration cap.
pub const MAX_ITERATIONS: usize = 500;
/// Step halvings tried before a Gauss-Newton step is abandoned.
const MAX_HALVINGS: usize = 40;
/// Relative singular value below which a direction counts as unidentifiable.
const RANK_TOL: f64 = 1e-10;
/// Relative SSE improvement below which the fit has converged.
const SSE_TOL: f64 = 1e-14;

/// Coefficients of `y = y0 + A1·exp(-(x-x0)/t1) + A2·exp(-(x-x0)/t2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitCoefficients {
    pub y0: f64,
    pub x0: f64,
    pub a1: f64,
    pub a2: f64,
    pub t1: f64,
    pub t2: f64,
}

impl FitCoefficients {
    /// Same curve with `x0` moved by `delta` and the amplitudes rescaled to
    /// compensate.
    pub fn shifted(&self, delta: f64) -> FitCoefficients {
        FitCoefficients {
            x0: self.x0 + delta,
            a1: self.a1 * (-delta / self.t1).exp(),
            a2: self.a2 * (-delta / self.t2).exp(),
            ..*self
        }
    }
}

pub fn evaluate_fit(c: &FitCoefficients, x: f64) -> f64 {
    c.y0 + c.a1 * (-(x - c.x0) / c.t1).exp() + c.a2 * (-(x - c.x0) / c.t2).exp()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub coefficients: FitCoefficients,
    /// Measured minus fitted, in input order.
    pub residuals: Vec<f64>,
    pub rms: f64,
    pub iterations: usize,
    /// Set when the Jacobian at the solution has an unidentifiable
    /// direction (for instance `t1 == t2`).
    pub rank_deficient: bool,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FitError {
    #[error("need at least {need} points, got {got}")]
    TooFewPoints { got: usize, need: usize },
    #[error("data contains a non-finite value or a non-positive dwell time")]
    BadData,
    #[error("no convergence after {0} iterations")]
    Diverged(usize),
}

/// Parameters the fitter moves; `x0` stays at 0.
#[derive(Debug, Clone, Copy)]
struct Params([f64; 5]);

impl Params {
    fn coefficients(&self) -> FitCoefficients {
        let [y0, a1, a2, t1, t2] = self.0;
        FitCoefficients {
            y0,
            x0: 0.0,
            a1,
            a2,
            t1,
            t2,
        }
    }

    fn valid(&self) -> bool {
        self.0.iter().all(|v| v.is_finite()) && self.0[3] > 0.0 && self.0[4] > 0.0
    }
}

fn sse(p: &Params, xs: &[f64], ys: &[f64]) -> f64 {
    let c = p.coefficients();
    xs.iter().zip(ys).map(|(&x, &y)| (y - evaluate_fit(&c, x)).powi(2)).sum()
}

/// Fits the double-exponential model with `x0` pinned to 0, by
/// Gauss-Newton with step halving.
pub fn fit_double_exponential(data: &[JamMeasurement]) -> Result<FitResult, FitError> {
    let xs: Vec<f64> = data.iter().map(|m| m.dwell_time).collect();
    let ys: Vec<f64> = data.iter().map(|m| m.jam_power).collect();
    fit_points(&xs, &ys)
}

pub fn fit_points(xs: &[f64], ys: &[f64]) -> Result<FitResult, FitError> {
    const NEED: usize = 6;
    if xs.len() < NEED || xs.len() != ys.len() {
        return Err(FitError::TooFewPoints {
            got: xs.len().min(ys.len()),
            need: NEED,
        });
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) || xs.iter().any(|&x| x <= 0.0) {
        return Err(FitError::BadData);
    }
    let lo = ys.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let half = (hi - lo) / 2.0;
    let mut p = Params([lo, half, half, 0.1, 0.5]);
    let mut cur = sse(&p, xs, ys);

    for iter in 1..=MAX_ITERATIONS {
        let (jac, res) = linearize(&p, xs, ys);
        let step = solve(&jac, &res);
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let mut trial = p;
            for (t, d) in trial.0.iter_mut().zip(step.iter()) {
                *t += scale * d;
            }
            if trial.valid() {
                let s = sse(&trial, xs, ys);
                if s < cur {
                    accepted = Some((trial, s));
                    break;
                }
            }
            scale *= 0.5;
        }
        match accepted {
            Some((next, s)) => {
                let gain = (cur - s) / cur.max(f64::MIN_POSITIVE);
                p = next;
                cur = s;
                if gain < SSE_TOL || cur == 0.0 {
                    return Ok(finish(p, xs, ys, iter));
                }
            }
            // no descent along the Gauss-Newton direction: a stationary point
            None => return Ok(finish(p, xs, ys, iter)),
        }
    }
    Err(FitError::Diverged(MAX_ITERATIONS))
}

fn linearize(p: &Params, xs: &[f64], ys: &[f64]) -> (DMatrix<f64>, DVector<f64>) {
    let [y0, a1, a2, t1, t2] = p.0;
    let mut jac = DMatrix::zeros(xs.len(), 5);
    let mut res = DVector::zeros(xs.len());
    for (i, (&x, &y)) in xs.iter().zip(ys).enumerate() {
        let e1 = (-x / t1).exp();
        let e2 = (-x / t2).exp();
        res[i] = y - (y0 + a1 * e1 + a2 * e2);
        jac[(i, 0)] = 1.0;
        jac[(i, 1)] = e1;
        jac[(i, 2)] = e2;
        jac[(i, 3)] = a1 * e1 * x / (t1 * t1);
        jac[(i, 4)] = a2 * e2 * x / (t2 * t2);
    }
    (jac, res)
}

/// Minimum-norm least-squares solution of `jac · d = res`.
fn solve(jac: &DMatrix<f64>, res: &DVector<f64>) -> DVector<f64> {
    let svd = jac.clone().svd(true, true);
    let smax = svd.singular_values.max();
    svd.solve(res, smax * RANK_TOL)
        .unwrap_or_else(|_| DVector::zeros(jac.ncols()))
}

fn finish(p: Params, xs: &[f64], ys: &[f64], iterations: usize) -> FitResult {
    let c = p.coefficients();
    let residuals: Vec<f64> = xs.iter().zip(ys).map(|(&x, &y)| y - evaluate_fit(&c, x)).collect();
    let rms = (residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64).sqrt();
    let (jac, _) = linearize(&p, xs, ys);
    let sv = jac.svd(false, false).singular_values;
    let rank_deficient = sv.min() <= sv.max() * RANK_TOL;
    FitResult {
        coefficients: c,
        residuals,
        rms,
        iterations,
        rank_deficient,
    }
}
