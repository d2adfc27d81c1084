//! Least-squares fits of decay curves.

use serde::Serialize;
use thiserror::Error;

/// Minimum number of samples accepted by [`fit_decay`].
pub const MIN_FIT_POINTS: usize = 50;

/// Samples earlier than this (units of 1/J) are dropped from exponential fits.
pub const EXPONENTIAL_TRANSIENT: f64 = 2.0;

const PARAM_TOL: f64 = 1e-8;
const MAX_ITERATIONS: usize = 20_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("need at least {MIN_FIT_POINTS} samples, got {0}")]
    TooShort(usize),
    #[error("times and populations differ in length ({times} vs {values})")]
    LengthMismatch { times: usize, values: usize },
    #[error("fit did not converge after {iterations} iterations; best {best:?} with rms {rms:.3e}")]
    NoConvergence {
        iterations: usize,
        best: Vec<f64>,
        rms: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayModel {
    /// `e^{-Γt}`
    Exponential,
    /// `cos²(Ωt) e^{-Γt}`
    DampedCos2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub model: DecayModel,
    pub gamma: f64,
    pub omega: Option<f64>,
    pub rms: f64,
}

impl DecayModel {
    pub fn eval(&self, params: &[f64], t: f64) -> f64 {
        match self {
            DecayModel::Exponential => (-params[0] * t).exp(),
            DecayModel::DampedCos2 => (params[0] * t).cos().powi(2) * (-params[1] * t).exp(),
        }
    }
}

fn log_grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(move |i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
}

/// Fits `e^{-Γt}` (after the transient) or `cos²(Ωt)e^{-Γt}` (full series).
pub fn fit_decay(times: &[f64], values: &[f64], model: DecayModel) -> Result<DecayFit, FitError> {
    if times.len() != values.len() {
        return Err(FitError::LengthMismatch {
            times: times.len(),
            values: values.len(),
        });
    }
    if times.len() < MIN_FIT_POINTS {
        return Err(FitError::TooShort(times.len()));
    }
    let (ts, ps): (Vec<f64>, Vec<f64>) = match model {
        DecayModel::Exponential => times
            .iter()
            .zip(values)
            .filter(|(&t, _)| t >= EXPONENTIAL_TRANSIENT)
            .map(|(&t, &p)| (t, p))
            .unzip(),
        DecayModel::DampedCos2 => (times.to_vec(), values.to_vec()),
    };
    if ts.len() < MIN_FIT_POINTS {
        return Err(FitError::TooShort(ts.len()));
    }
    let sse = |x: &[f64]| -> f64 {
        if x.iter().any(|v| *v < 0.0) {
            return f64::INFINITY;
        }
        ts.iter()
            .zip(&ps)
            .map(|(&t, &p)| (model.eval(x, t) - p).powi(2))
            .sum()
    };

    let span = ts.last().unwrap() - ts.first().unwrap();
    let rate_hi = 50.0 / span.max(1e-12);
    let rate_lo = 1e-3 / span.max(1e-12);
    let start: Vec<f64> = match model {
        DecayModel::Exponential => log_grid(rate_lo, rate_hi, 400)
            .map(|g| vec![g])
            .min_by(|a, b| sse(a).total_cmp(&sse(b)))
            .unwrap(),
        DecayModel::DampedCos2 => {
            let mut best = (f64::INFINITY, vec![0.0, 0.0]);
            for w in log_grid(rate_lo, rate_hi, 160) {
                for g in log_grid(rate_lo, rate_hi, 80) {
                    let f = sse(&[w, g]);
                    if f < best.0 {
                        best = (f, vec![w, g]);
                    }
                }
            }
            best.1
        }
    };

    let n = ts.len() as f64;
    let (x, f) = nelder_mead(&sse, &start).map_err(|(x, f, iterations)| FitError::NoConvergence {
        iterations,
        best: x,
        rms: (f / n).sqrt(),
    })?;
    let rms = (f / n).sqrt();
    Ok(match model {
        DecayModel::Exponential => DecayFit {
            model,
            gamma: x[0],
            omega: None,
            rms,
        },
        DecayModel::DampedCos2 => DecayFit {
            model,
            gamma: x[1],
            omega: Some(x[0]),
            rms,
        },
    })
}

type Vertex = (Vec<f64>, f64);

/// Downhill simplex; stops when the simplex shrinks below the parameter
/// tolerance. On failure returns the best vertex and the iteration count.
pub(crate) fn nelder_mead(
    f: &impl Fn(&[f64]) -> f64,
    start: &[f64],
) -> Result<Vertex, (Vec<f64>, f64, usize)> {
    let dim = start.len();
    let mut simplex: Vec<Vertex> = vec![(start.to_vec(), f(start))];
    for i in 0..dim {
        let mut x = start.to_vec();
        x[i] += if x[i] != 0.0 { 0.05 * x[i] } else { 2.5e-4 };
        let fx = f(&x);
        simplex.push((x, fx));
    }
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    for _ in 0..MAX_ITERATIONS {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = &simplex[0].0;
        let diameter = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(best).map(|(a, b)| (a - b).abs() / (1.0 + b.abs())))
            .fold(0.0, f64::max);
        if diameter < PARAM_TOL {
            let (x, fx) = simplex.swap_remove(0);
            return Ok((x, fx));
        }
        let mut centroid = vec![0.0; dim];
        for (x, _) in &simplex[..dim] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / dim as f64;
            }
        }
        let worst = simplex[dim].clone();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&worst.0)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };
        let xr = along(alpha);
        let fr = f(&xr);
        if fr < simplex[0].1 {
            let xe = along(gamma);
            let fe = f(&xe);
            simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[dim - 1].1 {
            simplex[dim] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst.1 {
            let x = along(rho);
            let fx = f(&x);
            (x, fx)
        } else {
            let x = along(-rho);
            let fx = f(&x);
            (x, fx)
        };
        if fc < worst.1.min(fr) {
            simplex[dim] = (xc, fc);
            continue;
        }
        let x0 = simplex[0].0.clone();
        for v in simplex.iter_mut().skip(1) {
            for (xi, bi) in v.0.iter_mut().zip(&x0) {
                *xi = bi + sigma * (*xi - bi);
            }
            v.1 = f(&v.0);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, fx) = simplex.swap_remove(0);
    Err((x, fx, MAX_ITERATIONS))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(model: DecayModel, params: &[f64], t_max: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
        let ts: Vec<f64> = (0..n).map(|i| t_max * i as f64 / (n - 1) as f64).collect();
        let ps = ts.iter().map(|&t| model.eval(params, t)).collect();
        (ts, ps)
    }

    #[test]
    fn recovers_exponential() {
        let (ts, ps) = series(DecayModel::Exponential, &[0.04], 100.0, 1001);
        let fit = fit_decay(&ts, &ps, DecayModel::Exponential).unwrap();
        assert!((fit.gamma - 0.04).abs() < 1e-6, "{fit:?}");
        assert!(fit.rms < 1e-8);
    }

    #[test]
    fn recovers_damped_cos2() {
        let (ts, ps) = series(DecayModel::DampedCos2, &[0.0889, 0.0577], 100.0, 1001);
        let fit = fit_decay(&ts, &ps, DecayModel::DampedCos2).unwrap();
        assert!((fit.omega.unwrap() - 0.0889).abs() < 1e-6, "{fit:?}");
        assert!((fit.gamma - 0.0577).abs() < 1e-6, "{fit:?}");
    }

    #[test]
    fn short_series_rejected() {
        let (ts, ps) = series(DecayModel::Exponential, &[0.1], 10.0, 20);
        assert_eq!(
            fit_decay(&ts, &ps, DecayModel::Exponential).unwrap_err(),
            FitError::TooShort(20)
        );
    }

    #[test]
    fn transient_is_excluded() {
        // A spurious dip before t = 2 must not bias the rate.
        let (ts, mut ps) = series(DecayModel::Exponential, &[0.05], 80.0, 801);
        for (t, p) in ts.iter().zip(ps.iter_mut()) {
            if *t < EXPONENTIAL_TRANSIENT {
                *p = 0.3;
            }
        }
        let fit = fit_decay(&ts, &ps, DecayModel::Exponential).unwrap();
        assert!((fit.gamma - 0.05).abs() < 1e-6, "{fit:?}");
    }

    #[test]
    fn rosenbrock_minimum() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let (x, _) = nelder_mead(&f, &[-1.2, 1.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-6 && (x[1] - 1.0).abs() < 1e-6, "{x:?}");
    }
}
