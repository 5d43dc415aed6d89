//! Least-squares convergence rates for per-level error sequences.

use crate::error::{validation, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Model {
    /// `log e_n` against `n`; `λ̂ = exp(slope)`.
    Exponential,
    /// `log e_n` against `log n`; `γ̂ = −slope`.
    Polynomial,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateFit {
    pub model: Model,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window: (usize, usize),
}

impl RateFit {
    pub fn lambda(&self) -> f64 {
        self.slope.exp()
    }

    pub fn gamma(&self) -> f64 {
        -self.slope
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FitOutcome {
    Fit(RateFit),
    /// Some `e_n` is zero or negative, as for an exact oracle.
    BelowNoiseFloor,
}

impl FitOutcome {
    pub fn fit(&self) -> Option<&RateFit> {
        match self {
            FitOutcome::Fit(f) => Some(f),
            FitOutcome::BelowNoiseFloor => None,
        }
    }
}

pub fn fit_rate(ns: &[usize], errors: &[f64], model: Model) -> Result<FitOutcome> {
    if ns.len() != errors.len() {
        return Err(validation("level and error columns differ in length"));
    }
    if ns.len() < 4 {
        return Err(validation(format!("rate fit needs at least 4 levels, got {}", ns.len())));
    }
    if ns.contains(&0) && model == Model::Polynomial {
        return Err(validation("polynomial model needs n >= 1"));
    }
    if errors.iter().any(|e| !(*e > 0.0)) {
        return Ok(FitOutcome::BelowNoiseFloor);
    }
    let xs: Vec<f64> = ns
        .iter()
        .map(|&n| match model {
            Model::Exponential => n as f64,
            Model::Polynomial => (n as f64).ln(),
        })
        .collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(validation("rate fit needs distinct levels"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    // a constant sequence is fitted exactly
    let r_squared = if syy <= f64::EPSILON * k { 1.0 } else { (1.0 - sse / syy).clamp(0.0, 1.0) };
    let window = (*ns.iter().min().unwrap(), *ns.iter().max().unwrap());
    Ok(FitOutcome::Fit(RateFit { model, slope, intercept, r_squared, window }))
}

/// `max/min` of a positive sequence; infinite if some entry is not positive.
pub fn spread(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}
