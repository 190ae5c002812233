//! Parametric duration distributions, moment fitting and sampling.

use rand::Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};
use statrs::distribution::{self as sd, ContinuousCDF};

use crate::error::{Error, Result};

/// Minimum sample count for fitting anything other than a fixed value.
pub const MIN_FIT_SAMPLES: usize = 5;

/// Families within this many multiples of `1/sqrt(n)` of the best fit error
/// count as equally good; the one with fewer parameters wins.
const PARSIMONY_SLACK: f64 = 0.5;

/// A distribution family with its parameters. Time-like parameters are seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Family {
    Fixed { value: f64 },
    Normal { mean: f64, std_dev: f64 },
    Exponential { mean: f64 },
    Uniform { min: f64, max: f64 },
    Lognormal { mu: f64, sigma: f64 },
    Gamma { shape: f64, scale: f64 },
    Triangular { min: f64, mode: f64, max: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionSpec {
    pub family: Family,
    pub fit_error: f64,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Fixed { .. } => "fixed",
            Family::Normal { .. } => "normal",
            Family::Exponential { .. } => "exponential",
            Family::Uniform { .. } => "uniform",
            Family::Lognormal { .. } => "lognormal",
            Family::Gamma { .. } => "gamma",
            Family::Triangular { .. } => "triangular",
        }
    }

    pub fn parameter_count(&self) -> usize {
        match self {
            Family::Fixed { .. } | Family::Exponential { .. } => 1,
            Family::Triangular { .. } => 3,
            _ => 2,
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Family::Fixed { value } => value,
            Family::Normal { mean, .. } | Family::Exponential { mean } => mean,
            Family::Uniform { min, max } => (min + max) / 2.0,
            Family::Lognormal { mu, sigma } => (mu + sigma * sigma / 2.0).exp(),
            Family::Gamma { shape, scale } => shape * scale,
            Family::Triangular { min, mode, max } => (min + mode + max) / 3.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        let ok = match *self {
            Family::Fixed { value } => finite(&[value]),
            Family::Normal { mean, std_dev } => finite(&[mean, std_dev]) && std_dev > 0.0,
            Family::Exponential { mean } => finite(&[mean]) && mean > 0.0,
            Family::Uniform { min, max } => finite(&[min, max]) && min <= max,
            Family::Lognormal { mu, sigma } => finite(&[mu, sigma]) && sigma > 0.0,
            Family::Gamma { shape, scale } => finite(&[shape, scale]) && shape > 0.0 && scale > 0.0,
            Family::Triangular { min, mode, max } => {
                finite(&[min, mode, max]) && min <= mode && mode <= max && min < max
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Argument(format!(
                "invalid {} parameters: {self:?}",
                self.name()
            )))
        }
    }

    /// Cumulative distribution function. Assumes valid parameters.
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Family::Fixed { value } => f64::from(x >= value),
            Family::Normal { mean, std_dev } => {
                sd::Normal::new(mean, std_dev).map_or(f64::NAN, |d| d.cdf(x))
            }
            Family::Exponential { mean } => sd::Exp::new(1.0 / mean).map_or(f64::NAN, |d| d.cdf(x)),
            Family::Uniform { min, max } if min == max => f64::from(x >= min),
            Family::Uniform { min, max } => {
                sd::Uniform::new(min, max).map_or(f64::NAN, |d| d.cdf(x))
            }
            Family::Lognormal { mu, sigma } => {
                sd::LogNormal::new(mu, sigma).map_or(f64::NAN, |d| d.cdf(x))
            }
            Family::Gamma { shape, scale } => {
                sd::Gamma::new(shape, 1.0 / scale).map_or(f64::NAN, |d| d.cdf(x))
            }
            Family::Triangular { min, mode, max } => {
                sd::Triangular::new(min, max, mode).map_or(f64::NAN, |d| d.cdf(x))
            }
        }
    }

    /// One raw draw; may be negative for families with unbounded support.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Family::Fixed { value } => value,
            Family::Normal { mean, std_dev } => rand_distr::Normal::new(mean, std_dev)
                .expect("validated")
                .sample(rng),
            Family::Exponential { mean } => rand_distr::Exp::new(1.0 / mean)
                .expect("validated")
                .sample(rng),
            Family::Uniform { min, max } if min == max => min,
            Family::Uniform { min, max } => rng.random_range(min..max),
            Family::Lognormal { mu, sigma } => rand_distr::LogNormal::new(mu, sigma)
                .expect("validated")
                .sample(rng),
            Family::Gamma { shape, scale } => rand_distr::Gamma::new(shape, scale)
                .expect("validated")
                .sample(rng),
            Family::Triangular { min, mode, max } => rand_distr::Triangular::new(min, max, mode)
                .expect("validated")
                .sample(rng),
        }
    }
}

impl DistributionSpec {
    pub fn fixed(value: f64) -> Self {
        DistributionSpec {
            family: Family::Fixed { value },
            fit_error: 0.0,
        }
    }

    pub fn mean(&self) -> f64 {
        self.family.mean()
    }

    pub fn validate(&self) -> Result<()> {
        self.family.validate()?;
        if self.fit_error.is_nan() || self.fit_error < 0.0 {
            return Err(Error::Argument(format!(
                "fit error must be non-negative, got {}",
                self.fit_error
            )));
        }
        Ok(())
    }
}

/// Root-mean-square gap between the empirical CDF (`#{x_j <= x_i} / n`) and
/// `family`'s CDF, evaluated at each sample point. `sorted` must be ascending.
pub fn cdf_rmse(sorted: &[f64], family: &Family) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return 0.0;
    }
    let mut sum = 0.0;
    let mut i = 0;
    while i < n {
        let x = sorted[i];
        let mut j = i;
        while j < n && sorted[j] == x {
            j += 1;
        }
        let gap = j as f64 / n as f64 - family.cdf(x);
        sum += (j - i) as f64 * gap * gap;
        i = j;
    }
    (sum / n as f64).sqrt()
}

/// Method-of-moments candidates for a sample with the given summary.
pub fn moment_candidates(sorted: &[f64]) -> Vec<Family> {
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let var = sorted.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    let sd = var.sqrt();
    let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
    let mut out = vec![
        Family::Normal { mean, std_dev: sd },
        Family::Uniform {
            min: mean - 3f64.sqrt() * sd,
            max: mean + 3f64.sqrt() * sd,
        },
        Family::Triangular {
            min: lo,
            mode: (3.0 * mean - lo - hi).clamp(lo, hi),
            max: hi,
        },
    ];
    if mean > 0.0 {
        let sigma2 = (1.0 + var / (mean * mean)).ln();
        out.push(Family::Exponential { mean });
        out.push(Family::Lognormal {
            mu: mean.ln() - sigma2 / 2.0,
            sigma: sigma2.sqrt(),
        });
        out.push(Family::Gamma {
            shape: mean * mean / var,
            scale: var / mean,
        });
    }
    out.retain(|f| f.validate().is_ok());
    out
}

/// Fits every candidate family by moments and returns the best by
/// empirical-CDF error. Fewer than [`MIN_FIT_SAMPLES`] samples, or samples
/// without spread, yield `fixed(mean)`.
pub fn fit_distribution(samples: &[f64]) -> Result<DistributionSpec> {
    if samples.is_empty() {
        return Err(Error::InsufficientData("no samples to fit".into()));
    }
    if let Some(bad) = samples.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return Err(Error::Argument(format!(
            "samples must be finite and non-negative, got {bad}"
        )));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mean = sorted.iter().sum::<f64>() / sorted.len() as f64;
    if sorted.len() < MIN_FIT_SAMPLES || sorted[0] == sorted[sorted.len() - 1] {
        let family = Family::Fixed { value: mean };
        return Ok(DistributionSpec {
            family,
            fit_error: cdf_rmse(&sorted, &family),
        });
    }
    let scored: Vec<DistributionSpec> = moment_candidates(&sorted)
        .into_iter()
        .map(|family| DistributionSpec {
            family,
            fit_error: cdf_rmse(&sorted, &family),
        })
        .filter(|s| s.fit_error.is_finite())
        .collect();
    let best = scored
        .iter()
        .map(|s| s.fit_error)
        .fold(f64::INFINITY, f64::min);
    let slack = PARSIMONY_SLACK / (sorted.len() as f64).sqrt();
    scored
        .into_iter()
        .filter(|s| s.fit_error <= best + slack)
        .min_by(|a, b| {
            a.family
                .parameter_count()
                .cmp(&b.family.parameter_count())
                .then(a.fit_error.total_cmp(&b.fit_error))
        })
        .ok_or_else(|| Error::InsufficientData("no distribution family could be fitted".into()))
}
