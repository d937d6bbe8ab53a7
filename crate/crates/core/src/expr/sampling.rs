//! Seeded randomized identity testing.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::{EvalError, ScalarExpr};

/// Resampling budget per trial when a point hits a domain error.
const MAX_RETRIES: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainSpecError {
    #[error("interval {index} is empty or not finite: [{lo}, {hi}]")]
    BadInterval { index: usize, lo: f64, hi: f64 },
    #[error("trial count must be at least 1")]
    NoTrials,
    #[error("tolerance must be positive and finite, got {0}")]
    BadTolerance(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SamplingError {
    #[error("no admissible sample point found after {MAX_RETRIES} retries: {last}")]
    Exhausted { last: EvalError },
}

/// Per-coordinate sampling box together with the comparison settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingDomain {
    intervals: Vec<(f64, f64)>,
    trials: usize,
    tol: f64,
    seed: u64,
}

impl SamplingDomain {
    pub const DEFAULT_TRIALS: usize = 32;
    pub const DEFAULT_TOL: f64 = 1e-9;
    pub const DEFAULT_SEED: u64 = 42;

    pub fn new(intervals: Vec<(f64, f64)>) -> Result<Self, DomainSpecError> {
        for (index, &(lo, hi)) in intervals.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(DomainSpecError::BadInterval { index, lo, hi });
            }
        }
        Ok(SamplingDomain {
            intervals,
            trials: Self::DEFAULT_TRIALS,
            tol: Self::DEFAULT_TOL,
            seed: Self::DEFAULT_SEED,
        })
    }

    pub fn with_trials(mut self, trials: usize) -> Result<Self, DomainSpecError> {
        if trials == 0 {
            return Err(DomainSpecError::NoTrials);
        }
        self.trials = trials;
        Ok(self)
    }

    pub fn with_tol(mut self, tol: f64) -> Result<Self, DomainSpecError> {
        if !(tol.is_finite() && tol > 0.0) {
            return Err(DomainSpecError::BadTolerance(tol));
        }
        self.tol = tol;
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn trials(&self) -> usize {
        self.trials
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn dimension(&self) -> usize {
        self.intervals.len()
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.intervals.len()
            && point.iter().zip(&self.intervals).all(|(x, (lo, hi))| *lo <= *x && *x <= *hi)
    }

    /// Fresh sampler seeded from this domain.
    pub fn sampler(&self) -> PointSampler {
        PointSampler { rng: ChaCha8Rng::seed_from_u64(self.seed), intervals: self.intervals.clone() }
    }
}

/// Deterministic point generator; passed around explicitly, never global.
#[derive(Debug, Clone)]
pub struct PointSampler {
    rng: ChaCha8Rng,
    intervals: Vec<(f64, f64)>,
}

impl PointSampler {
    pub fn next_point(&mut self) -> Vec<f64> {
        self.intervals
            .iter()
            .map(|&(lo, hi)| lo + (hi - lo) * self.rng.gen::<f64>())
            .collect()
    }

    /// Next point at which `admissible` succeeds, with the bounded retry budget.
    pub fn next_admissible<F>(&mut self, mut admissible: F) -> Result<Vec<f64>, SamplingError>
    where
        F: FnMut(&[f64]) -> Result<(), EvalError>,
    {
        let mut last = None;
        for _ in 0..=MAX_RETRIES {
            let p = self.next_point();
            match admissible(&p) {
                Ok(()) => return Ok(p),
                Err(e) => last = Some(e),
            }
        }
        Err(SamplingError::Exhausted { last: last.expect("at least one attempt") })
    }
}

/// Outcome of a randomized comparison.
#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Equal,
    NotEqual { witness: Vec<f64>, lhs: f64, rhs: f64 },
}

impl Verdict {
    pub fn is_equal(&self) -> bool {
        matches!(self, Verdict::Equal)
    }
}

/// Compares `a` and `b` at `dom.trials` seeded points with relative tolerance `dom.tol`.
pub fn eq_randomized(a: &ScalarExpr, b: &ScalarExpr, dom: &SamplingDomain) -> Result<Verdict, SamplingError> {
    if a == b {
        return Ok(Verdict::Equal);
    }
    let mut sampler = dom.sampler();
    for _ in 0..dom.trials {
        let mut values = (0.0, 0.0);
        let point = sampler.next_admissible(|p| {
            values = (a.eval_at(p)?, b.eval_at(p)?);
            Ok(())
        })?;
        let (x, y) = values;
        if (x - y).abs() > dom.tol * (1.0 + x.abs().max(y.abs())) {
            return Ok(Verdict::NotEqual { witness: point, lhs: x, rhs: y });
        }
    }
    Ok(Verdict::Equal)
}

/// `count` seeded points at which every expression in `exprs` evaluates.
pub fn sample_points(
    exprs: &[ScalarExpr],
    dom: &SamplingDomain,
    count: usize,
) -> Result<Vec<Vec<f64>>, SamplingError> {
    let mut sampler = dom.sampler();
    (0..count)
        .map(|_| {
            sampler.next_admissible(|p| {
                for e in exprs {
                    e.eval_at(p)?;
                }
                Ok(())
            })
        })
        .collect()
}
