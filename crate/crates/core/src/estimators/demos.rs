//! Monte-Carlo demonstrations that no estimator can carry a confidence set
//! without regularity assumptions: for each construction the estimator is
//! first calibrated on a benign law, then run on an adversarial law whose
//! truth lies far outside the calibrated error.

use std::f64::consts::LN_2;

use rayon::prelude::*;

use super::{
    binned_discrete_mi, DivergenceEstimator, EntropyEstimator, HistogramEntropy, HistogramMi,
    MiEstimator, TwoCellKl,
};
use crate::densities::{
    discrete_mi_adversary, kl_step_pair, low_entropy_alt, mi_adversary, prop1_mixture,
    ContaminationSpec, DensityModel,
};
use crate::error::{Error, Result};
use crate::oracle::kl_true_divergence;
use crate::rng::split;
use crate::samples::BoxSupport;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemoConfig {
    /// Required estimation error `C`, in nats.
    pub c: f64,
    pub delta: f64,
    /// Samples per trial `N`.
    pub samples: usize,
    /// Pilot runs and adversarial runs each.
    pub trials: u64,
    pub seed: u64,
    pub dim: usize,
}

impl DemoConfig {
    pub fn new(c: f64, delta: f64, samples: usize, trials: u64, seed: u64) -> Self {
        Self {
            c,
            delta,
            samples,
            trials,
            seed,
            dim: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::domain(format!("C must be positive, got {}", self.c)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::domain(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if self.samples < 1 {
            return Err(Error::domain("N must be >= 1"));
        }
        if self.trials < 10 {
            return Err(Error::domain(format!("trials must be >= 10, got {}", self.trials)));
        }
        if self.dim < 1 {
            return Err(Error::domain("dimension must be >= 1"));
        }
        Ok(())
    }

    fn pilot_seed(&self, trial: u64) -> u64 {
        split(split(self.seed, 0), trial)
    }

    fn main_seed(&self, trial: u64) -> u64 {
        split(split(self.seed, 1), trial)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub trial: u64,
    pub seed: u64,
    pub estimate: f64,
    pub failed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemoReport {
    pub trials: u64,
    /// Fraction of adversarial trials counted as failures.
    pub failure_fraction: f64,
    pub c: f64,
    pub delta: f64,
    /// The estimator's calibrated error level on the benign law.
    pub calibrated_b: f64,
    /// The adversarial law's true value.
    pub true_value: f64,
    /// Contamination probability.
    pub epsilon: f64,
    /// Size of the adversarial perturbation (`a` for entropy and mutual
    /// information, `k` for divergence).
    pub gap: f64,
    pub outcomes: Vec<TrialOutcome>,
}

/// Nearest-rank `q` quantile, `q` in `(0, 1]`.
pub fn upper_quantile(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty() && q > 0.0 && q <= 1.0);
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

fn run_trials<T>(trials: u64, f: impl Fn(u64) -> Result<T> + Sync + Send) -> Result<Vec<T>>
where
    T: Send,
{
    (0..trials).into_par_iter().map(f).collect()
}

fn report(
    cfg: &DemoConfig,
    calibrated_b: f64,
    true_value: f64,
    epsilon: f64,
    gap: f64,
    outcomes: Vec<TrialOutcome>,
) -> DemoReport {
    let failures = outcomes.iter().filter(|o| o.failed).count();
    DemoReport {
        trials: cfg.trials,
        failure_fraction: failures as f64 / outcomes.len() as f64,
        c: cfg.c,
        delta: cfg.delta,
        calibrated_b,
        true_value,
        epsilon,
        gap,
        outcomes,
    }
}

/// Contamination demo with the histogram estimator on `[-1,1]^K`.
pub fn prop1_demo(cfg: &DemoConfig) -> Result<DemoReport> {
    prop1_demo_with(cfg, &HistogramEntropy::symmetric(cfg.dim, cfg.delta))
}

/// Contamination demo against any entropy estimator.
///
/// The pilot phase calibrates `b` as the `1 - delta/2` quantile of
/// `|h_hat - h(base)|` on the tent. The mixture then uses
/// `eps = delta / (2N)` and an alternative whose entropy sits
/// `a > (b + C + ln 2) / eps` below the tent's. A trial fails when
/// `|h_hat - h| > C`.
pub fn prop1_demo_with<E: EntropyEstimator + ?Sized>(
    cfg: &DemoConfig,
    estimator: &E,
) -> Result<DemoReport> {
    cfg.validate()?;
    let base = DensityModel::tent(cfg.dim)?;
    let h_base = base.analytic_entropy().expect("tent entropy is closed-form");
    let pilot = run_trials(cfg.trials, |t| {
        let s = base.sample(cfg.samples, cfg.pilot_seed(t))?;
        Ok((estimator.estimate_entropy(&s)? - h_base).abs())
    })?;
    let b = upper_quantile(&pilot, 1.0 - cfg.delta / 2.0);

    let epsilon = cfg.delta / (2.0 * cfg.samples as f64);
    let required = (b + cfg.c + LN_2) / epsilon;
    let a = required + 1.0;
    if !a.is_finite() || !(h_base - a).is_finite() {
        return Err(Error::Infeasible { required_a: required });
    }
    let alt = low_entropy_alt(cfg.dim, h_base - a)?;
    let gap = h_base - alt.analytic_entropy().expect("scaled tent entropy is closed-form");
    if !(gap > required) {
        return Err(Error::Infeasible { required_a: required });
    }
    let mixture = prop1_mixture(&ContaminationSpec {
        base,
        alt,
        epsilon,
        gap: required,
    })?;
    let truth = mixture.analytic_entropy().expect("mixture entropy is closed-form");

    let outcomes = run_trials(cfg.trials, |t| {
        let seed = cfg.main_seed(t);
        let s = mixture.sample(cfg.samples, seed)?;
        let estimate = estimator.estimate_entropy(&s)?;
        Ok(TrialOutcome {
            trial: t,
            seed,
            estimate,
            failed: (estimate - truth).abs() > cfg.c,
        })
    })?;
    Ok(report(cfg, b, truth, epsilon, gap, outcomes))
}

/// Mutual-information demo with the histogram estimator.
pub fn mi_adversary_demo(cfg: &DemoConfig) -> Result<DemoReport> {
    mi_adversary_demo_with(cfg, &HistogramMi::for_adversary(cfg.delta))
}

/// Mutual-information demo against any estimator.
///
/// `b` is the `1 - delta/2` quantile of `|I_hat|` on independent uniform
/// pairs. The adversary uses `eps = delta / (2N)` and `a > (b + C) / eps`,
/// so its true information exceeds `b + C`. A trial fails when
/// `I_hat <= b`.
pub fn mi_adversary_demo_with<E: MiEstimator + ?Sized>(
    cfg: &DemoConfig,
    estimator: &E,
) -> Result<DemoReport> {
    cfg.validate()?;
    let uniform = DensityModel::uniform(1)?;
    let pilot = run_trials(cfg.trials, |t| {
        let seed = cfg.pilot_seed(t);
        let x = uniform.sample(cfg.samples, split(seed, 0))?;
        let z = uniform.sample(cfg.samples, split(seed, 1))?;
        Ok(estimator.estimate_mi(&x, &z)?.abs())
    })?;
    let b = upper_quantile(&pilot, 1.0 - cfg.delta / 2.0);

    let epsilon = cfg.delta / (2.0 * cfg.samples as f64);
    let required = (b + cfg.c) / epsilon;
    let a = required + 1.0;
    if !a.is_finite() {
        return Err(Error::Infeasible { required_a: required });
    }
    let adversary = mi_adversary(a, epsilon)?;
    let truth = adversary.true_mi()?;

    let outcomes = run_trials(cfg.trials, |t| {
        let seed = cfg.main_seed(t);
        let (x, y) = adversary.sample(cfg.samples, seed)?;
        let estimate = estimator.estimate_mi(&x, &y)?;
        Ok(TrialOutcome {
            trial: t,
            seed,
            estimate,
            failed: estimate <= b,
        })
    })?;
    Ok(report(cfg, b, truth, epsilon, a, outcomes))
}

/// Divergence demo with the two-cell plug-in estimator.
pub fn kl_demo(cfg: &DemoConfig) -> Result<DemoReport> {
    kl_demo_with(cfg, &TwoCellKl)
}

/// Divergence demo against any estimator.
///
/// `c` is the `1 - delta/2` quantile of `|D_hat|` on pairs of uniform
/// samples from `[-1,0]`. The step pair uses `a = ln(4N/delta)` and
/// `k = c + C + 1/e`, so `D(p || q) >= c + C` while all `2N` samples are
/// negative with probability at least `1 - delta/2`. A trial fails when
/// `D_hat <= c`.
pub fn kl_demo_with<E: DivergenceEstimator + ?Sized>(
    cfg: &DemoConfig,
    estimator: &E,
) -> Result<DemoReport> {
    cfg.validate()?;
    let negative = DensityModel::uniform_box(&BoxSupport::cube(1, -1.0, 0.0))?;
    let pilot = run_trials(cfg.trials, |t| {
        let seed = cfg.pilot_seed(t);
        let z1 = negative.sample(cfg.samples, split(seed, 0))?;
        let z2 = negative.sample(cfg.samples, split(seed, 1))?;
        Ok(estimator.estimate_divergence(&z1, &z2)?.abs())
    })?;
    let c_cal = upper_quantile(&pilot, 1.0 - cfg.delta / 2.0);

    let a = (4.0 * cfg.samples as f64 / cfg.delta).ln();
    let k = c_cal + cfg.c + (-1f64).exp();
    let (p, q) = kl_step_pair(a, k)?;
    let truth = kl_true_divergence(a, k)?;

    let outcomes = run_trials(cfg.trials, |t| {
        let seed = cfg.main_seed(t);
        let sp = p.sample(cfg.samples, split(seed, 0))?;
        let sq = q.sample(cfg.samples, split(seed, 1))?;
        let estimate = estimator.estimate_divergence(&sp, &sq)?;
        Ok(TrialOutcome {
            trial: t,
            seed,
            estimate,
            failed: estimate <= c_cal,
        })
    })?;
    Ok(report(cfg, c_cal, truth, (-a).exp(), k, outcomes))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscreteMiConfig {
    pub c: f64,
    /// Codebook length `M`.
    pub bins: u64,
    /// Label alphabet size `K`.
    pub alphabet: u32,
    pub codebooks: u64,
    pub samples: usize,
    /// Trials per codebook.
    pub trials: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodebookOutcome {
    pub codebook_seed: u64,
    pub true_mi: f64,
    pub failure_fraction: f64,
    pub mean_estimate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMiReport {
    pub per_codebook: Vec<CodebookOutcome>,
    /// Failure fraction pooled over all codebooks and trials.
    pub averaged_failure_fraction: f64,
    /// Bins of the plug-in estimator, `ceil(sqrt(N))`.
    pub steps: u64,
    /// Probability that two of the `N` draws share a codebook bin.
    pub collision_probability: f64,
    pub collision_bound: f64,
}

/// Labels `y = v_z`, `z = floor(M x)`, from random codebooks, estimated by
/// the binned plug-in. A trial fails when `|I_hat - I| > C`. Failure
/// fractions are reported per codebook and pooled.
pub fn discrete_mi_demo(cfg: &DiscreteMiConfig) -> Result<DiscreteMiReport> {
    if !(cfg.c > 0.0) || cfg.samples < 1 || cfg.trials < 1 || cfg.codebooks < 1 {
        return Err(Error::domain(
            "need C > 0 and at least one sample, trial and codebook",
        ));
    }
    let steps = (cfg.samples as f64).sqrt().ceil() as u64;
    let mut per_codebook = Vec::new();
    let mut collision = (0.0, 0.0);
    for book in 0..cfg.codebooks {
        let codebook_seed = split(split(cfg.seed, 0), book);
        let adversary = discrete_mi_adversary(cfg.bins, cfg.alphabet, codebook_seed)?;
        let truth = adversary.true_mi();
        if book == 0 {
            collision = (
                adversary.collision_probability(cfg.samples as u64),
                adversary.collision_bound(cfg.samples as u64),
            );
        }
        let estimates = run_trials(cfg.trials, |t| {
            let (x, y) = adversary.sample(cfg.samples, split(split(cfg.seed, 1 + book), t))?;
            binned_discrete_mi(&x, &y, steps)
        })?;
        let failures = estimates.iter().filter(|e| (*e - truth).abs() > cfg.c).count();
        per_codebook.push(CodebookOutcome {
            codebook_seed,
            true_mi: truth,
            failure_fraction: failures as f64 / estimates.len() as f64,
            mean_estimate: estimates.iter().sum::<f64>() / estimates.len() as f64,
        });
    }
    let averaged = per_codebook.iter().map(|c| c.failure_fraction).sum::<f64>()
        / per_codebook.len() as f64;
    Ok(DiscreteMiReport {
        per_codebook,
        averaged_failure_fraction: averaged,
        steps,
        collision_probability: collision.0,
        collision_bound: collision.1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_nearest_rank() {
        let v = [5.0, 1.0, 4.0, 2.0, 3.0];
        assert_eq!(upper_quantile(&v, 1.0), 5.0);
        assert_eq!(upper_quantile(&v, 0.95), 5.0);
        assert_eq!(upper_quantile(&v, 0.6), 3.0);
        assert_eq!(upper_quantile(&v, 0.01), 1.0);
    }

    #[test]
    fn config_validation() {
        let ok = DemoConfig::new(1.0, 0.1, 100, 10, 0);
        assert!(ok.validate().is_ok());
        assert!(DemoConfig { trials: 9, ..ok }.validate().is_err());
        assert!(DemoConfig { c: 0.0, ..ok }.validate().is_err());
        assert!(DemoConfig { delta: 1.0, ..ok }.validate().is_err());
        assert!(DemoConfig { samples: 0, ..ok }.validate().is_err());
    }

    #[test]
    fn prop1_small_run() {
        let cfg = DemoConfig::new(1.0, 0.1, 100, 60, 5);
        let r = prop1_demo(&cfg).unwrap();
        assert!((r.epsilon - 5e-4).abs() < 1e-18);
        assert!(r.gap * r.epsilon > r.calibrated_b + r.c + LN_2);
        assert!(r.failure_fraction >= 0.9, "{}", r.failure_fraction);
        assert_eq!(r, prop1_demo(&cfg).unwrap());
    }

    #[test]
    fn mi_small_run() {
        let cfg = DemoConfig::new(1.0, 0.1, 100, 60, 6);
        let r = mi_adversary_demo(&cfg).unwrap();
        assert!(r.true_value >= r.calibrated_b + r.c);
        assert!(r.failure_fraction >= 0.8, "{}", r.failure_fraction);
    }

    #[test]
    fn kl_small_run() {
        let cfg = DemoConfig::new(1.0, 0.1, 100, 50, 7);
        let r = kl_demo(&cfg).unwrap();
        assert_eq!(r.calibrated_b, 0.0);
        assert!((r.epsilon - 1.0 / 4000.0).abs() < 1e-15);
        assert!(r.true_value >= r.calibrated_b + r.c);
        assert!(r.failure_fraction >= 0.9);
    }

    #[test]
    fn discrete_demo_runs() {
        let cfg = DiscreteMiConfig {
            c: 1.0,
            bins: 1_000_000,
            alphabet: 16,
            codebooks: 3,
            samples: 100,
            trials: 20,
            seed: 1,
        };
        let r = discrete_mi_demo(&cfg).unwrap();
        assert_eq!(r.per_codebook.len(), 3);
        assert_eq!(r.steps, 10);
        assert!(r.collision_probability <= r.collision_bound);
        assert!(r.averaged_failure_fraction >= 0.9);
        for c in &r.per_codebook {
            assert!((c.true_mi - 16f64.ln()).abs() < 1e-2);
        }
    }
}
