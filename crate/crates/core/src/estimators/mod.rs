//! Certified estimators, pluggable estimator traits and the adversarial
//! demonstrations.

mod demos;
mod external;

pub use demos::{
    discrete_mi_demo, kl_demo, kl_demo_with, mi_adversary_demo, mi_adversary_demo_with,
    prop1_demo, prop1_demo_with, upper_quantile, DemoConfig, DemoReport, DiscreteMiConfig,
    DiscreteMiReport, TrialOutcome,
};
pub use external::ExternalEstimator;

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::bounds::{min_valid_m, optimize_m, total_bound, BoundParams, ConfidenceBound};
use crate::densities::{affine_rescale, DensityModel};
use crate::error::{Error, Result};
use crate::histogram::{build_histogram, entropy_from_histogram, entropy_of_counts, quantize_index};
use crate::rng;
use crate::samples::{BoxSupport, Samples};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateKind {
    Entropy,
    MutualInformation,
}

impl EstimateKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EstimateKind::Entropy => "entropy",
            EstimateKind::MutualInformation => "mutual_information",
        }
    }
}

/// One certified entropy estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyTerm<F> {
    pub estimate: F,
    pub params: BoundParams<F>,
    pub bound: ConfidenceBound<F>,
}

/// An estimate with its confidence radius: `|estimate - truth| <= bound.total`
/// with probability at least `1 - delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport<F> {
    pub kind: EstimateKind,
    pub estimate: F,
    pub bound: ConfidenceBound<F>,
    /// Parameters of the entropy term (the joint term for mutual information).
    pub params: BoundParams<F>,
    /// Seed that generated the samples, when known.
    pub seed: Option<u64>,
    /// The entropy estimates combined into `estimate`: one for entropy,
    /// `h(x), h(y), h(x,y)` for mutual information.
    pub terms: Vec<EntropyTerm<F>>,
}

impl<F: Scalar> EstimateReport<F> {
    pub fn valid_for_theorem(&self) -> bool {
        self.terms.iter().all(|t| t.params.valid_for_theorem())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn covers(&self, truth: F) -> bool {
        (self.estimate - truth).abs() <= self.bound.total
    }
}

fn check_lipschitz_delta<F: Scalar>(lipschitz: F, delta: F) -> Result<()> {
    if !(lipschitz > F::zero() && lipschitz.is_finite()) {
        return Err(Error::domain(format!("L must be positive and finite, got {lipschitz}")));
    }
    if !(delta > F::zero() && delta < F::one()) {
        return Err(Error::domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

/// `M` minimizing the bound, or the smallest valid `M` when `N = 1`.
pub fn choose_steps<F: Scalar>(dim: usize, lipschitz: F, samples: u64, delta: F) -> Result<u64> {
    if samples >= 2 {
        Ok(optimize_m(dim, lipschitz, samples, delta)?.0)
    } else {
        min_valid_m(dim, lipschitz)
    }
}

/// Certified differential entropy of samples in `[0,1]^K` from an
/// `L`-Lipschitz density.
///
/// When `steps` is `None` the bin count minimizes the bound.
pub fn estimate_entropy_certified<F: Scalar>(
    samples: &Samples<F>,
    lipschitz: F,
    delta: F,
    steps: Option<u64>,
) -> Result<EstimateReport<F>> {
    let term = entropy_term(samples, lipschitz, delta, steps)?;
    Ok(EstimateReport {
        kind: EstimateKind::Entropy,
        estimate: term.estimate,
        bound: term.bound,
        params: term.params,
        seed: None,
        terms: vec![term],
    })
}

fn entropy_term<F: Scalar>(
    samples: &Samples<F>,
    lipschitz: F,
    delta: F,
    steps: Option<u64>,
) -> Result<EntropyTerm<F>> {
    check_lipschitz_delta(lipschitz, delta)?;
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let n = samples.len() as u64;
    let dim = samples.dim();
    let steps = match steps {
        Some(m) => m,
        None => choose_steps(dim, lipschitz, n, delta)?,
    };
    let params = BoundParams::new(dim, lipschitz, steps, n, delta)?;
    let bound = total_bound(&params)?;
    let hist = build_histogram(samples, steps)?;
    Ok(EntropyTerm {
        estimate: entropy_from_histogram(&hist)?,
        params,
        bound,
    })
}

/// Certified mutual information `h(x) + h(y) - h(x,y)` for paired samples in
/// `[0,1]^K1 x [0,1]^K2`, where `L` bounds the joint density's Lipschitz
/// constant (and hence the marginals').
///
/// Each of the three entropies gets the failure budget `delta / 3` and its
/// own optimized `M`; the bound is the term-wise sum.
pub fn estimate_mi_certified<F: Scalar>(
    x: &Samples<F>,
    y: &Samples<F>,
    lipschitz: F,
    delta: F,
) -> Result<EstimateReport<F>> {
    check_lipschitz_delta(lipschitz, delta)?;
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    let joint = x.join(y)?;
    let third = delta / F::of(3.0);
    let hx = entropy_term(x, lipschitz, third, None)?;
    let hy = entropy_term(y, lipschitz, third, None)?;
    let hxy = entropy_term(&joint, lipschitz, third, None)?;
    Ok(EstimateReport {
        kind: EstimateKind::MutualInformation,
        estimate: hx.estimate + hy.estimate - hxy.estimate,
        bound: ConfidenceBound::sum([&hx.bound, &hy.bound, &hxy.bound]),
        params: hxy.params,
        seed: None,
        terms: vec![hx, hy, hxy],
    })
}

/// A differential entropy estimator.
pub trait EntropyEstimator: Sync {
    fn estimate_entropy(&self, samples: &Samples<f64>) -> Result<f64>;
}

/// A mutual information estimator for paired samples.
pub trait MiEstimator: Sync {
    fn estimate_mi(&self, x: &Samples<f64>, y: &Samples<f64>) -> Result<f64>;
}

/// A relative entropy estimator `D(p || q)` from samples of each.
pub trait DivergenceEstimator: Sync {
    fn estimate_divergence(&self, p: &Samples<f64>, q: &Samples<f64>) -> Result<f64>;
}

/// The histogram estimator applied on a box: samples are mapped onto the
/// unit cube, estimated with the bound-minimizing `M` for the assumed
/// Lipschitz constant, and the entropy offset is added back.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramEntropy {
    pub support: BoxSupport<f64>,
    /// Assumed Lipschitz constant on the original scale.
    pub lipschitz: f64,
    pub delta: f64,
}

impl HistogramEntropy {
    /// Box `[-1,1]^K` with the tent's constant `2^(K+1)`.
    pub fn symmetric(dim: usize, delta: f64) -> Self {
        Self {
            support: BoxSupport::cube(dim, -1.0, 1.0),
            lipschitz: 2f64.powi(dim as i32 + 1),
            delta,
        }
    }

    pub fn certified(&self, samples: &Samples<f64>) -> Result<EstimateReport<f64>> {
        let r = affine_rescale(samples, &self.support, self.lipschitz)?;
        let mut report = estimate_entropy_certified(&r.samples, r.lipschitz, self.delta, None)?;
        report.estimate += r.entropy_offset;
        Ok(report)
    }
}

impl EntropyEstimator for HistogramEntropy {
    fn estimate_entropy(&self, samples: &Samples<f64>) -> Result<f64> {
        Ok(self.certified(samples)?.estimate)
    }
}

/// Histogram mutual information on a product box, via
/// [`estimate_mi_certified`] after rescaling. The entropy offsets of the
/// three terms cancel.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramMi {
    pub x_support: BoxSupport<f64>,
    pub y_support: BoxSupport<f64>,
    pub lipschitz: f64,
    pub delta: f64,
}

impl HistogramMi {
    /// `x` in `[0,1]`, `y` in `[-2,1]`, assumed constant 4.
    pub fn for_adversary(delta: f64) -> Self {
        Self {
            x_support: BoxSupport::unit(1),
            y_support: BoxSupport::cube(1, -2.0, 1.0),
            lipschitz: 4.0,
            delta,
        }
    }
}

impl MiEstimator for HistogramMi {
    fn estimate_mi(&self, x: &Samples<f64>, y: &Samples<f64>) -> Result<f64> {
        let joint = self.x_support.product(&self.y_support);
        let rx = affine_rescale(x, &self.x_support, 1.0)?;
        let ry = affine_rescale(y, &self.y_support, 1.0)?;
        let sides = (0..joint.dim()).map(|k| joint.side(k));
        let max_side = sides.clone().fold(0.0, f64::max);
        let l = self.lipschitz * max_side * sides.product::<f64>();
        Ok(estimate_mi_certified(&rx.samples, &ry.samples, l, self.delta)?.estimate)
    }
}

/// Plug-in divergence between the empirical masses of `[-1,0)` and `[0,1)`,
/// with add-one-half smoothing so that empty cells stay finite.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TwoCellKl;

impl TwoCellKl {
    fn masses(samples: &Samples<f64>) -> Result<[f64; 2]> {
        if samples.dim() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: samples.dim(),
            });
        }
        if samples.is_empty() {
            return Err(Error::EmptySample);
        }
        let support = BoxSupport::cube(1, -1.0, 1.0);
        support.check_samples(samples)?;
        let positive = samples.as_slice().iter().filter(|&&v| v >= 0.0).count() as f64;
        let n = samples.len() as f64;
        Ok([
            (n - positive + 0.5) / (n + 1.0),
            (positive + 0.5) / (n + 1.0),
        ])
    }
}

impl DivergenceEstimator for TwoCellKl {
    fn estimate_divergence(&self, p: &Samples<f64>, q: &Samples<f64>) -> Result<f64> {
        let pm = Self::masses(p)?;
        let qm = Self::masses(q)?;
        Ok(pm.iter().zip(&qm).map(|(a, b)| a * (a / b).ln()).sum())
    }
}

/// Plug-in mutual information between a scalar `x` binned into `steps`
/// cells of `[0,1]` and a discrete label.
pub fn binned_discrete_mi(x: &Samples<f64>, labels: &[u32], steps: u64) -> Result<f64> {
    if x.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: labels.len(),
        });
    }
    if x.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: x.dim(),
        });
    }
    if x.is_empty() {
        return Err(Error::EmptySample);
    }
    BoxSupport::unit(1).check_samples(x)?;
    let mut cx = BTreeMap::new();
    let mut cy = BTreeMap::new();
    let mut cxy = BTreeMap::new();
    for (&v, &label) in x.as_slice().iter().zip(labels) {
        let bin = quantize_index(&[v], steps)?.coords()[0];
        *cx.entry(bin).or_insert(0u64) += 1;
        *cy.entry(label).or_insert(0u64) += 1;
        *cxy.entry((bin, label)).or_insert(0u64) += 1;
    }
    let n = x.len() as u64;
    let h = |counts: Vec<u64>| -> f64 { entropy_of_counts(counts.into_iter(), n) };
    Ok(h(cx.into_values().collect()) + h(cy.into_values().collect())
        - h(cxy.into_values().collect()))
}

/// One row of a coverage experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageRow {
    pub trial: u64,
    pub seed: u64,
    pub steps: u64,
    pub estimate: f64,
    pub truth: f64,
    pub abs_err: f64,
    pub bound: f64,
    pub covered: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    pub rows: Vec<CoverageRow>,
    /// Fraction of trials with `|estimate - truth| <= bound`.
    pub coverage: f64,
}

/// Parameters of a coverage experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageConfig {
    pub model: DensityModel,
    pub lipschitz: f64,
    pub samples: usize,
    pub delta: f64,
    pub steps: Option<u64>,
    pub trials: u64,
    pub seed: u64,
}

/// Repeats the certified estimate on fresh samples; trial `t` uses seed
/// `split(seed, t)`. Samples are mapped from the model's support box onto
/// the unit cube first.
pub fn coverage(config: &CoverageConfig) -> Result<CoverageReport> {
    let truth = config
        .model
        .analytic_entropy()
        .ok_or_else(|| Error::domain("coverage needs a model with analytic entropy"))?;
    if config.trials < 1 {
        return Err(Error::domain("trials must be >= 1"));
    }
    check_lipschitz_delta(config.lipschitz, config.delta)?;
    let support = config.model.support();
    let rows: Vec<CoverageRow> = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let seed = rng::split(config.seed, trial);
            let samples = config.model.sample(config.samples, seed)?;
            let r = affine_rescale(&samples, &support, config.lipschitz)?;
            let report =
                estimate_entropy_certified(&r.samples, r.lipschitz, config.delta, config.steps)?;
            let estimate = report.estimate + r.entropy_offset;
            let abs_err = (estimate - truth).abs();
            Ok(CoverageRow {
                trial,
                seed,
                steps: report.params.steps,
                estimate,
                truth,
                abs_err,
                bound: report.bound.total,
                covered: abs_err <= report.bound.total,
            })
        })
        .collect::<Result<_>>()?;
    let covered = rows.iter().filter(|r| r.covered).count();
    Ok(CoverageReport {
        coverage: covered as f64 / rows.len() as f64,
        rows,
    })
}
