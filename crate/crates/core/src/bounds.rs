//! Closed-form confidence-bound arithmetic for the histogram entropy estimator.
//!
//! For an `L`-Lipschitz density on `[0,1]^K` (Lipschitz w.r.t. the l1 norm),
//! `M` bins per axis, `N` samples and failure probability `delta`, the
//! estimator `H(binned) - K ln M` lies within
//!
//! ```text
//! (LK / 2M) ln(M eta(K,L))  +  sqrt((2/N) ln(2/delta)) ln N  +  ln(1 + (M^K - 1)/N)
//! ```
//!
//! of the true differential entropy with probability greater than `1 - delta`,
//! provided `M >= 1 / (alpha eta(K,L))`. All quantities are in nats.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Above this `K` the factorial in `eta` goes through log-gamma.
const EXACT_FACTORIAL_MAX_K: usize = 20;

/// Upper limit on the number of grid candidates scanned by [`optimize_m`].
const MAX_GRID_CANDIDATES: usize = 4096;

/// `alpha = (sqrt(e^2 + 4) - e) / (2e)`, the largest gap for which
/// `|x ln x - y ln y| <= -a ln a` holds on `[0, 1]`.
pub fn alpha<F: Scalar>() -> F {
    let e = F::E();
    ((e * e + F::of(4.0)).sqrt() - e) / (F::of(2.0) * e)
}

/// `ln(n!)`, exact up to rounding for `n <= 21` and via log-gamma beyond.
fn ln_factorial(n: u64) -> f64 {
    if n <= EXACT_FACTORIAL_MAX_K as u64 + 1 {
        let fact: u128 = (2..=n as u128).product();
        (fact as f64).ln()
    } else {
        statrs::function::gamma::ln_gamma(n as f64 + 1.0)
    }
}

fn check_dim_lipschitz<F: Scalar>(dim: usize, lipschitz: F) -> Result<()> {
    if dim < 1 {
        return Err(Error::domain(format!("dimension K must be >= 1, got {dim}")));
    }
    if !(lipschitz > F::zero()) || !lipschitz.is_finite() {
        return Err(Error::domain(format!(
            "Lipschitz constant L must be positive and finite, got {lipschitz}"
        )));
    }
    Ok(())
}

/// `eta(K, L) = (1/K) (2 (K+1)! / L)^(1/(K+1))`.
pub fn eta<F: Scalar>(dim: usize, lipschitz: F) -> Result<F> {
    check_dim_lipschitz(dim, lipschitz)?;
    let k = F::of_u64(dim as u64);
    let exponent = F::one() / (k + F::one());
    if dim <= EXACT_FACTORIAL_MAX_K {
        let fact = F::of((2..=dim as u128 + 1).product::<u128>() as f64);
        Ok((F::of(2.0) * fact / lipschitz).powf(exponent) / k)
    } else {
        let ln_base =
            F::of(std::f64::consts::LN_2 + ln_factorial(dim as u64 + 1)) - lipschitz.ln();
        Ok((ln_base * exponent).exp() / k)
    }
}

/// Smallest `M` with `M >= 1 / (alpha eta(K, L))`.
pub fn min_valid_m<F: Scalar>(dim: usize, lipschitz: F) -> Result<u64> {
    let threshold = F::one() / (alpha::<F>() * eta(dim, lipschitz)?);
    let m = threshold.ceil().to_u64().ok_or_else(|| {
        Error::domain(format!("minimum valid M {threshold} does not fit in u64"))
    })?;
    Ok(m.max(1))
}

fn check_steps<F: Scalar>(dim: usize, lipschitz: F, steps: u64) -> Result<()> {
    let min_steps = min_valid_m(dim, lipschitz)?;
    if steps < min_steps {
        return Err(Error::BelowValidSteps { steps, min_steps });
    }
    Ok(())
}

/// Quantization term `(LK / 2M) ln(M eta(K,L))`.
pub fn quantization_bias<F: Scalar>(dim: usize, lipschitz: F, steps: u64) -> Result<F> {
    check_steps(dim, lipschitz, steps)?;
    Ok(quantization_bias_unchecked(dim, lipschitz, steps, eta(dim, lipschitz)?))
}

fn quantization_bias_unchecked<F: Scalar>(dim: usize, lipschitz: F, steps: u64, eta: F) -> F {
    let m = F::of_u64(steps);
    let k = F::of_u64(dim as u64);
    lipschitz * k / (F::of(2.0) * m) * (m * eta).ln()
}

fn deviation<F: Scalar>(samples: u64, delta: F) -> F {
    let n = F::of_u64(samples);
    (F::of(2.0) / n * (F::of(2.0) / delta).ln()).sqrt() * n.ln()
}

/// Concentration term `sqrt((2/N) ln(2/delta)) ln N`.
pub fn statistical_deviation<F: Scalar>(samples: u64, delta: F) -> Result<F> {
    if samples < 1 {
        return Err(Error::domain("sample count N must be >= 1"));
    }
    if !(delta > F::zero() && delta < F::one()) {
        return Err(Error::domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(deviation(samples, delta))
}

/// Empirical-distribution term `ln(1 + (M^K - 1)/N)`.
///
/// Once `K ln M` approaches the overflow threshold of `F` the algebraically
/// equal form `K ln M - ln N + ln1p((N - 1) M^-K)` is used instead.
pub fn empirical_bias<F: Scalar>(dim: usize, steps: u64, samples: u64) -> Result<F> {
    if dim < 1 || steps < 1 || samples < 1 {
        return Err(Error::domain(format!(
            "K, M, N must all be >= 1, got K = {dim}, M = {steps}, N = {samples}"
        )));
    }
    let log_cells = F::of_u64(dim as u64) * F::of_u64(steps).ln();
    if log_cells > overflow_log_threshold::<F>() {
        Ok(empirical_bias_log_form(dim, steps, samples))
    } else {
        let cells = F::of_u64(steps).powi(dim as i32);
        Ok(((cells - F::one()) / F::of_u64(samples)).ln_1p())
    }
}

fn overflow_log_threshold<F: Scalar>() -> F {
    F::max_value().ln() - F::of(10.0)
}

fn empirical_bias_log_form<F: Scalar>(dim: usize, steps: u64, samples: u64) -> F {
    let k = F::of_u64(dim as u64);
    let ln_m = F::of_u64(steps).ln();
    let n = F::of_u64(samples);
    let inv_cells = (-k * ln_m).exp();
    k * ln_m - n.ln() + ((n - F::one()) * inv_cells).ln_1p()
}

/// The tuple `(K, L, M, N, delta)` parameterizing the bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParams<F> {
    pub dim: usize,
    pub lipschitz: F,
    pub steps: u64,
    pub samples: u64,
    pub delta: F,
}

impl<F: Scalar> BoundParams<F> {
    pub fn new(dim: usize, lipschitz: F, steps: u64, samples: u64, delta: F) -> Result<Self> {
        let params = Self {
            dim,
            lipschitz,
            steps,
            samples,
            delta,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        check_dim_lipschitz(self.dim, self.lipschitz)?;
        if self.steps < 1 {
            return Err(Error::domain("M must be >= 1"));
        }
        if self.samples < 1 {
            return Err(Error::domain("N must be >= 1"));
        }
        if !(self.delta > F::zero() && self.delta < F::one()) {
            return Err(Error::domain(format!(
                "delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        Ok(())
    }

    /// Whether `M >= ceil(1 / (alpha eta(K, L)))`.
    pub fn valid_for_theorem(&self) -> bool {
        matches!(min_valid_m(self.dim, self.lipschitz), Ok(m) if self.steps >= m)
    }
}

/// The three error terms of the bound and their sum, in nats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceBound<F> {
    pub quant_bias: F,
    pub stat_dev: F,
    pub emp_bias: F,
    pub total: F,
}

impl<F: Scalar> ConfidenceBound<F> {
    pub fn from_terms(quant_bias: F, stat_dev: F, emp_bias: F) -> Self {
        Self {
            quant_bias,
            stat_dev,
            emp_bias,
            total: quant_bias + stat_dev + emp_bias,
        }
    }

    /// Term-wise sum of several bounds, e.g. for a union bound over estimates.
    pub fn sum<'a>(bounds: impl IntoIterator<Item = &'a Self>) -> Self
    where
        F: 'a,
    {
        let (q, s, e) = bounds
            .into_iter()
            .fold((F::zero(), F::zero(), F::zero()), |(q, s, e), b| {
                (q + b.quant_bias, s + b.stat_dev, e + b.emp_bias)
            });
        Self::from_terms(q, s, e)
    }
}

/// Evaluates all three terms for `params`.
pub fn total_bound<F: Scalar>(params: &BoundParams<F>) -> Result<ConfidenceBound<F>> {
    params.validate()?;
    check_steps(params.dim, params.lipschitz, params.steps)?;
    let eta = eta(params.dim, params.lipschitz)?;
    Ok(bound_unchecked(params, eta))
}

fn bound_unchecked<F: Scalar>(params: &BoundParams<F>, eta: F) -> ConfidenceBound<F> {
    let quant = quantization_bias_unchecked(params.dim, params.lipschitz, params.steps, eta);
    let stat = deviation(params.samples, params.delta);
    let emp = empirical_bias(params.dim, params.steps, params.samples)
        .expect("params validated before evaluation");
    ConfidenceBound::from_terms(quant, stat, emp)
}

/// Upper end of the `M` search: `max(min_valid_m, ceil((10 N)^(1/K)))`.
pub fn max_search_m<F: Scalar>(dim: usize, lipschitz: F, samples: u64) -> Result<u64> {
    let lo = min_valid_m(dim, lipschitz)?;
    let cap = (10.0 * samples as f64).powf(1.0 / dim as f64).ceil();
    Ok(lo.max(cap.min(u64::MAX as f64) as u64))
}

fn grid_candidates(lo: u64, hi: u64) -> Vec<u64> {
    if hi - lo < MAX_GRID_CANDIDATES as u64 {
        return (lo..=hi).collect();
    }
    let ratio = (hi as f64 / lo as f64).ln();
    let last = (MAX_GRID_CANDIDATES - 1) as f64;
    let mut out: Vec<u64> = (0..MAX_GRID_CANDIDATES)
        .map(|i| {
            let m = (lo as f64 * (ratio * i as f64 / last).exp()).round() as u64;
            m.clamp(lo, hi)
        })
        .collect();
    out.dedup();
    out
}

/// Chooses the `M` that minimizes the total bound.
///
/// The search scans up to 4096 geometrically spaced candidates between
/// `min_valid_m` and [`max_search_m`], then walks to the nearest local
/// minimum in unit steps. Ties go to the smaller `M`.
pub fn optimize_m<F: Scalar>(
    dim: usize,
    lipschitz: F,
    samples: u64,
    delta: F,
) -> Result<(u64, ConfidenceBound<F>)> {
    if samples < 2 {
        return Err(Error::domain("optimize_m needs N >= 2"));
    }
    let lo = min_valid_m(dim, lipschitz)?;
    BoundParams::new(dim, lipschitz, lo, samples, delta)?;
    let hi = max_search_m(dim, lipschitz, samples)?;
    let eta = eta(dim, lipschitz)?;
    let eval = |steps: u64| {
        let params = BoundParams {
            dim,
            lipschitz,
            steps,
            samples,
            delta,
        };
        bound_unchecked(&params, eta)
    };

    let candidates = grid_candidates(lo, hi);
    let mut best_m = candidates[0];
    let mut best = eval(best_m);
    for &m in &candidates[1..] {
        let b = eval(m);
        if b.total < best.total {
            best_m = m;
            best = b;
        }
    }

    loop {
        if best_m > lo {
            let b = eval(best_m - 1);
            if b.total <= best.total {
                best_m -= 1;
                best = b;
                continue;
            }
        }
        if best_m < hi {
            let b = eval(best_m + 1);
            if b.total < best.total {
                best_m += 1;
                best = b;
                continue;
            }
        }
        break;
    }
    Ok((best_m, best))
}

/// Bias and deviation bounds for plug-in Shannon entropy on an alphabet of
/// size `M` from `N` samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscreteEntropyBounds<F> {
    /// `|H - E[H_hat]| <= ln(1 + (M - 1)/N)`
    pub bias: F,
    /// `|H_hat - E[H_hat]| <= sqrt((2/N) ln(2/delta)) ln N` with probability `> 1 - delta`
    pub deviation: F,
}

pub fn discrete_entropy_bounds<F: Scalar>(
    alphabet: u64,
    samples: u64,
    delta: F,
) -> Result<DiscreteEntropyBounds<F>> {
    if alphabet < 1 || samples < 1 {
        return Err(Error::domain(format!(
            "alphabet size and N must be >= 1, got {alphabet} and {samples}"
        )));
    }
    if !(delta > F::zero() && delta <= F::one()) {
        return Err(Error::domain(format!("delta must lie in (0, 1], got {delta}")));
    }
    let bias = (F::of_u64(alphabet - 1) / F::of_u64(samples)).ln_1p();
    Ok(DiscreteEntropyBounds {
        bias,
        deviation: deviation(samples, delta),
    })
}
