//! Evaluable and sampleable distributions.
//!
//! Two families live here: Lipschitz test densities with closed-form
//! entropy (product tents, scaled tents, the uniform-plus-uniform trapezoid),
//! and the adversarial constructions behind the impossibility results
//! (contamination mixtures, the mutual-information and divergence
//! counterexamples). Every model is immutable and every sampler takes an
//! explicit seed.

use std::f64::consts::LN_2;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::oracle;
use crate::rng::{self, StreamRng};
use crate::samples::{BoxSupport, Samples};
use crate::scalar::{binary_entropy, xlogx, Scalar};

/// Differential entropy of the one-dimensional tent, `1/2 - ln 2`.
pub const TENT_ENTROPY_1D: f64 = 0.5 - LN_2;

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    /// Product of tents `4t` on `[0, 1/2]`, `4(1 - t)` on `[1/2, 1]`.
    Tent,
    /// Uniform on `[0,1]^K`.
    Uniform,
    /// Law of `x + w`, `x ~ U[0,1]`, `w ~ U[0, width]`.
    Trapezoid { width: f64 },
    /// Piecewise constant on unit cells `[lo + i, lo + i + 1)`.
    Step { lo: f64, levels: Vec<f64> },
    /// Piecewise constant on the `M^K` grid over `[0,1]^K`, row-major cell values.
    Grid { steps: u64, values: Arc<[f64]> },
    /// `x = offset + exp(log_scale) * inner`, coordinate-wise.
    Affine {
        inner: Box<DensityModel>,
        offset: Vec<f64>,
        log_scale: Vec<f64>,
    },
    /// `x = q * base - (1 - q) * alt` with `P(q = 1) = 1 - epsilon`.
    Mixture {
        base: Box<DensityModel>,
        alt: Box<DensityModel>,
        epsilon: f64,
    },
}

/// A density on `R^K` with bounded support.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityModel {
    dim: usize,
    kind: Kind,
}

fn tent_pdf_1d(t: f64) -> f64 {
    if !(0.0..=1.0).contains(&t) {
        0.0
    } else if t <= 0.5 {
        4.0 * t
    } else {
        4.0 * (1.0 - t)
    }
}

fn tent_cdf_1d(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t <= 0.5 {
        2.0 * t * t
    } else if t < 1.0 {
        1.0 - 2.0 * (1.0 - t) * (1.0 - t)
    } else {
        1.0
    }
}

fn tent_inverse_cdf(u: f64) -> f64 {
    if u < 0.5 {
        (u / 2.0).sqrt()
    } else {
        1.0 - ((1.0 - u) / 2.0).sqrt()
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim < 1 {
        return Err(Error::domain(format!("dimension must be >= 1, got {dim}")));
    }
    Ok(())
}

/// Index of the first cumulative weight exceeding `u`.
fn pick(cumulative: &[f64], u: f64) -> usize {
    let total = *cumulative.last().expect("non-empty weights");
    let target = u * total;
    cumulative
        .partition_point(|&c| c <= target)
        .min(cumulative.len() - 1)
}

fn cumulative(weights: &[f64]) -> Vec<f64> {
    weights
        .iter()
        .scan(0.0, |acc, &w| {
            *acc += w;
            Some(*acc)
        })
        .collect()
}

impl DensityModel {
    /// Product tent on `[0,1]^K`.
    ///
    /// Lipschitz constant `2^(K+1)` w.r.t. the l1 norm, entropy `K (1/2 - ln 2)`.
    pub fn tent(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            dim,
            kind: Kind::Tent,
        })
    }

    pub fn uniform(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self {
            dim,
            kind: Kind::Uniform,
        })
    }

    /// Uniform on an arbitrary box.
    pub fn uniform_box(support: &BoxSupport<f64>) -> Result<Self> {
        let dim = support.dim();
        let log_scale = (0..dim).map(|k| support.side(k).ln()).collect();
        Self::affine(Self::uniform(dim)?, support.lo.clone(), log_scale)
    }

    /// Density of `x + w` with `x ~ U[0,1]`, `w ~ U[0, width]`, `0 < width <= 1`.
    pub fn trapezoid(width: f64) -> Result<Self> {
        if !(width > 0.0 && width <= 1.0) {
            return Err(Error::domain(format!("trapezoid width must lie in (0, 1], got {width}")));
        }
        Ok(Self {
            dim: 1,
            kind: Kind::Trapezoid { width },
        })
    }

    /// One-dimensional piecewise-constant density with unit-width cells
    /// starting at `lo`. Levels must be non-negative and sum to one.
    pub fn step(lo: f64, levels: Vec<f64>) -> Result<Self> {
        if levels.is_empty() || levels.iter().any(|&l| !(l >= 0.0) || !l.is_finite()) {
            return Err(Error::domain("step levels must be non-negative and finite"));
        }
        let sum: f64 = levels.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Normalization(sum));
        }
        Ok(Self {
            dim: 1,
            kind: Kind::Step { lo, levels },
        })
    }

    /// Piecewise-constant density on the `M^K` grid of `[0,1]^K`. `values`
    /// holds the density value of each cell in row-major order.
    pub fn piecewise_constant(dim: usize, steps: u64, values: Vec<f64>) -> Result<Self> {
        check_dim(dim)?;
        let cells = (steps as u128).checked_pow(dim as u32);
        if steps < 1 || cells != Some(values.len() as u128) {
            return Err(Error::domain(format!(
                "expected M^K = {steps}^{dim} cell values, got {}",
                values.len()
            )));
        }
        if values.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::domain("cell values must be non-negative and finite"));
        }
        let mass: f64 = values.iter().sum::<f64>() / values.len() as f64;
        if (mass - 1.0).abs() > 1e-9 {
            return Err(Error::Normalization(mass));
        }
        Ok(Self {
            dim,
            kind: Kind::Grid {
                steps,
                values: values.into(),
            },
        })
    }

    /// Coordinate-wise affine image `offset + exp(log_scale) * x` of `inner`.
    /// Scales are carried as logarithms so extreme contractions stay representable.
    pub fn affine(inner: DensityModel, offset: Vec<f64>, log_scale: Vec<f64>) -> Result<Self> {
        if offset.len() != inner.dim || log_scale.len() != inner.dim {
            return Err(Error::DimensionMismatch {
                expected: inner.dim,
                found: offset.len().max(log_scale.len()),
            });
        }
        if log_scale.iter().chain(&offset).any(|v| !v.is_finite()) {
            return Err(Error::domain("affine offset and log-scale must be finite"));
        }
        Ok(Self {
            dim: inner.dim,
            kind: Kind::Affine {
                inner: Box::new(inner),
                offset,
                log_scale,
            },
        })
    }

    /// Tent on `[0, s]^K` with `s = exp(log_scale)`.
    pub fn scaled_tent(dim: usize, log_scale: f64) -> Result<Self> {
        Self::affine(Self::tent(dim)?, vec![0.0; dim], vec![log_scale; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn support(&self) -> BoxSupport<f64> {
        match &self.kind {
            Kind::Tent | Kind::Uniform | Kind::Grid { .. } => BoxSupport::unit(self.dim),
            Kind::Trapezoid { width } => BoxSupport::cube(1, 0.0, 1.0 + width),
            Kind::Step { lo, levels } => BoxSupport::cube(1, *lo, lo + levels.len() as f64),
            Kind::Affine {
                inner,
                offset,
                log_scale,
            } => {
                let s = inner.support();
                let (lo, hi) = (0..self.dim)
                    .map(|k| {
                        let scale = log_scale[k].exp();
                        (offset[k] + scale * s.lo[k], offset[k] + scale * s.hi[k])
                    })
                    .unzip();
                BoxSupport { lo, hi }
            }
            Kind::Mixture { base, alt, .. } => {
                let b = base.support();
                let a = alt.support();
                let lo = (0..self.dim).map(|k| b.lo[k].min(-a.hi[k])).collect();
                let hi = (0..self.dim).map(|k| b.hi[k].max(-a.lo[k])).collect();
                BoxSupport { lo, hi }
            }
        }
    }

    /// Lipschitz constant w.r.t. the l1 norm on `R^K`, when the density is
    /// Lipschitz continuous there.
    pub fn lipschitz(&self) -> Option<f64> {
        let l = match &self.kind {
            Kind::Tent => 2f64.powi(self.dim as i32 + 1),
            Kind::Trapezoid { width } => 1.0 / width,
            Kind::Uniform | Kind::Step { .. } | Kind::Grid { .. } => return None,
            Kind::Affine {
                inner, log_scale, ..
            } => {
                // p(x) = inner((x - o) / s) / prod(s): slope along axis k
                // scales by 1 / (s_k prod(s)).
                let min_log = log_scale.iter().copied().fold(f64::INFINITY, f64::min);
                let sum_log: f64 = log_scale.iter().sum();
                inner.lipschitz()? * (-(min_log + sum_log)).exp()
            }
            Kind::Mixture {
                base, alt, epsilon, ..
            } => {
                // The pieces vanish on the boundaries of their supports and
                // meet only at the origin, so the larger slope governs.
                ((1.0 - epsilon) * base.lipschitz()?).max(epsilon * alt.lipschitz()?)
            }
        };
        l.is_finite().then_some(l)
    }

    pub fn pdf(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        match &self.kind {
            Kind::Tent => x.iter().map(|&t| tent_pdf_1d(t)).product(),
            Kind::Uniform => {
                if x.iter().all(|t| (0.0..=1.0).contains(t)) {
                    1.0
                } else {
                    0.0
                }
            }
            Kind::Trapezoid { width } => {
                let t = x[0];
                if t < 0.0 || t > 1.0 + width {
                    0.0
                } else if t < *width {
                    t / width
                } else if t <= 1.0 {
                    1.0
                } else {
                    (1.0 + width - t) / width
                }
            }
            Kind::Step { lo, levels } => {
                let u = x[0] - lo;
                if u < 0.0 {
                    return 0.0;
                }
                levels.get(u.floor() as usize).copied().unwrap_or(0.0)
            }
            Kind::Grid { steps, values } => {
                let mut index = 0u64;
                for &t in x {
                    if !(0.0..=1.0).contains(&t) {
                        return 0.0;
                    }
                    let c = ((*steps as f64 * t).floor() as u64).min(steps - 1);
                    index = index * steps + c;
                }
                values[index as usize]
            }
            Kind::Affine {
                inner,
                offset,
                log_scale,
            } => {
                let u: Vec<f64> = (0..self.dim)
                    .map(|k| (x[k] - offset[k]) * (-log_scale[k]).exp())
                    .collect();
                let sum_log: f64 = log_scale.iter().sum();
                inner.pdf(&u) * (-sum_log).exp()
            }
            Kind::Mixture { base, alt, epsilon } => {
                let neg: Vec<f64> = x.iter().map(|v| -v).collect();
                (1.0 - epsilon) * base.pdf(x) + epsilon * alt.pdf(&neg)
            }
        }
    }

    /// Closed-form differential entropy in nats, when available.
    pub fn analytic_entropy(&self) -> Option<f64> {
        match &self.kind {
            Kind::Tent => Some(self.dim as f64 * TENT_ENTROPY_1D),
            Kind::Uniform => Some(0.0),
            Kind::Trapezoid { width } => Some(width / 2.0),
            Kind::Step { levels, .. } => Some(-levels.iter().map(|&l| xlogx(l)).sum::<f64>()),
            Kind::Grid { values, .. } => {
                let cells = values.len() as f64;
                Some(-values.iter().map(|&v| xlogx(v)).sum::<f64>() / cells)
            }
            Kind::Affine {
                inner, log_scale, ..
            } => Some(inner.analytic_entropy()? + log_scale.iter().sum::<f64>()),
            Kind::Mixture { base, alt, epsilon } => Some(
                binary_entropy(*epsilon)
                    + (1.0 - epsilon) * base.analytic_entropy()?
                    + epsilon * alt.analytic_entropy()?,
            ),
        }
    }

    /// Cumulative distribution function of a one-dimensional model.
    pub fn cdf(&self, t: f64) -> Option<f64> {
        if self.dim != 1 {
            return None;
        }
        Some(match &self.kind {
            Kind::Tent => tent_cdf_1d(t),
            Kind::Uniform => t.clamp(0.0, 1.0),
            Kind::Trapezoid { width: c } => {
                if t <= 0.0 {
                    0.0
                } else if t < *c {
                    t * t / (2.0 * c)
                } else if t <= 1.0 {
                    t - c / 2.0
                } else if t < 1.0 + c {
                    1.0 - (1.0 + c - t).powi(2) / (2.0 * c)
                } else {
                    1.0
                }
            }
            Kind::Step { lo, levels } => {
                let u = t - lo;
                if u <= 0.0 {
                    0.0
                } else {
                    let full = (u.floor() as usize).min(levels.len());
                    let below: f64 = levels[..full].iter().sum();
                    let partial = levels.get(full).map_or(0.0, |l| l * u.fract());
                    (below + partial).min(1.0)
                }
            }
            Kind::Grid { steps, values } => {
                let m = *steps as f64;
                let u = t.clamp(0.0, 1.0) * m;
                let full = (u.floor() as usize).min(values.len());
                let below: f64 = values[..full].iter().sum::<f64>() / m;
                let partial = values.get(full).map_or(0.0, |v| v * u.fract() / m);
                (below + partial).min(1.0)
            }
            Kind::Affine {
                inner,
                offset,
                log_scale,
            } => inner.cdf((t - offset[0]) * (-log_scale[0]).exp())?,
            Kind::Mixture { base, alt, epsilon } => {
                (1.0 - epsilon) * base.cdf(t)? + epsilon * (1.0 - alt.cdf(-t)?)
            }
        })
    }

    /// Writes one draw into `out`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match &self.kind {
            Kind::Tent => out.iter_mut().for_each(|v| *v = tent_inverse_cdf(rng.random())),
            Kind::Uniform => out.iter_mut().for_each(|v| *v = rng.random()),
            Kind::Trapezoid { width } => {
                out[0] = rng.random::<f64>() + width * rng.random::<f64>();
            }
            Kind::Step { lo, levels } => {
                let cum = cumulative(levels);
                let i = pick(&cum, rng.random());
                out[0] = lo + i as f64 + rng.random::<f64>();
            }
            Kind::Grid { steps, values } => {
                let cum = cumulative(values);
                let mut i = pick(&cum, rng.random()) as u64;
                let m = *steps as f64;
                for v in out.iter_mut().rev() {
                    *v = ((i % steps) as f64 + rng.random::<f64>()) / m;
                    i /= steps;
                }
            }
            Kind::Affine {
                inner,
                offset,
                log_scale,
            } => {
                inner.draw(rng, out);
                for k in 0..self.dim {
                    out[k] = offset[k] + log_scale[k].exp() * out[k];
                }
            }
            Kind::Mixture { base, alt, epsilon } => {
                if rng.random::<f64>() < *epsilon {
                    alt.draw(rng, out);
                    out.iter_mut().for_each(|v| *v = -*v);
                } else {
                    base.draw(rng, out);
                }
            }
        }
    }

    /// `count` i.i.d. draws from the generator.
    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Samples<f64> {
        let mut data = vec![0.0; count * self.dim];
        for row in data.chunks_exact_mut(self.dim) {
            self.draw(rng, row);
        }
        Samples::new(self.dim, data).expect("rows have model dimension")
    }

    /// `count` i.i.d. draws, deterministic in `seed`.
    pub fn sample(&self, count: usize, seed: u64) -> Result<Samples<f64>> {
        if count < 1 {
            return Err(Error::domain("sample count must be >= 1"));
        }
        Ok(self.sample_with(&mut rng::stream(seed), count))
    }
}

/// Narrow tent on `[0, s]^K` whose entropy equals `target_entropy`.
///
/// Solves `K (1/2 - ln 2) + K ln s = target_entropy`, which requires
/// `target_entropy <= K (1/2 - ln 2)`.
pub fn low_entropy_alt(dim: usize, target_entropy: f64) -> Result<DensityModel> {
    check_dim(dim)?;
    let max = dim as f64 * TENT_ENTROPY_1D;
    if !target_entropy.is_finite() {
        return Err(Error::Infeasible {
            required_a: (max - target_entropy).abs(),
        });
    }
    if target_entropy > max {
        return Err(Error::domain(format!(
            "target entropy {target_entropy} exceeds the tent maximum {max}"
        )));
    }
    let log_scale = (target_entropy / dim as f64 - TENT_ENTROPY_1D).min(0.0);
    DensityModel::scaled_tent(dim, log_scale)
}

/// Inputs of the contamination construction `x = q * base - (1 - q) * alt`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContaminationSpec {
    pub base: DensityModel,
    pub alt: DensityModel,
    /// Probability of drawing from the (reflected) alternative.
    pub epsilon: f64,
    /// Required entropy gap `|h(alt) - h(base)|`, in nats.
    pub gap: f64,
}

impl ContaminationSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.epsilon) {
            return Err(Error::domain(format!(
                "epsilon must lie in [0, 1), got {}",
                self.epsilon
            )));
        }
        if self.base.dim != self.alt.dim {
            return Err(Error::DimensionMismatch {
                expected: self.base.dim,
                found: self.alt.dim,
            });
        }
        for (name, model) in [("base", &self.base), ("alt", &self.alt)] {
            if model.support().lo.iter().any(|&l| l < 0.0) {
                return Err(Error::domain(format!(
                    "{name} support must lie in the non-negative orthant"
                )));
            }
        }
        if let (Some(hb), Some(ha)) = (self.base.analytic_entropy(), self.alt.analytic_entropy()) {
            if (ha - hb).abs() < self.gap {
                return Err(Error::domain(format!(
                    "entropy gap {} is below the required {}",
                    (ha - hb).abs(),
                    self.gap
                )));
            }
        }
        Ok(())
    }
}

/// The two-piece contamination mixture. Its entropy is
/// `H_b(eps) + (1 - eps) h(base) + eps h(alt)` because the pieces have
/// disjoint supports.
pub fn prop1_mixture(spec: &ContaminationSpec) -> Result<DensityModel> {
    spec.validate()?;
    Ok(DensityModel {
        dim: spec.base.dim,
        kind: Kind::Mixture {
            base: Box::new(spec.base.clone()),
            alt: Box::new(spec.alt.clone()),
            epsilon: spec.epsilon,
        },
    })
}

/// Joint law of `(x, y)` with `y = q z - (1 - q)(x + w)`, `x, z ~ U[0,1]`,
/// `w ~ U[0, e^-a]`, `P(q = 1) = 1 - epsilon`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiAdversary {
    pub a: f64,
    pub epsilon: f64,
}

pub fn mi_adversary(a: f64, epsilon: f64) -> Result<MiAdversary> {
    if !(a >= 0.0) || !a.is_finite() {
        return Err(Error::domain(format!("a must be finite and >= 0, got {a}")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::domain(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    Ok(MiAdversary { a, epsilon })
}

impl MiAdversary {
    pub fn noise_width(&self) -> f64 {
        (-self.a).exp()
    }

    /// `count` i.i.d. pairs `(x, y)`.
    pub fn sample(&self, count: usize, seed: u64) -> Result<(Samples<f64>, Samples<f64>)> {
        if count < 1 {
            return Err(Error::domain("sample count must be >= 1"));
        }
        let mut rng = rng::stream(seed);
        Ok(self.sample_with(&mut rng, count))
    }

    fn sample_with(&self, rng: &mut StreamRng, count: usize) -> (Samples<f64>, Samples<f64>) {
        let width = self.noise_width();
        let mut xs = Vec::with_capacity(count);
        let mut ys = Vec::with_capacity(count);
        for _ in 0..count {
            let x: f64 = rng.random();
            let z: f64 = rng.random();
            let w = width * rng.random::<f64>();
            let contaminated = rng.random::<f64>() < self.epsilon;
            xs.push(x);
            ys.push(if contaminated { -(x + w) } else { z });
        }
        (Samples::from_scalars(xs), Samples::from_scalars(ys))
    }

    /// `I(x; y) = epsilon (a + h(x + w))`, with the trapezoid entropy from quadrature.
    ///
    /// When `e^-a` underflows the trapezoid term is below `f64::MIN_POSITIVE / 2`
    /// and is taken as zero.
    pub fn true_mi(&self) -> Result<f64> {
        let width = self.noise_width();
        let h_trap = if width > 0.0 {
            oracle::trapezoid_entropy(width)?
        } else {
            0.0
        };
        Ok(self.epsilon * (self.a + h_trap))
    }

    /// The lower bound `a epsilon`.
    pub fn mi_lower_bound(&self) -> f64 {
        self.a * self.epsilon
    }
}

/// `y = v_z` with `z = 1 + floor(M x)`, `x ~ U[0,1]` and a codebook
/// `v in {1..K}^M`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMiAdversary {
    bins: u64,
    alphabet: u32,
    codebook: Vec<u32>,
}

/// Draws a uniform codebook from `seed`.
pub fn discrete_mi_adversary(bins: u64, alphabet: u32, seed: u64) -> Result<DiscreteMiAdversary> {
    if bins < 1 {
        return Err(Error::domain("number of bins M must be >= 1"));
    }
    if alphabet < 2 {
        return Err(Error::domain(format!("alphabet size must be >= 2, got {alphabet}")));
    }
    let bins_usize = usize::try_from(bins)
        .map_err(|_| Error::SizeGuard(format!("codebook of {bins} entries")))?;
    let mut rng = rng::stream(seed);
    let codebook = (0..bins_usize)
        .map(|_| rng.random_range(1..=alphabet))
        .collect();
    Ok(DiscreteMiAdversary {
        bins,
        alphabet,
        codebook,
    })
}

impl DiscreteMiAdversary {
    pub fn with_codebook(alphabet: u32, codebook: Vec<u32>) -> Result<Self> {
        if alphabet < 2 {
            return Err(Error::domain(format!("alphabet size must be >= 2, got {alphabet}")));
        }
        if codebook.is_empty() || codebook.iter().any(|&v| v < 1 || v > alphabet) {
            return Err(Error::domain("codebook letters must lie in 1..=K"));
        }
        Ok(Self {
            bins: codebook.len() as u64,
            alphabet,
            codebook,
        })
    }

    pub fn bins(&self) -> u64 {
        self.bins
    }

    pub fn alphabet(&self) -> u32 {
        self.alphabet
    }

    pub fn codebook(&self) -> &[u32] {
        &self.codebook
    }

    pub fn letter(&self, x: f64) -> u32 {
        let z = ((self.bins as f64 * x).floor() as u64).min(self.bins - 1);
        self.codebook[z as usize]
    }

    pub fn sample(&self, count: usize, seed: u64) -> Result<(Samples<f64>, Vec<u32>)> {
        if count < 1 {
            return Err(Error::domain("sample count must be >= 1"));
        }
        let mut rng = rng::stream(seed);
        let xs: Vec<f64> = (0..count).map(|_| rng.random()).collect();
        let ys = xs.iter().map(|&x| self.letter(x)).collect();
        Ok((Samples::from_scalars(xs), ys))
    }

    /// `I(x; y) = H(y)` since `y` is a function of `x`; computed from the
    /// codebook letter frequencies.
    pub fn true_mi(&self) -> f64 {
        let mut freq = vec![0u64; self.alphabet as usize + 1];
        for &v in &self.codebook {
            freq[v as usize] += 1;
        }
        let pmf: Vec<f64> = freq.iter().map(|&c| c as f64 / self.bins as f64).collect();
        -pmf.iter().map(|&p| xlogx(p)).sum::<f64>()
    }

    /// Probability that two of `count` draws share a bin, `1 - M! / (M^N (M - N)!)`.
    pub fn collision_probability(&self, count: u64) -> f64 {
        if count > self.bins {
            return 1.0;
        }
        let m = self.bins as f64;
        let log_no_collision: f64 = (1..count).map(|i| (-(i as f64) / m).ln_1p()).sum();
        -log_no_collision.exp_m1()
    }

    /// The upper bound `1 - ((M - N + 1) / M)^N`.
    pub fn collision_bound(&self, count: u64) -> f64 {
        if count > self.bins {
            return 1.0;
        }
        let m = self.bins as f64;
        let n = count as f64;
        -(n * (-(n - 1.0) / m).ln_1p()).exp_m1()
    }
}

/// The pair `p = e^-a 1[0,1) + (1 - e^-a) 1[-1,0)` and the same with `a + b`,
/// `b = k e^a`.
pub fn kl_step_pair(a: f64, k: f64) -> Result<(DensityModel, DensityModel)> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::domain(format!("a must be positive and finite, got {a}")));
    }
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::domain(format!("k must be positive and finite, got {k}")));
    }
    let b = k * a.exp();
    let level = |exponent: f64| {
        let pos = (-exponent).exp();
        let neg = -(-exponent).exp_m1();
        vec![neg, pos]
    };
    Ok((
        DensityModel::step(-1.0, level(a))?,
        DensityModel::step(-1.0, level(a + b))?,
    ))
}

/// Samples mapped onto `[0,1]^K`, with the transformed Lipschitz constant
/// and the entropy offset `sum ln s_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rescaled<F> {
    pub samples: Samples<F>,
    pub lipschitz: F,
    /// Add to an entropy estimate on the rescaled samples to estimate the
    /// entropy of the original samples.
    pub entropy_offset: F,
}

/// Maps samples in `support` onto the unit cube, `x_k -> (x_k - lo_k) / s_k`.
///
/// The rescaled density is `p(lo + s u) prod(s)`, so its l1 Lipschitz
/// constant is `L max(s) prod(s)`. Entropy estimates computed on the returned
/// samples must have `entropy_offset` added to refer to the original scale.
pub fn affine_rescale<F: Scalar>(
    samples: &Samples<F>,
    support: &BoxSupport<F>,
    lipschitz: F,
) -> Result<Rescaled<F>> {
    let support = BoxSupport::new(support.lo.clone(), support.hi.clone())?;
    support.check_samples(samples)?;
    let dim = support.dim();
    let sides: Vec<F> = (0..dim).map(|k| support.side(k)).collect();
    let mut data = Vec::with_capacity(samples.as_slice().len());
    for row in samples.rows() {
        for k in 0..dim {
            data.push((row[k] - support.lo[k]) / sides[k]);
        }
    }
    let max_side = sides.iter().copied().fold(F::zero(), F::max);
    let volume = sides.iter().copied().fold(F::one(), |a, b| a * b);
    Ok(Rescaled {
        samples: Samples::new(dim, data)?,
        lipschitz: lipschitz * max_side * volume,
        entropy_offset: sides.iter().map(|s| s.ln()).fold(F::zero(), |a, b| a + b),
    })
}
