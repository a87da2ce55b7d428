//! Quantization of samples in `[0,1]^K` onto an `M^K` grid, sparse bin
//! counting and the corrected plug-in entropy `H(binned) - K ln M`.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::samples::Samples;
use crate::scalar::{pairwise_sum, Scalar};

/// Samples at or above this count sort their keys in parallel.
const PARALLEL_SORT_THRESHOLD: usize = 1 << 16;

/// Integer cell coordinates, each in `[0, M-1]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BinIndex(Vec<u64>);

impl BinIndex {
    pub fn new(coords: Vec<u64>) -> Self {
        Self(coords)
    }

    pub fn coords(&self) -> &[u64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Lower corner `coords / M` of the cell.
    pub fn lower_corner<F: Scalar>(&self, steps: u64) -> Vec<F> {
        let m = F::of_u64(steps);
        self.0.iter().map(|&c| F::of_u64(c) / m).collect()
    }
}

fn quantize_coord<F: Scalar>(x: F, steps: u64) -> Option<u64> {
    if !(x >= F::zero() && x <= F::one()) {
        return None;
    }
    let m = F::of_u64(steps);
    let mut cell = (m * x).floor().to_u64().unwrap_or(u64::MAX).min(steps - 1);
    // Cell c covers [c/M, (c+1)/M) with the boundaries rounded in F, so the
    // lower corner of a cell always quantizes back to that cell.
    if cell + 1 < steps && F::of_u64(cell + 1) / m <= x {
        cell += 1;
    } else if cell > 0 && F::of_u64(cell) / m > x {
        cell -= 1;
    }
    Some(cell)
}

fn out_of_support<F: Scalar>(sample: usize, coord: usize, value: F) -> Error {
    Error::OutOfSupport {
        sample,
        coord,
        value: value.to_f64_lossy(),
        lo: 0.0,
        hi: 1.0,
    }
}

fn check_steps(steps: u64) -> Result<()> {
    if steps < 1 {
        return Err(Error::domain("M must be >= 1"));
    }
    Ok(())
}

/// Maps each coordinate `x_k` to `min(floor(M x_k), M - 1)`.
pub fn quantize_index<F: Scalar>(x: &[F], steps: u64) -> Result<BinIndex> {
    check_steps(steps)?;
    x.iter()
        .enumerate()
        .map(|(k, &v)| quantize_coord(v, steps).ok_or_else(|| out_of_support(0, k, v)))
        .collect::<Result<Vec<_>>>()
        .map(BinIndex)
}

/// Bin counts over the `M^K` grid, storing only occupied cells.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseHistogram {
    dim: usize,
    steps: u64,
    counts: BTreeMap<BinIndex, u64>,
    total: u64,
}

impl SparseHistogram {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Number of samples `N`.
    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of occupied cells.
    pub fn occupied(&self) -> usize {
        self.counts.len()
    }

    pub fn get(&self, index: &BinIndex) -> u64 {
        self.counts.get(index).copied().unwrap_or(0)
    }

    /// Occupied cells in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (&BinIndex, u64)> {
        self.counts.iter().map(|(k, &c)| (k, c))
    }

    /// Key-wise sum of two histograms on the same grid.
    pub fn merge(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        if self.steps != other.steps {
            return Err(Error::domain(format!(
                "cannot merge histograms with M = {} and M = {}",
                self.steps, other.steps
            )));
        }
        let mut counts = self.counts.clone();
        for (k, &c) in &other.counts {
            *counts.entry(k.clone()).or_insert(0) += c;
        }
        Ok(Self {
            dim: self.dim,
            steps: self.steps,
            counts,
            total: self.total + other.total,
        })
    }
}

/// Mixed-radix packing of cell coordinates into one `u64`. The packing is
/// order preserving, so sorted keys are sorted bin indices.
struct Packer {
    steps: u64,
    dim: usize,
}

impl Packer {
    fn new(dim: usize, steps: u64) -> Option<Self> {
        let bits = dim as f64 * (steps as f64).log2();
        (bits < 63.0).then_some(Self { steps, dim })
    }

    fn pack(&self, coords: impl Iterator<Item = u64>) -> u64 {
        coords.fold(0, |acc, c| acc * self.steps + c)
    }

    fn unpack(&self, mut key: u64) -> BinIndex {
        let mut coords = vec![0; self.dim];
        for slot in coords.iter_mut().rev() {
            *slot = key % self.steps;
            key /= self.steps;
        }
        BinIndex(coords)
    }
}

fn sort_keys<T: Ord + Send>(keys: &mut [T]) {
    if keys.len() >= PARALLEL_SORT_THRESHOLD {
        keys.par_sort_unstable();
    } else {
        keys.sort_unstable();
    }
}

fn run_lengths<T: PartialEq>(sorted: Vec<T>) -> Vec<(T, u64)> {
    let mut out: Vec<(T, u64)> = Vec::new();
    for key in sorted {
        match out.last_mut() {
            Some((last, count)) if *last == key => *count += 1,
            _ => out.push((key, 1)),
        }
    }
    out
}

/// Bins every sample. Samples must lie in `[0,1]^K`.
///
/// Keys are sorted and run-length counted, so the result does not depend on
/// sample order or on how the sort is scheduled across threads.
pub fn build_histogram<F: Scalar>(samples: &Samples<F>, steps: u64) -> Result<SparseHistogram> {
    check_steps(steps)?;
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let dim = samples.dim();
    let quantize_row = |i: usize, row: &[F]| -> Result<Vec<u64>> {
        row.iter()
            .enumerate()
            .map(|(k, &v)| quantize_coord(v, steps).ok_or_else(|| out_of_support(i, k, v)))
            .collect()
    };
    let quantized: Result<Vec<Vec<u64>>> = samples
        .as_slice()
        .par_chunks_exact(dim)
        .enumerate()
        .map(|(i, row)| quantize_row(i, row))
        .collect();
    let quantized = match quantized {
        Ok(q) => q,
        // Report the first offending sample regardless of scheduling.
        Err(_) => {
            for (i, row) in samples.rows().enumerate() {
                quantize_row(i, row)?;
            }
            unreachable!("parallel and sequential quantization disagree")
        }
    };

    let counts: BTreeMap<BinIndex, u64> = if let Some(packer) = Packer::new(dim, steps) {
        let mut keys: Vec<u64> = quantized.into_iter().map(|c| packer.pack(c.into_iter())).collect();
        sort_keys(&mut keys);
        run_lengths(keys)
            .into_iter()
            .map(|(key, c)| (packer.unpack(key), c))
            .collect()
    } else {
        let mut keys: Vec<BinIndex> = quantized.into_iter().map(BinIndex).collect();
        sort_keys(&mut keys);
        run_lengths(keys).into_iter().collect()
    };

    Ok(SparseHistogram {
        dim,
        steps,
        counts,
        total: samples.len() as u64,
    })
}

/// Shannon entropy of the counts, `ln N - (1/N) sum c ln c`, in nats.
pub fn plugin_entropy<F: Scalar>(hist: &SparseHistogram) -> Result<F> {
    if hist.total == 0 {
        return Err(Error::EmptySample);
    }
    Ok(entropy_of_counts(hist.counts.values().copied(), hist.total))
}

pub(crate) fn entropy_of_counts<F: Scalar>(counts: impl Iterator<Item = u64>, total: u64) -> F {
    // Sorting makes the sum independent of the key order, so relabelling
    // bins (e.g. swapping coordinates) gives bit-identical entropies.
    let mut counts: Vec<u64> = counts.filter(|&c| c > 1).collect();
    counts.sort_unstable();
    let terms: Vec<F> = counts
        .into_iter()
        .map(|c| {
            let c = F::of_u64(c);
            c * c.ln()
        })
        .collect();
    let n = F::of_u64(total);
    let h = n.ln() - pairwise_sum(&terms) / n;
    h.max(F::zero())
}

/// Corrected plug-in estimate `H(binned) - K ln M` from an existing histogram.
pub fn entropy_from_histogram<F: Scalar>(hist: &SparseHistogram) -> Result<F> {
    let h = plugin_entropy::<F>(hist)?;
    Ok(h - F::of_u64(hist.dim as u64) * F::of_u64(hist.steps).ln())
}

/// Differential-entropy estimate `H(binned) - K ln M` in nats.
pub fn estimate_differential_entropy<F: Scalar>(samples: &Samples<F>, steps: u64) -> Result<F> {
    entropy_from_histogram(&build_histogram(samples, steps)?)
}
