use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `N` points in `R^K`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples<F> {
    dim: usize,
    data: Vec<F>,
}

impl<F: Scalar> Samples<F> {
    pub fn new(dim: usize, data: Vec<F>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::domain("sample dimension must be >= 1"));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: data.len() % dim,
            });
        }
        Ok(Self { dim, data })
    }

    pub fn with_capacity(dim: usize, rows: usize) -> Self {
        assert!(dim > 0, "sample dimension must be >= 1");
        Self {
            dim,
            data: Vec::with_capacity(dim * rows),
        }
    }

    pub fn from_rows<R: AsRef<[F]>>(dim: usize, rows: impl IntoIterator<Item = R>) -> Result<Self> {
        let mut out = Self::new(dim, Vec::new())?;
        for row in rows {
            out.push(row.as_ref())?;
        }
        Ok(out)
    }

    /// One-dimensional samples from scalars.
    pub fn from_scalars(values: Vec<F>) -> Self {
        Self { dim: 1, data: values }
    }

    pub fn push(&mut self, row: &[F]) -> Result<()> {
        if row.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: row.len(),
            });
        }
        self.data.extend_from_slice(row);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, F> {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[F] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<F> {
        self.data
    }

    /// Projection onto the coordinates `range`.
    pub fn columns(&self, range: std::ops::Range<usize>) -> Result<Self> {
        if range.start >= range.end || range.end > self.dim {
            return Err(Error::domain(format!(
                "column range {range:?} invalid for dimension {}",
                self.dim
            )));
        }
        let width = range.end - range.start;
        let mut data = Vec::with_capacity(width * self.len());
        for row in self.rows() {
            data.extend_from_slice(&row[range.clone()]);
        }
        Ok(Self { dim: width, data })
    }

    /// Row-wise concatenation `(x_i, y_i)`.
    pub fn join(&self, other: &Self) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: other.len(),
            });
        }
        let dim = self.dim + other.dim;
        let mut data = Vec::with_capacity(dim * self.len());
        for (a, b) in self.rows().zip(other.rows()) {
            data.extend_from_slice(a);
            data.extend_from_slice(b);
        }
        Ok(Self { dim, data })
    }

    /// Appends the rows of `other`.
    pub fn extend(&mut self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        self.data.extend_from_slice(&other.data);
        Ok(())
    }

    pub fn map(&self, f: impl Fn(F) -> F) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }
}

/// Axis-aligned box `[lo_1, hi_1] x ... x [lo_K, hi_K]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxSupport<F> {
    pub lo: Vec<F>,
    pub hi: Vec<F>,
}

impl<F: Scalar> BoxSupport<F> {
    pub fn new(lo: Vec<F>, hi: Vec<F>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                found: hi.len(),
            });
        }
        for (k, (&l, &h)) in lo.iter().zip(&hi).enumerate() {
            if !(l.is_finite() && h.is_finite() && h > l) {
                return Err(Error::domain(format!(
                    "box side {k} must have positive finite length, got [{l}, {h}]"
                )));
            }
        }
        Ok(Self { lo, hi })
    }

    pub fn unit(dim: usize) -> Self {
        Self::cube(dim, F::zero(), F::one())
    }

    pub fn cube(dim: usize, lo: F, hi: F) -> Self {
        Self {
            lo: vec![lo; dim],
            hi: vec![hi; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn side(&self, k: usize) -> F {
        self.hi[k] - self.lo[k]
    }

    pub fn volume(&self) -> F {
        (0..self.dim()).map(|k| self.side(k)).fold(F::one(), |a, b| a * b)
    }

    pub fn contains(&self, x: &[F]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(&v, (&l, &h))| v >= l && v <= h)
    }

    /// Cartesian product with another box.
    pub fn product(&self, other: &Self) -> Self {
        let mut lo = self.lo.clone();
        lo.extend_from_slice(&other.lo);
        let mut hi = self.hi.clone();
        hi.extend_from_slice(&other.hi);
        Self { lo, hi }
    }

    /// Checks every sample lies inside the box, reporting the first that does not.
    pub fn check_samples(&self, samples: &Samples<F>) -> Result<()> {
        if samples.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: samples.dim(),
            });
        }
        for (i, row) in samples.rows().enumerate() {
            for (k, &v) in row.iter().enumerate() {
                if !(v >= self.lo[k] && v <= self.hi[k]) {
                    return Err(Error::OutOfSupport {
                        sample: i,
                        coord: k,
                        value: v.to_f64_lossy(),
                        lo: self.lo[k].to_f64_lossy(),
                        hi: self.hi[k].to_f64_lossy(),
                    });
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_and_columns() {
        let s = Samples::new(2, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.row(1), &[0.3, 0.4]);
        let x = s.columns(0..1).unwrap();
        assert_eq!(x.as_slice(), &[0.1, 0.3]);
        let y = s.columns(1..2).unwrap();
        assert_eq!(x.join(&y).unwrap(), s);
    }

    #[test]
    fn ragged_data_rejected() {
        assert!(Samples::new(2, vec![0.1f64, 0.2, 0.3]).is_err());
        assert!(Samples::<f64>::new(0, vec![]).is_err());
        let mut s = Samples::<f64>::with_capacity(2, 1);
        assert!(s.push(&[1.0]).is_err());
    }

    #[test]
    fn box_validation_and_containment() {
        assert!(BoxSupport::new(vec![0.0], vec![0.0]).is_err());
        assert!(BoxSupport::new(vec![0.0, 1.0], vec![1.0]).is_err());
        let b = BoxSupport::new(vec![-1.0, 0.0], vec![1.0, 2.0]).unwrap();
        assert_eq!(b.volume(), 4.0);
        assert!(b.contains(&[1.0, 0.0]));
        assert!(!b.contains(&[1.5, 0.0]));
        let s = Samples::new(2, vec![0.0, 0.0, 0.0, 2.5]).unwrap();
        assert!(matches!(
            b.check_samples(&s),
            Err(Error::OutOfSupport { sample: 1, coord: 1, .. })
        ));
    }
}
