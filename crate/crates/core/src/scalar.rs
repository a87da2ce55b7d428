use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point scalar the numeric kernels are written against: `f32` or `f64`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable in every Scalar")
    }

    /// Conversion from a count.
    fn of_u64(n: u64) -> Self {
        Self::from_u64(n).expect("u64 is representable in every Scalar")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// `x ln x` with the continuous extension `0 ln 0 = 0`.
pub fn xlogx<F: Scalar>(x: F) -> F {
    if x <= F::zero() {
        F::zero()
    } else {
        x * x.ln()
    }
}

/// Binary entropy `-e ln e - (1-e) ln(1-e)` in nats.
pub fn binary_entropy<F: Scalar>(e: F) -> F {
    -(xlogx(e) + xlogx(F::one() - e))
}

/// Sums with a fixed pairwise tree so the result depends only on the input order.
pub fn pairwise_sum<F: Scalar>(values: &[F]) -> F {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        return values.iter().fold(F::zero(), |acc, &v| acc + v);
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}
