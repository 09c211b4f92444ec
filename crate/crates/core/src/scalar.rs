//! Scalar abstraction for probability arithmetic.
//!
//! Core routines (model validation, exact enumeration, the feasibility LP)
//! are written against [`Scalar`] so the same code runs on `f64` for speed
//! and on [`num_rational::BigRational`] for exact verdicts and cross-checks.

use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};

/// Arithmetic bundle required of probability values.
///
/// Blanket-implemented; `f32`, `f64` and `BigRational` all qualify.
pub trait Scalar:
    Num + Signed + PartialOrd + Clone + FromPrimitive + ToPrimitive + std::fmt::Debug
{
}

impl<T> Scalar for T where
    T: Num + Signed + PartialOrd + Clone + FromPrimitive + ToPrimitive + std::fmt::Debug
{
}

/// Converts an `f64` into `S`, panicking on unrepresentable values.
///
/// Every finite `f64` is an exact dyadic rational, so the conversion is
/// lossless for `BigRational` and the identity for `f64`.
pub fn from_f64<S: Scalar>(v: f64) -> S {
    S::from_f64(v).expect("finite f64 must convert into scalar")
}

/// Neumaier compensated accumulator.
///
/// For floating-point scalars this keeps long probability sums accurate to
/// the last few ulps; for exact scalars the compensation term is identically
/// zero and the result is the exact sum.
#[derive(Clone, Debug)]
pub struct CompensatedSum<S> {
    sum: S,
    comp: S,
}

impl<S: Scalar> Default for CompensatedSum<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Scalar> CompensatedSum<S> {
    pub fn new() -> Self {
        CompensatedSum {
            sum: S::zero(),
            comp: S::zero(),
        }
    }

    pub fn add(&mut self, x: S) {
        let t = self.sum.clone() + x.clone();
        let lost = if self.sum.abs() >= x.abs() {
            (self.sum.clone() - t.clone()) + x
        } else {
            (x - t.clone()) + self.sum.clone()
        };
        self.comp = self.comp.clone() + lost;
        self.sum = t;
    }

    pub fn total(&self) -> S {
        self.sum.clone() + self.comp.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    #[test]
    fn compensated_sum_recovers_cancelled_term() {
        let mut s = CompensatedSum::<f64>::new();
        s.add(1e16);
        s.add(1.0);
        s.add(-1e16);
        assert_eq!(s.total(), 1.0);

        let mut naive = 0.0_f64;
        for x in [1e16, 1.0, -1e16] {
            naive += x;
        }
        assert_eq!(naive, 0.0); // the naive sum loses the 1.0
    }

    #[test]
    fn compensated_sum_is_exact_for_rationals() {
        let mut s = CompensatedSum::<BigRational>::new();
        for k in 1..=100u32 {
            s.add(BigRational::new(1.into(), k.into()));
        }
        let mut expected = BigRational::from_integer(0.into());
        for k in 1..=100u32 {
            expected += BigRational::new(1.into(), k.into());
        }
        assert_eq!(s.total(), expected);
    }
}
