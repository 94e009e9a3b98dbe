//! Scalar abstraction shared by the numeric kernels.
//!
//! Geometry, decibel arithmetic, the log-distance path gain and k-means are
//! written against [`Scalar`] so they work for `f32` and `f64`. The simulator
//! itself runs in `f64` (see the aliases in the crate root).

use std::fmt::Debug;

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Scalar: Float + FloatConst + FromPrimitive + Debug + Default + Send + Sync + 'static {
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }
}

impl<T> Scalar for T where T: Float + FloatConst + FromPrimitive + Debug + Default + Send + Sync + 'static {}

/// Power ratio in dB to linear.
#[inline]
pub fn db_to_linear<T: Scalar>(db: T) -> T {
    T::lit(10.0).powf(db / T::lit(10.0))
}

/// Linear power ratio to dB.
#[inline]
pub fn linear_to_db<T: Scalar>(lin: T) -> T {
    T::lit(10.0) * lin.log10()
}

/// dBm to watts.
#[inline]
pub fn dbm_to_watts<T: Scalar>(dbm: T) -> T {
    db_to_linear(dbm - T::lit(30.0))
}

/// Watts to dBm.
#[inline]
pub fn watts_to_dbm<T: Scalar>(w: T) -> T {
    linear_to_db(w) + T::lit(30.0)
}

/// Sum of powers given in dBm, returned in dBm. Empty input is `-inf`.
pub fn sum_dbm<T: Scalar, I: IntoIterator<Item = T>>(powers: I) -> T {
    let total = powers.into_iter().fold(T::zero(), |acc, p| acc + db_to_linear(p));
    linear_to_db(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn db_roundtrip_both_precisions() {
        assert_relative_eq!(linear_to_db(db_to_linear(13.0_f64)), 13.0, epsilon = 1e-12);
        assert_relative_eq!(linear_to_db(db_to_linear(13.0_f32)), 13.0, epsilon = 1e-4);
        assert_relative_eq!(dbm_to_watts(30.0_f64), 1.0, epsilon = 1e-12);
        assert_relative_eq!(watts_to_dbm(0.001_f64), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn equal_powers_add_three_db() {
        let s: f64 = sum_dbm([-100.0, -100.0]);
        assert_relative_eq!(s, -100.0 + 10.0 * 2f64.log10(), epsilon = 1e-12);
        assert_eq!(sum_dbm(std::iter::empty::<f64>()), f64::NEG_INFINITY);
    }
}
