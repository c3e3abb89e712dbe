//! Chi-squared tail probabilities.

use statrs::function::{erf::erfc, gamma::gamma_ur};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Survival function of the chi-squared distribution with `df` degrees of
/// freedom. One degree of freedom uses `erfc(sqrt(w / 2))`; other values go
/// through the regularized upper incomplete gamma function.
pub fn chi2_sf<T: Scalar>(w: T, df: u32) -> Result<T> {
    let w = w.to_f64_lossy();
    if w.is_nan() || w < 0.0 {
        return Err(Error::InvalidArgument(format!("chi-squared statistic {w} is negative")));
    }
    if df == 0 {
        return Err(Error::InvalidArgument("chi-squared needs df >= 1".into()));
    }
    let p = if w == 0.0 {
        1.0
    } else if w.is_infinite() {
        0.0
    } else if df == 1 {
        erfc((w / 2.0).sqrt())
    } else {
        gamma_ur(df as f64 / 2.0, w / 2.0)
    };
    Ok(T::lit(p.clamp(0.0, 1.0)))
}

/// Upper quantile: the `w` with `chi2_sf(w, df) = alpha`, by bisection.
pub fn chi2_isf(alpha: f64, df: u32) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha {alpha} outside (0, 1)")));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while chi2_sf(hi, df)? > alpha {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if chi2_sf(mid, df)? > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_values() {
        assert_eq!(chi2_sf(0.0f64, 1).unwrap(), 1.0);
        assert!(chi2_sf(1e6f64, 1).unwrap() < 1e-100);
        assert!(chi2_sf(-1.0f64, 1).is_err());
    }

    #[test]
    fn five_percent_quantile() {
        assert!((chi2_isf(0.05, 1).unwrap() - 3.841_458_820_694_124).abs() < 1e-9);
        assert!((chi2_isf(0.05, 3).unwrap() - 7.814_727_903_251_178).abs() < 1e-9);
    }

    #[test]
    fn df_two_is_exponential() {
        for w in [0.3f64, 2.0, 9.5] {
            assert!((chi2_sf(w, 2).unwrap() - (-w / 2.0).exp()).abs() < 1e-14);
        }
    }
}
