//! Full-batch gradient descent learners.
//!
//! These use only additions and multiplications (the logistic variant swaps
//! the sigmoid for a cubic), so the same update can be evaluated under
//! homomorphic encryption. The plaintext version here is the reference the
//! encrypted learner is checked against.

use crate::data::DesignMatrix;
use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::regress::{fit_at, FitConfig, ModelFit, ModelKind};
use crate::scalar::Scalar;

/// Least-squares cubic fit of the logistic function on [-8, 8]
/// (`scripts/fit_sigmoid.py`), constant term first.
pub const SIGMOID3: [f64; 4] = [0.5, 1.501_197_434_085_721_76e-1, 0.0, -1.592_992_985_162_199_75e-3];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GdConfig {
    pub kind: ModelKind,
    pub epochs: usize,
    pub learning_rate: f64,
    pub sigmoid: [f64; 4],
    /// Divide each column by its largest magnitude before training and undo
    /// the scaling on the returned coefficients.
    pub normalize: bool,
}

impl GdConfig {
    /// Hyperparameters for encrypted sessions: short, conservative runs.
    pub fn encrypted(kind: ModelKind) -> Self {
        GdConfig {
            kind,
            epochs: 32,
            learning_rate: 0.1,
            sigmoid: SIGMOID3,
            normalize: true,
        }
    }

    /// Hyperparameters for plaintext analysis of the full Adult profile.
    pub fn analysis(kind: ModelKind) -> Self {
        GdConfig {
            kind,
            epochs: 200,
            learning_rate: 1.0,
            sigmoid: SIGMOID3,
            normalize: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument("learning rate must be positive".into()));
        }
        Ok(())
    }
}

/// Evaluate `c0 + c1 x + c2 x^2 + c3 x^3`.
pub fn poly3<T: Scalar>(c: &[f64; 4], x: T) -> T {
    ((T::lit(c[3]) * x + T::lit(c[2])) * x + T::lit(c[1])) * x + T::lit(c[0])
}

/// Largest absolute value per column, with zero columns mapped to 1.
pub fn column_scales<T: Scalar>(x: &Matrix<T>) -> Vec<T> {
    let mut s = vec![T::zero(); x.cols()];
    for i in 0..x.rows() {
        for (m, v) in s.iter_mut().zip(x.row(i)) {
            *m = m.max(v.abs());
        }
    }
    s.into_iter().map(|v| if v > T::zero() { v } else { T::one() }).collect()
}

/// Scale every column of `x` by `1 / scales[j]`.
pub fn normalize_columns<T: Scalar>(x: &Matrix<T>, scales: &[T]) -> Matrix<T> {
    let mut z = x.clone();
    for i in 0..z.rows() {
        for j in 0..z.cols() {
            z[(i, j)] /= scales[j];
        }
    }
    z
}

/// One update `beta <- beta - (eta / N) Zᵀ (f(Z beta) - y)` where `f` is the
/// identity (linear) or the cubic sigmoid (logistic).
pub fn gd_step<T: Scalar>(z: &Matrix<T>, y: &[T], beta: &mut [T], cfg: &GdConfig) {
    let n = z.rows();
    let resid: Vec<T> = (0..n)
        .map(|i| {
            let eta = dot(z.row(i), beta);
            let pred = match cfg.kind {
                ModelKind::Linear => eta,
                ModelKind::Logistic => poly3(&cfg.sigmoid, eta),
            };
            pred - y[i]
        })
        .collect();
    let g = z.t_matvec(&resid).expect("shapes agree");
    let step = T::lit(cfg.learning_rate) / T::from_count(n);
    for (b, gj) in beta.iter_mut().zip(g) {
        *b -= step * gj;
    }
}

/// Train from zero and return raw-scale coefficients.
pub fn train_gd<T: Scalar>(x: &Matrix<T>, y: &[T], cfg: &GdConfig) -> Result<Vec<T>> {
    cfg.validate()?;
    if y.len() != x.rows() {
        return Err(Error::Dimension(format!("{} rows but {} targets", x.rows(), y.len())));
    }
    let scales = if cfg.normalize {
        column_scales(x)
    } else {
        vec![T::one(); x.cols()]
    };
    let z = normalize_columns(x, &scales);
    let mut beta = vec![T::zero(); x.cols()];
    for _ in 0..cfg.epochs {
        gd_step(&z, y, &mut beta, cfg);
    }
    Ok(beta.into_iter().zip(scales).map(|(b, s)| b / s).collect())
}

/// Gradient-descent coefficients with classical standard errors evaluated
/// at them.
pub fn fit_gd<T: Scalar>(design: &DesignMatrix<T>, gd: &GdConfig, cfg: &FitConfig) -> Result<ModelFit<T>> {
    let y: Vec<T> = match gd.kind {
        ModelKind::Linear => design.target().iter().map(|&v| cfg.target_coding.code(v)).collect(),
        ModelKind::Logistic => design.target().to_vec(),
    };
    let beta = train_gd(design.x(), &y, gd)?;
    let mut fit = fit_at(gd.kind, design, beta, cfg)?;
    fit.iterations = gd.epochs;
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_tracks_sigmoid() {
        for x in [-6.0f64, -2.0, 0.0, 1.0, 3.0] {
            let s = 1.0 / (1.0 + (-x).exp());
            assert!((poly3(&SIGMOID3, x) - s).abs() < 0.12);
        }
        assert_eq!(poly3(&SIGMOID3, 0.0f64), 0.5);
    }

    #[test]
    fn linear_gd_approaches_least_squares() {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![1.0, i as f64 / 4.0]).collect();
        let y: Vec<f64> = rows.iter().map(|r| 2.0 - 0.3 * r[1]).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let cfg = GdConfig {
            kind: ModelKind::Linear,
            epochs: 5000,
            learning_rate: 1.0,
            sigmoid: SIGMOID3,
            normalize: true,
        };
        let b = train_gd(&x, &y, &cfg).unwrap();
        assert!((b[0] - 2.0).abs() < 1e-3 && (b[1] + 0.3).abs() < 1e-3, "{b:?}");
    }

    #[test]
    fn zero_epochs_rejected() {
        let mut cfg = GdConfig::encrypted(ModelKind::Logistic);
        cfg.epochs = 0;
        assert!(cfg.validate().is_err());
    }
}
