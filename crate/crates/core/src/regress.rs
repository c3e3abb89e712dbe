//! Ordinary least squares and IRLS logistic regression with classical
//! standard errors.

use std::fmt::{self, Write as _};

use crate::data::{ColumnDescriptor, DesignMatrix};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm_inf, pinv_symmetric, Cholesky, Matrix};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Linear,
    Logistic,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Linear => "linear",
            ModelKind::Logistic => "logistic",
        })
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(ModelKind::Linear),
            "logistic" => Ok(ModelKind::Logistic),
            other => Err(Error::InvalidArgument(format!("unknown model kind {other:?}"))),
        }
    }
}

/// How the 0/1 target enters a least-squares fit. Logistic fits always use 0/1.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TargetCoding {
    #[default]
    ZeroOne,
    /// `2y - 1`. Without an intercept column this changes the fitted model,
    /// not just its scale.
    PlusMinusOne,
}

impl TargetCoding {
    pub fn code<T: Scalar>(self, y: T) -> T {
        match self {
            TargetCoding::ZeroOne => y,
            TargetCoding::PlusMinusOne => y + y - T::one(),
        }
    }

    /// The 0/1-scale threshold mapped onto the coded scale.
    fn threshold<T: Scalar>(self, t: T) -> T {
        self.code(t)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitConfig {
    pub max_iterations: usize,
    /// Gradient infinity-norm at which IRLS stops.
    pub tolerance: f64,
    /// Added to the weighted normal matrix diagonal when it fails to factor.
    pub ridge_jitter: f64,
    /// Classification cutoff on the 0/1 probability scale.
    pub threshold: f64,
    pub target_coding: TargetCoding,
    /// Fall back to a pseudo-inverse instead of rejecting rank deficiency.
    pub pseudo_inverse: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            max_iterations: 50,
            tolerance: 1e-8,
            ridge_jitter: 1e-10,
            threshold: 0.5,
            target_coding: TargetCoding::ZeroOne,
            pseudo_inverse: false,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidArgument("tolerance must be positive".into()));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::InvalidArgument("threshold must lie in (0, 1)".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// Fitted coefficients and standard errors, aligned with `columns`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelFit<T> {
    pub kind: ModelKind,
    pub columns: Vec<ColumnDescriptor>,
    pub coefficients: Vec<T>,
    pub std_errors: Vec<T>,
    /// RSS / (N - p); linear fits only.
    pub sigma2: Option<T>,
    pub n: usize,
    pub p: usize,
    pub converged: bool,
    /// IRLS drifted towards an infinite optimum (separable data).
    pub diverged: bool,
    pub iterations: usize,
    pub gradient_norm: T,
    pub target_coding: TargetCoding,
    pub threshold: T,
}

impl<T: Scalar> ModelFit<T> {
    pub fn index_of(&self, key: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.key() == key)
    }

    pub fn coefficient(&self, key: &str) -> Option<T> {
        self.index_of(key).map(|j| self.coefficients[j])
    }

    pub fn std_error(&self, key: &str) -> Option<T> {
        self.index_of(key).map(|j| self.std_errors[j])
    }

    pub fn keys(&self) -> Vec<String> {
        self.columns.iter().map(ColumnDescriptor::key).collect()
    }

    /// Predicted class for one encoded row.
    pub fn predict_row(&self, row: &[T]) -> bool {
        let eta = dot(&self.coefficients, row);
        match self.kind {
            ModelKind::Linear => eta >= self.target_coding.threshold(self.threshold),
            ModelKind::Logistic => sigmoid(eta) >= self.threshold,
        }
    }

    /// Aligned text table of feature, coefficient and standard error.
    pub fn report(&self) -> String {
        let width = self
            .columns
            .iter()
            .map(|c| c.display_name().len())
            .max()
            .unwrap_or(0)
            .max("feature".len());
        let mut out = String::new();
        let _ = writeln!(out, "{:<width$}  {:>12}  {:>10}", "feature", "coefficient", "se");
        for ((c, b), s) in self.columns.iter().zip(&self.coefficients).zip(&self.std_errors) {
            let _ = writeln!(
                out,
                "{:<width$}  {:>12.4}  {:>10.4}",
                c.display_name(),
                b.to_f64_lossy(),
                s.to_f64_lossy()
            );
        }
        out
    }
}

pub fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

// log(1 + e^x) without overflow
fn softplus<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn rank_tolerance<T: Scalar>() -> T {
    T::epsilon() * T::lit(1e4)
}

fn check_shape<T: Scalar>(design: &DesignMatrix<T>) -> Result<()> {
    let (n, p) = (design.rows(), design.cols());
    if n <= p {
        return Err(Error::TooFewRows { rows: n, columns: p });
    }
    Ok(())
}

/// Inverse of a symmetric normal matrix, honouring the rank policy.
fn normal_inverse<T: Scalar>(g: &Matrix<T>, design: &DesignMatrix<T>, cfg: &FitConfig) -> Result<Matrix<T>> {
    match Cholesky::new(g, rank_tolerance()) {
        Ok(ch) => Ok(ch.inverse()),
        Err(fail) if cfg.pseudo_inverse => {
            let _ = fail;
            Ok(pinv_symmetric(g, rank_tolerance()).0)
        }
        Err(fail) => Err(Error::RankDeficient {
            column: design.columns()[fail.column].key(),
            pivot: fail.pivot,
        }),
    }
}

/// Least squares by Cholesky of the normal equations plus one step of
/// iterative refinement.
pub fn fit_ols<T: Scalar>(design: &DesignMatrix<T>, cfg: &FitConfig) -> Result<ModelFit<T>> {
    cfg.validate()?;
    check_shape(design)?;
    let x = design.x();
    let y: Vec<T> = design.target().iter().map(|&v| cfg.target_coding.code(v)).collect();
    let g = x.weighted_gram(None);
    let rhs = x.t_matvec(&y)?;
    let inv = normal_inverse(&g, design, cfg)?;
    let mut beta = inv.matvec(&rhs)?;
    let back = g.matvec(&beta)?;
    let r: Vec<T> = rhs.iter().zip(&back).map(|(a, b)| *a - *b).collect();
    let corr = inv.matvec(&r)?;
    beta.iter_mut().zip(&corr).for_each(|(b, c)| *b += *c);
    Ok(linear_fit_at(design, cfg, beta, &inv))
}

fn linear_fit_at<T: Scalar>(design: &DesignMatrix<T>, cfg: &FitConfig, beta: Vec<T>, inv: &Matrix<T>) -> ModelFit<T> {
    let (n, p) = (design.rows(), design.cols());
    let x = design.x();
    let rss: T = (0..n)
        .map(|i| {
            let e = cfg.target_coding.code(design.target()[i]) - dot(x.row(i), &beta);
            e * e
        })
        .sum();
    let sigma2 = rss / T::from_count(n - p);
    let std_errors = inv.diag().into_iter().map(|v| (sigma2 * v.max(T::zero())).sqrt()).collect();
    let grad = normal_gradient(design, cfg, &beta);
    ModelFit {
        kind: ModelKind::Linear,
        columns: design.columns().to_vec(),
        coefficients: beta,
        std_errors,
        sigma2: Some(sigma2),
        n,
        p,
        converged: true,
        diverged: false,
        iterations: 1,
        gradient_norm: norm_inf(&grad),
        target_coding: cfg.target_coding,
        threshold: T::lit(cfg.threshold),
    }
}

fn normal_gradient<T: Scalar>(design: &DesignMatrix<T>, cfg: &FitConfig, beta: &[T]) -> Vec<T> {
    let x = design.x();
    let resid: Vec<T> = (0..design.rows())
        .map(|i| cfg.target_coding.code(design.target()[i]) - dot(x.row(i), beta))
        .collect();
    x.t_matvec(&resid).expect("shapes agree")
}

struct LogisticState<T> {
    loglik: T,
    gradient: Vec<T>,
    weights: Vec<T>,
    max_abs_eta: T,
    max_abs_resid: T,
}

fn logistic_state<T: Scalar>(design: &DesignMatrix<T>, beta: &[T]) -> LogisticState<T> {
    let x = design.x();
    let y = design.target();
    let n = design.rows();
    let mut loglik = T::zero();
    let mut resid = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let mut max_abs_eta = T::zero();
    let mut max_abs_resid = T::zero();
    for i in 0..n {
        let eta = dot(x.row(i), beta);
        max_abs_eta = max_abs_eta.max(eta.abs());
        let mu = sigmoid(eta);
        loglik += y[i] * eta - softplus(eta);
        max_abs_resid = max_abs_resid.max((y[i] - mu).abs());
        resid.push(y[i] - mu);
        weights.push(mu * (T::one() - mu));
    }
    LogisticState {
        loglik,
        gradient: x.t_matvec(&resid).expect("shapes agree"),
        weights,
        max_abs_eta,
        max_abs_resid,
    }
}

// Linear predictors this large mean fitted probabilities within e^-30 of 0/1.
const DIVERGENCE_ETA: f64 = 30.0;
// Every row fitted this closely means the classes are separated and the
// small gradient reflects an optimum at infinity.
const SEPARATION_RESID: f64 = 1e-6;

/// Maximum-likelihood logistic regression by iteratively reweighted least
/// squares with step halving.
///
/// Failure to converge is reported through `converged` / `diverged` rather
/// than as an error, so callers can inspect the last iterate.
pub fn fit_logistic<T: Scalar>(design: &DesignMatrix<T>, cfg: &FitConfig) -> Result<ModelFit<T>> {
    cfg.validate()?;
    check_shape(design)?;
    let p = design.cols();
    let x = design.x();
    let tol = T::lit(cfg.tolerance);
    let mut beta = vec![T::zero(); p];
    let mut state = logistic_state(design, &beta);
    let mut iterations = 0;
    let mut converged = norm_inf(&state.gradient) < tol;
    while !converged && iterations < cfg.max_iterations {
        iterations += 1;
        let h = x.weighted_gram(Some(&state.weights));
        let step = match Cholesky::new(&h, rank_tolerance()) {
            Ok(ch) => ch.solve(&state.gradient),
            Err(fail) => {
                let mut hj = h.clone();
                let scale = h.diag().into_iter().fold(T::one(), |m, v| m.max(v));
                hj.add_to_diagonal(T::lit(cfg.ridge_jitter) * scale);
                match Cholesky::new(&hj, T::zero()) {
                    Ok(ch) => ch.solve(&state.gradient),
                    Err(_) if cfg.pseudo_inverse => pinv_symmetric(&h, rank_tolerance()).0.matvec(&state.gradient)?,
                    Err(_) => {
                        return Err(Error::RankDeficient {
                            column: design.columns()[fail.column].key(),
                            pivot: fail.pivot,
                        })
                    }
                }
            }
        };
        let mut t = T::one();
        let mut accepted = None;
        for _ in 0..30 {
            let cand: Vec<T> = beta.iter().zip(&step).map(|(b, s)| *b + t * *s).collect();
            let st = logistic_state(design, &cand);
            if st.loglik >= state.loglik || norm_inf(&st.gradient) < tol {
                accepted = Some((cand, st));
                break;
            }
            t = t * T::lit(0.5);
        }
        let Some((b, st)) = accepted else { break };
        beta = b;
        state = st;
        converged = norm_inf(&state.gradient) < tol;
    }
    let separated = state.max_abs_resid < T::lit(SEPARATION_RESID);
    let diverged = separated || (!converged && state.max_abs_eta > T::lit(DIVERGENCE_ETA));
    let converged = converged && !separated;
    let mut fit = logistic_fit_at(design, cfg, beta, &state)?;
    fit.converged = converged;
    fit.diverged = diverged;
    fit.iterations = iterations;
    Ok(fit)
}

fn logistic_fit_at<T: Scalar>(
    design: &DesignMatrix<T>,
    cfg: &FitConfig,
    beta: Vec<T>,
    state: &LogisticState<T>,
) -> Result<ModelFit<T>> {
    let h = design.x().weighted_gram(Some(&state.weights));
    let inv = match Cholesky::new(&h, T::zero()) {
        Ok(ch) => ch.inverse(),
        Err(_) => pinv_symmetric(&h, rank_tolerance()).0,
    };
    Ok(ModelFit {
        kind: ModelKind::Logistic,
        columns: design.columns().to_vec(),
        coefficients: beta,
        std_errors: inv.diag().into_iter().map(|v| v.max(T::zero()).sqrt()).collect(),
        sigma2: None,
        n: design.rows(),
        p: design.cols(),
        converged: true,
        diverged: false,
        iterations: 0,
        gradient_norm: norm_inf(&state.gradient),
        target_coding: TargetCoding::ZeroOne,
        threshold: T::lit(cfg.threshold),
    })
}

pub fn fit<T: Scalar>(kind: ModelKind, design: &DesignMatrix<T>, cfg: &FitConfig) -> Result<ModelFit<T>> {
    match kind {
        ModelKind::Linear => fit_ols(design, cfg),
        ModelKind::Logistic => fit_logistic(design, cfg),
    }
}

/// Standard errors and diagnostics at externally supplied coefficients, for
/// models trained elsewhere (e.g. under encryption). The result is marked
/// converged: the estimator is taken as given.
pub fn fit_at<T: Scalar>(
    kind: ModelKind,
    design: &DesignMatrix<T>,
    coefficients: Vec<T>,
    cfg: &FitConfig,
) -> Result<ModelFit<T>> {
    cfg.validate()?;
    check_shape(design)?;
    if coefficients.len() != design.cols() {
        return Err(Error::ColumnMismatch(format!(
            "{} coefficients for {} columns",
            coefficients.len(),
            design.cols()
        )));
    }
    match kind {
        ModelKind::Linear => {
            let g = design.x().weighted_gram(None);
            let inv = normal_inverse(&g, design, cfg)?;
            Ok(linear_fit_at(design, cfg, coefficients, &inv))
        }
        ModelKind::Logistic => {
            let state = logistic_state(design, &coefficients);
            logistic_fit_at(design, cfg, coefficients, &state)
        }
    }
}

/// Fraction of rows whose predicted class equals the 0/1 target.
pub fn accuracy<T: Scalar>(fit: &ModelFit<T>, design: &DesignMatrix<T>) -> Result<f64> {
    if fit.columns.as_slice() != design.columns() {
        return Err(Error::ColumnMismatch(format!(
            "model has {} columns, design has {}",
            fit.columns.len(),
            design.cols()
        )));
    }
    let n = design.rows();
    if n == 0 {
        return Err(Error::InvalidArgument("accuracy of an empty design".into()));
    }
    let hits = (0..n)
        .filter(|&i| fit.predict_row(design.x().row(i)) == (design.target()[i] > T::lit(0.5)))
        .count();
    Ok(hits as f64 / n as f64)
}

/// Accuracy of always predicting the negative class.
pub fn trivial_accuracy<T: Scalar>(target: &[T]) -> f64 {
    let neg = target.iter().filter(|&&y| y <= T::lit(0.5)).count();
    neg as f64 / target.len().max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ColumnDescriptor;

    fn design(rows: &[Vec<f64>], y: &[f64]) -> DesignMatrix<f64> {
        let p = rows[0].len();
        let cols = (0..p).map(|j| ColumnDescriptor::numeric(format!("x{j}"))).collect();
        DesignMatrix::new(Matrix::from_rows(rows).unwrap(), cols, y.to_vec()).unwrap()
    }

    #[test]
    fn exact_linear_fit_has_zero_residual() {
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![1.0, i as f64, (i * i) as f64]).collect();
        let y: Vec<f64> = rows.iter().map(|r| 0.5 - 0.25 * r[1] + 0.125 * r[2]).collect();
        let f = fit_ols(&design(&rows, &y), &FitConfig::default()).unwrap();
        assert!((f.coefficients[2] - 0.125).abs() < 1e-12);
        assert!(f.sigma2.unwrap().abs() < 1e-20);
        assert!(f.std_errors.iter().all(|s| s.abs() < 1e-9));
    }

    #[test]
    fn rank_deficiency_is_rejected() {
        let rows: Vec<Vec<f64>> = (0..5).map(|i| vec![1.0, i as f64, 2.0 * i as f64]).collect();
        let y = [0.0, 1.0, 0.0, 1.0, 1.0];
        let d = design(&rows, &y);
        assert!(matches!(fit_ols(&d, &FitConfig::default()), Err(Error::RankDeficient { .. })));
        let cfg = FitConfig {
            pseudo_inverse: true,
            ..FitConfig::default()
        };
        assert!(fit_ols(&d, &cfg).is_ok());
    }

    #[test]
    fn too_few_rows() {
        let d = design(&[vec![1.0, 2.0], vec![1.0, 3.0]], &[0.0, 1.0]);
        assert!(matches!(fit_ols(&d, &FitConfig::default()), Err(Error::TooFewRows { .. })));
        assert!(matches!(fit_logistic(&d, &FitConfig::default()), Err(Error::TooFewRows { .. })));
    }

    #[test]
    fn balanced_intercept_only() {
        let rows = vec![vec![1.0]; 10];
        let y: Vec<f64> = (0..10).map(|i| (i % 2) as f64).collect();
        let f = fit_logistic(&design(&rows, &y), &FitConfig::default()).unwrap();
        assert!(f.converged);
        assert!(f.coefficients[0].abs() < 1e-12);
        // var = 1 / (N p (1-p))
        assert!((f.std_errors[0] - (1.0f64 / 2.5).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn separable_data_is_flagged() {
        let rows: Vec<Vec<f64>> = (0..8).map(|i| vec![1.0, i as f64 - 3.5]).collect();
        let y: Vec<f64> = (0..8).map(|i| if i >= 4 { 1.0 } else { 0.0 }).collect();
        let f = fit_logistic(&design(&rows, &y), &FitConfig::default()).unwrap();
        assert!(!f.converged);
        assert!(f.diverged);
        assert!(f.coefficients[1] > 5.0);
    }

    #[test]
    fn plus_minus_coding_keeps_predictions_with_intercept() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![1.0, (i as f64 * 0.7).sin(), i as f64 / 20.0]).collect();
        let y: Vec<f64> = rows.iter().map(|r| if r[1] + r[2] > 0.4 { 1.0 } else { 0.0 }).collect();
        let d = design(&rows, &y);
        let a = fit_ols(&d, &FitConfig::default()).unwrap();
        let b = fit_ols(
            &d,
            &FitConfig {
                target_coding: TargetCoding::PlusMinusOne,
                ..FitConfig::default()
            },
        )
        .unwrap();
        assert_eq!(accuracy(&a, &d).unwrap(), accuracy(&b, &d).unwrap());
        assert!((b.coefficients[1] - 2.0 * a.coefficients[1]).abs() < 1e-10);
    }

    #[test]
    fn accuracy_checks_columns() {
        let d = design(&[vec![1.0], vec![1.0], vec![1.0]], &[1.0, 1.0, 0.0]);
        let f = fit_ols(&d, &FitConfig::default()).unwrap();
        assert!((accuracy(&f, &d).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        let other = design(&[vec![1.0, 0.0], vec![1.0, 1.0], vec![1.0, 2.0]], &[1.0, 1.0, 0.0]);
        assert!(matches!(accuracy(&f, &other), Err(Error::ColumnMismatch(_))));
        assert!((trivial_accuracy(d.target()) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn fit_at_reproduces_fit() {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![1.0, (i as f64).cos(), (i as f64 * 0.3).sin()]).collect();
        let y: Vec<f64> = (0..30).map(|i| ((i * 7) % 3 == 0) as u8 as f64).collect();
        let d = design(&rows, &y);
        for kind in [ModelKind::Linear, ModelKind::Logistic] {
            let f = fit(kind, &d, &FitConfig::default()).unwrap();
            let g = fit_at(kind, &d, f.coefficients.clone(), &FitConfig::default()).unwrap();
            for (a, b) in f.std_errors.iter().zip(&g.std_errors) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
