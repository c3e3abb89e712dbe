//! Wald tests comparing shared coefficients of a model pair `M` / `M'`.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::data::{ColumnDescriptor, ColumnKind};
use crate::error::{Error, Result};
use crate::linalg::{inverse, Matrix};
use crate::regress::ModelFit;
use crate::scalar::Scalar;
use crate::stats::chi2_sf;

/// Below this squared-error sum the statistic is undefined.
pub const DEGENERATE_DENOMINATOR: f64 = 1e-12;

/// `(beta - zeta)^2 / (se_beta^2 + se_zeta^2)`, or `None` when both standard
/// errors vanish.
pub fn wald_statistic<T: Scalar>(beta: T, se_beta: T, zeta: T, se_zeta: T) -> Result<Option<T>> {
    for se in [se_beta, se_zeta] {
        if se < T::zero() || se.is_nan() {
            return Err(Error::NegativeStdError(se.to_f64_lossy()));
        }
    }
    let denom = se_beta * se_beta + se_zeta * se_zeta;
    if denom < T::lit(DEGENERATE_DENOMINATOR) {
        return Ok(None);
    }
    let d = beta - zeta;
    Ok(Some(d * d / denom))
}

/// Decimal places applied to coefficients and standard errors before the
/// statistic is formed, mimicking tests run on a printed table.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TablePrecision {
    pub coefficient_decimals: u32,
    pub std_error_decimals: u32,
}

impl TablePrecision {
    /// Four places for coefficients, three for standard errors.
    pub const PUBLISHED: TablePrecision = TablePrecision {
        coefficient_decimals: 4,
        std_error_decimals: 3,
    };
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WaldOptions {
    pub alpha: f64,
    /// Divide alpha by the number of shared columns tested.
    pub bonferroni: bool,
    /// Round inputs before testing; `None` uses full precision.
    pub precision: Option<TablePrecision>,
}

impl Default for WaldOptions {
    fn default() -> Self {
        WaldOptions {
            alpha: 0.05,
            bonferroni: false,
            precision: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WaldRow<T> {
    pub column: ColumnDescriptor,
    pub beta: T,
    pub se_beta: T,
    pub zeta: T,
    pub se_zeta: T,
    pub w: Option<T>,
    pub p: Option<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WaldReport<T> {
    /// Source feature of the extra columns in `M'`.
    pub extra_feature: String,
    pub rows: Vec<WaldRow<T>>,
    pub alpha: f64,
    pub bonferroni: bool,
    pub effective_alpha: f64,
    /// Keys of columns with `p < effective_alpha`.
    pub flagged: BTreeSet<String>,
}

fn check_pair<T: Scalar>(m: &ModelFit<T>, m_prime: &ModelFit<T>) -> Result<String> {
    if m.kind != m_prime.kind {
        return Err(Error::ColumnMismatch(format!("model kinds differ: {} vs {}", m.kind, m_prime.kind)));
    }
    for f in [m, m_prime] {
        if !f.converged {
            return Err(Error::NotConverged {
                iterations: f.iterations,
                gradient_norm: f.gradient_norm.to_f64_lossy(),
            });
        }
    }
    let prime: BTreeSet<&ColumnDescriptor> = m_prime.columns.iter().collect();
    if let Some(missing) = m.columns.iter().find(|c| !prime.contains(c)) {
        return Err(Error::ColumnMismatch(format!("{missing} is missing from the extended model")));
    }
    let base: BTreeSet<&ColumnDescriptor> = m.columns.iter().collect();
    let extra: BTreeSet<&str> = m_prime
        .columns
        .iter()
        .filter(|c| !base.contains(c))
        .map(|c| c.feature.as_str())
        .collect();
    let base_features: BTreeSet<&str> = m.columns.iter().map(|c| c.feature.as_str()).collect();
    match extra.len() {
        1 => {
            let f = *extra.iter().next().expect("one element");
            if base_features.contains(f) {
                return Err(Error::ColumnMismatch(format!(
                    "extra columns come from {f:?}, which the base model already uses"
                )));
            }
            Ok(f.to_string())
        }
        0 => Err(Error::ColumnMismatch("extended model adds no feature".into())),
        _ => Err(Error::ColumnMismatch(format!(
            "extended model adds more than one feature: {:?}",
            extra
        ))),
    }
}

/// Univariate Wald test on every shared non-intercept column of `m`
/// (trained without the extra feature) and `m_prime` (trained with it).
pub fn wald_test<T: Scalar>(m: &ModelFit<T>, m_prime: &ModelFit<T>, opts: &WaldOptions) -> Result<WaldReport<T>> {
    if !(opts.alpha > 0.0 && opts.alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha {} outside (0, 1)", opts.alpha)));
    }
    let extra_feature = check_pair(m, m_prime)?;
    let round = |v: T, d: u32| v.round_to(d);
    let mut rows = Vec::new();
    for (j, col) in m.columns.iter().enumerate() {
        if col.kind == ColumnKind::Intercept {
            continue;
        }
        let k = m_prime.columns.iter().position(|c| c == col).expect("checked by check_pair");
        let (mut beta, mut se_beta, mut zeta, mut se_zeta) =
            (m.coefficients[j], m.std_errors[j], m_prime.coefficients[k], m_prime.std_errors[k]);
        if let Some(prec) = opts.precision {
            beta = round(beta, prec.coefficient_decimals);
            zeta = round(zeta, prec.coefficient_decimals);
            se_beta = round(se_beta, prec.std_error_decimals);
            se_zeta = round(se_zeta, prec.std_error_decimals);
        }
        let w = wald_statistic(beta, se_beta, zeta, se_zeta)?;
        let p = w.map(|w| chi2_sf(w, 1)).transpose()?;
        rows.push(WaldRow {
            column: col.clone(),
            beta,
            se_beta,
            zeta,
            se_zeta,
            w,
            p,
        });
    }
    let effective_alpha = if opts.bonferroni {
        opts.alpha / rows.len().max(1) as f64
    } else {
        opts.alpha
    };
    let flagged = rows
        .iter()
        .filter(|r| r.p.is_some_and(|p| p.to_f64_lossy() < effective_alpha))
        .map(|r| r.column.key())
        .collect();
    Ok(WaldReport {
        extra_feature,
        rows,
        alpha: opts.alpha,
        bonferroni: opts.bonferroni,
        effective_alpha,
        flagged,
    })
}

fn fmt_opt<T: Scalar>(v: Option<T>, decimals: usize) -> String {
    match v {
        Some(v) => format!("{:.*}", decimals, v.to_f64_lossy()),
        None => "N/A".to_string(),
    }
}

impl<T: Scalar> WaldReport<T> {
    pub fn row(&self, key: &str) -> Option<&WaldRow<T>> {
        self.rows.iter().find(|r| r.column.key() == key)
    }

    /// Display names (dummy level names) of the flagged columns.
    pub fn flagged_names(&self) -> Vec<String> {
        self.rows
            .iter()
            .filter(|r| self.flagged.contains(&r.column.key()))
            .map(|r| r.column.display_name().to_string())
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("feature,column,beta,se_beta,zeta,se_zeta,W,p,flagged\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.column.display_name(),
                r.column.key(),
                r.beta,
                r.se_beta,
                r.zeta,
                r.se_zeta,
                r.w.map_or("N/A".into(), |v| v.to_string()),
                r.p.map_or("N/A".into(), |v| v.to_string()),
                self.flagged.contains(&r.column.key()),
            );
        }
        out
    }

    /// Aligned table: feature, beta, se, zeta, se, W, p.
    pub fn to_text(&self) -> String {
        let width = self
            .rows
            .iter()
            .map(|r| r.column.display_name().len())
            .max()
            .unwrap_or(0)
            .max("Feature".len());
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<width$}  {:>9}  {:>7}  {:>9}  {:>7}  {:>9}  {:>7}",
            "Feature", "beta", "se", "zeta", "se", "W", "p"
        );
        for r in &self.rows {
            let mark = if self.flagged.contains(&r.column.key()) { " *" } else { "" };
            let _ = writeln!(
                out,
                "{:<width$}  {:>9.4}  {:>7.4}  {:>9.4}  {:>7.4}  {:>9}  {:>7}{}",
                r.column.display_name(),
                r.beta.to_f64_lossy(),
                r.se_beta.to_f64_lossy(),
                r.zeta.to_f64_lossy(),
                r.se_zeta.to_f64_lossy(),
                fmt_opt(r.w, 4),
                fmt_opt(r.p, 4),
                mark
            );
        }
        let _ = writeln!(
            out,
            "extra feature: {}; alpha {}{}; flagged: {}",
            self.extra_feature,
            self.effective_alpha,
            if self.bonferroni { " (Bonferroni)" } else { "" },
            if self.flagged.is_empty() {
                "none".to_string()
            } else {
                self.flagged_names().join(", ")
            }
        );
        out
    }
}

/// Inputs of the general multi-constraint Wald test
/// `(H θ - c)ᵀ (H D^½ Σ D^½ Hᵀ)⁻¹ (H θ - c)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneralWaldInput<T> {
    pub h: Matrix<T>,
    pub c: Vec<T>,
    pub theta_hat: Vec<T>,
    pub sigma_hat: Matrix<T>,
    /// Diagonal of the degrees-of-freedom scaling matrix.
    pub d: Vec<T>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeneralWaldResult<T> {
    pub w: T,
    pub df: u32,
    pub p: T,
}

/// Reciprocal-condition floor for the inner matrix.
const SINGULAR_RCOND: f64 = 1e-13;

pub fn general_wald<T: Scalar>(input: &GeneralWaldInput<T>) -> Result<GeneralWaldResult<T>> {
    let GeneralWaldInput {
        h,
        c,
        theta_hat,
        sigma_hat,
        d,
    } = input;
    let (k, m) = (h.rows(), h.cols());
    if k == 0 {
        return Err(Error::Dimension("H has no rows".into()));
    }
    if theta_hat.len() != m || c.len() != k || d.len() != m || sigma_hat.rows() != m || sigma_hat.cols() != m {
        return Err(Error::Dimension(format!(
            "H is {k}x{m}, c has {}, theta {}, D {}, Sigma {}x{}",
            c.len(),
            theta_hat.len(),
            d.len(),
            sigma_hat.rows(),
            sigma_hat.cols()
        )));
    }
    if d.iter().any(|v| !(*v > T::zero())) {
        return Err(Error::InvalidArgument("D must have positive diagonal entries".into()));
    }
    if !sigma_hat.is_symmetric(T::lit(1e-9)) {
        return Err(Error::InvalidArgument("Sigma is not symmetric".into()));
    }
    // H D^½
    let mut hd = h.clone();
    for i in 0..k {
        for j in 0..m {
            hd[(i, j)] *= d[j].sqrt();
        }
    }
    let inner = hd.matmul(sigma_hat)?.matmul(&hd.transpose())?;
    let (inv, rcond) = inverse(&inner).map_err(|_| Error::Singular)?;
    if rcond.to_f64_lossy() < SINGULAR_RCOND {
        return Err(Error::Singular);
    }
    let ht = h.matvec(theta_hat)?;
    let r: Vec<T> = ht.iter().zip(c).map(|(a, b)| *a - *b).collect();
    let ir = inv.matvec(&r)?;
    let w = crate::linalg::dot(&r, &ir).max(T::zero());
    Ok(GeneralWaldResult {
        w,
        df: k as u32,
        p: chi2_sf(w, k as u32)?,
    })
}
