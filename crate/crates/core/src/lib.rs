//! Leave-one-out fairness screening for regression models.
//!
//! A model `M` trained on the permitted features is compared with a model
//! `M'` trained on the same features plus one sensitive attribute. Shared
//! coefficients that move significantly under a univariate Wald test mark
//! features that act as proxies for the sensitive one.
//!
//! ```no_run
//! use fairgate_core::data::{load_adult, Profile};
//! use fairgate_core::regress::{fit_ols, FitConfig, TargetCoding};
//! use fairgate_core::wald::{wald_test, WaldOptions};
//!
//! let train = load_adult("data/adult/adult.data", "?")?;
//! let profile = Profile::full();
//! let with_age = profile.prepare(&train)?;
//! let without_age = with_age.select(&profile.features)?;
//! let cfg = FitConfig { target_coding: TargetCoding::PlusMinusOne, ..FitConfig::default() };
//! let m = fit_ols(&profile.design::<f64>(&without_age)?, &cfg)?;
//! let m_prime = fit_ols(&profile.design::<f64>(&with_age)?, &cfg)?;
//! let report = wald_test(&m, &m_prime, &WaldOptions::default())?;
//! println!("{}", report.to_text());
//! # Ok::<(), fairgate_core::Error>(())
//! ```

pub mod data;
pub mod error;
pub mod gd;
pub mod linalg;
pub mod regress;
pub mod scalar;
pub mod stats;
pub mod wald;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type DesignMatrix64 = data::DesignMatrix<f64>;
pub type DesignMatrix32 = data::DesignMatrix<f32>;
pub type ModelFit64 = regress::ModelFit<f64>;
pub type ModelFit32 = regress::ModelFit<f32>;
pub type WaldReport64 = wald::WaldReport<f64>;
pub type Matrix64 = linalg::Matrix<f64>;
