//! Encode a raw Adult file under a profile and export the design matrix.

use std::fmt::Write as _;
use std::path::Path;

use fairgate_core::data::load_adult;
use fairgate_core::DesignMatrix64;

use crate::analyze::{check_sensitive, profile_for};
use crate::error::{CliError, Result};

pub struct Prepared {
    pub design: DesignMatrix64,
    pub sensitive: String,
}

pub fn prepare(data: &Path, profile: &str, sensitive: &str, missing: &str) -> Result<Prepared> {
    let d = load_adult(data, missing).map_err(|source| CliError::Input { path: data.to_path_buf(), source })?;
    check_sensitive(&d, &[sensitive.to_string()])?;
    let p = profile_for(profile, sensitive)?;
    let design = p.design(&p.prepare(&d)?)?;
    Ok(Prepared { design, sensitive: sensitive.into() })
}

impl Prepared {
    pub fn csv(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.design.write_csv(&mut buf).map_err(|source| CliError::Output { path: "design.csv".into(), source })?;
        Ok(buf)
    }

    /// One line per column: key, kind, and whether it is sensitive.
    pub fn columns(&self) -> String {
        let mut s = String::from("column,feature,sensitive\n");
        for c in self.design.columns() {
            let _ = writeln!(s, "{},{},{}", c.key(), c.feature, c.feature == self.sensitive);
        }
        s
    }
}
