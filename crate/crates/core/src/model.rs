use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Which distribution a dataset is modelled with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Toroidal projected normal with concentrations `κ`.
    Tpn,
    /// Copula extension with wrapped Cauchy margins of concentration `λ`.
    Ctpn,
}

impl ModelKind {
    /// Name of the per-coordinate concentration parameter.
    pub fn concentration_name(self) -> &'static str {
        match self {
            ModelKind::Tpn => "kappa",
            ModelKind::Ctpn => "lambda",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Tpn => "tpn",
            ModelKind::Ctpn => "ctpn",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "tpn" => Ok(ModelKind::Tpn),
            "ctpn" => Ok(ModelKind::Ctpn),
            other => Err(Error::domain(format!("unknown model `{other}` (expected tpn or ctpn)"))),
        }
    }
}
