//! Classical statistics: correlations, OLS, VIF and forward model selection.

mod correlation;
mod ols;
mod select;
mod special;

pub use correlation::{correlation_table, pearson, CorrelationCell, CorrelationTable};
pub use ols::{ols_fit, vif, OlsFit};
pub use select::{
    forward_select, trait_column, RegressionModel, RegressionTerm, SelectionConfig, SelectionStep,
};
pub use special::{beta_reg, ln_beta, ln_gamma, student_t_sf};

use serde::{Deserialize, Serialize};

/// Significance marker attached to a published coefficient.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Stars {
    #[default]
    None,
    One,
    Two,
    Three,
}

impl Stars {
    /// Two-level convention used for correlation tables: * p < .05, ** p < .01.
    pub fn correlation(p: f64) -> Stars {
        if p < 0.01 {
            Stars::Two
        } else if p < 0.05 {
            Stars::One
        } else {
            Stars::None
        }
    }

    /// Three-level convention used for regression tables: adds *** p < .001.
    pub fn regression(p: f64) -> Stars {
        if p < 0.001 {
            Stars::Three
        } else {
            Stars::correlation(p)
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Stars::None => "",
            Stars::One => "*",
            Stars::Two => "**",
            Stars::Three => "***",
        }
    }
}

impl From<Stars> for String {
    fn from(s: Stars) -> String {
        s.as_str().to_string()
    }
}

impl TryFrom<String> for Stars {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        match s.as_str() {
            "" => Ok(Stars::None),
            "*" => Ok(Stars::One),
            "**" => Ok(Stars::Two),
            "***" => Ok(Stars::Three),
            other => Err(format!("invalid significance marker {other:?}")),
        }
    }
}
