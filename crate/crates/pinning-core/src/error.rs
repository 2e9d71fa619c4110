use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::fock::Setting;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("unsupported setting {setting}{}", nearest_hint(.nearest))]
    UnsupportedSetting {
        setting: Setting,
        /// Nearest supported setting reachable by truncation, if any.
        nearest: Option<Setting>,
    },

    #[error("no supported truncation with epsilon <= {threshold:e}; achievable: {}", Achievable(.achievable))]
    UnsupportedTruncation {
        threshold: f64,
        achievable: Vec<(Setting, f64)>,
    },

    #[error("numeric failure in {what} (residual {residual:e})")]
    Numeric { what: String, residual: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no sign change of {what} in [{lo}, {hi}]")]
    NotFound { what: String, lo: f64, hi: f64 },
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn numeric(what: impl Into<String>, residual: f64) -> Self {
        Error::Numeric {
            what: what.into(),
            residual,
        }
    }
}

fn nearest_hint(nearest: &Option<Setting>) -> String {
    match nearest {
        Some(s) => alloc::format!("; nearest supported truncation is {s}"),
        None => String::new(),
    }
}

struct Achievable<'a>(&'a [(Setting, f64)]);

impl fmt::Display for Achievable<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("none");
        }
        for (i, (s, eps)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{s} at {eps:e}")?;
        }
        Ok(())
    }
}
