use thiserror::Error;

use crate::multistage::StructureError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    Dimension {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid input: {0}")]
    Input(String),

    #[error(transparent)]
    Structure(#[from] StructureError),

    #[error("unsupported tree shape: {0}")]
    UnsupportedShape(String),

    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("arithmetic overflow in {0}")]
    Overflow(&'static str),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn dim(context: &'static str, expected: usize, found: usize) -> Self {
        Error::Dimension {
            context,
            expected,
            found,
        }
    }

    pub fn is_budget(&self) -> bool {
        matches!(self, Error::BudgetExceeded(_))
    }
}

/// Global cap on enumeration sizes. Every search that could blow up
/// charges its work against one of these and fails with
/// [`Error::BudgetExceeded`] instead of truncating silently.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub limit: u64,
}

impl Budget {
    pub const DEFAULT_LIMIT: u64 = 50_000_000;

    pub fn new(limit: u64) -> Self {
        Budget { limit }
    }

    pub fn unlimited() -> Self {
        Budget { limit: u64::MAX }
    }

    pub fn meter(&self, what: &'static str) -> Meter {
        Meter {
            used: 0,
            limit: self.limit,
            what,
        }
    }
}

impl Default for Budget {
    fn default() -> Self {
        Budget::new(Self::DEFAULT_LIMIT)
    }
}

#[derive(Debug)]
pub struct Meter {
    used: u64,
    limit: u64,
    what: &'static str,
}

impl Meter {
    pub fn charge(&mut self, units: u64) -> Result<()> {
        self.used = self.used.saturating_add(units);
        if self.used > self.limit {
            return Err(Error::BudgetExceeded(format!(
                "{} needed more than {} work units",
                self.what, self.limit
            )));
        }
        Ok(())
    }

    pub fn remaining(&self) -> u64 {
        self.limit.saturating_sub(self.used)
    }

    pub fn used(&self) -> u64 {
        self.used
    }
}
