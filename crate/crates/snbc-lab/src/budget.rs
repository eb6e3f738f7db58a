//! Step budgets for the exponential enumerations.
//!
//! Walk enumeration, exhaustive model enumeration and pair search are all
//! exact but exponential; a [`Budget`] bounds the number of elementary steps
//! so the CLI fails loudly instead of spinning. `SNBCLAB_BUDGET` overrides
//! the default cap.

use crate::error::{Error, Result};
use std::sync::atomic::{AtomicU64, Ordering};

pub const DEFAULT_BUDGET: u64 = 100_000_000;

#[derive(Debug)]
pub struct Budget {
    limit: u64,
    used: AtomicU64,
}

impl Budget {
    pub fn new(limit: u64) -> Self {
        Budget {
            limit,
            used: AtomicU64::new(0),
        }
    }

    /// Default cap, overridable via the `SNBCLAB_BUDGET` environment variable.
    pub fn standard() -> Self {
        let limit = std::env::var("SNBCLAB_BUDGET")
            .ok()
            .and_then(|s| s.parse().ok())
            .unwrap_or(DEFAULT_BUDGET);
        Budget::new(limit)
    }

    pub fn unlimited() -> Self {
        Budget::new(u64::MAX)
    }

    #[inline]
    pub fn step(&self) -> Result<()> {
        self.charge(1)
    }

    #[inline]
    pub fn charge(&self, n: u64) -> Result<()> {
        let used = self.used.fetch_add(n, Ordering::Relaxed) + n;
        if used > self.limit {
            Err(Error::BudgetExceeded {
                used,
                limit: self.limit,
            })
        } else {
            Ok(())
        }
    }

    pub fn used(&self) -> u64 {
        self.used.load(Ordering::Relaxed)
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }
}

impl Default for Budget {
    fn default() -> Self {
        Budget::standard()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_trips() {
        let b = Budget::new(3);
        assert!(b.step().is_ok());
        assert!(b.charge(2).is_ok());
        assert!(matches!(b.step(), Err(Error::BudgetExceeded { .. })));
    }
}
