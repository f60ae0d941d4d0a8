use serde::{Deserialize, Serialize};

/// Relative slack allowed on the right-hand side of every inequality check.
pub const INEQUALITY_SLACK: f64 = 1e-8;

/// Outcome of checking `lhs ≤ rhs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityWitness {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub pass: bool,
    pub context: String,
}

impl InequalityWitness {
    pub fn new(lhs: f64, rhs: f64, context: impl Into<String>) -> Self {
        InequalityWitness {
            lhs,
            rhs,
            slack: rhs - lhs,
            pass: lhs <= rhs + INEQUALITY_SLACK * rhs.abs(),
            context: context.into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_allows_relative_slack() {
        assert!(InequalityWitness::new(0.0, 0.0, "zero").pass);
        assert!(InequalityWitness::new(1.0 + 1e-9, 1.0, "tight").pass);
        assert!(!InequalityWitness::new(1.0 + 1e-7, 1.0, "over").pass);
    }
}
