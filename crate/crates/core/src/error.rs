//! Error types shared across the toolkit.

use thiserror::Error;

/// Constraint families used in optimizer infeasibility reports and audits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstraintFamily {
    /// BS transmit power budget.
    Power,
    /// Per-user minimum rate requirement.
    Qos,
    /// Common-rate cap (sum of allocations vs. common-stream capacity).
    CommonRate,
    /// Private-rate cap.
    PrivateRate,
    /// Interference upper-bound auxiliaries.
    Interference,
    /// SCA affine lower bounds.
    ScaBound,
    /// Covertness leakage budget at the warden.
    Leakage,
    /// RIS element modulus bound.
    UnitModulus,
    /// Nonnegativity of rate allocations.
    NonNeg,
}

impl std::fmt::Display for ConstraintFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            ConstraintFamily::Power => "power",
            ConstraintFamily::Qos => "qos",
            ConstraintFamily::CommonRate => "common-rate",
            ConstraintFamily::PrivateRate => "private-rate",
            ConstraintFamily::Interference => "interference",
            ConstraintFamily::ScaBound => "sca-bound",
            ConstraintFamily::Leakage => "leakage",
            ConstraintFamily::UnitModulus => "unit-modulus",
            ConstraintFamily::NonNeg => "nonneg",
        };
        f.write_str(name)
    }
}

/// Toolkit-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument violates a precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A quantity left the mathematical domain of a closed form.
    #[error("domain error: {0}")]
    Domain(String),

    /// A convex subproblem (or the whole program) has no feasible point.
    #[error("infeasible: violated constraint families: {}", format_families(.families))]
    Infeasible {
        /// Constraint families still violated at the infeasibility certificate.
        families: Vec<ConstraintFamily>,
    },

    /// Scenario or experiment specification failed validation.
    #[error("invalid spec: {0}")]
    Spec(String),

    /// I/O failure while reading scenarios or writing outputs.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

fn format_families(families: &[ConstraintFamily]) -> String {
    if families.is_empty() {
        return "(none identified)".to_string();
    }
    families
        .iter()
        .map(|f| f.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
