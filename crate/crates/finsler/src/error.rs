//! Error type shared by every module in this crate.
//!
//! Numerical failures are not interchangeable: a convexity failure means the
//! input is not a Finsler metric at that point, while a singular matrix or a
//! diverging root solve usually means the caller left the admissible region.
//! The variants keep those cases apart so callers can react differently.

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, FinslerError>;

/// Everything that can go wrong while evaluating metrics, jets, or flows.
///
/// Diagnostic payloads are reported as `f64` regardless of the scalar type
/// the computation ran in; they are for messages, not for further arithmetic.
#[derive(Debug, Clone, thiserror::Error)]
pub enum FinslerError {
    /// A function was evaluated outside its mathematical domain
    /// (square root of a negative constant term, log of a non-positive one, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Mismatched dimensions or malformed input values.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The wind is too strong somewhere: `F(x, -v(x)) >= 1`.
    #[error("wind admissibility violated: F(x, -v(x)) = {value} at the queried point (must be < 1)")]
    Inadmissible { value: f64 },

    /// The candidate fundamental tensor is not positive definite.
    #[error("strict convexity failed: smallest fundamental-tensor eigenvalue {min_eigenvalue}")]
    NonConvex { min_eigenvalue: f64 },

    /// A linear solve met a pivot indistinguishable from zero.
    #[error("singular linear system (pivot magnitude {pivot})")]
    SingularMatrix { pivot: f64 },

    /// The implicit-metric root solve failed to reach its residual target.
    #[error("root solve did not converge: residual {residual} after {iterations} iterations")]
    NoConvergence { residual: f64, iterations: usize },

    /// A flag's transverse edge was numerically parallel to its pole.
    #[error("degenerate flag: |sin| of the angle between pole and edge is {sine}")]
    DegenerateFlag { sine: f64 },

    /// A sampled-data operation received fewer samples than its stencil needs.
    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    /// A closed-form flow was requested for a wind that has none.
    #[error("no closed-form flow is registered for this wind field")]
    NoClosedFormFlow,
}

impl FinslerError {
    /// Convenience constructor used all over the crate.
    pub fn invalid(msg: impl Into<String>) -> Self {
        FinslerError::InvalidInput(msg.into())
    }

    /// Convenience constructor for domain violations.
    pub fn domain(msg: impl Into<String>) -> Self {
        FinslerError::Domain(msg.into())
    }
}
