//! Numeric tolerances shared across the crate.

/// One record holding every numeric threshold. Defaults are the library-wide values;
/// callers override individual fields where a computation accepts a policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericPolicy {
    /// Relative Frobenius tolerance for `‖h − h†‖ ≤ tol·‖h‖`.
    pub hermitian_tol: f64,
    /// Eigenvalues closer than this (absolute) share one spectral projection.
    pub degeneracy: f64,
    pub unitary_tol: f64,
    /// Agreement required between two routes to the same statistic.
    pub check_tol: f64,
    /// Trace, Hermiticity and positivity slack for density operators.
    pub density_tol: f64,
    pub normalization_tol: f64,
    /// Events at or below this probability cannot be conditioned on.
    pub probability_floor: f64,
    /// Eigenvalues at or below this are dropped when building Kraus operators.
    pub rank_cutoff: f64,
    /// Candidates with smaller residual are skipped during unitary completion.
    pub completion_residual: f64,
    pub max_composite_dim: usize,
}

impl NumericPolicy {
    pub const DEFAULT: NumericPolicy = NumericPolicy {
        hermitian_tol: 1e-10,
        degeneracy: 1e-8,
        unitary_tol: 1e-10,
        check_tol: 1e-10,
        density_tol: 1e-10,
        normalization_tol: 1e-12,
        probability_floor: 1e-12,
        rank_cutoff: 1e-12,
        completion_residual: 1e-8,
        max_composite_dim: 4096,
    };
}

impl Default for NumericPolicy {
    fn default() -> Self {
        Self::DEFAULT
    }
}
