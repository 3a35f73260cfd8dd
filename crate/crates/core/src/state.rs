//! Density operators and pure-state helpers.

use crate::error::{Error, Result};
use crate::ops::{check_dim, ComplexOperator, StateVector};
use crate::policy::NumericPolicy;

/// Positive, unit-trace operator. Construction validates at the default tolerances.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    op: ComplexOperator,
}

impl DensityOperator {
    pub fn new(op: ComplexOperator) -> Result<Self> {
        Self::new_with(op, &NumericPolicy::DEFAULT)
    }

    pub fn new_with(op: ComplexOperator, policy: &NumericPolicy) -> Result<Self> {
        check_density(&op, policy)?;
        Ok(Self { op })
    }

    /// Normalizes a positive operator by its trace; the result is Hermitian-symmetrized.
    pub(crate) fn from_unnormalized(op: ComplexOperator) -> Result<Self> {
        let tr = op.trace().re;
        if tr <= 0.0 {
            return Err(Error::InvalidState(format!("nonpositive trace {tr}")));
        }
        Self::new(op.hermitian_part().scale_real(1.0 / tr))
    }

    /// Rank-1 projector onto a normalized vector.
    pub fn from_vector(v: &StateVector) -> Result<Self> {
        let tol = NumericPolicy::DEFAULT.normalization_tol;
        if !v.is_normalized(tol) {
            return Err(Error::NotNormalized { norm: v.norm() });
        }
        Ok(Self {
            op: ComplexOperator::outer(v, v)?,
        })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            op: ComplexOperator::identity(dim).scale_real(1.0 / dim as f64),
        }
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn operator(&self) -> &ComplexOperator {
        &self.op
    }

    pub fn into_operator(self) -> ComplexOperator {
        self.op
    }

    /// Re-checks the density invariants.
    pub fn validate(&self) -> bool {
        validate(&self.op)
    }

    pub fn purity(&self) -> f64 {
        (&self.op * &self.op).trace().re
    }

    /// `⟨v|ρ|v⟩` for a normalized `v`.
    pub fn fidelity_pure(&self, v: &StateVector) -> Result<f64> {
        fidelity_pure(self, v)
    }
}

fn check_density(op: &ComplexOperator, policy: &NumericPolicy) -> Result<()> {
    let tol = policy.density_tol;
    if op.hermitian_deviation() > tol {
        return Err(Error::InvalidState(format!(
            "not Hermitian (deviation {:e})",
            op.hermitian_deviation()
        )));
    }
    let tr = op.trace();
    if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
        return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
    }
    let min = op.eigenvalues_hermitian()[0];
    if min < -tol {
        return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
    }
    Ok(())
}

/// True iff `op` is Hermitian, unit-trace and positive within the default tolerance.
pub fn validate(op: &ComplexOperator) -> bool {
    check_density(op, &NumericPolicy::DEFAULT).is_ok()
}

pub fn fidelity_pure(d: &DensityOperator, v: &StateVector) -> Result<f64> {
    check_dim(d.dim(), v.dim())?;
    if !v.is_normalized(NumericPolicy::DEFAULT.normalization_tol) {
        return Err(Error::NotNormalized { norm: v.norm() });
    }
    let value = v.inner(&d.op.apply(v)?)?;
    if value.im.abs() > 1e-12 {
        return Err(Error::InvalidState(format!(
            "expectation has imaginary part {:e}",
            value.im
        )));
    }
    Ok(value.re.clamp(0.0, 1.0))
}
