//! Complex numbers as `[re, im]`, matrices as row-major nested arrays.

use qreduce_core::{ComplexOperator, StateVector, C64};
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};

pub type Pair = [f64; 2];
pub type RawVector = Vec<Pair>;
pub type RawMatrix = Vec<Vec<Pair>>;

pub fn complex(p: &Pair) -> C64 {
    C64::new(p[0], p[1])
}

pub fn pair(z: C64) -> Value {
    json!([z.re, z.im])
}

pub fn operator(raw: &RawMatrix, what: &str) -> CliResult<ComplexOperator> {
    let rows: Vec<Vec<C64>> = raw
        .iter()
        .map(|r| r.iter().map(complex).collect())
        .collect();
    ComplexOperator::from_rows(&rows).map_err(|e| CliError::Validation(format!("{what}: {e}")))
}

/// Vector that must be normalized within `tol`; renormalized to absorb roundoff in the file.
pub fn unit_vector(raw: &RawVector, what: &str, tol: f64) -> CliResult<StateVector> {
    let v = StateVector::new(raw.iter().map(complex).collect())
        .map_err(|e| CliError::Validation(format!("{what}: {e}")))?;
    if (v.norm() - 1.0).abs() > tol {
        return Err(CliError::Validation(format!(
            "{what}: vector norm {} is not 1",
            v.norm()
        )));
    }
    Ok(v.normalized()?)
}

pub fn matrix_value(op: &ComplexOperator) -> Value {
    Value::Array(
        (0..op.dim())
            .map(|i| Value::Array((0..op.dim()).map(|j| pair(op.get(i, j))).collect()))
            .collect(),
    )
}

pub fn vector_value(v: &StateVector) -> Value {
    Value::Array(v.amplitudes().iter().map(|&z| pair(z)).collect())
}
