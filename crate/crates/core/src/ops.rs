//! Dense complex operator algebra.
//!
//! Composite spaces use a fixed index convention: for `H ⊗ K` the composite
//! index is `i_h * dim(K) + i_k`, so the object factor is the slow index.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::policy::NumericPolicy;

pub type C64 = Complex64;

/// Rectangular complex matrix, used for Kraus operators and isometries.
pub type Matrix = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Square complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexOperator {
    m: Matrix,
}

impl fmt::Debug for ComplexOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "ComplexOperator({}x{}) {}",
            self.dim(),
            self.dim(),
            self.m
        )
    }
}

impl ComplexOperator {
    pub fn from_matrix(m: Matrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        if m.nrows() == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { m })
    }

    /// Builds an operator from row-major nested rows.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::NotSquare {
                rows: n,
                cols: bad.len(),
            });
        }
        Self::from_matrix(Matrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    /// Builds an operator from real row-major nested rows.
    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        assert!(dim > 0, "operator dimension must be positive");
        Self {
            m: Matrix::from_fn(dim, dim, f),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_fn(dim, |_, _| ZERO)
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| if i == j { ONE } else { ZERO })
    }

    pub fn diagonal(values: &[C64]) -> Self {
        Self::from_fn(values.len(), |i, j| if i == j { values[i] } else { ZERO })
    }

    pub fn real_diagonal(values: &[f64]) -> Self {
        Self::from_fn(values.len(), |i, j| {
            if i == j {
                C64::new(values[i], 0.0)
            } else {
                ZERO
            }
        })
    }

    /// Outer product `|u⟩⟨v|`.
    pub fn outer(u: &StateVector, v: &StateVector) -> Result<Self> {
        check_dim(u.dim(), v.dim())?;
        Ok(Self {
            m: &u.v * v.v.adjoint(),
        })
    }

    /// Matrix unit `|i⟩⟨j|`.
    pub fn matrix_unit(dim: usize, i: usize, j: usize) -> Self {
        Self::from_fn(dim, |r, c| if r == i && c == j { ONE } else { ZERO })
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.m
    }

    pub fn into_matrix(self) -> Matrix {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.m[(i, j)]
    }

    pub fn adjoint(&self) -> Self {
        Self {
            m: self.m.adjoint(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self {
            m: self.m.transpose(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { m: &self.m * s }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise modulus.
    pub fn max_abs(&self) -> f64 {
        self.m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `(h + h†) / 2`.
    pub fn hermitian_part(&self) -> Self {
        Self {
            m: (&self.m + self.m.adjoint()) * C64::new(0.5, 0.0),
        }
    }

    pub fn hermitian_deviation(&self) -> f64 {
        let diff = &self.m - self.m.adjoint();
        diff.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `‖h − h†‖_F ≤ tol·‖h‖_F`; the zero operator always passes.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        let norm = self.frobenius_norm();
        norm == 0.0 || self.hermitian_deviation() <= tol * norm
    }

    pub fn checked_mul(&self, rhs: &Self) -> Result<Self> {
        check_dim(self.dim(), rhs.dim())?;
        Ok(Self {
            m: &self.m * &rhs.m,
        })
    }

    pub fn apply(&self, v: &StateVector) -> Result<StateVector> {
        check_dim(self.dim(), v.dim())?;
        Ok(StateVector { v: &self.m * &v.v })
    }

    /// `U X U†`.
    pub fn conjugate(&self, x: &Self) -> Result<Self> {
        check_dim(self.dim(), x.dim())?;
        Ok(Self {
            m: &self.m * &x.m * self.m.adjoint(),
        })
    }

    /// Sorted real eigenvalues of the Hermitian part.
    pub fn eigenvalues_hermitian(&self) -> Vec<f64> {
        let eig = SymmetricEigen::new(self.hermitian_part().m);
        let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        vals.sort_by(f64::total_cmp);
        vals
    }

    /// Eigenpairs of the Hermitian part, ascending.
    pub fn eigh(&self) -> Vec<(f64, StateVector)> {
        let eig = SymmetricEigen::new(self.hermitian_part().m);
        let mut pairs: Vec<(f64, StateVector)> = (0..self.dim())
            .map(|k| {
                (
                    eig.eigenvalues[k],
                    StateVector {
                        v: eig.eigenvectors.column(k).into_owned(),
                    },
                )
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        pairs
    }

    /// Trace norm `‖h‖₁` of a Hermitian operator.
    pub fn trace_norm_hermitian(&self) -> f64 {
        self.eigenvalues_hermitian().iter().map(|x| x.abs()).sum()
    }
}

impl<'a> Add<&'a ComplexOperator> for &'a ComplexOperator {
    type Output = ComplexOperator;
    fn add(self, rhs: &ComplexOperator) -> ComplexOperator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        ComplexOperator {
            m: &self.m + &rhs.m,
        }
    }
}

impl<'a> Sub<&'a ComplexOperator> for &'a ComplexOperator {
    type Output = ComplexOperator;
    fn sub(self, rhs: &ComplexOperator) -> ComplexOperator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        ComplexOperator {
            m: &self.m - &rhs.m,
        }
    }
}

impl<'a> Mul<&'a ComplexOperator> for &'a ComplexOperator {
    type Output = ComplexOperator;
    fn mul(self, rhs: &ComplexOperator) -> ComplexOperator {
        assert_eq!(self.dim(), rhs.dim(), "operator dimension mismatch");
        ComplexOperator {
            m: &self.m * &rhs.m,
        }
    }
}

/// Complex amplitude vector.
#[derive(Clone, PartialEq)]
pub struct StateVector {
    v: DVector<C64>,
}

impl fmt::Debug for StateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.v.iter()).finish()
    }
}

impl StateVector {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        if amplitudes
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            v: DVector::from_vec(amplitudes),
        })
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::new(amplitudes.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn from_column(v: DVector<C64>) -> Self {
        Self { v }
    }

    /// Computational basis vector `e_i`.
    pub fn basis(dim: usize, i: usize) -> Result<Self> {
        if i >= dim {
            return Err(Error::IndexOutOfRange {
                index: i,
                bound: dim,
            });
        }
        Ok(Self {
            v: DVector::from_fn(dim, |k, _| if k == i { ONE } else { ZERO }),
        })
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        self.v.as_slice()
    }

    pub fn column(&self) -> &DVector<C64> {
        &self.v
    }

    pub fn get(&self, i: usize) -> C64 {
        self.v[i]
    }

    pub fn norm(&self) -> f64 {
        self.v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm() - 1.0).abs() <= tol
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::NotNormalized { norm: 0.0 });
        }
        Ok(self.scale(C64::new(1.0 / n, 0.0)))
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { v: &self.v * s }
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self.v.dotc(&other.v))
    }

    /// Kronecker product of vectors, object factor slow.
    pub fn tensor(&self, other: &Self) -> Self {
        let db = other.dim();
        Self {
            v: DVector::from_fn(self.dim() * db, |i, _| self.v[i / db] * other.v[i % db]),
        }
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Kronecker product `a ⊗ b` with the default composite-dimension limit.
pub fn tensor(a: &ComplexOperator, b: &ComplexOperator) -> Result<ComplexOperator> {
    tensor_with(a, b, &NumericPolicy::DEFAULT)
}

pub fn tensor_with(
    a: &ComplexOperator,
    b: &ComplexOperator,
    policy: &NumericPolicy,
) -> Result<ComplexOperator> {
    let dim = a
        .dim()
        .checked_mul(b.dim())
        .ok_or(Error::CompositeTooLarge {
            dim: usize::MAX,
            max: policy.max_composite_dim,
        })?;
    if dim > policy.max_composite_dim {
        return Err(Error::CompositeTooLarge {
            dim,
            max: policy.max_composite_dim,
        });
    }
    Ok(ComplexOperator {
        m: a.m.kronecker(&b.m),
    })
}

/// `Tr_K` of an operator on `H ⊗ K`.
pub fn partial_trace_probe(
    m: &ComplexOperator,
    dim_h: usize,
    dim_k: usize,
) -> Result<ComplexOperator> {
    check_dim(dim_h * dim_k, m.dim())?;
    Ok(ComplexOperator::from_fn(dim_h, |i, j| {
        (0..dim_k)
            .map(|k| m.m[(i * dim_k + k, j * dim_k + k)])
            .sum()
    }))
}

/// `Tr_K[(I ⊗ e) m]` without forming `I ⊗ e`.
pub fn partial_trace_probe_weighted(
    m: &ComplexOperator,
    dim_h: usize,
    probe_op: &ComplexOperator,
) -> Result<ComplexOperator> {
    let dim_k = probe_op.dim();
    check_dim(dim_h * dim_k, m.dim())?;
    let e = &probe_op.m;
    Ok(ComplexOperator::from_fn(dim_h, |i, j| {
        let mut acc = ZERO;
        for k in 0..dim_k {
            for kp in 0..dim_k {
                let w = e[(k, kp)];
                if w != ZERO {
                    acc += w * m.m[(i * dim_k + kp, j * dim_k + k)];
                }
            }
        }
        acc
    }))
}

/// One block of a spectral decomposition.
#[derive(Debug, Clone)]
pub struct SpectralBlock {
    pub eigenvalue: f64,
    pub projection: ComplexOperator,
    /// Orthonormal basis of the eigenspace.
    pub basis: Vec<StateVector>,
}

/// Eigenvalues ascending, near-degenerate ones merged, default thresholds.
pub fn spectral_decomposition(h: &ComplexOperator) -> Result<Vec<SpectralBlock>> {
    spectral_decomposition_with(h, &NumericPolicy::DEFAULT)
}

pub fn spectral_decomposition_with(
    h: &ComplexOperator,
    policy: &NumericPolicy,
) -> Result<Vec<SpectralBlock>> {
    if !h.is_hermitian(policy.hermitian_tol) {
        let norm = h.frobenius_norm();
        return Err(Error::NotHermitian {
            deviation: h.hermitian_deviation() / norm,
        });
    }
    let pairs = h.eigh();
    let mut groups: Vec<Vec<(f64, StateVector)>> = Vec::new();
    for pair in pairs {
        match groups.last_mut() {
            Some(g) if pair.0 - g.last().unwrap().0 < policy.degeneracy => g.push(pair),
            _ => groups.push(vec![pair]),
        }
    }
    let dim = h.dim();
    Ok(groups
        .into_iter()
        .map(|g| {
            let eigenvalue = g.iter().map(|p| p.0).sum::<f64>() / g.len() as f64;
            let mut projection = Matrix::zeros(dim, dim);
            for (_, v) in &g {
                projection += &v.v * v.v.adjoint();
            }
            SpectralBlock {
                eigenvalue,
                projection: ComplexOperator { m: projection },
                basis: g.into_iter().map(|p| p.1).collect(),
            }
        })
        .collect())
}

pub fn unitary_deviation(u: &ComplexOperator) -> f64 {
    let prod = u.m.adjoint() * &u.m;
    let mut dev = 0.0;
    for i in 0..u.dim() {
        for j in 0..u.dim() {
            let target = if i == j { ONE } else { ZERO };
            dev += (prod[(i, j)] - target).norm_sqr();
        }
    }
    dev.sqrt()
}

/// `‖u†u − I‖_F ≤ tol`.
pub fn is_unitary(u: &ComplexOperator, tol: f64) -> bool {
    unitary_deviation(u) <= tol
}

/// `½‖a − b‖₁` for Hermitian `a`, `b`.
pub fn trace_distance(a: &ComplexOperator, b: &ComplexOperator) -> Result<f64> {
    check_dim(a.dim(), b.dim())?;
    Ok(0.5 * (a - b).trace_norm_hermitian())
}

/// Swap operator on `C^d ⊗ C^d`.
pub fn swap_operator(d: usize) -> ComplexOperator {
    ComplexOperator::from_fn(d * d, |r, c| {
        let (x, y) = (c / d, c % d);
        if r == y * d + x {
            ONE
        } else {
            ZERO
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_hermitian, random_operator, rng};

    #[test]
    fn tensor_of_identities_is_identity() {
        let t = tensor(&ComplexOperator::identity(2), &ComplexOperator::identity(2)).unwrap();
        assert_eq!(t, ComplexOperator::identity(4));
    }

    #[test]
    fn tensor_index_convention() {
        let a = ComplexOperator::real_diagonal(&[1.0, 0.0]);
        let b = ComplexOperator::real_diagonal(&[0.0, 1.0]);
        let t = tensor(&a, &b).unwrap();
        assert_eq!(t, ComplexOperator::real_diagonal(&[0.0, 1.0, 0.0, 0.0]));
    }

    #[test]
    fn tensor_matches_double_loop() {
        let mut r = rng(7);
        let a = random_operator(&mut r, 3);
        let b = random_operator(&mut r, 2);
        let t = tensor(&a, &b).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..2 {
                    for l in 0..2 {
                        assert_eq!(t.get(i * 2 + k, j * 2 + l), a.get(i, j) * b.get(k, l));
                    }
                }
            }
        }
    }

    #[test]
    fn tensor_rejects_oversized_composites() {
        let a = ComplexOperator::identity(65);
        let err = tensor(&a, &a).unwrap_err();
        assert!(matches!(
            err,
            Error::CompositeTooLarge {
                dim: 4225,
                max: 4096
            }
        ));
        assert!(err.to_string().contains("composite dimension too large"));
    }

    #[test]
    fn partial_trace_of_maximally_entangled() {
        let s = 0.5f64.sqrt();
        let phi = StateVector::from_real(&[s, 0.0, 0.0, s]).unwrap();
        let proj = ComplexOperator::outer(&phi, &phi).unwrap();
        let reduced = partial_trace_probe(&proj, 2, 2).unwrap();
        let expected = ComplexOperator::identity(2).scale_real(0.5);
        assert!((&reduced - &expected).max_abs() < 1e-15);
    }

    #[test]
    fn partial_trace_of_product_and_trace_identity() {
        let mut r = rng(11);
        let a = random_operator(&mut r, 3);
        let b = random_operator(&mut r, 2);
        let reduced = partial_trace_probe(&tensor(&a, &b).unwrap(), 3, 2).unwrap();
        let expected = a.scale(b.trace());
        assert!((&reduced - &expected).max_abs() < 1e-12);

        let m = random_operator(&mut r, 6);
        let reduced = partial_trace_probe(&m, 3, 2).unwrap();
        assert!((reduced.trace() - m.trace()).norm() < 1e-12);
        assert!(partial_trace_probe(&m, 4, 2).is_err());
    }

    #[test]
    fn weighted_partial_trace_matches_explicit() {
        let mut r = rng(12);
        let m = random_operator(&mut r, 6);
        let e = random_operator(&mut r, 2);
        let explicit = partial_trace_probe(
            &(&tensor(&ComplexOperator::identity(3), &e).unwrap() * &m),
            3,
            2,
        )
        .unwrap();
        let fast = partial_trace_probe_weighted(&m, 3, &e).unwrap();
        assert!((&explicit - &fast).max_abs() < 1e-13);
    }

    #[test]
    fn spectral_decomposition_of_diagonal() {
        let h = ComplexOperator::real_diagonal(&[1.0, 1.0, 2.0]);
        let blocks = spectral_decomposition(&h).unwrap();
        assert_eq!(blocks.len(), 2);
        assert!((blocks[0].eigenvalue - 1.0).abs() < 1e-15);
        assert!((blocks[1].eigenvalue - 2.0).abs() < 1e-15);
        let p0 = ComplexOperator::real_diagonal(&[1.0, 1.0, 0.0]);
        let p1 = ComplexOperator::real_diagonal(&[0.0, 0.0, 1.0]);
        assert!((&blocks[0].projection - &p0).max_abs() < 1e-14);
        assert!((&blocks[1].projection - &p1).max_abs() < 1e-14);
    }

    #[test]
    fn spectral_decomposition_of_pauli_x() {
        let x = ComplexOperator::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let blocks = spectral_decomposition(&x).unwrap();
        assert_eq!(blocks.len(), 2);
        assert!((blocks[0].eigenvalue + 1.0).abs() < 1e-15);
        assert!((blocks[1].eigenvalue - 1.0).abs() < 1e-15);
        let id = ComplexOperator::identity(2);
        let minus = (&id - &x).scale_real(0.5);
        let plus = (&id + &x).scale_real(0.5);
        assert!((&blocks[0].projection - &minus).max_abs() < 1e-14);
        assert!((&blocks[1].projection - &plus).max_abs() < 1e-14);
    }

    #[test]
    fn spectral_decomposition_reconstructs_random_hermitian() {
        let mut r = rng(3);
        let h = random_hermitian(&mut r, 5);
        let blocks = spectral_decomposition(&h).unwrap();
        let mut sum = ComplexOperator::zeros(5);
        let mut total = ComplexOperator::zeros(5);
        for b in &blocks {
            sum = &sum + &b.projection.scale_real(b.eigenvalue);
            total = &total + &b.projection;
        }
        assert!((&sum - &h).frobenius_norm() <= 1e-10);
        assert!((&total - &ComplexOperator::identity(5)).frobenius_norm() <= 1e-10);
        for (i, a) in blocks.iter().enumerate() {
            for (j, b) in blocks.iter().enumerate() {
                let prod = &a.projection * &b.projection;
                let target = if i == j {
                    a.projection.clone()
                } else {
                    ComplexOperator::zeros(5)
                };
                assert!((&prod - &target).frobenius_norm() <= 1e-10);
            }
        }
    }

    #[test]
    fn spectral_decomposition_rejects_non_hermitian() {
        let m = ComplexOperator::from_real_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let err = spectral_decomposition(&m).unwrap_err();
        assert!(err.to_string().contains("not Hermitian"));
        assert!(spectral_decomposition(&ComplexOperator::zeros(3)).is_ok());
    }

    #[test]
    fn degenerate_eigenvalues_merge() {
        let h = ComplexOperator::real_diagonal(&[0.0, 1e-9, 1.0]);
        assert_eq!(spectral_decomposition(&h).unwrap().len(), 2);
        let h = ComplexOperator::real_diagonal(&[0.0, 1e-6, 1.0]);
        assert_eq!(spectral_decomposition(&h).unwrap().len(), 3);
    }

    #[test]
    fn unitarity_checks() {
        assert!(is_unitary(&ComplexOperator::identity(4), 1e-12));
        assert!(!is_unitary(
            &ComplexOperator::real_diagonal(&[1.0, 0.5]),
            1e-12
        ));

        let mut r = rng(5);
        let householder = |v: StateVector| {
            let v = v.normalized().unwrap();
            let p = ComplexOperator::outer(&v, &v).unwrap();
            &ComplexOperator::identity(4) - &p.scale_real(2.0)
        };
        let h1 = householder(crate::random::random_state(&mut r, 4));
        let h2 = householder(crate::random::random_state(&mut r, 4));
        assert!(is_unitary(&(&h1 * &h2), 1e-10));
    }

    #[test]
    fn swap_exchanges_factors() {
        let mut r = rng(9);
        let a = random_operator(&mut r, 3);
        let b = random_operator(&mut r, 3);
        let s = swap_operator(3);
        let swapped = s.conjugate(&tensor(&a, &b).unwrap()).unwrap();
        assert!((&swapped - &tensor(&b, &a).unwrap()).max_abs() < 1e-14);
    }

    #[test]
    fn trace_distance_of_orthogonal_pure_states() {
        let a = ComplexOperator::real_diagonal(&[1.0, 0.0]);
        let b = ComplexOperator::real_diagonal(&[0.0, 1.0]);
        assert!((trace_distance(&a, &b).unwrap() - 1.0).abs() < 1e-15);
    }
}
