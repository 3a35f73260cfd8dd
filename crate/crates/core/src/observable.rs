//! Sharp observables with finite outcome sets.
//!
//! An [`OutcomeSet`] is an explicit subset of an observable's outcome indices and
//! stands in for a Borel set of outcome values.

use crate::error::{Error, Result};
use crate::ops::{check_dim, spectral_decomposition_with, ComplexOperator, StateVector};
use crate::policy::NumericPolicy;
use crate::state::DensityOperator;

/// Strictly increasing outcome values with orthogonal spectral projections summing to `I`.
#[derive(Debug, Clone)]
pub struct Observable {
    dim: usize,
    outcomes: Vec<f64>,
    projections: Vec<ComplexOperator>,
}

impl Observable {
    /// Builds an observable from an explicit spectral measure and checks its invariants.
    pub fn new(outcomes: Vec<f64>, projections: Vec<ComplexOperator>) -> Result<Self> {
        if outcomes.is_empty() || outcomes.len() != projections.len() {
            return Err(Error::InvalidObservable(format!(
                "{} outcomes for {} projections",
                outcomes.len(),
                projections.len()
            )));
        }
        if outcomes.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        if outcomes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidObservable(
                "outcomes must be strictly increasing".into(),
            ));
        }
        let dim = projections[0].dim();
        for p in &projections {
            check_dim(dim, p.dim())?;
        }
        let tol = 1e-10;
        let mut total = ComplexOperator::zeros(dim);
        for (i, p) in projections.iter().enumerate() {
            total = &total + p;
            for (j, q) in projections.iter().enumerate().skip(i) {
                let prod = p * q;
                let target = if i == j {
                    p.clone()
                } else {
                    ComplexOperator::zeros(dim)
                };
                if (&prod - &target).frobenius_norm() > tol {
                    return Err(Error::InvalidObservable(format!(
                        "projections {i} and {j} are not orthogonal idempotents"
                    )));
                }
            }
            if p.frobenius_norm() < 0.5 {
                return Err(Error::InvalidObservable(format!("projection {i} is zero")));
            }
        }
        if (&total - &ComplexOperator::identity(dim)).frobenius_norm() > tol {
            return Err(Error::InvalidObservable(
                "projections do not sum to the identity".into(),
            ));
        }
        Ok(Self {
            dim,
            outcomes,
            projections,
        })
    }

    pub fn from_hermitian(h: &ComplexOperator) -> Result<Self> {
        Self::from_hermitian_with(h, &NumericPolicy::DEFAULT)
    }

    pub fn from_hermitian_with(h: &ComplexOperator, policy: &NumericPolicy) -> Result<Self> {
        let blocks = spectral_decomposition_with(h, policy)?;
        Ok(Self {
            dim: h.dim(),
            outcomes: blocks.iter().map(|b| b.eigenvalue).collect(),
            projections: blocks.into_iter().map(|b| b.projection).collect(),
        })
    }

    /// Observable diagonal in the computational basis; repeated values share a projection.
    pub fn diagonal(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidObservable("no values".into()));
        }
        let mut distinct: Vec<f64> = values.to_vec();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup();
        let projections = distinct
            .iter()
            .map(|&a| {
                let diag: Vec<f64> = values
                    .iter()
                    .map(|&v| if v == a { 1.0 } else { 0.0 })
                    .collect();
                ComplexOperator::real_diagonal(&diag)
            })
            .collect();
        Self::new(distinct, projections)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn outcomes(&self) -> &[f64] {
        &self.outcomes
    }

    pub fn outcome_count(&self) -> usize {
        self.outcomes.len()
    }

    pub fn projections(&self) -> &[ComplexOperator] {
        &self.projections
    }

    pub fn projection(&self, index: usize) -> &ComplexOperator {
        &self.projections[index]
    }

    /// `Σ_a a·E({a})`.
    pub fn operator(&self) -> ComplexOperator {
        self.projections
            .iter()
            .zip(&self.outcomes)
            .fold(ComplexOperator::zeros(self.dim), |acc, (p, &a)| {
                &acc + &p.scale_real(a)
            })
    }

    /// Index of the outcome equal to `value` within `tol`.
    pub fn index_of(&self, value: f64, tol: f64) -> Option<usize> {
        self.outcomes.iter().position(|&a| (a - value).abs() <= tol)
    }

    /// Orthonormal basis of the range of `E({a})`.
    pub fn range_basis(&self, index: usize) -> Vec<StateVector> {
        self.projections[index]
            .eigh()
            .into_iter()
            .filter(|(lambda, _)| *lambda > 0.5)
            .map(|(_, v)| v)
            .collect()
    }

    /// `E(Δ)`: zero for the empty set, `I` for the full set.
    pub fn projection_of(&self, s: &OutcomeSet) -> Result<ComplexOperator> {
        self.check_set(s)?;
        Ok(s.indices()
            .fold(ComplexOperator::zeros(self.dim), |acc, i| {
                &acc + &self.projections[i]
            }))
    }

    /// `Tr[E(Δ)ρ]`, clamped to `[0, 1]` after checking it lies within slack of that range.
    pub fn born_probability(&self, s: &OutcomeSet, rho: &DensityOperator) -> Result<f64> {
        check_dim(self.dim, rho.dim())?;
        let p = self
            .projection_of(s)?
            .checked_mul(rho.operator())?
            .trace()
            .re;
        clamp_probability(p)
    }

    /// Born probabilities of every outcome.
    pub fn distribution(&self, rho: &DensityOperator) -> Result<Vec<f64>> {
        (0..self.outcome_count())
            .map(|i| self.born_probability(&OutcomeSet::singleton(self.outcome_count(), i), rho))
            .collect()
    }

    pub(crate) fn check_set(&self, s: &OutcomeSet) -> Result<()> {
        check_dim(self.outcome_count(), s.len())
    }
}

pub(crate) fn clamp_probability(p: f64) -> Result<f64> {
    const SLACK: f64 = 1e-10;
    if !(-SLACK..=1.0 + SLACK).contains(&p) {
        return Err(Error::ProbabilityOutOfRange(p));
    }
    Ok(p.clamp(0.0, 1.0))
}

/// Subset of an observable's outcome indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OutcomeSet {
    members: Vec<bool>,
}

impl OutcomeSet {
    pub fn from_flags(members: Vec<bool>) -> Self {
        Self { members }
    }

    pub fn empty(n: usize) -> Self {
        Self {
            members: vec![false; n],
        }
    }

    pub fn full(n: usize) -> Self {
        Self {
            members: vec![true; n],
        }
    }

    pub fn singleton(n: usize, index: usize) -> Self {
        let mut s = Self::empty(n);
        s.members[index] = true;
        s
    }

    pub fn from_indices(n: usize, indices: &[usize]) -> Result<Self> {
        let mut s = Self::empty(n);
        for &i in indices {
            if i >= n {
                return Err(Error::IndexOutOfRange { index: i, bound: n });
            }
            s.members[i] = true;
        }
        Ok(s)
    }

    /// Outcomes whose value lies in the closed interval `[lo, hi]`.
    pub fn from_interval(obs: &Observable, lo: f64, hi: f64) -> Self {
        Self {
            members: obs.outcomes().iter().map(|&a| lo <= a && a <= hi).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        !self.members.iter().any(|&m| m)
    }

    pub fn contains(&self, index: usize) -> bool {
        self.members.get(index).copied().unwrap_or(false)
    }

    pub fn flags(&self) -> &[bool] {
        &self.members
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.members
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(i, _)| i)
    }

    pub fn union(&self, other: &Self) -> Self {
        Self {
            members: self
                .members
                .iter()
                .zip(&other.members)
                .map(|(a, b)| *a || *b)
                .collect(),
        }
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        !self
            .members
            .iter()
            .zip(&other.members)
            .any(|(a, b)| *a && *b)
    }

    pub fn complement(&self) -> Self {
        Self {
            members: self.members.iter().map(|m| !m).collect(),
        }
    }
}
