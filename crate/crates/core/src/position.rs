//! Position measurement on a cyclic grid `Z_N`.
//!
//! Object and probe each live on `N` sites with positions `0..N` taken modulo `N`.
//! The two coupling stages integrate to exact permutations of the product basis,
//! so every statement about the model can be checked without discretization error.
//! Units have `ħ = 1` and unit lattice spacing; momentum translations are index shifts.

use std::f64::consts::PI;

use crate::apparatus::ApparatusModel;
use crate::error::{Error, Result};
use crate::observable::{Observable, OutcomeSet};
use crate::ops::{is_unitary, trace_distance, ComplexOperator, StateVector, C64, ONE, ZERO};
use crate::state::DensityOperator;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSystem {
    n: usize,
}

impl GridSystem {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::GridTooSmall(n));
        }
        Ok(Self { n })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    fn wrap(&self, v: isize) -> usize {
        v.rem_euclid(self.n as isize) as usize
    }

    /// Composite index of `|x, y⟩`.
    pub fn index(&self, x: usize, y: usize) -> usize {
        x * self.n + y
    }

    fn permutation(&self, map: impl Fn(usize, usize) -> (usize, usize)) -> ComplexOperator {
        let n = self.n;
        let mut targets = vec![0usize; n * n];
        for x in 0..n {
            for y in 0..n {
                let (tx, ty) = map(x, y);
                targets[self.index(x, y)] = self.index(tx, ty);
            }
        }
        ComplexOperator::from_fn(
            n * n,
            |row, col| if targets[col] == row { ONE } else { ZERO },
        )
    }

    /// First coupling stage, `|x', y'⟩ ↦ |x' − y', y'⟩`.
    pub fn stage_one_unitary(&self) -> ComplexOperator {
        self.permutation(|x, y| (self.wrap(x as isize - y as isize), y))
    }

    /// Second coupling stage, `|x', y'⟩ ↦ |x', y' + x'⟩`.
    pub fn stage_two_unitary(&self) -> ComplexOperator {
        self.permutation(|x, y| (x, (y + x) % self.n))
    }

    /// Full coupling, `|x', y'⟩ ↦ |x' − y', x'⟩`: the probe records the prior position.
    pub fn coupling_unitary(&self) -> ComplexOperator {
        &self.stage_two_unitary() * &self.stage_one_unitary()
    }

    /// Position observable with outcomes `0..N`.
    pub fn position_observable(&self) -> Observable {
        let values: Vec<f64> = (0..self.n).map(|x| x as f64).collect();
        Observable::diagonal(&values).expect("distinct grid positions")
    }

    /// `⟨y|p⟩ = e^{2πi p y / N} / √N`.
    pub fn momentum_state(&self, p: usize) -> Result<StateVector> {
        if p >= self.n {
            return Err(Error::IndexOutOfRange {
                index: p,
                bound: self.n,
            });
        }
        let norm = 1.0 / (self.n as f64).sqrt();
        let amplitudes = (0..self.n)
            .map(|y| {
                let phase = 2.0 * PI * ((p * y) % self.n) as f64 / self.n as f64;
                C64::from_polar(norm, phase)
            })
            .collect();
        StateVector::new(amplitudes)
    }

    /// Unitary DFT matrix with columns `|p⟩`.
    pub fn fourier_matrix(&self) -> ComplexOperator {
        let norm = 1.0 / (self.n as f64).sqrt();
        ComplexOperator::from_fn(self.n, |y, p| {
            C64::from_polar(norm, 2.0 * PI * ((p * y) % self.n) as f64 / self.n as f64)
        })
    }

    /// `(shift_a φ)(x) = φ(x − a mod N)`.
    pub fn shift(&self, phi: &StateVector, a: usize) -> Result<StateVector> {
        self.check_vector(phi)?;
        StateVector::new(
            (0..self.n)
                .map(|x| phi.get(self.wrap(x as isize - a as isize)))
                .collect(),
        )
    }

    /// `ξ(y) = φ(−y mod N)`, with `−0 = 0`.
    pub fn reflect(&self, phi: &StateVector) -> Result<StateVector> {
        self.check_vector(phi)?;
        StateVector::new(
            (0..self.n)
                .map(|y| phi.get(self.wrap(-(y as isize))))
                .collect(),
        )
    }

    fn check_vector(&self, v: &StateVector) -> Result<()> {
        if v.dim() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: v.dim(),
            });
        }
        Ok(())
    }
}

/// Apparatus prepared in `ξ(y) = φ(−y)`, coupled by [`GridSystem::coupling_unitary`],
/// reading out the probe position. Its posterior after outcome `a` is `φ` shifted by `a`.
pub fn build_position_apparatus(g: &GridSystem, phi: &StateVector) -> Result<ApparatusModel> {
    g.check_vector(phi)?;
    if !phi.is_normalized(1e-12) {
        return Err(Error::NotNormalized { norm: phi.norm() });
    }
    let xi = g.reflect(phi)?;
    let position = g.position_observable();
    let correspondence = (0..g.size()).map(Some).collect();
    ApparatusModel::new(
        DensityOperator::from_vector(&xi)?,
        g.coupling_unitary(),
        position.clone(),
        position,
        correspondence,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranslatedPosteriorReport {
    /// Largest trace distance between a posterior and the shifted `φ`.
    pub max_trace_distance: f64,
    pub checked_outcomes: Vec<usize>,
    pub distribution: Vec<f64>,
}

impl TranslatedPosteriorReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.max_trace_distance <= tol
    }
}

/// Compares every positive-probability posterior against the projector onto `shift_a(φ)`.
pub fn verify_translated_posteriors(
    g: &GridSystem,
    phi: &StateVector,
    rho: &DensityOperator,
) -> Result<TranslatedPosteriorReport> {
    let model = build_position_apparatus(g, phi)?;
    let distribution = model.outcome_distribution(rho)?;
    let floor = model.policy().probability_floor;
    let mut max_trace_distance: f64 = 0.0;
    let mut checked_outcomes = Vec::new();
    for (a, &p) in distribution.iter().enumerate() {
        if p <= floor {
            continue;
        }
        let posterior = model.conditional_state(&OutcomeSet::singleton(g.size(), a), rho)?;
        let target = DensityOperator::from_vector(&g.shift(phi, a)?)?;
        max_trace_distance =
            max_trace_distance.max(trace_distance(posterior.operator(), target.operator())?);
        checked_outcomes.push(a);
    }
    Ok(TranslatedPosteriorReport {
        max_trace_distance,
        checked_outcomes,
        distribution,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentumDemoReport {
    pub momentum: usize,
    /// Momentum index of the prior, `N − p mod N`.
    pub prior_momentum: usize,
    pub posterior_fidelities: Vec<f64>,
    pub distribution: Vec<f64>,
    pub max_uniform_deviation: f64,
    /// Trace distance between the nonselective state and the prior.
    pub nonselective_distance: f64,
}

impl MomentumDemoReport {
    pub fn min_fidelity(&self) -> f64 {
        self.posterior_fidelities
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn fidelity_deficit(&self) -> f64 {
        1.0 - self.min_fidelity()
    }

    pub fn passed(&self) -> bool {
        self.fidelity_deficit() <= 1e-10
            && self.max_uniform_deviation <= 1e-12
            && self.nonselective_distance <= 1e-10
    }
}

/// Apparatus prepared in the grid momentum eigenstate `|p⟩` measuring an object in `|−p⟩`:
/// every posterior is the prior itself.
pub fn momentum_nondisturbance_demo(g: &GridSystem, p: usize) -> Result<MomentumDemoReport> {
    let n = g.size();
    let xi = g.momentum_state(p)?;
    let prior_momentum = (n - p) % n;
    let prior_vec = g.momentum_state(prior_momentum)?;
    let report = momentum_run(g, &xi, &prior_vec)?;
    let uniform = 1.0 / n as f64;
    Ok(MomentumDemoReport {
        momentum: p,
        prior_momentum,
        max_uniform_deviation: report
            .distribution
            .iter()
            .map(|q| (q - uniform).abs())
            .fold(0.0, f64::max),
        posterior_fidelities: report.fidelities,
        distribution: report.distribution,
        nonselective_distance: report.nonselective_distance,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentumContrastReport {
    pub apparatus_momentum: usize,
    pub prior_momentum: usize,
    /// Fidelity of each posterior with the prior.
    pub prior_fidelities: Vec<f64>,
    /// Fidelity of each posterior with `|−p⟩`.
    pub reset_fidelities: Vec<f64>,
}

impl MomentumContrastReport {
    pub fn max_prior_fidelity(&self) -> f64 {
        self.prior_fidelities.iter().copied().fold(0.0, f64::max)
    }
}

/// Same apparatus as the demo, but the object starts in `|q⟩`; posteriors are still `|−p⟩`.
pub fn momentum_contrast(g: &GridSystem, p: usize, q: usize) -> Result<MomentumContrastReport> {
    let n = g.size();
    let xi = g.momentum_state(p)?;
    let prior_vec = g.momentum_state(q)?;
    let reset = g.momentum_state((n - p) % n)?;
    let model = build_position_apparatus(g, &g.reflect(&xi)?)?;
    let prior = DensityOperator::from_vector(&prior_vec)?;
    let mut prior_fidelities = Vec::new();
    let mut reset_fidelities = Vec::new();
    for a in 0..n {
        let post = model.conditional_state(&OutcomeSet::singleton(n, a), &prior)?;
        prior_fidelities.push(post.fidelity_pure(&prior_vec)?);
        reset_fidelities.push(post.fidelity_pure(&reset)?);
    }
    Ok(MomentumContrastReport {
        apparatus_momentum: p,
        prior_momentum: q,
        prior_fidelities,
        reset_fidelities,
    })
}

struct MomentumRun {
    fidelities: Vec<f64>,
    distribution: Vec<f64>,
    nonselective_distance: f64,
}

fn momentum_run(g: &GridSystem, xi: &StateVector, prior_vec: &StateVector) -> Result<MomentumRun> {
    let n = g.size();
    // The model takes φ with ξ(y) = φ(−y); reflection is an involution.
    let phi = g.reflect(xi)?;
    let model = build_position_apparatus(g, &phi)?;
    let prior = DensityOperator::from_vector(prior_vec)?;
    let distribution = model.outcome_distribution(&prior)?;
    let mut fidelities = Vec::with_capacity(n);
    for a in 0..n {
        let post = model.conditional_state(&OutcomeSet::singleton(n, a), &prior)?;
        fidelities.push(post.fidelity_pure(prior_vec)?);
    }
    let after = model.nonselective_state(&prior)?;
    Ok(MomentumRun {
        fidelities,
        distribution,
        nonselective_distance: trace_distance(after.operator(), prior.operator())?,
    })
}

/// The grid's DFT is unitary to the given tolerance.
pub fn fourier_is_unitary(g: &GridSystem, tol: f64) -> bool {
    is_unitary(&g.fourier_matrix(), tol)
}
