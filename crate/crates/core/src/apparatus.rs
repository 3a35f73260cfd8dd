//! Measurement models `(K, σ, U, B)`.
//!
//! Statistics are computed from the composite state `U(ρ ⊗ σ)U†` on `H ⊗ K`.
//! Internally the model keeps the factors `W_s = √w_s · U(I ⊗ |s⟩)` for the
//! eigen-decomposition `σ = Σ_s w_s |s⟩⟨s|`, so that
//! `U(X ⊗ σ)U† = Σ_s W_s X W_s†` for any operator `X` on `H`.

use crate::error::{Error, Result};
use crate::instrument::{AxiomCheck, CPMap, Instrument};
use crate::observable::{clamp_probability, Observable, OutcomeSet};
use crate::ops::{
    check_dim, partial_trace_probe, partial_trace_probe_weighted, swap_operator, tensor_with,
    trace_distance, unitary_deviation, ComplexOperator, Matrix, StateVector, C64, ZERO,
};
use crate::policy::NumericPolicy;
use crate::state::DensityOperator;

/// Probe outcome index → measured outcome index. `None` marks padding outcomes
/// that must never fire.
pub type OutcomeCorrespondence = Vec<Option<usize>>;

#[derive(Debug, Clone)]
pub struct ApparatusModel {
    sigma: DensityOperator,
    coupling: ComplexOperator,
    probe: Observable,
    measured: Observable,
    correspondence: OutcomeCorrespondence,
    factors: Vec<Matrix>,
    policy: NumericPolicy,
}

/// Result of [`ApparatusModel::measures_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct MeasuresReport {
    pub passed: bool,
    pub max_violation: f64,
    pub basis_elements: usize,
}

/// `Pr{x ∈ {x_i}, b ∈ {b_j}}` indexed `[x][b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    pub x_outcomes: Vec<f64>,
    pub probe_outcomes: Vec<f64>,
    pub probabilities: Vec<Vec<f64>>,
}

impl JointDistribution {
    pub fn probe_marginal(&self) -> Vec<f64> {
        (0..self.probe_outcomes.len())
            .map(|b| self.probabilities.iter().map(|row| row[b]).sum())
            .collect()
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().flatten().sum()
    }
}

/// Comparison between conditioning the composite state and conditioning the object.
#[derive(Debug, Clone, PartialEq)]
pub struct NonMixtureReport {
    /// Trace distance between the projected composite state for the whole set and
    /// the probability-weighted mixture of the projected states for the parts.
    pub trace_distance: f64,
    /// The same comparison for the reduced object states; zero up to roundoff.
    pub object_mixture_residual: f64,
    pub probability: f64,
    pub part_probabilities: [f64; 2],
}

impl ApparatusModel {
    pub fn new(
        sigma: DensityOperator,
        coupling: ComplexOperator,
        probe: Observable,
        measured: Observable,
        correspondence: OutcomeCorrespondence,
    ) -> Result<Self> {
        Self::new_with(
            sigma,
            coupling,
            probe,
            measured,
            correspondence,
            NumericPolicy::DEFAULT,
        )
    }

    pub fn new_with(
        sigma: DensityOperator,
        coupling: ComplexOperator,
        probe: Observable,
        measured: Observable,
        correspondence: OutcomeCorrespondence,
        policy: NumericPolicy,
    ) -> Result<Self> {
        let dim_h = measured.dim();
        let dim_k = sigma.dim();
        check_dim(dim_k, probe.dim())?;
        let dim = dim_h * dim_k;
        if dim > policy.max_composite_dim {
            return Err(Error::CompositeTooLarge {
                dim,
                max: policy.max_composite_dim,
            });
        }
        check_dim(dim, coupling.dim())?;
        let deviation = unitary_deviation(&coupling);
        if deviation > policy.unitary_tol {
            return Err(Error::NotUnitary { deviation });
        }
        check_dim(probe.outcome_count(), correspondence.len())?;
        if let Some(&bad) = correspondence
            .iter()
            .flatten()
            .find(|&&a| a >= measured.outcome_count())
        {
            return Err(Error::IndexOutOfRange {
                index: bad,
                bound: measured.outcome_count(),
            });
        }

        let mut factors = Vec::new();
        for (w, s) in sigma.operator().eigh() {
            if w <= policy.rank_cutoff {
                continue;
            }
            let scale = C64::new(w.sqrt(), 0.0);
            let factor = Matrix::from_fn(dim, dim_h, |row, i| {
                let mut acc = ZERO;
                for k in 0..dim_k {
                    acc += coupling.get(row, i * dim_k + k) * s.get(k);
                }
                acc * scale
            });
            factors.push(factor);
        }

        Ok(Self {
            sigma,
            coupling,
            probe,
            measured,
            correspondence,
            factors,
            policy,
        })
    }

    /// Pairs probe and measured outcomes with equal values; unmatched probe outcomes are padding.
    pub fn correspondence_by_value(
        probe: &Observable,
        measured: &Observable,
    ) -> OutcomeCorrespondence {
        probe
            .outcomes()
            .iter()
            .map(|&b| measured.index_of(b, 1e-9))
            .collect()
    }

    /// `K = H`, `U = SWAP`, probe a copy of the measured observable on `K`.
    pub fn swap(measured: &Observable, sigma: DensityOperator) -> Result<Self> {
        check_dim(measured.dim(), sigma.dim())?;
        let correspondence = (0..measured.outcome_count()).map(Some).collect();
        Self::new(
            sigma,
            swap_operator(measured.dim()),
            measured.clone(),
            measured.clone(),
            correspondence,
        )
    }

    pub fn dim_object(&self) -> usize {
        self.measured.dim()
    }

    pub fn dim_probe(&self) -> usize {
        self.sigma.dim()
    }

    pub fn sigma(&self) -> &DensityOperator {
        &self.sigma
    }

    pub fn coupling(&self) -> &ComplexOperator {
        &self.coupling
    }

    pub fn probe(&self) -> &Observable {
        &self.probe
    }

    pub fn measured(&self) -> &Observable {
        &self.measured
    }

    pub fn correspondence(&self) -> &[Option<usize>] {
        &self.correspondence
    }

    pub fn policy(&self) -> &NumericPolicy {
        &self.policy
    }

    /// `U(X ⊗ σ)U†` for any operator `X` on the object space.
    pub fn evolve(&self, x: &ComplexOperator) -> Result<ComplexOperator> {
        check_dim(self.dim_object(), x.dim())?;
        let n = self.coupling.dim();
        let mut out = Matrix::zeros(n, n);
        for w in &self.factors {
            out += w * x.matrix() * w.adjoint();
        }
        ComplexOperator::from_matrix(out)
    }

    /// `Tr[(I ⊗ E) ω]`.
    fn probe_expectation(&self, omega: &ComplexOperator, e: &ComplexOperator) -> C64 {
        let dim_h = self.dim_object();
        let dim_k = self.dim_probe();
        let mut acc = ZERO;
        for x in 0..dim_h {
            for k in 0..dim_k {
                for kp in 0..dim_k {
                    let w = e.get(k, kp);
                    if w != ZERO {
                        acc += w * omega.get(x * dim_k + kp, x * dim_k + k);
                    }
                }
            }
        }
        acc
    }

    /// Probability of each probe outcome.
    pub fn outcome_distribution(&self, rho: &DensityOperator) -> Result<Vec<f64>> {
        let omega = self.evolve(rho.operator())?;
        self.probe
            .projections()
            .iter()
            .map(|e| clamp_probability(self.probe_expectation(&omega, e).re))
            .collect()
    }

    /// Probe distribution re-indexed onto the measured observable's outcomes.
    pub fn measured_distribution(&self, rho: &DensityOperator) -> Result<Vec<f64>> {
        let probe = self.outcome_distribution(rho)?;
        let mut out = vec![0.0; self.measured.outcome_count()];
        for (b, p) in probe.into_iter().enumerate() {
            if let Some(a) = self.correspondence[b] {
                out[a] += p;
            }
        }
        Ok(out)
    }

    fn check_correspondence(&self) -> Result<()> {
        let mut hits = vec![0usize; self.measured.outcome_count()];
        for a in self.correspondence.iter().flatten() {
            hits[*a] += 1;
        }
        if let Some(a) = hits.iter().position(|&h| h != 1) {
            return Err(Error::NoOutcomeCorrespondence(format!(
                "measured outcome {a} has {} probe partners",
                hits[a]
            )));
        }
        Ok(())
    }

    /// Checks the probe statistics against `Tr[E^A({a}) X]` on the first `basis_size`
    /// matrix units `|i⟩⟨j|` (row-major); `dim_object²` covers the full operator basis.
    pub fn measures_check(&self, basis_size: usize) -> Result<MeasuresReport> {
        self.check_correspondence()?;
        let dim = self.dim_object();
        let count = basis_size.min(dim * dim);
        let mut max_violation: f64 = 0.0;
        for idx in 0..count {
            let (i, j) = (idx / dim, idx % dim);
            let unit = ComplexOperator::matrix_unit(dim, i, j);
            let omega = self.evolve(&unit)?;
            for (b, e) in self.probe.projections().iter().enumerate() {
                let got = self.probe_expectation(&omega, e);
                let expected = match self.correspondence[b] {
                    Some(a) => self.measured.projection(a).get(j, i),
                    None => ZERO,
                };
                max_violation = max_violation.max((got - expected).norm());
            }
        }
        Ok(MeasuresReport {
            passed: max_violation <= self.policy.check_tol,
            max_violation,
            basis_elements: count,
        })
    }

    /// `Tr_K[U(ρ ⊗ σ)U†]`.
    pub fn nonselective_state(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        let omega = self.evolve(rho.operator())?;
        let reduced = partial_trace_probe(&omega, self.dim_object(), self.dim_probe())?;
        DensityOperator::new(reduced.hermitian_part())
    }

    /// Unnormalized `Tr_K[(I ⊗ E^B(Δ))U(X ⊗ σ)U†]` on any object operator.
    pub fn operational_map(&self, s: &OutcomeSet, x: &ComplexOperator) -> Result<ComplexOperator> {
        let e = self.probe.projection_of(s)?;
        let omega = self.evolve(x)?;
        partial_trace_probe_weighted(&omega, self.dim_object(), &e)
    }

    /// Object state conditional on the probe outcome lying in `s`.
    pub fn conditional_state(
        &self,
        s: &OutcomeSet,
        rho: &DensityOperator,
    ) -> Result<DensityOperator> {
        let unnormalized = self.operational_map(s, rho.operator())?;
        let probability = unnormalized.trace().re;
        if probability <= self.policy.probability_floor {
            return Err(Error::NullEvent { probability });
        }
        DensityOperator::from_unnormalized(unnormalized)
    }

    /// Joint statistics of a follow-up measurement of `x_obs` on the object and the probe,
    /// `Tr[(E^X ⊗ E^B) U(ρ ⊗ σ)U†]`, evaluated on the full composite.
    pub fn joint_distribution(
        &self,
        x_obs: &Observable,
        rho: &DensityOperator,
    ) -> Result<JointDistribution> {
        check_dim(self.dim_object(), x_obs.dim())?;
        let omega = self.evolve(rho.operator())?;
        let n = omega.dim();
        let probabilities = x_obs
            .projections()
            .iter()
            .map(|ex| {
                self.probe
                    .projections()
                    .iter()
                    .map(|eb| {
                        let joint = tensor_with(ex, eb, &self.policy)?;
                        let mut acc = ZERO;
                        for r in 0..n {
                            for c in 0..n {
                                acc += joint.get(r, c) * omega.get(c, r);
                            }
                        }
                        clamp_probability(acc.re)
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(JointDistribution {
            x_outcomes: x_obs.outcomes().to_vec(),
            probe_outcomes: self.probe.outcomes().to_vec(),
            probabilities,
        })
    }

    /// Operational distribution of the model as an instrument for the measured observable.
    ///
    /// Each atom is evaluated on the matrix-unit basis, assembled into its Choi matrix and
    /// Kraus-decomposed, dropping Choi eigenvalues at or below the rank cutoff.
    pub fn extract_instrument(&self) -> Result<Instrument> {
        let dim = self.dim_object();
        let report = self.measures_check(dim * dim)?;
        if !report.passed {
            return Err(Error::NotAMeasurement {
                violation: report.max_violation,
            });
        }
        let mut atoms: Vec<Option<CPMap>> = vec![None; self.measured.outcome_count()];
        for (b, partner) in self.correspondence.iter().enumerate() {
            let Some(a) = *partner else { continue };
            let e = self.probe.projection(b);
            let mut choi = ComplexOperator::zeros(dim * dim);
            for i in 0..dim {
                for j in 0..dim {
                    let unit = ComplexOperator::matrix_unit(dim, i, j);
                    let omega = self.evolve(&unit)?;
                    let image = partial_trace_probe_weighted(&omega, dim, e)?;
                    choi = &choi + &tensor_with(&image, &unit, &self.policy)?;
                }
            }
            atoms[a] = Some(CPMap::from_choi(
                &choi.hermitian_part(),
                dim,
                dim,
                self.policy.rank_cutoff,
            )?);
        }
        let atoms = atoms
            .into_iter()
            .map(|a| a.expect("correspondence is a bijection"))
            .collect();
        Ok(Instrument::new(self.measured.clone(), atoms)?.with_policy(self.policy))
    }

    /// Apparatus whose operational distribution is `ins`.
    ///
    /// The probe space has a ready vector `e₀` (prepared state, sentinel outcome) followed
    /// by one basis vector `|a,k⟩` per Kraus operator. The isometry
    /// `Vψ = Σ_{a,k} M_{a,k}ψ ⊗ |a,k⟩` fills the columns `(i, e₀)` of `U`; the remaining
    /// columns are completed by Gram–Schmidt over the canonical basis.
    pub fn dilate_instrument(ins: &Instrument) -> Result<Self> {
        let report = ins.verify_axioms_with(&AxiomCheck::default());
        if !report.passed() {
            return Err(Error::AxiomFailure(format!("{report:?}")));
        }
        let policy = *ins.policy();
        let dim_h = ins.dim();
        let mut labels: Vec<usize> = Vec::new();
        let mut kraus: Vec<&Matrix> = Vec::new();
        for (a, atom) in ins.atoms().iter().enumerate() {
            for k in atom.kraus() {
                labels.push(a);
                kraus.push(k);
            }
        }
        let dim_k = 1 + kraus.len();
        let n = dim_h * dim_k;
        if n > policy.max_composite_dim {
            return Err(Error::CompositeTooLarge {
                dim: n,
                max: policy.max_composite_dim,
            });
        }

        // V: H → H ⊗ K, column i = Σ_{a,k} M_{a,k} e_i ⊗ |a,k⟩.
        let isometry = Matrix::from_fn(n, dim_h, |row, i| {
            let (x, slot) = (row / dim_k, row % dim_k);
            if slot == 0 {
                ZERO
            } else {
                kraus[slot - 1][(x, i)]
            }
        });

        let coupling = complete_unitary(&isometry, dim_k, policy.completion_residual)?;

        let outcomes = ins.observable().outcomes();
        let sentinel = outcomes[0] - 2.0;
        let mut probe_values = vec![sentinel];
        probe_values.extend(labels.iter().map(|&a| outcomes[a]));
        let probe = Observable::diagonal(&probe_values)?;
        let mut correspondence = vec![None];
        correspondence.extend((0..ins.outcome_count()).map(Some));

        let ready = StateVector::basis(dim_k, 0)?;
        Self::new_with(
            DensityOperator::from_vector(&ready)?,
            ComplexOperator::from_matrix(coupling)?,
            probe,
            ins.observable().clone(),
            correspondence,
            policy,
        )
    }

    /// `(I ⊗ E)U(ρ ⊗ σ)U†(I ⊗ E) / Tr[...]`: the composite state one would get by
    /// projecting the probe onto the event `s`.
    pub fn naive_composite_state(
        &self,
        s: &OutcomeSet,
        rho: &DensityOperator,
    ) -> Result<DensityOperator> {
        let e = self.probe.projection_of(s)?;
        let lift = tensor_with(
            &ComplexOperator::identity(self.dim_object()),
            &e,
            &self.policy,
        )?;
        let omega = self.evolve(rho.operator())?;
        let projected = &(&lift * &omega) * &lift;
        let probability = projected.trace().re;
        if probability <= self.policy.probability_floor {
            return Err(Error::NullEvent { probability });
        }
        DensityOperator::from_unnormalized(projected)
    }

    /// Compares the projected composite state for `s` against the mixture of the projected
    /// states for the two parts of `partition`, and does the same for the object states.
    pub fn demonstrate_non_mixture(
        &self,
        s: &OutcomeSet,
        partition: (&OutcomeSet, &OutcomeSet),
        rho: &DensityOperator,
    ) -> Result<NonMixtureReport> {
        let (first, second) = partition;
        self.probe.check_set(s)?;
        self.probe.check_set(first)?;
        self.probe.check_set(second)?;
        if !first.is_disjoint(second) || &first.union(second) != s {
            return Err(Error::InvalidPartition(
                "parts must be disjoint and cover the set".into(),
            ));
        }
        let probs = self.outcome_distribution(rho)?;
        let prob_of = |set: &OutcomeSet| set.indices().map(|b| probs[b]).sum::<f64>();
        let (p1, p2) = (prob_of(first), prob_of(second));
        for p in [p1, p2] {
            if p <= self.policy.probability_floor {
                return Err(Error::NullEvent { probability: p });
            }
        }
        let total = p1 + p2;
        let (w1, w2) = (p1 / total, p2 / total);

        let whole = self.naive_composite_state(s, rho)?;
        let mixture = &self
            .naive_composite_state(first, rho)?
            .operator()
            .scale_real(w1)
            + &self
                .naive_composite_state(second, rho)?
                .operator()
                .scale_real(w2);

        let object_whole = self.conditional_state(s, rho)?;
        let object_mixture = &self
            .conditional_state(first, rho)?
            .operator()
            .scale_real(w1)
            + &self
                .conditional_state(second, rho)?
                .operator()
                .scale_real(w2);

        Ok(NonMixtureReport {
            trace_distance: trace_distance(whole.operator(), &mixture)?,
            object_mixture_residual: trace_distance(object_whole.operator(), &object_mixture)?,
            probability: total,
            part_probabilities: [p1, p2],
        })
    }
}

/// Extends an isometry `V` (columns placed at composite indices `i·dim_k`) to a unitary on
/// `C^{rows}`, filling the other columns with an orthonormal completion drawn from the
/// canonical basis in order. Candidates with residual below `min_residual` are skipped.
fn complete_unitary(isometry: &Matrix, dim_k: usize, min_residual: f64) -> Result<Matrix> {
    let n = isometry.nrows();
    let dim_h = isometry.ncols();
    let mut basis: Vec<nalgebra::DVector<C64>> = (0..dim_h)
        .map(|i| isometry.column(i).into_owned())
        .collect();
    let isometry_deviation = {
        let gram = isometry.adjoint() * isometry;
        let mut dev: f64 = 0.0;
        for i in 0..dim_h {
            for j in 0..dim_h {
                let target = if i == j { 1.0 } else { 0.0 };
                dev = dev.max((gram[(i, j)] - C64::new(target, 0.0)).norm());
            }
        }
        dev
    };
    if isometry_deviation > 1e-10 {
        return Err(Error::AxiomFailure(format!(
            "Kraus operators do not form an isometry (deviation {isometry_deviation:e})"
        )));
    }

    let mut completion = Vec::with_capacity(n - dim_h);
    for m in 0..n {
        if basis.len() == n {
            break;
        }
        let mut v =
            nalgebra::DVector::from_fn(n, |r, _| if r == m { C64::new(1.0, 0.0) } else { ZERO });
        // Two Gram–Schmidt passes keep the completion orthonormal to working precision.
        for _ in 0..2 {
            for b in &basis {
                let overlap = b.dotc(&v);
                v -= b * overlap;
            }
        }
        let norm = v.norm();
        if norm < min_residual {
            continue;
        }
        v /= C64::new(norm, 0.0);
        basis.push(v.clone());
        completion.push(v);
    }
    if basis.len() != n {
        return Err(Error::AxiomFailure("unitary completion failed".into()));
    }

    let mut u = Matrix::zeros(n, n);
    let mut extra = completion.into_iter();
    for col in 0..n {
        if col % dim_k == 0 {
            u.set_column(col, &isometry.column(col / dim_k));
        } else {
            u.set_column(
                col,
                &extra.next().expect("completion has n - dim_h columns"),
            );
        }
    }
    Ok(u)
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use crate::instrument::posterior_family_distance;
    use crate::ops::{is_unitary, tensor};
    use crate::random::{random_instrument, random_mixed_density, random_state, rng};

    fn pauli_z() -> Observable {
        Observable::from_hermitian(&ComplexOperator::real_diagonal(&[1.0, -1.0])).unwrap()
    }

    fn uncoupled(sigma: DensityOperator) -> ApparatusModel {
        let z = pauli_z();
        let corr = ApparatusModel::correspondence_by_value(&z, &z);
        ApparatusModel::new(sigma, ComplexOperator::identity(4), z.clone(), z, corr).unwrap()
    }

    /// Direct `U(ρ⊗σ)U†` for cross-checking the factored route.
    fn composite(m: &ApparatusModel, rho: &DensityOperator) -> ComplexOperator {
        let prod = tensor(rho.operator(), m.sigma().operator()).unwrap();
        m.coupling().conjugate(&prod).unwrap()
    }

    #[test]
    fn factored_evolution_matches_direct_product() {
        let mut r = rng(1);
        let ins = random_instrument(&mut r, 3, 2);
        let model = ApparatusModel::dilate_instrument(&ins).unwrap();
        let rho = random_mixed_density(&mut r, 3);
        let direct = composite(&model, &rho);
        let fast = model.evolve(rho.operator()).unwrap();
        assert!((&direct - &fast).max_abs() < 1e-13);
    }

    #[test]
    fn uncoupled_model_reads_the_probe() {
        let sigma = random_mixed_density(&mut rng(2), 2);
        let model = uncoupled(sigma.clone());
        let expected = pauli_z().distribution(&sigma).unwrap();
        for _ in 0..3 {
            let rho = random_mixed_density(&mut rng(3), 2);
            let p = model.outcome_distribution(&rho).unwrap();
            for (x, y) in p.iter().zip(&expected) {
                assert!((x - y).abs() < 1e-14);
            }
            let after = model.nonselective_state(&rho).unwrap();
            assert!((after.operator() - rho.operator()).max_abs() < 1e-14);
        }
        let report = model.measures_check(4).unwrap();
        assert!(!report.passed);
    }

    #[test]
    fn swap_model_measures_directly() {
        let mut r = rng(4);
        let z = pauli_z();
        let sigma = random_mixed_density(&mut r, 2);
        let model = ApparatusModel::swap(&z, sigma.clone()).unwrap();
        let rho = random_mixed_density(&mut r, 2);
        let p = model.outcome_distribution(&rho).unwrap();
        let born = z.distribution(&rho).unwrap();
        for (x, y) in p.iter().zip(&born) {
            assert!((x - y).abs() < 1e-14);
        }
        let after = model.nonselective_state(&rho).unwrap();
        assert!((after.operator() - sigma.operator()).max_abs() < 1e-14);
        assert!(model.measures_check(4).unwrap().passed);
    }

    #[test]
    fn swap_model_extracts_reset_instrument() {
        let mut r = rng(5);
        let z = pauli_z();
        let sigma = random_mixed_density(&mut r, 2);
        let model = ApparatusModel::swap(&z, sigma.clone()).unwrap();
        let ins = model.extract_instrument().unwrap();
        assert!(ins.verify_axioms().passed());
        for _ in 0..3 {
            let rho = random_mixed_density(&mut r, 2);
            for a in 0..2 {
                let got = ins.atom(a).apply(rho.operator()).unwrap();
                let born = z.distribution(&rho).unwrap()[a];
                let expected = sigma.operator().scale_real(born);
                assert!((&got - &expected).max_abs() < 1e-12);
            }
        }
    }

    #[test]
    fn correspondence_gaps_are_errors() {
        let z = pauli_z();
        let shifted = Observable::diagonal(&[5.0, 6.0]).unwrap();
        let corr = ApparatusModel::correspondence_by_value(&shifted, &z);
        let model = ApparatusModel::new(
            DensityOperator::maximally_mixed(2),
            ComplexOperator::identity(4),
            shifted,
            z,
            corr,
        )
        .unwrap();
        let err = model.measures_check(4).unwrap_err();
        assert!(matches!(err, Error::NoOutcomeCorrespondence(_)));
        assert!(matches!(
            model.extract_instrument().unwrap_err(),
            Error::NoOutcomeCorrespondence(_)
        ));
    }

    #[test]
    fn non_unitary_coupling_rejected() {
        let z = pauli_z();
        let corr = ApparatusModel::correspondence_by_value(&z, &z);
        let err = ApparatusModel::new(
            DensityOperator::maximally_mixed(2),
            ComplexOperator::identity(4).scale_real(0.9),
            z.clone(),
            z,
            corr,
        )
        .unwrap_err();
        assert!(matches!(err, Error::NotUnitary { .. }));
    }

    #[test]
    fn extraction_refuses_non_measurements() {
        let model = uncoupled(DensityOperator::maximally_mixed(2));
        assert!(matches!(
            model.extract_instrument().unwrap_err(),
            Error::NotAMeasurement { .. }
        ));
    }

    #[test]
    fn conditional_state_on_full_set_is_nonselective() {
        let mut r = rng(6);
        let ins = random_instrument(&mut r, 3, 3);
        let model = ApparatusModel::dilate_instrument(&ins).unwrap();
        let rho = random_mixed_density(&mut r, 3);
        let full = OutcomeSet::full(model.probe().outcome_count());
        let a = model.conditional_state(&full, &rho).unwrap();
        let b = model.nonselective_state(&rho).unwrap();
        assert!((a.operator() - b.operator()).max_abs() < 1e-13);
    }

    #[test]
    fn conditional_states_mix_over_partitions() {
        let mut r = rng(7);
        let ins = random_instrument(&mut r, 3, 3);
        let model = ApparatusModel::dilate_instrument(&ins).unwrap();
        let rho = random_mixed_density(&mut r, 3);
        let n = model.probe().outcome_count();
        let first = OutcomeSet::from_indices(n, &[1]).unwrap();
        let second = OutcomeSet::from_indices(n, &[2, 3]).unwrap();
        let whole = first.union(&second);
        let p = model.outcome_distribution(&rho).unwrap();
        let (p1, p2) = (p[1], p[2] + p[3]);
        let mix = &model
            .conditional_state(&first, &rho)
            .unwrap()
            .operator()
            .scale_real(p1 / (p1 + p2))
            + &model
                .conditional_state(&second, &rho)
                .unwrap()
                .operator()
                .scale_real(p2 / (p1 + p2));
        let direct = model.conditional_state(&whole, &rho).unwrap();
        assert!(trace_distance(direct.operator(), &mix).unwrap() < 1e-10);
    }

    #[test]
    fn dilation_round_trip() {
        let mut r = rng(8);
        let ins = random_instrument(&mut r, 3, 2);
        let model = ApparatusModel::dilate_instrument(&ins).unwrap();
        assert!(is_unitary(model.coupling(), 1e-10));
        assert!(model.measures_check(9).unwrap().passed);
        let back = model.extract_instrument().unwrap();
        assert!(back.choi_distance(&ins).unwrap() < 1e-9);
        let rho = random_mixed_density(&mut r, 3);
        let a = ins.posterior_family(&rho).unwrap();
        let b = back.posterior_family(&rho).unwrap();
        assert!(posterior_family_distance(&a, &b).unwrap() < 1e-10);
    }

    #[test]
    fn dilated_von_neumann_model() {
        let z = pauli_z();
        let model = ApparatusModel::dilate_instrument(&Instrument::von_neumann(&z)).unwrap();
        assert!(model.dim_probe() >= 2);
        assert!(model.measures_check(4).unwrap().passed);
        let rho = random_mixed_density(&mut rng(9), 2);
        // Padding outcome never fires.
        assert!(model.outcome_distribution(&rho).unwrap()[0] <= 1e-12);
        assert!(model.probe().outcomes()[0] < -1.0 - 1.0);
    }

    #[test]
    fn dilation_rejects_incompatible_instruments() {
        let z = pauli_z();
        let mut atoms = Instrument::von_neumann(&z).atoms().to_vec();
        let scaled = atoms[0].kraus()[0].clone() * C64::new(1.01, 0.0);
        atoms[0] = CPMap::new(2, 2, vec![scaled]).unwrap();
        let bad = Instrument::new(z, atoms).unwrap();
        assert!(matches!(
            ApparatusModel::dilate_instrument(&bad).unwrap_err(),
            Error::AxiomFailure(_)
        ));
    }

    #[test]
    fn naive_state_for_singletons_reduces_to_conditional_state() {
        let mut r = rng(10);
        let ins = random_instrument(&mut r, 2, 2);
        let model = ApparatusModel::dilate_instrument(&ins).unwrap();
        let rho = random_mixed_density(&mut r, 2);
        let n = model.probe().outcome_count();
        let s = OutcomeSet::singleton(n, 1);
        let naive = model.naive_composite_state(&s, &rho).unwrap();
        let reduced = partial_trace_probe(naive.operator(), 2, model.dim_probe()).unwrap();
        let conditional = model.conditional_state(&s, &rho).unwrap();
        assert!((&reduced - conditional.operator()).max_abs() < 1e-12);
    }

    #[test]
    fn naive_state_full_set_uncoupled_is_input() {
        let v = random_state(&mut rng(11), 2);
        let sigma = DensityOperator::from_vector(&v).unwrap();
        let model = uncoupled(sigma.clone());
        let rho = random_mixed_density(&mut rng(12), 2);
        let naive = model
            .naive_composite_state(&OutcomeSet::full(2), &rho)
            .unwrap();
        let input = tensor(rho.operator(), sigma.operator()).unwrap();
        assert!((naive.operator() - &input).max_abs() < 1e-14);
    }

    #[test]
    fn non_mixture_vanishes_without_coherence() {
        // σ diagonal in the probe basis and no coupling: nothing to lose.
        let sigma = DensityOperator::new(ComplexOperator::real_diagonal(&[0.3, 0.7])).unwrap();
        let model = uncoupled(sigma);
        let rho = random_mixed_density(&mut rng(13), 2);
        let report = model
            .demonstrate_non_mixture(
                &OutcomeSet::full(2),
                (&OutcomeSet::singleton(2, 0), &OutcomeSet::singleton(2, 1)),
                &rho,
            )
            .unwrap();
        assert!(report.trace_distance < 1e-14);
        assert!(report.object_mixture_residual < 1e-14);
    }

    #[test]
    fn non_mixture_rejects_bad_partitions() {
        let model = uncoupled(DensityOperator::maximally_mixed(2));
        let rho = DensityOperator::maximally_mixed(2);
        let s0 = OutcomeSet::singleton(2, 0);
        let err = model
            .demonstrate_non_mixture(&OutcomeSet::full(2), (&s0, &s0), &rho)
            .unwrap_err();
        assert!(matches!(err, Error::InvalidPartition(_)));
    }

    #[test]
    fn joint_distribution_of_uncoupled_product() {
        let mut r = rng(14);
        let sigma = random_mixed_density(&mut r, 2);
        let model = uncoupled(sigma.clone());
        let rho = random_mixed_density(&mut r, 2);
        let z = pauli_z();
        let joint = model.joint_distribution(&z, &rho).unwrap();
        let px = z.distribution(&rho).unwrap();
        let pb = z.distribution(&sigma).unwrap();
        for x in 0..2 {
            for b in 0..2 {
                assert!((joint.probabilities[x][b] - px[x] * pb[b]).abs() < 1e-14);
            }
        }
        assert!((joint.total() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn joint_distribution_factorizes() {
        let mut r = rng(15);
        let ins = random_instrument(&mut r, 3, 2);
        let model = ApparatusModel::dilate_instrument(&ins).unwrap();
        let rho = random_mixed_density(&mut r, 3);
        let x_obs = crate::random::random_observable(&mut r, 3, 3);
        let joint = model.joint_distribution(&x_obs, &rho).unwrap();
        let marginal = model.outcome_distribution(&rho).unwrap();
        for (b, (&m, &p)) in joint.probe_marginal().iter().zip(&marginal).enumerate() {
            assert!((m - p).abs() < 1e-12, "marginal {b}");
        }
        let n = model.probe().outcome_count();
        for b in 0..n {
            if marginal[b] <= 1e-6 {
                continue;
            }
            let post = model
                .conditional_state(&OutcomeSet::singleton(n, b), &rho)
                .unwrap();
            for x in 0..3 {
                let rhs = x_obs
                    .projection(x)
                    .checked_mul(post.operator())
                    .unwrap()
                    .trace()
                    .re
                    * marginal[b];
                assert!((joint.probabilities[x][b] - rhs).abs() < 1e-10);
            }
        }
    }
}
