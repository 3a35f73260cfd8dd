//! CP-map-valued measures (instruments) over a finite outcome set.
//!
//! An [`Instrument`] stores one completely positive map per outcome of the
//! measured observable. The map for an outcome set is the sum of its atoms, so
//! countable additivity holds by construction and is checked numerically anyway.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::observable::{Observable, OutcomeSet};
use crate::ops::{check_dim, tensor, trace_distance, ComplexOperator, Matrix, C64};
use crate::policy::NumericPolicy;
use crate::random::rng;
use crate::state::DensityOperator;

/// Completely positive map in Kraus form, `ρ ↦ Σ_k M_k ρ M_k†`.
#[derive(Debug, Clone)]
pub struct CPMap {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<Matrix>,
}

impl CPMap {
    pub fn new(dim_in: usize, dim_out: usize, kraus: Vec<Matrix>) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::AxiomFailure(
                "CP map needs at least one Kraus operator".into(),
            ));
        }
        for k in &kraus {
            check_dim(dim_out, k.nrows())?;
            check_dim(dim_in, k.ncols())?;
            if k.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::NonFinite);
            }
        }
        Ok(Self {
            dim_in,
            dim_out,
            kraus,
        })
    }

    /// Square Kraus operators on one space.
    pub fn from_operators(kraus: Vec<ComplexOperator>) -> Result<Self> {
        let dim = kraus.first().map(ComplexOperator::dim).unwrap_or(0);
        Self::new(
            dim,
            dim,
            kraus
                .into_iter()
                .map(ComplexOperator::into_matrix)
                .collect(),
        )
    }

    /// Kraus operators from the eigendecomposition of a Choi matrix, dropping
    /// eigenvalues at or below `cutoff`.
    pub fn from_choi(
        choi: &ComplexOperator,
        dim_in: usize,
        dim_out: usize,
        cutoff: f64,
    ) -> Result<Self> {
        check_dim(dim_in * dim_out, choi.dim())?;
        let kraus: Vec<Matrix> = choi
            .eigh()
            .into_iter()
            .rev()
            .filter(|(lambda, _)| *lambda > cutoff)
            .map(|(lambda, v)| {
                let s = lambda.sqrt();
                Matrix::from_fn(dim_out, dim_in, |p, i| v.get(p * dim_in + i) * s)
            })
            .collect();
        if kraus.is_empty() {
            return Err(Error::AxiomFailure(
                "Choi matrix has no positive spectrum".into(),
            ));
        }
        Self::new(dim_in, dim_out, kraus)
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn kraus(&self) -> &[Matrix] {
        &self.kraus
    }

    pub fn apply(&self, rho: &ComplexOperator) -> Result<ComplexOperator> {
        check_dim(self.dim_in, rho.dim())?;
        let mut out = Matrix::zeros(self.dim_out, self.dim_out);
        for k in &self.kraus {
            out += k * rho.matrix() * k.adjoint();
        }
        ComplexOperator::from_matrix(out)
    }

    /// `Σ_k M_k† M_k`, the effect whose expectation is `Tr[T(ρ)]`.
    pub fn effect(&self) -> ComplexOperator {
        let mut out = Matrix::zeros(self.dim_in, self.dim_in);
        for k in &self.kraus {
            out += k.adjoint() * k;
        }
        ComplexOperator::from_matrix(out).expect("square effect")
    }

    pub fn choi_matrix(&self) -> ComplexOperator {
        choi_of_linear_map(self.dim_in, self.dim_out, |x| {
            self.apply(x).expect("matrix unit has input dimension")
        })
    }
}

/// `Σ_ij T(|i⟩⟨j|) ⊗ |i⟩⟨j|` for an arbitrary linear map, output factor slow.
///
/// Accepts maps that need not be completely positive, such as the transpose.
pub fn choi_of_linear_map(
    dim_in: usize,
    dim_out: usize,
    map: impl Fn(&ComplexOperator) -> ComplexOperator,
) -> ComplexOperator {
    let mut choi = ComplexOperator::zeros(dim_in * dim_out);
    for i in 0..dim_in {
        for j in 0..dim_in {
            let unit = ComplexOperator::matrix_unit(dim_in, i, j);
            let image = map(&unit);
            assert_eq!(image.dim(), dim_out, "map output dimension");
            let block = tensor(&image, &unit).expect("Choi dimension within limits");
            choi = &choi + &block;
        }
    }
    choi
}

/// Outcome of [`Instrument::verify_axioms`].
#[derive(Debug, Clone, PartialEq)]
pub struct AxiomReport {
    pub cp_ok: bool,
    pub additivity_ok: bool,
    pub compat_ok: bool,
    /// Smallest Choi eigenvalue over all atoms.
    pub min_choi_eigenvalue: f64,
    pub max_additivity_violation: f64,
    pub max_compat_violation: f64,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.cp_ok && self.additivity_ok && self.compat_ok
    }
}

/// Thresholds and sampling for the axiom sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxiomCheck {
    pub cp_tol: f64,
    pub additivity_tol: f64,
    pub compat_tol: f64,
    pub seed: u64,
    pub partitions: usize,
}

impl Default for AxiomCheck {
    fn default() -> Self {
        Self {
            cp_tol: 1e-10,
            additivity_tol: 1e-12,
            compat_tol: 1e-10,
            seed: 0,
            partitions: 8,
        }
    }
}

/// Conditional state for one outcome, absent when the outcome has negligible probability.
#[derive(Debug, Clone)]
pub struct Posterior {
    pub outcome: f64,
    pub probability: f64,
    pub state: Option<DensityOperator>,
}

/// Operational distribution: one CP map per outcome of the measured observable.
#[derive(Debug, Clone)]
pub struct Instrument {
    observable: Observable,
    atoms: Vec<CPMap>,
    policy: NumericPolicy,
}

impl Instrument {
    /// Checks shapes only; compatibility with the observable is reported by
    /// [`Instrument::verify_axioms`].
    pub fn new(observable: Observable, atoms: Vec<CPMap>) -> Result<Self> {
        check_dim(observable.outcome_count(), atoms.len())?;
        for atom in &atoms {
            check_dim(observable.dim(), atom.dim_in())?;
            check_dim(observable.dim(), atom.dim_out())?;
        }
        Ok(Self {
            observable,
            atoms,
            policy: NumericPolicy::DEFAULT,
        })
    }

    pub fn with_policy(mut self, policy: NumericPolicy) -> Self {
        self.policy = policy;
        self
    }

    /// Lüders instrument `ρ ↦ E_a ρ E_a`.
    pub fn von_neumann(observable: &Observable) -> Self {
        let atoms = observable
            .projections()
            .iter()
            .map(|p| CPMap::from_operators(vec![p.clone()]).expect("projection is square"))
            .collect();
        Self::new(observable.clone(), atoms).expect("atoms match observable")
    }

    /// Instrument leaving the object in `family[a]` after outcome `a`, whatever the prior:
    /// `T_a(ρ) = ρ_a Tr[E_a ρ]`, with Kraus operators `√λ_j |φ_j⟩⟨a,m|`.
    pub fn controlled_posterior(
        observable: &Observable,
        family: &[DensityOperator],
    ) -> Result<Self> {
        Self::controlled_posterior_with(observable, family, &NumericPolicy::DEFAULT)
    }

    pub fn controlled_posterior_with(
        observable: &Observable,
        family: &[DensityOperator],
        policy: &NumericPolicy,
    ) -> Result<Self> {
        check_dim(observable.outcome_count(), family.len())?;
        let dim = observable.dim();
        let mut atoms = Vec::with_capacity(family.len());
        for (a, rho_a) in family.iter().enumerate() {
            check_dim(dim, rho_a.dim())?;
            if !rho_a.validate() {
                return Err(Error::InvalidState(format!(
                    "family member {a} is not a state"
                )));
            }
            let range = observable.range_basis(a);
            let mut kraus = Vec::new();
            for (lambda, phi) in rho_a.operator().eigh() {
                if lambda <= policy.rank_cutoff {
                    continue;
                }
                let s = C64::new(lambda.sqrt(), 0.0);
                for basis in &range {
                    kraus.push(phi.column() * basis.column().adjoint() * s);
                }
            }
            atoms.push(CPMap::new(dim, dim, kraus)?);
        }
        Ok(Self::new(observable.clone(), atoms)?.with_policy(*policy))
    }

    pub fn observable(&self) -> &Observable {
        &self.observable
    }

    pub fn atoms(&self) -> &[CPMap] {
        &self.atoms
    }

    pub fn atom(&self, index: usize) -> &CPMap {
        &self.atoms[index]
    }

    pub fn dim(&self) -> usize {
        self.observable.dim()
    }

    pub fn outcome_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn policy(&self) -> &NumericPolicy {
        &self.policy
    }

    /// `T_Δ(X) = Σ_{a∈Δ} T_a(X)` on any operator.
    pub fn apply_operator(&self, s: &OutcomeSet, x: &ComplexOperator) -> Result<ComplexOperator> {
        self.observable.check_set(s)?;
        check_dim(self.dim(), x.dim())?;
        let mut out = ComplexOperator::zeros(self.dim());
        for a in s.indices() {
            out = &out + &self.atoms[a].apply(x)?;
        }
        Ok(out)
    }

    pub fn apply(&self, s: &OutcomeSet, rho: &DensityOperator) -> Result<ComplexOperator> {
        self.apply_operator(s, rho.operator())
    }

    /// `p_a = Tr[T_a(ρ)]` for every outcome.
    pub fn outcome_distribution(&self, rho: &DensityOperator) -> Result<Vec<f64>> {
        check_dim(self.dim(), rho.dim())?;
        self.atoms
            .iter()
            .map(|atom| Ok(atom.apply(rho.operator())?.trace().re))
            .collect()
    }

    /// `T_Δ(ρ) / Tr[T_Δ(ρ)]`.
    pub fn selective_state(
        &self,
        s: &OutcomeSet,
        rho: &DensityOperator,
    ) -> Result<DensityOperator> {
        let unnormalized = self.apply(s, rho)?;
        let probability = unnormalized.trace().re;
        if probability <= self.policy.probability_floor {
            return Err(Error::NullEvent { probability });
        }
        DensityOperator::from_unnormalized(unnormalized)
    }

    /// Per-outcome posterior states; outcomes at or below the probability floor have none.
    pub fn posterior_family(&self, rho: &DensityOperator) -> Result<Vec<Posterior>> {
        let n = self.outcome_count();
        (0..n)
            .map(|a| {
                let unnormalized = self.atoms[a].apply(rho.operator())?;
                let probability = unnormalized.trace().re;
                let state = if probability > self.policy.probability_floor {
                    Some(DensityOperator::from_unnormalized(unnormalized)?)
                } else {
                    None
                };
                Ok(Posterior {
                    outcome: self.observable.outcomes()[a],
                    probability,
                    state,
                })
            })
            .collect()
    }

    pub fn verify_axioms(&self) -> AxiomReport {
        self.verify_axioms_with(&AxiomCheck::default())
    }

    /// Complete positivity via Choi spectra, additivity over random partitions, and
    /// A-compatibility on the matrix-unit basis.
    pub fn verify_axioms_with(&self, check: &AxiomCheck) -> AxiomReport {
        let dim = self.dim();
        let n = self.outcome_count();

        let min_choi_eigenvalue = self
            .atoms
            .iter()
            .map(|atom| atom.choi_matrix().eigenvalues_hermitian()[0])
            .fold(f64::INFINITY, f64::min);

        let basis: Vec<ComplexOperator> = (0..dim)
            .flat_map(|i| (0..dim).map(move |j| ComplexOperator::matrix_unit(dim, i, j)))
            .collect();

        let mut r = rng(check.seed);
        let mut max_additivity_violation: f64 = 0.0;
        for _ in 0..check.partitions {
            let whole = random_subset(&mut r, n);
            let parts = random_partition(&mut r, &whole);
            for x in &basis {
                let total = self.apply_operator(&whole, x).expect("dimensions checked");
                let mut sum = ComplexOperator::zeros(dim);
                for part in &parts {
                    sum = &sum + &self.apply_operator(part, x).expect("dimensions checked");
                }
                max_additivity_violation = max_additivity_violation.max((&total - &sum).max_abs());
            }
        }

        let mut max_compat_violation: f64 = 0.0;
        for (a, atom) in self.atoms.iter().enumerate() {
            let e = self.observable.projection(a);
            for x in &basis {
                let lhs = atom.apply(x).expect("dimensions checked").trace();
                let rhs = (e * x).trace();
                max_compat_violation = max_compat_violation.max((lhs - rhs).norm());
            }
        }

        AxiomReport {
            cp_ok: min_choi_eigenvalue >= -check.cp_tol,
            additivity_ok: max_additivity_violation <= check.additivity_tol,
            compat_ok: max_compat_violation <= check.compat_tol,
            min_choi_eigenvalue,
            max_additivity_violation,
            max_compat_violation,
        }
    }

    /// Largest Frobenius distance between corresponding atom Choi matrices.
    pub fn choi_distance(&self, other: &Instrument) -> Result<f64> {
        check_dim(self.outcome_count(), other.outcome_count())?;
        check_dim(self.dim(), other.dim())?;
        Ok(self
            .atoms
            .iter()
            .zip(&other.atoms)
            .map(|(a, b)| (&a.choi_matrix() - &b.choi_matrix()).frobenius_norm())
            .fold(0.0, f64::max))
    }
}

/// Largest trace distance between two posterior families over outcomes where both are defined.
pub fn posterior_family_distance(a: &[Posterior], b: &[Posterior]) -> Result<f64> {
    check_dim(a.len(), b.len())?;
    let mut worst: f64 = 0.0;
    for (pa, pb) in a.iter().zip(b) {
        if let (Some(sa), Some(sb)) = (&pa.state, &pb.state) {
            worst = worst.max(trace_distance(sa.operator(), sb.operator())?);
        }
    }
    Ok(worst)
}

fn random_subset<R: Rng + ?Sized>(r: &mut R, n: usize) -> OutcomeSet {
    if r.random_bool(0.5) {
        OutcomeSet::full(n)
    } else {
        OutcomeSet::from_flags((0..n).map(|_| r.random_bool(0.5)).collect())
    }
}

fn random_partition<R: Rng + ?Sized>(r: &mut R, whole: &OutcomeSet) -> Vec<OutcomeSet> {
    let n = whole.len();
    let mut members: Vec<usize> = whole.indices().collect();
    members.shuffle(r);
    let blocks = r.random_range(1..=3usize);
    let mut parts = vec![OutcomeSet::empty(n); blocks];
    for (k, idx) in members.into_iter().enumerate() {
        let b = if k < blocks {
            k
        } else {
            r.random_range(0..blocks)
        };
        parts[b] = parts[b].union(&OutcomeSet::singleton(n, idx));
    }
    parts
}
