//! Scenario documents and their validation into core objects.

use std::path::Path;

use qreduce_core::observable::OutcomeSet;
use qreduce_core::{ApparatusModel, CPMap, DensityOperator, GridSystem, Instrument, Observable};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};
use crate::json::{self, RawMatrix, RawVector};

/// Tolerance for hand-written unit vectors.
pub const LOAD_NORM_TOL: f64 = 1e-10;
pub const DEFAULT_REPETITIONS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    InstrumentVerify,
    Dilate,
    PositionDemo,
    MomentumDemo,
    NonMixtureDemo,
    JointDistribution,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::InstrumentVerify => "instrument-verify",
            Kind::Dilate => "dilate",
            Kind::PositionDemo => "position-demo",
            Kind::MomentumDemo => "momentum-demo",
            Kind::NonMixtureDemo => "non-mixture-demo",
            Kind::JointDistribution => "joint-distribution",
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub cp: Option<f64>,
    pub additivity: Option<f64>,
    pub compat: Option<f64>,
    pub trace: Option<f64>,
    pub born: Option<f64>,
    pub posterior: Option<f64>,
    pub round_trip: Option<f64>,
    pub measures: Option<f64>,
    pub density: Option<f64>,
    pub covariance: Option<f64>,
    pub fidelity: Option<f64>,
    pub uniform: Option<f64>,
    pub nonselective: Option<f64>,
    pub contrast: Option<f64>,
    pub min_distance: Option<f64>,
    pub mixture: Option<f64>,
    pub factorization: Option<f64>,
    pub independence: Option<f64>,
    pub translation: Option<f64>,
    pub conditional: Option<f64>,
}

/// Resolved thresholds.
#[derive(Debug, Clone, Copy)]
pub struct Thresholds {
    pub cp: f64,
    pub additivity: f64,
    pub compat: f64,
    pub trace: f64,
    pub born: f64,
    pub posterior: f64,
    pub round_trip: f64,
    pub measures: f64,
    pub density: f64,
    pub covariance: f64,
    pub fidelity: f64,
    pub uniform: f64,
    pub nonselective: f64,
    pub contrast: f64,
    pub min_distance: f64,
    pub mixture: f64,
    pub factorization: f64,
    pub independence: f64,
    pub translation: f64,
    pub conditional: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            cp: 1e-10,
            additivity: 1e-12,
            compat: 1e-10,
            trace: 1e-10,
            born: 1e-10,
            posterior: 1e-9,
            round_trip: 1e-9,
            measures: 1e-10,
            density: 1e-12,
            covariance: 1e-12,
            fidelity: 1e-10,
            uniform: 1e-12,
            nonselective: 1e-10,
            contrast: 0.01,
            min_distance: 0.01,
            mixture: 1e-10,
            factorization: 1e-10,
            independence: 1e-10,
            translation: 1e-10,
            conditional: 1e-10,
        }
    }
}

impl Tolerances {
    pub fn resolve(&self) -> CliResult<Thresholds> {
        let d = Thresholds::default();
        let pick = |name: &str, v: Option<f64>, default: f64| match v {
            Some(x) if !(x.is_finite() && x >= 0.0) => Err(CliError::Validation(format!(
                "tolerance {name} must be finite and nonnegative"
            ))),
            Some(x) => Ok(x),
            None => Ok(default),
        };
        Ok(Thresholds {
            cp: pick("cp", self.cp, d.cp)?,
            additivity: pick("additivity", self.additivity, d.additivity)?,
            compat: pick("compat", self.compat, d.compat)?,
            trace: pick("trace", self.trace, d.trace)?,
            born: pick("born", self.born, d.born)?,
            posterior: pick("posterior", self.posterior, d.posterior)?,
            round_trip: pick("round_trip", self.round_trip, d.round_trip)?,
            measures: pick("measures", self.measures, d.measures)?,
            density: pick("density", self.density, d.density)?,
            covariance: pick("covariance", self.covariance, d.covariance)?,
            fidelity: pick("fidelity", self.fidelity, d.fidelity)?,
            uniform: pick("uniform", self.uniform, d.uniform)?,
            nonselective: pick("nonselective", self.nonselective, d.nonselective)?,
            contrast: pick("contrast", self.contrast, d.contrast)?,
            min_distance: pick("min_distance", self.min_distance, d.min_distance)?,
            mixture: pick("mixture", self.mixture, d.mixture)?,
            factorization: pick("factorization", self.factorization, d.factorization)?,
            independence: pick("independence", self.independence, d.independence)?,
            translation: pick("translation", self.translation, d.translation)?,
            conditional: pick("conditional", self.conditional, d.conditional)?,
        })
    }
}

/// Top-level document; `params` is decoded according to `kind`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub kind: Kind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub params: Value,
}

fn default_repetitions() -> usize {
    DEFAULT_REPETITIONS
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservableSpec {
    Diagonal(Vec<f64>),
    Hermitian(RawMatrix),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateSpec {
    Vector(RawVector),
    Density(RawMatrix),
    MaximallyMixed,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstrumentSpec {
    VonNeumann,
    Kraus(Vec<Vec<RawMatrix>>),
    ControlledPosterior(Vec<StateSpec>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetSpec {
    Full,
    Indices(Vec<usize>),
    Interval([f64; 2]),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PositionSpec {
    pub n: usize,
    pub phi: RawVector,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitSpec {
    pub sigma: StateSpec,
    pub coupling: RawMatrix,
    pub probe: ObservableSpec,
    pub measured: ObservableSpec,
    pub correspondence: Option<Vec<Option<usize>>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwapSpec {
    pub measured: ObservableSpec,
    pub sigma: StateSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApparatusSpec {
    Position(PositionSpec),
    Explicit(ExplicitSpec),
    Swap(SwapSpec),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstrumentParams {
    pub observable: ObservableSpec,
    pub instrument: InstrumentSpec,
    pub prior: Option<StateSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PositionDemoParams {
    pub n: usize,
    pub phi: RawVector,
    pub prior: Option<StateSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentumDemoParams {
    pub n: usize,
    pub p: usize,
    pub contrast_prior: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonMixtureParams {
    pub apparatus: ApparatusSpec,
    pub prior: StateSpec,
    pub set: SetSpec,
    pub partition: [SetSpec; 2],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointParams {
    pub apparatus: ApparatusSpec,
    pub prior: Option<StateSpec>,
    pub x_observable: ObservableSpec,
}

/// Kind-specific parameters after decoding.
#[derive(Debug, Clone)]
pub enum Params {
    InstrumentVerify(InstrumentParams),
    Dilate(InstrumentParams),
    PositionDemo(PositionDemoParams),
    MomentumDemo(MomentumDemoParams),
    NonMixtureDemo(NonMixtureParams),
    JointDistribution(JointParams),
}

impl Scenario {
    pub fn parse(text: &str) -> CliResult<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn params(&self) -> CliResult<Params> {
        let p = self.params.clone();
        Ok(match self.kind {
            Kind::InstrumentVerify => Params::InstrumentVerify(serde_json::from_value(p)?),
            Kind::Dilate => Params::Dilate(serde_json::from_value(p)?),
            Kind::PositionDemo => Params::PositionDemo(serde_json::from_value(p)?),
            Kind::MomentumDemo => Params::MomentumDemo(serde_json::from_value(p)?),
            Kind::NonMixtureDemo => Params::NonMixtureDemo(serde_json::from_value(p)?),
            Kind::JointDistribution => Params::JointDistribution(serde_json::from_value(p)?),
        })
    }
}

impl ObservableSpec {
    pub fn build(&self) -> CliResult<Observable> {
        match self {
            ObservableSpec::Diagonal(values) => {
                if values.is_empty() {
                    return Err(CliError::Validation("observable: empty spectrum".into()));
                }
                Ok(Observable::diagonal(values)?)
            }
            ObservableSpec::Hermitian(m) => Ok(Observable::from_hermitian(&json::operator(
                m,
                "observable",
            )?)?),
        }
    }
}

impl StateSpec {
    pub fn build(&self, dim: usize) -> CliResult<DensityOperator> {
        let state = match self {
            StateSpec::Vector(v) => {
                DensityOperator::from_vector(&json::unit_vector(v, "state", LOAD_NORM_TOL)?)?
            }
            StateSpec::Density(m) => DensityOperator::new(json::operator(m, "state")?)?,
            StateSpec::MaximallyMixed => DensityOperator::maximally_mixed(dim),
        };
        if state.dim() != dim {
            return Err(CliError::Validation(format!(
                "state has dimension {}, expected {dim}",
                state.dim()
            )));
        }
        Ok(state)
    }
}

impl InstrumentSpec {
    pub fn build(&self, observable: &Observable) -> CliResult<Instrument> {
        match self {
            InstrumentSpec::VonNeumann => Ok(Instrument::von_neumann(observable)),
            InstrumentSpec::Kraus(atoms) => {
                let atoms = atoms
                    .iter()
                    .enumerate()
                    .map(|(a, list)| {
                        let ops = list
                            .iter()
                            .map(|m| json::operator(m, &format!("atom {a}")))
                            .collect::<CliResult<Vec<_>>>()?;
                        if ops.is_empty() {
                            return Err(CliError::Validation(format!(
                                "atom {a} has no Kraus operators"
                            )));
                        }
                        Ok(CPMap::from_operators(ops)?)
                    })
                    .collect::<CliResult<Vec<_>>>()?;
                Ok(Instrument::new(observable.clone(), atoms)?)
            }
            InstrumentSpec::ControlledPosterior(family) => {
                let family = family
                    .iter()
                    .map(|s| s.build(observable.dim()))
                    .collect::<CliResult<Vec<_>>>()?;
                Ok(Instrument::controlled_posterior(observable, &family)?)
            }
        }
    }
}

impl SetSpec {
    pub fn build(&self, obs: &Observable) -> CliResult<OutcomeSet> {
        let n = obs.outcome_count();
        match self {
            SetSpec::Full => Ok(OutcomeSet::full(n)),
            SetSpec::Indices(ix) => Ok(OutcomeSet::from_indices(n, ix)?),
            SetSpec::Interval([lo, hi]) => Ok(OutcomeSet::from_interval(obs, *lo, *hi)),
        }
    }
}

impl ApparatusSpec {
    pub fn build(&self) -> CliResult<ApparatusModel> {
        match self {
            ApparatusSpec::Position(p) => {
                let grid = GridSystem::new(p.n)?;
                let phi = json::unit_vector(&p.phi, "phi", LOAD_NORM_TOL)?;
                Ok(qreduce_core::position::build_position_apparatus(
                    &grid, &phi,
                )?)
            }
            ApparatusSpec::Explicit(e) => {
                let probe = e.probe.build()?;
                let measured = e.measured.build()?;
                let sigma = e.sigma.build(probe.dim())?;
                let coupling = json::operator(&e.coupling, "coupling")?;
                let correspondence = match &e.correspondence {
                    Some(c) => c.clone(),
                    None => ApparatusModel::correspondence_by_value(&probe, &measured),
                };
                Ok(ApparatusModel::new(
                    sigma,
                    coupling,
                    probe,
                    measured,
                    correspondence,
                )?)
            }
            ApparatusSpec::Swap(s) => {
                let measured = s.measured.build()?;
                let sigma = s.sigma.build(measured.dim())?;
                Ok(ApparatusModel::swap(&measured, sigma)?)
            }
        }
    }
}
