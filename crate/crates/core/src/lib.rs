//! Finite-dimensional quantum measurement processes.
//!
//! Operators and states, observables, instruments with axiom checks,
//! indirect measurement models with dilation and extraction, and an exact
//! cyclic-grid position measurement.

pub mod apparatus;
pub mod error;
pub mod instrument;
pub mod observable;
pub mod ops;
pub mod policy;
pub mod position;
pub mod random;
pub mod state;

pub use apparatus::{
    ApparatusModel, JointDistribution, MeasuresReport, NonMixtureReport, OutcomeCorrespondence,
};
pub use error::{Error, Result};
pub use instrument::{AxiomCheck, AxiomReport, CPMap, Instrument, Posterior};
pub use observable::{Observable, OutcomeSet};
pub use ops::{ComplexOperator, Matrix, StateVector, C64};
pub use policy::NumericPolicy;
pub use position::GridSystem;
pub use state::DensityOperator;
