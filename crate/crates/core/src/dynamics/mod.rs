//! Frequency discretization of the continua, the single-excitation
//! Hamiltonian, time propagation and observables.

mod observables;
mod propagate;
mod state;
mod system;

pub use observables::{continuum_population_density, fitted_decay_rate, reconstruct_field, ContinuumDensity, FieldProbe};
pub(crate) use propagate::{run, EmitterDrive};
pub use propagate::{
    propagate, Frame, ObservableSeries, PropagationOptions, Propagator, DEFAULT_SAMPLES, MAX_EIGEN_DIMENSION,
    NORM_DRIFT_LIMIT,
};
pub use state::SingleExcitationState;
pub use system::DiscretizedSystem;
