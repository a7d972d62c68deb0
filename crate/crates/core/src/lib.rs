//! Canonical guiding-center dynamics for charged particles in strong
//! magnetic fields.
//!
//! Everything is generic over the scalar type through [`Real`]; the `*64`
//! and `*32` aliases at the crate root fix the precision.

pub mod canonchecks;
pub mod diagnostics;
pub mod error;
pub mod fields;
pub mod fullorbit;
pub mod gcmotion;
pub mod gyrotransform;
pub mod real;
pub mod vector;

pub use canonchecks::{
    action_full, action_gc, el_residual, hat_basis, truncated_map_residual, verify_generalized_canonical,
    DiscreteLagrangian, FullLagrangian, GcLagrangian, GeneralizedSystem, GyrokineticSystem, ResidualReport,
    VelocityReading,
};
pub use diagnostics::{
    fit_loglog, mu_drift, scan, single_valuedness_probe, ConservationLedger, Ensemble, Metric, ProbeReport, ScanResult,
    Scenario,
};
pub use error::{Error, Result};
pub use fields::{frame, sample, FieldModel, FieldSample, FieldSetup, Species};
pub use fullorbit::{integrate_full, FullState, IntegrationSettings, Scheme, Trajectory};
pub use gcmotion::{canonical_rhs, hamiltonian_k, integrate_gc, v_d, v_e, GCDerivative, GcTrajectory};
pub use gyrotransform::{
    from_guiding_center, gc_from_orbit_average, larmor_vector, to_guiding_center, GCState, TransformOptions,
};
pub use real::Real;
pub use vector::{Tensor3, Vec3};

pub type Vec3f64 = Vec3<f64>;
pub type FieldModel64 = FieldModel<f64>;
pub type FieldSample64 = FieldSample<f64>;
pub type FieldSetup64 = FieldSetup<f64>;
pub type FullState64 = FullState<f64>;
pub type GCState64 = GCState<f64>;

pub type Vec3f32 = Vec3<f32>;
pub type FieldModel32 = FieldModel<f32>;
pub type FieldSample32 = FieldSample<f32>;
pub type FieldSetup32 = FieldSetup<f32>;
pub type FullState32 = FullState<f32>;
pub type GCState32 = GCState<f32>;
