//! Sensorimotor exploration of a simulated arm touching its own tactile
//! skin. An analytic kinematic chain drives a sphere-tipped pen against
//! planar or cylindrical taxel patches; touches are projected into a 2D
//! observation space where random motor babbling, random and discretized
//! goal babbling, and goal babbling with direct optimization build a
//! nearest-neighbor inverse model. A checkpointed evaluation protocol
//! measures reaching error against fixed taxel test sets.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod evaluation;
pub mod explorer;
pub mod inverse_model;
pub mod kinematics;
pub mod observation;
pub mod optimizer;
pub mod plot;
pub mod presets;
pub mod runner;
pub mod skin;

pub use error::{Error, Result};
pub use evaluation::{CheckpointReport, TaxelOutcome, TestSet};
pub use explorer::{Environment, ExplorationOutcome, InterestGrid, Strategy};
pub use inverse_model::{LwlrParams, SampleDatabase};
pub use kinematics::{JointConfig, KinematicChain, Pose};
pub use observation::{distance, ObservationPoint, ObservationSpace, ProjectionSpec};
pub use optimizer::{cma_minimize, CmaOutcome, CmaState};
pub use runner::{ExperimentConfig, ExperimentResult};

pub use skin::{generate_skin, ContactResult, SkinPatch, SkinSpec, Surface};
