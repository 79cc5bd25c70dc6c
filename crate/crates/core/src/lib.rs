//! Adiabatic holonomy matrices for cyclic parameter variations of quantum
//! maps and Hamiltonians.
//!
//! A [`ParametricSystem`] supplies the generator and the eigenvalue
//! clusters. Frames are continued around a [`LoopPath`] and integrated into
//! `W(C)`, `B(C)` and the gauge-covariant holonomy `M(C) = W(C)B(C)`.

pub mod dynamics;
pub mod error;
pub mod framegauge;
pub mod matcore;
pub mod models;
pub mod oracles;
pub mod path;

pub use error::{Error, Result};
pub use framegauge::{
    apply_gauge, continue_frame, holonomy_auto, holonomy_matrix, holonomy_matrix_with, holonomy_run,
    ConnectionSample, Frame, FrameGauge, GaugeForm, GaugeMap, HolonomyResult, HolonomyRun, Refinement,
};
pub use matcore::CMatrix;
pub use models::{Coord, Degeneracy, Generator, ModelSpec, ParamPoint, ParametricSystem};
pub use path::LoopPath;
