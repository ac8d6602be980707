//! Learning fermionic Gaussian unitaries dressed with a few non-Gaussian gates.
//!
//! The crate is organised bottom-up: Majorana/Pauli algebra ([`majorana`],
//! [`pauli`]), dense reference simulation ([`dense`], [`choi`]), circuit
//! instances ([`instances`]), the measurement oracle ([`oracle`]), the
//! two-stage learner ([`learner`]), certificates ([`diagnostics`]) and the
//! matchgate-hierarchy probe ([`hierarchy`]).

pub mod choi;
pub mod dense;
pub mod diagnostics;
pub mod error;
pub mod hierarchy;
pub mod instances;
pub mod learner;
pub mod majorana;
pub mod oracle;
pub mod pauli;
pub mod phase;
mod serde_util;

pub use choi::ChoiMatrix;
pub use dense::{DenseOperator, OrthogonalMatrix};
pub use diagnostics::{Certificate, DiagnosticsReport};
pub use error::{Error, Result};
pub use hierarchy::HierarchyTrace;
pub use instances::{CircuitSpec, Layer, Path};
pub use learner::{LearnedDescription, PipelineModes, PipelineRun};
pub use majorana::{SparseOperator, StringKey};
pub use oracle::AccessMode;
