//! Simulation and analysis toolkit for the C4/C6 concatenated error-detecting
//! architecture.
//!
//! The crate is organized bottom-up:
//!
//! * [`gf2`]: packed bit vectors and GF(2) linear algebra.
//! * [`pauli`]: Pauli products in the binary symplectic representation and
//!   check matrices.
//! * [`circuit`]: Clifford circuit description with a line-oriented text
//!   format.
//! * [`dense`]: a dense state-vector reference simulator used to validate the
//!   stabilizer machinery on small systems.
//! * [`tableau`]: a phase-exact stabilizer tableau kept in a canonical
//!   anchored form so that single-qubit measurements resolve quickly.
//! * [`machine`]: the batched error-propagation engine; one shared tableau
//!   drives many Pauli-frame trials packed 64 per machine word.
//! * [`noise`]: the depolarizing noise model, the counter-based PRF used for
//!   reproducible sampling, and exact enumerations of the small purification
//!   networks.
//! * [`code`]: the C4 and C6 codes, the concatenated block structure, logical
//!   operators, syndrome layouts and the hierarchical decision rule.
//! * [`decode`]: synthesis of decoding networks (block to physical qubits).
//! * [`protocol`]: state preparation, verification and teleportation stages
//!   with retry accounting, plus the logical gate implementations.
//! * [`harness`]: Monte Carlo experiments (gate, preparation, measurement,
//!   decoding, injection and teleportation-chain benchmarks).
//! * [`stats`]: confidence intervals, power-law fits and the constant-rate
//!   test.
//! * [`analytics`]: closed-form resource counts, error-rate models, threshold
//!   estimation and planning helpers.

pub mod circuit;
pub mod code;
pub mod decode;
pub mod dense;
pub mod gf2;
pub mod harness;
pub mod machine;
pub mod noise;
pub mod pauli;
pub mod protocol;
pub mod stats;
pub mod tableau;

pub use circuit::{Circuit, Gate};
pub use gf2::{BitMatrix, BitVec};
pub use noise::NoiseParams;
pub use pauli::PauliProduct;
pub use stats::{ExperimentStats, FitResult};
