//! Simulator and analysis toolkit for the Y-00 (αη) coherent-state stream
//! cipher.
//!
//! A data bit is sent as one of `M` coherent states on a ring; a running
//! key expanded from a short seed picks which antipodal pair carries it.
//! The crate covers the encoding ([`constellation`], [`keystream`]), the
//! receiver models ([`measurement`]), Eve's attacks ([`attacks`]), entropy
//! and key-rate audits ([`infotheory`]), and experiment orchestration with
//! reproducible reports ([`harness`]).

pub mod attacks;
pub mod constellation;
pub mod error;
pub mod estimate;
pub mod harness;
pub mod infotheory;
pub mod keystream;
pub mod measurement;
pub mod quadrature;
pub mod rng;
pub mod transcript;

pub use constellation::{BasisIndex, ComplexAmplitude, Constellation};
pub use error::{Error, Result};
pub use estimate::BerEstimate;
pub use keystream::{EncBox, LfsrSpec, RunningKeyStream, SeedKey};
pub use measurement::{ComplexPoint, ErrorForm, ReceiverModel};
pub use rng::RngStream;
pub use transcript::Transcript;
