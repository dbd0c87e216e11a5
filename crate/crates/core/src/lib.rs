//! Generalized Clausius inequalities for finite-level systems.
//!
//! α-order entropies and heats, Bregman-divergence validity checks,
//! stroke-based heat machines, the quantum coherence extension and a
//! small collision-model bath.

pub mod accounting;
pub mod bathsim;
pub mod bregman;
pub mod entropy;
mod error;
pub mod protocols;
pub mod quantum;
pub mod special;
pub mod thermal;

pub use accounting::{Coupling, Ledger, ProcessRecord, Sample, Segment, SegmentKind};
pub use bregman::DivergenceReport;
pub use entropy::Generator;
pub use error::{Error, Result};
pub use protocols::{MachineSpec, ProtocolStep, ThermalMap};
pub use quantum::{DensityMatrix, HermitianOperator};
pub use thermal::{BathCoupling, BathSchedule, LevelSystem, ProbVector, ThermalContext};
