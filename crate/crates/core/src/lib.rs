//! Toolkit for the uncapacitated inventory routing problem (IRP).
//!
//! The problem couples uncapacitated lot sizing at a set of retailers with
//! per-period vehicle routing from a single warehouse. This crate provides:
//!
//! * [`instance`] — problem data, two instance-generation designs and a
//!   plain-text instance format,
//! * [`milp`] — a solver-independent MILP representation with LP/MPS export,
//! * [`formulations`] — TSP subtour-elimination variants, lot-sizing variants
//!   and the combined IRP models,
//! * [`solver`] — a self-contained simplex + branch-and-bound MILP solver,
//! * [`oracles`] — independent exact algorithms used to cross-validate every
//!   formulation and the solver,
//! * [`expkit`] — the CLI and the benchmark/verification harness.

pub mod expkit;
pub mod formulations;
pub mod instance;
pub mod milp;
pub mod oracles;
pub mod solver;

pub use formulations::{FormulationSpec, InventoryVariant, TspVariant};
pub use instance::IrpInstance;
pub use milp::{Model, VarIndex};
pub use solver::{MipResult, SolverConfig};
