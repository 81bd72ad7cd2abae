//! Static energy analysis for a small SSA intermediate representation.
//!
//! The pipeline parses a module, builds per-function control-flow graphs,
//! hoists nested loops into their own graphs, infers the minimal argument
//! set of every block, prices blocks with an energy model, emits guarded
//! cost relations and solves them into closed-form upper bounds. A concrete
//! interpreter executes the same programs and serves as the oracle for every
//! inferred formula.
//!
//! The crate is `no_std` and only needs `alloc`; file formats and the
//! command-line front end live in the `ircost` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod args;
pub mod cfg;
pub mod closed;
pub mod costrel;
pub mod energy;
pub mod extract;
pub mod interp;
pub mod ir;
pub mod linear;
pub mod loops;
pub mod num;
pub mod pipeline;
pub mod seval;
pub mod solver;

pub use args::{infer_args, ArgAssignment};
pub use cfg::{build_cfg, Cfg, CfgError};
pub use closed::{ClosedForm, CostExpr, Factor};
pub use costrel::{generate_crs, CostRelationSystem, CrEquation};
pub use energy::EnergyModel;
pub use extract::{extract_nested_loops, ExtractedProgram};
pub use interp::{run, Machine, RunResult};
pub use ir::{parse_module, validate, Function, IrModule};
pub use linear::{Cmp, Constraint, LinExpr};
pub use loops::{find_loops, LoopForest};
pub use num::Rational;
pub use pipeline::{analyze, Analysis, PipelineError};
pub use seval::{seval, Mode, SymExpr};
pub use solver::{evaluate_numeric, solve, Solution};
