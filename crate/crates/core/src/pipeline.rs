//! The static analysis from a parsed module to its cost relations.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::args::{infer_args, ArgAssignment, ArgsError};
use crate::cfg::{build_cfg, Cfg, CfgError};
use crate::costrel::{generate_crs, CostRelError, CostRelationSystem};
use crate::energy::EnergyModel;
use crate::extract::{extract_nested_loops, ExtractError, ExtractedProgram};
use crate::ir::{validate, IrModule, Violation};
use crate::loops::{find_loops, LoopError, LoopForest};

#[derive(Debug, Clone)]
pub struct Analysis {
    pub cfgs: BTreeMap<String, Cfg>,
    pub forests: BTreeMap<String, LoopForest>,
    pub programs: BTreeMap<String, ExtractedProgram>,
    pub args: BTreeMap<String, ArgAssignment>,
    pub crs: CostRelationSystem,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PipelineError {
    Invalid(Vec<Violation>),
    Cfg(CfgError),
    Loops(LoopError),
    Extract(ExtractError),
    Args(ArgsError),
    CostRel(CostRelError),
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PipelineError::Invalid(vs) => {
                write!(f, "invalid module")?;
                for v in vs {
                    write!(f, "\n  {}", v)?;
                }
                Ok(())
            }
            PipelineError::Cfg(e) => write!(f, "{}", e),
            PipelineError::Loops(e) => write!(f, "{}", e),
            PipelineError::Extract(e) => write!(f, "{}", e),
            PipelineError::Args(e) => write!(f, "{}", e),
            PipelineError::CostRel(e) => write!(f, "{}", e),
        }
    }
}

impl core::error::Error for PipelineError {}

/// Graphs, loop forests and extracted programs of every function.
pub fn structure(
    module: &IrModule,
) -> Result<(BTreeMap<String, Cfg>, BTreeMap<String, LoopForest>, BTreeMap<String, ExtractedProgram>), PipelineError> {
    let violations = validate(module);
    if !violations.is_empty() {
        return Err(PipelineError::Invalid(violations));
    }
    let mut cfgs = BTreeMap::new();
    let mut forests = BTreeMap::new();
    let mut programs = BTreeMap::new();
    for f in &module.functions {
        let g = build_cfg(f).map_err(PipelineError::Cfg)?;
        let forest = find_loops(&g).map_err(PipelineError::Loops)?;
        let ep = extract_nested_loops(f, &g, &forest).map_err(PipelineError::Extract)?;
        cfgs.insert(f.name.clone(), g);
        forests.insert(f.name.clone(), forest);
        programs.insert(f.name.clone(), ep);
    }
    Ok((cfgs, forests, programs))
}

pub fn analyze(module: &IrModule, model: &EnergyModel) -> Result<Analysis, PipelineError> {
    let (cfgs, forests, programs) = structure(module)?;
    let mut args = BTreeMap::new();
    for f in &module.functions {
        let a = infer_args(f, &cfgs[&f.name]).map_err(PipelineError::Args)?;
        args.insert(f.name.clone(), a);
    }
    let crs = generate_crs(module, &programs, &args, model).map_err(PipelineError::CostRel)?;
    Ok(Analysis { cfgs, forests, programs, args, crs })
}
