//! Concrete interpreter: the oracle every inferred formula is checked against.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_traits::Zero;

use crate::energy::{EnergyError, EnergyModel, InstructionCounts, Site};
use crate::extract::ExtractedProgram;
use crate::ir::{BasicBlock, Function, Instruction, IrModule, Operand};
use crate::num::{BigInt, Rational};
use crate::seval::BinOp;

pub const DEFAULT_STEP_BUDGET: u64 = 10_000_000;
const MAX_CALL_DEPTH: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InterpError {
    StepBudgetExhausted(u64),
    UndefinedVariable { function: String, variable: String },
    Arity { callee: String, expected: usize, found: usize },
    UnknownFunction(String),
    UnknownLabel { function: String, label: String },
    MissingTerminator { function: String, block: String },
    MissingIncoming { function: String, block: String, pred: Option<String> },
    ShiftOutOfRange { function: String, block: String },
    CallDepth,
    /// Control left an extracted region towards a block it cannot reach.
    RegionEscape { function: String, label: String },
    Energy(EnergyError),
}

impl fmt::Display for InterpError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InterpError::StepBudgetExhausted(n) => write!(f, "step budget of {} instructions exhausted", n),
            InterpError::UndefinedVariable { function, variable } => {
                write!(f, "@{}: read of undefined `%{}`", function, variable)
            }
            InterpError::Arity { callee, expected, found } => {
                write!(f, "@{} takes {} arguments, {} given", callee, expected, found)
            }
            InterpError::UnknownFunction(n) => write!(f, "no function `@{}`", n),
            InterpError::UnknownLabel { function, label } => write!(f, "@{}: no block `{}`", function, label),
            InterpError::MissingTerminator { function, block } => {
                write!(f, "@{}:{} falls off the end", function, block)
            }
            InterpError::MissingIncoming { function, block, pred } => match pred {
                Some(p) => write!(f, "@{}:{} has no phi incoming for `{}`", function, block, p),
                None => write!(f, "@{}:{} evaluates a phi on function entry", function, block),
            },
            InterpError::ShiftOutOfRange { function, block } => write!(f, "@{}:{} shift amount out of range", function, block),
            InterpError::CallDepth => write!(f, "call depth limit of {} exceeded", MAX_CALL_DEPTH),
            InterpError::RegionEscape { function, label } => {
                write!(f, "@{}: extracted program cannot continue at `{}`", function, label)
            }
            InterpError::Energy(e) => write!(f, "{}", e),
        }
    }
}

impl core::error::Error for InterpError {}

impl From<EnergyError> for InterpError {
    fn from(e: EnergyError) -> Self {
        InterpError::Energy(e)
    }
}

/// Inputs of a run besides the arguments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fixture {
    /// Addressed memory; absent cells read as 0.
    pub memory: BTreeMap<BigInt, BigInt>,
    /// Values handed out by `memload` without an address, in order; 0 once exhausted.
    pub load_stream: Vec<BigInt>,
    /// Return values of external callees, overriding their declarations.
    pub external_returns: BTreeMap<String, BigInt>,
    pub step_budget: u64,
}

impl Default for Fixture {
    fn default() -> Self {
        Fixture {
            memory: BTreeMap::new(),
            load_stream: Vec::new(),
            external_returns: BTreeMap::new(),
            step_budget: DEFAULT_STEP_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEntry {
    pub function: String,
    pub block: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunResult {
    pub return_value: Option<BigInt>,
    /// Executed blocks of every activation, in execution order.
    pub trace: Vec<TraceEntry>,
    /// Per-instruction tally in nanojoules.
    pub energy: Rational,
    /// The same energy tallied block by block.
    pub block_energy: Rational,
    pub counts: InstructionCounts,
    pub memory: BTreeMap<BigInt, BigInt>,
    pub steps: u64,
}

impl RunResult {
    /// Block labels executed by `function`'s activations.
    pub fn labels_of(&self, function: &str) -> Vec<&str> {
        self.trace.iter().filter(|t| t.function == function).map(|t| t.block.as_str()).collect()
    }
}

/// Mutable interpreter state for one top-level run.
pub struct Machine<'a> {
    module: &'a IrModule,
    model: &'a EnergyModel,
    programs: &'a BTreeMap<String, ExtractedProgram>,
    pub memory: BTreeMap<BigInt, BigInt>,
    loads: VecDeque<BigInt>,
    external_returns: BTreeMap<String, BigInt>,
    pub trace: Vec<TraceEntry>,
    pub energy: Rational,
    pub block_energy: Rational,
    pub counts: InstructionCounts,
    pub steps: u64,
    pub step_budget: u64,
    depth: usize,
}

/// Per-activation state.
struct Frame<'f> {
    func: &'f Function,
    env: BTreeMap<String, BigInt>,
    prev_block: Option<String>,
    prev_inst: Option<&'static str>,
}

enum Flow {
    Goto(String),
    Return(Option<BigInt>),
}

enum RegionExit {
    Returned(Option<BigInt>),
    Exit(String),
}

impl<'a> Machine<'a> {
    pub fn new(
        module: &'a IrModule,
        model: &'a EnergyModel,
        programs: &'a BTreeMap<String, ExtractedProgram>,
        fixture: &Fixture,
    ) -> Self {
        Machine {
            module,
            model,
            programs,
            memory: fixture.memory.clone(),
            loads: fixture.load_stream.iter().cloned().collect(),
            external_returns: fixture.external_returns.clone(),
            trace: Vec::new(),
            energy: model.run_overhead(),
            block_energy: model.run_overhead(),
            counts: InstructionCounts::default(),
            steps: 0,
            step_budget: fixture.step_budget,
            depth: 0,
        }
    }

    pub fn finish(self, return_value: Option<BigInt>) -> RunResult {
        RunResult {
            return_value,
            trace: self.trace,
            energy: self.energy,
            block_energy: self.block_energy,
            counts: self.counts,
            memory: self.memory,
            steps: self.steps,
        }
    }

    pub fn call(&mut self, name: &str, args: &[BigInt]) -> Result<Option<BigInt>, InterpError> {
        let func = self.module.function(name).ok_or_else(|| InterpError::UnknownFunction(String::from(name)))?;
        if func.params.len() != args.len() {
            return Err(InterpError::Arity { callee: String::from(name), expected: func.params.len(), found: args.len() });
        }
        if self.depth >= MAX_CALL_DEPTH {
            return Err(InterpError::CallDepth);
        }
        self.depth += 1;
        let env = func.params.iter().cloned().zip(args.iter().cloned()).collect();
        let mut frame = Frame { func, env, prev_block: None, prev_inst: None };
        let programs = self.programs;
        let result = match programs.get(name) {
            Some(ep) => match self.run_region(ep, 0, &func.entry, &mut frame)? {
                RegionExit::Returned(v) => Ok(v),
                RegionExit::Exit(l) => Err(InterpError::RegionEscape { function: String::from(name), label: l }),
            },
            None => self.run_plain(&mut frame),
        };
        self.depth -= 1;
        result
    }

    fn run_plain(&mut self, frame: &mut Frame<'a>) -> Result<Option<BigInt>, InterpError> {
        let mut cur = frame.func.entry.clone();
        loop {
            match self.exec_block(frame, &cur)? {
                Flow::Goto(next) => cur = next,
                Flow::Return(v) => return Ok(v),
            }
        }
    }

    fn run_region(
        &mut self,
        ep: &ExtractedProgram,
        region: usize,
        start: &str,
        frame: &mut Frame<'a>,
    ) -> Result<RegionExit, InterpError> {
        let r = &ep.regions[region];
        let mut cur = String::from(start);
        loop {
            if !r.cfg.contains(&cur) {
                return Ok(RegionExit::Exit(cur));
            }
            if r.cfg.call_nodes.contains(&cur) {
                let cont = ep.continuations.get(&cur).ok_or_else(|| InterpError::RegionEscape {
                    function: frame.func.name.clone(),
                    label: cur.clone(),
                })?;
                match self.run_region(ep, cont.region, &cur, frame)? {
                    RegionExit::Returned(v) => return Ok(RegionExit::Returned(v)),
                    RegionExit::Exit(t) => {
                        if !cont.targets.contains(&t) {
                            return Err(InterpError::RegionEscape { function: frame.func.name.clone(), label: t });
                        }
                        cur = t;
                        continue;
                    }
                }
            }
            match self.exec_block(frame, &cur)? {
                Flow::Goto(next) => cur = next,
                Flow::Return(v) => return Ok(RegionExit::Returned(v)),
            }
        }
    }

    fn read(&self, frame: &Frame<'_>, op: &Operand) -> Result<BigInt, InterpError> {
        match op {
            Operand::Const(c) => Ok(c.clone()),
            Operand::Var(v) => frame.env.get(v).cloned().ok_or_else(|| InterpError::UndefinedVariable {
                function: frame.func.name.clone(),
                variable: v.clone(),
            }),
        }
    }

    fn charge(&mut self, frame: &mut Frame<'_>, bb: &BasicBlock, index: usize, inst: &Instruction) -> Result<(), InterpError> {
        self.steps += 1;
        if self.steps > self.step_budget {
            return Err(InterpError::StepBudgetExhausted(self.step_budget));
        }
        let site = Site { function: &frame.func.name, block: &bb.label, index };
        self.energy += self.model.instruction_cost(site, inst)?;
        let name = inst.mnemonic();
        *self.counts.by_name.entry(String::from(name)).or_default() += 1;
        *self.counts.by_thread.entry((1, String::from(name))).or_default() += 1;
        if let Some(p) = frame.prev_inst {
            self.energy += self.model.pair_cost(p, name);
            *self.counts.by_pair.entry((String::from(p), String::from(name))).or_default() += 1;
        }
        frame.prev_inst = Some(name);
        Ok(())
    }

    fn exec_block(&mut self, frame: &mut Frame<'a>, label: &str) -> Result<Flow, InterpError> {
        let func = frame.func;
        let bb = func.block(label).ok_or_else(|| InterpError::UnknownLabel {
            function: func.name.clone(),
            label: String::from(label),
        })?;
        self.trace.push(TraceEntry { function: func.name.clone(), block: bb.label.clone() });
        self.block_energy += self.model.block_cost(self.module, &func.name, bb)?;
        if let Some(prev) = frame.prev_block.as_deref().and_then(|p| func.block(p)) {
            self.block_energy += self.model.junction_cost(prev, bb);
        }

        // Phis read their operands simultaneously.
        let mut phi_values = Vec::new();
        for inst in bb.phis() {
            if let Instruction::Phi { dest, incomings } = inst {
                let pred = frame.prev_block.clone();
                let v = incomings
                    .iter()
                    .find(|(l, _)| Some(l) == pred.as_ref())
                    .map(|(_, v)| v)
                    .ok_or_else(|| InterpError::MissingIncoming {
                        function: func.name.clone(),
                        block: bb.label.clone(),
                        pred: pred.clone(),
                    })?;
                phi_values.push((dest.clone(), self.read(frame, v)?));
            }
        }
        let n_phi = phi_values.len();
        for (k, (d, v)) in phi_values.into_iter().enumerate() {
            self.charge(frame, bb, k, &bb.insts[k])?;
            frame.env.insert(d, v);
        }

        for (index, inst) in bb.insts.iter().enumerate().skip(n_phi) {
            self.charge(frame, bb, index, inst)?;
            match inst {
                Instruction::Phi { .. } => {
                    return Err(InterpError::MissingIncoming {
                        function: func.name.clone(),
                        block: bb.label.clone(),
                        pred: frame.prev_block.clone(),
                    })
                }
                Instruction::Op { dest, opcode, args, .. } => {
                    let vals = args.iter().map(|a| self.read(frame, a)).collect::<Result<Vec<_>, _>>()?;
                    let v = match BinOp::from_opcode(*opcode) {
                        Some(op) => op.apply(&vals[0], &vals[1]).ok_or_else(|| InterpError::ShiftOutOfRange {
                            function: func.name.clone(),
                            block: bb.label.clone(),
                        })?,
                        None => {
                            if vals[0].is_zero() {
                                vals[2].clone()
                            } else {
                                vals[1].clone()
                            }
                        }
                    };
                    frame.env.insert(dest.clone(), v);
                }
                Instruction::Call { dest, callee, args } => {
                    let vals = args.iter().map(|a| self.read(frame, a)).collect::<Result<Vec<_>, _>>()?;
                    let ret = if let Some(ext) = self.module.external(callee) {
                        self.energy += &ext.cost;
                        Some(self.external_returns.get(callee).cloned().unwrap_or_else(|| ext.returns.clone()))
                    } else {
                        self.call(callee, &vals)?
                    };
                    if let Some(d) = dest {
                        frame.env.insert(d.clone(), ret.unwrap_or_else(BigInt::zero));
                    }
                }
                Instruction::MemLoad { dest, addr } => {
                    let v = match addr {
                        Some(a) => {
                            let a = self.read(frame, a)?;
                            self.memory.get(&a).cloned().unwrap_or_else(BigInt::zero)
                        }
                        None => self.loads.pop_front().unwrap_or_else(BigInt::zero),
                    };
                    frame.env.insert(dest.clone(), v);
                }
                Instruction::MemStore { target } => {
                    if let Some((a, v)) = target {
                        let a = self.read(frame, a)?;
                        let v = self.read(frame, v)?;
                        self.memory.insert(a, v);
                    }
                }
                Instruction::CondBr { pred, then_label, else_label } => {
                    let p = self.read(frame, pred)?;
                    frame.prev_block = Some(bb.label.clone());
                    let t = if p.is_zero() { else_label } else { then_label };
                    return Ok(Flow::Goto(t.clone()));
                }
                Instruction::Br { target } => {
                    frame.prev_block = Some(bb.label.clone());
                    return Ok(Flow::Goto(target.clone()));
                }
                Instruction::Ret { value } => {
                    let v = value.as_ref().map(|v| self.read(frame, v)).transpose()?;
                    return Ok(Flow::Return(v));
                }
            }
        }
        Err(InterpError::MissingTerminator { function: func.name.clone(), block: bb.label.clone() })
    }
}

/// Runs `function` on the original graphs.
pub fn run(
    module: &IrModule,
    function: &str,
    args: &[BigInt],
    fixture: &Fixture,
    model: &EnergyModel,
) -> Result<RunResult, InterpError> {
    let none = BTreeMap::new();
    let mut m = Machine::new(module, model, &none, fixture);
    let v = m.call(function, args)?;
    Ok(m.finish(v))
}

/// Runs `function` replaying the extracted graphs of every function found in `programs`.
pub fn run_extracted(
    module: &IrModule,
    programs: &BTreeMap<String, ExtractedProgram>,
    function: &str,
    args: &[BigInt],
    fixture: &Fixture,
    model: &EnergyModel,
) -> Result<RunResult, InterpError> {
    let mut m = Machine::new(module, model, programs, fixture);
    let v = m.call(function, args)?;
    Ok(m.finish(v))
}
