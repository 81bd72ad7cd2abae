//! Minimal block arguments: the variables that can steer branches or feed calls.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::cfg::Cfg;
use crate::ir::{BasicBlock, Function, Instruction, Operand};
use crate::seval::{refs, seval_operand, Mode};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ArgAssignment {
    pub args_in: BTreeMap<String, Vec<String>>,
    pub args_out: BTreeMap<String, Vec<String>>,
}

impl ArgAssignment {
    pub fn inputs(&self, label: &str) -> &[String] {
        self.args_in.get(label).map(|v| v.as_slice()).unwrap_or(&[])
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ArgsError {
    MissingIncoming { block: String, pred: String, phi: String },
}

impl fmt::Display for ArgsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArgsError::MissingIncoming { block, pred, phi } => {
                write!(f, "phi `%{}` in `{}` has no incoming value for `{}`", phi, block, pred)
            }
        }
    }
}

impl core::error::Error for ArgsError {}

/// Block inputs an operand depends on, exactly or through a bounded remainder.
fn input_refs(bb: &BasicBlock, op: &Operand) -> BTreeSet<String> {
    let mut r = refs(&seval_operand(bb, op, Mode::Exact));
    r.extend(refs(&seval_operand(bb, op, Mode::Upper)));
    r
}

/// Inputs of the block's branch predicate.
pub fn gen_blk(bb: &BasicBlock) -> BTreeSet<String> {
    match bb.terminator() {
        Some(Instruction::CondBr { pred, .. }) => input_refs(bb, pred),
        _ => BTreeSet::new(),
    }
}

/// Inputs of every call argument in the block.
pub fn gen_fn(bb: &BasicBlock) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for i in &bb.insts {
        if let Instruction::Call { args, .. } = i {
            for a in args {
                out.extend(input_refs(bb, a));
            }
        }
    }
    out
}

/// Destinations of value-producing non-phi instructions.
pub fn kill(bb: &BasicBlock) -> BTreeSet<String> {
    bb.insts
        .iter()
        .filter(|i| !i.is_phi())
        .filter_map(|i| i.dest())
        .map(String::from)
        .collect()
}

/// Renames phi destinations of `to` into their operands on the edge from `from`.
pub fn phimap(from: &str, to: &BasicBlock, vars: &BTreeSet<String>) -> Result<BTreeSet<String>, ArgsError> {
    let mut out = BTreeSet::new();
    for v in vars {
        let phi = to.phis().find_map(|i| match i {
            Instruction::Phi { dest, incomings } if dest == v => Some(incomings),
            _ => None,
        });
        match phi {
            None => {
                out.insert(v.clone());
            }
            Some(incomings) => match incomings.iter().find(|(l, _)| l == from) {
                Some((_, Operand::Var(x))) => {
                    out.insert(x.clone());
                }
                Some((_, Operand::Const(_))) => {}
                None => {
                    return Err(ArgsError::MissingIncoming {
                        block: to.label.clone(),
                        pred: String::from(from),
                        phi: v.clone(),
                    })
                }
            },
        }
    }
    Ok(out)
}

/// Position of each variable's first occurrence in the function text, parameters first.
pub fn occurrence_order(f: &Function) -> BTreeMap<String, usize> {
    let mut order = BTreeMap::new();
    let note = |v: &str, order: &mut BTreeMap<String, usize>| {
        let n = order.len();
        order.entry(String::from(v)).or_insert(n);
    };
    for p in &f.params {
        note(p, &mut order);
    }
    for b in &f.blocks {
        for i in &b.insts {
            if let Some(d) = i.dest() {
                note(d, &mut order);
            }
            for op in i.operands() {
                if let Operand::Var(v) = op {
                    note(v, &mut order);
                }
            }
        }
    }
    order
}

fn ordered(set: BTreeSet<String>, order: &BTreeMap<String, usize>) -> Vec<String> {
    let mut v: Vec<String> = set.into_iter().collect();
    v.sort_by_key(|x| (order.get(x).copied().unwrap_or(usize::MAX), x.clone()));
    v
}

/// Least fixpoint of the argument equations over the function's graph.
pub fn infer_args(f: &Function, g: &Cfg) -> Result<ArgAssignment, ArgsError> {
    let order = occurrence_order(f);
    let mut ins: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
    let mut outs: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
    let mut base: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
    for b in &f.blocks {
        let mut g0 = gen_blk(b);
        g0.extend(gen_fn(b));
        base.insert(&b.label, g0);
    }
    let params: BTreeSet<String> = f.params.iter().cloned().collect();

    // Information flows backwards, so visit blocks in postorder.
    let mut visit: Vec<&str> = g.reverse_postorder();
    visit.reverse();
    let mut changed = true;
    while changed {
        changed = false;
        for &l in &visit {
            let Some(b) = f.block(l) else { continue };
            let mut out = BTreeSet::new();
            for s in g.succs(l) {
                let Some(sb) = f.block(s) else { continue };
                let sin = ins.get(s).cloned().unwrap_or_default();
                out.extend(phimap(l, sb, &sin)?);
            }
            let mut inn = base[l].clone();
            for v in &out {
                inn.extend(input_refs(b, &Operand::Var(v.clone())));
            }
            if l == f.entry {
                inn = params.clone();
            }
            if outs.get(l) != Some(&out) {
                outs.insert(l, out);
                changed = true;
            }
            if ins.get(l) != Some(&inn) {
                ins.insert(l, inn);
                changed = true;
            }
        }
    }

    let mut res = ArgAssignment::default();
    for b in &f.blocks {
        let l = b.label.as_str();
        let inn = if l == f.entry { f.params.clone() } else { ordered(ins.remove(l).unwrap_or_default(), &order) };
        res.args_in.insert(String::from(l), inn);
        res.args_out.insert(String::from(l), ordered(outs.remove(l).unwrap_or_default(), &order));
    }
    Ok(res)
}
