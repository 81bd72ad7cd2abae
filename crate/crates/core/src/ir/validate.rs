use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use super::{Instruction, IrModule, Operand};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Rule {
    DuplicateFunction,
    NoBlocks,
    EntryHasPhi,
    PhiNotLeading,
    MissingTerminator,
    TerminatorNotLast,
    SsaViolation(String),
    UnknownLabel(String),
    UnknownCallee(String),
    CallArity { callee: String, expected: usize, found: usize },
    UndefinedVariable(String),
    /// A phi lacks an incoming value for a predecessor, or names a non-predecessor.
    PhiIncoming(String),
    Unreachable,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Violation {
    pub function: String,
    pub block: Option<String>,
    pub rule: Rule,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "@{}", self.function)?;
        if let Some(b) = &self.block {
            write!(f, ":{}", b)?;
        }
        f.write_str(": ")?;
        match &self.rule {
            Rule::DuplicateFunction => f.write_str("function defined twice"),
            Rule::NoBlocks => f.write_str("function has no blocks"),
            Rule::EntryHasPhi => f.write_str("entry block contains a phi"),
            Rule::PhiNotLeading => f.write_str("phi not leading"),
            Rule::MissingTerminator => f.write_str("block does not end in a terminator"),
            Rule::TerminatorNotLast => f.write_str("terminator before the end of the block"),
            Rule::SsaViolation(v) => write!(f, "`%{}` assigned more than once", v),
            Rule::UnknownLabel(l) => write!(f, "unknown label `{}`", l),
            Rule::UnknownCallee(c) => write!(f, "call to undeclared `@{}`", c),
            Rule::CallArity { callee, expected, found } => {
                write!(f, "`@{}` takes {} arguments, {} given", callee, expected, found)
            }
            Rule::UndefinedVariable(v) => write!(f, "`%{}` is never defined", v),
            Rule::PhiIncoming(v) => write!(f, "phi `%{}` does not match the block's predecessors", v),
            Rule::Unreachable => f.write_str("block unreachable from entry"),
        }
    }
}

/// Checks every structural invariant; an empty list means the module is well formed.
pub fn validate(m: &IrModule) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut fn_names = BTreeSet::new();
    for e in &m.externals {
        fn_names.insert(e.name.as_str());
    }
    for f in &m.functions {
        let v = |block: Option<&str>, rule: Rule| Violation {
            function: f.name.clone(),
            block: block.map(String::from),
            rule,
        };
        if !fn_names.insert(f.name.as_str()) {
            out.push(v(None, Rule::DuplicateFunction));
        }
        if f.blocks.is_empty() {
            out.push(v(None, Rule::NoBlocks));
            continue;
        }
        let labels: BTreeSet<&str> = f.blocks.iter().map(|b| b.label.as_str()).collect();
        if !labels.contains(f.entry.as_str()) {
            out.push(v(None, Rule::UnknownLabel(f.entry.clone())));
        }

        let mut defined: BTreeMap<&str, usize> = BTreeMap::new();
        for p in &f.params {
            *defined.entry(p.as_str()).or_default() += 1;
        }
        for b in &f.blocks {
            for i in &b.insts {
                if let Some(d) = i.dest() {
                    *defined.entry(d).or_default() += 1;
                }
            }
        }
        for (name, n) in &defined {
            if *n > 1 {
                let blk = f.def_block(name);
                out.push(v(blk, Rule::SsaViolation(String::from(*name))));
            }
        }

        let mut preds: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for b in &f.blocks {
            let lbl = Some(b.label.as_str());
            if b.label == f.entry && b.insts.iter().any(|i| i.is_phi()) {
                out.push(v(lbl, Rule::EntryHasPhi));
            }
            let mut seen_non_phi = false;
            for i in &b.insts {
                if i.is_phi() && seen_non_phi {
                    out.push(v(lbl, Rule::PhiNotLeading));
                    break;
                }
                seen_non_phi |= !i.is_phi();
            }
            match b.insts.last() {
                Some(t) if t.is_terminator() => {}
                _ => out.push(v(lbl, Rule::MissingTerminator)),
            }
            let n = b.insts.len();
            if b.insts.iter().take(n.saturating_sub(1)).any(|i| i.is_terminator()) {
                out.push(v(lbl, Rule::TerminatorNotLast));
            }
            for i in &b.insts {
                for s in i.successors() {
                    if labels.contains(s) {
                        preds.entry(s).or_default().insert(b.label.as_str());
                    } else {
                        out.push(v(lbl, Rule::UnknownLabel(String::from(s))));
                    }
                }
                if let Instruction::Phi { incomings, .. } = i {
                    for (l, _) in incomings {
                        if !labels.contains(l.as_str()) {
                            out.push(v(lbl, Rule::UnknownLabel(l.clone())));
                        }
                    }
                }
                if let Instruction::Call { callee, args, .. } = i {
                    if let Some(target) = m.function(callee) {
                        if target.params.len() != args.len() {
                            out.push(v(
                                lbl,
                                Rule::CallArity {
                                    callee: callee.clone(),
                                    expected: target.params.len(),
                                    found: args.len(),
                                },
                            ));
                        }
                    } else if m.external(callee).is_none() {
                        out.push(v(lbl, Rule::UnknownCallee(callee.clone())));
                    }
                }
                for op in i.operands() {
                    if let Operand::Var(name) = op {
                        if !defined.contains_key(name.as_str()) {
                            out.push(v(lbl, Rule::UndefinedVariable(name.clone())));
                        }
                    }
                }
            }
        }

        for b in &f.blocks {
            let empty = BTreeSet::new();
            let ps = preds.get(b.label.as_str()).unwrap_or(&empty);
            for i in b.phis() {
                if let Instruction::Phi { dest, incomings } = i {
                    let inc: BTreeSet<&str> = incomings.iter().map(|(l, _)| l.as_str()).collect();
                    if &inc != ps || inc.len() != incomings.len() {
                        out.push(v(Some(&b.label), Rule::PhiIncoming(dest.clone())));
                    }
                }
            }
        }

        // Reachability from entry.
        let mut reached = BTreeSet::new();
        let mut stack = alloc::vec![f.entry.as_str()];
        while let Some(l) = stack.pop() {
            if !reached.insert(l) {
                continue;
            }
            if let Some(b) = f.block(l) {
                stack.extend(b.successors());
            }
        }
        for b in &f.blocks {
            if !reached.contains(b.label.as_str()) {
                out.push(v(Some(&b.label), Rule::Unreachable));
            }
        }
    }
    out
}
