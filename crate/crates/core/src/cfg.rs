//! Control-flow graphs over block labels.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::fmt::Write;

use crate::ir::{Function, Instruction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Polarity {
    Always,
    True,
    False,
    /// Leaves an extracted loop's call node towards one of the loop's exit targets.
    Return,
}

impl Polarity {
    pub fn as_str(self) -> &'static str {
        match self {
            Polarity::Always => "always",
            Polarity::True => "true",
            Polarity::False => "false",
            Polarity::Return => "return",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Edge {
    pub from: String,
    pub to: String,
    pub polarity: Polarity,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Cfg {
    pub function: String,
    pub nodes: Vec<String>,
    pub edges: Vec<Edge>,
    pub entry: String,
    /// Nodes standing for an extracted loop rather than a block.
    pub call_nodes: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CfgError {
    NoBlocks(String),
    UnknownLabel { function: String, label: String },
    Unreachable { function: String, block: String },
}

impl fmt::Display for CfgError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CfgError::NoBlocks(func) => write!(f, "@{} has no blocks", func),
            CfgError::UnknownLabel { function, label } => write!(f, "@{}: branch to unknown label `{}`", function, label),
            CfgError::Unreachable { function, block } => write!(f, "@{}: block `{}` is unreachable", function, block),
        }
    }
}

impl core::error::Error for CfgError {}

/// Graph of `f`'s blocks in source order, one edge per branch target.
pub fn build_cfg(f: &Function) -> Result<Cfg, CfgError> {
    if f.blocks.is_empty() {
        return Err(CfgError::NoBlocks(f.name.clone()));
    }
    let nodes: Vec<String> = f.blocks.iter().map(|b| b.label.clone()).collect();
    let mut edges = Vec::new();
    for b in &f.blocks {
        let targets: Vec<(&str, Polarity)> = match b.terminator() {
            Some(Instruction::CondBr { then_label, else_label, .. }) => {
                alloc::vec![(then_label.as_str(), Polarity::True), (else_label.as_str(), Polarity::False)]
            }
            Some(Instruction::Br { target }) => alloc::vec![(target.as_str(), Polarity::Always)],
            _ => Vec::new(),
        };
        for (t, p) in targets {
            if !nodes.iter().any(|n| n == t) {
                return Err(CfgError::UnknownLabel { function: f.name.clone(), label: String::from(t) });
            }
            edges.push(Edge { from: b.label.clone(), to: String::from(t), polarity: p });
        }
    }
    let g = Cfg { function: f.name.clone(), nodes, edges, entry: f.entry.clone(), call_nodes: BTreeSet::new() };
    let reach = g.reachable();
    if let Some(n) = g.nodes.iter().find(|n| !reach.contains(n.as_str())) {
        return Err(CfgError::Unreachable { function: f.name.clone(), block: n.clone() });
    }
    Ok(g)
}

impl Cfg {
    pub fn succs(&self, n: &str) -> Vec<&str> {
        self.edges.iter().filter(|e| e.from == n).map(|e| e.to.as_str()).collect()
    }

    pub fn preds(&self, n: &str) -> Vec<&str> {
        self.edges.iter().filter(|e| e.to == n).map(|e| e.from.as_str()).collect()
    }

    pub fn out_edges(&self, n: &str) -> Vec<&Edge> {
        self.edges.iter().filter(|e| e.from == n).collect()
    }

    pub fn contains(&self, n: &str) -> bool {
        self.nodes.iter().any(|x| x == n)
    }

    pub fn index_of(&self, n: &str) -> Option<usize> {
        self.nodes.iter().position(|x| x == n)
    }

    pub fn reachable(&self) -> BTreeSet<&str> {
        let mut seen = BTreeSet::new();
        let mut stack = alloc::vec![self.entry.as_str()];
        while let Some(n) = stack.pop() {
            if seen.insert(n) {
                stack.extend(self.succs(n));
            }
        }
        seen
    }

    /// Nodes in reverse postorder of a depth-first walk from the entry.
    pub fn reverse_postorder(&self) -> Vec<&str> {
        let mut order = Vec::new();
        let mut seen = BTreeSet::new();
        // Iterative DFS keeping an explicit successor cursor.
        let mut stack: Vec<(&str, usize)> = alloc::vec![(self.entry.as_str(), 0)];
        seen.insert(self.entry.as_str());
        while let Some((n, k)) = stack.pop() {
            let succ = self.succs(n);
            if k < succ.len() {
                stack.push((n, k + 1));
                let s = succ[k];
                if seen.insert(s) {
                    stack.push((s, 0));
                }
            } else {
                order.push(n);
            }
        }
        order.reverse();
        order
    }

    /// Immediate dominators, keyed by node; the entry maps to itself.
    pub fn idoms(&self) -> BTreeMap<String, String> {
        let rpo = self.reverse_postorder();
        let pos: BTreeMap<&str, usize> = rpo.iter().enumerate().map(|(i, n)| (*n, i)).collect();
        let mut idom: Vec<Option<usize>> = alloc::vec![None; rpo.len()];
        idom[0] = Some(0);
        let intersect = |idom: &Vec<Option<usize>>, mut a: usize, mut b: usize| {
            while a != b {
                while a > b {
                    a = idom[a].expect("processed");
                }
                while b > a {
                    b = idom[b].expect("processed");
                }
            }
            a
        };
        let mut changed = true;
        while changed {
            changed = false;
            for (i, n) in rpo.iter().enumerate().skip(1) {
                let mut new: Option<usize> = None;
                for p in self.preds(n) {
                    let Some(&pi) = pos.get(p) else { continue };
                    if idom[pi].is_none() {
                        continue;
                    }
                    new = Some(match new {
                        None => pi,
                        Some(cur) => intersect(&idom, pi, cur),
                    });
                }
                if new != idom[i] {
                    idom[i] = new;
                    changed = true;
                }
            }
        }
        rpo.iter()
            .enumerate()
            .filter_map(|(i, n)| idom[i].map(|d| (String::from(*n), String::from(rpo[d]))))
            .collect()
    }

    /// Whether `a` dominates `b`.
    pub fn dominates(idoms: &BTreeMap<String, String>, a: &str, b: &str) -> bool {
        let mut cur = b;
        loop {
            if cur == a {
                return true;
            }
            match idoms.get(cur) {
                Some(d) if d != cur => cur = d,
                _ => return false,
            }
        }
    }

    /// Graph-description text with nodes as block labels and edges labelled by polarity.
    pub fn to_dot(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "digraph \"{}\" {{", self.function);
        for n in &self.nodes {
            let shape = if self.call_nodes.contains(n) { "box, style=dashed" } else if *n == self.entry { "box, peripheries=2" } else { "box" };
            let _ = writeln!(s, "  \"{}\" [shape={}];", n, shape);
        }
        for e in &self.edges {
            let _ = writeln!(s, "  \"{}\" -> \"{}\" [label=\"{}\"];", e.from, e.to, e.polarity.as_str());
        }
        s.push_str("}\n");
        s
    }
}
