//! Hoisting nested loops into graphs of their own.
//!
//! Each extracted loop becomes a region whose entry is the loop header and
//! whose exit edges are cut off: taking one returns the exit target as a tag.
//! In the enclosing graph the loop collapses into a call node carrying the
//! header's label, with one `Return` edge per exit target.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::cfg::{Cfg, Edge, Polarity};
use crate::ir::{Function, Instruction};
use crate::loops::LoopForest;
use crate::seval::{branch_predicate, Mode};

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Region {
    /// Function name for the residual graph, header label for a loop.
    pub name: String,
    pub cfg: Cfg,
    /// Edges removed from `cfg`; firing one leaves the region with the target as tag.
    pub exits: Vec<Edge>,
    /// Region holding this region's call node.
    pub parent: Option<usize>,
}

impl Region {
    pub fn is_loop(&self) -> bool {
        self.parent.is_some()
    }

    pub fn exit_targets(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for e in &self.exits {
            if !out.contains(&e.to.as_str()) {
                out.push(&e.to);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Continuation {
    pub region: usize,
    /// Exit targets of the called region, in the order they were found.
    pub targets: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExtractedProgram {
    pub function: String,
    /// The residual graph first, then one region per extracted loop, inner loops first.
    pub regions: Vec<Region>,
    /// Call-node label to the region it runs and where control may continue.
    pub continuations: BTreeMap<String, Continuation>,
    /// Exits leaving more than one nesting level at once.
    pub warnings: Vec<String>,
}

impl ExtractedProgram {
    pub fn residual(&self) -> &Region {
        &self.regions[0]
    }

    pub fn cfgs(&self) -> impl Iterator<Item = &Cfg> {
        self.regions.iter().map(|r| &r.cfg)
    }

    /// Region whose graph contains `node` as a plain block.
    pub fn region_of_block(&self, node: &str) -> Option<usize> {
        self.regions
            .iter()
            .position(|r| r.cfg.contains(node) && !r.cfg.call_nodes.contains(node))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExtractError {
    /// An enclosing loop's induction variable is redefined inside an inner loop.
    OuterInductionMutated { function: String, inner: String, outer: String, variable: String },
    /// A loop is entered somewhere other than its header.
    SideEntry { function: String, edge: (String, String) },
}

impl fmt::Display for ExtractError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtractError::OuterInductionMutated { function, inner, outer, variable } => write!(
                f,
                "@{}: induction variable `%{}` of loop `{}` is assigned inside inner loop `{}`",
                function, variable, outer, inner
            ),
            ExtractError::SideEntry { function, edge } => {
                write!(f, "@{}: loop entered through {} -> {}", function, edge.0, edge.1)
            }
        }
    }
}

impl core::error::Error for ExtractError {}

/// Loops that get their own graph: every nested loop, and top-level loops when there are several.
fn loops_to_extract(forest: &LoopForest) -> Vec<usize> {
    let roots = forest.roots().len();
    let mut out: Vec<usize> = (0..forest.loops.len())
        .filter(|&i| forest.loops[i].parent.is_some() || roots > 1)
        .collect();
    // The forest lists outer loops first; reversing puts children before parents.
    out.reverse();
    out
}

fn check_induction(f: &Function, forest: &LoopForest, inner: usize) -> Result<(), ExtractError> {
    let inner_loop = &forest.loops[inner];
    let defined_inside: BTreeSet<&str> = inner_loop
        .body
        .iter()
        .filter_map(|l| f.block(l))
        .flat_map(|b| b.insts.iter().filter_map(|i| i.dest()))
        .collect();
    let mut cur = inner_loop.parent;
    while let Some(p) = cur {
        let outer = &forest.loops[p];
        // Induction variables: header phis the loop's exit tests depend on.
        let mut tested = BTreeSet::new();
        for (from, _) in &outer.exits {
            if let Some(pred) = f.block(from).and_then(|b| branch_predicate(b, Mode::Exact)) {
                tested.extend(pred.vars_ordered());
            }
        }
        if let Some(h) = f.block(&outer.header) {
            for i in h.phis() {
                if let Instruction::Phi { dest, incomings } = i {
                    if !tested.contains(dest) {
                        continue;
                    }
                    for (l, v) in incomings {
                        let from_inside = outer.contains(l);
                        if let Some(var) = v.as_var() {
                            if from_inside && defined_inside.contains(var) {
                                return Err(ExtractError::OuterInductionMutated {
                                    function: f.name.clone(),
                                    inner: inner_loop.header.clone(),
                                    outer: outer.header.clone(),
                                    variable: dest.clone(),
                                });
                            }
                        }
                    }
                }
            }
        }
        cur = outer.parent;
    }
    Ok(())
}

/// Extracts nested loops innermost first until every graph has at most one loop.
pub fn extract_nested_loops(f: &Function, g: &Cfg, forest: &LoopForest) -> Result<ExtractedProgram, ExtractError> {
    let order = loops_to_extract(forest);
    for &li in &order {
        check_induction(f, forest, li)?;
    }

    let mut nodes = g.nodes.clone();
    let mut edges = g.edges.clone();
    let mut call_nodes = g.call_nodes.clone();
    let mut owner: BTreeMap<String, String> = g.nodes.iter().map(|n| (n.clone(), n.clone())).collect();
    let mut regions: Vec<Region> = Vec::new();
    let mut continuations = BTreeMap::new();
    let mut warnings = Vec::new();

    for &li in &order {
        let l = &forest.loops[li];
        let mut members: Vec<String> = Vec::new();
        for b in &l.body {
            let o = owner[b].clone();
            if !members.contains(&o) {
                members.push(o);
            }
        }
        let set: BTreeSet<&str> = members.iter().map(|s| s.as_str()).collect();
        let inside: Vec<Edge> = edges.iter().filter(|e| set.contains(e.from.as_str()) && set.contains(e.to.as_str())).cloned().collect();
        let exits: Vec<Edge> = edges.iter().filter(|e| set.contains(e.from.as_str()) && !set.contains(e.to.as_str())).cloned().collect();
        if let Some(e) = edges.iter().find(|e| !set.contains(e.from.as_str()) && set.contains(e.to.as_str()) && e.to != l.header) {
            return Err(ExtractError::SideEntry { function: f.name.clone(), edge: (e.from.clone(), e.to.clone()) });
        }
        for e in &exits {
            if call_nodes.contains(&e.from) {
                warnings.push(format!(
                    "loop `{}` exits from nested loop `{}` straight to `{}`",
                    l.header, e.from, e.to
                ));
            }
        }
        let region_calls: BTreeSet<String> = call_nodes.iter().filter(|c| set.contains(c.as_str())).cloned().collect();
        let cfg = Cfg {
            function: g.function.clone(),
            nodes: members.clone(),
            edges: inside,
            entry: l.header.clone(),
            call_nodes: region_calls,
        };
        let mut targets: Vec<String> = Vec::new();
        for e in &exits {
            if !targets.contains(&e.to) {
                targets.push(e.to.clone());
            }
        }
        regions.push(Region { name: l.header.clone(), cfg, exits, parent: None });

        edges.retain(|e| !set.contains(e.from.as_str()));
        for t in &targets {
            edges.push(Edge { from: l.header.clone(), to: t.clone(), polarity: Polarity::Return });
        }
        nodes.retain(|n| !set.contains(n.as_str()) || *n == l.header);
        call_nodes.retain(|c| !set.contains(c.as_str()));
        call_nodes.insert(l.header.clone());
        for o in owner.values_mut() {
            if set.contains(o.as_str()) {
                *o = l.header.clone();
            }
        }
        continuations.insert(l.header.clone(), Continuation { region: regions.len(), targets });
    }

    let residual = Region {
        name: f.name.clone(),
        cfg: Cfg { function: g.function.clone(), nodes, edges, entry: g.entry.clone(), call_nodes },
        exits: Vec::new(),
        parent: None,
    };
    regions.insert(0, residual);
    let parent_of: Vec<Option<usize>> = (0..regions.len())
        .map(|i| match i {
            0 => None,
            _ => regions.iter().position(|p| p.cfg.call_nodes.contains(&regions[i].name)),
        })
        .collect();
    for (r, p) in regions.iter_mut().zip(parent_of) {
        r.parent = p;
    }
    Ok(ExtractedProgram { function: f.name.clone(), regions, continuations, warnings })
}
