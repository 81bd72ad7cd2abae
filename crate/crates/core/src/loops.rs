//! Natural loops and their nesting forest.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::cfg::Cfg;

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Loop {
    pub header: String,
    /// Body nodes in graph order, header first.
    pub body: Vec<String>,
    pub exits: Vec<(String, String)>,
    /// Back edges into the header.
    pub reentries: Vec<(String, String)>,
    /// Edges entering the header from outside the loop.
    pub entries: Vec<(String, String)>,
    pub parent: Option<usize>,
}

impl Loop {
    pub fn contains(&self, n: &str) -> bool {
        self.body.iter().any(|b| b == n)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LoopForest {
    /// Outer loops come before the loops they contain.
    pub loops: Vec<Loop>,
}

impl LoopForest {
    pub fn depth(&self, i: usize) -> usize {
        let mut d = 1;
        let mut cur = self.loops[i].parent;
        while let Some(p) = cur {
            d += 1;
            cur = self.loops[p].parent;
        }
        d
    }

    pub fn max_depth(&self) -> usize {
        (0..self.loops.len()).map(|i| self.depth(i)).max().unwrap_or(0)
    }

    pub fn children(&self, i: usize) -> Vec<usize> {
        (0..self.loops.len()).filter(|&j| self.loops[j].parent == Some(i)).collect()
    }

    pub fn roots(&self) -> Vec<usize> {
        (0..self.loops.len()).filter(|&j| self.loops[j].parent.is_none()).collect()
    }

    /// Innermost loop containing `n`.
    pub fn innermost(&self, n: &str) -> Option<usize> {
        (0..self.loops.len())
            .filter(|&i| self.loops[i].contains(n))
            .max_by_key(|&i| self.depth(i))
    }

    pub fn by_header(&self, h: &str) -> Option<usize> {
        self.loops.iter().position(|l| l.header == h)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LoopError {
    /// A cycle entered other than through a dominating header.
    IrreducibleLoop { function: String, edge: (String, String) },
}

impl fmt::Display for LoopError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LoopError::IrreducibleLoop { function, edge } => {
                write!(f, "@{}: irreducible control flow at edge {} -> {}", function, edge.0, edge.1)
            }
        }
    }
}

impl core::error::Error for LoopError {}

/// Dominator-based natural loops; back edges sharing a header form one loop.
pub fn find_loops(g: &Cfg) -> Result<LoopForest, LoopError> {
    let idoms = g.idoms();
    let rpo = g.reverse_postorder();
    let pos: BTreeMap<&str, usize> = rpo.iter().enumerate().map(|(i, n)| (*n, i)).collect();

    let mut latches: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for e in &g.edges {
        let (Some(&pf), Some(&pt)) = (pos.get(e.from.as_str()), pos.get(e.to.as_str())) else {
            continue;
        };
        if Cfg::dominates(&idoms, &e.to, &e.from) {
            latches.entry(e.to.as_str()).or_default().push(e.from.as_str());
        } else if pt <= pf {
            // A retreating edge whose target does not dominate its source.
            return Err(LoopError::IrreducibleLoop {
                function: g.function.clone(),
                edge: (e.from.clone(), e.to.clone()),
            });
        }
    }

    let mut loops = Vec::new();
    for (header, ls) in &latches {
        let mut body: BTreeSet<&str> = BTreeSet::new();
        body.insert(header);
        let mut stack: Vec<&str> = ls.clone();
        while let Some(n) = stack.pop() {
            if body.insert(n) {
                stack.extend(g.preds(n));
            }
        }
        let ordered: Vec<String> = g.nodes.iter().filter(|n| body.contains(n.as_str())).cloned().collect();
        let mut ordered_hf = alloc::vec![String::from(*header)];
        ordered_hf.extend(ordered.into_iter().filter(|n| n != header));
        let mut exits = Vec::new();
        let mut entries = Vec::new();
        let mut reentries = Vec::new();
        for e in &g.edges {
            let (fi, ti) = (body.contains(e.from.as_str()), body.contains(e.to.as_str()));
            if fi && !ti {
                exits.push((e.from.clone(), e.to.clone()));
            } else if !fi && ti {
                entries.push((e.from.clone(), e.to.clone()));
            } else if fi && e.to == *header {
                reentries.push((e.from.clone(), e.to.clone()));
            }
        }
        loops.push(Loop { header: String::from(*header), body: ordered_hf, exits, reentries, entries, parent: None });
    }

    // Outer loops first: larger bodies precede the loops nested in them.
    loops.sort_by(|a, b| {
        b.body
            .len()
            .cmp(&a.body.len())
            .then_with(|| g.index_of(&a.header).cmp(&g.index_of(&b.header)))
    });
    for i in 0..loops.len() {
        let parent = (0..i)
            .filter(|&j| loops[j].contains(&loops[i].header))
            .min_by_key(|&j| loops[j].body.len());
        loops[i].parent = parent;
    }
    Ok(LoopForest { loops })
}
