//! Guarded cost relations over block arguments.
//!
//! Every plain block `B` of function `f` becomes the relation `f::B`, every
//! extracted loop with header `H` the relation `f::[H]`, and every external
//! callee a parameterless relation named after it. One equation is emitted
//! per outgoing edge.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use num_traits::{Signed, Zero};

use crate::args::ArgAssignment;
use crate::energy::{EnergyError, EnergyModel};
use crate::extract::ExtractedProgram;
use crate::ir::{BasicBlock, Function, Instruction, IrModule, Operand};
use crate::linear::{Cmp, Constraint, LinExpr};
use crate::num::{fmt_rational, parse_decimal, Rational};
use crate::seval::{branch_predicate, seval_operand, Mode, SymExpr};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CrCall {
    pub name: String,
    /// One linear argument per callee parameter; `None` when it cannot be expressed.
    pub args: Vec<Option<LinExpr>>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CrEquation {
    #[cfg_attr(feature = "serde", serde(with = "crate::num::serde_rat"))]
    pub cost: Rational,
    pub calls: Vec<CrCall>,
    /// Conjunction; empty means always applicable.
    pub guard: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Relation {
    pub params: Vec<String>,
    pub equations: Vec<CrEquation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CostRelationSystem {
    pub relations: BTreeMap<String, Relation>,
    /// Function name to the relation for a call of it.
    pub entries: BTreeMap<String, String>,
    /// Energy charged once per run on top of the entry relation.
    #[cfg_attr(feature = "serde", serde(with = "crate::num::serde_rat"))]
    pub overhead: Rational,
    pub warnings: Vec<String>,
}

impl CostRelationSystem {
    pub fn relation(&self, name: &str) -> Option<&Relation> {
        self.relations.get(name)
    }

    pub fn entry_of(&self, function: &str) -> Option<&str> {
        self.entries.get(function).map(|s| s.as_str())
    }

    /// Relations named in call positions that have no definition.
    pub fn undefined_calls(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for r in self.relations.values() {
            for e in &r.equations {
                for c in &e.calls {
                    if !self.relations.contains_key(&c.name) {
                        out.insert(c.name.clone());
                    }
                }
            }
        }
        out
    }

    /// Call sites whose argument count differs from the callee's parameter count.
    pub fn arity_mismatches(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for (n, r) in &self.relations {
            for e in &r.equations {
                for c in &e.calls {
                    if let Some(t) = self.relations.get(&c.name) {
                        if t.params.len() != c.args.len() {
                            out.push((n.clone(), c.name.clone()));
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CostRelError {
    Energy(EnergyError),
    UnknownFunction(String),
    NoProgram(String),
}

impl fmt::Display for CostRelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostRelError::Energy(e) => write!(f, "{}", e),
            CostRelError::UnknownFunction(n) => write!(f, "call of unknown function `@{}`", n),
            CostRelError::NoProgram(n) => write!(f, "no extracted program for `@{}`", n),
        }
    }
}

impl core::error::Error for CostRelError {}

impl From<EnergyError> for CostRelError {
    fn from(e: EnergyError) -> Self {
        CostRelError::Energy(e)
    }
}

pub fn block_relation(function: &str, label: &str) -> String {
    format!("{}::{}", function, label)
}

pub fn loop_relation(function: &str, header: &str) -> String {
    format!("{}::[{}]", function, header)
}

/// Exact integer predicate as a linear constraint.
fn predicate_constraint(e: &SymExpr) -> Option<Constraint> {
    if let SymExpr::Bin(op, a, b) = e {
        if let Some(cmp) = op.as_cmp() {
            return Some(Constraint::new(a.to_linear_int()?, cmp, b.to_linear_int()?));
        }
    }
    Some(Constraint::new(e.to_linear_int()?, Cmp::Ne, LinExpr::zero()))
}

fn within(l: &LinExpr, params: &[String]) -> bool {
    l.vars().iter().all(|v| params.contains(v))
}

/// An operand of block `bb` as a linear form over the block's arguments.
/// Exact when possible, otherwise the upper approximation.
fn operand_arg(bb: &BasicBlock, op: &Operand, params: &[String]) -> Option<LinExpr> {
    let exact = seval_operand(bb, op, Mode::Exact);
    if let Some(l) = exact.to_linear_int() {
        if within(&l, params) {
            return Some(l);
        }
    }
    let upper = seval_operand(bb, op, Mode::Upper);
    let l = upper.to_linear()?;
    within(&l, params).then_some(l)
}

fn phi_operand<'b>(to: &'b BasicBlock, from: &str, var: &str) -> Option<Option<&'b Operand>> {
    to.phis().find_map(|i| match i {
        Instruction::Phi { dest, incomings } if dest == var => {
            Some(incomings.iter().find(|(l, _)| l == from).map(|(_, v)| v))
        }
        _ => None,
    })
}

struct Gen<'a> {
    module: &'a IrModule,
    f: &'a Function,
    ep: &'a ExtractedProgram,
    args: &'a ArgAssignment,
    model: &'a EnergyModel,
    warnings: Vec<String>,
}

impl<'a> Gen<'a> {
    fn params(&self, label: &str) -> Vec<String> {
        self.args.inputs(label).to_vec()
    }

    /// Relation entered when control reaches `label` inside region `r`.
    fn target_name(&self, r: usize, label: &str) -> String {
        if self.ep.regions[r].cfg.call_nodes.contains(label) {
            loop_relation(&self.f.name, label)
        } else {
            block_relation(&self.f.name, label)
        }
    }

    fn edge_args(&mut self, from: &BasicBlock, to: &str) -> Vec<Option<LinExpr>> {
        let params = self.params(&from.label);
        let Some(tb) = self.f.block(to) else { return Vec::new() };
        self.params(to)
            .iter()
            .map(|p| {
                let op = match phi_operand(tb, &from.label, p) {
                    Some(Some(op)) => op.clone(),
                    Some(None) => return None,
                    None => Operand::Var(p.clone()),
                };
                let a = operand_arg(from, &op, &params);
                if a.is_none() {
                    self.warnings.push(format!(
                        "@{}: argument `{}` of `{}` is not linear in the inputs of `{}`",
                        self.f.name, p, to, from.label
                    ));
                }
                a
            })
            .collect()
    }

    fn guards(&mut self, bb: &BasicBlock) -> (Vec<Constraint>, Vec<Constraint>) {
        let Some(pred) = branch_predicate(bb, Mode::Exact) else {
            return (Vec::new(), Vec::new());
        };
        if pred.contains_unknown() {
            return (Vec::new(), Vec::new());
        }
        let params = self.params(&bb.label);
        match predicate_constraint(&pred) {
            Some(c) if c.vars().iter().all(|v| params.contains(v)) => (alloc::vec![c.clone()], alloc::vec![c.negate()]),
            _ => {
                self.warnings.push(format!(
                    "@{}:{}: branch condition `{}` is not linear; both successors stay enabled",
                    self.f.name, bb.label, pred
                ));
                (Vec::new(), Vec::new())
            }
        }
    }

    fn calls_in(&mut self, bb: &BasicBlock) -> Result<Vec<CrCall>, CostRelError> {
        let params = self.params(&bb.label);
        let mut out = Vec::new();
        for i in &bb.insts {
            if let Instruction::Call { callee, args, .. } = i {
                if self.module.external(callee).is_some() {
                    out.push(CrCall { name: callee.clone(), args: Vec::new() });
                } else {
                    let g = self.module.function(callee).ok_or_else(|| CostRelError::UnknownFunction(callee.clone()))?;
                    let args = args.iter().map(|a| operand_arg(bb, a, &params)).collect();
                    out.push(CrCall { name: block_relation(&g.name, &g.entry), args });
                }
            }
        }
        Ok(out)
    }

    fn block_equations(&mut self, r: usize, label: &str) -> Result<Relation, CostRelError> {
        let bb = self.f.block(label).ok_or_else(|| CostRelError::NoProgram(self.f.name.clone()))?;
        let base = self.model.block_base_cost(&self.f.name, bb)?;
        let pre = self.calls_in(bb)?;
        let (then_g, else_g) = self.guards(bb);
        let region = &self.ep.regions[r];
        let mut eqs = Vec::new();
        let targets: Vec<(String, bool)> = match bb.terminator() {
            Some(Instruction::CondBr { then_label, else_label, .. }) => {
                alloc::vec![(then_label.clone(), true), (else_label.clone(), false)]
            }
            Some(Instruction::Br { target }) => alloc::vec![(target.clone(), true)],
            _ => Vec::new(),
        };
        if targets.is_empty() {
            eqs.push(CrEquation { cost: base.clone(), calls: pre.clone(), guard: Vec::new() });
        }
        let conditional = targets.len() == 2 && targets[0].0 != targets[1].0;
        for (to, polarity) in targets {
            let guard = match (conditional, polarity) {
                (false, _) => Vec::new(),
                (true, true) => then_g.clone(),
                (true, false) => else_g.clone(),
            };
            let tb = self.f.block(&to);
            let junction = tb.map(|t| self.model.junction_cost(bb, t)).unwrap_or_else(Rational::zero);
            let mut calls = pre.clone();
            let leaves = region.exits.iter().any(|e| e.from == label && e.to == to);
            if !leaves {
                let args = self.edge_args(bb, &to);
                calls.push(CrCall { name: self.target_name(r, &to), args });
            }
            let eq = CrEquation { cost: &base + junction, calls, guard };
            if !eqs.contains(&eq) {
                eqs.push(eq);
            }
        }
        Ok(Relation { params: self.params(label), equations: eqs })
    }

    /// Variables assigned anywhere inside region `r`, nested regions included.
    fn defined_in(&self, r: usize) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let region = &self.ep.regions[r];
        for n in &region.cfg.nodes {
            if region.cfg.call_nodes.contains(n) {
                if let Some(c) = self.ep.continuations.get(n) {
                    out.extend(self.defined_in(c.region));
                }
            } else if let Some(b) = self.f.block(n) {
                out.extend(b.insts.iter().filter_map(|i| i.dest()).map(String::from));
            }
        }
        out
    }

    fn loop_equations(&mut self, parent: usize, header: &str) -> Relation {
        let params = self.params(header);
        let Some(cont) = self.ep.continuations.get(header) else {
            return Relation { params, equations: Vec::new() };
        };
        let child = cont.region;
        let inside = self.defined_in(child);
        let body = CrCall {
            name: block_relation(&self.f.name, header),
            args: params.iter().map(|p| Some(LinExpr::var(p))).collect(),
        };
        let mut eqs = Vec::new();
        let exits = self.ep.regions[child].exits.clone();
        for e in &exits {
            let mut calls = alloc::vec![body.clone()];
            if self.ep.regions[parent].cfg.contains(&e.to) {
                let tparams = self.params(&e.to);
                let tb = self.f.block(&e.to);
                let args = tparams
                    .iter()
                    .map(|p| {
                        let op = match tb.and_then(|t| phi_operand(t, &e.from, p)) {
                            Some(Some(op)) => op.clone(),
                            Some(None) => return None,
                            None => Operand::Var(p.clone()),
                        };
                        match op {
                            Operand::Const(c) => Some(LinExpr::constant(Rational::from_integer(c))),
                            Operand::Var(v) if !inside.contains(&v) && params.contains(&v) => Some(LinExpr::var(&v)),
                            Operand::Var(_) => None,
                        }
                    })
                    .collect();
                calls.push(CrCall { name: self.target_name(parent, &e.to), args });
            }
            let eq = CrEquation { cost: Rational::zero(), calls, guard: Vec::new() };
            if !eqs.contains(&eq) {
                eqs.push(eq);
            }
        }
        Relation { params, equations: eqs }
    }
}

/// Adds the relations of one function to `sys`.
pub fn generate_function_crs(
    module: &IrModule,
    f: &Function,
    ep: &ExtractedProgram,
    args: &ArgAssignment,
    model: &EnergyModel,
    sys: &mut CostRelationSystem,
) -> Result<(), CostRelError> {
    let mut g = Gen { module, f, ep, args, model, warnings: Vec::new() };
    for (r, region) in ep.regions.iter().enumerate() {
        for n in &region.cfg.nodes {
            if region.cfg.call_nodes.contains(n) {
                let rel = g.loop_equations(r, n);
                sys.relations.insert(loop_relation(&f.name, n), rel);
            } else {
                let rel = g.block_equations(r, n)?;
                sys.relations.insert(block_relation(&f.name, n), rel);
            }
        }
    }
    let entry = if ep.residual().cfg.call_nodes.contains(&f.entry) {
        loop_relation(&f.name, &f.entry)
    } else {
        block_relation(&f.name, &f.entry)
    };
    // Callers enter through the entry block's relation, whose parameters are the function's.
    sys.entries.insert(f.name.clone(), entry);
    for i in f.blocks.iter().flat_map(|b| b.insts.iter()) {
        if let Instruction::Call { callee, .. } = i {
            if let Some(ext) = module.external(callee) {
                sys.relations.entry(ext.name.clone()).or_insert_with(|| Relation {
                    params: Vec::new(),
                    equations: alloc::vec![CrEquation { cost: ext.cost.clone(), calls: Vec::new(), guard: Vec::new() }],
                });
            }
        }
    }
    sys.warnings.extend(g.warnings);
    Ok(())
}

/// Relations for every function of the module that has an extracted program.
pub fn generate_crs(
    module: &IrModule,
    programs: &BTreeMap<String, ExtractedProgram>,
    args: &BTreeMap<String, ArgAssignment>,
    model: &EnergyModel,
) -> Result<CostRelationSystem, CostRelError> {
    let mut sys = CostRelationSystem { overhead: model.run_overhead(), ..Default::default() };
    for f in &module.functions {
        let ep = programs.get(&f.name).ok_or_else(|| CostRelError::NoProgram(f.name.clone()))?;
        let a = args.get(&f.name).ok_or_else(|| CostRelError::NoProgram(f.name.clone()))?;
        generate_function_crs(module, f, ep, a, model, &mut sys)?;
    }
    Ok(sys)
}

// ---- text form ----

fn var_text(v: &str) -> String {
    if v.starts_with(|c: char| c.is_ascii_digit()) {
        format!("%{}", v)
    } else {
        String::from(v)
    }
}

fn lin_text(l: &LinExpr) -> String {
    l.rename(&|v| var_text(v)).to_string()
}

impl fmt::Display for CrCall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "C_{}(", self.name)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            match a {
                Some(l) => write!(f, "{}", lin_text(l))?,
                None => write!(f, "?")?,
            }
        }
        write!(f, ")")
    }
}

impl CrEquation {
    pub fn display<'e>(&'e self, name: &'e str, params: &'e [String]) -> impl fmt::Display + 'e {
        EqDisplay { name, params, eq: self }
    }
}

struct EqDisplay<'e> {
    name: &'e str,
    params: &'e [String],
    eq: &'e CrEquation,
}

impl fmt::Display for EqDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ps: Vec<String> = self.params.iter().map(|p| var_text(p)).collect();
        write!(f, "C_{}({}) = ", self.name, ps.join(", "))?;
        let mut parts: Vec<String> = Vec::new();
        if !self.eq.cost.is_zero() || self.eq.calls.is_empty() {
            parts.push(fmt_rational(&self.eq.cost));
        }
        parts.extend(self.eq.calls.iter().map(|c| c.to_string()));
        write!(f, "{}", parts.join(" + "))?;
        if !self.eq.guard.is_empty() {
            let gs: Vec<String> = self
                .eq
                .guard
                .iter()
                .map(|c| format!("{} {} {}", lin_text(&c.lhs), c.op.symbol(), lin_text(&c.rhs)))
                .collect();
            write!(f, " if {}", gs.join(" and "))?;
        }
        Ok(())
    }
}

impl fmt::Display for CostRelationSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (func, rel) in &self.entries {
            writeln!(f, "entry {} = C_{}", func, rel)?;
        }
        if !self.overhead.is_zero() {
            writeln!(f, "overhead {}", fmt_rational(&self.overhead))?;
        }
        for (name, r) in &self.relations {
            if r.equations.is_empty() {
                let ps: Vec<String> = r.params.iter().map(|p| var_text(p)).collect();
                writeln!(f, "relation C_{}({})", name, ps.join(", "))?;
            }
            for e in &r.equations {
                writeln!(f, "{}", e.display(name, &r.params))?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrParseError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for CrParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl core::error::Error for CrParseError {}

/// Splits at `sep` outside parentheses.
fn split_top<'s>(s: &'s str, sep: &str) -> Vec<&'s str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    let bytes = s.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'(' => depth += 1,
            b')' => depth -= 1,
            _ => {}
        }
        if depth == 0 && s[i..].starts_with(sep) {
            out.push(&s[start..i]);
            i += sep.len();
            start = i;
            continue;
        }
        i += 1;
    }
    out.push(&s[start..]);
    out
}

fn strip_var(v: &str) -> &str {
    v.strip_prefix('%').unwrap_or(v)
}

fn is_var_start(c: char) -> bool {
    c.is_alphabetic() || c == '_' || c == '%' || c == '.' || c == '$'
}

fn is_var_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '.' | '$' | '%')
}

/// Parses `2*i - l + 3/2` style linear expressions.
pub fn parse_lin(text: &str) -> Result<LinExpr, String> {
    let s: Vec<char> = text.chars().collect();
    let bad = || format!("malformed linear expression `{}`", text.trim());
    let skip = |i: &mut usize| {
        while *i < s.len() && s[*i].is_whitespace() {
            *i += 1;
        }
    };
    let mut out = LinExpr::zero();
    let mut i = 0;
    let mut first = true;
    loop {
        skip(&mut i);
        if i >= s.len() {
            return if first { Err(bad()) } else { Ok(out) };
        }
        let mut sign = Rational::from_integer(1.into());
        let mut signed = false;
        while i < s.len() && (s[i] == '+' || s[i] == '-') {
            if s[i] == '-' {
                sign = -sign;
            }
            signed = true;
            i += 1;
            skip(&mut i);
        }
        if !first && !signed {
            return Err(bad());
        }
        first = false;
        let mut coeff: Option<Rational> = None;
        if i < s.len() && s[i].is_ascii_digit() {
            let st = i;
            while i < s.len() && (s[i].is_ascii_digit() || s[i] == '.' || s[i] == '/') {
                // A `/` belongs to the number only when a digit follows.
                if s[i] == '/' && !(i + 1 < s.len() && s[i + 1].is_ascii_digit()) {
                    break;
                }
                i += 1;
            }
            let num: String = s[st..i].iter().collect();
            coeff = Some(parse_decimal(&num).map_err(|e| format!("bad number `{}`: {}", num, e))?);
            skip(&mut i);
            if i < s.len() && s[i] == '*' {
                i += 1;
                skip(&mut i);
            } else {
                out.constant += sign * coeff.unwrap_or_default();
                continue;
            }
        }
        if i < s.len() && is_var_start(s[i]) {
            let st = i;
            while i < s.len() && is_var_char(s[i]) {
                i += 1;
            }
            let name: String = s[st..i].iter().collect();
            let c = sign * coeff.unwrap_or_else(|| Rational::from_integer(1.into()));
            out.add_term(strip_var(&name), &c);
        } else {
            return Err(bad());
        }
    }
}

fn parse_constraint(text: &str) -> Result<Constraint, String> {
    for (sym, op) in [("<=", Cmp::Le), (">=", Cmp::Ge), ("!=", Cmp::Ne), ("<", Cmp::Lt), (">", Cmp::Gt), ("=", Cmp::Eq)] {
        if let Some(p) = text.find(sym) {
            let lhs = parse_lin(&text[..p])?;
            let rhs = parse_lin(&text[p + sym.len()..])?;
            return Ok(Constraint::new(lhs, op, rhs));
        }
    }
    Err(format!("no comparison in `{}`", text))
}

/// `C_name(a, b)` into its name and argument texts.
fn parse_head(text: &str) -> Result<(String, Vec<String>), String> {
    let t = text.trim();
    let t = t.strip_prefix("C_").ok_or_else(|| format!("expected `C_` in `{}`", t))?;
    let open = t.find('(').ok_or_else(|| format!("expected `(` in `{}`", t))?;
    let close = t.rfind(')').ok_or_else(|| format!("expected `)` in `{}`", t))?;
    let name = String::from(&t[..open]);
    let inner = t[open + 1..close].trim();
    let args = if inner.is_empty() { Vec::new() } else { split_top(inner, ",").into_iter().map(|a| String::from(a.trim())).collect() };
    Ok((name, args))
}

/// Reads the text form written by `Display`.
pub fn parse_crs(text: &str) -> Result<CostRelationSystem, CrParseError> {
    let mut sys = CostRelationSystem::default();
    for (n, raw) in text.lines().enumerate() {
        let err = |message: String| CrParseError { line: n + 1, message };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("entry ") {
            let (f, rel) = rest.split_once('=').ok_or_else(|| err(String::from("expected `=`")))?;
            let rel = rel.trim().strip_prefix("C_").unwrap_or(rel.trim());
            sys.entries.insert(String::from(f.trim()), String::from(rel));
            continue;
        }
        if let Some(rest) = line.strip_prefix("overhead ") {
            sys.overhead = parse_decimal(rest.trim()).map_err(|e| err(e.to_string()))?;
            continue;
        }
        if let Some(rest) = line.strip_prefix("relation ") {
            let (name, params) = parse_head(rest).map_err(err)?;
            let r = sys.relations.entry(name).or_default();
            r.params = params.iter().map(|p| String::from(strip_var(p))).collect();
            continue;
        }
        let (head, body) = line.split_once(" = ").ok_or_else(|| err(String::from("expected ` = `")))?;
        let (name, params) = parse_head(head).map_err(err)?;
        let params: Vec<String> = params.iter().map(|p| String::from(strip_var(p))).collect();
        let (rhs, guard_text) = match body.find(" if ") {
            Some(p) => (&body[..p], Some(&body[p + 4..])),
            None => (body, None),
        };
        let mut eq = CrEquation { cost: Rational::zero(), calls: Vec::new(), guard: Vec::new() };
        for part in split_top(rhs, "+") {
            let part = part.trim();
            if part.starts_with("C_") {
                let (cname, args) = parse_head(part).map_err(err)?;
                let args = args
                    .iter()
                    .map(|a| if a == "?" { Ok(None) } else { parse_lin(a).map(Some) })
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(err)?;
                eq.calls.push(CrCall { name: cname, args });
            } else {
                let v = parse_decimal(part).map_err(|e| err(format!("bad cost `{}`: {}", part, e)))?;
                if v.is_negative() {
                    return Err(err(format!("negative cost `{}`", part)));
                }
                eq.cost += v;
            }
        }
        if let Some(g) = guard_text {
            for c in g.split(" and ") {
                eq.guard.push(parse_constraint(c.trim()).map_err(err)?);
            }
        }
        let r = sys.relations.entry(name.clone()).or_default();
        if r.equations.is_empty() && r.params.is_empty() {
            r.params = params;
        } else if r.params != params {
            return Err(err(format!("parameters of `C_{}` differ from an earlier equation", name)));
        }
        r.equations.push(eq);
    }
    Ok(sys)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let text = "\
entry proc = C_proc::entry
C_proc::entry(v, l) = 3 + C_proc::for(l, 0)
C_proc::for(l, i) = 2 if i >= l
C_proc::for(l, i) = 4 + C_odd() + C_proc::for(l, i + 1) if i < l
C_proc::for(l, i) = 4 + C_even() + C_proc::for(l, i + 1) if i < l
C_odd() = 7
C_even() = 5/2
";
        let sys = parse_crs(text).unwrap();
        assert_eq!(sys.relations["proc::for"].equations.len(), 3);
        assert_eq!(sys.relations["proc::for"].params, ["l", "i"]);
        let again = parse_crs(&sys.to_string()).unwrap();
        assert_eq!(again, sys);
        assert!(sys.undefined_calls().is_empty());
    }

    #[test]
    fn linear_parsing() {
        let l = parse_lin("2*i - l + 3/2").unwrap();
        assert_eq!(l.to_string(), "2*i - l + 3/2");
        let l = parse_lin("-x + %0").unwrap();
        assert_eq!(l.coeff("0"), Rational::from_integer(1.into()));
        assert!(parse_lin("i i").is_err());
    }
}
