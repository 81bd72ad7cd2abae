//! Closed-form upper bounds for cost relation systems, and a numeric
//! evaluator that unrolls a system on concrete arguments.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_traits::{One, Signed, Zero};

use crate::closed::{ClosedForm, ClosedFormError, Context, CostExpr, Factor};
use crate::costrel::{CostRelationSystem, CrCall};
use crate::linear::{facts_contradict, Cmp, Constraint, LinExpr};
use crate::num::{BigInt, Rational};

const MAX_PATHS: usize = 4096;
const ITER: &str = "$t";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveError {
    /// No supported recursion pattern applies.
    Unsolvable { relation: String, reason: String },
    /// A relation this one calls has no closed form.
    Depends { relation: String, on: String },
}

impl SolveError {
    pub fn relation(&self) -> &str {
        match self {
            SolveError::Unsolvable { relation, .. } | SolveError::Depends { relation, .. } => relation,
        }
    }
}

impl fmt::Display for SolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolveError::Unsolvable { relation, reason } => {
                write!(f, "C_{} is unsolvable ({}); evaluate it numerically instead", relation, reason)
            }
            SolveError::Depends { relation, on } => write!(f, "C_{} depends on unsolved C_{}", relation, on),
        }
    }
}

impl core::error::Error for SolveError {}

#[derive(Debug, Clone, Default)]
pub struct Solution {
    pub forms: BTreeMap<String, ClosedForm>,
    pub unsolved: BTreeMap<String, SolveError>,
}

impl Solution {
    pub fn form(&self, relation: &str) -> Result<&ClosedForm, &SolveError> {
        match self.forms.get(relation) {
            Some(f) => Ok(f),
            None => Err(self.unsolved.get(relation).expect("relation was neither solved nor rejected")),
        }
    }
}

/// Strongly connected components, callees before callers.
fn components(sys: &CostRelationSystem) -> Vec<Vec<String>> {
    struct St<'s> {
        sys: &'s CostRelationSystem,
        index: BTreeMap<&'s str, usize>,
        low: BTreeMap<&'s str, usize>,
        on: BTreeSet<&'s str>,
        stack: Vec<&'s str>,
        out: Vec<Vec<String>>,
    }
    fn succs<'s>(sys: &'s CostRelationSystem, n: &str) -> Vec<&'s str> {
        let mut v: Vec<&str> = Vec::new();
        if let Some(r) = sys.relations.get(n) {
            for e in &r.equations {
                for c in &e.calls {
                    if let Some((k, _)) = sys.relations.get_key_value(&c.name) {
                        if !v.contains(&k.as_str()) {
                            v.push(k);
                        }
                    }
                }
            }
        }
        v
    }
    // Iterative Tarjan: (node, next successor position).
    let mut st = St { sys, index: BTreeMap::new(), low: BTreeMap::new(), on: BTreeSet::new(), stack: Vec::new(), out: Vec::new() };
    for root in sys.relations.keys() {
        if st.index.contains_key(root.as_str()) {
            continue;
        }
        let mut work: Vec<(&str, usize)> = alloc::vec![(root.as_str(), 0)];
        while let Some(&mut (n, ref mut pos)) = work.last_mut() {
            if *pos == 0 && !st.index.contains_key(n) {
                let i = st.index.len();
                st.index.insert(n, i);
                st.low.insert(n, i);
                st.stack.push(n);
                st.on.insert(n);
            }
            let ss = succs(st.sys, n);
            if *pos < ss.len() {
                let s = ss[*pos];
                *pos += 1;
                if !st.index.contains_key(s) {
                    work.push((s, 0));
                } else if st.on.contains(s) {
                    let l = st.low[n].min(st.index[s]);
                    st.low.insert(n, l);
                }
                continue;
            }
            work.pop();
            if let Some(&(p, _)) = work.last() {
                let l = st.low[p].min(st.low[n]);
                st.low.insert(p, l);
            }
            if st.low[n] == st.index[n] {
                let mut comp = Vec::new();
                while let Some(x) = st.stack.pop() {
                    st.on.remove(x);
                    comp.push(String::from(x));
                    if x == n {
                        break;
                    }
                }
                comp.sort();
                st.out.push(comp);
            }
        }
    }
    st.out
}

fn calls_within(sys: &CostRelationSystem, n: &str, set: &BTreeSet<String>) -> Vec<String> {
    let mut out = Vec::new();
    if let Some(r) = sys.relations.get(n) {
        for e in &r.equations {
            for c in &e.calls {
                if set.contains(&c.name) && !out.contains(&c.name) {
                    out.push(c.name.clone());
                }
            }
        }
    }
    out
}

fn acyclic(sys: &CostRelationSystem, set: &BTreeSet<String>) -> bool {
    // Kahn's algorithm on the induced subgraph.
    let mut indeg: BTreeMap<&str, usize> = set.iter().map(|s| (s.as_str(), 0)).collect();
    let edges: BTreeMap<&str, Vec<String>> = set.iter().map(|s| (s.as_str(), calls_within(sys, s, set))).collect();
    for ts in edges.values() {
        for t in ts {
            *indeg.get_mut(t.as_str()).expect("member") += 1;
        }
    }
    let mut ready: Vec<&str> = indeg.iter().filter(|(_, d)| **d == 0).map(|(n, _)| *n).collect();
    let mut seen = 0;
    while let Some(n) = ready.pop() {
        seen += 1;
        for t in &edges[n] {
            let d = indeg.get_mut(t.as_str()).expect("member");
            *d -= 1;
            if *d == 0 {
                ready.push(t);
            }
        }
    }
    seen == set.len()
}

/// One way through a component from its cut point.
#[derive(Debug, Clone)]
struct Path {
    guard: Vec<Constraint>,
    cost: CostExpr,
    /// Arguments of the closing call to the cut point, for recursive paths.
    rec: Option<Vec<Option<LinExpr>>>,
}

fn facts_of(guard: &[Constraint]) -> Vec<LinExpr> {
    guard.iter().filter_map(|c| c.to_nonneg()).flatten().collect()
}

fn compose(a: &Option<LinExpr>, env: &BTreeMap<String, Option<LinExpr>>) -> Option<LinExpr> {
    let a = a.as_ref()?;
    let mut known = BTreeMap::new();
    for v in a.vars() {
        known.insert(v.clone(), env.get(&v)?.clone()?);
    }
    Some(a.substitute(&known))
}

struct Solver<'s> {
    sys: &'s CostRelationSystem,
    forms: BTreeMap<String, ClosedForm>,
    unsolved: BTreeMap<String, SolveError>,
    entry_rels: BTreeSet<String>,
}

impl<'s> Solver<'s> {
    fn unsolvable(rel: &str, reason: String) -> SolveError {
        SolveError::Unsolvable { relation: String::from(rel), reason }
    }

    fn base_context(&self, rel: &str) -> Context {
        let mut ctx = Context::default();
        if self.entry_rels.contains(rel) {
            if let Some(r) = self.sys.relations.get(rel) {
                ctx.nonneg.extend(r.params.iter().cloned());
            }
        }
        ctx
    }

    fn domain(&self, rel: &str) -> Vec<Constraint> {
        if !self.entry_rels.contains(rel) {
            return Vec::new();
        }
        self.sys.relations[rel]
            .params
            .iter()
            .map(|p| Constraint::new(LinExpr::var(p), Cmp::Ge, LinExpr::zero()))
            .collect()
    }

    /// Cost of a call to an already solved relation with arguments over the cut point's parameters.
    fn call_cost(&self, rel: &str, call: &CrCall, env: &BTreeMap<String, Option<LinExpr>>) -> Result<CostExpr, SolveError> {
        let Some(cf) = self.forms.get(&call.name) else {
            return Err(SolveError::Depends { relation: String::from(rel), on: call.name.clone() });
        };
        let map: BTreeMap<String, Option<LinExpr>> =
            cf.params.iter().cloned().zip(call.args.iter().map(|a| compose(a, env))).collect();
        cf.expr.substitute(&map).map_err(|p| {
            Self::unsolvable(rel, format!("argument `{}` of C_{} is not known statically", p, call.name))
        })
    }

    /// Paths from `start` through `inside`, ending at a call of `cut` or at a leaf.
    fn unfold(&self, start: &str, inside: &BTreeSet<String>, cut: Option<&str>) -> Result<Vec<Path>, SolveError> {
        let params = &self.sys.relations[start].params;
        let env: BTreeMap<String, Option<LinExpr>> = params.iter().map(|p| (p.clone(), Some(LinExpr::var(p)))).collect();
        let mut out = Vec::new();
        let ctx = self.base_context(start);
        let init = Path { guard: Vec::new(), cost: CostExpr::zero(), rec: None };
        self.unfold_rel(start, start, &env, init, inside, cut, &ctx, &mut out, 0)?;
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn unfold_rel(
        &self,
        root: &str,
        rel: &str,
        env: &BTreeMap<String, Option<LinExpr>>,
        acc: Path,
        inside: &BTreeSet<String>,
        cut: Option<&str>,
        ctx: &Context,
        out: &mut Vec<Path>,
        depth: usize,
    ) -> Result<(), SolveError> {
        if depth > inside.len() + 1 {
            return Err(Self::unsolvable(root, String::from("cycle without the cut point")));
        }
        let r = &self.sys.relations[rel];
        for eq in &r.equations {
            let mut p = acc.clone();
            for c in &eq.guard {
                let mut map = BTreeMap::new();
                let mut known = true;
                for v in c.vars() {
                    match env.get(&v).cloned().flatten() {
                        Some(l) => {
                            map.insert(v, l);
                        }
                        None => known = false,
                    }
                }
                if known {
                    let g = c.substitute(&map);
                    match g.constant_truth() {
                        Some(true) => {}
                        Some(false) => p.guard.push(g),
                        None => p.guard.push(g),
                    }
                }
            }
            if facts_contradict(&facts_of(&p.guard)) {
                continue;
            }
            let mut cost = p.cost.add(&CostExpr::constant(eq.cost.clone()));
            let local = ctx.with_facts(&facts_of(&p.guard));
            let mut next: Option<&CrCall> = None;
            for c in &eq.calls {
                let recursive = Some(c.name.as_str()) == cut || inside.contains(&c.name);
                if recursive {
                    if next.is_some() {
                        return Err(Self::unsolvable(root, format!("C_{} makes more than one recursive call", rel)));
                    }
                    next = Some(c);
                } else {
                    cost = cost.add(&self.call_cost(root, c, env)?.simplify(&local));
                }
            }
            p.cost = cost;
            match next {
                None => out.push(p),
                Some(c) => {
                    let args: Vec<Option<LinExpr>> = c.args.iter().map(|a| compose(a, env)).collect();
                    if Some(c.name.as_str()) == cut {
                        p.rec = Some(args);
                        out.push(p);
                    } else {
                        let callee = &self.sys.relations[&c.name];
                        let env2: BTreeMap<String, Option<LinExpr>> = callee.params.iter().cloned().zip(args).collect();
                        self.unfold_rel(root, &c.name, &env2, p, inside, cut, ctx, out, depth + 1)?;
                    }
                }
            }
            if out.len() > MAX_PATHS {
                return Err(Self::unsolvable(root, String::from("too many paths")));
            }
        }
        Ok(())
    }

    fn max_paths(&self, paths: &[Path], ctx: &Context) -> CostExpr {
        let costs: Vec<CostExpr> = paths.iter().map(|p| p.cost.clone()).collect();
        CostExpr::max_of(costs, ctx)
    }

    fn solve_component(&mut self, comp: &[String]) {
        let set: BTreeSet<String> = comp.iter().cloned().collect();
        let recursive = comp.len() > 1 || calls_within(self.sys, &comp[0], &set).contains(&comp[0]);
        if !recursive {
            let rel = &comp[0];
            let r = self.unfold(rel, &BTreeSet::new(), None).and_then(|paths| {
                let ctx = self.base_context(rel);
                Ok(self.max_paths(&paths, &ctx).simplify(&ctx))
            });
            self.record(rel, r);
            return;
        }
        // Prefer guarded relations as cut points; they are usually loop headers.
        let mut cands: Vec<&String> = comp.iter().collect();
        cands.sort_by_key(|c| !self.sys.relations[c.as_str()].equations.iter().any(|e| !e.guard.is_empty()));
        let cut = cands.into_iter().find(|c| {
            let mut rest = set.clone();
            rest.remove(c.as_str());
            acyclic(self.sys, &rest) && !calls_within(self.sys, c, &[(*c).clone()].into_iter().collect()).is_empty()
                || {
                    let mut rest = set.clone();
                    rest.remove(c.as_str());
                    acyclic(self.sys, &rest)
                }
        });
        let Some(cut) = cut.cloned() else {
            for n in comp {
                self.record(n, Err(Self::unsolvable(n, String::from("nested recursion in one component"))));
            }
            return;
        };
        let mut inside = set.clone();
        inside.remove(&cut);
        let r = self.unfold(&cut, &inside, Some(&cut)).and_then(|paths| self.solve_recursive(&cut, &paths));
        let failed = r.is_err();
        self.record(&cut, r);
        for n in comp {
            if *n == cut {
                continue;
            }
            let r = if failed {
                Err(SolveError::Depends { relation: n.clone(), on: cut.clone() })
            } else {
                self.unfold(n, &inside, None).map(|paths| {
                    let ctx = self.base_context(n);
                    self.max_paths(&paths, &ctx).simplify(&ctx)
                })
            };
            self.record(n, r);
        }
    }

    fn record(&mut self, rel: &str, r: Result<CostExpr, SolveError>) {
        match r {
            Ok(expr) => {
                let params = self.sys.relations[rel].params.clone();
                let domain = self.domain(rel);
                self.forms.insert(String::from(rel), ClosedForm { params, expr, domain });
            }
            Err(e) => {
                self.unsolved.insert(String::from(rel), e);
            }
        }
    }

    fn solve_recursive(&self, rel: &str, paths: &[Path]) -> Result<CostExpr, SolveError> {
        let ctx = self.base_context(rel);
        let rec: Vec<&Path> = paths.iter().filter(|p| p.rec.is_some()).collect();
        let base: Vec<Path> = paths.iter().filter(|p| p.rec.is_none()).cloned().collect();
        if base.is_empty() {
            return Err(Self::unsolvable(rel, String::from("no base case")));
        }
        let base_cost = self.max_paths(&base, &ctx);
        if rec.is_empty() {
            return Ok(base_cost.simplify(&ctx));
        }
        let params = &self.sys.relations[rel].params;
        match linear_ranking(params, &rec, &ctx) {
            Some((g, d)) => self.sum_linear(rel, params, &rec, &base_cost, &g, &d, &ctx),
            None => match halving(params, &rec, &ctx) {
                Some(y) => self.sum_log(rel, params, &rec, &base_cost, &y, &ctx),
                None => Err(Self::unsolvable(rel, String::from("no linear or halving ranking function"))),
            },
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn sum_linear(
        &self,
        rel: &str,
        params: &[String],
        rec: &[&Path],
        base_cost: &CostExpr,
        g: &LinExpr,
        d: &BigInt,
        ctx: &Context,
    ) -> Result<CostExpr, SolveError> {
        let deltas = param_deltas(params, rec);
        let iter_ctx = ctx.with_facts(&[g.clone()]);
        let per: Vec<CostExpr> =
            rec.iter().map(|p| p.cost.simplify(&iter_ctx.with_facts(&facts_of(&p.guard)))).collect();
        let c = CostExpr::max_of(per, &iter_ctx);
        let varying: BTreeMap<&String, Option<Rational>> =
            deltas.iter().filter(|(_, d)| d.as_ref().map_or(true, |d| !d.is_zero())).map(|(k, v)| (*k, v.clone())).collect();

        let cv = c.vars();
        let bv = base_cost.vars();
        for (v, dv) in &varying {
            if bv.contains(*v) {
                return Err(Self::unsolvable(rel, format!("exit cost depends on `{}`, which changes every iteration", v)));
            }
            if cv.contains(*v) && dv.is_none() {
                return Err(Self::unsolvable(rel, format!("iteration cost depends on `{}`, which changes non-linearly", v)));
            }
        }
        let n = {
            let fl = CostExpr::factor(Factor::Floor(g.clone(), d.clone())).add(&CostExpr::int(1));
            CostExpr::factor(Factor::Max(alloc::vec![CostExpr::zero(), fl.simplify(ctx)])).simplify(ctx)
        };
        // Cost at iteration t, as a polynomial in t.
        let mut ct = c.clone();
        for (v, dv) in &varying {
            let Some(dv) = dv else { continue };
            if !cv.contains(*v) {
                continue;
            }
            let by = CostExpr::param(v).add(&CostExpr::param(ITER).scale(dv));
            ct = ct.substitute_poly(v, &by).ok_or_else(|| {
                Self::unsolvable(rel, format!("`{}` occurs under a floor, logarithm or maximum in the iteration cost", v))
            })?;
        }
        let mut by_power: BTreeMap<usize, CostExpr> = BTreeMap::new();
        for t in &ct.terms {
            let k = t.factors.iter().filter(|f| matches!(f, Factor::Param(p) if p == ITER)).count();
            let rest: Vec<Factor> = t.factors.iter().filter(|f| !matches!(f, Factor::Param(p) if p == ITER)).cloned().collect();
            let e = by_power.entry(k).or_default();
            *e = e.add(&CostExpr::from_terms(alloc::vec![crate::closed::Term { coeff: t.coeff.clone(), factors: rest }]));
        }
        let mut total = base_cost.clone();
        for (k, a) in by_power {
            total = total.add(&a.mul(&faulhaber(k, &n)));
        }
        Ok(total.simplify(ctx))
    }

    fn sum_log(
        &self,
        rel: &str,
        params: &[String],
        rec: &[&Path],
        base_cost: &CostExpr,
        y: &str,
        ctx: &Context,
    ) -> Result<CostExpr, SolveError> {
        let deltas = param_deltas(params, rec);
        let per: Vec<CostExpr> = rec.iter().map(|p| p.cost.simplify(&ctx.with_facts(&facts_of(&p.guard)))).collect();
        let c = CostExpr::max_of(per, ctx);
        let changing: BTreeSet<&String> =
            deltas.iter().filter(|(_, d)| d.as_ref().map_or(true, |d| !d.is_zero())).map(|(k, _)| *k).collect();
        for v in c.vars().iter().chain(base_cost.vars().iter()) {
            if changing.contains(v) {
                return Err(Self::unsolvable(rel, format!("cost depends on `{}`, which changes every iteration", v)));
            }
        }
        let n = CostExpr::factor(Factor::Log2(LinExpr::var(y))).add(&CostExpr::int(1));
        Ok(c.mul(&n).add(base_cost).simplify(ctx))
    }
}

/// Per-parameter change shared by every recursive path: `Some(δ)` for a
/// constant step, `None` when some path changes it otherwise.
fn param_deltas<'p>(params: &'p [String], rec: &[&Path]) -> BTreeMap<&'p String, Option<Rational>> {
    let mut out = BTreeMap::new();
    for (i, p) in params.iter().enumerate() {
        let mut d: Option<Option<Rational>> = None;
        for path in rec {
            let a = path.rec.as_ref().and_then(|args| args.get(i).cloned().flatten());
            let this = a.and_then(|a| {
                let diff = a - LinExpr::var(p);
                diff.is_constant().then_some(diff.constant)
            });
            d = Some(match d {
                None => this,
                Some(prev) if prev == this => prev,
                Some(_) => None,
            });
        }
        out.insert(p, d.flatten());
    }
    out
}

/// A fact `g >= 0` every recursive path requires and strictly decreases by a
/// constant; returns it with the smallest decrease.
fn linear_ranking(params: &[String], rec: &[&Path], ctx: &Context) -> Option<(LinExpr, BigInt)> {
    let mut cands: Vec<LinExpr> = Vec::new();
    for p in rec {
        for f in facts_of(&p.guard) {
            if !f.is_constant() && !cands.contains(&f) {
                cands.push(f);
            }
        }
    }
    'cand: for g in cands {
        let mut dmin: Option<BigInt> = None;
        for p in rec {
            let local = ctx.with_facts(&facts_of(&p.guard));
            if !local.implies_nonneg(&g) {
                continue 'cand;
            }
            let args = p.rec.as_ref()?;
            let mut map = BTreeMap::new();
            for v in g.vars() {
                let i = params.iter().position(|x| *x == v)?;
                match args.get(i).cloned().flatten() {
                    Some(a) => {
                        map.insert(v, a);
                    }
                    None => continue 'cand,
                }
            }
            let diff = g.substitute(&map) - g.clone();
            if !diff.is_constant() || !diff.constant.is_negative() || !diff.constant.is_integer() {
                continue 'cand;
            }
            let d = -diff.constant.to_integer();
            dmin = Some(match dmin {
                Some(m) if m <= d => m,
                _ => d,
            });
        }
        if let Some(d) = dmin {
            return Some((g, d));
        }
    }
    None
}

/// A parameter every recursive path requires to be at least 1 and at least halves.
fn halving(params: &[String], rec: &[&Path], ctx: &Context) -> Option<String> {
    let half = Rational::new(BigInt::one(), BigInt::from(2));
    'param: for (i, y) in params.iter().enumerate() {
        for p in rec {
            let local = ctx.with_facts(&facts_of(&p.guard));
            if !local.implies_nonneg(&(LinExpr::var(y) - LinExpr::int(1))) {
                continue 'param;
            }
            let Some(a) = p.rec.as_ref().and_then(|args| args.get(i).cloned().flatten()) else {
                continue 'param;
            };
            if a.vars().iter().any(|v| v != y) {
                continue 'param;
            }
            let alpha = a.coeff(y);
            if alpha.is_negative() || alpha > half || a.constant.is_positive() {
                continue 'param;
            }
        }
        return Some(y.clone());
    }
    None
}

fn binomial(n: usize, k: usize) -> Rational {
    let mut r = Rational::one();
    for i in 0..k {
        r = r * Rational::from_integer(BigInt::from(n - i)) / Rational::from_integer(BigInt::from(i + 1));
    }
    r
}

fn bernoulli(m: usize) -> Vec<Rational> {
    let mut b = alloc::vec![Rational::one()];
    for k in 1..=m {
        let mut s = Rational::zero();
        for (j, bj) in b.iter().enumerate() {
            s += binomial(k + 1, j) * bj;
        }
        b.push(-s / Rational::from_integer(BigInt::from(k + 1)));
    }
    b
}

/// `Σ_{t=0}^{n-1} t^k` as a polynomial in `n`.
pub fn faulhaber(k: usize, n: &CostExpr) -> CostExpr {
    let b = bernoulli(k);
    let mut out = CostExpr::zero();
    for (j, bj) in b.iter().enumerate() {
        let c = binomial(k + 1, j) * bj / Rational::from_integer(BigInt::from(k + 1));
        out = out.add(&n.pow(k + 1 - j).scale(&c));
    }
    out
}

/// Solves every relation, callees first.
pub fn solve(sys: &CostRelationSystem) -> Solution {
    let entry_rels: BTreeSet<String> = sys.entries.values().cloned().collect();
    let mut s = Solver { sys, forms: BTreeMap::new(), unsolved: BTreeMap::new(), entry_rels };
    let undefined = sys.undefined_calls();
    for comp in components(sys) {
        let blocked = comp.iter().find_map(|n| {
            sys.relations[n].equations.iter().flat_map(|e| e.calls.iter()).find_map(|c| {
                if undefined.contains(&c.name) {
                    Some(SolveError::Unsolvable { relation: n.clone(), reason: format!("C_{} is not defined", c.name) })
                } else {
                    s.unsolved.get(&c.name).map(|_| SolveError::Depends { relation: n.clone(), on: c.name.clone() })
                }
            })
        });
        match blocked {
            Some(e) => {
                for n in &comp {
                    let e = match &e {
                        SolveError::Unsolvable { reason, .. } => SolveError::Unsolvable { relation: n.clone(), reason: reason.clone() },
                        SolveError::Depends { on, .. } => SolveError::Depends { relation: n.clone(), on: on.clone() },
                    };
                    s.unsolved.insert(n.clone(), e);
                }
            }
            None => s.solve_component(&comp),
        }
    }
    Solution { forms: s.forms, unsolved: s.unsolved }
}

pub fn evaluate_closed_form(cf: &ClosedForm, bindings: &BTreeMap<String, Rational>) -> Result<Rational, ClosedFormError> {
    cf.eval(bindings)
}

// ---- numeric evaluation ----

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    /// Maximum over every enabled equation.
    Worst,
    /// Exactly one equation must be enabled at each step.
    Deterministic,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvalError {
    NonTerminating { steps: u64 },
    Nondeterministic { relation: String, enabled: usize },
    UnknownRelation(String),
    Arity { relation: String, expected: usize, found: usize },
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::NonTerminating { steps } => write!(f, "no result within {} steps", steps),
            EvalError::Nondeterministic { relation, enabled } => {
                write!(f, "C_{} has {} applicable equations", relation, enabled)
            }
            EvalError::UnknownRelation(r) => write!(f, "no relation C_{}", r),
            EvalError::Arity { relation, expected, found } => {
                write!(f, "C_{} takes {} arguments, {} given", relation, expected, found)
            }
        }
    }
}

impl core::error::Error for EvalError {}

pub const DEFAULT_EVAL_BUDGET: u64 = 5_000_000;

type Key = (String, Vec<Option<Rational>>);

struct Frame {
    key: Key,
    env: BTreeMap<String, Rational>,
    eqs: Vec<usize>,
    eq_pos: usize,
    call_pos: usize,
    acc: Rational,
    best: Option<Rational>,
}

fn open_frame(sys: &CostRelationSystem, key: Key, mode: EvalMode) -> Result<Frame, EvalError> {
    let r = sys.relations.get(&key.0).ok_or_else(|| EvalError::UnknownRelation(key.0.clone()))?;
    if r.params.len() != key.1.len() {
        return Err(EvalError::Arity { relation: key.0.clone(), expected: r.params.len(), found: key.1.len() });
    }
    let env: BTreeMap<String, Rational> =
        r.params.iter().cloned().zip(key.1.iter().cloned()).filter_map(|(p, v)| v.map(|v| (p, v))).collect();
    let eqs: Vec<usize> = r
        .equations
        .iter()
        .enumerate()
        .filter(|(_, e)| e.guard.iter().all(|c| c.eval(&env) != Some(false)))
        .map(|(i, _)| i)
        .collect();
    let ok = match mode {
        EvalMode::Worst => !eqs.is_empty(),
        EvalMode::Deterministic => eqs.len() == 1,
    };
    if !ok {
        return Err(EvalError::Nondeterministic { relation: key.0.clone(), enabled: eqs.len() });
    }
    Ok(Frame { key, env, eqs, eq_pos: 0, call_pos: 0, acc: Rational::zero(), best: None })
}

/// Unrolls `rel` on concrete arguments; `None` marks an unknown argument.
pub fn evaluate_numeric_with(
    sys: &CostRelationSystem,
    rel: &str,
    args: &[Option<Rational>],
    mode: EvalMode,
    budget: u64,
) -> Result<Rational, EvalError> {
    let mut memo: BTreeMap<Key, Rational> = BTreeMap::new();
    let mut active: BTreeSet<Key> = BTreeSet::new();
    let mut steps = 0u64;
    let root: Key = (String::from(rel), args.to_vec());
    let mut stack = alloc::vec![open_frame(sys, root.clone(), mode)?];
    active.insert(root);
    loop {
        let top = stack.last_mut().expect("stack is never empty here");
        if top.eq_pos < top.eqs.len() {
            let eq = &sys.relations[&top.key.0].equations[top.eqs[top.eq_pos]];
            if top.call_pos < eq.calls.len() {
                let c = &eq.calls[top.call_pos];
                let cargs: Vec<Option<Rational>> = c.args.iter().map(|a| a.as_ref().and_then(|a| a.eval(&top.env))).collect();
                let key: Key = (c.name.clone(), cargs);
                if let Some(v) = memo.get(&key) {
                    top.acc += v;
                    top.call_pos += 1;
                    continue;
                }
                if active.contains(&key) {
                    return Err(EvalError::NonTerminating { steps });
                }
                steps += 1;
                if steps > budget {
                    return Err(EvalError::NonTerminating { steps: budget });
                }
                let f = open_frame(sys, key.clone(), mode)?;
                active.insert(key);
                stack.push(f);
                continue;
            }
            let total = &eq.cost + &top.acc;
            top.best = Some(match top.best.take() {
                Some(b) if b >= total => b,
                _ => total,
            });
            top.eq_pos += 1;
            top.call_pos = 0;
            top.acc = Rational::zero();
            continue;
        }
        let done = stack.pop().expect("non-empty");
        let v = done.best.unwrap_or_default();
        active.remove(&done.key);
        match stack.last_mut() {
            Some(parent) => {
                parent.acc += &v;
                parent.call_pos += 1;
                memo.insert(done.key, v);
            }
            None => return Ok(v),
        }
    }
}

/// Unrolls `rel` on integer arguments with the default step budget.
pub fn evaluate_numeric(sys: &CostRelationSystem, rel: &str, args: &[BigInt], mode: EvalMode) -> Result<Rational, EvalError> {
    let args: Vec<Option<Rational>> = args.iter().map(|a| Some(Rational::from_integer(a.clone()))).collect();
    evaluate_numeric_with(sys, rel, &args, mode, DEFAULT_EVAL_BUDGET)
}

impl fmt::Display for Solution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, cf) in &self.forms {
            writeln!(f, "C_{}({}) = {}", n, cf.params.join(", "), cf)?;
        }
        for e in self.unsolved.values() {
            writeln!(f, "# {}", e)?;
        }
        Ok(())
    }
}
