//! Closed-form cost expressions: polynomials over parameters, floors,
//! logarithms and maxima, with exact rational coefficients.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use num_traits::{One, Signed, Zero};

use crate::linear::{implied_nonneg, Constraint, LinExpr};
use crate::num::{floor_log2, floor_rat, fmt_decimal, BigInt, Rational};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Factor {
    Param(String),
    /// `floor(expr / k)` with `k >= 1`.
    Floor(LinExpr, #[cfg_attr(feature = "serde", serde(with = "crate::num::serde_rat::int"))] BigInt),
    /// `floor(log2 expr)`, and -1 when `expr < 1`.
    Log2(LinExpr),
    Max(Vec<CostExpr>),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Term {
    #[cfg_attr(feature = "serde", serde(with = "crate::num::serde_rat"))]
    pub coeff: Rational,
    /// A sorted multiset; repeated factors are powers.
    pub factors: Vec<Factor>,
}

/// A sum of terms, kept sorted with like terms merged and zeros dropped.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CostExpr {
    pub terms: Vec<Term>,
}

/// Facts assumed while simplifying: each `f >= 0`, plus non-negative variables.
#[derive(Debug, Clone, Default)]
pub struct Context {
    pub facts: Vec<LinExpr>,
    pub nonneg: BTreeSet<String>,
}

impl Context {
    pub fn new(facts: Vec<LinExpr>, nonneg: BTreeSet<String>) -> Self {
        Context { facts, nonneg }
    }

    pub fn with_facts(&self, more: &[LinExpr]) -> Context {
        let mut c = self.clone();
        c.facts.extend(more.iter().cloned());
        c
    }

    pub fn implies_nonneg(&self, e: &LinExpr) -> bool {
        implied_nonneg(e, &self.facts, &self.nonneg)
    }
}

impl Factor {
    fn vars_into(&self, out: &mut BTreeSet<String>) {
        match self {
            Factor::Param(v) => {
                out.insert(v.clone());
            }
            Factor::Floor(l, _) | Factor::Log2(l) => out.extend(l.vars()),
            Factor::Max(args) => {
                for a in args {
                    out.extend(a.vars());
                }
            }
        }
    }

    fn degree(&self, var: Option<&str>) -> usize {
        match self {
            Factor::Param(v) => usize::from(var.map_or(true, |x| x == v)),
            Factor::Floor(l, _) => usize::from(var.map_or(!l.is_constant(), |x| !l.coeff(x).is_zero())),
            Factor::Log2(_) => 0,
            Factor::Max(args) => args.iter().map(|a| a.degree_of(var)).max().unwrap_or(0),
        }
    }

    fn eval(&self, env: &BTreeMap<String, Rational>) -> Option<Rational> {
        match self {
            Factor::Param(v) => env.get(v).cloned(),
            Factor::Floor(l, k) => {
                let x = l.eval(env)? / Rational::from_integer(k.clone());
                Some(Rational::from_integer(floor_rat(&x)))
            }
            Factor::Log2(l) => Some(Rational::from_integer(floor_log2(&l.eval(env)?))),
            Factor::Max(args) => {
                let mut best: Option<Rational> = None;
                for a in args {
                    let v = a.eval(env)?;
                    best = Some(match best {
                        Some(b) if b >= v => b,
                        _ => v,
                    });
                }
                best
            }
        }
    }
}

impl Term {
    fn is_constant(&self) -> bool {
        self.factors.is_empty()
    }
}

impl CostExpr {
    pub fn zero() -> Self {
        CostExpr::default()
    }

    pub fn constant(c: Rational) -> Self {
        CostExpr::from_terms(alloc::vec![Term { coeff: c, factors: Vec::new() }])
    }

    pub fn int(c: i64) -> Self {
        CostExpr::constant(Rational::from_integer(BigInt::from(c)))
    }

    pub fn param(v: &str) -> Self {
        CostExpr::factor(Factor::Param(String::from(v)))
    }

    pub fn factor(f: Factor) -> Self {
        CostExpr { terms: alloc::vec![Term { coeff: Rational::one(), factors: alloc::vec![f] }] }
    }

    pub fn from_lin(l: &LinExpr) -> Self {
        let mut terms: Vec<Term> = l
            .terms
            .iter()
            .map(|(v, c)| Term { coeff: c.clone(), factors: alloc::vec![Factor::Param(v.clone())] })
            .collect();
        terms.push(Term { coeff: l.constant.clone(), factors: Vec::new() });
        CostExpr::from_terms(terms)
    }

    /// Builds the canonical sum of arbitrary terms.
    pub fn from_terms(terms: Vec<Term>) -> Self {
        let mut map: BTreeMap<Vec<Factor>, Rational> = BTreeMap::new();
        for mut t in terms {
            t.factors.sort();
            *map.entry(t.factors).or_insert_with(Rational::zero) += t.coeff;
        }
        CostExpr {
            terms: map
                .into_iter()
                .filter(|(_, c)| !c.is_zero())
                .map(|(factors, coeff)| Term { coeff, factors })
                .collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.as_slice() {
            [] => Some(Rational::zero()),
            [t] if t.is_constant() => Some(t.coeff.clone()),
            _ => None,
        }
    }

    pub fn constant_part(&self) -> Rational {
        self.terms.iter().filter(|t| t.is_constant()).map(|t| t.coeff.clone()).sum()
    }

    /// The expression as a linear form when it only has constants and single parameters.
    pub fn to_lin(&self) -> Option<LinExpr> {
        let mut l = LinExpr::zero();
        for t in &self.terms {
            match t.factors.as_slice() {
                [] => l.constant += &t.coeff,
                [Factor::Param(v)] => l.add_term(v, &t.coeff),
                _ => return None,
            }
        }
        Some(l)
    }

    pub fn scale(&self, k: &Rational) -> Self {
        CostExpr::from_terms(
            self.terms.iter().map(|t| Term { coeff: &t.coeff * k, factors: t.factors.clone() }).collect(),
        )
    }

    pub fn add(&self, o: &CostExpr) -> Self {
        CostExpr::from_terms(self.terms.iter().chain(o.terms.iter()).cloned().collect())
    }

    pub fn sub(&self, o: &CostExpr) -> Self {
        self.add(&o.scale(&-Rational::one()))
    }

    pub fn mul(&self, o: &CostExpr) -> Self {
        let mut out = Vec::new();
        for a in &self.terms {
            for b in &o.terms {
                let mut factors = a.factors.clone();
                factors.extend(b.factors.iter().cloned());
                out.push(Term { coeff: &a.coeff * &b.coeff, factors });
            }
        }
        CostExpr::from_terms(out)
    }

    pub fn pow(&self, n: usize) -> Self {
        let mut r = CostExpr::int(1);
        for _ in 0..n {
            r = r.mul(self);
        }
        r
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for t in &self.terms {
            for f in &t.factors {
                f.vars_into(&mut out);
            }
        }
        out
    }

    fn degree_of(&self, var: Option<&str>) -> usize {
        self.terms
            .iter()
            .map(|t| t.factors.iter().map(|f| f.degree(var)).sum())
            .max()
            .unwrap_or(0)
    }

    /// Highest power of `var` in any term; a floor of a form mentioning `var` counts once.
    pub fn degree_in(&self, var: &str) -> usize {
        self.degree_of(Some(var))
    }

    /// Total polynomial degree.
    pub fn degree(&self) -> usize {
        self.degree_of(None)
    }

    pub fn contains_max(&self) -> bool {
        self.terms.iter().any(|t| t.factors.iter().any(|f| matches!(f, Factor::Max(_))))
    }

    pub fn contains_log2(&self) -> bool {
        fn has(f: &Factor) -> bool {
            match f {
                Factor::Log2(_) => true,
                Factor::Max(args) => args.iter().any(|a| a.contains_log2()),
                _ => false,
            }
        }
        self.terms.iter().any(|t| t.factors.iter().any(has))
    }

    /// Every factor anywhere in the expression, including inside maxima.
    pub fn all_factors(&self) -> Vec<&Factor> {
        let mut out = Vec::new();
        for t in &self.terms {
            for f in &t.factors {
                out.push(f);
                if let Factor::Max(args) = f {
                    for a in args {
                        out.extend(a.all_factors());
                    }
                }
            }
        }
        out
    }

    pub fn eval(&self, env: &BTreeMap<String, Rational>) -> Option<Rational> {
        let mut sum = Rational::zero();
        for t in &self.terms {
            let mut p = t.coeff.clone();
            for f in &t.factors {
                p *= f.eval(env)?;
            }
            sum += p;
        }
        Some(sum)
    }

    /// Rebuilds the expression with every factor replaced by `f(factor)`.
    pub fn map_factors<E>(&self, f: &mut dyn FnMut(&Factor) -> Result<CostExpr, E>) -> Result<CostExpr, E> {
        let mut out = CostExpr::zero();
        for t in &self.terms {
            let mut p = CostExpr::constant(t.coeff.clone());
            for x in &t.factors {
                p = p.mul(&f(x)?);
            }
            out = out.add(&p);
        }
        Ok(out)
    }

    /// Replaces parameters by linear arguments. `None` marks an unknown
    /// argument; mentioning it fails with the parameter's name.
    pub fn substitute(&self, map: &BTreeMap<String, Option<LinExpr>>) -> Result<CostExpr, String> {
        let known: BTreeMap<String, LinExpr> =
            map.iter().filter_map(|(k, v)| v.clone().map(|v| (k.clone(), v))).collect();
        let check = |l: &LinExpr| -> Result<LinExpr, String> {
            for v in l.vars() {
                if let Some(None) = map.get(&v) {
                    return Err(v);
                }
            }
            Ok(l.substitute(&known))
        };
        self.map_factors(&mut |f| match f {
            Factor::Param(v) => match map.get(v) {
                Some(Some(l)) => Ok(CostExpr::from_lin(l)),
                Some(None) => Err(v.clone()),
                None => Ok(CostExpr::param(v)),
            },
            Factor::Floor(l, k) => Ok(CostExpr::factor(Factor::Floor(check(l)?, k.clone()))),
            Factor::Log2(l) => Ok(CostExpr::factor(Factor::Log2(check(l)?))),
            Factor::Max(args) => {
                let args = args.iter().map(|a| a.substitute(map)).collect::<Result<Vec<_>, _>>()?;
                Ok(CostExpr::factor(Factor::Max(args)))
            }
        })
    }

    /// Replaces the parameter `var` by a polynomial. Fails when `var`
    /// occurs inside a floor, logarithm or maximum.
    pub fn substitute_poly(&self, var: &str, by: &CostExpr) -> Option<CostExpr> {
        self.map_factors(&mut |f| match f {
            Factor::Param(v) if v == var => Ok(by.clone()),
            other => {
                let mut vs = BTreeSet::new();
                other.vars_into(&mut vs);
                if vs.contains(var) {
                    Err(())
                } else {
                    Ok(CostExpr::factor(other.clone()))
                }
            }
        })
        .ok()
    }

    /// A linear lower bound valid under `ctx`, when one is easy to find.
    pub fn linear_lower(&self, ctx: &Context) -> Option<LinExpr> {
        let mut out = LinExpr::zero();
        for t in &self.terms {
            let pos = t.coeff.is_positive();
            let l = match t.factors.as_slice() {
                [] => LinExpr::constant(Rational::one()),
                [Factor::Param(v)] => LinExpr::var(v),
                [Factor::Floor(l, k)] => {
                    let kq = Rational::from_integer(k.clone());
                    if !pos {
                        l.scale(&(Rational::one() / &kq))
                    } else if l.denominator_lcm().is_one() {
                        (l.clone() - LinExpr::constant(&kq - Rational::one())).scale(&(Rational::one() / &kq))
                    } else {
                        l.scale(&(Rational::one() / &kq)) - LinExpr::int(1)
                    }
                }
                [Factor::Log2(_)] if pos => LinExpr::int(-1),
                [Factor::Max(args)] if pos => args.iter().find_map(|a| a.linear_lower(ctx))?,
                fs if pos && fs.iter().all(|f| factor_nonneg(f, ctx)) => LinExpr::zero(),
                _ => return None,
            };
            out = out + l.scale(&t.coeff);
        }
        Some(out)
    }

    /// Whether `self >= other` provably holds under `ctx`.
    pub fn dominates(&self, other: &CostExpr, ctx: &Context) -> bool {
        let d = self.sub(other);
        if let Some(c) = d.as_constant() {
            return !c.is_negative();
        }
        match d.linear_lower(ctx) {
            Some(l) => ctx.implies_nonneg(&l),
            None => false,
        }
    }

    /// Normalises floors, logarithms and maxima using the facts in `ctx`.
    pub fn simplify(&self, ctx: &Context) -> CostExpr {
        let r: Result<CostExpr, ()> = self.map_factors(&mut |f| Ok(simplify_factor(f, ctx)));
        r.unwrap_or_default()
    }

    /// `max` of the given expressions, with dominated arguments removed and
    /// terms shared by every argument pulled out.
    pub fn max_of(args: Vec<CostExpr>, ctx: &Context) -> CostExpr {
        let mut flat: Vec<CostExpr> = Vec::new();
        for a in args {
            let inner = match a.terms.as_slice() {
                [t] if t.coeff.is_one() && t.factors.len() == 1 => match &t.factors[0] {
                    Factor::Max(xs) => Some(xs.clone()),
                    _ => None,
                },
                _ => None,
            };
            for x in inner.unwrap_or_else(|| alloc::vec![a]) {
                if !flat.contains(&x) {
                    flat.push(x);
                }
            }
        }
        if flat.is_empty() {
            return CostExpr::zero();
        }
        let mut keep = alloc::vec![true; flat.len()];
        for i in 0..flat.len() {
            for j in 0..flat.len() {
                if i != j && keep[i] && keep[j] && flat[j].dominates(&flat[i], ctx) {
                    keep[i] = false;
                }
            }
        }
        let mut rest: Vec<CostExpr> = flat.into_iter().zip(keep).filter(|(_, k)| *k).map(|(a, _)| a).collect();
        if rest.len() == 1 {
            return rest.pop().unwrap_or_default();
        }
        let common: Vec<Term> = rest[0]
            .terms
            .iter()
            .filter(|t| rest.iter().all(|a| a.terms.contains(t)))
            .cloned()
            .collect();
        let mut common = CostExpr::from_terms(common);
        let mut inner: Vec<CostExpr> = rest.iter().map(|a| a.sub(&common)).collect();
        let low = inner.iter().map(|a| a.constant_part()).min().unwrap_or_default();
        if low.is_positive() {
            let c = CostExpr::constant(low);
            inner = inner.iter().map(|a| a.sub(&c)).collect();
            common = common.add(&c);
        }
        inner.sort();
        common.add(&CostExpr::factor(Factor::Max(inner)))
    }
}

fn factor_nonneg(f: &Factor, ctx: &Context) -> bool {
    match f {
        Factor::Param(v) => ctx.nonneg.contains(v) || ctx.implies_nonneg(&LinExpr::var(v)),
        Factor::Floor(l, _) => ctx.implies_nonneg(l),
        Factor::Log2(l) => ctx.implies_nonneg(&(l.clone() - LinExpr::int(1))),
        Factor::Max(args) => args
            .iter()
            .any(|a| a.linear_lower(ctx).map_or(false, |l| ctx.implies_nonneg(&l))),
    }
}

fn simplify_factor(f: &Factor, ctx: &Context) -> CostExpr {
    match f {
        Factor::Param(v) => CostExpr::param(v),
        Factor::Floor(l, k) => {
            let q = l.scale(&(Rational::one() / Rational::from_integer(k.clone())));
            if q.terms.values().all(|c| c.is_integer()) {
                let mut var_part = q.clone();
                var_part.constant = Rational::zero();
                let c = Rational::from_integer(floor_rat(&q.constant));
                CostExpr::from_lin(&var_part).add(&CostExpr::constant(c))
            } else {
                CostExpr::factor(Factor::Floor(l.clone(), k.clone()))
            }
        }
        Factor::Log2(l) if l.is_constant() => CostExpr::constant(Rational::from_integer(floor_log2(&l.constant))),
        Factor::Log2(l) => CostExpr::factor(Factor::Log2(l.clone())),
        Factor::Max(args) => {
            let args: Vec<CostExpr> = args.iter().map(|a| a.simplify(ctx)).collect();
            if let Some(consts) = args.iter().map(|a| a.as_constant()).collect::<Option<Vec<_>>>() {
                return CostExpr::constant(consts.into_iter().max().unwrap_or_default());
            }
            CostExpr::max_of(args, ctx)
        }
    }
}

/// A bound together with the parameters it ranges over and the constraints it assumes.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClosedForm {
    pub params: Vec<String>,
    pub expr: CostExpr,
    pub domain: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClosedFormError {
    OutsideDomain(String),
    Unbound(String),
}

impl fmt::Display for ClosedFormError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClosedFormError::OutsideDomain(c) => write!(f, "binding violates `{}`", c),
            ClosedFormError::Unbound(v) => write!(f, "no value for `{}`", v),
        }
    }
}

impl core::error::Error for ClosedFormError {}

impl ClosedForm {
    pub fn eval(&self, bindings: &BTreeMap<String, Rational>) -> Result<Rational, ClosedFormError> {
        for c in &self.domain {
            match c.eval(bindings) {
                Some(true) => {}
                Some(false) => return Err(ClosedFormError::OutsideDomain(c.to_string())),
                None => {
                    let v = c.vars().into_iter().find(|v| !bindings.contains_key(v)).unwrap_or_default();
                    return Err(ClosedFormError::Unbound(v));
                }
            }
        }
        self.expr.eval(bindings).ok_or_else(|| {
            ClosedFormError::Unbound(self.expr.vars().into_iter().find(|v| !bindings.contains_key(v)).unwrap_or_default())
        })
    }

    /// Evaluates with parameters bound positionally.
    pub fn eval_at(&self, args: &[Rational]) -> Result<Rational, ClosedFormError> {
        let env = self.params.iter().cloned().zip(args.iter().cloned()).collect();
        self.eval(&env)
    }

    pub fn degree_in(&self, var: &str) -> usize {
        self.expr.degree_in(var)
    }
}

fn is_short(v: &str) -> bool {
    let mut cs = v.chars();
    matches!((cs.next(), cs.next()), (Some(c), None) if c.is_ascii_alphabetic())
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Factor::Param(v) => write!(f, "{}", v),
            Factor::Floor(l, k) if k.is_one() => write!(f, "floor({})", l),
            Factor::Floor(l, k) if l.terms.len() == 1 && l.constant.is_zero() => write!(f, "floor({}/{})", l, k),
            Factor::Floor(l, k) => write!(f, "floor(({})/{})", l, k),
            Factor::Log2(l) => write!(f, "floor(log2({}))", l),
            Factor::Max(args) => {
                write!(f, "max(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{}", a)?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Factors with powers collapsed, e.g. `P^2`.
fn factor_text(fs: &[Factor]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let mut i = 0;
    while i < fs.len() {
        let mut n = 1;
        while i + n < fs.len() && fs[i + n] == fs[i] {
            n += 1;
        }
        let base = fs[i].to_string();
        out.push(if n == 1 { base } else { format!("{}^{}", base, n) });
        i += n;
    }
    out
}

fn term_text(t: &Term, abs: bool) -> String {
    let c = if abs { t.coeff.abs() } else { t.coeff.clone() };
    if t.factors.is_empty() {
        return fmt_decimal(&c);
    }
    let parts = factor_text(&t.factors);
    let juxtapose = t.factors.iter().all(|f| matches!(f, Factor::Param(v) if is_short(v)));
    let body = if juxtapose { parts.concat() } else { parts.join("*") };
    if c.is_one() {
        body
    } else if c == -Rational::one() {
        format!("-{}", body)
    } else if juxtapose {
        format!("{}{}", fmt_decimal(&c), body)
    } else {
        format!("{}*{}", fmt_decimal(&c), body)
    }
}

impl CostExpr {
    /// Terms in display order: highest degree first, constants after polynomial terms, maxima last.
    fn display_order(&self) -> Vec<&Term> {
        let mut ts: Vec<&Term> = self.terms.iter().collect();
        ts.sort_by_key(|t| {
            let has_max = t.factors.iter().any(|f| matches!(f, Factor::Max(_)));
            let deg: usize = t.factors.iter().map(|f| f.degree(None)).sum();
            (has_max, t.factors.is_empty(), core::cmp::Reverse(deg), t.coeff.is_negative(), t.factors.clone())
        });
        ts
    }
}

impl fmt::Display for CostExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ts = self.display_order();
        if ts.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in ts.iter().enumerate() {
            if i == 0 {
                write!(f, "{}", term_text(t, false))?;
            } else if t.coeff.is_negative() {
                write!(f, " - {}", term_text(t, true))?;
            } else {
                write!(f, " + {}", term_text(t, true))?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for ClosedForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.expr)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::rat;

    fn env(pairs: &[(&str, i64)]) -> BTreeMap<String, Rational> {
        pairs.iter().map(|(k, v)| (String::from(*k), rat(*v))).collect()
    }

    #[test]
    fn polynomial_evaluation() {
        let p = CostExpr::param("P");
        let e = p.pow(2).scale(&rat(105)).add(&p.scale(&rat(30))).add(&CostExpr::int(75));
        assert_eq!(e.eval(&env(&[("P", 4)])), Some(rat(1875)));
        assert_eq!(e.to_string(), "105P^2 + 30P + 75");
        assert_eq!(e.degree_in("P"), 2);
    }

    #[test]
    fn max_prunes_and_factors() {
        let ctx = Context::new(Vec::new(), ["A", "B"].iter().map(|s| String::from(*s)).collect());
        let a = CostExpr::param("A");
        let b = CostExpr::param("B");
        let k = CostExpr::int(3);
        let m = CostExpr::max_of(alloc::vec![a.add(&k), b.add(&k)], &ctx);
        assert_eq!(m.to_string(), "3 + max(A, B)");
        let m = CostExpr::max_of(alloc::vec![a.scale(&rat(2)).add(&k), a.clone()], &ctx);
        assert_eq!(m.to_string(), "2A + 3");
        let z = CostExpr::max_of(alloc::vec![CostExpr::zero(), a.sub(&CostExpr::int(1))], &ctx);
        assert!(z.contains_max());
        let z = CostExpr::max_of(alloc::vec![CostExpr::zero(), a.add(&CostExpr::int(1))], &ctx);
        assert_eq!(z.to_string(), "A + 1");
    }

    #[test]
    fn floor_simplifies_under_facts() {
        let ctx = Context::new(Vec::new(), [String::from("P")].into_iter().collect());
        let fl = CostExpr::factor(Factor::Floor(LinExpr::var("P") - LinExpr::int(1), BigInt::from(3)));
        let n = CostExpr::factor(Factor::Max(alloc::vec![CostExpr::zero(), fl.add(&CostExpr::int(1))]));
        assert_eq!(n.simplify(&ctx).to_string(), "floor((P - 1)/3) + 1");
        let whole = CostExpr::factor(Factor::Floor(LinExpr::var("P").scale(&rat(2)) + LinExpr::int(3), BigInt::from(2)));
        assert_eq!(whole.simplify(&ctx).to_string(), "P + 1");
    }

    #[test]
    fn max_equal_branches_is_idempotent() {
        let a = CostExpr::param("x").add(&CostExpr::int(2));
        let m = CostExpr::factor(Factor::Max(alloc::vec![a.clone(), a.clone()]));
        assert_eq!(m.eval(&env(&[("x", 5)])), a.eval(&env(&[("x", 5)])));
    }
}
