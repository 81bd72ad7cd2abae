//! Linear expressions and constraints over named integer variables.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Mul, Neg, Sub};

use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::num::{fmt_rational, BigInt, Rational};

/// `constant + Σ coeff·var` with exact rational coefficients.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LinExpr {
    #[cfg_attr(feature = "serde", serde(with = "crate::num::serde_rat::map"))]
    pub terms: BTreeMap<String, Rational>,
    #[cfg_attr(feature = "serde", serde(with = "crate::num::serde_rat"))]
    pub constant: Rational,
}

impl LinExpr {
    pub fn zero() -> Self {
        LinExpr { terms: BTreeMap::new(), constant: Rational::zero() }
    }

    pub fn constant(c: Rational) -> Self {
        LinExpr { terms: BTreeMap::new(), constant: c }
    }

    pub fn int(c: i64) -> Self {
        Self::constant(Rational::from_integer(BigInt::from(c)))
    }

    pub fn var(name: &str) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(String::from(name), Rational::one());
        LinExpr { terms, constant: Rational::zero() }
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, var: &str) -> Rational {
        self.terms.get(var).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn vars(&self) -> BTreeSet<String> {
        self.terms.keys().cloned().collect()
    }

    pub fn scale(&self, k: &Rational) -> Self {
        if k.is_zero() {
            return Self::zero();
        }
        LinExpr {
            terms: self.terms.iter().map(|(v, c)| (v.clone(), c * k)).collect(),
            constant: &self.constant * k,
        }
    }

    pub fn add_term(&mut self, var: &str, c: &Rational) {
        let entry = self.terms.entry(String::from(var)).or_insert_with(Rational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(var);
        }
    }

    /// Simultaneous substitution; variables without a binding stay symbolic.
    pub fn substitute(&self, map: &BTreeMap<String, LinExpr>) -> LinExpr {
        let mut out = LinExpr::constant(self.constant.clone());
        for (v, c) in &self.terms {
            match map.get(v) {
                Some(e) => out = out + e.scale(c),
                None => out.add_term(v, c),
            }
        }
        out
    }

    /// Value under `env`, or `None` when a variable is unbound.
    pub fn eval(&self, env: &BTreeMap<String, Rational>) -> Option<Rational> {
        let mut acc = self.constant.clone();
        for (v, c) in &self.terms {
            acc += c * env.get(v)?;
        }
        Some(acc)
    }

    /// Smallest positive multiple that makes every coefficient integral.
    pub fn denominator_lcm(&self) -> BigInt {
        self.terms
            .values()
            .chain(core::iter::once(&self.constant))
            .fold(BigInt::one(), |acc, q| acc.lcm(q.denom()))
    }

    pub fn rename(&self, f: &dyn Fn(&str) -> String) -> LinExpr {
        let mut out = LinExpr::constant(self.constant.clone());
        for (v, c) in &self.terms {
            out.add_term(&f(v), c);
        }
        out
    }
}

impl Add for LinExpr {
    type Output = LinExpr;
    fn add(mut self, rhs: LinExpr) -> LinExpr {
        for (v, c) in &rhs.terms {
            self.add_term(v, c);
        }
        self.constant += rhs.constant;
        self
    }
}

impl Sub for LinExpr {
    type Output = LinExpr;
    fn sub(self, rhs: LinExpr) -> LinExpr {
        self + (-rhs)
    }
}

impl Neg for LinExpr {
    type Output = LinExpr;
    fn neg(self) -> LinExpr {
        self.scale(&-Rational::one())
    }
}

impl Mul<&Rational> for LinExpr {
    type Output = LinExpr;
    fn mul(self, k: &Rational) -> LinExpr {
        self.scale(k)
    }
}

impl fmt::Display for LinExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        let ordered = self.terms.iter().filter(|(_, c)| c.is_positive()).chain(self.terms.iter().filter(|(_, c)| c.is_negative()));
        for (v, c) in ordered {
            let mag = c.abs();
            if first {
                if c.is_negative() {
                    f.write_str("-")?;
                }
            } else if c.is_negative() {
                f.write_str(" - ")?;
            } else {
                f.write_str(" + ")?;
            }
            if mag.is_one() {
                write!(f, "{}", v)?;
            } else {
                write!(f, "{}*{}", fmt_rational(&mag), v)?;
            }
            first = false;
        }
        if first {
            return f.write_str(&fmt_rational(&self.constant));
        }
        if !self.constant.is_zero() {
            let sign = if self.constant.is_negative() { " - " } else { " + " };
            write!(f, "{}{}", sign, fmt_rational(&self.constant.abs()))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Cmp {
    Lt,
    Le,
    Eq,
    Ne,
    Ge,
    Gt,
}

impl Cmp {
    pub fn negate(self) -> Cmp {
        match self {
            Cmp::Lt => Cmp::Ge,
            Cmp::Le => Cmp::Gt,
            Cmp::Eq => Cmp::Ne,
            Cmp::Ne => Cmp::Eq,
            Cmp::Ge => Cmp::Lt,
            Cmp::Gt => Cmp::Le,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Cmp::Lt => "<",
            Cmp::Le => "<=",
            Cmp::Eq => "=",
            Cmp::Ne => "!=",
            Cmp::Ge => ">=",
            Cmp::Gt => ">",
        }
    }

    pub fn holds(self, l: &Rational, r: &Rational) -> bool {
        match self {
            Cmp::Lt => l < r,
            Cmp::Le => l <= r,
            Cmp::Eq => l == r,
            Cmp::Ne => l != r,
            Cmp::Ge => l >= r,
            Cmp::Gt => l > r,
        }
    }
}

/// `lhs ⋈ rhs` over integer-valued variables.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Constraint {
    pub lhs: LinExpr,
    pub op: Cmp,
    pub rhs: LinExpr,
}

impl Constraint {
    pub fn new(lhs: LinExpr, op: Cmp, rhs: LinExpr) -> Self {
        Constraint { lhs, op, rhs }
    }

    /// `e >= 0`
    pub fn nonneg(e: LinExpr) -> Self {
        Constraint { lhs: e, op: Cmp::Ge, rhs: LinExpr::zero() }
    }

    pub fn negate(&self) -> Self {
        Constraint { lhs: self.lhs.clone(), op: self.op.negate(), rhs: self.rhs.clone() }
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut v = self.lhs.vars();
        v.extend(self.rhs.vars());
        v
    }

    pub fn substitute(&self, map: &BTreeMap<String, LinExpr>) -> Self {
        Constraint { lhs: self.lhs.substitute(map), op: self.op, rhs: self.rhs.substitute(map) }
    }

    pub fn eval(&self, env: &BTreeMap<String, Rational>) -> Option<bool> {
        Some(self.op.holds(&self.lhs.eval(env)?, &self.rhs.eval(env)?))
    }

    /// Truth value when the constraint mentions no variables.
    pub fn constant_truth(&self) -> Option<bool> {
        let d = self.lhs.clone() - self.rhs.clone();
        if d.is_constant() {
            Some(self.op.holds(&d.constant, &Rational::zero()))
        } else {
            None
        }
    }

    /// Equivalent list of `e >= 0` facts over the integers, or `None` for `!=`.
    ///
    /// Strict comparisons are tightened by one after clearing denominators.
    pub fn to_nonneg(&self) -> Option<Vec<LinExpr>> {
        let d = self.lhs.clone() - self.rhs.clone();
        let k = Rational::from_integer(d.denominator_lcm());
        let d = d.scale(&k);
        let one = LinExpr::int(1);
        Some(match self.op {
            Cmp::Ge => vec![d],
            Cmp::Gt => vec![d - one],
            Cmp::Le => vec![-d],
            Cmp::Lt => vec![-d - one],
            Cmp::Eq => vec![d.clone(), -d],
            Cmp::Ne => return None,
        })
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.lhs, self.op.symbol(), self.rhs)
    }
}

/// Clears denominators and divides out the content of the variable part,
/// rounding the constant down. Sound for integer-valued variables.
fn tighten(e: &LinExpr) -> LinExpr {
    let k = Rational::from_integer(e.denominator_lcm());
    let e = e.scale(&k);
    let g = e
        .terms
        .values()
        .fold(BigInt::zero(), |g, c| g.gcd(c.numer()));
    if g.is_zero() || g.is_one() {
        return e;
    }
    let gq = Rational::from_integer(g.clone());
    let mut out = LinExpr::zero();
    for (v, c) in &e.terms {
        out.terms.insert(v.clone(), c / &gq);
    }
    out.constant = Rational::from_integer(crate::num::floor_rat(&(&e.constant / &gq)));
    out
}

const FM_LIMIT: usize = 400;

/// Fourier–Motzkin with integer tightening. `true` means the facts (each
/// `f >= 0`) have no integer solution; `false` means none was found to be
/// impossible, which includes giving up on large systems.
fn infeasible(facts: Vec<LinExpr>) -> bool {
    let mut cur: Vec<LinExpr> = Vec::new();
    for f in facts {
        let t = tighten(&f);
        if t.is_constant() {
            if t.constant.is_negative() {
                return true;
            }
        } else if !cur.contains(&t) {
            cur.push(t);
        }
    }
    loop {
        let Some(v) = cur.iter().flat_map(|f| f.terms.keys()).min_by_key(|v| {
            let pos = cur.iter().filter(|f| f.coeff(v).is_positive()).count();
            let neg = cur.iter().filter(|f| f.coeff(v).is_negative()).count();
            pos * neg
        }) else {
            return false;
        };
        let v = v.clone();
        let (mut pos, mut neg, mut rest) = (Vec::new(), Vec::new(), Vec::new());
        for f in cur {
            let c = f.coeff(&v);
            if c.is_positive() {
                pos.push(f);
            } else if c.is_negative() {
                neg.push(f);
            } else {
                rest.push(f);
            }
        }
        if pos.len() * neg.len() + rest.len() > FM_LIMIT {
            return false;
        }
        for p in &pos {
            for n in &neg {
                let a = p.coeff(&v);
                let b = -n.coeff(&v);
                let mut comb = p.scale(&b) + n.scale(&a);
                comb.terms.remove(&v);
                let t = tighten(&comb);
                if t.is_constant() {
                    if t.constant.is_negative() {
                        return true;
                    }
                } else if !rest.contains(&t) {
                    rest.push(t);
                }
            }
        }
        cur = rest;
    }
}

/// Returns true when `e >= 0` follows over the integers from the facts
/// (each `f >= 0`) and the non-negativity of `nonneg_vars`.
pub fn implied_nonneg(e: &LinExpr, facts: &[LinExpr], nonneg_vars: &BTreeSet<String>) -> bool {
    if !e.constant.is_negative() && e.terms.iter().all(|(v, c)| !c.is_negative() && nonneg_vars.contains(v)) {
        return true;
    }
    let mut sys: Vec<LinExpr> = facts.to_vec();
    let mut vars = e.vars();
    for f in facts {
        vars.extend(f.vars());
    }
    for v in vars.intersection(nonneg_vars) {
        sys.push(LinExpr::var(v));
    }
    // e < 0, i.e. -e - 1 >= 0 once e has integer coefficients.
    let k = Rational::from_integer(e.denominator_lcm());
    sys.push(-e.scale(&k) - LinExpr::int(1));
    infeasible(sys)
}

/// True when the facts (each `f >= 0`) have no common integer solution.
pub fn facts_contradict(facts: &[LinExpr]) -> bool {
    infeasible(facts.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::rat;
    use alloc::string::ToString;

    #[test]
    fn display_and_arith() {
        let e = LinExpr::var("i") + LinExpr::int(1);
        assert_eq!(e.to_string(), "i + 1");
        let e = LinExpr::var("l") - LinExpr::var("i");
        assert_eq!(e.to_string(), "l - i");
        assert_eq!(LinExpr::zero().to_string(), "0");
    }

    #[test]
    fn strict_tightening_clears_denominators() {
        // b/2 - 1/2 > 0  <=>  b - 1 > 0  <=>  b - 2 >= 0
        let e = LinExpr::var("b").scale(&crate::num::ratio(1, 2)) - LinExpr::constant(crate::num::ratio(1, 2));
        let c = Constraint::new(e, Cmp::Gt, LinExpr::zero());
        let n = c.to_nonneg().unwrap();
        assert_eq!(n, vec![LinExpr::var("b") - LinExpr::int(2)]);
    }

    #[test]
    fn implication_by_single_fact() {
        let mut nn = BTreeSet::new();
        nn.insert("P".to_string());
        let fact = LinExpr::var("i") - LinExpr::int(2);
        let goal = LinExpr::var("i") - LinExpr::int(1);
        assert!(implied_nonneg(&goal, &[fact.clone()], &nn));
        assert!(!implied_nonneg(&(LinExpr::var("i") - LinExpr::int(3)), &[fact], &nn));
        assert!(implied_nonneg(&(LinExpr::var("P") + LinExpr::int(2)), &[], &nn));
        assert!(!implied_nonneg(&(LinExpr::var("P") - LinExpr::int(1)), &[], &nn));
    }

    #[test]
    fn contradiction_detection() {
        let a = LinExpr::var("i") - LinExpr::var("l");
        let b = LinExpr::var("l") - LinExpr::var("i") - LinExpr::int(1);
        assert!(facts_contradict(&[a.clone(), b]));
        assert!(!facts_contradict(&[a]));
        assert!(facts_contradict(&[LinExpr::constant(rat(-1))]));
    }
}
