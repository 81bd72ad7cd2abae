//! Block-local symbolic evaluation.
//!
//! `seval` walks the definitions of a variable backwards inside one block and
//! returns an expression over the block's inputs: parameters, phi
//! destinations of the block and variables defined elsewhere.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::ir::{BasicBlock, Instruction, Opcode, Operand};
use crate::linear::{Cmp, Constraint, LinExpr};
use crate::num::{BigInt, Rational};

/// Largest shift amount accepted by `shl` and `lshr`.
pub const MAX_SHIFT: u32 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
    Xor,
    Shl,
    Lshr,
}

impl BinOp {
    pub fn from_opcode(op: Opcode) -> Option<BinOp> {
        Some(match op {
            Opcode::Add => BinOp::Add,
            Opcode::Sub => BinOp::Sub,
            Opcode::Mul => BinOp::Mul,
            Opcode::SDiv => BinOp::Div,
            Opcode::SRem => BinOp::Mod,
            Opcode::Shl => BinOp::Shl,
            Opcode::LShr => BinOp::Lshr,
            Opcode::And => BinOp::And,
            Opcode::Or => BinOp::Or,
            Opcode::Xor => BinOp::Xor,
            Opcode::IcmpEq => BinOp::Eq,
            Opcode::IcmpNe => BinOp::Ne,
            Opcode::IcmpSlt => BinOp::Lt,
            Opcode::IcmpSle => BinOp::Le,
            Opcode::IcmpSgt => BinOp::Gt,
            Opcode::IcmpSge => BinOp::Ge,
            Opcode::Select => return None,
        })
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "mod",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "and",
            BinOp::Or => "or",
            BinOp::Xor => "xor",
            BinOp::Shl => "shl",
            BinOp::Lshr => "lshr",
        }
    }

    pub fn is_compare(self) -> bool {
        matches!(self, BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge)
    }

    pub fn as_cmp(self) -> Option<Cmp> {
        Some(match self {
            BinOp::Eq => Cmp::Eq,
            BinOp::Ne => Cmp::Ne,
            BinOp::Lt => Cmp::Lt,
            BinOp::Le => Cmp::Le,
            BinOp::Gt => Cmp::Gt,
            BinOp::Ge => Cmp::Ge,
            _ => return None,
        })
    }

    /// Concrete integer semantics shared with the interpreter.
    ///
    /// Division truncates toward zero and the remainder takes the sign of
    /// the dividend; both yield 0 for a zero divisor. Returns `None` for a
    /// shift amount outside `0..=MAX_SHIFT`.
    pub fn apply(self, a: &BigInt, b: &BigInt) -> Option<BigInt> {
        let truth = |c: bool| if c { BigInt::one() } else { BigInt::zero() };
        Some(match self {
            BinOp::Add => a + b,
            BinOp::Sub => a - b,
            BinOp::Mul => a * b,
            BinOp::Div => {
                if b.is_zero() {
                    BigInt::zero()
                } else {
                    a / b
                }
            }
            BinOp::Mod => {
                if b.is_zero() {
                    BigInt::zero()
                } else {
                    a % b
                }
            }
            BinOp::Eq => truth(a == b),
            BinOp::Ne => truth(a != b),
            BinOp::Lt => truth(a < b),
            BinOp::Le => truth(a <= b),
            BinOp::Gt => truth(a > b),
            BinOp::Ge => truth(a >= b),
            BinOp::And => a & b,
            BinOp::Or => a | b,
            BinOp::Xor => a ^ b,
            BinOp::Shl | BinOp::Lshr => {
                let n = b.to_u32().filter(|n| *n <= MAX_SHIFT)? as usize;
                if self == BinOp::Shl {
                    a << n
                } else {
                    a >> n
                }
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Mode {
    Exact,
    Upper,
    Lower,
    Typical,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SymExpr {
    Int(BigInt),
    Var(String),
    Unknown,
    Bin(BinOp, Box<SymExpr>, Box<SymExpr>),
    Select(Box<SymExpr>, Box<SymExpr>, Box<SymExpr>),
}

impl SymExpr {
    pub fn int(v: i64) -> Self {
        SymExpr::Int(BigInt::from(v))
    }

    pub fn var(name: &str) -> Self {
        SymExpr::Var(String::from(name))
    }

    pub fn as_int(&self) -> Option<&BigInt> {
        match self {
            SymExpr::Int(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_unknown(&self) -> bool {
        *self == SymExpr::Unknown
    }

    /// Builds `a op b`, folding constants and normalising linear arithmetic.
    pub fn bin(op: BinOp, a: SymExpr, b: SymExpr) -> SymExpr {
        // An unknown dividend survives so approximating modes can still bound it.
        if b.is_unknown() || (a.is_unknown() && op != BinOp::Mod) {
            return SymExpr::Unknown;
        }
        if let (Some(x), Some(y)) = (a.as_int(), b.as_int()) {
            if let Some(v) = op.apply(x, y) {
                return SymExpr::Int(v);
            }
        }
        if matches!(op, BinOp::Add | BinOp::Sub | BinOp::Mul) {
            if let (Some(la), Some(lb)) = (a.to_linear_int(), b.to_linear_int()) {
                let l = match op {
                    BinOp::Add => Some(la + lb),
                    BinOp::Sub => Some(la - lb),
                    _ if la.is_constant() => Some(lb.scale(&la.constant)),
                    _ if lb.is_constant() => Some(la.scale(&lb.constant)),
                    _ => None,
                };
                if let Some(l) = l {
                    return SymExpr::from_linear_int(&l);
                }
            }
        }
        match (op, b.as_int()) {
            (BinOp::Div, Some(k)) if k.is_one() => return a,
            (BinOp::Mod, Some(k)) if k.is_one() || (-k).is_one() => return SymExpr::int(0),
            (BinOp::Shl | BinOp::Lshr, Some(k)) if k.is_zero() => return a,
            _ => {}
        }
        SymExpr::Bin(op, Box::new(a), Box::new(b))
    }

    pub fn select(c: SymExpr, t: SymExpr, e: SymExpr) -> SymExpr {
        if c.is_unknown() {
            return SymExpr::Unknown;
        }
        if let Some(v) = c.as_int() {
            return if v.is_zero() { e } else { t };
        }
        if t == e {
            return t;
        }
        SymExpr::Select(Box::new(c), Box::new(t), Box::new(e))
    }

    /// Linear form with integer coefficients over `+`, `-` and constant `*`.
    pub fn to_linear_int(&self) -> Option<LinExpr> {
        match self {
            SymExpr::Int(v) => Some(LinExpr::constant(Rational::from_integer(v.clone()))),
            SymExpr::Var(v) => Some(LinExpr::var(v)),
            SymExpr::Bin(op, a, b) => {
                let (la, lb) = (a.to_linear_int()?, b.to_linear_int()?);
                match op {
                    BinOp::Add => Some(la + lb),
                    BinOp::Sub => Some(la - lb),
                    BinOp::Mul if la.is_constant() => Some(lb.scale(&la.constant)),
                    BinOp::Mul if lb.is_constant() => Some(la.scale(&lb.constant)),
                    _ => None,
                }
            }
            _ => None,
        }
    }

    /// Linear over-approximation that also reads `e / k` as exact division.
    pub fn to_linear(&self) -> Option<LinExpr> {
        match self {
            SymExpr::Bin(op, a, b) => {
                let (la, lb) = (a.to_linear()?, b.to_linear()?);
                match op {
                    BinOp::Add => Some(la + lb),
                    BinOp::Sub => Some(la - lb),
                    BinOp::Mul if la.is_constant() => Some(lb.scale(&la.constant)),
                    BinOp::Mul if lb.is_constant() => Some(la.scale(&lb.constant)),
                    BinOp::Div if lb.is_constant() && !lb.constant.is_zero() => {
                        Some(la.scale(&lb.constant.recip()))
                    }
                    _ => None,
                }
            }
            _ => self.to_linear_int(),
        }
    }

    /// Guard form of a predicate: a comparison of linear sides, or `p != 0`.
    pub fn to_constraint(&self) -> Option<Constraint> {
        if let SymExpr::Bin(op, a, b) = self {
            if let Some(cmp) = op.as_cmp() {
                return Some(Constraint::new(a.to_linear()?, cmp, b.to_linear()?));
            }
        }
        let l = self.to_linear()?;
        Some(Constraint::new(l, Cmp::Ne, LinExpr::zero()))
    }

    /// Canonical expression for an integer-coefficient linear form.
    pub fn from_linear_int(l: &LinExpr) -> SymExpr {
        let mut acc: Option<SymExpr> = None;
        for (v, c) in &l.terms {
            let c = c.to_integer();
            let mag = c.abs();
            let term = if mag.is_one() {
                SymExpr::var(v)
            } else {
                SymExpr::Bin(BinOp::Mul, Box::new(SymExpr::Int(mag)), Box::new(SymExpr::var(v)))
            };
            acc = Some(match acc {
                None if c.is_negative() => {
                    SymExpr::Bin(BinOp::Sub, Box::new(SymExpr::int(0)), Box::new(term))
                }
                None => term,
                Some(e) if c.is_negative() => SymExpr::Bin(BinOp::Sub, Box::new(e), Box::new(term)),
                Some(e) => SymExpr::Bin(BinOp::Add, Box::new(e), Box::new(term)),
            });
        }
        let k = l.constant.to_integer();
        match acc {
            None => SymExpr::Int(k),
            Some(e) if k.is_zero() => e,
            Some(e) if k.is_negative() => SymExpr::Bin(BinOp::Sub, Box::new(e), Box::new(SymExpr::Int(-k))),
            Some(e) => SymExpr::Bin(BinOp::Add, Box::new(e), Box::new(SymExpr::Int(k))),
        }
    }

    pub fn contains_unknown(&self) -> bool {
        match self {
            SymExpr::Unknown => true,
            SymExpr::Int(_) | SymExpr::Var(_) => false,
            SymExpr::Bin(_, a, b) => a.contains_unknown() || b.contains_unknown(),
            SymExpr::Select(c, t, e) => c.contains_unknown() || t.contains_unknown() || e.contains_unknown(),
        }
    }

    /// Variables in first-occurrence order, left to right.
    pub fn vars_ordered(&self) -> Vec<String> {
        fn walk(e: &SymExpr, out: &mut Vec<String>) {
            match e {
                SymExpr::Var(v) => {
                    if !out.contains(v) {
                        out.push(v.clone());
                    }
                }
                SymExpr::Bin(_, a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
                SymExpr::Select(c, t, f) => {
                    walk(c, out);
                    walk(t, out);
                    walk(f, out);
                }
                SymExpr::Int(_) | SymExpr::Unknown => {}
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }

    /// Concrete value, or `None` when the expression is unknown or a variable is unbound.
    pub fn eval(&self, env: &BTreeMap<String, BigInt>) -> Option<BigInt> {
        match self {
            SymExpr::Int(v) => Some(v.clone()),
            SymExpr::Var(v) => env.get(v).cloned(),
            SymExpr::Unknown => None,
            SymExpr::Bin(op, a, b) => op.apply(&a.eval(env)?, &b.eval(env)?),
            SymExpr::Select(c, t, f) => {
                if c.eval(env)?.is_zero() {
                    f.eval(env)
                } else {
                    t.eval(env)
                }
            }
        }
    }

    /// Replaces variables by expressions, re-simplifying on the way up.
    pub fn substitute(&self, map: &BTreeMap<String, SymExpr>) -> SymExpr {
        match self {
            SymExpr::Var(v) => map.get(v).cloned().unwrap_or_else(|| self.clone()),
            SymExpr::Int(_) | SymExpr::Unknown => self.clone(),
            SymExpr::Bin(op, a, b) => SymExpr::bin(*op, a.substitute(map), b.substitute(map)),
            SymExpr::Select(c, t, f) => SymExpr::select(c.substitute(map), t.substitute(map), f.substitute(map)),
        }
    }

    /// Rewrites every `mod` node according to `mode`.
    pub fn approximate(&self, mode: Mode) -> SymExpr {
        if mode == Mode::Exact {
            return if self.contains_unknown() { SymExpr::Unknown } else { self.clone() };
        }
        match self {
            SymExpr::Int(_) | SymExpr::Var(_) | SymExpr::Unknown => self.clone(),
            SymExpr::Select(c, t, f) => SymExpr::select(c.approximate(mode), t.approximate(mode), f.approximate(mode)),
            SymExpr::Bin(BinOp::Mod, x, y) => {
                // `y mod (x mod y)` stays below half of `y`.
                if let SymExpr::Bin(BinOp::Mod, _, inner_y) = &**y {
                    if inner_y == x {
                        let y = x.approximate(mode);
                        return mod_bound(mode, y, 2);
                    }
                }
                let xa = x.approximate(mode);
                let ya = y.approximate(mode);
                if let (Some(a), Some(b)) = (xa.as_int(), ya.as_int()) {
                    if let Some(v) = BinOp::Mod.apply(a, b) {
                        return SymExpr::Int(v);
                    }
                }
                mod_bound(mode, ya, 1)
            }
            SymExpr::Bin(op, a, b) => SymExpr::bin(*op, a.approximate(mode), b.approximate(mode)),
        }
    }
}

/// Approximation of a remainder whose divisor is `y`, shrunk by `shrink`.
fn mod_bound(mode: Mode, y: SymExpr, shrink: i64) -> SymExpr {
    let y1 = SymExpr::bin(BinOp::Sub, y, SymExpr::int(1));
    match mode {
        Mode::Exact => unreachable!("exact mode keeps mod nodes"),
        Mode::Lower => SymExpr::int(0),
        Mode::Upper => SymExpr::bin(BinOp::Div, y1, SymExpr::int(shrink)),
        Mode::Typical => SymExpr::bin(BinOp::Div, y1, SymExpr::int(2 * shrink)),
    }
}

impl fmt::Display for SymExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn atom(e: &SymExpr, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match e {
                SymExpr::Bin(..) | SymExpr::Select(..) => write!(f, "({})", e),
                SymExpr::Int(v) if v.is_negative() => write!(f, "({})", v),
                _ => write!(f, "{}", e),
            }
        }
        match self {
            SymExpr::Int(v) => write!(f, "{}", v),
            SymExpr::Var(v) => write!(f, "%{}", v),
            SymExpr::Unknown => f.write_str("?"),
            SymExpr::Bin(op, a, b) => {
                // Sums and products associate to the left without parentheses.
                let left_flat = matches!(
                    (op, &**a),
                    (BinOp::Add | BinOp::Sub, SymExpr::Bin(BinOp::Add | BinOp::Sub | BinOp::Mul, ..))
                        | (BinOp::Mul, SymExpr::Bin(BinOp::Mul, ..))
                );
                let right_flat = matches!((op, &**b), (BinOp::Add | BinOp::Sub, SymExpr::Bin(BinOp::Mul, ..)));
                if left_flat {
                    write!(f, "{}", a)?;
                } else {
                    atom(a, f)?;
                }
                write!(f, " {} ", op.symbol())?;
                if right_flat {
                    write!(f, "{}", b)
                } else {
                    atom(b, f)
                }
            }
            SymExpr::Select(c, t, e) => {
                f.write_str("select ")?;
                atom(c, f)?;
                f.write_str(" ")?;
                atom(t, f)?;
                f.write_str(" ")?;
                atom(e, f)
            }
        }
    }
}

/// Variables referenced by an expression; `?` contributes nothing.
pub fn refs(e: &SymExpr) -> BTreeSet<String> {
    e.vars_ordered().into_iter().collect()
}

fn operand_expr(op: &Operand) -> SymExpr {
    match op {
        Operand::Const(c) => SymExpr::Int(c.clone()),
        Operand::Var(v) => SymExpr::Var(v.clone()),
    }
}

/// Exact slice of `op` within `bb`, memoised over the block's definitions.
fn slice(bb: &BasicBlock, op: &Operand, memo: &mut BTreeMap<String, SymExpr>) -> SymExpr {
    let name = match op {
        Operand::Var(v) => v,
        Operand::Const(_) => return operand_expr(op),
    };
    if let Some(e) = memo.get(name) {
        return e.clone();
    }
    let def = bb.insts.iter().find(|i| i.dest() == Some(name.as_str()));
    let e = match def {
        None | Some(Instruction::Phi { .. }) => SymExpr::Var(name.clone()),
        Some(Instruction::MemLoad { .. }) | Some(Instruction::Call { .. }) => SymExpr::Unknown,
        Some(Instruction::Op { opcode, args, .. }) => {
            let parts: Vec<SymExpr> = args.iter().map(|a| slice(bb, a, memo)).collect();
            match BinOp::from_opcode(*opcode) {
                Some(b) => SymExpr::bin(b, parts[0].clone(), parts[1].clone()),
                None => SymExpr::select(parts[0].clone(), parts[1].clone(), parts[2].clone()),
            }
        }
        Some(_) => SymExpr::Unknown,
    };
    memo.insert(name.clone(), e.clone());
    e
}

/// Symbolic value of variable `x` at the end of `bb`.
pub fn seval(bb: &BasicBlock, x: &str, mode: Mode) -> SymExpr {
    seval_operand(bb, &Operand::var(x), mode)
}

pub fn seval_operand(bb: &BasicBlock, op: &Operand, mode: Mode) -> SymExpr {
    let mut memo = BTreeMap::new();
    let e = slice(bb, op, &mut memo).approximate(mode);
    if e.contains_unknown() {
        SymExpr::Unknown
    } else {
        e
    }
}

/// Symbolic predicate of the block's conditional branch, if it has one.
pub fn branch_predicate(bb: &BasicBlock, mode: Mode) -> Option<SymExpr> {
    match bb.terminator()? {
        Instruction::CondBr { pred, .. } => Some(seval_operand(bb, pred, mode)),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_module;
    use alloc::string::ToString;

    fn block(src: &str) -> BasicBlock {
        let text = alloc::format!("define @f() {{\n{}\n}}", src);
        parse_module(&text).unwrap().functions[0].blocks[0].clone()
    }

    #[test]
    fn exitcond_slice() {
        let bb = block("LoopIncrement:\n %0 = add %i.0, 1\n %exitcond = icmp eq %0, %1\n br %exitcond, label %a, label %b");
        let e = seval(&bb, "exitcond", Mode::Exact);
        assert_eq!(e.to_string(), "(%i.0 + 1) == %1");
        let r: Vec<String> = e.vars_ordered();
        assert_eq!(r, ["i.0", "1"]);
    }

    #[test]
    fn phi_dest_is_input() {
        let bb = block("iftrue2:\n %i.0 = phi [0, %x], [%n, %y]\n br label %z");
        assert_eq!(seval(&bb, "i.0", Mode::Exact), SymExpr::var("i.0"));
    }

    #[test]
    fn memload_is_unknown() {
        let bb = block("b:\n %v = memload\n %w = add %v, 3\n ret");
        assert_eq!(seval(&bb, "w", Mode::Exact), SymExpr::Unknown);
    }

    #[test]
    fn mod_modes() {
        let bb = block("b:\n %r = srem %a, %b\n ret");
        assert_eq!(seval(&bb, "r", Mode::Upper).to_string(), "%b - 1");
        assert_eq!(seval(&bb, "r", Mode::Lower), SymExpr::int(0));
        assert_eq!(seval(&bb, "r", Mode::Typical).to_string(), "(%b - 1) / 2");
        assert_eq!(seval(&bb, "r", Mode::Exact).to_string(), "%a mod %b");
    }

    #[test]
    fn unknown_dividend_still_bounded() {
        let bb = block("b:\n %v = memload\n %r = srem %v, %n\n ret");
        assert_eq!(seval(&bb, "r", Mode::Upper).to_string(), "%n - 1");
        assert_eq!(seval(&bb, "r", Mode::Exact), SymExpr::Unknown);
    }

    #[test]
    fn nested_mod_halves() {
        let bb = block("b:\n %r = srem %a, %b\n %s = srem %b, %r\n ret");
        assert_eq!(seval(&bb, "s", Mode::Upper).to_string(), "(%b - 1) / 2");
        // Exhaustive check of the bound behind the rule.
        for a in 0..40i64 {
            for b in 1..40i64 {
                let r = a % b;
                let s = if r == 0 { 0 } else { b % r };
                assert!(2 * s <= b - 1, "a={} b={}", a, b);
            }
        }
    }

    #[test]
    fn linear_normalisation() {
        let bb = block("b:\n %x = add %i, 1\n %y = sub %x, %i\n %z = mul %x, 2\n ret");
        assert_eq!(seval(&bb, "y", Mode::Exact), SymExpr::int(1));
        assert_eq!(seval(&bb, "z", Mode::Exact).to_string(), "2 * %i + 2");
    }

    #[test]
    fn refs_of_comparison() {
        let e = SymExpr::bin(BinOp::Gt, SymExpr::var("x"), SymExpr::bin(BinOp::Add, SymExpr::var("y"), SymExpr::int(3)));
        assert_eq!(refs(&e).into_iter().collect::<Vec<_>>(), ["x", "y"]);
        assert!(refs(&SymExpr::int(5)).is_empty());
    }
}
