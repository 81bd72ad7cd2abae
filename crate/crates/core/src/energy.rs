//! Instruction energy models and block pricing.
//!
//! Costs handed to the rest of the pipeline are exact rationals in
//! nanojoules. The multi-threaded processor model is evaluated in joules by
//! [`xs1_energy`] and scaled to nanojoules when it prices blocks.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_traits::{One, Zero};

use crate::ir::{BasicBlock, Instruction, IrModule, Opcode};
use crate::num::{BigInt, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Group {
    /// Memory access.
    M,
    /// Program flow: branches, calls and returns.
    B,
    /// Division.
    D,
    /// Everything else, phi included.
    G,
}

impl Group {
    pub const ALL: [Group; 4] = [Group::M, Group::B, Group::D, Group::G];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Group::M => "M",
            Group::B => "B",
            Group::D => "D",
            Group::G => "G",
        }
    }
}

pub fn classify(inst: &Instruction) -> Group {
    match inst {
        Instruction::CondBr { .. } | Instruction::Br { .. } | Instruction::Call { .. } | Instruction::Ret { .. } => {
            Group::B
        }
        Instruction::MemLoad { .. } | Instruction::MemStore { .. } => Group::M,
        Instruction::Op { opcode: Opcode::SDiv | Opcode::SRem, .. } => Group::D,
        Instruction::Op { .. } | Instruction::Phi { .. } => Group::G,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EnergyError {
    Unpriced(String),
    MissingSite { function: String, block: String, index: usize },
    MissingThreadLevel(usize),
}

impl fmt::Display for EnergyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnergyError::Unpriced(n) => write!(f, "no energy given for instruction `{}`", n),
            EnergyError::MissingSite { function, block, index } => {
                write!(f, "mapping has no entry for @{}:{}[{}]", function, block, index)
            }
            EnergyError::MissingThreadLevel(t) => write!(f, "no thread scale M_{} in the model", t),
        }
    }
}

impl core::error::Error for EnergyError {}

/// Occurrence counts of instructions, consecutive pairs and idle periods.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct InstructionCounts {
    pub by_name: BTreeMap<String, u64>,
    pub by_pair: BTreeMap<(String, String), u64>,
    pub idle_periods: u64,
    /// Counts per threading level `t` (1-based).
    pub by_thread: BTreeMap<(usize, String), u64>,
}

impl InstructionCounts {
    /// Counts of one straight instruction sequence, all at threading level 1.
    pub fn from_sequence<'a>(seq: impl IntoIterator<Item = &'a str>) -> Self {
        let mut c = InstructionCounts::default();
        c.add_sequence(seq);
        c
    }

    /// Adds a sequence; pairs do not cross into or out of other sequences.
    pub fn add_sequence<'a>(&mut self, seq: impl IntoIterator<Item = &'a str>) {
        let mut prev: Option<&str> = None;
        for n in seq {
            *self.by_name.entry(String::from(n)).or_default() += 1;
            *self.by_thread.entry((1, String::from(n))).or_default() += 1;
            if let Some(p) = prev {
                *self.by_pair.entry((String::from(p), String::from(n))).or_default() += 1;
            }
            prev = Some(n);
        }
    }

    pub fn merge(&mut self, other: &InstructionCounts) {
        for (k, v) in &other.by_name {
            *self.by_name.entry(k.clone()).or_default() += v;
        }
        for (k, v) in &other.by_pair {
            *self.by_pair.entry(k.clone()).or_default() += v;
        }
        for (k, v) in &other.by_thread {
            *self.by_thread.entry(k.clone()).or_default() += v;
        }
        self.idle_periods += other.idle_periods;
    }
}

fn q(n: u64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TiwariModel {
    pub base: BTreeMap<String, Rational>,
    pub overhead: BTreeMap<(String, String), Rational>,
    pub externals: Vec<Rational>,
}

impl TiwariModel {
    pub fn pair(&self, a: &str, b: &str) -> Rational {
        self.overhead
            .get(&(String::from(a), String::from(b)))
            .cloned()
            .unwrap_or_else(Rational::zero)
    }
}

/// Base costs plus pair overheads plus external costs, in nanojoules.
pub fn tiwari_energy(c: &InstructionCounts, m: &TiwariModel) -> Result<Rational, EnergyError> {
    let mut e = Rational::zero();
    for (name, n) in &c.by_name {
        let b = m.base.get(name).ok_or_else(|| EnergyError::Unpriced(name.clone()))?;
        e += b * q(*n);
    }
    for ((a, b), n) in &c.by_pair {
        e += m.pair(a, b) * q(*n);
    }
    for x in &m.externals {
        e += x;
    }
    Ok(e)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Xs1Model {
    /// Base power in watts.
    pub p_base: Rational,
    /// Clock period in seconds.
    pub t_clk: Rational,
    /// Constant inter-instruction overhead scale.
    pub overhead: Rational,
    /// `m[t - 1]` scales instruction power when `t` threads are active.
    pub m: Vec<Rational>,
    /// Instruction power in watts.
    pub p: BTreeMap<String, Rational>,
}

impl Xs1Model {
    pub fn n_threads_max(&self) -> usize {
        self.m.len()
    }

    fn scale(&self, t: usize) -> Result<&Rational, EnergyError> {
        t.checked_sub(1)
            .and_then(|i| self.m.get(i))
            .ok_or(EnergyError::MissingThreadLevel(t))
    }

    /// Joules of one instruction issued with `t` threads active.
    pub fn instruction_joules(&self, name: &str, t: usize) -> Result<Rational, EnergyError> {
        let p = self.p.get(name).ok_or_else(|| EnergyError::Unpriced(String::from(name)))?;
        Ok((self.scale(t)? * p * &self.overhead + &self.p_base) * &self.t_clk)
    }
}

/// Idle energy plus per-thread-level instruction energy, in joules.
pub fn xs1_energy(c: &InstructionCounts, m: &Xs1Model) -> Result<Rational, EnergyError> {
    let mut e = &m.p_base * q(c.idle_periods) * &m.t_clk;
    for ((t, name), n) in &c.by_thread {
        e += m.instruction_joules(name, *t)? * q(*n);
    }
    Ok(e)
}

/// The first-threading-level form without idle accounting, in joules.
pub fn xs1_single_thread(c: &InstructionCounts, m: &Xs1Model) -> Result<Rational, EnergyError> {
    let mut e = Rational::zero();
    for (name, n) in &c.by_name {
        e += m.instruction_joules(name, 1)? * q(*n);
    }
    Ok(e)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupModel {
    /// Energy per group, indexed by [`Group::index`].
    pub e: [Rational; 4],
    pub call_arg: Rational,
    pub call_ret: Rational,
    /// Multiplier for operations on values wider than 32 bits.
    pub widen_mul: Rational,
}

impl GroupModel {
    pub fn unit() -> Self {
        GroupModel {
            e: [Rational::one(), Rational::one(), Rational::one(), Rational::one()],
            call_arg: Rational::zero(),
            call_ret: Rational::zero(),
            widen_mul: Rational::one(),
        }
    }

    pub fn energy(&self, g: Group) -> &Rational {
        &self.e[g.index()]
    }
}

pub fn group_energy(counts: &BTreeMap<Group, u64>, m: &GroupModel) -> Rational {
    counts.iter().map(|(g, n)| m.energy(*g) * q(*n)).fold(Rational::zero(), |a, b| a + b)
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MappingModel {
    /// Aggregated energy of each IR site `(function, block, index)`.
    pub per_ir: BTreeMap<(String, String, usize), Rational>,
    /// Scale applied to phi sites, when set.
    pub phi_adjust: Option<Rational>,
}

impl MappingModel {
    /// Adds a site whose energy is the sum of the mapped ISA instruction energies.
    pub fn insert_site(&mut self, function: &str, block: &str, index: usize, isa_nj: &[Rational]) {
        let total = isa_nj.iter().fold(Rational::zero(), |a, b| a + b);
        self.per_ir.insert((String::from(function), String::from(block), index), total);
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EnergyModel {
    Group(GroupModel),
    Tiwari(TiwariModel),
    Xs1(Xs1Model),
    Mapping(MappingModel),
}

/// Where an instruction sits, for models that price individual sites.
#[derive(Debug, Clone, Copy)]
pub struct Site<'a> {
    pub function: &'a str,
    pub block: &'a str,
    pub index: usize,
}

impl EnergyModel {
    pub fn kind(&self) -> &'static str {
        match self {
            EnergyModel::Group(_) => "group",
            EnergyModel::Tiwari(_) => "tiwari",
            EnergyModel::Xs1(_) => "xs1",
            EnergyModel::Mapping(_) => "mapping",
        }
    }

    /// Energy of one instruction in nanojoules, declared external costs excluded.
    pub fn instruction_cost(&self, site: Site<'_>, inst: &Instruction) -> Result<Rational, EnergyError> {
        match self {
            EnergyModel::Group(g) => {
                let mut c = g.energy(classify(inst)).clone();
                if let Instruction::Op { width: Some(w), .. } = inst {
                    if *w > 32 {
                        c *= &g.widen_mul;
                    }
                }
                if let Instruction::Call { dest, args, .. } = inst {
                    c += &g.call_arg * q(args.len() as u64);
                    if dest.is_some() {
                        c += &g.call_ret;
                    }
                }
                Ok(c)
            }
            EnergyModel::Tiwari(t) => t
                .base
                .get(inst.mnemonic())
                .cloned()
                .ok_or_else(|| EnergyError::Unpriced(String::from(inst.mnemonic()))),
            EnergyModel::Xs1(x) => Ok(x.instruction_joules(inst.mnemonic(), 1)? * nj_per_joule()),
            EnergyModel::Mapping(m) => {
                let key = (String::from(site.function), String::from(site.block), site.index);
                let mut c = m.per_ir.get(&key).cloned().ok_or(EnergyError::MissingSite {
                    function: String::from(site.function),
                    block: String::from(site.block),
                    index: site.index,
                })?;
                if let (Some(adj), true) = (&m.phi_adjust, inst.is_phi()) {
                    c *= adj;
                }
                Ok(c)
            }
        }
    }

    /// Overhead between two consecutive instructions of one activation.
    pub fn pair_cost(&self, a: &str, b: &str) -> Rational {
        match self {
            EnergyModel::Tiwari(t) => t.pair(a, b),
            _ => Rational::zero(),
        }
    }

    /// Overhead charged when control passes from `from` into `to`.
    pub fn junction_cost(&self, from: &BasicBlock, to: &BasicBlock) -> Rational {
        match (from.insts.last(), to.insts.first()) {
            (Some(a), Some(b)) => self.pair_cost(a.mnemonic(), b.mnemonic()),
            _ => Rational::zero(),
        }
    }

    /// Energy counted once per top-level run.
    pub fn run_overhead(&self) -> Rational {
        match self {
            EnergyModel::Tiwari(t) => t.externals.iter().fold(Rational::zero(), |a, b| a + b),
            _ => Rational::zero(),
        }
    }

    /// Block energy without the declared costs of external callees.
    pub fn block_base_cost(&self, function: &str, bb: &BasicBlock) -> Result<Rational, EnergyError> {
        let mut total = Rational::zero();
        for (index, inst) in bb.insts.iter().enumerate() {
            total += self.instruction_cost(Site { function, block: &bb.label, index }, inst)?;
        }
        for w in bb.insts.windows(2) {
            total += self.pair_cost(w[0].mnemonic(), w[1].mnemonic());
        }
        Ok(total)
    }

    /// Block energy including the declared costs of external callees.
    pub fn block_cost(&self, module: &IrModule, function: &str, bb: &BasicBlock) -> Result<Rational, EnergyError> {
        let mut total = self.block_base_cost(function, bb)?;
        for inst in &bb.insts {
            if let Instruction::Call { callee, .. } = inst {
                if let Some(ext) = module.external(callee) {
                    total += &ext.cost;
                }
            }
        }
        Ok(total)
    }
}

fn nj_per_joule() -> Rational {
    Rational::from_integer(BigInt::from(1_000_000_000u64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::parse_module;
    use crate::num::{rat, ratio};

    #[test]
    fn tiwari_hand_examples() {
        let m = TiwariModel { base: [(String::from("add"), rat(2))].into_iter().collect(), overhead: BTreeMap::new(), externals: alloc::vec![rat(5)] };
        let c = InstructionCounts::from_sequence(["add", "add", "add"]);
        assert_eq!(tiwari_energy(&c, &m).unwrap(), rat(11));
        let mut m = TiwariModel::default();
        m.base.insert("a".into(), rat(1));
        m.base.insert("b".into(), rat(2));
        m.overhead.insert(("a".into(), "b".into()), ratio(1, 2));
        m.overhead.insert(("b".into(), "a".into()), ratio(1, 2));
        let c = InstructionCounts::from_sequence(["a", "b", "a"]);
        assert_eq!(tiwari_energy(&c, &m).unwrap(), rat(5));
        assert_eq!(tiwari_energy(&InstructionCounts::default(), &TiwariModel::default()).unwrap(), rat(0));
    }

    #[test]
    fn group_hand_example() {
        let m = GroupModel { e: [rat(3), rat(2), rat(10), rat(1)], ..GroupModel::unit() };
        let n: BTreeMap<Group, u64> = [(Group::M, 2), (Group::B, 1), (Group::D, 0), (Group::G, 5)].into_iter().collect();
        assert_eq!(group_energy(&n, &m), rat(13));
    }

    #[test]
    fn block_costs() {
        let src = "declare @min cost 0\ndefine @f(%a, %b, %i.0, %a1) {\nLoopIncrement:\n %1 = add %i.0, 1\n %2 = icmp eq %1, %a1\n br %2, label %c, label %c\nc:\n %m = call @min(%a, %b)\n ret\n}";
        let m = parse_module(src).unwrap();
        let f = &m.functions[0];
        let g = EnergyModel::Group(GroupModel { e: [rat(0), rat(2), rat(0), rat(1)], ..GroupModel::unit() });
        assert_eq!(g.block_cost(&m, "f", &f.blocks[0]).unwrap(), rat(4));
        let g = EnergyModel::Group(GroupModel { e: [rat(0), rat(2), rat(0), rat(1)], call_arg: rat(1), call_ret: rat(1), widen_mul: rat(1) });
        let call = &f.blocks[1].insts[0];
        assert_eq!(g.instruction_cost(Site { function: "f", block: "c", index: 0 }, call).unwrap(), rat(5));
    }

    #[test]
    fn xs1_hand_examples() {
        let m = Xs1Model {
            p_base: ratio(1, 10),
            t_clk: Rational::new(BigInt::from(1), BigInt::from(100_000_000)),
            overhead: rat(1),
            m: alloc::vec![rat(1)],
            p: [(String::from("add"), ratio(2, 10))].into_iter().collect(),
        };
        let mut c = InstructionCounts::default();
        c.idle_periods = 10;
        assert_eq!(xs1_energy(&c, &m).unwrap(), Rational::new(BigInt::from(1), BigInt::from(100_000_000)));
        let mut c = InstructionCounts::default();
        c.by_name.insert("add".into(), 100);
        assert_eq!(xs1_single_thread(&c, &m).unwrap(), Rational::new(BigInt::from(3), BigInt::from(10_000_000)));
    }
}
