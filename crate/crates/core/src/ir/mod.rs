//! The mini SSA language: types, text syntax and structural validation.

mod parse;
mod print;
mod validate;

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::num::{BigInt, Rational};

pub use parse::{parse_module, ParseError, ParseErrorKind};
pub use validate::{validate, Rule, Violation};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Operand {
    Var(String),
    Const(#[cfg_attr(feature = "serde", serde(with = "crate::num::serde_rat::int"))] BigInt),
}

impl Operand {
    pub fn var(name: &str) -> Self {
        Operand::Var(String::from(name))
    }

    pub fn int(v: i64) -> Self {
        Operand::Const(BigInt::from(v))
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Operand::Var(v) => Some(v),
            Operand::Const(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Opcode {
    Add,
    Sub,
    Mul,
    SDiv,
    SRem,
    Shl,
    LShr,
    And,
    Or,
    Xor,
    IcmpEq,
    IcmpNe,
    IcmpSlt,
    IcmpSle,
    IcmpSgt,
    IcmpSge,
    Select,
}

impl Opcode {
    pub const ALL: [Opcode; 17] = [
        Opcode::Add,
        Opcode::Sub,
        Opcode::Mul,
        Opcode::SDiv,
        Opcode::SRem,
        Opcode::Shl,
        Opcode::LShr,
        Opcode::And,
        Opcode::Or,
        Opcode::Xor,
        Opcode::IcmpEq,
        Opcode::IcmpNe,
        Opcode::IcmpSlt,
        Opcode::IcmpSle,
        Opcode::IcmpSgt,
        Opcode::IcmpSge,
        Opcode::Select,
    ];

    pub fn mnemonic(self) -> &'static str {
        match self {
            Opcode::Add => "add",
            Opcode::Sub => "sub",
            Opcode::Mul => "mul",
            Opcode::SDiv => "sdiv",
            Opcode::SRem => "srem",
            Opcode::Shl => "shl",
            Opcode::LShr => "lshr",
            Opcode::And => "and",
            Opcode::Or => "or",
            Opcode::Xor => "xor",
            Opcode::IcmpEq => "icmp-eq",
            Opcode::IcmpNe => "icmp-ne",
            Opcode::IcmpSlt => "icmp-slt",
            Opcode::IcmpSle => "icmp-sle",
            Opcode::IcmpSgt => "icmp-sgt",
            Opcode::IcmpSge => "icmp-sge",
            Opcode::Select => "select",
        }
    }

    pub fn from_mnemonic(s: &str) -> Option<Opcode> {
        Opcode::ALL.iter().copied().find(|o| o.mnemonic() == s)
    }

    pub fn arity(self) -> usize {
        if self == Opcode::Select {
            3
        } else {
            2
        }
    }

    pub fn is_compare(self) -> bool {
        matches!(
            self,
            Opcode::IcmpEq | Opcode::IcmpNe | Opcode::IcmpSlt | Opcode::IcmpSle | Opcode::IcmpSgt | Opcode::IcmpSge
        )
    }
}

impl fmt::Display for Opcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.mnemonic())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Instruction {
    CondBr { pred: Operand, then_label: String, else_label: String },
    Br { target: String },
    /// `width` is the declared integer bit width, when the source gave one.
    Op { dest: String, opcode: Opcode, args: Vec<Operand>, width: Option<u32> },
    Phi { dest: String, incomings: Vec<(String, Operand)> },
    Call { dest: Option<String>, callee: String, args: Vec<Operand> },
    /// Without an address the interpreter draws from its load stream.
    MemLoad { dest: String, addr: Option<Operand> },
    MemStore { target: Option<(Operand, Operand)> },
    Ret { value: Option<Operand> },
}

impl Instruction {
    pub fn dest(&self) -> Option<&str> {
        match self {
            Instruction::Op { dest, .. } | Instruction::Phi { dest, .. } | Instruction::MemLoad { dest, .. } => {
                Some(dest)
            }
            Instruction::Call { dest, .. } => dest.as_deref(),
            _ => None,
        }
    }

    pub fn is_terminator(&self) -> bool {
        matches!(self, Instruction::CondBr { .. } | Instruction::Br { .. } | Instruction::Ret { .. })
    }

    pub fn is_phi(&self) -> bool {
        matches!(self, Instruction::Phi { .. })
    }

    /// Operands read by the instruction, phi incomings included.
    pub fn operands(&self) -> Vec<&Operand> {
        match self {
            Instruction::CondBr { pred, .. } => alloc::vec![pred],
            Instruction::Br { .. } => Vec::new(),
            Instruction::Op { args, .. } | Instruction::Call { args, .. } => args.iter().collect(),
            Instruction::Phi { incomings, .. } => incomings.iter().map(|(_, v)| v).collect(),
            Instruction::MemLoad { addr, .. } => addr.iter().collect(),
            Instruction::MemStore { target } => match target {
                Some((a, v)) => alloc::vec![a, v],
                None => Vec::new(),
            },
            Instruction::Ret { value } => value.iter().collect(),
        }
    }

    pub fn successors(&self) -> Vec<&str> {
        match self {
            Instruction::CondBr { then_label, else_label, .. } => alloc::vec![then_label.as_str(), else_label.as_str()],
            Instruction::Br { target } => alloc::vec![target.as_str()],
            _ => Vec::new(),
        }
    }

    /// Name used by instruction-level energy models and counts.
    pub fn mnemonic(&self) -> &'static str {
        match self {
            Instruction::CondBr { .. } | Instruction::Br { .. } => "br",
            Instruction::Op { opcode, .. } => opcode.mnemonic(),
            Instruction::Phi { .. } => "phi",
            Instruction::Call { .. } => "call",
            Instruction::MemLoad { .. } => "memload",
            Instruction::MemStore { .. } => "memstore",
            Instruction::Ret { .. } => "ret",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BasicBlock {
    pub label: String,
    pub insts: Vec<Instruction>,
}

impl BasicBlock {
    pub fn terminator(&self) -> Option<&Instruction> {
        self.insts.last().filter(|i| i.is_terminator())
    }

    pub fn phis(&self) -> impl Iterator<Item = &Instruction> {
        self.insts.iter().take_while(|i| i.is_phi())
    }

    pub fn successors(&self) -> Vec<&str> {
        self.terminator().map(|t| t.successors()).unwrap_or_default()
    }

    /// Variables assigned in the block, phi destinations included.
    pub fn defs(&self) -> BTreeSet<&str> {
        self.insts.iter().filter_map(|i| i.dest()).collect()
    }

    /// Incoming operand of every phi for the edge from `pred`.
    pub fn phi_incoming<'a>(&'a self, pred: &str) -> Vec<(&'a str, Option<&'a Operand>)> {
        self.phis()
            .filter_map(|i| match i {
                Instruction::Phi { dest, incomings } => Some((
                    dest.as_str(),
                    incomings.iter().find(|(l, _)| l == pred).map(|(_, v)| v),
                )),
                _ => None,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Function {
    pub name: String,
    pub params: Vec<String>,
    pub blocks: Vec<BasicBlock>,
    pub entry: String,
}

impl Function {
    pub fn block(&self, label: &str) -> Option<&BasicBlock> {
        self.blocks.iter().find(|b| b.label == label)
    }

    pub fn block_index(&self, label: &str) -> Option<usize> {
        self.blocks.iter().position(|b| b.label == label)
    }

    /// Label of the block assigning `var`, if any.
    pub fn def_block(&self, var: &str) -> Option<&str> {
        self.blocks
            .iter()
            .find(|b| b.insts.iter().any(|i| i.dest() == Some(var)))
            .map(|b| b.label.as_str())
    }
}

/// A callee outside the module with a fixed energy cost.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct External {
    pub name: String,
    #[cfg_attr(feature = "serde", serde(with = "crate::num::serde_rat"))]
    pub cost: Rational,
    #[cfg_attr(feature = "serde", serde(with = "crate::num::serde_rat::int"))]
    pub returns: BigInt,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IrModule {
    pub functions: Vec<Function>,
    pub externals: Vec<External>,
}

impl IrModule {
    pub fn function(&self, name: &str) -> Option<&Function> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn external(&self, name: &str) -> Option<&External> {
        self.externals.iter().find(|e| e.name == name)
    }
}
