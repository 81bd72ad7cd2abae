use core::fmt;

use super::{BasicBlock, External, Function, Instruction, IrModule, Operand};
use crate::num::fmt_decimal;

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Var(v) => write!(f, "%{}", v),
            Operand::Const(c) => write!(f, "{}", c),
        }
    }
}

fn join(f: &mut fmt::Formatter<'_>, ops: &[Operand]) -> fmt::Result {
    for (k, a) in ops.iter().enumerate() {
        if k > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{}", a)?;
    }
    Ok(())
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instruction::CondBr { pred, then_label, else_label } => {
                write!(f, "br {}, label %{}, label %{}", pred, then_label, else_label)
            }
            Instruction::Br { target } => write!(f, "br label %{}", target),
            Instruction::Op { dest, opcode, args, width } => {
                write!(f, "%{} = {} ", dest, opcode)?;
                if let Some(w) = width {
                    write!(f, "i{} ", w)?;
                }
                join(f, args)
            }
            Instruction::Phi { dest, incomings } => {
                write!(f, "%{} = phi ", dest)?;
                for (k, (l, v)) in incomings.iter().enumerate() {
                    if k > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "[{}, %{}]", v, l)?;
                }
                Ok(())
            }
            Instruction::Call { dest, callee, args } => {
                if let Some(d) = dest {
                    write!(f, "%{} = ", d)?;
                }
                write!(f, "call @{}(", callee)?;
                join(f, args)?;
                f.write_str(")")
            }
            Instruction::MemLoad { dest, addr } => match addr {
                Some(a) => write!(f, "%{} = memload [{}]", dest, a),
                None => write!(f, "%{} = memload", dest),
            },
            Instruction::MemStore { target } => match target {
                Some((a, v)) => write!(f, "memstore [{}, {}]", a, v),
                None => f.write_str("memstore"),
            },
            Instruction::Ret { value } => match value {
                Some(v) => write!(f, "ret {}", v),
                None => f.write_str("ret"),
            },
        }
    }
}

impl fmt::Display for BasicBlock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}:", self.label)?;
        for i in &self.insts {
            writeln!(f, "  {}", i)?;
        }
        Ok(())
    }
}

impl fmt::Display for Function {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "define @{}(", self.name)?;
        for (k, p) in self.params.iter().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            write!(f, "%{}", p)?;
        }
        writeln!(f, ") {{")?;
        for b in &self.blocks {
            write!(f, "{}", b)?;
        }
        writeln!(f, "}}")
    }
}

impl fmt::Display for External {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "declare @{} cost {}", self.name, fmt_decimal(&self.cost))?;
        if self.returns != 0.into() {
            write!(f, " returns {}", self.returns)?;
        }
        Ok(())
    }
}

impl fmt::Display for IrModule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.externals {
            writeln!(f, "{}", e)?;
        }
        for (k, func) in self.functions.iter().enumerate() {
            if k > 0 || !self.externals.is_empty() {
                writeln!(f)?;
            }
            write!(f, "{}", func)?;
        }
        Ok(())
    }
}
