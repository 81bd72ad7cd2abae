use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use super::{BasicBlock, External, Function, Instruction, IrModule, Opcode, Operand};
use crate::num::{parse_decimal, BigInt};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax(String),
    DuplicateLabel(String),
    DuplicateAssignment(String),
    DuplicateFunction(String),
    UnknownOpcode(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: ", self.line, self.col)?;
        match &self.kind {
            ParseErrorKind::Syntax(m) => write!(f, "syntax error: {}", m),
            ParseErrorKind::DuplicateLabel(l) => write!(f, "duplicate label `{}`", l),
            ParseErrorKind::DuplicateAssignment(v) => write!(f, "variable `%{}` assigned twice", v),
            ParseErrorKind::DuplicateFunction(n) => write!(f, "function `@{}` defined twice", n),
            ParseErrorKind::UnknownOpcode(o) => write!(f, "unknown opcode `{}`", o),
        }
    }
}

impl core::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Word(String),
    Local(String),
    Global(String),
    Punct(char),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Word(w) => write!(f, "`{}`", w),
            Tok::Local(w) => write!(f, "`%{}`", w),
            Tok::Global(w) => write!(f, "`@{}`", w),
            Tok::Punct(c) => write!(f, "`{}`", c),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn is_word_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-' | '$' | '/')
}

fn lex(src: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut out = Vec::new();
    let mut chars = src.chars().peekable();
    let (mut line, mut col) = (1usize, 1usize);
    while let Some(&c) = chars.peek() {
        let (l0, c0) = (line, col);
        let bump = |chars: &mut core::iter::Peekable<core::str::Chars<'_>>, line: &mut usize, col: &mut usize| {
            let c = chars.next();
            if c == Some('\n') {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            c
        };
        if c.is_whitespace() {
            bump(&mut chars, &mut line, &mut col);
        } else if c == '#' || c == ';' {
            while let Some(&c) = chars.peek() {
                if c == '\n' {
                    break;
                }
                bump(&mut chars, &mut line, &mut col);
            }
        } else if "=,(){}[]:".contains(c) {
            bump(&mut chars, &mut line, &mut col);
            out.push(Spanned { tok: Tok::Punct(c), line: l0, col: c0 });
        } else if c == '%' || c == '@' || is_word_char(c) {
            if c == '%' || c == '@' {
                bump(&mut chars, &mut line, &mut col);
            }
            let mut w = String::new();
            while let Some(&d) = chars.peek() {
                if !is_word_char(d) {
                    break;
                }
                w.push(d);
                bump(&mut chars, &mut line, &mut col);
            }
            if w.is_empty() {
                return Err(ParseError {
                    line: l0,
                    col: c0,
                    kind: ParseErrorKind::Syntax(format!("`{}` must be followed by a name", c)),
                });
            }
            let tok = match c {
                '%' => Tok::Local(w),
                '@' => Tok::Global(w),
                _ => Tok::Word(w),
            };
            out.push(Spanned { tok, line: l0, col: c0 });
        } else {
            return Err(ParseError {
                line: l0,
                col: c0,
                kind: ParseErrorKind::Syntax(format!("unexpected character `{}`", c)),
            });
        }
    }
    out.push(Spanned { tok: Tok::Eof, line, col });
    Ok(out)
}

fn is_type(w: &str) -> Option<Option<u32>> {
    if w == "void" || w == "label" {
        return Some(None);
    }
    let bits = w.strip_prefix('i')?;
    bits.parse::<u32>().ok().filter(|b| (1..=1024).contains(b)).map(Some)
}

fn as_int(w: &str) -> Option<BigInt> {
    match w {
        "true" => Some(BigInt::from(1)),
        "false" => Some(BigInt::from(0)),
        _ => w.parse().ok(),
    }
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err_here(&self, kind: ParseErrorKind) -> ParseError {
        let s = &self.toks[self.pos];
        ParseError { line: s.line, col: s.col, kind }
    }

    fn err_at(&self, pos: usize, kind: ParseErrorKind) -> ParseError {
        let s = &self.toks[pos];
        ParseError { line: s.line, col: s.col, kind }
    }

    fn unexpected(&self, what: &str) -> ParseError {
        self.err_here(ParseErrorKind::Syntax(format!("expected {}, found {}", what, self.peek())))
    }

    fn eat_punct(&mut self, c: char) -> bool {
        if *self.peek() == Tok::Punct(c) {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, c: char) -> PResult<()> {
        if self.eat_punct(c) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{}`", c)))
        }
    }

    fn eat_word(&mut self, w: &str) -> bool {
        if matches!(self.peek(), Tok::Word(x) if x == w) {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect_word(&mut self, w: &str) -> PResult<()> {
        if self.eat_word(w) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{}`", w)))
        }
    }

    /// Skips an optional type token and returns its width.
    fn opt_type(&mut self) -> Option<u32> {
        if let Tok::Word(w) = self.peek() {
            if let Some(width) = is_type(w) {
                // `label` is only a type in front of a label operand.
                if w != "label" {
                    self.next();
                    return width;
                }
            }
        }
        None
    }

    fn global_name(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Global(n) | Tok::Word(n) => {
                self.next();
                Ok(n)
            }
            _ => Err(self.unexpected("a function name")),
        }
    }

    fn local_name(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Local(n) => {
                self.next();
                Ok(n)
            }
            _ => Err(self.unexpected("a `%` variable")),
        }
    }

    fn label_ref(&mut self) -> PResult<String> {
        self.eat_word("label");
        match self.peek().clone() {
            Tok::Local(n) => {
                self.next();
                Ok(n)
            }
            Tok::Word(n) if as_int(&n).is_none() && is_type(&n).is_none() => {
                self.next();
                Ok(n)
            }
            _ => Err(self.unexpected("a label")),
        }
    }

    fn operand(&mut self) -> PResult<(Operand, Option<u32>)> {
        let width = self.opt_type();
        match self.peek().clone() {
            Tok::Local(n) => {
                self.next();
                Ok((Operand::Var(n), width))
            }
            Tok::Word(w) => match as_int(&w) {
                Some(v) => {
                    self.next();
                    Ok((Operand::Const(v), width))
                }
                None => Err(self.unexpected("an operand")),
            },
            _ => Err(self.unexpected("an operand")),
        }
    }

    fn operand_list(&mut self, close: char) -> PResult<Vec<Operand>> {
        let mut args = Vec::new();
        if self.eat_punct(close) {
            return Ok(args);
        }
        loop {
            args.push(self.operand()?.0);
            if self.eat_punct(close) {
                return Ok(args);
            }
            self.expect_punct(',')?;
        }
    }

    fn module(&mut self) -> PResult<IrModule> {
        let mut m = IrModule::default();
        let mut names = BTreeSet::new();
        loop {
            let start = self.pos;
            match self.peek().clone() {
                Tok::Eof => return Ok(m),
                Tok::Word(w) if w == "declare" => {
                    self.next();
                    let ext = self.declare()?;
                    if !names.insert(ext.name.clone()) {
                        return Err(self.err_at(start, ParseErrorKind::DuplicateFunction(ext.name)));
                    }
                    m.externals.push(ext);
                }
                Tok::Word(w) if w == "define" => {
                    self.next();
                    let f = self.function()?;
                    if !names.insert(f.name.clone()) {
                        return Err(self.err_at(start, ParseErrorKind::DuplicateFunction(f.name)));
                    }
                    m.functions.push(f);
                }
                _ => return Err(self.unexpected("`define` or `declare`")),
            }
        }
    }

    fn declare(&mut self) -> PResult<External> {
        self.opt_type();
        let name = self.global_name()?;
        if self.eat_punct('(') {
            while !self.eat_punct(')') {
                if *self.peek() == Tok::Eof {
                    return Err(self.unexpected("`)`"));
                }
                self.next();
            }
        }
        self.expect_word("cost")?;
        let cost = match self.peek().clone() {
            Tok::Word(w) => {
                let c = parse_decimal(&w).map_err(|e| self.err_here(ParseErrorKind::Syntax(e.to_string())))?;
                self.next();
                c
            }
            _ => return Err(self.unexpected("a cost")),
        };
        let mut returns = BigInt::from(0);
        if self.eat_word("returns") {
            returns = match self.operand()?.0 {
                Operand::Const(v) => v,
                Operand::Var(_) => return Err(self.err_at(self.pos - 1, ParseErrorKind::Syntax("`returns` needs an integer".into()))),
            };
        }
        Ok(External { name, cost, returns })
    }

    fn function(&mut self) -> PResult<Function> {
        self.opt_type();
        let name = self.global_name()?;
        self.expect_punct('(')?;
        let mut params = Vec::new();
        let mut seen = BTreeSet::new();
        if !self.eat_punct(')') {
            loop {
                self.opt_type();
                let at = self.pos;
                let p = self.local_name()?;
                if !seen.insert(p.clone()) {
                    return Err(self.err_at(at, ParseErrorKind::DuplicateAssignment(p)));
                }
                params.push(p);
                if self.eat_punct(')') {
                    break;
                }
                self.expect_punct(',')?;
            }
        }
        self.expect_punct('{')?;
        let mut blocks: Vec<BasicBlock> = Vec::new();
        let mut labels = BTreeSet::new();
        loop {
            if self.eat_punct('}') {
                break;
            }
            let at = self.pos;
            let label = match (self.peek().clone(), self.peek_at(1).clone()) {
                (Tok::Word(l), Tok::Punct(':')) | (Tok::Local(l), Tok::Punct(':')) => {
                    self.next();
                    self.next();
                    Some(l)
                }
                _ => None,
            };
            let label = match label {
                Some(l) => l,
                None if blocks.is_empty() => String::from("entry"),
                None => return Err(self.unexpected("a block label")),
            };
            if !labels.insert(label.clone()) {
                return Err(self.err_at(at, ParseErrorKind::DuplicateLabel(label)));
            }
            let mut insts = Vec::new();
            loop {
                match (self.peek(), self.peek_at(1)) {
                    (Tok::Punct('}'), _) => break,
                    (Tok::Word(_) | Tok::Local(_), Tok::Punct(':')) => break,
                    (Tok::Eof, _) => return Err(self.unexpected("`}`")),
                    _ => {}
                }
                let at = self.pos;
                let inst = self.instruction()?;
                if let Some(d) = inst.dest() {
                    if !seen.insert(String::from(d)) {
                        return Err(self.err_at(at, ParseErrorKind::DuplicateAssignment(String::from(d))));
                    }
                }
                insts.push(inst);
            }
            blocks.push(BasicBlock { label, insts });
        }
        let entry = blocks.first().map(|b| b.label.clone()).unwrap_or_default();
        Ok(Function { name, params, blocks, entry })
    }

    fn instruction(&mut self) -> PResult<Instruction> {
        let dest = if let (Tok::Local(d), Tok::Punct('=')) = (self.peek().clone(), self.peek_at(1).clone()) {
            self.next();
            self.next();
            Some(d)
        } else {
            None
        };
        let op_pos = self.pos;
        let word = match self.next() {
            Tok::Word(w) => w,
            _ => {
                self.pos = op_pos;
                return Err(self.unexpected("an instruction"));
            }
        };
        let need_dest = |p: &Self, d: Option<String>| {
            d.ok_or_else(|| p.err_at(op_pos, ParseErrorKind::Syntax(format!("`{}` needs a destination", word))))
        };
        let no_dest = |p: &Self, d: &Option<String>| {
            if d.is_some() {
                Err(p.err_at(op_pos, ParseErrorKind::Syntax(format!("`{}` does not produce a value", word))))
            } else {
                Ok(())
            }
        };
        match word.as_str() {
            "br" => {
                no_dest(self, &dest)?;
                if matches!(self.peek(), Tok::Word(w) if w == "label") {
                    let target = self.label_ref()?;
                    return Ok(Instruction::Br { target });
                }
                let (pred, _) = self.operand()?;
                self.expect_punct(',')?;
                let then_label = self.label_ref()?;
                self.expect_punct(',')?;
                let else_label = self.label_ref()?;
                Ok(Instruction::CondBr { pred, then_label, else_label })
            }
            "ret" => {
                no_dest(self, &dest)?;
                let is_void = self.eat_word("void");
                let value = match self.peek() {
                    Tok::Local(_) if !is_void && *self.peek_at(1) != Tok::Punct(':') => Some(self.operand()?.0),
                    Tok::Word(w) if !is_void && (as_int(w).is_some() || is_type(w).is_some()) && *self.peek_at(1) != Tok::Punct(':') => {
                        Some(self.operand()?.0)
                    }
                    _ => None,
                };
                Ok(Instruction::Ret { value })
            }
            "phi" => {
                let dest = need_dest(self, dest)?;
                self.opt_type();
                let mut incomings = Vec::new();
                loop {
                    self.expect_punct('[')?;
                    let (v, _) = self.operand()?;
                    self.expect_punct(',')?;
                    let l = self.label_ref()?;
                    self.expect_punct(']')?;
                    incomings.push((l, v));
                    if !self.eat_punct(',') {
                        break;
                    }
                }
                Ok(Instruction::Phi { dest, incomings })
            }
            "call" => {
                self.opt_type();
                let callee = self.global_name()?;
                self.expect_punct('(')?;
                let args = self.operand_list(')')?;
                Ok(Instruction::Call { dest, callee, args })
            }
            "memload" => {
                let dest = need_dest(self, dest)?;
                self.opt_type();
                let addr = if self.eat_punct('[') {
                    let (a, _) = self.operand()?;
                    self.expect_punct(']')?;
                    Some(a)
                } else {
                    None
                };
                Ok(Instruction::MemLoad { dest, addr })
            }
            "memstore" => {
                no_dest(self, &dest)?;
                let target = if self.eat_punct('[') {
                    let (a, _) = self.operand()?;
                    self.expect_punct(',')?;
                    let (v, _) = self.operand()?;
                    self.expect_punct(']')?;
                    Some((a, v))
                } else {
                    None
                };
                Ok(Instruction::MemStore { target })
            }
            _ => {
                let mnemonic = if word == "icmp" {
                    match self.peek().clone() {
                        Tok::Word(p) => {
                            self.next();
                            format!("icmp-{}", p)
                        }
                        _ => return Err(self.unexpected("a comparison predicate")),
                    }
                } else {
                    word.clone()
                };
                let opcode = Opcode::from_mnemonic(&mnemonic)
                    .ok_or_else(|| self.err_at(op_pos, ParseErrorKind::UnknownOpcode(mnemonic.clone())))?;
                let dest = need_dest(self, dest)?;
                let mut width = self.opt_type();
                let mut args = Vec::new();
                for k in 0..opcode.arity() {
                    if k > 0 {
                        self.expect_punct(',')?;
                    }
                    let (a, w) = self.operand()?;
                    // For select the first operand's type is the i1 condition.
                    if width.is_none() && !(opcode == Opcode::Select && k == 0) {
                        width = w;
                    }
                    args.push(a);
                }
                Ok(Instruction::Op { dest, opcode, args, width })
            }
        }
    }
}

/// Parses a module in the `.mir` text syntax.
pub fn parse_module(text: &str) -> Result<IrModule, ParseError> {
    let toks = lex(text)?;
    Parser { toks, pos: 0 }.module()
}
