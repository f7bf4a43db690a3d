//! The universal stack machine.
//!
//! Programs are bit strings read four bits at a time; `QUOTE` is followed by a
//! doubling-code block holding its payload. A machine configuration
//! ([`MachineId`]) is a stack of pending code frames plus a data stack of bit
//! strings. One call to [`MachineId::step`] is one tick and executes exactly one
//! instruction, or performs the final halt transition.
//!
//! Frames hold raw, not yet decoded code, so an `EVAL`'d string is only decoded
//! as far as execution actually reaches. Any dynamic fault (bad opcode,
//! malformed payload, stack underflow, `UNPAIR` of a non-pair, `HEAD`/`TAIL` of
//! the empty string) halts with the empty output.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::codec::{self, bits, BitBuf, BitString};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QvmError {
    #[error("malformed program at bit {position}")]
    MalformedProgram { position: usize },
    #[error("did not halt within {ticks} ticks")]
    OutOfFuel { ticks: u64 },
    #[error("bad assembly token {token:?}")]
    BadAssembly { token: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Instr {
    Quote(BitString),
    Pair,
    Unpair,
    Concat,
    Swap,
    Dup,
    Drop,
    Eval,
    If,
    IsNil,
    Head,
    Tail,
    Cons0,
    Cons1,
}

impl Instr {
    pub const NULLARY: [Instr; 13] = [
        Instr::Pair,
        Instr::Unpair,
        Instr::Concat,
        Instr::Swap,
        Instr::Dup,
        Instr::Drop,
        Instr::Eval,
        Instr::If,
        Instr::IsNil,
        Instr::Head,
        Instr::Tail,
        Instr::Cons0,
        Instr::Cons1,
    ];

    pub fn opcode(&self) -> u8 {
        match self {
            Instr::Quote(_) => 0b0000,
            Instr::Pair => 0b0001,
            Instr::Unpair => 0b0010,
            Instr::Concat => 0b0011,
            Instr::Swap => 0b0100,
            Instr::Dup => 0b0101,
            Instr::Drop => 0b0110,
            Instr::Eval => 0b0111,
            Instr::If => 0b1000,
            Instr::IsNil => 0b1001,
            Instr::Head => 0b1010,
            Instr::Tail => 0b1011,
            Instr::Cons0 => 0b1100,
            Instr::Cons1 => 0b1101,
        }
    }

    /// Nullary instruction for an opcode; `None` for `QUOTE` and the two
    /// reserved codes.
    fn nullary(op: u8) -> Option<Instr> {
        Instr::NULLARY.iter().find(|i| i.opcode() == op).cloned()
    }

    pub fn mnemonic(&self) -> &'static str {
        match self {
            Instr::Quote(_) => "QUOTE",
            Instr::Pair => "PAIR",
            Instr::Unpair => "UNPAIR",
            Instr::Concat => "CONCAT",
            Instr::Swap => "SWAP",
            Instr::Dup => "DUP",
            Instr::Drop => "DROP",
            Instr::Eval => "EVAL",
            Instr::If => "IF",
            Instr::IsNil => "ISNIL",
            Instr::Head => "HEAD",
            Instr::Tail => "TAIL",
            Instr::Cons0 => "CONS0",
            Instr::Cons1 => "CONS1",
        }
    }

    fn write_to(&self, buf: &mut BitBuf) {
        let op = self.opcode();
        for i in (0..4).rev() {
            buf.push((op >> i) & 1 == 1);
        }
        if let Instr::Quote(payload) = self {
            buf.extend_doubled(payload);
            buf.push(false);
            buf.push(true);
        }
    }
}

impl fmt::Display for Instr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instr::Quote(p) if p.is_empty() => write!(f, "QUOTE:"),
            Instr::Quote(p) => write!(f, "QUOTE:{p}"),
            other => f.write_str(other.mnemonic()),
        }
    }
}

pub fn encode_program(instrs: &[Instr]) -> BitString {
    let mut buf = BitBuf::new();
    for i in instrs {
        i.write_to(&mut buf);
    }
    buf.finish()
}

/// Decodes the instruction at the front of `code`, returning it with the
/// remaining code. The error carries the bit offset of the failure.
pub fn decode_next(code: &BitString) -> Result<(Instr, BitString), usize> {
    if code.len() < 4 {
        return Err(0);
    }
    let op = (0..4).fold(0u8, |acc, i| (acc << 1) | code.get(i) as u8);
    let rest = code.slice_from(4);
    if op == 0 {
        let (payload, rest) = codec::undelimit(&rest).map_err(|_| 4usize)?;
        return Ok((Instr::Quote(payload), rest));
    }
    Instr::nullary(op).map(|i| (i, rest)).ok_or(0)
}

pub fn decode_program(code: &BitString) -> Result<Vec<Instr>, QvmError> {
    let mut out = Vec::new();
    let mut rest = code.clone();
    while !rest.is_empty() {
        let position = code.len() - rest.len();
        let (instr, r) = decode_next(&rest).map_err(|off| QvmError::MalformedProgram {
            position: position + off,
        })?;
        out.push(instr);
        rest = r;
    }
    Ok(out)
}

/// A code string known to decode completely.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Program {
    code: BitString,
}

impl Program {
    pub fn new(code: BitString) -> Result<Program, QvmError> {
        decode_program(&code)?;
        Ok(Program { code })
    }

    pub fn from_instrs(instrs: &[Instr]) -> Program {
        Program {
            code: encode_program(instrs),
        }
    }

    pub fn empty() -> Program {
        Program {
            code: BitString::new(),
        }
    }

    pub fn code(&self) -> &BitString {
        &self.code
    }

    pub fn into_code(self) -> BitString {
        self.code
    }

    pub fn len_bits(&self) -> usize {
        self.code.len()
    }

    pub fn instrs(&self) -> Vec<Instr> {
        decode_program(&self.code).expect("Program invariant: code decodes")
    }

    /// Sequential composition: `self` then `next` in one frame.
    pub fn then(&self, next: &Program) -> Program {
        Program {
            code: self.code.concat(&next.code),
        }
    }

    /// Whitespace-separated mnemonics; `QUOTE:<bits>` carries a payload.
    pub fn to_assembly(&self) -> String {
        self.instrs()
            .iter()
            .map(|i| i.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn from_assembly(src: &str) -> Result<Program, QvmError> {
        let mut instrs = Vec::new();
        for tok in src.split_whitespace() {
            let upper = tok.to_ascii_uppercase();
            let instr = if let Some(payload) = upper
                .strip_prefix("QUOTE:")
                .or_else(|| upper.strip_prefix("Q:"))
            {
                Instr::Quote(payload.parse().map_err(|_| QvmError::BadAssembly {
                    token: tok.to_string(),
                })?)
            } else {
                Instr::NULLARY
                    .iter()
                    .find(|i| i.mnemonic() == upper)
                    .cloned()
                    .ok_or_else(|| QvmError::BadAssembly {
                        token: tok.to_string(),
                    })?
            };
            instrs.push(instr);
        }
        Ok(Program::from_instrs(&instrs))
    }
}

impl fmt::Debug for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.code.len() <= 256 {
            write!(f, "Program[{}]", self.to_assembly())
        } else {
            write!(f, "Program({} bits)", self.code.len())
        }
    }
}

impl FromStr for Program {
    type Err = QvmError;

    /// Accepts either raw '0'/'1' code or assembly mnemonics.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if t.chars().all(|c| c == '0' || c == '1') {
            Program::new(t.parse().expect("checked characters"))
        } else {
            Program::from_assembly(t)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Status {
    Running,
    Halted(BitString),
}

/// A full machine configuration. Frame and data stacks keep their top at the
/// end of the vector.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum MachineId {
    Running {
        frames: Vec<BitString>,
        data: Vec<BitString>,
    },
    Halted(BitString),
}

impl MachineId {
    /// Initial configuration of a program: one frame (none for the empty
    /// program) and an empty data stack.
    pub fn fresh(p: &Program) -> MachineId {
        let frames = if p.code.is_empty() {
            Vec::new()
        } else {
            vec![p.code.clone()]
        };
        MachineId::Running {
            frames,
            data: Vec::new(),
        }
    }

    pub fn status(&self) -> Status {
        match self {
            MachineId::Running { .. } => Status::Running,
            MachineId::Halted(o) => Status::Halted(o.clone()),
        }
    }

    pub fn is_halted(&self) -> bool {
        matches!(self, MachineId::Halted(_))
    }

    /// The output of a halted machine.
    pub fn output(&self) -> Option<&BitString> {
        match self {
            MachineId::Halted(o) => Some(o),
            MachineId::Running { .. } => None,
        }
    }

    /// Pushes onto the data stack; a halted machine ignores input.
    pub fn push(&mut self, x: BitString) {
        if let MachineId::Running { data, .. } = self {
            data.push(x);
        }
    }

    pub fn step(&self) -> MachineId {
        let mut next = self.clone();
        next.step_in_place();
        next
    }

    pub fn step_in_place(&mut self) {
        let MachineId::Running { frames, data } = self else {
            return;
        };
        let Some(code) = frames.pop() else {
            let out = data.pop().unwrap_or_default();
            *self = MachineId::Halted(out);
            return;
        };
        let Ok((instr, rest)) = decode_next(&code) else {
            *self = MachineId::Halted(BitString::new());
            return;
        };
        if !rest.is_empty() {
            frames.push(rest);
        }
        if exec(instr, frames, data).is_none() {
            *self = MachineId::Halted(BitString::new());
        }
    }

    /// Structural encoding: `⟨1, out⟩` when halted, otherwise
    /// `⟨0, ⟨frames, data⟩⟩` with both stacks as top-first lists
    /// (`nil = ε`, `cons(x, rest) = ⟨x, rest⟩`).
    pub fn encode(&self) -> BitString {
        match self {
            MachineId::Halted(o) => codec::encode_pair(&bits("1"), o),
            MachineId::Running { frames, data } => {
                let body = codec::encode_pair(&encode_stack(frames), &encode_stack(data));
                codec::encode_pair(&bits("0"), &body)
            }
        }
    }

    pub fn decode(s: &BitString) -> Option<MachineId> {
        let (tag, body) = codec::decode_pair(s).ok()?;
        match tag.to_text().as_str() {
            "1" => Some(MachineId::Halted(body)),
            "0" => {
                let (f, d) = codec::decode_pair(&body).ok()?;
                Some(MachineId::Running {
                    frames: decode_stack(&f)?,
                    data: decode_stack(&d)?,
                })
            }
            _ => None,
        }
    }
}

/// Top-first list encoding of a stack stored bottom-first.
pub fn encode_stack(items: &[BitString]) -> BitString {
    let mut buf = BitBuf::new();
    for x in items.iter().rev() {
        buf.extend_doubled(x);
        buf.push(false);
        buf.push(true);
    }
    buf.finish()
}

pub fn decode_stack(s: &BitString) -> Option<Vec<BitString>> {
    let mut items = Vec::new();
    let mut rest = s.clone();
    while !rest.is_empty() {
        let (x, r) = codec::decode_pair(&rest).ok()?;
        items.push(x);
        rest = r;
    }
    items.reverse();
    Some(items)
}

fn exec(instr: Instr, frames: &mut Vec<BitString>, data: &mut Vec<BitString>) -> Option<()> {
    match instr {
        Instr::Quote(p) => data.push(p),
        Instr::Pair => {
            let b = data.pop()?;
            let a = data.pop()?;
            data.push(codec::encode_pair(&a, &b));
        }
        Instr::Unpair => {
            let s = data.pop()?;
            let (a, b) = codec::decode_pair(&s).ok()?;
            data.push(a);
            data.push(b);
        }
        Instr::Concat => {
            let b = data.pop()?;
            let a = data.pop()?;
            data.push(a.concat(&b));
        }
        Instr::Swap => {
            let n = data.len();
            if n < 2 {
                return None;
            }
            data.swap(n - 1, n - 2);
        }
        Instr::Dup => {
            let top = data.last()?.clone();
            data.push(top);
        }
        Instr::Drop => {
            data.pop()?;
        }
        Instr::Eval => {
            let c = data.pop()?;
            if !c.is_empty() {
                frames.push(c);
            }
        }
        Instr::If => {
            let c = data.pop()?;
            let q_false = data.pop()?;
            let q_true = data.pop()?;
            let chosen = if c == bits("1") { q_true } else { q_false };
            if !chosen.is_empty() {
                frames.push(chosen);
            }
        }
        Instr::IsNil => {
            let s = data.pop()?;
            data.push(bits(if s.is_empty() { "1" } else { "0" }));
        }
        Instr::Head => {
            let s = data.pop()?;
            data.push(bits(if s.first()? { "1" } else { "0" }));
        }
        Instr::Tail => {
            let s = data.pop()?;
            if s.is_empty() {
                return None;
            }
            data.push(s.tail());
        }
        Instr::Cons0 => {
            let s = data.pop()?;
            data.push(s.cons(false));
        }
        Instr::Cons1 => {
            let s = data.pop()?;
            data.push(s.cons(true));
        }
    }
    Some(())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunOutcome {
    pub output: BitString,
    /// Ticks until the machine reached `Halted`, the halt transition included.
    pub ticks: u64,
}

/// Runs `p` on input `x` for at most `fuel` ticks.
pub fn run(p: &Program, x: &BitString, fuel: u64) -> Result<RunOutcome, QvmError> {
    let mut id = MachineId::fresh(p);
    id.push(x.clone());
    run_id(id, fuel)
}

/// Steps an arbitrary configuration until it halts.
pub fn run_id(mut id: MachineId, fuel: u64) -> Result<RunOutcome, QvmError> {
    let mut ticks = 0;
    while !id.is_halted() {
        if ticks >= fuel {
            return Err(QvmError::OutOfFuel { ticks });
        }
        id.step_in_place();
        ticks += 1;
    }
    Ok(RunOutcome {
        output: id.output().cloned().unwrap_or_default(),
        ticks,
    })
}

/// `UNIV`: on `⟨p, x⟩` behaves as `p` on `x`.
pub fn univ_program() -> Program {
    Program::from_instrs(&[Instr::Unpair, Instr::Swap, Instr::Eval])
}
