//! Reference implementations written against plain strings of '0'/'1',
//! sharing no code with the library.

#![allow(dead_code)]

pub fn d(s: &str) -> String {
    let mut out: String = s.chars().flat_map(|c| [c, c]).collect();
    out.push_str("01");
    out
}

pub fn pair(a: &str, b: &str) -> String {
    format!("{}{}", d(a), b)
}

/// Splits `D(a) ++ rest`.
pub fn undelimit(s: &str) -> Option<(String, String)> {
    let b = s.as_bytes();
    let mut a = String::new();
    let mut i = 0;
    while i + 1 < b.len() {
        match (b[i], b[i + 1]) {
            (x, y) if x == y => a.push(x as char),
            (b'0', b'1') => return Some((a, s[i + 2..].to_string())),
            _ => return None,
        }
        i += 2;
    }
    None
}

/// `⟨x⟩ = ⟨x, ε⟩`, `⟨x1, …, xm⟩ = ⟨x1, ⟨x2, …, xm⟩⟩`.
pub fn tuple(items: &[&str]) -> String {
    assert!(!items.is_empty());
    items.iter().rev().fold(String::new(), |acc, x| pair(x, &acc))
}

/// `binary(n + 1)` without its leading one.
pub fn nat(n: u64) -> String {
    format!("{:b}", n + 1)[1..].to_string()
}

const OPS: [(&str, &str); 14] = [
    ("QUOTE", "0000"),
    ("PAIR", "0001"),
    ("UNPAIR", "0010"),
    ("CONCAT", "0011"),
    ("SWAP", "0100"),
    ("DUP", "0101"),
    ("DROP", "0110"),
    ("EVAL", "0111"),
    ("IF", "1000"),
    ("ISNIL", "1001"),
    ("HEAD", "1010"),
    ("TAIL", "1011"),
    ("CONS0", "1100"),
    ("CONS1", "1101"),
];

pub fn opcode(name: &str) -> &'static str {
    OPS.iter().find(|(n, _)| *n == name).map(|(_, c)| *c).expect("known mnemonic")
}

/// Machine code for whitespace-separated mnemonics, `QUOTE:bits` included.
pub fn assemble(src: &str) -> String {
    src.split_whitespace()
        .map(|tok| match tok.strip_prefix("QUOTE:") {
            Some(p) => format!("0000{}", d(p)),
            None => opcode(tok).to_string(),
        })
        .collect()
}

#[derive(Debug, PartialEq, Eq)]
pub enum Outcome {
    Halted { output: String, ticks: u64 },
    OutOfFuel,
}

struct Eval {
    ticks: u64,
    fuel: u64,
}

enum Stop {
    Fault,
    Fuel,
}

impl Eval {
    /// Runs `code` to completion on `stack`; one tick per instruction.
    fn block(&mut self, code: &str, stack: &mut Vec<String>) -> Result<(), Stop> {
        let mut rest = code;
        while !rest.is_empty() {
            if self.ticks >= self.fuel {
                return Err(Stop::Fuel);
            }
            self.ticks += 1;
            if rest.len() < 4 {
                return Err(Stop::Fault);
            }
            let (op, tail) = rest.split_at(4);
            rest = tail;
            let name = OPS.iter().find(|(_, c)| *c == op).map(|(n, _)| *n).ok_or(Stop::Fault)?;
            let pop = |s: &mut Vec<String>| s.pop().ok_or(Stop::Fault);
            match name {
                "QUOTE" => {
                    let (p, r) = undelimit(rest).ok_or(Stop::Fault)?;
                    let used = rest.len() - r.len();
                    rest = &rest[used..];
                    stack.push(p);
                }
                "PAIR" => {
                    let b = pop(stack)?;
                    let a = pop(stack)?;
                    stack.push(pair(&a, &b));
                }
                "UNPAIR" => {
                    let s = pop(stack)?;
                    let (a, b) = undelimit(&s).ok_or(Stop::Fault)?;
                    stack.push(a);
                    stack.push(b);
                }
                "CONCAT" => {
                    let b = pop(stack)?;
                    let a = pop(stack)?;
                    stack.push(a + &b);
                }
                "SWAP" => {
                    let b = pop(stack)?;
                    let a = pop(stack)?;
                    stack.push(b);
                    stack.push(a);
                }
                "DUP" => {
                    let a = stack.last().cloned().ok_or(Stop::Fault)?;
                    stack.push(a);
                }
                "DROP" => {
                    pop(stack)?;
                }
                "EVAL" => {
                    let c = pop(stack)?;
                    self.block(&c, stack)?;
                }
                "IF" => {
                    let c = pop(stack)?;
                    let f = pop(stack)?;
                    let t = pop(stack)?;
                    self.block(if c == "1" { &t } else { &f }, stack)?;
                }
                "ISNIL" => {
                    let s = pop(stack)?;
                    stack.push(if s.is_empty() { "1" } else { "0" }.into());
                }
                "HEAD" => {
                    let s = pop(stack)?;
                    let h = s.chars().next().ok_or(Stop::Fault)?;
                    stack.push(h.to_string());
                }
                "TAIL" => {
                    let s = pop(stack)?;
                    if s.is_empty() {
                        return Err(Stop::Fault);
                    }
                    stack.push(s[1..].to_string());
                }
                "CONS0" => {
                    let s = pop(stack)?;
                    stack.push(format!("0{s}"));
                }
                "CONS1" => {
                    let s = pop(stack)?;
                    stack.push(format!("1{s}"));
                }
                _ => unreachable!(),
            }
        }
        Ok(())
    }
}

/// Big-step reference: `code` on a stack holding `input`. A fault halts with
/// empty output; the final halting transition costs one tick.
pub fn reference_run(code: &str, input: &str, fuel: u64) -> Outcome {
    let mut e = Eval { ticks: 0, fuel };
    let mut stack = vec![input.to_string()];
    let output = match e.block(code, &mut stack) {
        Ok(()) => stack.pop().unwrap_or_default(),
        Err(Stop::Fault) => {
            return Outcome::Halted {
                output: String::new(),
                ticks: e.ticks,
            }
        }
        Err(Stop::Fuel) => return Outcome::OutOfFuel,
    };
    if e.ticks >= fuel {
        return Outcome::OutOfFuel;
    }
    Outcome::Halted {
        output,
        ticks: e.ticks + 1,
    }
}

/// Canonical universes used across suites.
pub mod universes {
    use simlab::universe::UniverseSpec;

    pub fn flip1() -> UniverseSpec {
        load("flip1.txt")
    }

    pub fn gray2() -> UniverseSpec {
        load("gray2.txt")
    }

    pub fn flip1_slow2() -> UniverseSpec {
        load("flip1_slow2.txt")
    }

    pub fn swap4() -> UniverseSpec {
        load("swap4.txt")
    }

    pub fn load(name: &str) -> UniverseSpec {
        let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../universes").join(name);
        UniverseSpec::load(&path).expect("canonical universe")
    }
}
