//! Program specialization and self-reference.
//!
//! [`smn`] fixes the first argument of a two-argument program by prefixing a
//! short glue sequence. [`fix`] builds, for any program `q` taking `⟨e, x⟩`,
//! a program `e` that behaves as `q` with its own code supplied as `e`.

use std::fmt;

use crate::codec::{bits, BitString};
use crate::qvm::{Instr, Program};

/// Bits of the `SWAP PAIR` tail of the specialization glue.
const GLUE_TAIL: &str = "01000001";

/// Extra bits added by [`smn`] on top of `|p| + 2|y|`.
pub const SMN_OVERHEAD_BITS: usize = 4 + 2 + 8;

/// `smn(p, y) = [QUOTE y, SWAP, PAIR] ++ p`, so that running it on `x` is
/// running `p` on `⟨y, x⟩`.
pub fn smn(p: &Program, y: &BitString) -> Program {
    let glue = Program::from_instrs(&[Instr::Quote(y.clone()), Instr::Swap, Instr::Pair]);
    glue.then(p)
}

/// In-machine [`smn`]: takes the stack `[p, y]` (y on top) and leaves
/// `[smn(p, y)]`.
pub fn smn_code() -> Vec<Instr> {
    vec![
        Instr::Quote(BitString::new()),
        Instr::Pair,
        Instr::Cons0,
        Instr::Cons0,
        Instr::Cons0,
        Instr::Cons0,
        Instr::Quote(bits(GLUE_TAIL)),
        Instr::Concat,
        Instr::Swap,
        Instr::Concat,
    ]
}

/// The diagonal program: on `⟨t, x⟩` it runs `q` on `⟨smn(t, t), x⟩`.
pub fn diagonal(q: &Program) -> Program {
    let mut instrs = vec![Instr::Unpair, Instr::Swap, Instr::Dup];
    instrs.extend(smn_code());
    instrs.extend([Instr::Swap, Instr::Pair]);
    Program::from_instrs(&instrs).then(q)
}

/// Fixed point of `q` under the `⟨self, input⟩` calling convention.
pub fn fix(q: &Program) -> Program {
    fixpoint_report(q).fixed_point
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FixpointReport {
    pub fixed_point: Program,
    pub diagonal: Program,
    pub transformer_bits: usize,
}

impl FixpointReport {
    pub fn size_bits(&self) -> usize {
        self.fixed_point.len_bits()
    }
}

impl fmt::Display for FixpointReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "transformer_bits={}", self.transformer_bits)?;
        writeln!(f, "diagonal_bits={}", self.diagonal.len_bits())?;
        writeln!(f, "construction=smn(diagonal,diagonal)")?;
        writeln!(f, "size_bits={}", self.size_bits())?;
        writeln!(f, "fixed_point={}", self.fixed_point.code())
    }
}

pub fn fixpoint_report(q: &Program) -> FixpointReport {
    let k = diagonal(q);
    let e = smn(&k, k.code());
    FixpointReport {
        fixed_point: e,
        diagonal: k,
        transformer_bits: q.len_bits(),
    }
}

/// `q` with `run(q, ⟨e, x⟩) = e`; its fixed point prints its own code.
pub fn quine_transformer() -> Program {
    Program::from_instrs(&[Instr::Unpair, Instr::Drop])
}

pub fn quine() -> Program {
    fix(&quine_transformer())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::encode_pair;
    use crate::qvm::run;

    #[test]
    fn smn_size_law() {
        let p = Program::from_assembly("DUP PAIR").unwrap();
        for y in ["", "1", "0110"] {
            let y = bits(y);
            assert_eq!(smn(&p, &y).len_bits(), p.len_bits() + 2 * y.len() + SMN_OVERHEAD_BITS);
        }
    }

    #[test]
    fn smn_code_matches_smn() {
        let p = Program::from_assembly("UNPAIR CONCAT").unwrap();
        let y = bits("10");
        let mut prog = vec![Instr::Quote(p.code().clone()), Instr::Quote(y.clone())];
        prog.extend(smn_code());
        let out = run(&Program::from_instrs(&prog), &BitString::new(), 100).unwrap();
        assert_eq!(out.output, smn(&p, &y).into_code());
    }

    #[test]
    fn identity_on_pair() {
        let out = run(&smn(&Program::empty(), &bits("11")), &bits("0"), 10).unwrap();
        assert_eq!(out.output, encode_pair(&bits("11"), &bits("0")));
    }

    #[test]
    fn quine_prints_itself() {
        let e = quine();
        for x in ["", "1", "0101"] {
            assert_eq!(&run(&e, &bits(x), 1000).unwrap().output, e.code());
        }
    }

    #[test]
    fn identity_fixed_point() {
        let e = fix(&Program::from_assembly("UNPAIR SWAP DROP").unwrap());
        assert_eq!(run(&e, &bits("0110"), 1000).unwrap().output, bits("0110"));
    }

    #[test]
    fn fix_is_deterministic() {
        let q = Program::from_assembly("UNPAIR SWAP PAIR").unwrap();
        assert_eq!(fix(&q), fix(&q));
    }
}
