//! Seeded generators for randomized suites.
//!
//! All generators draw from a [`ChaCha8Rng`], so a seed fixes every input.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::codec::{BitBuf, BitString};
use crate::qvm::{Instr, MachineId, Program};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform length in `0..=max_len`, then uniform bits.
pub fn random_bits(rng: &mut impl Rng, max_len: usize) -> BitString {
    let len = rng.gen_range(0..=max_len);
    let mut buf = BitBuf::with_capacity(len);
    for _ in 0..len {
        buf.push(rng.gen());
    }
    buf.finish()
}

const STRAIGHT: [Instr; 11] = [
    Instr::Pair,
    Instr::Unpair,
    Instr::Concat,
    Instr::Swap,
    Instr::Dup,
    Instr::Drop,
    Instr::IsNil,
    Instr::Head,
    Instr::Tail,
    Instr::Cons0,
    Instr::Cons1,
];

/// A program that halts on every input: straight-line code plus `EVAL` and
/// `IF` only over quoted blocks that are themselves total, nested at most
/// `depth` deep. Faults count as halting.
pub fn random_total_program(rng: &mut impl Rng, max_len: usize, depth: u32) -> Program {
    Program::from_instrs(&total_instrs(rng, max_len, depth))
}

fn total_instrs(rng: &mut impl Rng, max_len: usize, depth: u32) -> Vec<Instr> {
    let len = rng.gen_range(0..=max_len);
    let mut out = Vec::with_capacity(len);
    while out.len() < len {
        match rng.gen_range(0..10) {
            0 => out.push(Instr::Quote(random_bits(rng, 6))),
            1 if depth > 0 => {
                let body = Program::from_instrs(&total_instrs(rng, max_len / 2, depth - 1));
                out.extend([Instr::Quote(body.into_code()), Instr::Eval]);
            }
            2 if depth > 0 => {
                // [x] → branch on whether x is empty, x stays for the branch
                let t = Program::from_instrs(&total_instrs(rng, max_len / 2, depth - 1));
                let f = Program::from_instrs(&total_instrs(rng, max_len / 2, depth - 1));
                out.extend([
                    Instr::Dup,
                    Instr::IsNil,
                    Instr::Quote(t.into_code()),
                    Instr::Swap,
                    Instr::Quote(f.into_code()),
                    Instr::Swap,
                    Instr::If,
                ]);
            }
            _ => out.push(STRAIGHT.choose(rng).expect("non-empty").clone()),
        }
    }
    out
}

/// Any instruction sequence, loops included; may not halt.
pub fn random_program(rng: &mut impl Rng, max_len: usize) -> Program {
    let len = rng.gen_range(0..=max_len);
    let instrs: Vec<Instr> = (0..len)
        .map(|_| {
            if rng.gen_range(0..5) == 0 {
                Instr::Quote(random_bits(rng, 8))
            } else {
                Instr::NULLARY.choose(rng).expect("non-empty").clone()
            }
        })
        .collect();
    Program::from_instrs(&instrs)
}

/// A machine configuration: usually running, with frames drawn from valid
/// programs and from raw bits (which fault when reached), sometimes halted.
pub fn random_machine_id(rng: &mut impl Rng) -> MachineId {
    if rng.gen_range(0..8) == 0 {
        return MachineId::Halted(random_bits(rng, 6));
    }
    let frames = (0..rng.gen_range(0..=3))
        .map(|_| {
            if rng.gen_range(0..4) == 0 {
                random_bits(rng, 12)
            } else {
                random_program(rng, 6).into_code()
            }
        })
        .filter(|c| !c.is_empty())
        .collect();
    let data = (0..rng.gen_range(0..=4)).map(|_| random_bits(rng, 8)).collect();
    MachineId::Running { frames, data }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qvm::run;

    #[test]
    fn same_seed_same_draws() {
        let a: Vec<Program> = (0..20).scan(rng(7), |r, _| Some(random_total_program(r, 12, 2))).collect();
        let b: Vec<Program> = (0..20).scan(rng(7), |r, _| Some(random_total_program(r, 12, 2))).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn total_programs_halt() {
        let mut r = rng(1);
        for _ in 0..300 {
            let p = random_total_program(&mut r, 16, 2);
            let x = random_bits(&mut r, 10);
            assert!(run(&p, &x, 100_000).is_ok(), "{}", p.to_assembly());
        }
    }
}
