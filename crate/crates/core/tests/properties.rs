//! Invariants of the codec, the machine, the program transformers and the
//! universe stepper.

mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use simlab::codec::{self, BitString};
use simlab::meta::{fix, smn};
use simlab::qvm::{self, univ_program, MachineId};
use simlab::random;
use simlab::universe::{self, init_state, UniverseSpec};

fn bits_strategy(max: usize) -> impl Strategy<Value = BitString> {
    prop::collection::vec(prop::bool::ANY, 0..=max).prop_map(|v| v.into_iter().collect())
}

/// Seeds feeding the library's own generators, so proptest shrinks the seed.
fn seed() -> impl Strategy<Value = u64> {
    any::<u64>()
}

fn rng(s: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(s)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn pair_roundtrip_and_length(a in bits_strategy(20), b in bits_strategy(20)) {
        let p = codec::encode_pair(&a, &b);
        prop_assert_eq!(p.len(), 2 * a.len() + 2 + b.len());
        prop_assert_eq!(codec::decode_pair(&p).unwrap(), (a, b));
    }

    #[test]
    fn tuple_roundtrip(items in prop::collection::vec(bits_strategy(16), 1..=5)) {
        let t = codec::encode_tuple(&items).unwrap();
        prop_assert_eq!(codec::decode_tuple(&t).unwrap(), items.clone());
        let shorter = codec::encode_tuple(&items[..items.len() - 1]);
        if let Ok(s) = shorter {
            prop_assert!(s.len() <= t.len());
        }
    }

    #[test]
    fn delimited_codes_are_prefix_free(a in bits_strategy(10), b in bits_strategy(10)) {
        let (da, db) = (codec::delimit(&a), codec::delimit(&b));
        if a != b {
            prop_assert!(!db.starts_with(&da));
        }
    }

    #[test]
    fn naturals_roundtrip(n in 0u64..u32::MAX as u64) {
        prop_assert_eq!(codec::bits_to_nat(&codec::nat_to_bits(n)), n);
    }

    #[test]
    fn machine_ids_roundtrip(s in seed()) {
        let id = random::random_machine_id(&mut rng(s));
        prop_assert_eq!(MachineId::decode(&id.encode()), Some(id));
    }

    #[test]
    fn smn_law(s in seed()) {
        let mut r = rng(s);
        let p = random::random_total_program(&mut r, 12, 2);
        let y = random::random_bits(&mut r, 8);
        let x = random::random_bits(&mut r, 8);
        let lhs = qvm::run(&smn(&p, &y), &x, 100_000).unwrap().output;
        let rhs = qvm::run(&p, &codec::encode_pair(&y, &x), 100_000).unwrap().output;
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn fix_law(s in seed()) {
        let mut r = rng(s);
        let q = random::random_total_program(&mut r, 12, 2);
        let x = random::random_bits(&mut r, 8);
        let e = fix(&q);
        let lhs = qvm::run(&e, &x, 100_000).unwrap().output;
        let rhs = qvm::run(&q, &codec::encode_pair(e.code(), &x), 100_000).unwrap().output;
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn univ_law(s in seed()) {
        let mut r = rng(s);
        let p = random::random_total_program(&mut r, 12, 2);
        let x = random::random_bits(&mut r, 8);
        let direct = qvm::run(&p, &x, 100_000).unwrap();
        let via = qvm::run(&univ_program(), &codec::encode_pair(p.code(), &x), 100_000).unwrap();
        prop_assert_eq!(via.output, direct.output);
    }

    #[test]
    fn halted_stays_halted(s in seed(), extra in 0u64..20) {
        let mut r = rng(s);
        let p = random::random_total_program(&mut r, 10, 1);
        let mut id = MachineId::fresh(&p);
        id.push(random::random_bits(&mut r, 6));
        let out = qvm::run_id(id.clone(), 100_000).unwrap();
        for _ in 0..out.ticks + extra {
            id.step_in_place();
        }
        prop_assert_eq!(id, MachineId::Halted(out.output));
    }
}

fn canonical() -> Vec<UniverseSpec> {
    vec![common::universes::flip1(), common::universes::gray2(), common::universes::flip1_slow2()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// Advancing `a + b` ticks equals advancing `a` then `b`.
    #[test]
    fn evolution_splits(s in seed(), a in 0u64..12, b in 0u64..12, which in 0usize..3) {
        let u = &canonical()[which];
        let mut r = rng(s);
        let p = random::random_program(&mut r, 10);
        let w0 = u.environment_values().nth(s as usize % (1 << u.w_width())).unwrap();
        let mut split = init_state(u, &w0, &p).unwrap();
        split.advance(u, a);
        split.advance(u, b);
        let (w, n) = universe::evolve(u, a + b, &w0, &p).unwrap();
        prop_assert_eq!(split.encode(), universe::encode_state(&w, &MachineId::decode(&n).unwrap()));
    }

    /// After the first tick the environment never reaches the machine.
    #[test]
    fn shielded_after_first_tick(s in seed(), dt in 2u64..10) {
        let u = common::universes::gray2();
        let p = random::random_program(&mut rng(s), 8);
        prop_assert!(universe::check_shielded(&u, &p, dt).unwrap());
    }
}

#[test]
fn every_tick_coupling_is_not_shielded() {
    let u = common::universes::load("flip1_leaky.txt");
    let p = simlab::qvm::Program::from_assembly("DROP DROP").unwrap();
    assert!(!universe::check_shielded(&u, &p, 4).unwrap());
}
