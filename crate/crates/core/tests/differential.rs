//! The machine and the codec against the string-level reference.

mod common;

use common::{assemble, reference_run, Outcome};
use proptest::prelude::*;
use simlab::codec::{self, BitString};
use simlab::qvm::{self, MachineId, Program, QvmError};

fn b(s: &str) -> BitString {
    s.parse().unwrap()
}

fn lib_run(code: &str, input: &str, fuel: u64) -> Outcome {
    let id = MachineId::Running {
        frames: if code.is_empty() { vec![] } else { vec![b(code)] },
        data: vec![b(input)],
    };
    match qvm::run_id(id, fuel) {
        Ok(o) => Outcome::Halted {
            output: o.output.to_text(),
            ticks: o.ticks,
        },
        Err(QvmError::OutOfFuel { .. }) => Outcome::OutOfFuel,
        Err(e) => panic!("{e}"),
    }
}

fn bitstr(max: usize) -> impl Strategy<Value = String> {
    prop::collection::vec(prop::bool::ANY, 0..=max)
        .prop_map(|v| v.into_iter().map(|x| if x { '1' } else { '0' }).collect())
}

const NULLARY: [&str; 13] = [
    "PAIR", "UNPAIR", "CONCAT", "SWAP", "DUP", "DROP", "EVAL", "IF", "ISNIL", "HEAD", "TAIL", "CONS0", "CONS1",
];

/// Assembly whose quotes often hold code, so `EVAL` and `IF` have something
/// to run.
fn source() -> impl Strategy<Value = String> {
    let token = prop_oneof![
        4 => prop::sample::select(NULLARY.to_vec()).prop_map(str::to_string),
        1 => bitstr(6).prop_map(|p| format!("QUOTE:{p}")),
    ];
    let flat = prop::collection::vec(token, 0..10).prop_map(|t| t.join(" "));
    flat.prop_recursive(2, 40, 6, |inner| {
        (inner.clone(), inner, prop::sample::select(vec!["", "EVAL", "DUP EVAL", "SWAP"])).prop_map(
            |(outer, body, tail)| format!("QUOTE:{} {tail} {outer}", assemble(&body)),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn machine_agrees_with_reference(src in source(), x in bitstr(10)) {
        let code = assemble(&src);
        prop_assert_eq!(lib_run(&code, &x, 5_000), reference_run(&code, &x, 5_000), "{}", src);
        let p = Program::from_assembly(&src).unwrap();
        prop_assert_eq!(p.code().to_text(), code);
    }

    #[test]
    fn raw_bits_fault_like_reference(code in bitstr(40), x in bitstr(8)) {
        prop_assert_eq!(lib_run(&code, &x, 1_000), reference_run(&code, &x, 1_000));
    }

    #[test]
    fn pair_agrees_with_reference(a in bitstr(12), rest in bitstr(12)) {
        let p = codec::encode_pair(&b(&a), &b(&rest));
        prop_assert_eq!(p.to_text(), common::pair(&a, &rest));
        prop_assert_eq!(codec::decode_pair(&p).ok().map(|(x, y)| (x.to_text(), y.to_text())), Some((a, rest)));
    }

    #[test]
    fn decode_rejects_what_reference_rejects(s in bitstr(16)) {
        let lib = codec::decode_pair(&b(&s)).ok().map(|(x, y)| (x.to_text(), y.to_text()));
        prop_assert_eq!(lib, common::undelimit(&s));
    }

    #[test]
    fn tuples_agree(items in prop::collection::vec(bitstr(6), 1..5)) {
        let refs: Vec<&str> = items.iter().map(String::as_str).collect();
        let bs: Vec<BitString> = items.iter().map(|s| b(s)).collect();
        prop_assert_eq!(codec::encode_tuple(&bs).unwrap().to_text(), common::tuple(&refs));
    }

    #[test]
    fn naturals_agree(n in 0u64..1_000_000) {
        prop_assert_eq!(codec::nat_to_bits(n).to_text(), common::nat(n));
    }
}

#[test]
fn known_vectors() {
    assert_eq!(common::pair("1", "0"), "11010");
    assert_eq!(reference_run(&assemble("QUOTE:011"), "1", 10), Outcome::Halted { output: "011".into(), ticks: 2 });
    assert_eq!(lib_run("", "01", 10), Outcome::Halted { output: "01".into(), ticks: 1 });
}
