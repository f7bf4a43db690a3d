//! Fixed points: a program that prints its own code, and the recursion law
//! on a few transformers.

use simlab::codec::{bits, encode_pair};
use simlab::meta::{fix, fixpoint_report, quine};
use simlab::qvm::{run, Program};

fn main() {
    let e = quine();
    let out = run(&e, &bits("0110"), 1_000).unwrap().output;
    println!("quine: {} bits, prints itself: {}", e.len_bits(), &out == e.code());

    for src in ["UNPAIR SWAP DROP", "UNPAIR DROP DUP CONCAT", "UNPAIR SWAP CONS1 SWAP PAIR"] {
        let q: Program = src.parse().unwrap();
        let f = fix(&q);
        let x = bits("101");
        let lhs = run(&f, &x, 10_000).unwrap().output;
        let rhs = run(&q, &encode_pair(f.code(), &x), 10_000).unwrap().output;
        println!("{src:32} fix={:4} bits  law holds: {}", f.len_bits(), lhs == rhs);
    }
    print!("{}", fixpoint_report(&"UNPAIR DROP".parse().unwrap()));
}
