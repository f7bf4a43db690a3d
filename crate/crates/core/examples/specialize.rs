//! Universal program and argument specialization.

use simlab::codec::{bits, encode_pair};
use simlab::meta::{smn, SMN_OVERHEAD_BITS};
use simlab::qvm::{run, univ_program, Program};

fn main() {
    let p: Program = "UNPAIR CONCAT".parse().unwrap();
    let (y, x) = (bits("11"), bits("0"));

    let direct = run(&p, &encode_pair(&y, &x), 100).unwrap().output;
    let s = smn(&p, &y);
    let special = run(&s, &x, 100).unwrap().output;
    println!("p(<y,x>) = {direct}, smn(p,y)(x) = {special}");
    println!("|smn(p,y)| = |p| + 2|y| + {SMN_OVERHEAD_BITS} = {}", s.len_bits());

    let u = univ_program();
    let via = run(&u, &encode_pair(s.code(), &x), 100).unwrap().output;
    println!("UNIV(<smn(p,y), x>) = {via}  [{}]", u.to_assembly());
}
