//! Self-delimiting pairs, tuples and naturals.

use simlab::codec::{bits, decode_pair, decode_tuple, delimit, encode_pair, encode_tuple, nat_to_bits};

fn main() {
    let (a, b) = (bits("1"), bits("0"));
    let p = encode_pair(&a, &b);
    println!("<1,0> = {p}");
    println!("D(101) = {}", delimit(&bits("101")));
    let (x, rest) = decode_pair(&p).unwrap();
    println!("decoded: first={x} second={rest}");

    let t = encode_tuple([&bits("01"), &bits(""), &bits("111")]).unwrap();
    println!("<01, e, 111> = {t} ({} bits)", t.len());
    println!("items = {:?}", decode_tuple(&t).unwrap());

    for n in 0..8 {
        println!("nat {n} -> {:?}", nat_to_bits(n).to_text());
    }
}
