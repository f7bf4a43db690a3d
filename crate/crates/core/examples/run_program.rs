//! Assemble a program, run it, and watch it step.

use simlab::codec::bits;
use simlab::qvm::{run, MachineId, Program};

fn main() {
    let p: Program = "DUP PAIR UNPAIR SWAP CONS1 CONCAT".parse().unwrap();
    println!("code = {} ({} bits)", p.code(), p.len_bits());
    let out = run(&p, &bits("10"), 1_000).unwrap();
    println!("output = {} after {} ticks", out.output, out.ticks);

    let mut id = MachineId::fresh(&p);
    id.push(bits("10"));
    let mut t = 0;
    while !id.is_halted() {
        if let MachineId::Running { frames, data } = &id {
            println!("t={t} frames={} data={data:?}", frames.len());
        }
        id.step_in_place();
        t += 1;
    }
    println!("t={t} {id:?}");

    // faults halt with empty output
    let bad: Program = "UNPAIR".parse().unwrap();
    println!("UNPAIR on 10 -> {:?}", run(&bad, &bits("10"), 10).unwrap().output);

    // a loop that never halts
    let spin: Program = "QUOTE:01010111 DUP EVAL".parse().unwrap();
    println!("spin: {:?}", run(&spin, &bits(""), 10_000).unwrap_err());
}
