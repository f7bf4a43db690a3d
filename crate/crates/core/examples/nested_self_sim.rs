//! Nested self-simulation: each round emits a snapshot of the universe as it
//! was when the previous round was emitted.

use simlab::codec::bits;
use simlab::selfsim::{density_estimate, nested_program, nested_self_sim};
use simlab::universe::UniverseSpec;

fn main() {
    let u = UniverseSpec::flip();
    let np = nested_program(&u).unwrap();
    println!("program {} bits, first emission {}, period {}", np.program.len_bits(), np.first_emission, np.period);
    let tr = nested_self_sim(&u, &bits("0"), 1_000_000, 7).unwrap();
    print!("{tr}");
    print!("{}", density_estimate(&tr.times).unwrap());

    let slow = UniverseSpec::flip().with_clock(3);
    let tr = nested_self_sim(&slow, &bits("0"), 1_000_000, 4).unwrap();
    println!("clock 3 emission times {:?}, all match {}", tr.times, tr.all_match());
}
