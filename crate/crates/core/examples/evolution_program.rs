//! The in-machine stepper against direct stepping.

use simlab::codec::{bits, encode_pair, encode_tuple, nat_to_bits};
use simlab::qvm::{run, MachineId};
use simlab::random::{random_machine_id, rng};
use simlab::universe::{evolution_program, evolve_id, handler_table, UniverseSpec};

fn main() {
    let u = UniverseSpec::gray_cycle2();
    let g = evolution_program(&u);
    println!("evolution program: {} bits (handler table {} bits)", g.len_bits(), handler_table().len());

    let mut r = rng(1);
    for i in 0..6 {
        let id: MachineId = random_machine_id(&mut r);
        let w = bits(["00", "01", "10", "11"][i % 4]);
        let dt = i as u64 + 1;
        let input = encode_tuple([&nat_to_bits(dt), &w, &id.encode()]).unwrap();
        let out = run(&g, &input, 100_000_000).unwrap();
        let (ew, en) = evolve_id(&u, dt, &w, &id).unwrap();
        println!("dt={dt} w={w} ticks={:8} agrees={}", out.ticks, out.output == encode_pair(&ew, &en));
    }
}
