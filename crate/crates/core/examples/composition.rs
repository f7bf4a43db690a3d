//! Chaining two witnessed edges into a third.

use simlab::graph::{compose_witnesses, MAX_COMPOSE_INNER_TICKS};
use simlab::qvm::Program;
use simlab::simulation::{build_sim_witness, check_sim_witness, probe_domain};
use simlab::universe::UniverseSpec;

fn main() {
    let a = UniverseSpec::flip();
    let b = UniverseSpec::gray_cycle2();
    let c = UniverseSpec::flip().with_clock(2);
    let programs: Vec<Program> = vec!["QUOTE:1".parse().unwrap()];
    let fuel = 1_000_000_000;

    let ab = build_sim_witness(&a, &b, &probe_domain(&b, &[1], &[Program::empty()]), fuel).unwrap();
    let bc = build_sim_witness(&b, &c, &probe_domain(&c, &[1, 2], &programs), fuel).unwrap();
    let ac = compose_witnesses(&ab, &bc, MAX_COMPOSE_INNER_TICKS, fuel).unwrap();
    for (x, y) in bc.entries.iter().zip(&ac.entries) {
        println!("dt={} w0={}: b->c tau={:5}  a->c tau={:10}", x.triple.dt, x.triple.w0, x.tau, y.tau);
    }
    println!("composed witness verifies: {}", check_sim_witness(&a, &c, &ac).all_pass());
}
