//! A universe whose machine computes that universe's own future state.

use simlab::codec::bits;
use simlab::selfsim::{min_delay_sweep, self_sim_program, verify_self_sim, DEFAULT_FUEL};
use simlab::universe::UniverseSpec;

fn main() {
    let u = UniverseSpec::flip();
    let n_star = self_sim_program(&u, 4);
    println!("n* for dt=4: {} bits", n_star.len_bits());
    let r = verify_self_sim(&u, 4, &bits("1"), DEFAULT_FUEL).unwrap();
    print!("{r}");

    println!("dt runs max_tau exact violations");
    for row in min_delay_sweep(&u, &[1, 2, 3, 5], DEFAULT_FUEL).unwrap() {
        println!("{:2} {:4} {:8} {} {}", row.dt, row.runs, row.max_tau, row.all_exact, row.violations);
    }
}
