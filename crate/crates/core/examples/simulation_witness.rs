//! One universe simulating another: build, check, save and reload a witness.

use simlab::graph::DomainGrid;
use simlab::simulation::{build_sim_witness, check_free, check_sim_witness, probe_domain, read_witness, write_witness};
use simlab::universe::UniverseSpec;

fn main() {
    let host = UniverseSpec::gray_cycle2();
    let target = UniverseSpec::flip();
    let grid = DomainGrid::standard();
    let domain = probe_domain(&target, &grid.dts, &grid.programs);
    let w = build_sim_witness(&host, &target, &domain, 100_000_000).unwrap();
    println!("witnessed {} of {} triples, free: {:?}", w.entries.len(), domain.len(), check_free(&w));
    println!("max tau/dt = {:.1}", w.max_delay_ratio());

    let report = check_sim_witness(&host, &target, &w);
    print!("{report}");

    let text = write_witness(&w);
    let back = read_witness(&text).unwrap();
    println!("witness file: {} bytes, round-trips: {}", text.len(), back == w);
}
