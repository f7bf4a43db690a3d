//! Clock divisors and the delay they add: witnessed edges between copies of
//! one universe running at different speeds.

use simlab::graph::{build_graph, DomainGrid, Node};
use simlab::universe::UniverseSpec;

fn main() {
    let nodes: Vec<Node> = [1, 2, 3]
        .iter()
        .map(|&c| Node::new(&format!("flip1_clock{c}"), UniverseSpec::flip().with_clock(c)))
        .collect();
    let grid = DomainGrid {
        dts: vec![2, 4, 8, 16],
        programs: vec!["QUOTE:01 DUP PAIR".parse().unwrap()],
    };
    let mut g = build_graph(nodes, &grid, 1_000_000_000);
    g.edges.retain(|_, e| !e.self_loop);
    println!("host -> target: max tau/dt, slope");
    for (a, b) in g.edge_names() {
        let e = g.edge(&a, &b).unwrap();
        println!("{a} -> {b}: {:8.1} {:.2}", e.max_delay_ratio(), e.growth_exponent().0.unwrap_or(f64::NAN));
    }
}
