//! A small simulation graph: build, filter, export, save and reload.

use simlab::graph::{
    build_graph, export_dot, filter_time_bounded, filter_time_ordered, load_graph, reverify, save_graph, DomainGrid,
    Node,
};
use simlab::universe::UniverseSpec;

fn main() {
    let nodes = vec![
        Node::new("flip1", UniverseSpec::flip()),
        Node::new("gray2", UniverseSpec::gray_cycle2()),
    ];
    let grid = DomainGrid {
        dts: vec![2, 4, 8, 16],
        programs: vec!["".parse().unwrap(), "QUOTE:1".parse().unwrap()],
    };
    let g = build_graph(nodes, &grid, 1_000_000_000);
    for (a, b) in g.edge_names() {
        let e = g.edge(&a, &b).unwrap();
        println!("{a} -> {b}: slope {:?} ordered {}", e.growth_exponent().0, e.time_ordered());
    }
    println!("time-ordered keeps {}", filter_time_ordered(&g).edges.len());
    println!("cap 2 keeps {}", filter_time_bounded(&g, 2.0).unwrap().edges.len());
    println!("cap 0.5 keeps {}", filter_time_bounded(&g, 0.5).unwrap().edges.len());
    print!("{}", export_dot(&g));

    let dir = std::env::temp_dir().join("simlab_graph_example");
    save_graph(&g, &dir).unwrap();
    let back = load_graph(&dir).unwrap();
    println!("reloaded from {}: {:?}", dir.display(), reverify(&back));
}
