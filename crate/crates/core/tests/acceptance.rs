//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

mod common;

use std::collections::BTreeMap;
use std::process::Command;
use std::time::{Duration, Instant};

use common::universes;
use simlab::codec::{self, all_strings_up_to, encode_tuple, nat_to_bits, BitString};
use simlab::graph::{self, DomainGrid, Edge, Node};
use simlab::meta::{fix, quine, smn};
use simlab::qvm::{self, univ_program, Program};
use simlab::random;
use simlab::selfsim::{self, SweepRow};
use simlab::simulation::{build_sim_witness, check_sim_witness, probe_domain, PERSISTENCE_TICKS};
use simlab::universe::{self, evolution_program};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

const SEED: u64 = 20_240_601;

fn recursion_theorem() -> Verdict {
    let start = Instant::now();
    let mut rng = random::rng(SEED);
    let (mut ok, mut nonempty) = (0, 0);
    for _ in 0..500 {
        let q = random::random_total_program(&mut rng, 16, 2);
        let x = random::random_bits(&mut rng, 12);
        let e = fix(&q);
        let lhs = qvm::run(&e, &x, 1_000_000).map(|o| o.output);
        let rhs = qvm::run(&q, &codec::encode_pair(e.code(), &x), 1_000_000).map(|o| o.output);
        if let (Ok(l), Ok(r)) = (&lhs, &rhs) {
            if l == r {
                ok += 1;
                nonempty += usize::from(!l.is_empty());
            }
        }
    }
    let e = quine();
    let quine_ok = ["", "0", "1101"]
        .iter()
        .all(|x| qvm::run(&e, &x.parse().unwrap(), 10_000).is_ok_and(|o| &o.output == e.code()));
    let elapsed = start.elapsed();
    verdict(
        ok == 500 && quine_ok && elapsed < Duration::from_secs(30),
        format!("{ok}/500 laws hold ({nonempty} with non-empty output), quine={quine_ok}, {elapsed:.1?}"),
    )
}

/// Sweep over every horizon and environment, shared by criteria 2 and 4.
fn self_sim_sweeps() -> (Vec<(String, Vec<SweepRow>)>, Duration) {
    let start = Instant::now();
    let dts: Vec<u64> = (1..=16).collect();
    let rows = [("flip1", universes::flip1()), ("gray2", universes::gray2())]
        .into_iter()
        .map(|(name, u)| {
            let rows = selfsim::min_delay_sweep(&u, &dts, selfsim::DEFAULT_FUEL).expect("sweep runs");
            (name.to_string(), rows)
        })
        .collect();
    (rows, start.elapsed())
}

fn self_sim_exact(sweeps: &[(String, Vec<SweepRow>)], elapsed: Duration) -> Verdict {
    let mut runs = 0;
    let mut exact = true;
    for (_, rows) in sweeps {
        for r in rows {
            runs += r.runs;
            exact &= r.all_exact && r.out_of_fuel == 0;
        }
    }
    let max_tau = sweeps.iter().flat_map(|(_, r)| r.iter().map(|r| r.max_tau)).max().unwrap_or(0);
    verdict(
        exact && runs == 16 * (2 + 4) && elapsed < Duration::from_secs(300),
        format!("{runs} runs exact={exact}, max tau {max_tau} under fuel 10^7, {elapsed:.1?}"),
    )
}

fn free_simulation() -> Verdict {
    let mut checked = Vec::new();
    let mut pass = true;
    for (name, u, dts) in [
        ("flip1", universes::flip1(), vec![1, 7, 16]),
        ("gray2", universes::gray2(), vec![1, 7, 16]),
        ("swap4", universes::swap4(), vec![1, 16]),
    ] {
        for dt in dts {
            let reports = selfsim::verify_free(&u, dt, selfsim::DEFAULT_FUEL).expect("free sweep runs");
            let all = reports.len() == 1 << u.w_width() && reports.iter().all(|r| r.exact);
            let one_program = reports.windows(2).all(|p| p[0].n_star == p[1].n_star);
            pass &= all && one_program;
            checked.push(format!("{name}@{dt}:{}", reports.len()));
        }
    }
    verdict(pass, format!("one n* per horizon exact on every w0: {}", checked.join(" ")))
}

fn minimal_delay(sweeps: &[(String, Vec<SweepRow>)]) -> Verdict {
    let mut violations = 0;
    let mut min_ratio = f64::INFINITY;
    for (_, rows) in sweeps {
        for r in rows {
            violations += r.violations;
            if r.min_tau <= r.dt {
                violations += 1;
            }
            min_ratio = min_ratio.min(r.min_tau as f64 / r.dt as f64);
        }
    }
    verdict(violations == 0, format!("{violations} runs with tau <= dt, least tau/dt {min_ratio:.1}"))
}

fn codec_growth() -> Verdict {
    let all = all_strings_up_to(8);
    let mut growth = true;
    let mut distinct = std::collections::HashSet::new();
    for a in &all {
        for b in &all {
            let p = codec::encode_pair(a, b);
            growth &= p.len() > b.len();
            distinct.insert(p);
        }
    }
    let delimited: Vec<BitString> = all.iter().map(codec::delimit).collect();
    let mut prefix_free = true;
    for (i, x) in delimited.iter().enumerate() {
        for (j, y) in delimited.iter().enumerate() {
            if i != j && y.starts_with(x) {
                prefix_free = false;
            }
        }
    }
    let injective = distinct.len() == all.len() * all.len();
    verdict(
        growth && prefix_free && injective,
        format!("{} strings, {} pairs: growth={growth} prefix_free={prefix_free} injective={injective}", all.len(), all.len() * all.len()),
    )
}

fn evolution_witness() -> Verdict {
    let mut rng = random::rng(SEED + 6);
    let mut counts = Vec::new();
    let mut pass = true;
    for (name, u) in [
        ("flip1", universes::flip1()),
        ("gray2", universes::gray2()),
        ("flip1_slow2", universes::flip1_slow2()),
    ] {
        let g = evolution_program(&u);
        let envs: Vec<BitString> = u.environment_values().collect();
        let mut agree = 0;
        for _ in 0..200 {
            let dt = rand::Rng::gen_range(&mut rng, 0..=8u64);
            let w = envs[rand::Rng::gen_range(&mut rng, 0..envs.len())].clone();
            let id = random::random_machine_id(&mut rng);
            let input = encode_tuple([&nat_to_bits(dt), &w, &id.encode()]).unwrap();
            let (ew, en) = universe::evolve_id(&u, dt, &w, &id).unwrap();
            let out = qvm::run(&g, &input, 100_000_000).map(|o| o.output);
            if out == Ok(codec::encode_pair(&ew, &en)) {
                agree += 1;
            }
        }
        pass &= agree == 200;
        counts.push(format!("{name}:{agree}/200"));
    }
    verdict(pass, counts.join(" "))
}

fn halting_cases(rng: &mut rand_chacha::ChaCha8Rng, n: usize) -> Vec<(Program, BitString, BitString)> {
    let mut cases = Vec::new();
    while cases.len() < n {
        let p = random::random_program(rng, 14);
        let x = random::random_bits(rng, 10);
        if let Ok(o) = qvm::run(&p, &x, 10_000) {
            cases.push((p, x, o.output));
        }
    }
    cases
}

fn universality_and_smn() -> Verdict {
    let mut rng = random::rng(SEED + 7);
    let univ = univ_program();
    let univ_ok = halting_cases(&mut rng, 500)
        .iter()
        .filter(|(p, x, out)| {
            qvm::run(&univ, &codec::encode_pair(p.code(), x), 100_000).is_ok_and(|o| &o.output == out)
        })
        .count();
    let mut smn_ok = 0;
    let mut found = 0;
    while found < 500 {
        let p = random::random_program(&mut rng, 14);
        let y = random::random_bits(&mut rng, 8);
        let x = random::random_bits(&mut rng, 8);
        let Ok(direct) = qvm::run(&p, &codec::encode_pair(&y, &x), 10_000) else {
            continue;
        };
        found += 1;
        if qvm::run(&smn(&p, &y), &x, 100_000).is_ok_and(|o| o.output == direct.output) {
            smn_ok += 1;
        }
    }
    verdict(univ_ok == 500 && smn_ok == 500, format!("UNIV {univ_ok}/500, smn {smn_ok}/500"))
}

fn simulation_lemma() -> Verdict {
    let (host, target) = (universes::gray2(), universes::flip1());
    let grid = DomainGrid::standard();
    let domain = probe_domain(&target, &grid.dts, &grid.programs);
    let w = build_sim_witness(&host, &target, &domain, 100_000_000).expect("witness builds");
    let report = check_sim_witness(&host, &target, &w);
    // persistence, independently of the checker
    let mut persistent = 0;
    for e in &w.entries {
        let mut s = e.init.state(&host).unwrap();
        s.advance(&host, e.tau);
        let at_tau = s.id.output().cloned();
        s.advance(&host, PERSISTENCE_TICKS);
        if at_tau.is_some() && s.id.output().cloned() == at_tau {
            persistent += 1;
        }
    }
    verdict(
        domain.len() >= 24 && w.excluded.is_empty() && report.all_pass() && persistent == w.entries.len(),
        format!(
            "gray2 -> flip1 on {} triples: verified {}/{}, persistent {persistent}",
            domain.len(),
            report.passed(),
            report.rows.len()
        ),
    )
}

fn three_nodes() -> Vec<Node> {
    vec![
        Node::new("flip1", universes::flip1()),
        Node::new("gray2", universes::gray2()),
        Node::new("flip1_slow2", universes::flip1_slow2()),
    ]
}

fn transitivity() -> Verdict {
    let grid = DomainGrid {
        dts: vec![1, 2],
        programs: ["", "QUOTE:1"].iter().map(|s| s.parse().unwrap()).collect(),
    };
    let fuel = 1_000_000_000;
    let g = graph::build_graph(three_nodes(), &grid, fuel);
    let complete = g.edges.len() == 9;
    let mut gap = g.clone();
    gap.edges.remove(&(0, 2));
    let (closed, report) = graph::check_preorder(&gap, graph::MAX_COMPOSE_INNER_TICKS, fuel);
    let composed = closed.edges.get(&(0, 2));
    let composed_ok = composed.is_some_and(|e| {
        e.composed && !e.witness.entries.is_empty() && check_sim_witness(&e.witness.host, &e.witness.target, &e.witness).all_pass()
    });
    let (again, report2) = graph::check_preorder(&closed, graph::MAX_COMPOSE_INNER_TICKS, fuel);
    let stable = again.edge_names() == closed.edge_names() && report2.added.is_empty();
    verdict(
        complete && report.is_preorder() && composed_ok && stable,
        format!(
            "complete={complete}, composed flip1->flip1_slow2 via gray2 on {} triples verified={composed_ok}, closure stable={stable}",
            composed.map_or(0, |e| e.witness.entries.len())
        ),
    )
}

fn nested() -> Verdict {
    let mut pass = true;
    let mut lines = Vec::new();
    for (name, u) in [("flip1", universes::flip1()), ("gray2", universes::gray2())] {
        for w0 in u.environment_values() {
            let tr = selfsim::nested_self_sim(&u, &w0, 10_000_000, 6).expect("nested runs");
            pass &= tr.rounds() >= 5 && tr.strictly_increasing() && tr.all_match() && tr.all_below_one();
            lines.push(format!("{name}/{w0}:{}r t={:?}", tr.rounds(), tr.times));
        }
    }
    verdict(pass, lines.join(" "))
}

fn graph_filters() -> Verdict {
    let g = graph::build_graph(three_nodes(), &DomainGrid::standard(), 1_000_000_000);
    let self_loops: Vec<(usize, usize)> = g.edges.iter().filter(|(_, e)| e.self_loop).map(|(k, _)| *k).collect();
    let ordered = graph::filter_time_ordered(&g);
    let keeps_loops = self_loops.len() == 3 && self_loops.iter().all(|k| ordered.edges.contains_key(k));

    let mut injected = g.clone();
    let mut bad: Edge = g.edges[&(1, 0)].clone();
    let e = bad.witness.entries.iter_mut().find(|e| e.triple.dt >= 2).unwrap();
    e.tau = e.triple.dt - 1;
    injected.edges.insert((1, 0), bad);
    let removes_injected = !graph::filter_time_ordered(&injected).edges.contains_key(&(1, 0));

    // stepper-based edges are the pristine ones; self-loops come from the
    // fixed point and their tau is dominated by a dt-independent scan
    let pristine: Vec<(usize, usize)> = g.edges.iter().filter(|(_, e)| !e.self_loop).map(|(k, _)| *k).collect();
    let bounded = graph::filter_time_bounded(&g, 2.0).expect("four-point grid");
    let retains_pristine = pristine.iter().all(|k| bounded.edges.contains_key(k));
    let tight = graph::filter_time_bounded(&g, 0.5).expect("four-point grid");
    let tight_drops_pristine = pristine.iter().all(|k| !tight.edges.contains_key(k));
    let mut slopes = BTreeMap::new();
    let mut linear = true;
    for (&(a, b), e) in &g.edges {
        let (slope, points) = e.growth_exponent();
        let slope = slope.unwrap_or(f64::NAN);
        if !e.self_loop {
            linear &= points == 4 && (slope - 1.0).abs() <= 0.3;
        }
        slopes.insert(format!("{}->{}", g.nodes[a].name, g.nodes[b].name), format!("{slope:.2}"));
    }
    let slopes: Vec<String> = slopes.into_iter().map(|(k, v)| format!("{k}={v}")).collect();
    verdict(
        keeps_loops && removes_injected && retains_pristine && linear && tight_drops_pristine,
        format!(
            "self-loops kept={keeps_loops}, injected removed={removes_injected}, cap 2 keeps {}/{} stepper edges ({} of {} overall), cap 0.5 drops them={tight_drops_pristine}; slopes {}",
            pristine.iter().filter(|k| bounded.edges.contains_key(k)).count(),
            pristine.len(),
            bounded.edges.len(),
            g.edges.len(),
            slopes.join(" ")
        ),
    )
}

fn cli(args: &[&str]) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_simlab"))
        .args(args)
        .env_remove("SIMLAB_FUEL")
        .env_remove("SIMLAB_OUT_DIR")
        .output()
        .expect("binary runs");
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn determinism() -> Verdict {
    let u = |n: &str| format!("{}/../../universes/{n}", env!("CARGO_MANIFEST_DIR"));
    let dir = tempfile::tempdir().unwrap();
    let g1 = dir.path().join("g1");
    let g2 = dir.path().join("g2");
    let node = |n: &str, f: &str| format!("{n}={}", u(f));
    let experiments: Vec<Vec<String>> = vec![
        vec!["--seed", "11", "fix", "--random", "200"],
        vec!["selfsim", "--universe", &u("flip1.txt"), "--dt", "1..5", "--sweep"],
        vec!["nested", "--universe", &u("gray2.txt"), "--rounds", "5"],
        vec!["simulate", "--host", &u("gray2.txt"), "--target", &u("flip1.txt"), "--dts", "1,2"],
        vec!["universe", "oracle", "--universe", &u("flip1_slow2.txt"), "--w0", "1", "--program", "DUP PAIR", "--dt", "6"],
    ]
    .into_iter()
    .map(|v| v.into_iter().map(String::from).collect())
    .collect();
    let mut identical = 0;
    let mut all_zero = true;
    for args in &experiments {
        let a: Vec<&str> = args.iter().map(String::as_str).collect();
        let (c1, o1) = cli(&a);
        let (c2, o2) = cli(&a);
        all_zero &= c1 == 0 && c2 == 0;
        identical += usize::from(o1 == o2 && !o1.is_empty());
    }
    let build = |d: &std::path::Path| {
        let d = d.to_str().unwrap().to_string();
        let args = [
            "graph", "build", "--node", &node("flip1", "flip1.txt"), "--node", &node("gray2", "gray2.txt"),
            "--dts", "1,2", "--program", "QUOTE:1", "--dir", &d,
        ];
        let (c, report) = cli(&args);
        let (_, dot) = cli(&["graph", "export", "--dir", &d]);
        (c, report, dot)
    };
    let (a, b) = (build(&g1), build(&g2));
    let graph_same = a == b && a.0 == 0;
    verdict(
        identical == experiments.len() && all_zero && graph_same,
        format!("{identical}/{} reports byte-identical, graph build+export identical={graph_same}", experiments.len()),
    )
}

fn main() {
    // libtest flags such as --nocapture are accepted and ignored
    let started = Instant::now();
    let mut results: Vec<(usize, &str, Verdict)> = Vec::new();
    let mut record = |n: usize, name: &'static str, v: Verdict| {
        println!("{} criterion {n:>2} {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        results.push((n, name, v));
    };
    record(1, "recursion theorem", recursion_theorem());
    let (sweeps, sweep_time) = self_sim_sweeps();
    record(2, "self-simulation exactness", self_sim_exact(&sweeps, sweep_time));
    record(3, "free simulation", free_simulation());
    record(4, "minimal delay", minimal_delay(&sweeps));
    record(5, "codec growth and prefix-freeness", codec_growth());
    record(6, "evolution program against stepping", evolution_witness());
    record(7, "universality and specialization", universality_and_smn());
    record(8, "simulation witness", simulation_lemma());
    record(9, "transitivity", transitivity());
    record(10, "nested self-simulation", nested());
    record(11, "graph filters", graph_filters());
    record(12, "determinism", determinism());
    let failed: Vec<usize> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {}/{} passed in {:.1?}",
        results.len() - failed.len(),
        results.len(),
        started.elapsed()
    );
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
