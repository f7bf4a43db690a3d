//! Command-line front end.
//!
//! Every subcommand prints a line-oriented `key=value` report with a fixed
//! key order. Identical arguments (seed included) give identical bytes.
//! Exit codes: 0 all checks pass, 1 a check failed or a run ran out of fuel,
//! 2 bad usage or unreadable configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::codec::{self, BitString};
use crate::graph::{self, DomainGrid, Node, SimGraph};
use crate::meta::{fix, fixpoint_report, quine_transformer};
use crate::qvm::{self, Program, QvmError};
use crate::random;
use crate::selfsim::{self, SelfSimError};
use crate::simulation::{self, check_free, check_sim_witness, probe_domain, SimulationError};
use crate::universe::{self, evolution_program, init_state, UniverseSpec};

pub const FUEL_ENV: &str = "SIMLAB_FUEL";
pub const OUT_DIR_ENV: &str = "SIMLAB_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "simlab", version, about = "Self-simulation laboratory")]
pub struct Cli {
    /// Tick budget per run (default depends on the subcommand).
    #[arg(long, global = true, env = FUEL_ENV)]
    pub fuel: Option<u64>,
    /// Seed for randomized suites.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Also write the report here. Relative paths resolve under
    /// $SIMLAB_OUT_DIR when it is set.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Self-delimiting codes.
    #[command(subcommand)]
    Codec(CodecCmd),
    /// Execute a program on an input.
    Run {
        /// Assembly (`DUP PAIR QUOTE:01`) or raw 0/1 code.
        program: String,
        #[arg(long, default_value = "")]
        input: String,
    },
    /// Fixed point of a transformer taking `⟨self, x⟩`.
    Fix(FixArgs),
    /// Step, trace or cross-check a universe.
    #[command(subcommand)]
    Universe(UniverseCmd),
    /// Build and check a simulation witness between two universes.
    Simulate(SimulateArgs),
    /// Self-simulation at a horizon, or the minimal-delay sweep.
    Selfsim(SelfsimArgs),
    /// Nested self-simulation trace and density table.
    Nested(NestedArgs),
    /// Simulation graphs.
    #[command(subcommand)]
    Graph(GraphCmd),
}

#[derive(Debug, Subcommand)]
pub enum CodecCmd {
    /// `⟨a, b⟩`.
    Pair { a: String, b: String },
    Unpair { s: String },
    /// `⟨x1, …, xm⟩`.
    Tuple { items: Vec<String> },
    Untuple { s: String },
    /// Doubled bits plus terminator.
    Delimit { s: String },
    /// Shifted binary of a natural number.
    Nat { n: u64 },
}

#[derive(Debug, Args)]
pub struct FixArgs {
    /// Transformer; omit with --quine or --random.
    pub program: Option<String>,
    /// Use the transformer `⟨e, x⟩ ↦ e`.
    #[arg(long)]
    pub quine: bool,
    /// Check the fixed-point law on this many seeded random transformers.
    #[arg(long, conflicts_with_all = ["program", "quine"])]
    pub random: Option<usize>,
    /// Inputs to check the law on.
    #[arg(long = "input")]
    pub inputs: Vec<String>,
}

#[derive(Debug, Args)]
pub struct StartArgs {
    #[arg(long)]
    pub universe: PathBuf,
    #[arg(long)]
    pub w0: String,
    #[arg(long, default_value = "")]
    pub program: String,
}

#[derive(Debug, Subcommand)]
pub enum UniverseCmd {
    /// One line per tick up to `--dt`.
    Step {
        #[command(flatten)]
        start: StartArgs,
        #[arg(long)]
        dt: u64,
    },
    /// Encoded states at the given times.
    Trace {
        #[command(flatten)]
        start: StartArgs,
        /// Comma list or `a..b` range.
        #[arg(long)]
        times: String,
    },
    /// The in-machine evolution program against direct stepping.
    Oracle {
        #[command(flatten)]
        start: StartArgs,
        #[arg(long)]
        dt: u64,
    },
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, required_unless_present = "check")]
    pub host: Option<PathBuf>,
    #[arg(long, required_unless_present = "check")]
    pub target: Option<PathBuf>,
    #[arg(long, default_value = "2,4,8,16")]
    pub dts: String,
    /// Probe program; repeat for several. Defaults to the standard probes.
    #[arg(long = "program")]
    pub programs: Vec<String>,
    /// Write the witness file here.
    #[arg(long)]
    pub save: Option<PathBuf>,
    /// Re-check a saved witness instead of building one.
    #[arg(long, conflicts_with_all = ["host", "target", "save"])]
    pub check: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelfsimArgs {
    #[arg(long)]
    pub universe: PathBuf,
    /// Horizon, comma list or `a..b` range.
    #[arg(long, default_value = "1..16")]
    pub dt: String,
    /// Initial environment, or `all`.
    #[arg(long, default_value = "all")]
    pub w0: String,
    /// Print the minimal-delay table instead of one report per run.
    #[arg(long)]
    pub sweep: bool,
}

#[derive(Debug, Args)]
pub struct NestedArgs {
    #[arg(long)]
    pub universe: PathBuf,
    #[arg(long, default_value = "all")]
    pub w0: String,
    #[arg(long, default_value_t = selfsim::DEFAULT_MAX_ROUNDS)]
    pub rounds: usize,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long, default_value = "2,4,8,16")]
    pub dts: String,
    #[arg(long = "program")]
    pub programs: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum GraphCmd {
    /// Witness every ordered pair of nodes and save the graph.
    Build {
        /// `name=path/to/spec.txt`; repeat per node.
        #[arg(long = "node", required = true)]
        nodes: Vec<String>,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        dir: PathBuf,
    },
    /// Time-ordered and time-bounded refinements.
    Filter {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        ordered: bool,
        /// Growth exponent cap.
        #[arg(long)]
        cap: Option<f64>,
        #[arg(long)]
        save: Option<PathBuf>,
    },
    /// Chain `a → b` and `b → c` and check the result.
    Compose {
        #[arg(long)]
        dir: PathBuf,
        a: String,
        b: String,
        c: String,
        #[arg(long, default_value_t = graph::MAX_COMPOSE_INNER_TICKS)]
        max_inner: u64,
    },
    /// Reflexivity and transitive closure.
    Closure {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, default_value_t = graph::MAX_COMPOSE_INNER_TICKS)]
        max_inner: u64,
        #[arg(long)]
        save: Option<PathBuf>,
    },
    /// Re-check every stored witness.
    Verify {
        #[arg(long)]
        dir: PathBuf,
    },
    /// DOT rendering.
    Export {
        #[arg(long)]
        dir: PathBuf,
    },
}

/// What a subcommand produced.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub report: String,
    pub status: Status,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    OutOfFuel,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Fail | Status::OutOfFuel => 1,
        }
    }

    fn and(self, other: Status) -> Status {
        match (self, other) {
            (Status::OutOfFuel, _) | (_, Status::OutOfFuel) => Status::OutOfFuel,
            (Status::Fail, _) | (_, Status::Fail) => Status::Fail,
            _ => Status::Pass,
        }
    }

    fn from_bool(ok: bool) -> Status {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    fn key(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::OutOfFuel => "out-of-fuel",
        }
    }
}

/// Configuration or input problem; exit code 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

fn usage(e: impl std::fmt::Display) -> UsageError {
    UsageError(e.to_string())
}

type CmdResult = Result<Outcome, UsageError>;

/// Parses `argv`, runs, writes the report and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(out) => {
            print!("{}", out.report);
            if let Err(e) = save_report(&cli, &out.report) {
                eprintln!("error: {e}");
                return 2;
            }
            out.status.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn save_report(cli: &Cli, report: &str) -> Result<(), UsageError> {
    let dir = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from);
    let path = match (&cli.out, dir) {
        (Some(p), Some(d)) if p.is_relative() => d.join(p),
        (Some(p), _) => p.clone(),
        (None, Some(d)) => d.join(format!("{}.txt", cli.command.name())),
        (None, None) => return Ok(()),
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| usage(format!("{}: {e}", parent.display())))?;
    }
    std::fs::write(&path, report).map_err(|e| usage(format!("{}: {e}", path.display())))
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Codec(_) => "codec",
            Command::Run { .. } => "run",
            Command::Fix(_) => "fix",
            Command::Universe(_) => "universe",
            Command::Simulate(_) => "simulate",
            Command::Selfsim(_) => "selfsim",
            Command::Nested(_) => "nested",
            Command::Graph(_) => "graph",
        }
    }
}

/// Runs a parsed command without touching stdout or the file system beyond
/// what the command itself reads and writes.
pub fn execute(cli: &Cli) -> CmdResult {
    let fuel = |default: u64| cli.fuel.unwrap_or(default);
    match &cli.command {
        Command::Codec(c) => codec_cmd(c),
        Command::Run { program, input } => run_cmd(program, input, fuel(selfsim::DEFAULT_FUEL)),
        Command::Fix(a) => fix_cmd(a, cli.seed, fuel(100_000)),
        Command::Universe(c) => universe_cmd(c, fuel(selfsim::DEFAULT_FUEL)),
        Command::Simulate(a) => simulate_cmd(a, fuel(100_000_000)),
        Command::Selfsim(a) => selfsim_cmd(a, fuel(selfsim::DEFAULT_FUEL)),
        Command::Nested(a) => nested_cmd(a, fuel(10_000_000)),
        Command::Graph(c) => graph_cmd(c, fuel(1_000_000_000)),
    }
}

fn parse_bits(s: &str) -> Result<BitString, UsageError> {
    s.parse().map_err(|e| usage(format!("{s:?}: {e}")))
}

fn parse_program(s: &str) -> Result<Program, UsageError> {
    s.parse().map_err(|e: QvmError| usage(format!("{s:?}: {e}")))
}

/// `3`, `1,2,5` or `1..16` (inclusive).
pub fn parse_dts(s: &str) -> Result<Vec<u64>, UsageError> {
    let num = |t: &str| t.trim().parse::<u64>().map_err(|e| usage(format!("{t:?}: {e}")));
    if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (num(a)?, num(b)?);
        if a > b {
            return Err(usage(format!("empty range {s}")));
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(num).collect()
}

fn load_universe(path: &Path) -> Result<UniverseSpec, UsageError> {
    UniverseSpec::load(path).map_err(usage)
}

fn environments(u: &UniverseSpec, w0: &str) -> Result<Vec<BitString>, UsageError> {
    if w0 == "all" {
        return Ok(u.environment_values().collect());
    }
    let w = parse_bits(w0)?;
    u.check_width(&w).map_err(usage)?;
    Ok(vec![w])
}

fn pass(report: String) -> CmdResult {
    Ok(Outcome {
        report,
        status: Status::Pass,
    })
}

fn finish(mut report: String, status: Status) -> CmdResult {
    let _ = writeln!(report, "status={}", status.key());
    Ok(Outcome { report, status })
}

fn codec_cmd(c: &CodecCmd) -> CmdResult {
    let line = |s: String| pass(format!("{s}\n"));
    match c {
        CodecCmd::Pair { a, b } => line(codec::encode_pair(&parse_bits(a)?, &parse_bits(b)?).to_text()),
        CodecCmd::Unpair { s } => {
            let (a, b) = codec::decode_pair(&parse_bits(s)?).map_err(usage)?;
            pass(format!("first={a}\nsecond={b}\n"))
        }
        CodecCmd::Tuple { items } => {
            let items = items.iter().map(|s| parse_bits(s)).collect::<Result<Vec<_>, _>>()?;
            line(codec::encode_tuple(&items).map_err(usage)?.to_text())
        }
        CodecCmd::Untuple { s } => {
            let items = codec::decode_tuple(&parse_bits(s)?).map_err(usage)?;
            let mut r = format!("items={}\n", items.len());
            for (i, x) in items.iter().enumerate() {
                let _ = writeln!(r, "item.{i}={x}");
            }
            pass(r)
        }
        CodecCmd::Delimit { s } => line(codec::delimit(&parse_bits(s)?).to_text()),
        CodecCmd::Nat { n } => line(codec::nat_to_bits(*n).to_text()),
    }
}

fn run_cmd(program: &str, input: &str, fuel: u64) -> CmdResult {
    let p = parse_program(program)?;
    let x = parse_bits(input)?;
    let mut r = format!("program_bits={}\ninput={x}\n", p.len_bits());
    match qvm::run(&p, &x, fuel) {
        Ok(o) => {
            let _ = writeln!(r, "ticks={}\noutput={}", o.ticks, o.output);
            finish(r, Status::Pass)
        }
        Err(_) => finish(r, Status::OutOfFuel),
    }
}

/// `run(fix(q), x)` against `run(q, ⟨fix(q), x⟩)`.
fn fix_law(q: &Program, x: &BitString, fuel: u64) -> Result<bool, QvmError> {
    let e = fix(q);
    let lhs = qvm::run(&e, x, fuel)?.output;
    let rhs = qvm::run(q, &codec::encode_pair(e.code(), x), fuel)?.output;
    Ok(lhs == rhs)
}

fn fix_cmd(a: &FixArgs, seed: u64, fuel: u64) -> CmdResult {
    if let Some(n) = a.random {
        let mut rng = random::rng(seed);
        let mut r = format!("seed={seed}\ncases={n}\n");
        let (mut passed, mut starved) = (0, 0);
        for i in 0..n {
            let q = random::random_total_program(&mut rng, 16, 2);
            let x = random::random_bits(&mut rng, 12);
            match fix_law(&q, &x, fuel) {
                Ok(true) => passed += 1,
                Ok(false) => {
                    let _ = writeln!(r, "violation.{i}={}", q.to_assembly());
                }
                Err(_) => starved += 1,
            }
        }
        let _ = writeln!(r, "passed={passed}\nout_of_fuel={starved}");
        let status = if starved > 0 {
            Status::OutOfFuel
        } else {
            Status::from_bool(passed == n)
        };
        return finish(r, status);
    }
    let q = match (&a.program, a.quine) {
        (_, true) => quine_transformer(),
        (Some(p), false) => parse_program(p)?,
        (None, false) => return Err(usage("give a transformer, --quine or --random")),
    };
    let rep = fixpoint_report(&q);
    let mut r = rep.to_string();
    let mut status = Status::Pass;
    for x in &a.inputs {
        let x = parse_bits(x)?;
        match fix_law(&q, &x, fuel) {
            Ok(ok) => {
                let _ = writeln!(r, "law input={x} holds={ok}");
                status = status.and(Status::from_bool(ok));
            }
            Err(_) => {
                let _ = writeln!(r, "law input={x} holds=out-of-fuel");
                status = status.and(Status::OutOfFuel);
            }
        }
        if a.quine {
            let out = qvm::run(&rep.fixed_point, &x, fuel).map(|o| o.output);
            let own = out.as_ref().is_ok_and(|o| o == rep.fixed_point.code());
            let _ = writeln!(r, "quine input={x} prints_own_code={own}");
            status = status.and(Status::from_bool(own));
        }
    }
    finish(r, status)
}

fn start(s: &StartArgs) -> Result<(UniverseSpec, BitString, Program), UsageError> {
    let u = load_universe(&s.universe)?;
    let w0 = parse_bits(&s.w0)?;
    u.check_width(&w0).map_err(usage)?;
    Ok((u, w0, parse_program(&s.program)?))
}

fn universe_cmd(c: &UniverseCmd, fuel: u64) -> CmdResult {
    match c {
        UniverseCmd::Step { start: s, dt } => {
            let (u, w0, p) = start(s)?;
            let mut st = init_state(&u, &w0, &p).map_err(usage)?;
            let mut r = String::from("# t w machine frames data output\n");
            let line = |st: &universe::UniverseState, r: &mut String| {
                let (kind, frames, data, out) = match &st.id {
                    qvm::MachineId::Halted(o) => ("halted", 0, 0, o.to_text()),
                    qvm::MachineId::Running { frames, data } => ("running", frames.len(), data.len(), "-".into()),
                };
                let _ = writeln!(r, "{} {} {kind} {frames} {data} {out}", st.t, st.w);
            };
            line(&st, &mut r);
            for _ in 0..*dt {
                st.tick(&u);
                line(&st, &mut r);
            }
            pass(r)
        }
        UniverseCmd::Trace { start: s, times } => {
            let (u, w0, p) = start(s)?;
            let mut times = parse_dts(times)?;
            times.sort_unstable();
            let states = universe::trajectory(&u, &times, &w0, &p).map_err(usage)?;
            let mut r = String::new();
            for (t, s) in times.iter().zip(states) {
                let _ = writeln!(r, "state.{t}={s}");
            }
            pass(r)
        }
        UniverseCmd::Oracle { start: s, dt } => {
            let (u, w0, p) = start(s)?;
            let t = simulation::Triple::new(*dt, w0, p);
            let expect = t.oracle(&u).map_err(usage)?;
            let mut r = format!("dt={dt}\noracle_bits={}\n", expect.len());
            match qvm::run(&evolution_program(&u), &simulation::evolution_input(&t), fuel) {
                Ok(o) => {
                    let _ = writeln!(r, "ticks={}\nmatch={}", o.ticks, o.output == expect);
                    finish(r, Status::from_bool(o.output == expect))
                }
                Err(_) => finish(r, Status::OutOfFuel),
            }
        }
    }
}

fn grid(dts: &str, programs: &[String]) -> Result<DomainGrid, UsageError> {
    let mut g = DomainGrid::standard();
    g.dts = parse_dts(dts)?;
    if !programs.is_empty() {
        g.programs = programs.iter().map(|s| parse_program(s)).collect::<Result<_, _>>()?;
    }
    Ok(g)
}

fn simulate_cmd(a: &SimulateArgs, fuel: u64) -> CmdResult {
    if let Some(path) = &a.check {
        let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        let w = simulation::read_witness(&text).map_err(usage)?;
        let rep = check_sim_witness(&w.host, &w.target, &w);
        let r = format!("entries={}\n{rep}", w.entries.len());
        return finish(r, Status::from_bool(rep.all_pass()));
    }
    let (Some(host), Some(target)) = (&a.host, &a.target) else {
        return Err(usage("--host and --target are required"));
    };
    let (host, target) = (load_universe(host)?, load_universe(target)?);
    let g = grid(&a.dts, &a.programs)?;
    let domain = probe_domain(&target, &g.dts, &g.programs);
    let w = simulation::build_sim_witness(&host, &target, &domain, fuel).map_err(usage)?;
    let mut r = format!(
        "domain={}\nwitnessed={}\nexcluded={}\n",
        domain.len(),
        w.entries.len(),
        w.excluded.len()
    );
    for (t, why) in &w.excluded {
        let _ = writeln!(r, "excluded dt={} w0={} program={} reason={why}", t.dt, t.w0, t.program.to_assembly());
    }
    let free = match check_free(&w) {
        Ok(b) => b.to_string(),
        Err(SimulationError::InsufficientDomain) => "undetermined".into(),
        Err(e) => return Err(usage(e)),
    };
    let _ = writeln!(r, "free={free}\nmax_delay_ratio={:.3}\nruns_ahead={}", w.max_delay_ratio(), w.runs_ahead());
    let rep = check_sim_witness(&host, &target, &w);
    r.push_str(&rep.to_string());
    if let Some(path) = &a.save {
        std::fs::write(path, simulation::write_witness(&w)).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    }
    let starved = w.excluded.iter().any(|(_, why)| why.contains("did not halt"));
    let status = if starved {
        Status::OutOfFuel
    } else {
        Status::from_bool(rep.all_pass() && w.excluded.is_empty())
    };
    finish(r, status)
}

fn selfsim_cmd(a: &SelfsimArgs, fuel: u64) -> CmdResult {
    let u = load_universe(&a.universe)?;
    let dts = parse_dts(&a.dt)?;
    if dts.contains(&0) {
        return Err(usage(SelfSimError::ZeroHorizon));
    }
    if a.sweep {
        let rows = selfsim::min_delay_sweep(&u, &dts, fuel).map_err(usage)?;
        let mut r = String::from("# dt runs min_tau max_tau max_tau/dt all_exact violations out_of_fuel\n");
        let mut status = Status::Pass;
        for row in &rows {
            let taus = if row.out_of_fuel == row.runs {
                "- - -".to_string()
            } else {
                format!("{} {} {:.1}", row.min_tau, row.max_tau, row.delay_ratio())
            };
            let _ = writeln!(
                r,
                "{} {} {taus} {} {} {}",
                row.dt, row.runs, row.all_exact, row.violations, row.out_of_fuel
            );
            if row.out_of_fuel > 0 {
                status = status.and(Status::OutOfFuel);
            }
            status = status.and(Status::from_bool(row.all_exact && row.violations == 0));
        }
        return finish(r, status);
    }
    let envs = environments(&u, &a.w0)?;
    let mut r = String::new();
    let mut status = Status::Pass;
    for &dt in &dts {
        let n_star = selfsim::self_sim_program(&u, dt);
        for w0 in &envs {
            match selfsim::verify_with_program(&u, dt, &n_star, w0, fuel) {
                Ok(rep) => {
                    r.push_str(&rep.to_string());
                    status = status.and(Status::from_bool(rep.exact && rep.tau > dt));
                }
                Err(SelfSimError::OutOfFuel { .. }) => {
                    let _ = writeln!(r, "dt={dt}\nw0={w0}\nexact=out-of-fuel");
                    status = status.and(Status::OutOfFuel);
                }
                Err(e) => return Err(usage(e)),
            }
        }
    }
    finish(r, status)
}

fn nested_cmd(a: &NestedArgs, fuel: u64) -> CmdResult {
    let u = load_universe(&a.universe)?;
    let np = selfsim::nested_program(&u).map_err(usage)?;
    let mut r = format!("program_bits={}\nround_bits={}\n", np.program.len_bits(), np.round.len());
    let mut status = Status::Pass;
    for w0 in environments(&u, &a.w0)? {
        let tr = selfsim::trace_program(&u, &np, &w0, fuel, a.rounds).map_err(usage)?;
        r.push_str(&tr.to_string());
        match selfsim::density_estimate(&tr.times) {
            Ok(d) => r.push_str(&d.to_string()),
            Err(e) => {
                let _ = writeln!(r, "density=n/a ({e})");
            }
        }
        if tr.stop == selfsim::StopReason::OutOfFuel {
            status = status.and(Status::OutOfFuel);
        }
        status = status.and(Status::from_bool(tr.all_match() && tr.strictly_increasing() && tr.all_below_one()));
    }
    finish(r, status)
}

fn load_graph(dir: &Path) -> Result<SimGraph, UsageError> {
    graph::load_graph(dir).map_err(usage)
}

fn edge_lines(g: &SimGraph, r: &mut String) {
    let _ = writeln!(r, "edges={}", g.edges.len());
    for (a, b) in g.edge_names() {
        let e = g.edge(&a, &b).expect("listed edge");
        let (slope, points) = e.growth_exponent();
        let slope = slope.map_or("n/a".to_string(), |s| format!("{s:.3}"));
        let _ = writeln!(
            r,
            "edge {a}->{b} entries={} max_delay_ratio={:.1} slope={slope} points={points} ordered={} self_loop={} composed={}",
            e.witness.entries.len(),
            e.max_delay_ratio(),
            e.time_ordered(),
            e.self_loop,
            e.composed
        );
    }
}

fn graph_cmd(c: &GraphCmd, fuel: u64) -> CmdResult {
    match c {
        GraphCmd::Build { nodes, grid: ga, dir } => {
            let mut ns = Vec::new();
            for spec in nodes {
                let (name, path) = spec
                    .split_once('=')
                    .ok_or_else(|| usage(format!("expected name=path, got {spec:?}")))?;
                ns.push(Node::new(name, load_universe(Path::new(path))?));
            }
            let g = graph::build_graph(ns, &grid(&ga.dts, &ga.programs)?, fuel);
            graph::save_graph(&g, dir).map_err(usage)?;
            let mut r = format!("nodes={}\n", g.nodes.len());
            edge_lines(&g, &mut r);
            for (&(a, b), why) in &g.failures {
                let _ = writeln!(r, "no_edge {}->{} reason={why}", g.nodes[a].name, g.nodes[b].name);
            }
            pass(r)
        }
        GraphCmd::Filter { dir, ordered, cap, save } => {
            let mut g = load_graph(dir)?;
            let before = g.edges.len();
            if *ordered {
                g = graph::filter_time_ordered(&g);
            }
            if let Some(cap) = cap {
                g = graph::filter_time_bounded(&g, *cap).map_err(usage)?;
            }
            let mut r = format!("edges_before={before}\n");
            edge_lines(&g, &mut r);
            if let Some(save) = save {
                graph::save_graph(&g, save).map_err(usage)?;
            }
            pass(r)
        }
        GraphCmd::Compose { dir, a, b, c, max_inner } => {
            let g = load_graph(dir)?;
            let w = graph::compose_edges(&g, a, b, c, *max_inner, fuel).map_err(usage)?;
            let rep = check_sim_witness(&w.host, &w.target, &w);
            let r = format!("composed={a}->{c} via={b}\nentries={}\nexcluded={}\n{rep}", w.entries.len(), w.excluded.len());
            finish(r, Status::from_bool(rep.all_pass()))
        }
        GraphCmd::Closure { dir, max_inner, save } => {
            let g = load_graph(dir)?;
            let (closed, report) = graph::check_preorder(&g, *max_inner, fuel);
            let (again, _) = graph::check_preorder(&closed, *max_inner, fuel);
            let stable = again.edge_names() == closed.edge_names();
            let mut r = report.to_string();
            let _ = writeln!(r, "closure_stable={stable}");
            edge_lines(&closed, &mut r);
            if let Some(save) = save {
                graph::save_graph(&closed, save).map_err(usage)?;
            }
            finish(r, Status::from_bool(report.failed.is_empty() && stable))
        }
        GraphCmd::Verify { dir } => {
            let g = load_graph(dir)?;
            let results = graph::reverify(&g);
            let mut r = String::new();
            for (label, ok) in &results {
                let _ = writeln!(r, "edge {label} verified={ok}");
            }
            finish(r, Status::from_bool(results.iter().all(|(_, ok)| *ok)))
        }
        GraphCmd::Export { dir } => pass(graph::export_dot(&load_graph(dir)?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exec(args: &[&str]) -> CmdResult {
        let mut argv = vec!["simlab"];
        argv.extend(args);
        execute(&Cli::try_parse_from(argv).unwrap())
    }

    #[test]
    fn codec_pair_prints_bits() {
        assert_eq!(exec(&["codec", "pair", "1", "0"]).unwrap().report, "11010\n");
        assert_eq!(exec(&["codec", "unpair", "11010"]).unwrap().report, "first=1\nsecond=0\n");
        assert!(exec(&["codec", "unpair", "10"]).is_err());
    }

    #[test]
    fn unknown_flag_is_usage_error() {
        assert_eq!(main_with_args(["simlab", "codec", "--bogus"]), 2);
        assert_eq!(main_with_args(["simlab", "run", "NOPE"]), 2);
    }

    #[test]
    fn dt_lists() {
        assert_eq!(parse_dts("1..4").unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(parse_dts("2,8").unwrap(), vec![2, 8]);
        assert!(parse_dts("4..1").is_err());
    }

    #[test]
    fn run_reports_ticks() {
        let o = exec(&["run", "QUOTE:011", "--input", "1"]).unwrap();
        assert_eq!(o.report, "program_bits=12\ninput=1\nticks=2\noutput=011\nstatus=pass\n");
        let o = exec(&["--fuel", "50", "run", "QUOTE:01010111 DUP EVAL"]).unwrap();
        assert_eq!(o.status, Status::OutOfFuel);
    }

    #[test]
    fn random_fix_suite_is_seeded() {
        let a = exec(&["--seed", "3", "fix", "--random", "20"]).unwrap();
        assert_eq!(a.status, Status::Pass);
        assert_eq!(a, exec(&["--seed", "3", "fix", "--random", "20"]).unwrap());
    }
}
