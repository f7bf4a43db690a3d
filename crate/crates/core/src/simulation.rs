//! Simulation witnesses between universes.
//!
//! A witness says: start the host from environment `host_w` with machine
//! program `host_n`, and after `tau` ticks its machine has halted holding the
//! target's encoded state `⟨w_dt, enc(id_dt)⟩`, and keeps holding it. Every
//! claim is made over an explicit finite domain of target triples
//! `(dt, w0, p)` and is checked by stepping both universes directly.
//!
//! Witnesses are built the pristine way: the host machine runs the target's
//! evolution program, and the input it needs is delivered by the host's
//! first-tick coupling push as one block. The host environment starts at the
//! first `w_width` bits of that block.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::codec::{self, encode_tuple, nat_to_bits, BitString};
use crate::qvm::{run, MachineId, Program};
use crate::universe::{
    self, evolution_program, init_fed, trajectory_program, UniverseError, UniverseSpec, UniverseState,
};

/// Extra ticks over which a halted host must keep its output.
pub const PERSISTENCE_TICKS: u64 = 10;

/// Most times a trajectory witness may cover.
pub const MAX_TRAJECTORY_LEN: usize = 8;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimulationError {
    #[error("witness domain is empty")]
    DomainEmpty,
    #[error("no two triples share a program but differ in environment")]
    InsufficientDomain,
    #[error("witnesses do not chain: {0}")]
    DomainMismatch(String),
    #[error("trajectory times must be strictly increasing and at most {MAX_TRAJECTORY_LEN}: {0}")]
    BadSchedule(String),
    #[error("did not halt within {fuel} ticks")]
    FuelExhausted { fuel: u64 },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Universe(#[from] UniverseError),
}

/// One target configuration `(dt, w0, p)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub dt: u64,
    pub w0: BitString,
    pub program: Program,
}

impl Triple {
    pub fn new(dt: u64, w0: BitString, program: Program) -> Triple {
        Triple { dt, w0, program }
    }

    /// `⟨w_dt, enc(id_dt)⟩` by direct stepping.
    pub fn oracle(&self, target: &UniverseSpec) -> Result<BitString, UniverseError> {
        let (w, n) = universe::evolve(target, self.dt, &self.w0, &self.program)?;
        Ok(codec::encode_pair(&w, &n))
    }
}

/// Every `(dt, w0, p)` with `dt` from `dts`, every environment of `target`
/// and `p` from `programs`.
pub fn probe_domain(target: &UniverseSpec, dts: &[u64], programs: &[Program]) -> Vec<Triple> {
    let mut out = Vec::new();
    for &dt in dts {
        for w0 in target.environment_values() {
            for p in programs {
                out.push(Triple::new(dt, w0.clone(), p.clone()));
            }
        }
    }
    out
}

/// How the host is started.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HostInit {
    pub w: BitString,
    /// Block pushed at the first tick in place of `w`.
    pub feed: Option<BitString>,
    pub program: Program,
}

impl HostInit {
    /// Host start delivering `y` to `program`.
    pub fn fed(host: &UniverseSpec, y: &BitString, program: &Program) -> HostInit {
        HostInit {
            w: host_environment(host, y),
            feed: Some(y.clone()),
            program: program.clone(),
        }
    }

    pub fn state(&self, host: &UniverseSpec) -> Result<UniverseState, UniverseError> {
        match &self.feed {
            Some(y) => init_fed(host, &self.w, y, &self.program),
            None => universe::init_state(host, &self.w, &self.program),
        }
    }

    /// The host's `(tick, output)` at halting, within `fuel` ticks.
    pub fn run(&self, host: &UniverseSpec, fuel: u64) -> Result<(u64, BitString), SimulationError> {
        let mut s = self.state(host)?;
        let tau = s.run_until_halt(host, fuel).ok_or(SimulationError::FuelExhausted { fuel })?;
        Ok((tau, s.id.output().cloned().unwrap_or_default()))
    }
}

/// The first `w_width` bits of `y`, zero padded.
pub fn host_environment(host: &UniverseSpec, y: &BitString) -> BitString {
    (0..host.w_width()).map(|i| i < y.len() && y.get(i)).collect()
}

/// Input block for the evolution program: `⟨dt, w0, enc(fresh(p))⟩`.
pub fn evolution_input(t: &Triple) -> BitString {
    let n = MachineId::fresh(&t.program).encode();
    encode_tuple([&nat_to_bits(t.dt), &t.w0, &n]).expect("non-empty tuple")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RpctEntry {
    pub k: Program,
    pub y: BitString,
    pub t_hat: u64,
    pub w_hat: BitString,
    /// Always `k` itself.
    pub n_hat: Program,
    pub output: BitString,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct RpctWitness {
    pub entries: Vec<RpctEntry>,
    /// Pairs left out, with the reason.
    pub dropped: Vec<(usize, String)>,
}

/// Runs each program directly in the universe, input delivered by the
/// coupling push, and keeps the pairs whose universe output equals the bare
/// machine's output.
pub fn rpct_witnesses(u: &UniverseSpec, pairs: &[(Program, BitString)], fuel: u64) -> RpctWitness {
    let results: Vec<Result<RpctEntry, String>> = pairs
        .par_iter()
        .map(|(k, y)| {
            let direct = run(k, y, fuel).map_err(|e| e.to_string())?;
            let init = HostInit::fed(u, y, k);
            let (t_hat, output) = init.run(u, fuel).map_err(|e| e.to_string())?;
            if output != direct.output {
                return Err(format!("universe output {output} differs from {}", direct.output));
            }
            Ok(RpctEntry {
                k: k.clone(),
                y: y.clone(),
                t_hat,
                w_hat: init.w,
                n_hat: k.clone(),
                output,
            })
        })
        .collect();
    let mut w = RpctWitness::default();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(e) => w.entries.push(e),
            Err(reason) => w.dropped.push((i, reason)),
        }
    }
    w
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WitnessEntry {
    pub triple: Triple,
    pub tau: u64,
    pub init: HostInit,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimulationWitness {
    pub host: UniverseSpec,
    pub target: UniverseSpec,
    pub entries: Vec<WitnessEntry>,
    /// Requested triples that could not be witnessed, with the reason.
    pub excluded: Vec<(Triple, String)>,
}

impl SimulationWitness {
    pub fn domain(&self) -> Vec<&Triple> {
        self.entries.iter().map(|e| &e.triple).collect()
    }

    pub fn max_delay_ratio(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.tau as f64 / e.triple.dt.max(1) as f64)
            .fold(0.0, f64::max)
    }

    /// Whether some triple has `tau < dt`.
    pub fn runs_ahead(&self) -> bool {
        self.entries.iter().any(|e| e.tau < e.triple.dt)
    }
}

/// Witness for `host` simulating `target` on `domain`.
pub fn build_sim_witness(
    host: &UniverseSpec,
    target: &UniverseSpec,
    domain: &[Triple],
    fuel: u64,
) -> Result<SimulationWitness, SimulationError> {
    for t in domain {
        target.check_width(&t.w0)?;
    }
    let g = evolution_program(target);
    let inits: Vec<HostInit> = domain
        .iter()
        .map(|t| HostInit::fed(host, &evolution_input(t), &g))
        .collect();
    witness_from_inits(host, target, domain, inits, fuel)
}

/// Measures `tau` for each prepared host start and keeps the triples whose
/// output matches the target oracle.
pub(crate) fn witness_from_inits(
    host: &UniverseSpec,
    target: &UniverseSpec,
    domain: &[Triple],
    inits: Vec<HostInit>,
    fuel: u64,
) -> Result<SimulationWitness, SimulationError> {
    let results: Vec<Result<Result<WitnessEntry, String>, SimulationError>> = domain
        .par_iter()
        .zip(inits)
        .map(|(t, init)| {
            let expect = t.oracle(target)?;
            Ok(match init.run(host, fuel) {
                Ok((tau, out)) if out == expect => Ok(WitnessEntry {
                    triple: t.clone(),
                    tau,
                    init,
                }),
                Ok(_) => Err("host output differs from the target oracle".to_string()),
                Err(e) => Err(e.to_string()),
            })
        })
        .collect();
    let mut w = SimulationWitness {
        host: host.clone(),
        target: target.clone(),
        entries: Vec::new(),
        excluded: Vec::new(),
    };
    for (t, r) in domain.iter().zip(results) {
        match r? {
            Ok(e) => w.entries.push(e),
            Err(reason) => w.excluded.push((t.clone(), reason)),
        }
    }
    Ok(w)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    NotHalted,
    WrongOutput,
    NotPersistent,
}

impl fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckStatus::Pass => "pass",
            CheckStatus::NotHalted => "not-halted",
            CheckStatus::WrongOutput => "wrong-output",
            CheckStatus::NotPersistent => "not-persistent",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerificationReport {
    pub rows: Vec<(Triple, u64, CheckStatus)>,
    /// Problems with the witness as a whole.
    pub errors: Vec<String>,
}

impl VerificationReport {
    pub fn all_pass(&self) -> bool {
        self.errors.is_empty() && self.rows.iter().all(|r| r.2 == CheckStatus::Pass)
    }

    pub fn passed(&self) -> usize {
        self.rows.iter().filter(|r| r.2 == CheckStatus::Pass).count()
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "triples={}", self.rows.len())?;
        writeln!(f, "passed={}", self.passed())?;
        writeln!(f, "all_pass={}", self.all_pass())?;
        for e in &self.errors {
            writeln!(f, "error={e}")?;
        }
        for (t, tau, status) in &self.rows {
            writeln!(
                f,
                "row dt={} w0={} program_bits={} tau={} status={}",
                t.dt,
                t.w0,
                t.program.len_bits(),
                tau,
                status
            )?;
        }
        Ok(())
    }
}

/// Replays every entry: the host must be halted with the target's state at
/// `tau` and still hold it `PERSISTENCE_TICKS` later.
pub fn check_sim_witness(host: &UniverseSpec, target: &UniverseSpec, w: &SimulationWitness) -> VerificationReport {
    let mut errors = Vec::new();
    if w.entries.is_empty() {
        errors.push(SimulationError::DomainEmpty.to_string());
    }
    if &w.host != host || &w.target != target {
        errors.push(SimulationError::DomainMismatch("witness is for other universes".into()).to_string());
    }
    let rows = w
        .entries
        .par_iter()
        .map(|e| (e.triple.clone(), e.tau, check_entry(host, target, e)))
        .collect();
    VerificationReport { rows, errors }
}

fn check_entry(host: &UniverseSpec, target: &UniverseSpec, e: &WitnessEntry) -> CheckStatus {
    let (Ok(expect), Ok(mut s)) = (e.triple.oracle(target), e.init.state(host)) else {
        return CheckStatus::WrongOutput;
    };
    s.advance(host, e.tau);
    match s.id.output() {
        None => return CheckStatus::NotHalted,
        Some(o) if o != &expect => return CheckStatus::WrongOutput,
        _ => {}
    }
    s.advance(host, PERSISTENCE_TICKS);
    if s.id.output() == Some(&expect) {
        CheckStatus::Pass
    } else {
        CheckStatus::NotPersistent
    }
}

/// Whether the host program depends only on the target program, never on the
/// target's initial environment.
pub fn check_free(w: &SimulationWitness) -> Result<bool, SimulationError> {
    let mut slices: BTreeMap<&Program, Vec<&WitnessEntry>> = BTreeMap::new();
    for e in &w.entries {
        slices.entry(&e.triple.program).or_default().push(e);
    }
    let informative = slices
        .values()
        .any(|s| s.iter().any(|e| e.triple.w0 != s[0].triple.w0));
    if !informative {
        return Err(SimulationError::InsufficientDomain);
    }
    Ok(slices
        .values()
        .all(|s| s.iter().all(|e| e.init.program == s[0].init.program)))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrajectoryWitness {
    pub dts: Vec<u64>,
    pub w0: BitString,
    pub program: Program,
    pub tau: u64,
    pub init: HostInit,
    pub output: BitString,
}

impl TrajectoryWitness {
    /// The target states the host output holds, in order.
    pub fn states(&self) -> Result<Vec<BitString>, SimulationError> {
        codec::decode_tuple(&self.output).map_err(|e| SimulationError::Parse {
            line: 0,
            message: e.to_string(),
        })
    }

    /// Re-derives every state by direct stepping and compares.
    pub fn check(&self, target: &UniverseSpec) -> Result<bool, SimulationError> {
        let oracle = universe::trajectory(target, &self.dts, &self.w0, &self.program)?;
        Ok(self.states()? == oracle)
    }
}

/// Host output is the tuple of the target's states at each time in `dts`.
pub fn build_trajectory_witness(
    host: &UniverseSpec,
    target: &UniverseSpec,
    dts: &[u64],
    w0: &BitString,
    p: &Program,
    fuel: u64,
) -> Result<TrajectoryWitness, SimulationError> {
    if dts.is_empty() || dts.len() > MAX_TRAJECTORY_LEN || dts.windows(2).any(|d| d[0] >= d[1]) {
        return Err(SimulationError::BadSchedule(format!("{dts:?}")));
    }
    target.check_width(w0)?;
    let times: Vec<BitString> = dts.iter().map(|&d| nat_to_bits(d)).collect();
    let times = encode_tuple(&times).expect("non-empty");
    let n = MachineId::fresh(p).encode();
    let y = encode_tuple([&times, w0, &n]).expect("non-empty");
    let init = HostInit::fed(host, &y, &trajectory_program(target));
    let (tau, output) = init.run(host, fuel)?;
    Ok(TrajectoryWitness {
        dts: dts.to_vec(),
        w0: w0.clone(),
        program: p.clone(),
        tau,
        init,
        output,
    })
}

/// Line-oriented text form of a witness. Host programs are listed once and
/// referenced by index.
pub fn write_witness(w: &SimulationWitness) -> String {
    let mut programs: Vec<&Program> = Vec::new();
    let mut body = String::new();
    for (i, e) in w.entries.iter().enumerate() {
        let k = match programs.iter().position(|q| **q == e.init.program) {
            Some(k) => k,
            None => {
                programs.push(&e.init.program);
                programs.len() - 1
            }
        };
        body.push_str(&format!("entry.{i}.dt={}\n", e.triple.dt));
        body.push_str(&format!("entry.{i}.w0={}\n", e.triple.w0));
        body.push_str(&format!("entry.{i}.program={}\n", e.triple.program.code()));
        body.push_str(&format!("entry.{i}.tau={}\n", e.tau));
        body.push_str(&format!("entry.{i}.host_w={}\n", e.init.w));
        if let Some(y) = &e.init.feed {
            body.push_str(&format!("entry.{i}.host_feed={y}\n"));
        }
        body.push_str(&format!("entry.{i}.host_n={k}\n"));
    }
    let mut out = String::new();
    let spec_line = |tag: &str, u: &UniverseSpec| -> String {
        u.to_string()
            .lines()
            .map(|l| format!("{tag}.{l}\n"))
            .collect()
    };
    out.push_str(&spec_line("host", &w.host));
    out.push_str(&spec_line("target", &w.target));
    out.push_str(&format!("programs={}\n", programs.len()));
    for (i, p) in programs.iter().enumerate() {
        out.push_str(&format!("program.{i}={}\n", p.code()));
    }
    out.push_str(&format!("entries={}\n", w.entries.len()));
    out.push_str(&body);
    out
}

pub fn read_witness(text: &str) -> Result<SimulationWitness, SimulationError> {
    let mut kv: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
    let mut host = String::new();
    let mut target = String::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or(SimulationError::Parse {
            line: i + 1,
            message: "expected key=value".into(),
        })?;
        if let Some(rest) = k.strip_prefix("host.") {
            host.push_str(&format!("{rest}={v}\n"));
        } else if let Some(rest) = k.strip_prefix("target.") {
            target.push_str(&format!("{rest}={v}\n"));
        } else {
            kv.insert(k, (i + 1, v));
        }
    }
    let get = |k: &str| -> Result<(usize, &str), SimulationError> {
        kv.get(k).copied().ok_or(SimulationError::Parse {
            line: 0,
            message: format!("missing {k}"),
        })
    };
    fn parse<T: std::str::FromStr>((line, v): (usize, &str)) -> Result<T, SimulationError>
    where
        T::Err: fmt::Display,
    {
        v.parse().map_err(|e: T::Err| SimulationError::Parse {
            line,
            message: e.to_string(),
        })
    }
    let programs: usize = parse(get("programs")?)?;
    let programs: Vec<Program> = (0..programs)
        .map(|i| parse::<BitString>(get(&format!("program.{i}"))?).and_then(|c| to_program(c, i)))
        .collect::<Result<_, _>>()?;
    let n: usize = parse(get("entries")?)?;
    let mut entries = Vec::with_capacity(n);
    for i in 0..n {
        let f = |name: &str| get(&format!("entry.{i}.{name}"));
        let code: BitString = parse(f("program")?)?;
        let k: usize = parse(f("host_n")?)?;
        let program = programs.get(k).cloned().ok_or(SimulationError::Parse {
            line: f("host_n")?.0,
            message: format!("no program {k}"),
        })?;
        let feed = match kv.get(format!("entry.{i}.host_feed").as_str()) {
            Some(&v) => Some(parse::<BitString>(v)?),
            None => None,
        };
        entries.push(WitnessEntry {
            triple: Triple::new(parse(f("dt")?)?, parse(f("w0")?)?, to_program(code, i)?),
            tau: parse(f("tau")?)?,
            init: HostInit {
                w: parse(f("host_w")?)?,
                feed,
                program,
            },
        });
    }
    Ok(SimulationWitness {
        host: host.parse()?,
        target: target.parse()?,
        entries,
        excluded: Vec::new(),
    })
}

fn to_program(code: BitString, i: usize) -> Result<Program, SimulationError> {
    Program::new(code).map_err(|e| SimulationError::Parse {
        line: 0,
        message: format!("program {i}: {e}"),
    })
}
