//! Universes that simulate themselves.
//!
//! For a fixed horizon `dt`, [`self_sim_program`] yields a program `n*` such
//! that a universe whose machine starts as `n*` halts holding the encoded
//! full state of that same universe at tick `dt`, including the machine's own
//! configuration at that tick. The construction specializes the evolution
//! program to `dt` and takes its fixed point.

use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::codec::{nat_to_bits, BitString};
use crate::meta::{fix, smn};
use crate::qvm::Program;
use crate::universe::{self, build_evolution, init_state, UniverseError, UniverseSpec};

mod nested;

pub use nested::{
    density_estimate, nested_program, nested_self_sim, trace_program, DensityEstimate, NestedProgram, NestedTrace,
    StopReason, DEFAULT_MAX_ROUNDS, MAX_NESTED_WIDTH,
};

pub const DEFAULT_FUEL: u64 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SelfSimError {
    #[error("horizon must be at least one tick")]
    ZeroHorizon,
    #[error("machine did not halt within {fuel} ticks")]
    OutOfFuel { fuel: u64 },
    #[error("output differs from the oracle state\n  output={output}\n  oracle={oracle}")]
    ExactnessViolation { output: BitString, oracle: BitString },
    #[error("need at least 3 rounds, got {0}")]
    TooFewRounds(usize),
    #[error("coupling reaches the machine after the first tick")]
    NotShielded,
    #[error("w_width {0} is too large for an exhaustive sweep")]
    TooWide(usize),
    #[error(transparent)]
    Universe(#[from] UniverseError),
}

/// Evolution program taking `⟨dt, ⟨e, w⟩⟩`: it starts the machine as a fresh
/// run of `e`.
pub fn self_evolution_program(u: &UniverseSpec) -> Program {
    build_evolution(u, |a| {
        a.unpair("in", "dt", "r");
        a.unpair("r", "e", "w");
        a.copy("w", "feed");
        // enc(fresh(e)) = ⟨0, ⟨[e], []⟩⟩
        a.quote_str("nil", "");
        a.pair("e", "nil", "F");
        a.quote_str("D", "");
        a.pair("F", "D", "body");
        a.quote_str("tag", "0");
        a.pair("tag", "body", "n");
    })
}

/// `q_dt`: the evolution program with the horizon hard-coded.
pub fn self_sim_transformer(u: &UniverseSpec, dt: u64) -> Program {
    smn(&self_evolution_program(u), &nat_to_bits(dt))
}

/// `n*`, the fixed point of [`self_sim_transformer`].
pub fn self_sim_program(u: &UniverseSpec, dt: u64) -> Program {
    fix(&self_sim_transformer(u, dt))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SelfSimReport {
    pub dt: u64,
    pub w0: BitString,
    pub n_star: Program,
    /// Tick at which the universe's machine halted.
    pub tau: u64,
    pub exact: bool,
    pub output: BitString,
    pub oracle: BitString,
}

impl SelfSimReport {
    /// `tau / dt` as a reduced fraction.
    pub fn delay_ratio(&self) -> (u64, u64) {
        let g = gcd(self.tau, self.dt.max(1));
        (self.tau / g, self.dt.max(1) / g)
    }

    pub fn check(&self) -> Result<(), SelfSimError> {
        if self.exact {
            Ok(())
        } else {
            Err(SelfSimError::ExactnessViolation {
                output: self.output.clone(),
                oracle: self.oracle.clone(),
            })
        }
    }
}

impl fmt::Display for SelfSimReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (p, q) = self.delay_ratio();
        writeln!(f, "dt={}", self.dt)?;
        writeln!(f, "w0={}", self.w0)?;
        writeln!(f, "n_star_bits={}", self.n_star.len_bits())?;
        writeln!(f, "tau={}", self.tau)?;
        writeln!(f, "delay_ratio={p}/{q}")?;
        writeln!(f, "tau_gt_dt={}", self.tau > self.dt)?;
        writeln!(f, "exact={}", self.exact)?;
        writeln!(f, "output_bits={}", self.output.len())
    }
}

pub(crate) fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Runs the universe from `w0` with `n_star` and compares its output with the
/// oracle state at `dt`.
pub fn verify_with_program(
    u: &UniverseSpec,
    dt: u64,
    n_star: &Program,
    w0: &BitString,
    fuel: u64,
) -> Result<SelfSimReport, SelfSimError> {
    if dt == 0 {
        return Err(SelfSimError::ZeroHorizon);
    }
    let mut s = init_state(u, w0, n_star)?;
    let tau = s
        .run_until_halt(u, fuel)
        .ok_or(SelfSimError::OutOfFuel { fuel })?;
    let output = s.id.output().cloned().unwrap_or_default();
    let (w, n) = universe::evolve(u, dt, w0, n_star)?;
    let oracle = crate::codec::encode_pair(&w, &n);
    Ok(SelfSimReport {
        dt,
        w0: w0.clone(),
        n_star: n_star.clone(),
        tau,
        exact: output == oracle,
        output,
        oracle,
    })
}

pub fn verify_self_sim(
    u: &UniverseSpec,
    dt: u64,
    w0: &BitString,
    fuel: u64,
) -> Result<SelfSimReport, SelfSimError> {
    verify_with_program(u, dt, &self_sim_program(u, dt), w0, fuel)
}

/// One `n*` checked against every initial environment.
pub fn verify_free(u: &UniverseSpec, dt: u64, fuel: u64) -> Result<Vec<SelfSimReport>, SelfSimError> {
    if u.w_width() > MAX_SWEEP_WIDTH {
        return Err(SelfSimError::TooWide(u.w_width()));
    }
    let n_star = self_sim_program(u, dt);
    let envs: Vec<BitString> = u.environment_values().collect();
    envs.par_iter()
        .map(|w0| verify_with_program(u, dt, &n_star, w0, fuel))
        .collect()
}

pub const MAX_SWEEP_WIDTH: usize = 8;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SweepRow {
    pub dt: u64,
    pub runs: usize,
    pub min_tau: u64,
    pub max_tau: u64,
    pub all_exact: bool,
    /// Runs with `tau ≤ dt`.
    pub violations: usize,
    /// Runs that ran out of fuel.
    pub out_of_fuel: usize,
}

impl SweepRow {
    pub fn delay_ratio(&self) -> f64 {
        self.max_tau as f64 / self.dt as f64
    }
}

/// For each horizon: `max over w0` of the halting tick, over all initial
/// environments, with exactness and the `tau > dt` law checked per run.
pub fn min_delay_sweep(u: &UniverseSpec, dts: &[u64], fuel: u64) -> Result<Vec<SweepRow>, SelfSimError> {
    if u.w_width() > MAX_SWEEP_WIDTH {
        return Err(SelfSimError::TooWide(u.w_width()));
    }
    if dts.contains(&0) {
        return Err(SelfSimError::ZeroHorizon);
    }
    let envs: Vec<BitString> = u.environment_values().collect();
    let programs: Vec<(u64, Program)> = dts
        .par_iter()
        .map(|&dt| (dt, self_sim_program(u, dt)))
        .collect();
    let jobs: Vec<(u64, &Program, &BitString)> = programs
        .iter()
        .flat_map(|(dt, p)| envs.iter().map(move |w| (*dt, p, w)))
        .collect();
    let results: Vec<(u64, Result<SelfSimReport, SelfSimError>)> = jobs
        .par_iter()
        .map(|&(dt, p, w)| (dt, verify_with_program(u, dt, p, w, fuel)))
        .collect();
    let mut rows = Vec::new();
    for &dt in dts {
        let mut row = SweepRow {
            dt,
            runs: 0,
            min_tau: u64::MAX,
            max_tau: 0,
            all_exact: true,
            violations: 0,
            out_of_fuel: 0,
        };
        for (_, r) in results.iter().filter(|(d, _)| *d == dt) {
            row.runs += 1;
            match r {
                Ok(rep) => {
                    row.min_tau = row.min_tau.min(rep.tau);
                    row.max_tau = row.max_tau.max(rep.tau);
                    row.all_exact &= rep.exact;
                    if rep.tau <= dt {
                        row.violations += 1;
                    }
                }
                Err(SelfSimError::OutOfFuel { .. }) => {
                    row.out_of_fuel += 1;
                    row.all_exact = false;
                }
                Err(e) => return Err(e.clone()),
            }
        }
        rows.push(row);
    }
    Ok(rows)
}
