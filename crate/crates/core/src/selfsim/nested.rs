//! Greedy nested self-simulation.
//!
//! The machine never halts. Each round it writes down the full state the
//! universe had when the previous round ended, so at the `i`-th emission
//! tick `t_i` the bottom of its data stack holds the universe state at
//! `t_{i-1}` (with `t_0 = 1`, the tick after coupling).
//!
//! Every round is straight-line code with balanced branches, so its length
//! in ticks does not depend on the data. That makes the emission schedule
//! `t_1, t_1 + D, t_1 + 2D, …` a property of the program alone: a dry run
//! measures `t_1` and `D`, and the environment tables for those horizons are
//! then baked into the real program.

use std::fmt;

use crate::asm::Asm;
use crate::codec::BitString;
use crate::meta::fix;
use crate::qvm::{Instr, MachineId, Program};
use crate::universe::{self, init_state, lookup, table_tree, Coupling, UniverseSpec};

use super::{gcd, SelfSimError};

/// Rounds after which a trace stops by default. Each snapshot embeds the
/// previous one, so sizes double per round.
pub const DEFAULT_MAX_ROUNDS: usize = 8;

/// Width above which the baked tables get unreasonably large.
pub const MAX_NESTED_WIDTH: usize = 8;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NestedProgram {
    pub program: Program,
    /// Code of the per-round loop body, as it sits on the data stack.
    pub round: BitString,
    /// First emission tick.
    pub first_emission: u64,
    /// Ticks between consecutive emissions.
    pub period: u64,
}

fn transformer(u: &UniverseSpec, first: &[BitString], round: &BitString) -> Program {
    let w = u.w_width();
    let mut a = Asm::new(&["in"]);
    a.unpair("in", "e", "w0");
    // the state at tick 1: ⟨ω(w0), enc(Running [e] [w0])⟩
    a.copy("w0", "w1");
    lookup(&mut a, "w1", &table_tree(w, u.omega_table()), w);
    a.quote_str("nil", "");
    a.pair("e", "nil", "F");
    a.copy("w0", "x");
    a.quote_str("nil", "");
    a.pair("x", "nil", "D");
    a.pair("F", "D", "body");
    a.quote_str("tag", "0");
    a.pair("tag", "body", "en");
    a.pair("w1", "en", "S");
    lookup(&mut a, "w0", &table_tree(w, first), w);
    a.rename("w0", "wn");
    a.quote("B", round);
    a.arrange(&["S", "wn", "B"]);
    a.raw(&[Instr::Dup, Instr::Eval], 0, &[]);
    a.program()
}

fn round_body(u: &UniverseSpec, per_round: &[BitString]) -> BitString {
    let w = u.w_width();
    let mut a = Asm::new(&["S", "wn", "B"]);
    a.copy("B", "b");
    a.quote_str("nil", "");
    a.pair("b", "nil", "F");
    a.copy("S", "s");
    a.quote_str("nil", "");
    a.pair("s", "nil", "l1");
    a.copy("wn", "x");
    a.pair("x", "l1", "l2");
    a.copy("B", "b");
    a.pair("b", "l2", "D");
    a.pair("F", "D", "body");
    a.quote_str("tag", "0");
    a.pair("tag", "body", "en");
    a.copy("wn", "x");
    a.pair("x", "en", "S2");
    lookup(&mut a, "wn", &table_tree(w, per_round), w);
    a.drop_slot("S");
    a.rename("S2", "S");
    a.arrange(&["S", "wn", "B"]);
    a.raw(&[Instr::Dup, Instr::Eval], 0, &[]);
    a.code()
}

/// The snapshot if `id` is at an emission point of the loop `round`.
fn emission<'a>(id: &'a MachineId, round: &BitString) -> Option<&'a BitString> {
    match id {
        MachineId::Running { frames, data }
            if frames.len() == 1 && &frames[0] == round && data.len() == 3 && &data[2] == round =>
        {
            Some(&data[0])
        }
        _ => None,
    }
}

/// Ticks of the first two emissions, by running the universe.
fn schedule(u: &UniverseSpec, p: &Program, round: &BitString, max_ticks: u64) -> Option<(u64, u64)> {
    let w0: BitString = std::iter::repeat_n(false, u.w_width()).collect();
    let mut s = init_state(u, &w0, p).ok()?;
    let mut seen = Vec::new();
    let mut emitting = false;
    while s.t < max_ticks && seen.len() < 2 {
        s.tick(u);
        let now = emission(&s.id, round).is_some();
        if now && !emitting {
            seen.push(s.t);
        }
        emitting = now;
    }
    (seen.len() == 2).then(|| (seen[0], seen[1] - seen[0]))
}

pub fn nested_program(u: &UniverseSpec) -> Result<NestedProgram, SelfSimError> {
    if u.coupling() != Coupling::CopyAtTick1 {
        return Err(SelfSimError::NotShielded);
    }
    if u.w_width() > MAX_NESTED_WIDTH {
        return Err(SelfSimError::TooWide(u.w_width()));
    }
    let identity: Vec<BitString> = u.environment_values().collect();
    let dry_round = round_body(u, &identity);
    let dry = fix(&transformer(u, &identity, &dry_round));
    let budget = 1_000_000;
    let (first, period) = schedule(u, &dry, &dry_round, budget).ok_or(SelfSimError::OutOfFuel { fuel: budget })?;
    let pow = |k: u64| -> Vec<BitString> { identity.iter().map(|w| u.omega_pow(w, k)).collect() };
    let round = round_body(u, &pow(period));
    let program = fix(&transformer(u, &pow(first), &round));
    Ok(NestedProgram {
        program,
        round,
        first_emission: first,
        period,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    RoundCap,
    OutOfFuel,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NestedTrace {
    pub w0: BitString,
    /// Emission ticks `t_1 < t_2 < …`.
    pub times: Vec<u64>,
    /// The snapshot emitted at each tick.
    pub snapshots: Vec<BitString>,
    /// Whether snapshot `i` equals the oracle state at `t_{i-1}`.
    pub matches: Vec<bool>,
    /// `i / t_i` as reduced fractions.
    pub density_estimates: Vec<(u64, u64)>,
    pub stop: StopReason,
}

impl NestedTrace {
    pub fn rounds(&self) -> usize {
        self.times.len()
    }

    pub fn all_match(&self) -> bool {
        self.matches.iter().all(|&m| m)
    }

    pub fn strictly_increasing(&self) -> bool {
        self.times.windows(2).all(|p| p[0] < p[1])
    }

    pub fn all_below_one(&self) -> bool {
        self.density_estimates.iter().all(|&(p, q)| p < q)
    }
}

impl fmt::Display for NestedTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "w0={}", self.w0)?;
        writeln!(f, "rounds={}", self.rounds())?;
        writeln!(f, "stop={}", match self.stop {
            StopReason::RoundCap => "round-cap",
            StopReason::OutOfFuel => "out-of-fuel",
        })?;
        writeln!(f, "strictly_increasing={}", self.strictly_increasing())?;
        writeln!(f, "all_match={}", self.all_match())?;
        writeln!(f, "# i t_i density snapshot_bits match")?;
        for i in 0..self.rounds() {
            let (p, q) = self.density_estimates[i];
            writeln!(
                f,
                "{} {} {}/{} {} {}",
                i + 1,
                self.times[i],
                p,
                q,
                self.snapshots[i].len(),
                self.matches[i]
            )?;
        }
        Ok(())
    }
}

/// Runs the universe on the nested program from `w0` until `max_rounds`
/// emissions or `max_ticks` ticks, and checks every snapshot against an
/// independently stepped trajectory.
pub fn nested_self_sim(
    u: &UniverseSpec,
    w0: &BitString,
    max_ticks: u64,
    max_rounds: usize,
) -> Result<NestedTrace, SelfSimError> {
    let np = nested_program(u)?;
    trace_program(u, &np, w0, max_ticks, max_rounds)
}

pub fn trace_program(
    u: &UniverseSpec,
    np: &NestedProgram,
    w0: &BitString,
    max_ticks: u64,
    max_rounds: usize,
) -> Result<NestedTrace, SelfSimError> {
    let mut s = init_state(u, w0, &np.program)?;
    let mut times = Vec::new();
    let mut snapshots = Vec::new();
    // a slow clock leaves the machine parked on an emission for several
    // ticks; only the first one counts
    let mut emitting = false;
    while times.len() < max_rounds && s.t < max_ticks {
        s.tick(u);
        let snap = emission(&s.id, &np.round);
        if let (Some(snap), false) = (snap, emitting) {
            times.push(s.t);
            snapshots.push(snap.clone());
        }
        emitting = snap.is_some();
    }
    let stop = if times.len() == max_rounds {
        StopReason::RoundCap
    } else {
        StopReason::OutOfFuel
    };
    let mut probe_times = vec![1];
    probe_times.extend(times.iter().take(times.len().saturating_sub(1)));
    let oracle = universe::trajectory(u, &probe_times, w0, &np.program)?;
    let matches = snapshots.iter().zip(&oracle).map(|(a, b)| a == b).collect();
    let density_estimates = times
        .iter()
        .enumerate()
        .map(|(i, &t)| reduce(i as u64 + 1, t))
        .collect();
    Ok(NestedTrace {
        w0: w0.clone(),
        times,
        snapshots,
        matches,
        density_estimates,
        stop,
    })
}

fn reduce(p: u64, q: u64) -> (u64, u64) {
    let g = gcd(p, q).max(1);
    (p / g, q / g)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityEstimate {
    /// `n / t_n` for the last round, reduced.
    pub estimate: (u64, u64),
    /// Successive differences of `i / t_i`.
    pub differences: Vec<f64>,
    /// Whether the differences shrink in magnitude.
    pub settling: bool,
}

impl DensityEstimate {
    pub fn value(&self) -> f64 {
        self.estimate.0 as f64 / self.estimate.1 as f64
    }
}

impl fmt::Display for DensityEstimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "density={}/{}", self.estimate.0, self.estimate.1)?;
        writeln!(f, "density_value={:.6}", self.value())?;
        let diffs: Vec<String> = self.differences.iter().map(|d| format!("{d:.6e}")).collect();
        writeln!(f, "differences={}", diffs.join(","))?;
        writeln!(f, "settling={}", self.settling)
    }
}

/// Finite-sample estimate of `lim i / t_i`. Makes no claim about the limit.
pub fn density_estimate(times: &[u64]) -> Result<DensityEstimate, SelfSimError> {
    if times.len() < 3 {
        return Err(SelfSimError::TooFewRounds(times.len()));
    }
    let values: Vec<f64> = times
        .iter()
        .enumerate()
        .map(|(i, &t)| (i + 1) as f64 / t as f64)
        .collect();
    let differences: Vec<f64> = values.windows(2).map(|p| p[1] - p[0]).collect();
    let settling = differences.windows(2).all(|p| p[1].abs() <= p[0].abs());
    Ok(DensityEstimate {
        estimate: reduce(times.len() as u64, *times.last().unwrap()),
        differences,
        settling,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::bits;

    #[test]
    fn arithmetic_schedule_gives_reciprocal() {
        let est = density_estimate(&[7, 14, 21, 28]).unwrap();
        assert_eq!(est.estimate, (1, 7));
        assert!(est.differences.iter().all(|d| d.abs() < 1e-12));
    }

    #[test]
    fn two_rounds_are_too_few() {
        assert_eq!(density_estimate(&[3, 9]), Err(SelfSimError::TooFewRounds(2)));
    }

    #[test]
    fn flip_trace_matches_oracle() {
        let u = UniverseSpec::flip();
        for w0 in ["0", "1"] {
            let tr = nested_self_sim(&u, &bits(w0), 1_000_000, 5).unwrap();
            assert_eq!(tr.rounds(), 5);
            assert!(tr.strictly_increasing());
            assert!(tr.all_match(), "{tr}");
            assert!(tr.all_below_one());
        }
    }

    #[test]
    fn slow_clock_counts_each_emission_once() {
        let u = UniverseSpec::flip().with_clock(3);
        let tr = nested_self_sim(&u, &bits("1"), 1_000_000, 4).unwrap();
        assert!(tr.all_match(), "{tr}");
        let gaps: Vec<u64> = tr.times.windows(2).map(|p| p[1] - p[0]).collect();
        assert!(gaps.iter().all(|&g| g == gaps[0] && g > 1));
    }

    #[test]
    fn every_tick_coupling_rejected() {
        let u = UniverseSpec::flip().with_coupling(Coupling::CopyEveryTick);
        assert_eq!(nested_program(&u).err(), Some(SelfSimError::NotShielded));
    }
}
