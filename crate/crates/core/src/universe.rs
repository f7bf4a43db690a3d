//! Toy universes: a finite environment `W` coupled to one machine.
//!
//! Every tick the environment advances by its lookup table `ω`. The machine
//! sees the environment exactly once: the first tick pushes the initial
//! environment value (or an explicit feed block) onto its data stack instead
//! of stepping it. After that it steps once every `clock` ticks and is
//! shielded from `W`.
//!
//! A state is encoded as `⟨w, enc(id)⟩`; the tick counter is not part of it.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::codec::{self, BitString};
use crate::qvm::{MachineId, Program, QvmError};

mod machine;

pub(crate) use machine::{build_evolution, lookup, table_tree};
pub use machine::{
    evolution_program, extract_output_suffix, fed_evolution_program, handler_table,
    trajectory_program,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum UniverseError {
    #[error("environment value has {got} bits, universe needs {expected}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("omega table needs {expected} entries of width {width}, {problem}")]
    BadTable {
        expected: usize,
        width: usize,
        problem: String,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Io(String),
    #[error("w_width {0} is too large to enumerate")]
    TooLargeToEnumerate(usize),
    #[error(transparent)]
    Program(#[from] QvmError),
}

/// How the environment reaches the machine.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Coupling {
    /// One push of the initial environment at the first tick, then nothing.
    #[default]
    CopyAtTick1,
    /// Additionally pushes the current environment before every machine
    /// step. Not shielded; exists as a counterexample.
    CopyEveryTick,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct UniverseSpec {
    w_width: usize,
    omega: Vec<BitString>,
    clock: u64,
    coupling: Coupling,
}

/// Largest environment width accepted by table-driven specs.
pub const MAX_W_WIDTH: usize = 16;

/// Largest width [`check_shielded`] will enumerate.
pub const MAX_ENUMERABLE_WIDTH: usize = 12;

impl UniverseSpec {
    pub fn new(w_width: usize, omega: Vec<BitString>) -> Result<UniverseSpec, UniverseError> {
        let expected = 1usize << w_width.min(MAX_W_WIDTH);
        let bad = |problem: String| UniverseError::BadTable {
            expected,
            width: w_width,
            problem,
        };
        if w_width > MAX_W_WIDTH {
            return Err(bad(format!("width above {MAX_W_WIDTH} unsupported")));
        }
        if omega.len() != expected {
            return Err(bad(format!("got {}", omega.len())));
        }
        if let Some((i, e)) = omega.iter().enumerate().find(|(_, e)| e.len() != w_width) {
            return Err(bad(format!("entry {i} is {e}")));
        }
        Ok(UniverseSpec {
            w_width,
            omega,
            clock: 1,
            coupling: Coupling::CopyAtTick1,
        })
    }

    /// Builds the table from a function on environment indices.
    pub fn from_fn(w_width: usize, f: impl Fn(u64) -> u64) -> Result<UniverseSpec, UniverseError> {
        let n = 1u64 << w_width.min(MAX_W_WIDTH);
        let mask = n - 1;
        let omega = (0..n)
            .map(|i| BitString::from_u64_msb(f(i) & mask, w_width))
            .collect();
        UniverseSpec::new(w_width, omega)
    }

    /// One-bit environment that flips every tick.
    pub fn flip() -> UniverseSpec {
        UniverseSpec::from_fn(1, |i| i ^ 1).expect("valid table")
    }

    /// Two-bit environment cycling 00 → 01 → 11 → 10 → 00.
    pub fn gray_cycle2() -> UniverseSpec {
        UniverseSpec::from_fn(2, |i| [1, 3, 0, 2][i as usize]).expect("valid table")
    }

    pub fn with_clock(mut self, clock: u64) -> UniverseSpec {
        assert!(clock >= 1, "clock divisor must be at least 1");
        self.clock = clock;
        self
    }

    pub fn with_coupling(mut self, coupling: Coupling) -> UniverseSpec {
        self.coupling = coupling;
        self
    }

    pub fn w_width(&self) -> usize {
        self.w_width
    }

    pub fn omega_table(&self) -> &[BitString] {
        &self.omega
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn coupling(&self) -> Coupling {
        self.coupling
    }

    pub fn environment_values(&self) -> impl Iterator<Item = BitString> + '_ {
        BitString::all_of_length(self.w_width)
    }

    pub fn omega(&self, w: &BitString) -> BitString {
        self.omega[w.to_u64_msb() as usize].clone()
    }

    /// `ω` applied `k` times.
    pub fn omega_pow(&self, w: &BitString, k: u64) -> BitString {
        let mut w = w.clone();
        // the orbit enters a cycle within 2^width steps
        let mut seen = std::collections::HashMap::new();
        let mut i = 0;
        while i < k {
            if let Some(&j) = seen.get(&w) {
                let period = i - j;
                let left = (k - i) % period;
                for _ in 0..left {
                    w = self.omega(&w);
                }
                return w;
            }
            seen.insert(w.clone(), i);
            w = self.omega(&w);
            i += 1;
        }
        w
    }

    pub fn check_width(&self, w: &BitString) -> Result<(), UniverseError> {
        if w.len() != self.w_width {
            return Err(UniverseError::WidthMismatch {
                expected: self.w_width,
                got: w.len(),
            });
        }
        Ok(())
    }

    /// Whether the machine advances on the tick that ends at `t_next`.
    pub fn steps_at(&self, t_next: u64) -> bool {
        t_next >= 2 && (t_next - 1).is_multiple_of(self.clock)
    }

    pub fn load(path: &Path) -> Result<UniverseSpec, UniverseError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| UniverseError::Io(format!("{}: {e}", path.display())))?;
        text.parse()
    }
}

impl fmt::Display for UniverseSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "w_width={}", self.w_width)?;
        let omega: Vec<String> = self.omega.iter().map(|w| w.to_text()).collect();
        writeln!(f, "omega={}", omega.join(","))?;
        if self.clock != 1 {
            writeln!(f, "clock={}", self.clock)?;
        }
        if self.coupling == Coupling::CopyEveryTick {
            writeln!(f, "coupling=every-tick")?;
        }
        Ok(())
    }
}

impl FromStr for UniverseSpec {
    type Err = UniverseError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut width = None;
        let mut omega = None;
        let mut clock = 1;
        let mut coupling = Coupling::CopyAtTick1;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let perr = |message: String| UniverseError::Parse {
                line: i + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| perr(format!("expected key=value, got {line:?}")))?;
            let value = value.trim();
            match key.trim() {
                "w_width" => {
                    width = Some(value.parse::<usize>().map_err(|e| perr(e.to_string()))?)
                }
                "omega" => {
                    let entries: Result<Vec<BitString>, _> =
                        value.split(',').map(|s| s.trim().parse::<BitString>()).collect();
                    omega = Some(entries.map_err(|e| perr(e.to_string()))?);
                }
                "clock" => {
                    clock = value.parse::<u64>().map_err(|e| perr(e.to_string()))?;
                    if clock == 0 {
                        return Err(perr("clock must be at least 1".into()));
                    }
                }
                "coupling" => {
                    coupling = match value {
                        "tick1" | "copy-at-tick1" => Coupling::CopyAtTick1,
                        "every-tick" => Coupling::CopyEveryTick,
                        other => return Err(perr(format!("unknown coupling {other:?}"))),
                    }
                }
                other => return Err(perr(format!("unknown key {other:?}"))),
            }
        }
        let missing = |k: &str| UniverseError::Parse {
            line: 0,
            message: format!("missing {k}"),
        };
        let spec = UniverseSpec::new(width.ok_or_else(|| missing("w_width"))?, omega.ok_or_else(|| missing("omega"))?)?;
        Ok(spec.with_clock(clock).with_coupling(coupling))
    }
}

/// A full universe configuration at tick `t`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct UniverseState {
    pub t: u64,
    pub w: BitString,
    pub id: MachineId,
    /// Block pushed at the first tick instead of the environment value.
    pub feed: Option<BitString>,
}

impl UniverseState {
    pub fn encode(&self) -> BitString {
        encode_state(&self.w, &self.id)
    }

    /// Advances one tick.
    pub fn tick(&mut self, u: &UniverseSpec) {
        let t_next = self.t + 1;
        if self.t == 0 {
            let block = self.feed.clone().unwrap_or_else(|| self.w.clone());
            self.id.push(block);
        } else if u.steps_at(t_next) {
            if u.coupling == Coupling::CopyEveryTick {
                self.id.push(self.w.clone());
            }
            self.id.step_in_place();
        }
        self.w = u.omega(&self.w);
        self.t = t_next;
    }

    pub fn advance(&mut self, u: &UniverseSpec, dt: u64) {
        for _ in 0..dt {
            self.tick(u);
        }
    }

    /// Ticks until the machine halts; returns the tick at which it first
    /// reads `Halted`, or `None` after `fuel` more ticks.
    pub fn run_until_halt(&mut self, u: &UniverseSpec, fuel: u64) -> Option<u64> {
        for _ in 0..fuel {
            if self.id.is_halted() {
                return Some(self.t);
            }
            self.tick(u);
        }
        self.id.is_halted().then_some(self.t)
    }
}

pub fn encode_state(w: &BitString, id: &MachineId) -> BitString {
    codec::encode_pair(w, &id.encode())
}

pub fn init_state(u: &UniverseSpec, w0: &BitString, p: &Program) -> Result<UniverseState, UniverseError> {
    init_from_id(u, w0, MachineId::fresh(p))
}

pub fn init_from_id(u: &UniverseSpec, w0: &BitString, id: MachineId) -> Result<UniverseState, UniverseError> {
    u.check_width(w0)?;
    Ok(UniverseState {
        t: 0,
        w: w0.clone(),
        id,
        feed: None,
    })
}

/// Like [`init_state`], but the first tick pushes `feed` rather than `w0`.
pub fn init_fed(
    u: &UniverseSpec,
    w0: &BitString,
    feed: &BitString,
    p: &Program,
) -> Result<UniverseState, UniverseError> {
    let mut s = init_state(u, w0, p)?;
    s.feed = Some(feed.clone());
    Ok(s)
}

/// The evolution oracle: `(w_dt, enc(id_dt))` by direct stepping.
pub fn evolve(
    u: &UniverseSpec,
    dt: u64,
    w0: &BitString,
    p: &Program,
) -> Result<(BitString, BitString), UniverseError> {
    let mut s = init_state(u, w0, p)?;
    s.advance(u, dt);
    Ok((s.w.clone(), s.id.encode()))
}

/// [`evolve`] from an arbitrary machine configuration at tick 0.
pub fn evolve_id(
    u: &UniverseSpec,
    dt: u64,
    w0: &BitString,
    id: &MachineId,
) -> Result<(BitString, BitString), UniverseError> {
    let mut s = init_from_id(u, w0, id.clone())?;
    s.advance(u, dt);
    Ok((s.w.clone(), s.id.encode()))
}

/// Encoded states at each of the (non-decreasing) times in `dts`.
pub fn trajectory(
    u: &UniverseSpec,
    dts: &[u64],
    w0: &BitString,
    p: &Program,
) -> Result<Vec<BitString>, UniverseError> {
    let mut s = init_state(u, w0, p)?;
    let mut out = Vec::with_capacity(dts.len());
    for &dt in dts {
        assert!(dt >= s.t, "trajectory times must be non-decreasing");
        s.advance(u, dt - s.t);
        out.push(s.encode());
    }
    Ok(out)
}

/// Exhaustive perturbation test: for every initial environment and every
/// tick after the first, replacing the environment by any other value must
/// not change the machine's next configuration.
pub fn check_shielded(u: &UniverseSpec, p: &Program, dt: u64) -> Result<bool, UniverseError> {
    if u.w_width > MAX_ENUMERABLE_WIDTH {
        return Err(UniverseError::TooLargeToEnumerate(u.w_width));
    }
    for w0 in u.environment_values() {
        let mut s = init_state(u, &w0, p)?;
        s.tick(u);
        for _ in 1..dt {
            let mut reference = s.clone();
            reference.tick(u);
            for w in u.environment_values() {
                let mut alt = s.clone();
                alt.w = w;
                alt.tick(u);
                if alt.id != reference.id {
                    return Ok(false);
                }
            }
            s = reference;
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::bits;

    #[test]
    fn init_then_one_tick_pushes_w0() {
        let u = UniverseSpec::flip();
        let p = Program::from_assembly("DUP").unwrap();
        let mut s = init_state(&u, &bits("1"), &p).unwrap();
        assert_eq!(s.id, MachineId::fresh(&p));
        s.tick(&u);
        assert_eq!(
            s.id,
            MachineId::Running {
                frames: vec![p.code().clone()],
                data: vec![bits("1")]
            }
        );
    }

    #[test]
    fn empty_program_halts_with_w0_after_two_ticks() {
        let u = UniverseSpec::gray_cycle2();
        let mut s = init_state(&u, &bits("10"), &Program::empty()).unwrap();
        s.advance(&u, 2);
        assert_eq!(s.id, MachineId::Halted(bits("10")));
    }

    #[test]
    fn zero_ticks_is_identity() {
        let u = UniverseSpec::flip();
        let p = Program::from_assembly("DUP PAIR").unwrap();
        let (w, n) = evolve(&u, 0, &bits("0"), &p).unwrap();
        assert_eq!(w, bits("0"));
        assert_eq!(n, MachineId::fresh(&p).encode());
    }

    #[test]
    fn flip_three_times() {
        let u = UniverseSpec::flip();
        for w0 in ["0", "1"] {
            let (w, _) = evolve(&u, 3, &bits(w0), &Program::empty()).unwrap();
            assert_eq!(w, u.omega(&bits(w0)));
        }
    }

    #[test]
    fn omega_pow_matches_iteration() {
        let u = UniverseSpec::from_fn(3, |i| (i * 5 + 3) % 8).unwrap();
        for w in u.environment_values() {
            let mut x = w.clone();
            for k in 0..40 {
                assert_eq!(u.omega_pow(&w, k), x);
                x = u.omega(&x);
            }
        }
    }

    #[test]
    fn width_mismatch() {
        let u = UniverseSpec::flip();
        assert_eq!(
            init_state(&u, &bits("01"), &Program::empty()).unwrap_err(),
            UniverseError::WidthMismatch { expected: 1, got: 2 }
        );
    }

    #[test]
    fn clock_divisor_slows_the_machine() {
        let u = UniverseSpec::flip().with_clock(3);
        let steps: Vec<u64> = (1..12).filter(|&t| u.steps_at(t)).collect();
        assert_eq!(steps, vec![4, 7, 10]);
        let mut s = init_state(&u, &bits("0"), &Program::from_assembly("QUOTE:1").unwrap()).unwrap();
        s.advance(&u, 6);
        assert!(!s.id.is_halted());
        s.advance(&u, 1);
        assert!(s.id.is_halted());
    }

    #[test]
    fn spec_text_roundtrip() {
        let text = "# two bits\nw_width=2\nomega=01,11,00,10\nclock=2 # slow\n";
        let u: UniverseSpec = text.parse().unwrap();
        assert_eq!(u, UniverseSpec::gray_cycle2().with_clock(2));
        assert_eq!(u.to_string().parse::<UniverseSpec>().unwrap(), u);
        assert!("w_width=1\nomega=0".parse::<UniverseSpec>().is_err());
        assert!("w_width=1\nomega=0,11".parse::<UniverseSpec>().is_err());
        assert!("w_width=1\nbogus=1".parse::<UniverseSpec>().is_err());
    }

    #[test]
    fn shielding() {
        let p = Program::from_assembly("DUP PAIR DUP CONCAT").unwrap();
        let u = UniverseSpec::gray_cycle2();
        assert!(check_shielded(&u, &p, 6).unwrap());
        let leaky = u.with_coupling(Coupling::CopyEveryTick);
        assert!(!check_shielded(&leaky, &p, 3).unwrap());
        let wide = UniverseSpec::from_fn(13, |i| i).unwrap();
        assert_eq!(
            check_shielded(&wide, &p, 2),
            Err(UniverseError::TooLargeToEnumerate(13))
        );
    }
}
