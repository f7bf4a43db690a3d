//! A universal stack machine and the machinery around it:
//! self-delimiting codes, Kleene-style program transformers, deterministic
//! universes that host a machine, simulation witnesses, self-simulating
//! programs and the simulation graph between universes.

mod bits;
pub mod codec;
pub mod qvm;
mod asm;
pub mod meta;
pub mod universe;
pub mod selfsim;
pub mod simulation;
pub mod graph;
pub mod random;
pub mod cli;
