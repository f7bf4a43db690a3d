//! Evolution programs: the universe's own dynamics written as machine code.
//!
//! The centerpiece is a single-stepper over encoded configurations. It reads
//! the next opcode of the top frame, walks a binary tree of sixteen handler
//! programs (kept on the data stack, never re-quoted) and evaluates the
//! chosen handler. Each handler first computes one "ok" flag for all of its
//! preconditions and then branches once, so faults never nest continuations.

use crate::asm::Asm;
use crate::codec::{self, bits, BitString};
use crate::qvm::{encode_program, Instr, Program};

use super::{Coupling, UniverseSpec};

use Instr::*;

/// `enc(Halted(ε))`.
const FAULT: &str = "1101";

fn ifte(t: &[Instr], f: &[Instr]) -> [Instr; 5] {
    [
        Quote(encode_program(t)),
        Swap,
        Quote(encode_program(f)),
        Swap,
        If,
    ]
}

/// `[s] → [flag]`: "1" iff `s` starts with a well-formed `D(·)` block.
///
/// Scans two bits per round. A `101` sentinel keeps every read in bounds.
/// The loop leaves the remainder after the first `01` pair (or ε on a `10`
/// pair); a terminator straddling the sentinel leaves 0 or 2 bits, while a
/// genuine one leaves at least the whole sentinel.
pub(crate) fn is_pair_code() -> Vec<Instr> {
    let cont = [Tail, Swap, Dup, Eval];
    let y01 = [Tail, Swap, Drop];
    let y10 = [Drop, Drop, Quote(BitString::new())];
    let mut x1 = vec![Tail, Dup, Head];
    x1.extend(ifte(&cont, &y10));
    let mut x0 = vec![Tail, Dup, Head];
    x0.extend(ifte(&y01, &cont));
    let mut body = vec![Swap, Dup, Head];
    body.extend(ifte(&x1, &x0));
    let mut long_enough = vec![Tail, Tail, IsNil];
    long_enough.extend(ifte(&[Quote(bits("0"))], &[Quote(bits("1"))]));
    let mut code = vec![
        Quote(bits("101")),
        Concat,
        Quote(encode_program(&body)),
        Dup,
        Eval,
        Dup,
        IsNil,
    ];
    code.extend(ifte(&[Drop, Quote(bits("0"))], &long_enough));
    code
}

fn fault(a: &mut Asm) {
    a.arrange(&[]);
    a.quote_str("n", FAULT);
}

/// `F, D → n = ⟨0, ⟨F, D⟩⟩`, dropping any other slot above the floor.
fn finish(a: &mut Asm) {
    a.arrange(&["F", "D"]);
    a.pair("F", "D", "body");
    a.quote_str("tag", "0");
    a.pair("tag", "body", "n");
}

/// Consumes `Frest` and `code`; `F` is `Frest` with `code` pushed when it
/// is non-empty.
fn push_frame(a: &mut Asm, code: &str, frest: &str) {
    a.copy(code, "cn");
    a.apply(IsNil, "cn", "cn");
    a.if_else(
        "cn",
        |t| {
            t.drop_slot(code);
            t.rename(frest, "F");
        },
        |f| f.pair(code, frest, "F"),
    );
}

fn flag(a: &mut Asm, out: &str, value: bool) {
    a.quote_str(out, if value { "1" } else { "0" });
}

/// `out` = "1" iff the list in `list` has at least `k` elements.
fn depth_flag(a: &mut Asm, list: &str, k: usize, out: &str) {
    a.copy(list, "l");
    depth_rec(a, k, out);
}

fn depth_rec(a: &mut Asm, k: usize, out: &str) {
    a.copy("l", "e");
    a.apply(IsNil, "e", "e");
    a.if_else(
        "e",
        |t| {
            t.drop_slot("l");
            flag(t, out, false);
        },
        |f| {
            if k == 1 {
                f.drop_slot("l");
                flag(f, out, true);
            } else {
                f.unpair("l", "x", "l2");
                f.drop_slot("x");
                f.rename("l2", "l");
                depth_rec(f, k - 1, out);
            }
        },
    );
}

#[derive(Clone, Copy)]
enum TopTest {
    Pair,
    NonEmpty,
}

/// `out` = "1" iff the list is non-empty and its top element passes `test`.
fn top_flag(a: &mut Asm, list: &str, test: TopTest, out: &str) {
    a.copy(list, "l");
    a.copy("l", "e");
    a.apply(IsNil, "e", "e");
    a.if_else(
        "e",
        |t| {
            t.drop_slot("l");
            flag(t, out, false);
        },
        |f| {
            f.unpair("l", "x", "r");
            f.drop_slot("r");
            apply_test(f, "x", test, out);
        },
    );
}

fn apply_test(a: &mut Asm, x: &str, test: TopTest, out: &str) {
    match test {
        TopTest::Pair => {
            a.bring(x);
            a.raw(&is_pair_code(), 1, &[out]);
        }
        TopTest::NonEmpty => {
            a.apply(IsNil, x, "e");
            a.if_else("e", |t| flag(t, out, false), |f| flag(f, out, true));
        }
    }
}

/// `out` = "1" iff `c` is exactly the string "1"; consumes `c`.
fn is_one(a: &mut Asm, c: &str, out: &str) {
    a.copy(c, "e");
    a.apply(IsNil, "e", "e");
    a.if_else(
        "e",
        |t| {
            t.drop_slot(c);
            flag(t, out, false);
        },
        |f| {
            f.copy(c, "h");
            f.apply(Head, "h", "h");
            f.if_else(
                "h",
                |t| {
                    t.apply(Tail, c, out);
                    t.apply(IsNil, out, out);
                },
                |g| {
                    g.drop_slot(c);
                    flag(g, out, false);
                },
            );
        },
    );
}

fn guarded(a: &mut Asm, ok: &str, body: impl FnOnce(&mut Asm)) {
    a.if_else(ok, body, fault);
}

/// Handler for one opcode. Runs on `[.., D, Frest, C]` where `C` is the
/// code after the opcode and leaves `[.., n']`.
fn handler(op: u8) -> BitString {
    let mut a = Asm::with_floor(&["T"], &["D", "Frest", "C"]);
    let next_frames = |a: &mut Asm| push_frame(a, "C", "Frest");
    match op {
        0b0000 => {
            a.copy("C", "c");
            apply_test(&mut a, "c", TopTest::Pair, "ok");
            guarded(&mut a, "ok", |a| {
                a.unpair("C", "v", "C2");
                a.rename("C2", "C");
                a.pair("v", "D", "D");
                next_frames(a);
                finish(a);
            });
        }
        0b0001 | 0b0011 | 0b0100 => {
            depth_flag(&mut a, "D", 2, "ok");
            guarded(&mut a, "ok", |a| {
                a.unpair("D", "y", "r1");
                a.unpair("r1", "x", "r2");
                match op {
                    0b0001 => {
                        a.pair("x", "y", "v");
                        a.pair("v", "r2", "D");
                    }
                    0b0011 => {
                        a.concat("x", "y", "v");
                        a.pair("v", "r2", "D");
                    }
                    _ => {
                        a.pair("y", "r2", "r3");
                        a.pair("x", "r3", "D");
                    }
                }
                next_frames(a);
                finish(a);
            });
        }
        0b0010 => {
            top_flag(&mut a, "D", TopTest::Pair, "ok");
            guarded(&mut a, "ok", |a| {
                a.unpair("D", "s", "r");
                a.unpair("s", "x", "y");
                a.pair("x", "r", "r2");
                a.pair("y", "r2", "D");
                next_frames(a);
                finish(a);
            });
        }
        0b0101 => {
            depth_flag(&mut a, "D", 1, "ok");
            guarded(&mut a, "ok", |a| {
                a.copy("D", "d");
                a.unpair("d", "x", "r");
                a.drop_slot("r");
                a.pair("x", "D", "D2");
                a.rename("D2", "D");
                next_frames(a);
                finish(a);
            });
        }
        0b0110 => {
            depth_flag(&mut a, "D", 1, "ok");
            guarded(&mut a, "ok", |a| {
                a.unpair("D", "x", "r");
                a.drop_slot("x");
                a.rename("r", "D");
                next_frames(a);
                finish(a);
            });
        }
        0b0111 => {
            depth_flag(&mut a, "D", 1, "ok");
            guarded(&mut a, "ok", |a| {
                a.unpair("D", "c", "r");
                a.rename("r", "D");
                next_frames(a);
                a.rename("F", "F0");
                push_frame(a, "c", "F0");
                finish(a);
            });
        }
        0b1000 => {
            depth_flag(&mut a, "D", 3, "ok");
            guarded(&mut a, "ok", |a| {
                a.unpair("D", "c", "r1");
                a.unpair("r1", "qf", "r2");
                a.unpair("r2", "qt", "D");
                is_one(a, "c", "one");
                a.if_else(
                    "one",
                    |t| {
                        t.drop_slot("qf");
                        t.rename("qt", "q");
                    },
                    |f| {
                        f.drop_slot("qt");
                        f.rename("qf", "q");
                    },
                );
                next_frames(a);
                a.rename("F", "F0");
                push_frame(a, "q", "F0");
                finish(a);
            });
        }
        0b1001 | 0b1100 | 0b1101 => {
            depth_flag(&mut a, "D", 1, "ok");
            let prim = match op {
                0b1001 => IsNil,
                0b1100 => Cons0,
                _ => Cons1,
            };
            guarded(&mut a, "ok", |a| {
                a.unpair("D", "s", "r");
                a.apply(prim, "s", "v");
                a.pair("v", "r", "D");
                next_frames(a);
                finish(a);
            });
        }
        0b1010 | 0b1011 => {
            top_flag(&mut a, "D", TopTest::NonEmpty, "ok");
            let prim = if op == 0b1010 { Head } else { Tail };
            guarded(&mut a, "ok", |a| {
                a.unpair("D", "s", "r");
                a.apply(prim, "s", "v");
                a.pair("v", "r", "D");
                next_frames(a);
                finish(a);
            });
        }
        _ => fault(&mut a),
    }
    assert_eq!(a.stack(), ["T", "n"], "handler {op:04b} stack");
    a.code()
}

/// The sixteen handlers as a flat tuple indexed by opcode.
pub fn handler_table() -> BitString {
    let handlers: Vec<BitString> = (0..16).map(handler).collect();
    codec::encode_tuple(&handlers).expect("sixteen entries")
}

/// Replaces `sel` (a tree of pairs) by its right child when `b` is "1",
/// otherwise its left child. Both paths take the same number of ticks.
fn select(a: &mut Asm, sel: &str, b: &str) {
    a.bring_all(&[sel, b]);
    a.if_else(
        b,
        |t| t.raw(&[Unpair, Swap, Drop], 1, &[sel]),
        |f| f.raw(&[Unpair, Cons0, Drop], 1, &[sel]),
    );
}

/// One machine tick on the encoded configuration in slot `n`, using the
/// handler table in slot `T`.
fn step(a: &mut Asm) {
    a.unpair("n", "tag", "body");
    a.if_else(
        "tag",
        |h| {
            h.quote_str("tag", "1");
            h.pair("tag", "body", "n");
        },
        |r| {
            r.unpair("body", "F", "D");
            r.copy("F", "fe");
            r.apply(IsNil, "fe", "fe");
            r.if_else(
                "fe",
                |h| {
                    h.drop_slot("F");
                    h.copy("D", "de");
                    h.apply(IsNil, "de", "de");
                    h.if_else(
                        "de",
                        |e| e.rename("D", "out"),
                        |s| {
                            s.unpair("D", "out", "rest");
                            s.drop_slot("rest");
                        },
                    );
                    h.quote_str("tag", "1");
                    h.pair("tag", "out", "n");
                },
                dispatch,
            );
        },
    );
}

fn dispatch(a: &mut Asm) {
    a.unpair("F", "C", "Frest");
    a.copy("C", "c");
    short_rec(a, 4);
    a.if_else(
        "short",
        |f| {
            f.drop_slot("D");
            f.drop_slot("Frest");
            f.drop_slot("C");
            f.quote_str("n", FAULT);
        },
        |g| {
            let names = ["b0", "b1", "b2", "b3"];
            for b in names {
                g.bring("C");
                g.raw(&[Dup, Head, Swap, Tail], 1, &[b, "C"]);
            }
            g.copy("T", "sel");
            for (b, skip) in names.iter().zip([8usize, 4, 2, 1]) {
                g.bring_all(&["sel", b]);
                let mut drop_entries = Vec::new();
                for _ in 0..skip {
                    drop_entries.extend([Unpair, Swap, Drop]);
                }
                g.if_else(b, |t| t.raw(&drop_entries, 1, &["sel"]), |_| {});
            }
            g.bring("sel");
            g.raw(&[Unpair, Drop], 1, &["sel"]);
            g.bring_all(&["D", "Frest", "C", "sel"]);
            g.raw(&[Eval], 4, &["n"]);
        },
    );
}

/// `short` = "1" iff slot `c` (consumed) has fewer than `k` bits.
fn short_rec(a: &mut Asm, k: usize) {
    a.copy("c", "e");
    a.apply(IsNil, "e", "e");
    a.if_else(
        "e",
        |t| {
            t.drop_slot("c");
            flag(t, "short", true);
        },
        |f| {
            if k == 1 {
                f.drop_slot("c");
                flag(f, "short", false);
            } else {
                f.apply(Tail, "c", "c");
                short_rec(f, k - 1);
            }
        },
    );
}

/// Consumes `feed`; pushes it onto the data stack of a running `n`.
fn couple(a: &mut Asm, feed: &str) {
    a.unpair("n", "tag", "body");
    a.if_else(
        "tag",
        |h| {
            h.drop_slot(feed);
            h.quote_str("tag", "1");
            h.pair("tag", "body", "n");
        },
        |r| {
            r.unpair("body", "F", "D");
            r.pair(feed, "D", "D2");
            r.pair("F", "D2", "body");
            r.quote_str("tag", "0");
            r.pair("tag", "body", "n");
        },
    );
}

/// A table over `width`-bit keys as a depth-`width` tree keyed by the key's
/// bits, most significant first.
pub(crate) fn table_tree(width: usize, table: &[BitString]) -> BitString {
    fn node(width: usize, table: &[BitString], depth: usize, idx: usize) -> BitString {
        if depth == width {
            return table[idx].clone();
        }
        codec::encode_pair(&node(width, table, depth + 1, 2 * idx), &node(width, table, depth + 1, 2 * idx + 1))
    }
    node(width, table, 0, 0)
}

fn omega_tree(u: &UniverseSpec) -> BitString {
    table_tree(u.w_width(), u.omega_table())
}

/// Replaces slot `w` by the image of `table` (a tree like [`omega_tree`]).
/// Straight-line apart from balanced selects, so its cost is data-independent.
pub(crate) fn lookup(a: &mut Asm, w: &str, table: &BitString, width: usize) {
    a.quote("sel", table);
    a.copy(w, "key");
    for level in 0..width {
        if level + 1 < width {
            a.copy("key", "b");
            a.apply(Head, "b", "b");
            a.apply(Tail, "key", "key");
        } else {
            a.apply(Head, "key", "b");
        }
        select(a, "sel", "b");
    }
    if width == 0 {
        a.drop_slot("key");
    }
    a.drop_slot(w);
    a.rename("sel", w);
}

/// Unary count from a shifted-binary natural in slot `dt` (consumed).
fn unary(a: &mut Asm, dt: &str, out: &str) {
    a.quote_str(out, "1");
    a.copy(dt, "e");
    a.apply(IsNil, "e", "e");
    a.if_else(
        "e",
        |_| {},
        |l| {
            l.until_loop(|b| {
                b.copy(dt, "bit");
                b.apply(Head, "bit", "bit");
                b.apply(Tail, dt, dt);
                b.copy(out, "c2");
                b.concat(out, "c2", "c3");
                b.rename("c3", out);
                b.if_else("bit", |t| t.apply(Cons1, out, out), |_| {});
                b.copy(dt, "stop");
                b.apply(IsNil, "stop", "stop");
                "stop".to_string()
            });
        },
    );
    a.drop_slot(dt);
    a.apply(Tail, out, out);
}

/// Advances slots `w` and `n` by the unary count in `u` ticks, coupling
/// `feed` on the first one. Needs the handler table in slot `T`; consumes
/// `u` and `feed`.
fn evolve_core(a: &mut Asm, spec: &UniverseSpec) {
    let table = omega_tree(spec);
    let width = spec.w_width();
    let every_tick = spec.coupling() == Coupling::CopyEveryTick;
    let clock = spec.clock();
    let tick_env = |a: &mut Asm| lookup(a, "w", &table, width);
    let advance_machine = |a: &mut Asm| {
        if every_tick {
            a.copy("w", "wf");
            couple(a, "wf");
        }
        step(a);
    };

    a.copy("u", "e");
    a.apply(IsNil, "e", "e");
    a.if_else(
        "e",
        |t| {
            t.drop_slot("feed");
            t.bring_all(&["w", "n", "u"]);
        },
        |f| {
            f.apply(Tail, "u", "u");
            couple(f, "feed");
            tick_env(f);
            f.bring_all(&["w", "n", "u"]);
        },
    );
    if clock > 1 {
        a.quote(
            "reset",
            &std::iter::repeat_n(true, (clock - 1) as usize).collect(),
        );
        a.copy("reset", "r");
    }
    a.copy("u", "e");
    a.apply(IsNil, "e", "e");
    a.if_else(
        "e",
        |_| {},
        |l| {
            l.until_loop(|b| {
                b.apply(Tail, "u", "u");
                if clock > 1 {
                    b.copy("r", "re");
                    b.apply(IsNil, "re", "re");
                    b.if_else(
                        "re",
                        |s| {
                            s.drop_slot("r");
                            advance_machine(s);
                            s.copy("reset", "r");
                            s.bring_all(&["n", "r"]);
                        },
                        |w| {
                            w.apply(Tail, "r", "r");
                            w.bring_all(&["n", "r"]);
                        },
                    );
                } else {
                    advance_machine(b);
                }
                tick_env(b);
                b.copy("u", "stop");
                b.apply(IsNil, "stop", "stop");
                "stop".to_string()
            });
        },
    );
    a.drop_slot("u");
    if clock > 1 {
        a.drop_slot("r");
        a.drop_slot("reset");
    }
}

/// Assembles an evolution program. `unpack` turns the single input slot
/// `in` into slots `dt` (shifted binary), `w`, `feed` and `n`.
pub(crate) fn build_evolution(spec: &UniverseSpec, unpack: impl FnOnce(&mut Asm)) -> Program {
    let mut a = Asm::new(&["in"]);
    unpack(&mut a);
    a.quote("T", &handler_table());
    unary(&mut a, "dt", "u");
    evolve_core(&mut a, spec);
    a.pair("w", "n", "out");
    a.arrange(&["out"]);
    a.program()
}

/// On `⟨dt, w, n⟩` outputs `⟨w_dt, n_dt⟩`: the universe advanced `dt` ticks
/// from environment `w` and encoded configuration `n`.
pub fn evolution_program(spec: &UniverseSpec) -> Program {
    build_evolution(spec, |a| {
        a.unpair("in", "dt", "r");
        a.unpair("r", "w", "r2");
        a.unpair("r2", "n", "nil");
        a.drop_slot("nil");
        a.copy("w", "feed");
    })
}

/// As [`evolution_program`] with an explicit first-tick block:
/// input `⟨dt, w, feed, n⟩`.
pub fn fed_evolution_program(spec: &UniverseSpec) -> Program {
    build_evolution(spec, |a| {
        a.unpair("in", "dt", "r");
        a.unpair("r", "w", "r2");
        a.unpair("r2", "feed", "r3");
        a.unpair("r3", "n", "nil");
        a.drop_slot("nil");
    })
}

/// On `⟨⟨dt1, …, dtL⟩, w, n⟩` outputs the tuple of the `L` states, each
/// computed from the initial one.
pub fn trajectory_program(spec: &UniverseSpec) -> Program {
    let mut a = Asm::new(&["in"]);
    a.unpair("in", "dts", "r");
    a.unpair("r", "w0", "r2");
    a.unpair("r2", "n0", "nil");
    a.drop_slot("nil");
    a.quote("T", &handler_table());
    a.quote_str("acc", "");
    a.until_loop(|b| {
        b.unpair("dts", "dt", "rest");
        b.rename("rest", "dts");
        b.copy("w0", "w");
        b.copy("w0", "feed");
        b.copy("n0", "n");
        unary(b, "dt", "u");
        evolve_core(b, spec);
        b.pair("w", "n", "s");
        b.quote_str("nil", "");
        b.pair("s", "nil", "ds");
        b.concat("acc", "ds", "acc2");
        b.rename("acc2", "acc");
        b.copy("dts", "stop");
        b.apply(IsNil, "stop", "stop");
        "stop".to_string()
    });
    a.arrange(&["acc"]);
    a.program()
}

/// `⟨w, ⟨1, o⟩⟩ ↦ o`: strips a halted state down to the machine's output.
pub fn extract_output_suffix() -> Program {
    Program::from_instrs(&[Unpair, Swap, Drop, Unpair, Swap, Drop])
}
