//! Symbolic assembler for hand-written machine programs.
//!
//! Tracks a name for every data-stack slot so generated code can refer to
//! values by role instead of by depth. Slots below the floor belong to an
//! enclosing context: they count toward depths but are never moved.

use crate::codec::BitString;
use crate::qvm::{encode_program, Instr, Program};

#[derive(Clone, Debug)]
pub(crate) struct Asm {
    code: Vec<Instr>,
    stack: Vec<String>,
    floor: usize,
}

impl Asm {
    pub fn new(slots: &[&str]) -> Asm {
        Asm::with_floor(&[], slots)
    }

    pub fn with_floor(frozen: &[&str], slots: &[&str]) -> Asm {
        let mut stack: Vec<String> = frozen.iter().map(|s| s.to_string()).collect();
        stack.extend(slots.iter().map(|s| s.to_string()));
        Asm {
            code: Vec::new(),
            stack,
            floor: frozen.len(),
        }
    }

    fn child(&self) -> Asm {
        Asm {
            code: Vec::new(),
            stack: self.stack.clone(),
            floor: self.floor,
        }
    }

    pub fn stack(&self) -> &[String] {
        &self.stack
    }

    pub fn program(&self) -> Program {
        Program::from_instrs(&self.code)
    }

    pub fn code(&self) -> BitString {
        encode_program(&self.code)
    }

    fn pos(&self, s: &str) -> usize {
        let mut found = self.stack.iter().enumerate().filter(|(_, n)| *n == s);
        let (i, _) = found
            .next()
            .unwrap_or_else(|| panic!("no slot {s:?} in {:?}", self.stack));
        assert!(found.next().is_none(), "duplicate slot {s:?}");
        assert!(i >= self.floor, "slot {s:?} is below the floor");
        i
    }

    pub fn depth(&self, s: &str) -> usize {
        self.stack.len() - 1 - self.pos(s)
    }

    /// Appends instructions with a declared stack effect.
    pub fn raw(&mut self, instrs: &[Instr], pops: usize, pushes: &[&str]) {
        self.code.extend_from_slice(instrs);
        assert!(self.stack.len() >= self.floor + pops, "raw pops into the floor");
        self.stack.truncate(self.stack.len() - pops);
        self.stack.extend(pushes.iter().map(|s| s.to_string()));
    }

    pub fn rename(&mut self, old: &str, new: &str) {
        let i = self.pos(old);
        self.stack[i] = new.to_string();
    }

    /// Rolls the slot at depth `d` to the top: `QUOTE ε, PAIR×d, SWAP,
    /// CONCAT, UNPAIR×d`.
    fn roll_depth(&mut self, d: usize) {
        match d {
            0 => return,
            1 => self.code.push(Instr::Swap),
            _ => {
                self.code.push(Instr::Quote(BitString::new()));
                self.code.extend(std::iter::repeat_n(Instr::Pair, d));
                self.code.push(Instr::Swap);
                self.code.push(Instr::Concat);
                self.code.extend(std::iter::repeat_n(Instr::Unpair, d));
            }
        }
        let i = self.stack.len() - 1 - d;
        let s = self.stack.remove(i);
        self.stack.push(s);
    }

    pub fn bring(&mut self, s: &str) {
        let d = self.depth(s);
        self.roll_depth(d);
    }

    /// Brings `names` to the top in order (last name on top).
    pub fn bring_all(&mut self, names: &[&str]) {
        let k = names.len();
        let n = self.stack.len();
        if n >= k && self.stack[n - k..].iter().zip(names).all(|(a, b)| a == b) {
            return;
        }
        if k == 2 && n >= 2 && self.stack[n - 2] == names[1] && self.stack[n - 1] == names[0] {
            self.code.push(Instr::Swap);
            self.stack.swap(n - 1, n - 2);
            return;
        }
        for name in names {
            self.bring(name);
        }
    }

    pub fn copy(&mut self, s: &str, new: &str) {
        self.bring(s);
        self.raw(&[Instr::Dup], 0, &[new]);
    }

    pub fn drop_slot(&mut self, s: &str) {
        self.bring(s);
        self.raw(&[Instr::Drop], 1, &[]);
    }

    pub fn quote(&mut self, new: &str, payload: &BitString) {
        self.raw(&[Instr::Quote(payload.clone())], 0, &[new]);
    }

    pub fn quote_str(&mut self, new: &str, payload: &str) {
        self.quote(new, &crate::codec::bits(payload));
    }

    /// `out = ⟨a, b⟩`, consuming both.
    pub fn pair(&mut self, a: &str, b: &str, out: &str) {
        self.bring_all(&[a, b]);
        self.raw(&[Instr::Pair], 2, &[out]);
    }

    pub fn unpair(&mut self, s: &str, a: &str, b: &str) {
        self.bring(s);
        self.raw(&[Instr::Unpair], 1, &[a, b]);
    }

    pub fn concat(&mut self, a: &str, b: &str, out: &str) {
        self.bring_all(&[a, b]);
        self.raw(&[Instr::Concat], 2, &[out]);
    }

    /// A one-in, one-out primitive (`HEAD`, `TAIL`, `ISNIL`, `CONS0`, `CONS1`).
    pub fn apply(&mut self, op: Instr, s: &str, out: &str) {
        self.bring(s);
        self.raw(&[op], 1, &[out]);
    }

    /// Drops every slot above the floor not named in `order`, then arranges
    /// the rest to match `order` (bottom first).
    pub fn arrange(&mut self, order: &[&str]) {
        let dead: Vec<String> = self.stack[self.floor..]
            .iter()
            .filter(|s| !order.contains(&s.as_str()))
            .cloned()
            .collect();
        for s in dead {
            self.drop_slot(&s);
        }
        assert_eq!(self.stack.len() - self.floor, order.len(), "arrange: missing slots");
        // slots already in place at the bottom stay put
        let base = &self.stack[self.floor..];
        let keep = base.iter().zip(order).take_while(|(a, b)| a == *b).count();
        for name in &order[keep..] {
            self.bring(name);
        }
    }

    /// `cond` must hold "1" (then) or anything else (else). Both branches
    /// must leave the same slots; the else branch is reordered to match.
    pub fn if_else(
        &mut self,
        cond: &str,
        then: impl FnOnce(&mut Asm),
        els: impl FnOnce(&mut Asm),
    ) {
        self.bring(cond);
        self.stack.pop();
        let mut t = self.child();
        then(&mut t);
        let mut f = self.child();
        els(&mut f);
        let mut ts = t.stack.clone();
        let mut fs = f.stack.clone();
        ts.sort();
        fs.sort();
        assert_eq!(ts, fs, "if_else: branch slots differ");
        let keep = t.stack.iter().zip(&f.stack).take_while(|(a, b)| a == b).count();
        for name in &t.stack[keep..] {
            f.bring(name);
        }
        self.emit_if(t.code(), f.code());
        self.stack = t.stack;
    }

    fn emit_if(&mut self, t: BitString, f: BitString) {
        self.code.extend([
            Instr::Quote(t),
            Instr::Swap,
            Instr::Quote(f),
            Instr::Swap,
            Instr::If,
        ]);
    }

    /// Do-while loop. The body starts from the current stack plus a hidden
    /// copy of its own code and returns the name of a condition slot; "1"
    /// means stop. Each round, and the exit, restore the entry stack's slot
    /// names and order; other temporaries are dropped.
    pub fn until_loop(&mut self, body: impl FnOnce(&mut Asm) -> String) {
        let state: Vec<String> = self.stack[self.floor..].to_vec();
        let state: Vec<&str> = state.iter().map(|s| s.as_str()).collect();
        let depth = self.stack.iter().filter(|s| s.starts_with('#')).count();
        let me = format!("#loop{depth}");
        let mut b = self.child();
        b.stack.push(me.clone());
        let cond = body(&mut b);
        b.bring(&cond);
        b.stack.pop();
        let mut again = b.child();
        let mut with_self = state.clone();
        with_self.push(&me);
        again.arrange(&with_self);
        again.raw(&[Instr::Dup, Instr::Eval], 1, &[]);
        let mut done = b.child();
        done.arrange(&state);
        b.emit_if(done.code(), again.code());
        self.code.extend([Instr::Quote(b.code()), Instr::Dup, Instr::Eval]);
    }
}
