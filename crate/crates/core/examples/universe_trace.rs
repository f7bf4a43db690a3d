//! A two-bit universe with a machine inside it.

use simlab::codec::bits;
use simlab::qvm::MachineId;
use simlab::universe::{check_shielded, init_state, trajectory, UniverseSpec};

fn main() {
    let u: UniverseSpec = "w_width=2\nomega=01,11,00,10\n".parse().unwrap();
    print!("{u}");
    let p = "DUP CONS0 SWAP CONS1 PAIR".parse().unwrap();
    let mut s = init_state(&u, &bits("00"), &p).unwrap();
    for _ in 0..8 {
        let m = match &s.id {
            MachineId::Halted(o) => format!("halted output={o}"),
            MachineId::Running { frames, data } => format!("running frames={} data={data:?}", frames.len()),
        };
        println!("t={} w={} {m}", s.t, s.w);
        s.tick(&u);
    }
    let states = trajectory(&u, &[1, 3, 6], &bits("00"), &p).unwrap();
    for (t, st) in [1, 3, 6].iter().zip(states) {
        println!("state at {t}: {} bits", st.len());
    }
    println!("shielded over 6 ticks: {}", check_shielded(&u, &p, 6).unwrap());

    let slow = u.clone().with_clock(3);
    let machine_ticks: Vec<u64> = (1..12).filter(|&t| slow.steps_at(t)).collect();
    println!("clock 3 steps the machine at {machine_ticks:?}");
}
