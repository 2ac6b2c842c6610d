//! The source machine treats a call sequence in trusted code as one step and
//! the callback's return as another, with the caller's stack set aside.

use capcall::harness::fixtures::{well_behaved, STK_BASE, STK_END};
use capcall::harness::{run_one, RunOptions, RunSetup};
use capcall::component::link;
use capcall::isa::{Action, MachineKind};

fn main() {
    let f = well_behaved("nested").unwrap();
    let (trusted, context) = f.assemble().unwrap();
    let prog = link(&context, &trusted).unwrap();
    let setup = RunSetup::new(STK_BASE, STK_END, trusted.code.domain());
    let opts = RunOptions { trace: true, paranoid: true, ..Default::default() };

    let r = run_one(&prog, MachineKind::Source, &setup, &opts).unwrap();
    let mut depth = 0usize;
    for (rec, w) in r.trace.iter().zip(&r.weights) {
        match &rec.action {
            Action::Call(p) => {
                println!("{:>4} {}{p}  (stands for {w} target steps)", rec.step, "  ".repeat(depth));
                depth += 1;
            }
            _ if *w > 1 => {
                depth -= 1;
                println!("{:>4} {}return  (stands for {w} target steps)", rec.step, "  ".repeat(depth));
            }
            _ => {}
        }
    }
    println!("{} after {} source steps, {} target steps' worth", r.outcome, r.steps, r.target_steps());
    println!("invariant violations: {}", r.violations.len());
}
