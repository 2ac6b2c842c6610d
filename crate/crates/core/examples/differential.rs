//! Runs every well-behaved pair on both machines and checks that they agree.

use capcall::asm::callmacro::CallConvention;
use capcall::harness::fixtures::{STK_BASE, STK_END, WELL_BEHAVED};
use capcall::harness::{run_diff, Outcome, RunOptions};

fn main() {
    println!("{:<18} {:<15} {:>7} {:>7}  agree", "program", "outcome", "source", "target");
    for f in WELL_BEHAVED {
        let (t, c) = f.assemble().unwrap();
        let d = run_diff(&t, &c, STK_BASE, STK_END, CallConvention::default(), &RunOptions::default()).unwrap();
        let same_state = match (&d.source.last, &d.target.last) {
            (Some(s), Some(t)) if d.source.outcome == Outcome::Halted => s.differences(t, 1).is_empty(),
            _ => true,
        };
        println!(
            "{:<18} {:<15} {:>7} {:>7}  {}",
            f.name,
            d.source.outcome.to_string(),
            d.source.steps,
            d.target.steps,
            d.agree && same_state
        );
    }
}
