//! The attack scenarios, with and without the stack base check. Without it
//! the second-stack attack makes the machines disagree.

use capcall::asm::callmacro::CallConvention;
use capcall::harness::scenarios::SCENARIOS;
use capcall::harness::RunOptions;

fn main() {
    for (label, conv) in [("checked", CallConvention::default()), ("weakened", CallConvention::WEAKENED)] {
        println!("{label}:");
        for s in SCENARIOS {
            let d = s.run(conv, &RunOptions::default()).unwrap();
            print!("  {:<22} source {:<8} target {:<8}", s.name, d.source.outcome.to_string(), d.target.outcome.to_string());
            match d.first_divergence {
                Some(i) => println!(" diverge at target step {i}"),
                None => println!(" agree"),
            }
        }
    }
    let d = SCENARIOS[1].run(CallConvention::WEAKENED, &RunOptions::default()).unwrap();
    let i = d.first_divergence.unwrap();
    println!("\ntarget trace around the divergence:");
    for line in d.target.trace_text().lines().skip(i.saturating_sub(3)).take(6) {
        println!("  {line}");
    }
}
