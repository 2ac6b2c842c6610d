//! Linear capabilities cannot be duplicated: moving, storing or loading one
//! clears where it came from.

use capcall::harness::linear_aliases;
use capcall::isa::{exec_instr, StepOutcome, TargetConfig, TargetRules};
use capcall::machine::{GlobalConstants, Instr, Linearity, MemCap, MemorySegment, Permission, RegName, Word};

fn step(cfg: TargetConfig, text: &str) -> TargetConfig {
    let i: Instr = text.parse().unwrap();
    match exec_instr(cfg, &i, &TargetRules, &GlobalConstants::default()) {
        StepOutcome::Running(c) => c,
        other => panic!("{text}: {}", other.kind()),
    }
}

fn show(cfg: &TargetConfig, what: &str) {
    let regs: Vec<String> = [0, 1, 2].iter().map(|&i| format!("r{i}={}", cfg.regs[RegName::Gen(i)])).collect();
    let cell = cfg.mem.get(200).copied().unwrap_or(Word::Int(0));
    let aliases = linear_aliases(cfg.regs.iter().map(|(_, w)| w).chain(cfg.mem.iter().map(|(_, w)| w)));
    println!("{what:<14} {}  [200]={cell}  aliases={}", regs.join("  "), aliases.len());
}

fn main() {
    let mut cfg = TargetConfig::new(MemorySegment::filled(200..=203, Word::Int(0)));
    cfg.regs[RegName::Pc] = MemCap::new(Permission::RX, Linearity::Normal, 0, 99, 0).into();
    cfg.regs[RegName::Gen(0)] = MemCap::new(Permission::RW, Linearity::Linear, 200, 203, 200).into();
    cfg.regs[RegName::Gen(2)] = MemCap::new(Permission::RW, Linearity::Normal, 200, 203, 200).into();
    show(&cfg, "start");

    cfg = step(cfg, "move r1 r0");
    show(&cfg, "move r1 r0");

    // a linear cap stored through another cap leaves its register empty
    cfg = step(cfg, "store r2 r1");
    show(&cfg, "store r2 r1");

    cfg = step(cfg, "load r0 r2");
    show(&cfg, "load r0 r2");

    // splitting yields two disjoint linear halves
    cfg = step(cfg, "split r0 r1 r0 201");
    show(&cfg, "split");
}
