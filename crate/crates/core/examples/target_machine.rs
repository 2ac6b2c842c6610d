//! Builds a target configuration by hand and steps it: a countdown loop that
//! stores its result through a data capability.

use capcall::asm::{assemble, AsmConfig};
use capcall::isa::{run, StepOutcome, TargetConfig, TargetRules};
use capcall::machine::{GlobalConstants, Linearity, MemCap, Permission, RegName};

const CODE: &str = "
.code 0
    move r0 5
    move r1 0
    lea r2 loop
loop:
    plus r1 r1 r0
    minus r0 r0 1
    jnz r2 r0
    store rdata r1
    halt
.data 100
    .word 0
";

fn main() {
    let a = assemble(CODE, &AsmConfig { pads: false, ..AsmConfig::default() }).unwrap();
    let mut cfg = TargetConfig::new(a.memory());
    cfg.regs[RegName::Pc] = MemCap::new(Permission::RX, Linearity::Normal, 0, a.symbols["code.end"], 0).into();
    cfg.regs[RegName::Data] = MemCap::new(Permission::RW, Linearity::Normal, 100, 100, 100).into();

    let r = run(cfg, &TargetRules, &GlobalConstants::default(), 1000, true);
    for rec in &r.trace {
        println!("{}", rec.to_line(capcall::isa::MachineKind::Target));
    }
    match r.outcome {
        StepOutcome::Halted => println!("halted after {} steps", r.steps),
        other => println!("ended {} after {} steps", other.kind(), r.steps),
    }
}
