//! Assembles a small library with one call, then prints the component file,
//! the symbol table and the disassembly with the call folded back.

use capcall::asm::callmacro::CallConvention;
use capcall::asm::{assemble, disassemble, AsmConfig};
use capcall::component::write_component;

const LIB: &str = "
.code 100
.seals ret=11..14 clos=10
entry:
    call sw 1 r2 r3
    halt
sw: .seal 10 14 10
.data 300
    .word 0
.export lib_code = sealed:10,(cap:RX,normal,code.start,code.end,entry)
.export lib_data = sealed:10,(cap:RW,normal,data.start,data.end,data.start)
";

fn main() {
    let a = assemble(LIB, &AsmConfig::with_stk_base(1000)).unwrap();
    println!("{}", write_component(&a.component));
    for (name, addr) in &a.symbols {
        println!("{name:<12} {addr}");
    }
    println!();
    print!("{}", disassemble(&a.component.code, 1000, CallConvention::default()));

    // errors carry a line number
    let err = assemble(".code 0\n  move r1\n", &AsmConfig::default()).unwrap_err();
    println!("\nerror: {err}");
}
