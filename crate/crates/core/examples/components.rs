//! Validating and linking components, and what the validator says about a
//! broken one.

use capcall::asm::callmacro::CallConvention;
use capcall::component::{link, validate_component};
use capcall::harness::fixtures::{well_behaved, BROKEN, STK_BASE};
use capcall::machine::GlobalConstants;

fn main() {
    let (trusted, context) = well_behaved("multi_seal").unwrap().assemble().unwrap();
    let gc = GlobalConstants::new(trusted.code.domain(), STK_BASE);
    for (name, c) in [("trusted", &trusted), ("context", &context)] {
        let verdict = validate_component(c, &gc, CallConvention::default());
        println!("{name}: exports {:?}, imports {}, valid: {}", c.exports.keys().collect::<Vec<_>>(), c.imports.len(), verdict.is_ok());
    }

    let prog = link(&context, &trusted).unwrap();
    println!("linked: program = {}, seals ret {:?} clos {:?}", prog.is_program(), prog.sig_ret, prog.sig_clos);
    println!("linking twice: {}", link(&prog, &trusted).unwrap_err());

    println!();
    for b in BROKEN {
        println!("{:<18} -> {:?}", b.name, b.diagnose().unwrap());
    }
}
