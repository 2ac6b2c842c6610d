//! Two capability machines and a calling convention that makes them agree.
//!
//! The target machine has memory capabilities with linearity, seals and a
//! small register ISA. The source machine runs the same instructions but owns
//! the stack: inside trusted code a 26-instruction call sequence executes as
//! one step that sets the caller's stack aside, and returns go through
//! one-shot tokens. The crate assembles and links components, runs them on
//! either machine and compares the two.
//!
//! - [`machine`]: words, permissions, registers, memory, instruction encoding
//! - [`isa`]: the shared interpreter and the target machine
//! - [`source`]: the source machine's calls, returns and stack cases
//! - [`asm`]: assembler, disassembler, the call sequence and hidden-call search
//! - [`component`]: component files, validation, linking, initial configurations
//! - [`harness`]: runs, differential comparison, invariants, fixtures and attacks
//!
//! ```
//! use capcall::asm::callmacro::CallConvention;
//! use capcall::harness::fixtures::{well_behaved, STK_BASE, STK_END};
//! use capcall::harness::{run_diff, Outcome, RunOptions};
//!
//! let (trusted, context) = well_behaved("roundtrip").unwrap().assemble().unwrap();
//! let d = run_diff(&trusted, &context, STK_BASE, STK_END, CallConvention::default(), &RunOptions::default()).unwrap();
//! assert!(d.agree);
//! assert_eq!((d.source.outcome, d.source.steps, d.target.steps), (Outcome::Halted, 25, 49));
//! ```

pub mod asm;
pub mod component;
pub mod harness;
pub mod isa;
pub mod machine;
pub mod source;
