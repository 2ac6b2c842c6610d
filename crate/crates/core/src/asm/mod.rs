//! Assembly text, the call macro and disassembly.

pub mod assemble;
pub mod callmacro;
pub mod disasm;

pub use assemble::{assemble, AsmConfig, AsmError, Assembly};
pub use disasm::disassemble;
