//! Values shared by both machines: words, permissions, registers, memory and
//! instruction encoding.

pub mod instr;
pub mod memory;
pub mod perm;
pub mod regs;
pub mod word;

use std::collections::BTreeSet;

pub use instr::{dec_instr, enc_instr, opcode_of, usage, ImmOutOfRange, Instr, Operand, IMM_MAX, IMM_MIN};
pub use memory::{MemorySegment, Overlap};
pub use perm::{
    dec_perm, enc_lin, enc_perm, exec_allowed, perm_leq, read_allowed, write_allowed, Linearity,
    Permission,
};
pub use regs::{RegName, RegisterFile, GEN_REGS, REG_COUNT};
pub use word::{
    enc_type, is_exec, is_linear, lin_cons, lin_cons_perm, non_zero, within_bounds, Addr, Bound,
    Capability, MemCap, SealCap, SealId, SealableCap, StkPtr, Word,
};

/// Parameters fixed for a whole run.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GlobalConstants {
    /// Trusted addresses: the only places where a call sequence is read as a call.
    pub ta: BTreeSet<Addr>,
    /// Base (lowest address) of the stack.
    pub stk_base: Addr,
}

impl GlobalConstants {
    pub fn new(ta: impl IntoIterator<Item = Addr>, stk_base: Addr) -> Self {
        GlobalConstants {
            ta: ta.into_iter().collect(),
            stk_base,
        }
    }
}
