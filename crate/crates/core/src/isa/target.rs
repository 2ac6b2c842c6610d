use crate::machine::{MemorySegment, RegisterFile};

use super::MachineState;

/// Target machine configuration: memory and registers.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct TargetConfig {
    pub mem: MemorySegment,
    pub regs: RegisterFile,
}

impl TargetConfig {
    /// Registers start at zero.
    pub fn new(mem: MemorySegment) -> Self {
        TargetConfig {
            mem,
            regs: RegisterFile::default(),
        }
    }
}

impl MachineState for TargetConfig {
    fn regs(&self) -> &RegisterFile {
        &self.regs
    }

    fn regs_mut(&mut self) -> &mut RegisterFile {
        &mut self.regs
    }

    fn mem(&self) -> &MemorySegment {
        &self.mem
    }

    fn mem_mut(&mut self) -> &mut MemorySegment {
        &mut self.mem
    }
}

/// The target machine: no call recognition, no source tokens.
#[derive(Clone, Copy, Debug, Default)]
pub struct TargetRules;
