//! Components: code and data with imports, exports and seal/linearity
//! metadata. Validation, linking and initial configurations live in the
//! submodules.

pub(crate) mod format;
mod link;
mod validate;

use std::collections::{BTreeMap, BTreeSet};

pub use format::{parse_component, write_component, FormatError};
pub use link::{initial_config, link, plug, Config, InitError, LinkError};
pub use validate::{validate_component, Diagnostic, TaChoice};

use crate::machine::{Addr, MemorySegment, SealId, Word};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Component {
    /// Code including the zero pads just below and above it.
    pub code: MemorySegment,
    pub data: MemorySegment,
    /// Data cells filled in by linking: `addr <- symbol`.
    pub imports: Vec<(Addr, String)>,
    pub exports: BTreeMap<String, Word>,
    pub sig_ret: BTreeSet<SealId>,
    pub sig_clos: BTreeSet<SealId>,
    pub a_linear: BTreeSet<Addr>,
    /// Sealed code and data capabilities the program starts from.
    pub main: Option<(Word, Word)>,
}

impl Component {
    /// Code without its pads, when the code domain is a contiguous padded range.
    pub fn unpadded_code(&self) -> MemorySegment {
        match self.code.contiguous_range() {
            Some((lo, hi)) if hi >= lo + 2 => self.code.restricted(lo + 1..=hi - 1),
            _ => MemorySegment::new(),
        }
    }

    /// Every address of the unpadded code.
    pub fn code_addrs(&self) -> BTreeSet<Addr> {
        self.unpadded_code().domain().collect()
    }

    pub fn is_program(&self) -> bool {
        self.main.is_some() && self.imports.is_empty()
    }
}
