//! Comparable snapshots of source and target states.
//!
//! Source-only values are mapped to the target values they stand for: a stack
//! pointer becomes a linear read-write capability, a return data token the
//! linear capability over the caller's private stack, and a return code token
//! the capability pointing at the return code of the call sequence.

use std::collections::BTreeMap;

use crate::asm::callmacro::{CALL_LEN, RET_PT_OFFSET};
use crate::isa::TargetConfig;
use crate::machine::{
    Capability, Linearity, MemCap, MemorySegment, Permission, RegName, RegisterFile, SealableCap, Word,
};
use crate::source::SourceConfig;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Observation {
    pub regs: BTreeMap<RegName, Word>,
    pub mem: MemorySegment,
}

impl Observation {
    pub fn of_source(cfg: &SourceConfig) -> Self {
        let mut mem = cfg.mem.clone();
        mem.extend(cfg.ms_stk.iter().map(|(a, w)| (a, *w)));
        for f in &cfg.frames {
            mem.extend(f.ms.iter().map(|(a, w)| (a, *w)));
        }
        Self::build(&cfg.regs, &mem)
    }

    pub fn of_target(cfg: &TargetConfig) -> Self {
        Self::build(&cfg.regs, &cfg.mem)
    }

    fn build(regs: &RegisterFile, mem: &MemorySegment) -> Self {
        Observation {
            regs: regs.iter().map(|(r, w)| (r, normalize(*w))).collect(),
            mem: mem.iter().map(|(a, w)| (a, normalize(*w))).collect(),
        }
    }

    /// Human-readable differences, at most `limit` of them.
    pub fn differences(&self, other: &Observation, limit: usize) -> Vec<String> {
        let mut out = Vec::new();
        for (r, w) in &self.regs {
            let v = other.regs.get(r).copied().unwrap_or_default();
            if *w != v {
                out.push(format!("{r}: {w} vs {v}"));
            }
        }
        let addrs: std::collections::BTreeSet<_> = self.mem.domain().chain(other.mem.domain()).collect();
        for a in addrs {
            let (x, y) = (self.mem.get(a), other.mem.get(a));
            if x != y {
                let show = |w: Option<&Word>| w.map_or("-".to_string(), Word::to_string);
                out.push(format!("mem[{a}]: {} vs {}", show(x), show(y)));
            }
        }
        out.truncate(limit);
        out
    }
}

fn normalize(w: Word) -> Word {
    match w {
        Word::Int(_) => w,
        Word::Cap(Capability::Plain(sc)) => normalize_sc(sc).into(),
        Word::Cap(Capability::Sealed(s, sc)) => Word::sealed(s, normalize_sc(sc)),
    }
}

fn normalize_sc(sc: SealableCap) -> SealableCap {
    match sc {
        SealableCap::Stk(s) => MemCap { perm: s.perm, lin: Linearity::Linear, base: s.base, end: s.end, addr: s.addr }.into(),
        SealableCap::RetData { base, end } => {
            MemCap { perm: Permission::RW, lin: Linearity::Linear, base, end, addr: base.wrapping_sub(1) }.into()
        }
        SealableCap::RetCode { base, end, addr } => {
            let addr = addr.wrapping_sub((CALL_LEN - RET_PT_OFFSET) as u64);
            MemCap { perm: Permission::RX, lin: Linearity::Normal, base, end, addr }.into()
        }
        other => other,
    }
}
