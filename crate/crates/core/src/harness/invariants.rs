//! Per-step invariants: no address is governed by two linear capabilities,
//! and on the source machine the stack is partitioned into the free part and
//! properly ordered frames.

use std::fmt;

use crate::isa::TargetConfig;
use crate::machine::{Addr, Bound, Word};
use crate::source::SourceConfig;

/// Addresses `[lo, hi]` governed by more than one linear capability.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LinearAlias {
    pub lo: Addr,
    pub hi: Bound,
}

impl LinearAlias {
    pub fn contains(&self, a: Addr) -> bool {
        self.lo <= a && self.hi.contains(a)
    }
}

impl fmt::Display for LinearAlias {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "addresses {}..{} are governed by two linear capabilities", self.lo, self.hi)
    }
}

/// Overlaps among the ranges of all linear capabilities in `words`, sealed
/// ones included. Empty ranges govern nothing.
pub fn linear_aliases<'a>(words: impl IntoIterator<Item = &'a Word>) -> Vec<LinearAlias> {
    let mut ranges: Vec<(Addr, Bound)> = words
        .into_iter()
        .filter_map(|w| match w {
            Word::Cap(c) if c.inner().is_linear() => Some(c.inner().range()),
            _ => None,
        })
        .filter(|(b, e)| Bound::Fin(*b) <= *e)
        .collect();
    ranges.sort();
    let mut out = Vec::new();
    let mut reach: Option<Bound> = None;
    for (b, e) in ranges {
        if let Some(r) = reach {
            if r.contains(b) {
                out.push(LinearAlias { lo: b, hi: e.min(r) });
            }
        }
        reach = Some(reach.map_or(e, |r| r.max(e)));
    }
    out
}

pub fn check_linearity_source(cfg: &SourceConfig) -> Vec<LinearAlias> {
    let frames = cfg.frames.iter().flat_map(|f| f.ms.iter().map(|(_, w)| w));
    let words = cfg.regs.iter().map(|(_, w)| w).chain(cfg.mem.iter().map(|(_, w)| w));
    linear_aliases(words.chain(cfg.ms_stk.iter().map(|(_, w)| w)).chain(frames))
}

pub fn check_linearity_target(cfg: &TargetConfig) -> Vec<LinearAlias> {
    linear_aliases(cfg.regs.iter().map(|(_, w)| w).chain(cfg.mem.iter().map(|(_, w)| w)))
}

/// Source-machine stack discipline: program memory, free stack and frames are
/// disjoint and together the free stack and frames cover exactly
/// `[b_stk, e_stk]`; every frame is nonempty, lies above `stk_base`, and
/// more recent frames lie strictly below older ones.
pub fn check_stack(cfg: &SourceConfig, b_stk: Addr, e_stk: Addr, stk_base: Addr) -> Vec<String> {
    let mut out = Vec::new();
    if let Err(o) = cfg.check_disjoint() {
        out.push(format!("address {} is in two of memory, free stack and frames", o.0));
    }
    let covered = cfg.ms_stk.len() + cfg.frames.iter().map(|f| f.ms.len()).sum::<usize>();
    let in_range = cfg
        .ms_stk
        .domain()
        .chain(cfg.frames.iter().flat_map(|f| f.ms.domain()))
        .all(|a| b_stk <= a && a <= e_stk);
    if !in_range || covered as u64 != e_stk - b_stk + 1 {
        out.push(format!("free stack and frames do not partition {b_stk}..{e_stk}"));
    }
    let mut below: Option<Addr> = None;
    for (i, f) in cfg.frames.iter().enumerate() {
        let (Some(lo), Some(hi)) = (f.ms.min_addr(), f.ms.max_addr()) else {
            out.push(format!("frame {i} is empty"));
            continue;
        };
        if lo <= stk_base {
            out.push(format!("frame {i} reaches down to {lo}, not above the stack base {stk_base}"));
        }
        if let Some(b) = below {
            if hi >= b {
                out.push(format!("frame {i} is not below the frame before it"));
            }
        }
        below = Some(lo);
    }
    out
}
