//! The secure call sequence: expansion, recognition and hidden-fragment detection.

use std::fmt;

use crate::machine::{dec_instr, enc_instr, Addr, ImmOutOfRange, Instr, MemorySegment, Operand, RegName, Word};

/// Number of cells occupied by one call.
pub const CALL_LEN: usize = 26;
/// Index of the first instruction executed when the callee returns.
pub const RET_PT_OFFSET: usize = 15;
/// Index of the `xjmp` that transfers control to the callee.
pub const XJMP_INDEX: usize = 14;

// Indices of the parameter-carrying instructions.
const OFF_PC_INDEX: usize = 6;
const OFF_SIGMA_INDEX: usize = 8;

/// Variant of the return code.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CallConvention {
    /// Whether the return code compares the stack base against the global
    /// `stk_base`. Turning it off reproduces the unsafe variant where a callee
    /// can return into a different stack.
    pub check_stk_base: bool,
}

impl Default for CallConvention {
    fn default() -> Self {
        CallConvention { check_stk_base: true }
    }
}

impl CallConvention {
    pub const WEAKENED: CallConvention = CallConvention { check_stk_base: false };
}

/// Parameters of one call: the seal word sits `off_pc` cells after the first
/// instruction of the call, and the return seal is that word's cursor plus
/// `off_sigma`. `r1`/`r2` hold the sealed code/data pair of the callee.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CallParams {
    pub off_pc: u64,
    pub off_sigma: u64,
    pub r1: RegName,
    pub r2: RegName,
}

impl fmt::Display for CallParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "call {} {} {} {}", self.off_pc, self.off_sigma, self.r1, self.r2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum CallError {
    #[error("call operand {0} may not be rtmp1 or pc")]
    ReservedRegister(RegName),
    #[error(transparent)]
    Immediate(#[from] ImmOutOfRange),
}

/// The 26 instructions of a call. Accepts any registers; see [`expand_scall`]
/// for the checked variant.
pub fn call_sequence(p: &CallParams, stk_base: Addr, conv: CallConvention) -> [Instr; CALL_LEN] {
    use Operand::{Imm, Reg};
    use RegName::*;
    let imm = |n: u64| Imm(n as i128);
    let check = if conv.check_stk_base {
        Instr::Minus(Tmp1, Reg(Tmp1), imm(stk_base))
    } else {
        Instr::Move(Tmp1, Imm(0))
    };
    [
        // push 42 so the private stack is never empty
        Instr::Move(Tmp1, Imm(42)),
        Instr::Store(Stk, Tmp1),
        Instr::Cca(Stk, Imm(-1)),
        Instr::GetA(Tmp1, Stk),
        Instr::Split(Stk, RetData, Stk, Reg(Tmp1)),
        // fetch the seal word and pick the return seal
        Instr::Move(Tmp1, Reg(Pc)),
        Instr::Cca(Tmp1, Imm(p.off_pc as i128 - 5)),
        Instr::Load(Tmp1, Tmp1),
        Instr::Cca(Tmp1, imm(p.off_sigma)),
        Instr::CSeal(RetData, Tmp1),
        Instr::Move(RetCode, Reg(Pc)),
        Instr::Cca(RetCode, Imm(5)),
        Instr::CSeal(RetCode, Tmp1),
        Instr::Move(Tmp1, Imm(0)),
        Instr::Xjmp(p.r1, p.r2),
        // return point: the stack must still start at stk_base
        Instr::GetB(Tmp1, Stk),
        check,
        Instr::Move(Tmp2, Reg(Pc)),
        Instr::Cca(Tmp2, Imm(5)),
        Instr::Jnz(Tmp2, Reg(Tmp1)),
        Instr::Cca(Tmp2, Imm(1)),
        Instr::Jmp(Tmp2),
        Instr::Fail,
        Instr::Splice(Stk, Stk, Data),
        Instr::Cca(Stk, Imm(1)),
        Instr::Move(Tmp2, Imm(0)),
    ]
}

/// Encoded call, ready to be placed in memory.
pub fn expand_scall(p: &CallParams, stk_base: Addr, conv: CallConvention) -> Result<Vec<Word>, CallError> {
    for r in [p.r1, p.r2] {
        if matches!(r, RegName::Tmp1 | RegName::Pc) {
            return Err(CallError::ReservedRegister(r));
        }
    }
    let instrs = call_sequence(p, stk_base, conv);
    instrs.iter().map(|i| enc_instr(i).map_err(CallError::from)).collect()
}

/// Parameters of the call whose first cell is at `a`, if the 26 cells there
/// are exactly a call sequence.
pub fn recognize_call(mem: &MemorySegment, a: Addr, stk_base: Addr, conv: CallConvention) -> Option<CallParams> {
    let cell = |i: usize| mem.get(a.checked_add(i as u64)?).copied();
    let Instr::Cca(RegName::Tmp1, Operand::Imm(k)) = dec_instr(&cell(OFF_PC_INDEX)?) else {
        return None;
    };
    let Instr::Cca(RegName::Tmp1, Operand::Imm(s)) = dec_instr(&cell(OFF_SIGMA_INDEX)?) else {
        return None;
    };
    let Instr::Xjmp(r1, r2) = dec_instr(&cell(XJMP_INDEX)?) else {
        return None;
    };
    let p = CallParams {
        off_pc: u64::try_from(k + 5).ok()?,
        off_sigma: u64::try_from(s).ok()?,
        r1,
        r2,
    };
    let expected = call_sequence(&p, stk_base, conv);
    for (i, instr) in expected.iter().enumerate() {
        if cell(i)? != enc_instr(instr).ok()? {
            return None;
        }
    }
    Some(p)
}

/// Whether `w` can be call part `i` for some parameters.
fn matches_part(w: &Word, i: usize, stk_base: Addr, conv: CallConvention) -> bool {
    let instr = dec_instr(w);
    // Any parameters do for the fixed parts.
    let probe = CallParams {
        off_pc: 5,
        off_sigma: 0,
        r1: RegName::Gen(0),
        r2: RegName::Gen(1),
    };
    let fixed = call_sequence(&probe, stk_base, conv)[i];
    let ok = match i {
        OFF_PC_INDEX => matches!(instr, Instr::Cca(RegName::Tmp1, Operand::Imm(k)) if k + 5 >= 0),
        OFF_SIGMA_INDEX => matches!(instr, Instr::Cca(RegName::Tmp1, Operand::Imm(s)) if s >= 0),
        XJMP_INDEX => matches!(instr, Instr::Xjmp(..)),
        _ => instr == fixed,
    };
    // dec_instr maps non-image words to fail, which must not count as part 22.
    ok && enc_instr(&instr).ok().as_ref() == Some(w)
}

/// A call fragment that runs off the segment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct HiddenCall {
    /// First address of the window that would hold the call.
    pub start: i128,
    /// First in-domain address of the fragment.
    pub addr: Addr,
    /// Call part found at `addr`.
    pub index: usize,
}

impl fmt::Display for HiddenCall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "cells from {} look like part {} of a call starting at {} that does not fit in the segment",
            self.addr, self.index, self.start
        )
    }
}

/// Windows `[s, s+25]` that are only partly inside the segment, yet whose
/// in-domain cells all agree with one call sequence. A complete in-domain call
/// is fine, as is any window where some in-domain cell disagrees.
pub fn find_hidden_calls(code: &MemorySegment, stk_base: Addr, conv: CallConvention) -> Vec<HiddenCall> {
    let (Some(lo), Some(hi)) = (code.min_addr(), code.max_addr()) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    let first = lo as i128 - (CALL_LEN as i128 - 1);
    for s in first..=hi as i128 {
        let mut present = Vec::new();
        let mut complete = true;
        for i in 0..CALL_LEN {
            let a = s + i as i128;
            match u64::try_from(a).ok().and_then(|a| code.get(a).map(|w| (a, w))) {
                Some((a, w)) => present.push((a, i, w)),
                None => complete = false,
            }
        }
        if complete || present.is_empty() {
            continue;
        }
        if present.iter().all(|(_, i, w)| matches_part(w, *i, stk_base, conv)) {
            let (addr, index, _) = present[0];
            out.push(HiddenCall { start: s, addr, index });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use RegName::*;

    fn params() -> CallParams {
        CallParams { off_pc: 30, off_sigma: 2, r1: Gen(3), r2: Gen(4) }
    }

    fn place(base: Addr, words: &[Word]) -> MemorySegment {
        words.iter().enumerate().map(|(i, w)| (base + i as u64, *w)).collect()
    }

    #[test]
    fn geometry() {
        let seq = call_sequence(&params(), 1000, CallConvention::default());
        assert_eq!(seq.len(), CALL_LEN);
        assert_eq!(seq[XJMP_INDEX], Instr::Xjmp(Gen(3), Gen(4)));
        assert_eq!(seq[RET_PT_OFFSET], Instr::GetB(Tmp1, Stk));
        assert_eq!(seq[22], Instr::Fail);
        assert_eq!(seq[18], Instr::Cca(Tmp2, Operand::Imm(5)));
    }

    #[test]
    fn recognition_roundtrip() {
        let conv = CallConvention::default();
        let words = expand_scall(&params(), 1000, conv).unwrap();
        let mem = place(40, &words);
        assert_eq!(recognize_call(&mem, 40, 1000, conv), Some(params()));
        assert_eq!(recognize_call(&mem, 41, 1000, conv), None);
        assert_eq!(recognize_call(&mem, 40, 999, conv), None);
        assert_eq!(recognize_call(&mem, 40, 1000, CallConvention::WEAKENED), None);
    }

    #[test]
    fn reserved_registers_rejected() {
        let p = CallParams { r1: Tmp1, ..params() };
        assert_eq!(
            expand_scall(&p, 0, CallConvention::default()),
            Err(CallError::ReservedRegister(Tmp1))
        );
    }

    #[test]
    fn truncated_call_is_hidden() {
        let conv = CallConvention::default();
        let words = expand_scall(&params(), 1000, conv).unwrap();
        let complete = place(0, &words);
        assert!(find_hidden_calls(&complete, 1000, conv).is_empty());
        let cut = place(0, &words[..20]);
        let hits = find_hidden_calls(&cut, 1000, conv);
        assert_eq!(hits, vec![HiddenCall { start: 0, addr: 0, index: 0 }]);
        let tail = place(100, &words[10..]);
        let hits = find_hidden_calls(&tail, 1000, conv);
        assert!(hits.contains(&HiddenCall { start: 90, addr: 100, index: 10 }));
        assert!(find_hidden_calls(&MemorySegment::new(), 1000, conv).is_empty());
    }
}
