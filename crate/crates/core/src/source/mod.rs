//! The source machine: a built-in stack, stack pointer and return tokens, and
//! calls executed as a single step inside trusted code.

use crate::asm::callmacro::{recognize_call, CallConvention, CALL_LEN};
use crate::isa::{self, MachineExtension, MachineKind, MachineState, StepOutcome};
use crate::machine::{
    dec_perm, is_exec, lin_cons, lin_cons_perm, perm_leq, read_allowed, write_allowed, Addr,
    Bound, Capability, GlobalConstants, Instr, Linearity, MemCap, MemorySegment, Overlap,
    Permission, RegName, RegisterFile, SealableCap, StkPtr, Word,
};

pub use crate::asm::callmacro::CallParams;

use RegName::{Pc, Stk, Tmp1, Tmp2};
use StepOutcome::{Failed, Running};

/// A pending return: the return address and the caller's private stack.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct StackFrame {
    pub opc: Addr,
    pub ms: MemorySegment,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct SourceConfig {
    pub mem: MemorySegment,
    pub regs: RegisterFile,
    /// Frame stack; the last element is the most recent call.
    pub frames: Vec<StackFrame>,
    /// Free part of the stack.
    pub ms_stk: MemorySegment,
}

impl SourceConfig {
    /// Checks that program memory, free stack and frames are pairwise disjoint.
    pub fn new(
        mem: MemorySegment,
        regs: RegisterFile,
        frames: Vec<StackFrame>,
        ms_stk: MemorySegment,
    ) -> Result<Self, Overlap> {
        let cfg = SourceConfig { mem, regs, frames, ms_stk };
        cfg.check_disjoint()?;
        Ok(cfg)
    }

    pub fn check_disjoint(&self) -> Result<(), Overlap> {
        let mut all = self.mem.clone();
        all.absorb(self.ms_stk.clone())?;
        for f in &self.frames {
            all.absorb(f.ms.clone())?;
        }
        Ok(())
    }

    pub fn top_frame(&self) -> Option<&StackFrame> {
        self.frames.last()
    }
}

impl MachineState for SourceConfig {
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

/// Source-machine rules, parameterized by the call sequence they recognize.
#[derive(Clone, Copy, Debug, Default)]
pub struct SourceRules {
    pub convention: CallConvention,
}

/// Parameters of the call starting at `a`, if memory holds one there.
pub fn call_cond(cfg: &SourceConfig, a: Addr, gc: &GlobalConstants, conv: CallConvention) -> Option<CallParams> {
    recognize_call(&cfg.mem, a, gc.stk_base, conv)
}

pub fn step_source(cfg: SourceConfig, rules: &SourceRules, gc: &GlobalConstants) -> StepOutcome<SourceConfig> {
    isa::step(cfg, rules, gc)
}

impl MachineExtension<SourceConfig> for SourceRules {
    type Call = CallParams;

    fn kind(&self) -> MachineKind {
        MachineKind::Source
    }

    fn recognize_call(&self, cfg: &SourceConfig, pc: &MemCap, gc: &GlobalConstants) -> Option<CallParams> {
        let last = pc.addr.checked_add(CALL_LEN as u64 - 1)?;
        let in_pc = pc.base <= pc.addr && Bound::Fin(last) <= pc.end;
        let trusted = (pc.addr..=last).all(|a| gc.ta.contains(&a));
        if !(in_pc && trusted) {
            return None;
        }
        call_cond(cfg, pc.addr, gc, self.convention)
    }

    fn exec_call(&self, cfg: SourceConfig, p: CallParams, gc: &GlobalConstants) -> StepOutcome<SourceConfig> {
        exec_call(cfg, &p, gc, self)
    }

    fn stack_case(&self, cfg: SourceConfig, instr: &Instr, _gc: &GlobalConstants) -> StepOutcome<SourceConfig> {
        exec_stack_instr(cfg, instr)
    }

    fn xjump_return(
        &self,
        cfg: SourceConfig,
        c1: SealableCap,
        c2: SealableCap,
        gc: &GlobalConstants,
    ) -> StepOutcome<SourceConfig> {
        xjump_return(cfg, c1, c2, gc)
    }
}

/// The call as one step: split off the private stack, push a frame, seal
/// return tokens and jump to the callee.
pub fn exec_call(
    mut cfg: SourceConfig,
    p: &CallParams,
    gc: &GlobalConstants,
    rules: &SourceRules,
) -> StepOutcome<SourceConfig> {
    if p.r1 == Tmp1 || p.r2 == Tmp1 {
        return Failed;
    }
    let (w1, w2) = (cfg.reg(p.r1), cfg.reg(p.r2));
    let (Word::Cap(Capability::Sealed(s1, c1)), Word::Cap(Capability::Sealed(s2, c2))) = (w1, w2) else {
        return Failed;
    };
    if s1 != s2 || is_exec(&c2) {
        return Failed;
    }
    let Some(&StkPtr { perm: Permission::RW, base: b_stk, end: Bound::Fin(e_stk), addr: a_stk }) =
        cfg.reg(Stk).as_stk_ptr()
    else {
        return Failed;
    };
    if !(b_stk < a_stk && a_stk <= e_stk) {
        return Failed;
    }
    let Some(pc) = cfg.reg(Pc).as_mem_cap().copied() else {
        return Failed;
    };
    let (Some(seal_at), Some(opc)) = (pc.addr.checked_add(p.off_pc), pc.addr.checked_add(CALL_LEN as u64)) else {
        return Failed;
    };
    if !(pc.base <= seal_at && pc.end.contains(seal_at)) {
        return Failed;
    }
    let Some(SealableCap::Seal(seal)) = cfg.mem.get(seal_at).and_then(Word::as_plain).copied() else {
        return Failed;
    };
    let Some(sigma) = seal.cursor.checked_add(p.off_sigma) else {
        return Failed;
    };
    if !(seal.base <= sigma && seal.end.contains(sigma)) {
        return Failed;
    }

    let mut priv_stk = cfg.ms_stk.split_off_range(a_stk..=e_stk);
    priv_stk.insert(a_stk, Word::Int(42));
    cfg.frames.push(StackFrame { opc, ms: priv_stk });

    cfg.set_reg(p.r1, lin_cons(w1));
    cfg.set_reg(p.r2, lin_cons(w2));
    cfg.set_reg(Stk, StkPtr::new(Permission::RW, b_stk, a_stk - 1, a_stk - 1).into());
    cfg.set_reg(
        RegName::RetCode,
        Word::sealed(sigma, SealableCap::RetCode { base: pc.base, end: pc.end, addr: opc }),
    );
    cfg.set_reg(
        RegName::RetData,
        Word::sealed(sigma, SealableCap::RetData { base: a_stk, end: Bound::Fin(e_stk) }),
    );
    cfg.set_reg(Tmp1, Word::Int(0));
    isa::xjump_result(cfg, c1, c2, rules, gc)
}

/// Return through a pair of return tokens: check that the callee hands back
/// the stack adjacent to the caller's private stack, then restore it.
pub fn xjump_return(
    mut cfg: SourceConfig,
    c1: SealableCap,
    c2: SealableCap,
    gc: &GlobalConstants,
) -> StepOutcome<SourceConfig> {
    let (
        SealableCap::RetCode { base: b, end: e, addr: a },
        SealableCap::RetData { base: a_stk, end: Bound::Fin(e_priv) },
    ) = (c1, c2)
    else {
        return Failed;
    };
    let Some(&StkPtr { perm: Permission::RW, base, end: Bound::Fin(e_stk), .. }) = cfg.reg(Stk).as_stk_ptr()
    else {
        return Failed;
    };
    if base != gc.stk_base || gc.stk_base > e_stk || e_stk.checked_add(1) != Some(a_stk) {
        return Failed;
    }
    let Some(frame) = cfg.frames.last() else {
        return Failed;
    };
    if frame.opc != a || frame.ms.contiguous_range() != Some((a_stk, e_priv)) {
        return Failed;
    }
    let frame = cfg.frames.pop().expect("checked above");
    if cfg.ms_stk.absorb(frame.ms).is_err() {
        return Failed;
    }
    cfg.set_reg(Pc, MemCap::new(Permission::RX, Linearity::Normal, b, e, frame.opc).into());
    cfg.set_reg(RegName::Data, Word::Int(0));
    cfg.set_reg(Stk, StkPtr::new(Permission::RW, gc.stk_base, e_priv, a_stk).into());
    cfg.set_reg(Tmp1, Word::Int(0));
    cfg.set_reg(Tmp2, Word::Int(0));
    Running(cfg)
}

/// Instruction cases whose capability operand is a stack pointer.
pub fn exec_stack_instr(mut cfg: SourceConfig, instr: &Instr) -> StepOutcome<SourceConfig> {
    let stk = |cfg: &SourceConfig, r: RegName| cfg.reg(r).as_stk_ptr().copied();
    match *instr {
        Instr::Store(r1, r2) => {
            let Some(s) = stk(&cfg, r1) else { return Failed };
            if !write_allowed(s.perm) || !s.within_bounds() || r2 == Pc || !cfg.ms_stk.contains(s.addr) {
                return Failed;
            }
            let w = cfg.reg(r2);
            cfg.set_reg(r2, lin_cons(w));
            cfg.ms_stk.update(s.addr, w);
        }
        Instr::Load(r1, r2) => {
            let Some(s) = stk(&cfg, r2) else { return Failed };
            if !read_allowed(s.perm) || !s.within_bounds() || r1 == Pc {
                return Failed;
            }
            let Some(&w) = cfg.ms_stk.get(s.addr) else { return Failed };
            if !lin_cons_perm(s.perm, &w) {
                return Failed;
            }
            cfg.ms_stk.update(s.addr, lin_cons(w));
            cfg.set_reg(r1, w);
        }
        Instr::Cca(r, rn) => {
            let (Some(s), Some(n)) = (stk(&cfg, r), isa::int_operand(&cfg, rn)) else { return Failed };
            let Some(addr) = isa::offset(s.addr, n) else { return Failed };
            cfg.set_reg(r, StkPtr { addr, ..s }.into());
        }
        Instr::Restrict(r, rn) => {
            let (Some(s), Some(n)) = (stk(&cfg, r), isa::int_operand(&cfg, rn)) else { return Failed };
            if !perm_leq(dec_perm(n), s.perm) {
                return Failed;
            }
            cfg.set_reg(r, StkPtr { perm: dec_perm(n), ..s }.into());
        }
        Instr::SetA2B(r) => {
            let Some(s) = stk(&cfg, r) else { return Failed };
            cfg.set_reg(r, StkPtr { addr: s.base, ..s }.into());
        }
        Instr::Split(r1, r2, r3, rn) => {
            let (Some(s), Some(n)) = (stk(&cfg, r3), isa::int_operand(&cfg, rn)) else { return Failed };
            let Some((lo_end, hi_base)) = isa::split_point(s.base, s.end, n) else { return Failed };
            cfg.set_reg(r3, Word::Int(0));
            cfg.set_reg(r1, StkPtr { end: Bound::Fin(lo_end), ..s }.into());
            cfg.set_reg(r2, StkPtr { base: hi_base, ..s }.into());
        }
        Instr::Splice(r1, r2, r3) => {
            let (Some(s2), Some(s3)) = (stk(&cfg, r2), stk(&cfg, r3)) else { return Failed };
            if s2.perm != s3.perm || !isa::spliceable(s2.base, s2.end, s3.base, s3.end) {
                return Failed;
            }
            cfg.set_reg(r2, Word::Int(0));
            cfg.set_reg(r3, Word::Int(0));
            cfg.set_reg(r1, StkPtr { base: s2.base, ..s3 }.into());
        }
        _ => return Failed,
    }
    isa::upd_pc_addr(cfg)
}

#[cfg(test)]
mod tests;
