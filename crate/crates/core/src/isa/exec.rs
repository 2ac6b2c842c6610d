//! Interpretation of individual instructions.

use crate::machine::{
    dec_perm, enc_lin, enc_perm, enc_type, is_exec, is_linear, lin_cons, lin_cons_perm, non_zero,
    perm_leq, read_allowed, write_allowed, Bound, Capability, GlobalConstants, Instr, Linearity,
    MemCap, Operand, RegName, SealCap, SealableCap, Word,
};

use super::{MachineExtension, MachineState, StepOutcome};

use RegName::Pc;
use StepOutcome::{Failed, Halted, Running};

/// Dispatches `instr` on `cfg`.
pub fn exec_instr<S, E>(cfg: S, instr: &Instr, ext: &E, gc: &GlobalConstants) -> StepOutcome<S>
where
    S: MachineState,
    E: MachineExtension<S>,
{
    match *instr {
        Instr::Fail => Failed,
        Instr::Halt => Halted,
        Instr::Jmp(r) => exec_jmp(cfg, r),
        Instr::Jnz(r, rn) => exec_jnz(cfg, r, rn),
        Instr::GetType(r1, r2) => {
            let t = enc_type(&cfg.reg(r2));
            set_and_advance(cfg, r1, Word::Int(t))
        }
        Instr::GetA(r1, r2) => exec_get(cfg, r1, r2, Field::Addr),
        Instr::GetB(r1, r2) => exec_get(cfg, r1, r2, Field::Base),
        Instr::GetE(r1, r2) => exec_get(cfg, r1, r2, Field::End),
        Instr::GetP(r1, r2) => exec_get(cfg, r1, r2, Field::Perm),
        Instr::GetL(r1, r2) => exec_get(cfg, r1, r2, Field::Lin),
        Instr::Move(r, rn) => exec_move(cfg, r, rn),
        Instr::Store(..)
        | Instr::Load(..)
        | Instr::Cca(..)
        | Instr::Restrict(..)
        | Instr::SetA2B(..)
        | Instr::Split(..)
        | Instr::Splice(..)
            if touches_stack_token(&cfg, instr) =>
        {
            ext.stack_case(cfg, instr, gc)
        }
        Instr::Store(r1, r2) => exec_store(cfg, r1, r2),
        Instr::Load(r1, r2) => exec_load(cfg, r1, r2),
        Instr::Cca(r, rn) => exec_cca(cfg, r, rn),
        Instr::Restrict(r, rn) => exec_restrict(cfg, r, rn),
        Instr::Lt(r, a, b) => exec_arith(cfg, r, a, b, |x, y| Some((x < y) as i128)),
        Instr::Plus(r, a, b) => exec_arith(cfg, r, a, b, i128::checked_add),
        Instr::Minus(r, a, b) => exec_arith(cfg, r, a, b, i128::checked_sub),
        Instr::SetA2B(r) => exec_seta2b(cfg, r),
        Instr::Xjmp(r1, r2) => exec_xjmp(cfg, r1, r2, ext, gc),
        Instr::CSeal(r1, r2) => exec_cseal(cfg, r1, r2),
        Instr::Split(r1, r2, r3, rn) => exec_split(cfg, r1, r2, r3, rn),
        Instr::Splice(r1, r2, r3) => exec_splice(cfg, r1, r2, r3),
    }
}

/// Whether the capability operand of a memory/stack instruction is a stack pointer.
fn touches_stack_token<S: MachineState>(cfg: &S, instr: &Instr) -> bool {
    let is_stk = |r: RegName| cfg.reg(r).as_stk_ptr().is_some();
    match *instr {
        Instr::Store(r, _) | Instr::Cca(r, _) | Instr::Restrict(r, _) | Instr::SetA2B(r) => is_stk(r),
        Instr::Load(_, r) | Instr::Split(_, _, r, _) => is_stk(r),
        Instr::Splice(_, r2, r3) => is_stk(r2) || is_stk(r3),
        _ => false,
    }
}

/// Moves the program counter to the next address. Fails unless pc is a plain
/// memory capability.
pub fn upd_pc_addr<S: MachineState>(mut cfg: S) -> StepOutcome<S> {
    let Some(pc) = cfg.reg(Pc).as_mem_cap().copied() else {
        return Failed;
    };
    let Some(next) = pc.addr.checked_add(1) else {
        return Failed;
    };
    cfg.set_reg(Pc, MemCap { addr: next, ..pc }.into());
    Running(cfg)
}

fn set_and_advance<S: MachineState>(mut cfg: S, r: RegName, w: Word) -> StepOutcome<S> {
    cfg.set_reg(r, w);
    upd_pc_addr(cfg)
}

/// The integer named by a register-or-immediate operand.
pub fn int_operand<S: MachineState>(cfg: &S, rn: Operand) -> Option<i128> {
    match rn {
        Operand::Imm(n) => Some(n),
        Operand::Reg(r) => cfg.reg(r).as_int(),
    }
}

fn to_nat(n: i128) -> Option<u64> {
    u64::try_from(n).ok()
}

/// `a + n` as an address; `None` when the result is not a natural number.
pub(crate) fn offset(a: u64, n: i128) -> Option<u64> {
    to_nat((a as i128).checked_add(n)?)
}

pub fn exec_jmp<S: MachineState>(mut cfg: S, r: RegName) -> StepOutcome<S> {
    let old = cfg.reg(r);
    cfg.set_reg(r, lin_cons(old));
    cfg.set_reg(Pc, old);
    Running(cfg)
}

pub fn exec_jnz<S: MachineState>(cfg: S, r: RegName, rn: Operand) -> StepOutcome<S> {
    let cond = match rn {
        Operand::Imm(n) => n != 0,
        Operand::Reg(x) => non_zero(&cfg.reg(x)),
    };
    if cond {
        exec_jmp(cfg, r)
    } else {
        upd_pc_addr(cfg)
    }
}

#[derive(Clone, Copy)]
enum Field {
    Addr,
    Base,
    End,
    Perm,
    Lin,
}

fn exec_get<S: MachineState>(cfg: S, r1: RegName, r2: RegName, field: Field) -> StepOutcome<S> {
    let w = cfg.reg(r2);
    let v = match field {
        Field::Lin => Some(enc_lin(if is_linear(&w) {
            Linearity::Linear
        } else {
            Linearity::Normal
        })),
        _ => w.as_plain().and_then(|sc| get_field(sc, field)),
    };
    set_and_advance(cfg, r1, Word::Int(v.unwrap_or(-1)))
}

fn get_field(sc: &SealableCap, field: Field) -> Option<i128> {
    let (perm, base, end, cur) = match *sc {
        SealableCap::Mem(c) => (Some(c.perm), c.base, c.end, c.addr),
        SealableCap::Stk(s) => (Some(s.perm), s.base, s.end, s.addr),
        SealableCap::Seal(s) => (None, s.base, s.end, s.cursor),
        SealableCap::RetData { .. } | SealableCap::RetCode { .. } => return None,
    };
    match field {
        Field::Addr => Some(cur as i128),
        Field::Base => Some(base as i128),
        Field::End => Some(end.to_int()),
        Field::Perm => perm.map(enc_perm),
        Field::Lin => unreachable!("linearity is read for every word"),
    }
}

pub fn exec_move<S: MachineState>(mut cfg: S, r: RegName, rn: Operand) -> StepOutcome<S> {
    if r == Pc {
        return Failed;
    }
    match rn {
        Operand::Imm(n) => cfg.set_reg(r, Word::Int(n)),
        Operand::Reg(src) => {
            let old = cfg.reg(src);
            cfg.set_reg(src, lin_cons(old));
            cfg.set_reg(r, old);
        }
    }
    upd_pc_addr(cfg)
}

pub fn exec_store<S: MachineState>(mut cfg: S, r1: RegName, r2: RegName) -> StepOutcome<S> {
    let Some(c) = cfg.reg(r1).as_mem_cap().copied() else {
        return Failed;
    };
    if !write_allowed(c.perm) || !c.within_bounds() || r2 == Pc || !cfg.mem().contains(c.addr) {
        return Failed;
    }
    let w = cfg.reg(r2);
    cfg.set_reg(r2, lin_cons(w));
    cfg.mem_mut().update(c.addr, w);
    upd_pc_addr(cfg)
}

pub fn exec_load<S: MachineState>(mut cfg: S, r1: RegName, r2: RegName) -> StepOutcome<S> {
    let Some(c) = cfg.reg(r2).as_mem_cap().copied() else {
        return Failed;
    };
    if !read_allowed(c.perm) || !c.within_bounds() || r1 == Pc {
        return Failed;
    }
    let Some(&w) = cfg.mem().get(c.addr) else {
        return Failed;
    };
    if !lin_cons_perm(c.perm, &w) {
        return Failed;
    }
    cfg.mem_mut().update(c.addr, lin_cons(w));
    cfg.set_reg(r1, w);
    upd_pc_addr(cfg)
}

pub fn exec_cca<S: MachineState>(cfg: S, r: RegName, rn: Operand) -> StepOutcome<S> {
    let Some(n) = int_operand(&cfg, rn) else {
        return Failed;
    };
    let new = match cfg.reg(r).as_plain() {
        Some(&SealableCap::Mem(c)) if r != Pc => match offset(c.addr, n) {
            Some(a) => Word::from(MemCap { addr: a, ..c }),
            None => return Failed,
        },
        Some(&SealableCap::Seal(s)) => match offset(s.cursor, n) {
            Some(cur) => Word::from(SealCap { cursor: cur, ..s }),
            None => return Failed,
        },
        _ => return Failed,
    };
    set_and_advance(cfg, r, new)
}

pub fn exec_restrict<S: MachineState>(cfg: S, r: RegName, rn: Operand) -> StepOutcome<S> {
    let Some(n) = int_operand(&cfg, rn) else {
        return Failed;
    };
    match cfg.reg(r).as_mem_cap() {
        Some(&c) if r != Pc && perm_leq(dec_perm(n), c.perm) => {
            set_and_advance(cfg, r, MemCap { perm: dec_perm(n), ..c }.into())
        }
        _ => Failed,
    }
}

pub fn exec_arith<S: MachineState>(
    cfg: S,
    r: RegName,
    rn1: Operand,
    rn2: Operand,
    op: impl Fn(i128, i128) -> Option<i128>,
) -> StepOutcome<S> {
    // Results are stored into `r`, which may be pc; upd_pc_addr then fails.
    match (int_operand(&cfg, rn1), int_operand(&cfg, rn2)) {
        (Some(a), Some(b)) => match op(a, b) {
            Some(v) => set_and_advance(cfg, r, Word::Int(v)),
            None => Failed,
        },
        _ => Failed,
    }
}

pub fn exec_seta2b<S: MachineState>(cfg: S, r: RegName) -> StepOutcome<S> {
    let new = match cfg.reg(r).as_plain() {
        Some(&SealableCap::Mem(c)) if r != Pc => Word::from(MemCap { addr: c.base, ..c }),
        Some(&SealableCap::Seal(s)) => Word::from(SealCap { cursor: s.base, ..s }),
        _ => return Failed,
    };
    set_and_advance(cfg, r, new)
}

pub fn exec_xjmp<S, E>(
    mut cfg: S,
    r1: RegName,
    r2: RegName,
    ext: &E,
    gc: &GlobalConstants,
) -> StepOutcome<S>
where
    S: MachineState,
    E: MachineExtension<S>,
{
    let (Word::Cap(Capability::Sealed(s1, c1)), Word::Cap(Capability::Sealed(s2, c2))) =
        (cfg.reg(r1), cfg.reg(r2))
    else {
        return Failed;
    };
    if s1 != s2 {
        return Failed;
    }
    cfg.set_reg(r1, lin_cons(c1.into()));
    cfg.set_reg(r2, lin_cons(c2.into()));
    xjump_result(cfg, c1, c2, ext, gc)
}

/// Installs an unsealed code/data pair. Pairs of return tokens go to the extension.
pub fn xjump_result<S, E>(
    mut cfg: S,
    c1: SealableCap,
    c2: SealableCap,
    ext: &E,
    gc: &GlobalConstants,
) -> StepOutcome<S>
where
    S: MachineState,
    E: MachineExtension<S>,
{
    let ret_code = matches!(c1, SealableCap::RetCode { .. });
    let ret_data = matches!(c2, SealableCap::RetData { .. });
    if !ret_code && !ret_data && !is_exec(&c2) {
        cfg.set_reg(Pc, c1.into());
        cfg.set_reg(RegName::Data, c2.into());
        return Running(cfg);
    }
    ext.xjump_return(cfg, c1, c2, gc)
}

pub fn exec_cseal<S: MachineState>(cfg: S, r1: RegName, r2: RegName) -> StepOutcome<S> {
    let (w1, w2) = (cfg.reg(r1), cfg.reg(r2));
    let (Some(&sc), Some(SealableCap::Seal(seal))) = (w1.as_plain(), w2.as_plain()) else {
        return Failed;
    };
    if !seal.within_bounds() {
        return Failed;
    }
    let sealed = Word::sealed(seal.cursor, sc);
    set_and_advance(cfg, r1, sealed)
}

/// Split point `n` for a range `[b, e]`: `b <= n < e`.
pub(crate) fn split_point(base: u64, end: Bound, n: i128) -> Option<(u64, u64)> {
    let n = to_nat(n)?;
    if base <= n && Bound::Fin(n) < end {
        Some((n, n.checked_add(1)?))
    } else {
        None
    }
}

pub fn exec_split<S: MachineState>(
    mut cfg: S,
    r1: RegName,
    r2: RegName,
    r3: RegName,
    rn: Operand,
) -> StepOutcome<S> {
    let Some(n) = int_operand(&cfg, rn) else {
        return Failed;
    };
    let src = cfg.reg(r3);
    match src.as_plain() {
        Some(&SealableCap::Mem(c)) => {
            if [r1, r2, r3].contains(&Pc) {
                return Failed;
            }
            let Some((lo_end, hi_base)) = split_point(c.base, c.end, n) else {
                return Failed;
            };
            cfg.set_reg(r3, lin_cons(src));
            cfg.set_reg(r1, MemCap { end: Bound::Fin(lo_end), ..c }.into());
            cfg.set_reg(r2, MemCap { base: hi_base, ..c }.into());
        }
        Some(&SealableCap::Seal(s)) => {
            let Some((lo_end, hi_base)) = split_point(s.base, s.end, n) else {
                return Failed;
            };
            cfg.set_reg(r1, SealCap { end: Bound::Fin(lo_end), ..s }.into());
            cfg.set_reg(r2, SealCap { base: hi_base, ..s }.into());
        }
        _ => return Failed,
    }
    upd_pc_addr(cfg)
}

/// Adjacent, nonempty ranges `[b2, e2]` and `[b3, e3]`.
pub(crate) fn spliceable(b2: u64, e2: Bound, b3: u64, e3: Bound) -> bool {
    match e2 {
        Bound::Fin(e2) => e2.checked_add(1) == Some(b3) && b2 <= e2 && Bound::Fin(b3) <= e3,
        Bound::Inf => false,
    }
}

pub fn exec_splice<S: MachineState>(mut cfg: S, r1: RegName, r2: RegName, r3: RegName) -> StepOutcome<S> {
    let (w2, w3) = (cfg.reg(r2), cfg.reg(r3));
    match (w2.as_plain(), w3.as_plain()) {
        (Some(&SealableCap::Mem(c2)), Some(&SealableCap::Mem(c3))) => {
            if [r1, r2, r3].contains(&Pc)
                || c2.perm != c3.perm
                || c2.lin != c3.lin
                || !spliceable(c2.base, c2.end, c3.base, c3.end)
            {
                return Failed;
            }
            cfg.set_reg(r2, lin_cons(w2));
            cfg.set_reg(r3, lin_cons(w3));
            cfg.set_reg(r1, MemCap { base: c2.base, ..c3 }.into());
        }
        (Some(&SealableCap::Seal(s2)), Some(&SealableCap::Seal(s3))) => {
            if !spliceable(s2.base, s2.end, s3.base, s3.end) {
                return Failed;
            }
            cfg.set_reg(r1, SealCap { base: s2.base, ..s3 }.into());
        }
        _ => return Failed,
    }
    upd_pc_addr(cfg)
}
