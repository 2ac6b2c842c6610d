use super::*;
use crate::asm::callmacro::expand_scall;
use crate::isa::{run, OutcomeKind};
use crate::machine::{enc_instr, Operand, SealCap};
use RegName::*;

const STK_BASE: u64 = 1000;
const CALLER: u64 = 100;
const CALLEE: u64 = 200;

fn enc(i: Instr) -> Word {
    enc_instr(&i).unwrap()
}

/// Caller: one call to the closure in r3/r4, then halt; the seal word
/// `seal(5, 9, 5)` follows the halt. Callee: return immediately.
fn fixture(off_sigma: u64, stack_top: u64) -> (SourceConfig, GlobalConstants) {
    let p = CallParams { off_pc: 27, off_sigma, r1: Gen(3), r2: Gen(4) };
    let mut mem = MemorySegment::new();
    for (i, w) in expand_scall(&p, STK_BASE, CallConvention::default()).unwrap().into_iter().enumerate() {
        mem.insert(CALLER + i as u64, w);
    }
    mem.insert(CALLER + 26, enc(Instr::Halt));
    mem.insert(CALLER + 27, SealCap::new(5, 9, 5).into());
    mem.insert(CALLEE, enc(Instr::Xjmp(RetCode, RetData)));
    mem.insert(300, Word::Int(7));

    let mut regs = RegisterFile::default();
    regs[Pc] = MemCap::new(Permission::RX, Linearity::Normal, CALLER, CALLER + 27, CALLER).into();
    regs[Gen(3)] = Word::sealed(
        1,
        SealableCap::Mem(MemCap::new(Permission::RX, Linearity::Normal, CALLEE, CALLEE, CALLEE)),
    );
    regs[Gen(4)] = Word::sealed(
        1,
        SealableCap::Mem(MemCap::new(Permission::RW, Linearity::Normal, 300, 300, 300)),
    );
    regs[Stk] = StkPtr::new(Permission::RW, STK_BASE, stack_top, stack_top).into();
    let ms_stk = MemorySegment::filled(STK_BASE..=stack_top, Word::Int(0));
    let cfg = SourceConfig::new(mem, regs, vec![], ms_stk).unwrap();
    let gc = GlobalConstants::new(CALLER..CALLER + 28, STK_BASE);
    (cfg, gc)
}

fn rules() -> SourceRules {
    SourceRules::default()
}

#[test]
fn call_at_top_of_stack() {
    let (cfg, gc) = fixture(2, 1009);
    let out = step_source(cfg, &rules(), &gc).running().unwrap();
    assert_eq!(out.frames.len(), 1);
    let frame = &out.frames[0];
    assert_eq!(frame.opc, CALLER + 26);
    assert_eq!(frame.ms, MemorySegment::filled(1009..=1009, Word::Int(42)));
    assert_eq!(out.ms_stk.contiguous_range(), Some((STK_BASE, 1008)));
    assert_eq!(out.reg(Stk), StkPtr::new(Permission::RW, STK_BASE, 1008, 1008).into());
    assert_eq!(out.reg(Pc).as_mem_cap().unwrap().addr, CALLEE);
    assert_eq!(
        out.reg(RetData),
        Word::sealed(7, SealableCap::RetData { base: 1009, end: Bound::Fin(1009) })
    );
    assert_eq!(
        out.reg(RetCode),
        Word::sealed(7, SealableCap::RetCode { base: CALLER, end: Bound::Fin(CALLER + 27), addr: CALLER + 26 })
    );
}

#[test]
fn call_needs_room_below_cursor() {
    let (mut cfg, gc) = fixture(2, 1009);
    cfg.regs[Stk] = StkPtr::new(Permission::RW, STK_BASE, 1009, STK_BASE).into();
    assert_eq!(step_source(cfg, &rules(), &gc), Failed);
}

#[test]
fn return_seal_must_fit_seal_range() {
    let (cfg, gc) = fixture(5, 1009);
    assert_eq!(step_source(cfg, &rules(), &gc), Failed);
}

#[test]
fn round_trip_restores_stack() {
    let (cfg, gc) = fixture(2, 1009);
    let before = cfg.ms_stk.clone();
    let r = run(cfg, &rules(), &gc, 10, true);
    assert_eq!(r.outcome.kind(), OutcomeKind::Halted);
    assert_eq!(r.steps, 3);
    // after call and return, one halt
    let (cfg, gc) = fixture(2, 1009);
    let s1 = step_source(cfg, &rules(), &gc).running().unwrap();
    let s2 = step_source(s1, &rules(), &gc).running().unwrap();
    assert!(s2.frames.is_empty());
    let dom: Vec<_> = s2.ms_stk.domain().collect();
    assert_eq!(dom, before.domain().collect::<Vec<_>>());
    assert_eq!(s2.ms_stk.get(1009), Some(&Word::Int(42)));
    assert_eq!(s2.reg(Stk), StkPtr::new(Permission::RW, STK_BASE, 1009, 1009).into());
    assert_eq!(s2.reg(Pc).as_mem_cap().unwrap().addr, CALLER + 26);
}

#[test]
fn return_consumes_data_token() {
    let (cfg, gc) = fixture(2, 1009);
    let s1 = step_source(cfg, &rules(), &gc).running().unwrap();
    let mut s1 = s1;
    // a copy of the (non-linear) code token survives; the data token cannot be copied
    s1.regs[Gen(5)] = s1.reg(RetCode);
    let s2 = step_source(s1, &rules(), &gc).running().unwrap();
    let is_ret_data = |w: &Word| matches!(w, Word::Cap(c) if matches!(c.inner(), SealableCap::RetData { .. }));
    assert!(!s2.regs.iter().any(|(_, w)| is_ret_data(w)));
    assert!(!s2.mem.iter().chain(s2.ms_stk.iter()).any(|(_, w)| is_ret_data(w)));
    // replaying with the surviving code token and an empty data register fails
    let mut replay = s2;
    replay.mem.insert(CALLER + 26, enc(Instr::Xjmp(Gen(5), RetData)));
    assert_eq!(step_source(replay, &rules(), &gc), Failed);
}

#[test]
fn call_outside_trusted_addresses_runs_raw() {
    let (cfg, _) = fixture(2, 1009);
    let gc = GlobalConstants::new(std::iter::empty(), STK_BASE);
    let out = step_source(cfg, &rules(), &gc).running().unwrap();
    assert!(out.frames.is_empty());
    assert_eq!(out.reg(Tmp1), Word::Int(42));
    let r = run(out, &rules(), &gc, 100, false);
    assert_eq!(r.outcome.kind(), OutcomeKind::Halted);
}

#[test]
fn call_overrunning_pc_bound_steps_singly() {
    let (mut cfg, gc) = fixture(2, 1009);
    cfg.regs[Pc] = MemCap::new(Permission::RX, Linearity::Normal, CALLER, CALLER + 20, CALLER).into();
    let out = step_source(cfg, &rules(), &gc).running().unwrap();
    assert!(out.frames.is_empty());
    assert_eq!(out.reg(Pc).as_mem_cap().unwrap().addr, CALLER + 1);
}

#[test]
fn call_rejects_rtmp1_operand() {
    let (mut cfg, gc) = fixture(2, 1009);
    let p = CallParams { off_pc: 27, off_sigma: 2, r1: Tmp1, r2: Gen(4) };
    for (i, instr) in crate::asm::callmacro::call_sequence(&p, STK_BASE, CallConvention::default())
        .iter()
        .enumerate()
    {
        cfg.mem.insert(CALLER + i as u64, enc(*instr));
    }
    assert_eq!(step_source(cfg, &rules(), &gc), Failed);
}

#[test]
fn stack_pointer_memory_access() {
    let mut mem = MemorySegment::new();
    mem.insert(0, enc(Instr::Store(Stk, Gen(0))));
    mem.insert(1, enc(Instr::Load(Gen(1), Stk)));
    mem.insert(2, enc(Instr::Halt));
    let mut regs = RegisterFile::default();
    regs[Pc] = MemCap::new(Permission::RX, Linearity::Normal, 0, 2, 0).into();
    regs[Stk] = StkPtr::new(Permission::RW, 10, 12, 11).into();
    let lin = MemCap::new(Permission::RW, Linearity::Linear, 50, 60, 50).into();
    regs[Gen(0)] = lin;
    let ms_stk = MemorySegment::filled(10..=12, Word::Int(0));
    let cfg = SourceConfig::new(mem, regs, vec![], ms_stk).unwrap();
    let gc = GlobalConstants::new(std::iter::empty(), 10);
    let s1 = step_source(cfg, &rules(), &gc).running().unwrap();
    assert_eq!(s1.ms_stk.get(11), Some(&lin));
    assert_eq!(s1.reg(Gen(0)), Word::Int(0));
    let mut ro = s1.clone();
    ro.regs[Stk] = StkPtr::new(Permission::R, 10, 12, 11).into();
    assert_eq!(step_source(ro, &rules(), &gc), Failed);
    let s2 = step_source(s1, &rules(), &gc).running().unwrap();
    assert_eq!(s2.reg(Gen(1)), lin);
    assert_eq!(s2.ms_stk.get(11), Some(&Word::Int(0)));
}

#[test]
fn stack_pointer_split_and_splice() {
    let mut mem = MemorySegment::new();
    mem.insert(0, enc(Instr::Split(Gen(1), Gen(2), Stk, Operand::Imm(15))));
    mem.insert(1, enc(Instr::Splice(Gen(3), Gen(1), Gen(2))));
    mem.insert(2, enc(Instr::Halt));
    let mut regs = RegisterFile::default();
    regs[Pc] = MemCap::new(Permission::RX, Linearity::Normal, 0, 2, 0).into();
    regs[Stk] = StkPtr::new(Permission::RW, 10, 20, 20).into();
    let cfg = SourceConfig::new(mem, regs, vec![], MemorySegment::new()).unwrap();
    let gc = GlobalConstants::default();
    let s1 = step_source(cfg, &rules(), &gc).running().unwrap();
    assert_eq!(s1.reg(Stk), Word::Int(0));
    assert_eq!(s1.reg(Gen(1)), StkPtr::new(Permission::RW, 10, 15, 20).into());
    assert_eq!(s1.reg(Gen(2)), StkPtr::new(Permission::RW, 16, 20, 20).into());
    let s2 = step_source(s1, &rules(), &gc).running().unwrap();
    assert_eq!(s2.reg(Gen(3)), StkPtr::new(Permission::RW, 10, 20, 20).into());
}

#[test]
fn constructor_rejects_overlap() {
    let frames = vec![StackFrame { opc: 0, ms: MemorySegment::filled(5..=6, Word::Int(0)) }];
    let r = SourceConfig::new(
        MemorySegment::new(),
        RegisterFile::default(),
        frames,
        MemorySegment::filled(6..=9, Word::Int(0)),
    );
    assert_eq!(r.unwrap_err(), Overlap(6));
}
