//! Acceptance criteria 1-9, one PASS/FAIL line each.
//!
//! Expected values come from oracles written here: the documented encoding
//! layout, the permission order's Hasse diagram, direct search over call
//! parameters, and hand-counted call geometry.

use std::collections::BTreeSet;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use capcall::asm::callmacro::{
    call_sequence, expand_scall, find_hidden_calls, recognize_call, CallConvention, CallParams, CALL_LEN,
    RET_PT_OFFSET, XJMP_INDEX,
};
use capcall::asm::{assemble, AsmConfig};
use capcall::component::validate_component;
use capcall::harness::fixtures::{self, BROKEN, STK_BASE, STK_END, WELL_BEHAVED};
use capcall::harness::scenarios;
use capcall::harness::{run_diff, Outcome, RunOptions};
use capcall::isa::{exec_instr, Action, StepOutcome, TargetConfig, TargetRules};
use capcall::machine::{
    dec_instr, dec_perm, enc_instr, enc_perm, perm_leq, read_allowed, write_allowed, Bound, GlobalConstants, Instr,
    Linearity, MemCap, MemorySegment, Operand, Permission, RegName, SealCap, StkPtr, Word,
};
use capcall::source::{SourceConfig, SourceRules};

const FUZZ: usize = 10_000;

// ---- encoding layout restated: opcode digit in radix 23, then operands
// (register slots radix 23, register-or-immediate slots radix 2^33)

const N_OPCODES: i128 = 23;
const N_REGS: i128 = 23;
const RN: i128 = 1 << 33;

#[derive(Clone, Copy, PartialEq)]
enum S {
    R,
    N,
}

fn slots(op: usize) -> &'static [S] {
    use S::*;
    const T: [&[S]; 23] = [
        &[],
        &[],
        &[R],
        &[R, N],
        &[R, R],
        &[R, R],
        &[R, R],
        &[R, R],
        &[R, R],
        &[R, R],
        &[R, N],
        &[R, R],
        &[R, R],
        &[R, N],
        &[R, N],
        &[R, N, N],
        &[R, N, N],
        &[R, N, N],
        &[R],
        &[R, R],
        &[R, R],
        &[R, R, R, N],
        &[R, R, R],
    ];
    T[op]
}

fn reg(rng: &mut ChaCha8Rng) -> RegName {
    RegName::from_index(rng.gen_range(0..N_REGS as usize)).unwrap()
}

fn imm(rng: &mut ChaCha8Rng) -> i128 {
    match rng.gen_range(0..4) {
        0 => -(1 << 31),
        1 => (1 << 31) - 1,
        _ => rng.gen_range(-(1i128 << 31)..(1i128 << 31)),
    }
}

fn random_instr(rng: &mut ChaCha8Rng) -> Instr {
    let op = rng.gen_range(0..N_OPCODES as usize);
    let ops: Vec<Operand> = slots(op)
        .iter()
        .map(|s| match s {
            S::R => Operand::Reg(reg(rng)),
            S::N if rng.gen_bool(0.5) => Operand::Reg(reg(rng)),
            S::N => Operand::Imm(imm(rng)),
        })
        .collect();
    Instr::from_parts(op, &ops).expect("arity table matches")
}

fn random_perm(rng: &mut ChaCha8Rng) -> Permission {
    Permission::ALL[rng.gen_range(0..5)]
}

fn random_cap(rng: &mut ChaCha8Rng) -> Word {
    let b = rng.gen_range(0..1_000_000u64);
    let e = b + rng.gen_range(0..1000u64);
    let a = rng.gen_range(0..2_000_000u64);
    let lin = if rng.gen_bool(0.5) { Linearity::Linear } else { Linearity::Normal };
    let w: Word = match rng.gen_range(0..4) {
        0 => MemCap::new(random_perm(rng), lin, b, e, a).into(),
        1 => SealCap::new(b, e, a).into(),
        2 => StkPtr::new(random_perm(rng), b, e, a).into(),
        _ => MemCap::new(random_perm(rng), lin, b, Bound::Inf, a).into(),
    };
    if rng.gen_bool(0.3) {
        match w {
            Word::Cap(c) => Word::sealed(rng.gen_range(0..100), *c.inner()),
            Word::Int(_) => unreachable!(),
        }
    } else {
        w
    }
}

/// Integers outside the image, built from the layout: negatives, a stray
/// digit above the last operand, or an out-of-range register digit.
fn non_image(rng: &mut ChaCha8Rng) -> i128 {
    loop {
        let i = random_instr(rng);
        let Word::Int(n) = enc_instr(&i).unwrap() else { unreachable!() };
        let op = i.opcode();
        let width: i128 = slots(op).iter().map(|s| if *s == S::R { N_REGS } else { RN }).product();
        match rng.gen_range(0..3) {
            0 => return -rng.gen_range(1..i128::MAX / 2),
            1 => return n + N_OPCODES * width * rng.gen_range(1..1_000_000),
            _ => {
                // rewrite the first register-or-immediate digit to an even
                // digit naming a register past the last one
                let Some(pos) = slots(op).iter().position(|s| *s == S::N) else { continue };
                let below: i128 = slots(op)[..pos].iter().map(|s| if *s == S::R { N_REGS } else { RN }).product();
                let unit = N_OPCODES * below;
                let digit = (n / unit) % RN;
                let bad = 2 * rng.gen_range(N_REGS..(1i128 << 32));
                return n + (bad - digit) * unit;
            }
        }
    }
}

fn criterion_1() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..FUZZ {
        let i = random_instr(&mut rng);
        let w = enc_instr(&i).map_err(|e| format!("{i}: {e}"))?;
        if dec_instr(&w) != i {
            return Err(format!("dec(enc({i})) = {}", dec_instr(&w)));
        }
    }
    for _ in 0..FUZZ {
        let w = random_cap(&mut rng);
        if dec_instr(&w) != Instr::Fail {
            return Err(format!("{w} decodes to {}", dec_instr(&w)));
        }
        let n = non_image(&mut rng);
        if dec_instr(&Word::Int(n)) != Instr::Fail {
            return Err(format!("non-image {n} decodes to {}", dec_instr(&Word::Int(n))));
        }
    }
    for p in Permission::ALL {
        if dec_perm(enc_perm(p)) != p {
            return Err(format!("dec_perm(enc_perm({p:?}))"));
        }
    }
    Ok(format!("{FUZZ} instructions, {FUZZ} capabilities, {FUZZ} non-image integers, 5 permissions"))
}

fn criterion_2() -> Result<String, String> {
    use Permission::*;
    // Hasse diagram, closed reflexively and transitively
    let idx = |p: Permission| Permission::ALL.iter().position(|q| *q == p).unwrap();
    let mut leq = [[false; 5]; 5];
    for (a, b) in [(P0, R), (R, RW), (R, RX), (RW, RWX), (RX, RWX)] {
        leq[idx(a)][idx(b)] = true;
    }
    for (i, row) in leq.iter_mut().enumerate() {
        row[i] = true;
    }
    for k in 0..5 {
        for i in 0..5 {
            for j in 0..5 {
                if leq[i][k] && leq[k][j] {
                    leq[i][j] = true;
                }
            }
        }
    }
    let all = Permission::ALL;
    for p in all {
        for q in all {
            if perm_leq(p, q) != leq[idx(p)][idx(q)] {
                return Err(format!("perm_leq({p:?}, {q:?})"));
            }
            if perm_leq(p, q) && perm_leq(q, p) && p != q {
                return Err(format!("antisymmetry fails for {p:?}, {q:?}"));
            }
            for r in all {
                if perm_leq(p, q) && perm_leq(q, r) && !perm_leq(p, r) {
                    return Err(format!("transitivity fails for {p:?}, {q:?}, {r:?}"));
                }
            }
            if perm_leq(p, q) && (read_allowed(p) && !read_allowed(q) || write_allowed(p) && !write_allowed(q)) {
                return Err(format!("access not upward closed from {p:?} to {q:?}"));
            }
        }
        if !perm_leq(p, p) {
            return Err(format!("reflexivity fails for {p:?}"));
        }
    }
    let reads: BTreeSet<_> = all.into_iter().filter(|p| read_allowed(*p)).collect();
    let writes: BTreeSet<_> = all.into_iter().filter(|p| write_allowed(*p)).collect();
    if reads != [R, RW, RX, RWX].into() || writes != [RW, RWX].into() {
        return Err("read/write sets differ from their definitions".into());
    }
    Ok("125 triples".into())
}

fn pc() -> Word {
    MemCap::new(Permission::RX, Linearity::Normal, 0, 10, 0).into()
}

/// Split `r2` at `n` into r0/r1, splice them into r3. Returns the final r3.
fn split_splice_target(w: Word, n: i128) -> Result<Word, String> {
    let gc = GlobalConstants::default();
    let mut cfg = TargetConfig::new(MemorySegment::new());
    cfg.regs[RegName::Pc] = pc();
    let (r0, r1, r2, r3) = (RegName::Gen(0), RegName::Gen(1), RegName::Gen(2), RegName::Gen(3));
    cfg.regs[r2] = w;
    let StepOutcome::Running(cfg) = exec_instr(cfg, &Instr::Split(r0, r1, r2, Operand::Imm(n)), &TargetRules, &gc)
    else {
        return Err(format!("split of {w} at {n} failed"));
    };
    match exec_instr(cfg, &Instr::Splice(r3, r0, r1), &TargetRules, &gc) {
        StepOutcome::Running(c) => Ok(c.regs[r3]),
        _ => Err(format!("splice after split of {w} at {n} failed")),
    }
}

fn split_splice_source(s: StkPtr, n: i128) -> Result<Word, String> {
    let gc = GlobalConstants::default();
    let mut cfg = SourceConfig::default();
    cfg.regs[RegName::Pc] = pc();
    cfg.regs[RegName::Gen(2)] = s.into();
    let rules = SourceRules::default();
    let (r0, r1, r2, r3) = (RegName::Gen(0), RegName::Gen(1), RegName::Gen(2), RegName::Gen(3));
    let StepOutcome::Running(cfg) = exec_instr(cfg, &Instr::Split(r0, r1, r2, Operand::Imm(n)), &rules, &gc) else {
        return Err(format!("split of stack pointer at {n} failed"));
    };
    match exec_instr(cfg, &Instr::Splice(r3, r0, r1), &rules, &gc) {
        StepOutcome::Running(c) => Ok(c.regs[r3]),
        _ => Err(format!("splice of stack pointer split at {n} failed")),
    }
}

fn splice_fails(w2: Word, w3: Word, stack: bool) -> bool {
    let gc = GlobalConstants::default();
    let (r0, r1, r3) = (RegName::Gen(0), RegName::Gen(1), RegName::Gen(3));
    let i = Instr::Splice(r3, r0, r1);
    if stack {
        let mut cfg = SourceConfig::default();
        cfg.regs[RegName::Pc] = pc();
        cfg.regs[r0] = w2;
        cfg.regs[r1] = w3;
        matches!(exec_instr(cfg, &i, &SourceRules::default(), &gc), StepOutcome::Failed)
    } else {
        let mut cfg = TargetConfig::new(MemorySegment::new());
        cfg.regs[RegName::Pc] = pc();
        cfg.regs[r0] = w2;
        cfg.regs[r1] = w3;
        matches!(exec_instr(cfg, &i, &TargetRules, &gc), StepOutcome::Failed)
    }
}

fn criterion_3() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for k in 0..FUZZ {
        let b = rng.gen_range(0..1_000_000u64);
        let e = b + rng.gen_range(1..1000u64);
        let n = rng.gen_range(b..e) as i128;
        let a = rng.gen_range(0..2_000_000u64);
        let end = if k % 10 == 0 { Bound::Inf } else { Bound::Fin(e) };
        match k % 3 {
            0 => {
                let lin = if rng.gen_bool(0.5) { Linearity::Linear } else { Linearity::Normal };
                let c = MemCap::new(random_perm(&mut rng), lin, b, end, a);
                let got = split_splice_target(c.into(), n)?;
                if got != Word::from(c) {
                    return Err(format!("{c:?} split at {n} and spliced gives {got}"));
                }
            }
            1 => {
                let s = SealCap::new(b, end, a);
                let got = split_splice_target(s.into(), n)?;
                if got != Word::from(s) {
                    return Err(format!("{s:?} split at {n} and spliced gives {got}"));
                }
            }
            _ => {
                let s = StkPtr::new(random_perm(&mut rng), b, end, a);
                let got = split_splice_source(s, n)?;
                if got != Word::from(s) {
                    return Err(format!("{s:?} split at {n} and spliced gives {got}"));
                }
            }
        }
        // a gap, an overlap, or an empty side
        let b = b + 1;
        let (b2, e2, b3, e3) = match rng.gen_range(0..4) {
            0 => (b, e, e + rng.gen_range(2..50), e + 100),
            1 => (b, e, rng.gen_range(b..=e), e + 100),
            2 => (b, b - 1, b, e),
            _ => (b, e, e + 1, e),
        };
        let perm = random_perm(&mut rng);
        let pairs: [(Word, Word, bool); 3] = [
            (
                MemCap::new(perm, Linearity::Normal, b2, e2, b2).into(),
                MemCap::new(perm, Linearity::Normal, b3, e3, b3).into(),
                false,
            ),
            (SealCap::new(b2, e2, b2).into(), SealCap::new(b3, e3, b3).into(), false),
            (StkPtr::new(perm, b2, e2, b2).into(), StkPtr::new(perm, b3, e3, b3).into(), true),
        ];
        for (w2, w3, stack) in pairs {
            if !splice_fails(w2, w3, stack) {
                return Err(format!("splice of {w2} and {w3} succeeded"));
            }
        }
    }
    Ok(format!("{FUZZ} split/splice pairs and {FUZZ} bad splices"))
}

fn criterion_4() -> Result<String, String> {
    let mut steps = 0;
    for f in WELL_BEHAVED {
        let (t, c) = f.assemble().map_err(|e| e.to_string())?;
        let opts = RunOptions { fuel: 10_000, trace: false, paranoid: true };
        let d = run_diff(&t, &c, STK_BASE, STK_END, CallConvention::default(), &opts).map_err(|e| e.to_string())?;
        for r in [&d.source, &d.target] {
            if let Some((i, v)) = r.violations.first() {
                return Err(format!("{} on {} at step {i}: {v}", f.name, r.machine));
            }
            steps += r.steps;
        }
    }
    for s in scenarios::SCENARIOS {
        let d = s
            .run(CallConvention::default(), &RunOptions { paranoid: true, ..Default::default() })
            .map_err(|e| e.to_string())?;
        for r in [&d.source, &d.target] {
            if let Some((i, v)) = r.violations.first() {
                return Err(format!("{} on {} at step {i}: {v}", s.name, r.machine));
            }
            steps += r.steps;
        }
    }
    Ok(format!("{steps} checked states"))
}

/// Parameters of a window, read off its own cells where present; the
/// definition of a hidden call asks whether some call sequence agrees with
/// every present cell, and only cells 6, 8 and 14 depend on the parameters.
fn window_is_hidden(seg: &MemorySegment, s: i128) -> bool {
    let cell = |i: usize| u64::try_from(s + i as i128).ok().and_then(|a| seg.get(a).copied());
    let present: Vec<usize> = (0..CALL_LEN).filter(|&i| cell(i).is_some()).collect();
    if present.is_empty() || present.len() == CALL_LEN {
        return false;
    }
    let mut p = CallParams { off_pc: 5, off_sigma: 0, r1: RegName::Gen(0), r2: RegName::Gen(1) };
    if let Some(w) = cell(6) {
        match dec_instr(&w) {
            Instr::Cca(RegName::Tmp1, Operand::Imm(k)) if k + 5 >= 0 => p.off_pc = (k + 5) as u64,
            _ => return false,
        }
    }
    if let Some(w) = cell(8) {
        match dec_instr(&w) {
            Instr::Cca(RegName::Tmp1, Operand::Imm(k)) if k >= 0 => p.off_sigma = k as u64,
            _ => return false,
        }
    }
    if let Some(w) = cell(14) {
        match dec_instr(&w) {
            Instr::Xjmp(a, b) => (p.r1, p.r2) = (a, b),
            _ => return false,
        }
    }
    let seq = call_sequence(&p, STK_BASE, CallConvention::default());
    present.iter().all(|&i| enc_instr(&seq[i]).ok() == cell(i))
}

fn random_params(rng: &mut ChaCha8Rng) -> CallParams {
    CallParams {
        off_pc: [5, 27, 30, 41][rng.gen_range(0..4)],
        off_sigma: rng.gen_range(0..3),
        r1: RegName::Gen(rng.gen_range(0..4)),
        r2: RegName::Gen(rng.gen_range(0..4)),
    }
}

fn criterion_5() -> Result<String, String> {
    let conv = CallConvention::default();
    let p = CallParams { off_pc: 30, off_sigma: 2, r1: RegName::Gen(3), r2: RegName::Gen(4) };
    let words = expand_scall(&p, STK_BASE, conv).map_err(|e| e.to_string())?;
    if words.len() != 26 {
        return Err(format!("call has {} cells", words.len()));
    }
    let at = |i: usize| dec_instr(&words[i]);
    if (XJMP_INDEX, RET_PT_OFFSET) != (14, 15)
        || at(14) != Instr::Xjmp(p.r1, p.r2)
        || at(15) != Instr::GetB(RegName::Tmp1, RegName::Stk)
        || at(22) != Instr::Fail
    {
        return Err("xjmp, return code or fail not where expected".into());
    }
    // assemble a call and recognize it
    let a = assemble(".code 10\ncall 30 2 r3 r4\n", &AsmConfig { pads: false, ..AsmConfig::with_stk_base(STK_BASE) })
        .map_err(|e| e.to_string())?;
    if recognize_call(&a.memory(), 10, STK_BASE, conv) != Some(p) {
        return Err("assembled call not recognized with its parameters".into());
    }
    let base: MemorySegment = words.iter().enumerate().map(|(i, w)| (100 + i as u64, *w)).collect();
    for (i, w) in words.iter().enumerate() {
        let Word::Int(n) = *w else { unreachable!() };
        for bad in [Word::Int(n + 1), SealCap::new(0, 1, 0).into()] {
            let mut m = base.clone();
            m.insert(100 + i as u64, bad);
            if recognize_call(&m, 100, STK_BASE, conv).is_some() {
                return Err(format!("changing cell {i} to {bad} still recognizes a call"));
            }
        }
    }
    // hidden calls in random 40-cell segments against direct evaluation
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut flagged = 0;
    for _ in 0..300 {
        let lo = 200u64;
        let mut seg = MemorySegment::new();
        for k in 0..40u64 {
            let w = if rng.gen_bool(0.5) {
                let q = random_params(&mut rng);
                enc_instr(&call_sequence(&q, STK_BASE, conv)[rng.gen_range(0..CALL_LEN)]).unwrap()
            } else {
                enc_instr(&random_instr(&mut rng)).unwrap()
            };
            seg.insert(lo + k, w);
        }
        for _ in 0..rng.gen_range(1..4) {
            let q = random_params(&mut rng);
            let cells = expand_scall(&q, STK_BASE, conv).unwrap();
            let start = lo as i128 + rng.gen_range(-30i128..45);
            for (i, w) in cells.into_iter().enumerate() {
                let a = start + i as i128;
                if (lo as i128..lo as i128 + 40).contains(&a) {
                    seg.insert(a as u64, w);
                }
            }
        }
        let want: BTreeSet<i128> =
            (lo as i128 - 25..lo as i128 + 40).filter(|&s| window_is_hidden(&seg, s)).collect();
        let got: BTreeSet<i128> = find_hidden_calls(&seg, STK_BASE, conv).iter().map(|h| h.start).collect();
        if want != got {
            return Err(format!("hidden calls differ: expected {want:?}, found {got:?}"));
        }
        flagged += got.len();
    }
    Ok(format!("26 perturbations x 2, 300 segments, {flagged} hidden fragments"))
}

fn criterion_6() -> Result<String, String> {
    let f = fixtures::well_behaved("roundtrip").ok_or("roundtrip fixture missing")?;
    let (t, c) = f.assemble().map_err(|e| e.to_string())?;
    let d = run_diff(&t, &c, STK_BASE, STK_END, CallConvention::default(), &RunOptions::default())
        .map_err(|e| e.to_string())?;
    if (d.source.outcome, d.target.outcome) != (Outcome::Halted, Outcome::Halted) {
        return Err(format!("{} / {}", d.source.outcome, d.target.outcome));
    }
    let calls: Vec<usize> =
        d.source.trace.iter().enumerate().filter(|(_, r)| matches!(r.action, Action::Call(_))).map(|(i, _)| i).collect();
    if calls.len() != 1 {
        return Err(format!("{} call steps on the source", calls.len()));
    }
    let start = d.source.trace[calls[0]].pc_addr.ok_or("call without pc")?;
    // target: the 15 cells up to the xjmp in a row, then after the callback
    // the xjmp back plus cells 15..=21 and 23..=25
    let tr: Vec<Option<u64>> = d.target.trace.iter().map(|r| r.pc_addr).collect();
    let first = tr.iter().position(|a| *a == Some(start)).ok_or("target never reaches the call")?;
    let prologue: Vec<Option<u64>> = (0..15).map(|i| Some(start + i)).collect();
    if tr[first..first + 15] != prologue[..] {
        return Err("target prologue is not 15 consecutive cells".into());
    }
    let ret = tr.iter().position(|a| *a == Some(start + 15)).ok_or("target never returns")?;
    let mut epilogue: Vec<Option<u64>> = (15..=21).chain(23..=25).map(|i| Some(start + i)).collect();
    epilogue.insert(0, tr[ret - 1]);
    if tr[ret - 1..ret + 10] != epilogue[..] || !matches!(d.target.trace[ret - 1].action, Action::Instr(Instr::Xjmp(..))) {
        return Err("target return is not xjmp followed by the 10 return cells".into());
    }
    // source: one step for the call, one for the return xjmp, the rest shared
    let callback = ret - 1 - (first + 15);
    let src_ret = calls[0] + 1 + callback;
    if !matches!(d.source.trace[src_ret].action, Action::Instr(Instr::Xjmp(..))) {
        return Err("source return is not a single xjmp".into());
    }
    if d.target.steps != d.source.steps - 2 + 15 + 11 {
        return Err(format!("{} source steps vs {} target steps", d.source.steps, d.target.steps));
    }
    let (Some(s), Some(t)) = (&d.source.last, &d.target.last) else { return Err("no final state".into()) };
    let diffs = s.differences(t, 5);
    if !diffs.is_empty() {
        return Err(format!("final states differ: {diffs:?}"));
    }
    Ok(format!("{} source steps, {} target steps", d.source.steps, d.target.steps))
}

fn criterion_7() -> Result<String, String> {
    for (name, d) in [
        ("partial_stack_return", scenarios::partial_stack_return()),
        ("second_stack", scenarios::second_stack(CallConvention::default())),
        ("double_return", scenarios::double_return()),
    ] {
        if (d.source.outcome, d.target.outcome) != (Outcome::Failed, Outcome::Failed) {
            return Err(format!("{name}: {} / {}", d.source.outcome, d.target.outcome));
        }
    }
    let weak = scenarios::second_stack(CallConvention::WEAKENED);
    if weak.agree || weak.target.outcome != Outcome::Halted {
        return Err(format!("weakened second_stack: {} / {}", weak.source.outcome, weak.target.outcome));
    }
    let bin = env!("CARGO_BIN_EXE_capcall");
    let code = |args: &[&str]| Command::new(bin).args(args).output().map(|o| o.status.code());
    let strong = code(&["scenarios"]).map_err(|e| e.to_string())?;
    let weakened = code(&["scenarios", "--run", "second_stack", "--no-stk-base-check"]).map_err(|e| e.to_string())?;
    if (strong, weakened) != (Some(0), Some(2)) {
        return Err(format!("exit codes {strong:?} / {weakened:?}"));
    }
    Ok("3 scenarios failed on both machines; weakened run exits 2".into())
}

fn criterion_8() -> Result<String, String> {
    let mut agree = 0;
    for f in WELL_BEHAVED {
        let (t, c) = f.assemble().map_err(|e| e.to_string())?;
        let d = run_diff(&t, &c, STK_BASE, STK_END, CallConvention::default(), &RunOptions::default())
            .map_err(|e| e.to_string())?;
        if !d.agree || d.source.outcome != f.expect {
            return Err(format!("{}: {} / {}", f.name, d.source.outcome, d.target.outcome));
        }
        agree += 1;
    }
    if agree < 10 {
        return Err(format!("only {agree} programs"));
    }
    Ok(format!("{agree} programs agree"))
}

fn criterion_9() -> Result<String, String> {
    for b in BROKEN {
        let rules = b.diagnose()?;
        if !rules.iter().any(|r| r == b.rule) {
            return Err(format!("{}: expected {}, got {rules:?}", b.name, b.rule));
        }
    }
    let needed = [
        "pad",
        "hidden-call",
        "seal-double-claim",
        "linear-overlap",
        "comp-value",
        "import-addr",
        "code-overlap",
        "seal-sets",
    ];
    for r in needed {
        if !BROKEN.iter().any(|b| b.rule == r) {
            return Err(format!("no fixture for {r}"));
        }
    }
    for f in WELL_BEHAVED {
        let (t, c) = f.assemble().map_err(|e| e.to_string())?;
        let gc = GlobalConstants::new(t.code.domain(), STK_BASE);
        for comp in [&t, &c] {
            validate_component(comp, &gc, CallConvention::default())
                .map_err(|ds| format!("{}: {}", f.name, ds[0]))?;
        }
    }
    Ok(format!("{} broken fixtures, {} clean pairs", BROKEN.len(), WELL_BEHAVED.len()))
}

#[test]
fn acceptance() {
    type Check = fn() -> Result<String, String>;
    let criteria: [(u32, &str, Check, Option<Duration>); 9] = [
        (1, "encoding laws", criterion_1, Some(Duration::from_secs(5))),
        (2, "permission lattice", criterion_2, None),
        (3, "split/splice duality", criterion_3, None),
        (4, "linearity and stack invariants", criterion_4, Some(Duration::from_secs(30))),
        (5, "call sequence geometry", criterion_5, None),
        (6, "round trip", criterion_6, None),
        (7, "attack suite", criterion_7, None),
        (8, "differential corpus", criterion_8, Some(Duration::from_secs(60))),
        (9, "validation fixtures", criterion_9, None),
    ];
    let mut failed = Vec::new();
    for (n, name, check, limit) in criteria {
        let t0 = Instant::now();
        let res = check();
        let took = t0.elapsed();
        let res = match (res, limit) {
            (Ok(_), Some(l)) if took > l => Err(format!("took {took:.2?}, limit {l:?}")),
            (r, _) => r,
        };
        match res {
            Ok(detail) => println!("criterion {n} ({name}): PASS [{took:.2?}] {detail}"),
            Err(why) => {
                println!("criterion {n} ({name}): FAIL [{took:.2?}] {why}");
                failed.push(n);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
