//! Running programs on one or both machines.

use std::collections::BTreeSet;
use std::fmt;
use std::io;
use std::path::Path;

use super::invariants::{check_linearity_source, check_linearity_target, check_stack};
use super::observe::Observation;
use crate::asm::callmacro::{CallConvention, CALL_LEN, RET_PT_OFFSET, XJMP_INDEX};
use crate::component::{initial_config, link, Component, Config, InitError};
use crate::isa::{
    step_traced, Action, MachineExtension, MachineKind, MachineState, StepOutcome, TargetConfig, TargetRules,
    TraceRecord,
};
use crate::machine::{dec_instr, exec_allowed, Addr, GlobalConstants, Instr, RegName};
use crate::source::{SourceConfig, SourceRules};

/// Target steps that one source call stands for: the call sequence up to
/// and including its `xjmp`.
pub const CALL_CATCH_UP: usize = XJMP_INDEX + 1;
/// Target steps that one source return stands for: the `xjmp` plus the
/// return code, which skips its `fail`.
pub const RETURN_CATCH_UP: usize = 1 + (CALL_LEN - RET_PT_OFFSET - 1);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Outcome {
    Halted,
    Failed,
    FuelExhausted,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Halted => "halted",
            Outcome::Failed => "failed",
            Outcome::FuelExhausted => "fuel-exhausted",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunOptions {
    pub fuel: usize,
    pub trace: bool,
    /// Check linearity (and the stack discipline on the source) after every step.
    pub paranoid: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { fuel: 100_000, trace: false, paranoid: false }
    }
}

/// Where the stack lives and what counts as trusted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunSetup {
    pub b_stk: Addr,
    pub e_stk: Addr,
    pub gc: GlobalConstants,
    pub convention: CallConvention,
}

impl RunSetup {
    /// Stack at `[b_stk, e_stk]` with `stk_base = b_stk`.
    pub fn new(b_stk: Addr, e_stk: Addr, ta: impl IntoIterator<Item = Addr>) -> Self {
        RunSetup {
            b_stk,
            e_stk,
            gc: GlobalConstants::new(ta, b_stk),
            convention: CallConvention::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub machine: MachineKind,
    pub outcome: Outcome,
    pub steps: usize,
    pub trace: Vec<TraceRecord>,
    /// Target steps per step, for aligning source traces with target ones.
    pub weights: Vec<usize>,
    /// Invariant violations found in paranoid mode, with the step index.
    pub violations: Vec<(usize, String)>,
    /// State in which `halt` executed, or the state when fuel ran out.
    pub last: Option<Observation>,
}

impl RunReport {
    pub fn trace_text(&self) -> String {
        self.trace.iter().map(|r| r.to_line(self.machine) + "\n").collect()
    }

    pub fn write_trace(&self, path: &Path) -> io::Result<()> {
        std::fs::write(path, self.trace_text())
    }

    /// Number of target steps this run corresponds to.
    pub fn target_steps(&self) -> usize {
        self.weights.iter().sum()
    }
}

trait Inspect: MachineState + Clone {
    fn frame_depth(&self) -> usize {
        0
    }
    fn violations(&self, setup: &RunSetup) -> Vec<String>;
    fn observe(&self) -> Observation;
}

impl Inspect for SourceConfig {
    fn frame_depth(&self) -> usize {
        self.frames.len()
    }

    fn violations(&self, setup: &RunSetup) -> Vec<String> {
        let mut v: Vec<String> = check_linearity_source(self).iter().map(|a| a.to_string()).collect();
        v.extend(check_stack(self, setup.b_stk, setup.e_stk, setup.gc.stk_base));
        v
    }

    fn observe(&self) -> Observation {
        Observation::of_source(self)
    }
}

impl Inspect for TargetConfig {
    fn violations(&self, _setup: &RunSetup) -> Vec<String> {
        check_linearity_target(self).iter().map(|a| a.to_string()).collect()
    }

    fn observe(&self) -> Observation {
        Observation::of_target(self)
    }
}

fn about_to_halt<S: MachineState>(cfg: &S) -> bool {
    let pcw = cfg.reg(RegName::Pc);
    let Some(pc) = pcw.as_mem_cap() else { return false };
    exec_allowed(pc.perm)
        && pc.within_bounds()
        && cfg.mem().get(pc.addr).is_some_and(|w| dec_instr(w) == Instr::Halt)
}

fn drive<S: Inspect, E: MachineExtension<S>>(
    cfg: S,
    ext: &E,
    setup: &RunSetup,
    opts: &RunOptions,
) -> RunReport {
    let mut report = RunReport {
        machine: ext.kind(),
        outcome: Outcome::FuelExhausted,
        steps: 0,
        trace: Vec::new(),
        weights: Vec::new(),
        violations: Vec::new(),
        last: None,
    };
    if opts.paranoid {
        report.violations.extend(cfg.violations(setup).into_iter().map(|v| (0, v)));
    }
    let mut cur = cfg;
    while report.steps < opts.fuel {
        let depth = cur.frame_depth();
        let halting = about_to_halt(&cur).then(|| cur.observe());
        let (next, action, pc_addr) = step_traced(cur, ext, &setup.gc);
        let step = report.steps;
        report.steps += 1;
        let weight = match (&action, &next) {
            (Action::Call(_), StepOutcome::Running(_)) => CALL_CATCH_UP,
            (Action::Instr(Instr::Xjmp(..)), StepOutcome::Running(s)) if s.frame_depth() < depth => RETURN_CATCH_UP,
            _ => 1,
        };
        report.weights.push(weight);
        if opts.trace {
            report.trace.push(TraceRecord { step, pc_addr, action, outcome: next.kind() });
        }
        match next {
            StepOutcome::Running(s) => {
                if opts.paranoid {
                    report.violations.extend(s.violations(setup).into_iter().map(|v| (step + 1, v)));
                }
                cur = s;
            }
            StepOutcome::Halted => {
                report.outcome = Outcome::Halted;
                report.last = halting;
                return report;
            }
            StepOutcome::Failed => {
                report.outcome = Outcome::Failed;
                return report;
            }
        }
    }
    report.last = Some(cur.observe());
    report
}

/// Runs a prepared configuration on its machine.
pub fn run_config(cfg: Config, setup: &RunSetup, opts: &RunOptions) -> RunReport {
    match cfg {
        Config::Source(s) => drive(s, &SourceRules { convention: setup.convention }, setup, opts),
        Config::Target(t) => drive(t, &TargetRules, setup, opts),
    }
}

/// Starts a program on one machine and runs it.
pub fn run_one(prog: &Component, kind: MachineKind, setup: &RunSetup, opts: &RunOptions) -> Result<RunReport, InitError> {
    let cfg = initial_config(prog, kind, setup.b_stk, setup.e_stk)?;
    Ok(run_config(cfg, setup, opts))
}

#[derive(Clone, Debug)]
pub struct DiffVerdict {
    pub source: RunReport,
    pub target: RunReport,
    /// Both halted, or neither did.
    pub agree: bool,
    /// Index into the target trace where the two runs first part ways, when
    /// both were traced and they disagree.
    pub first_divergence: Option<usize>,
}

/// Runs a linked program on both machines at once. The source machine
/// trusts `setup.gc.ta`.
pub fn run_diff_program(prog: &Component, setup: &RunSetup, opts: &RunOptions) -> Result<DiffVerdict, InitError> {
    let src = initial_config(prog, MachineKind::Source, setup.b_stk, setup.e_stk)?;
    let trg = initial_config(prog, MachineKind::Target, setup.b_stk, setup.e_stk)?;
    let opts = RunOptions { trace: true, ..*opts };
    let (source, target) = std::thread::scope(|s| {
        let h = s.spawn(|| run_config(src, setup, &opts));
        let target = run_config(trg, setup, &opts);
        (h.join().expect("source run panicked"), target)
    });
    let agree = (source.outcome == Outcome::Halted) == (target.outcome == Outcome::Halted);
    let first_divergence = if agree { None } else { first_divergence(&source, &target) };
    Ok(DiffVerdict { source, target, agree, first_divergence })
}

/// Links the context with the trusted component, trusts the trusted code
/// (pads included) and compares both machines.
pub fn run_diff(
    trusted: &Component,
    context: &Component,
    b_stk: Addr,
    e_stk: Addr,
    convention: CallConvention,
    opts: &RunOptions,
) -> Result<DiffVerdict, InitError> {
    let prog = link(context, trusted)?;
    let ta: BTreeSet<Addr> = trusted.code.domain().collect();
    let setup = RunSetup { convention, ..RunSetup::new(b_stk, e_stk, ta) };
    run_diff_program(&prog, &setup, opts)
}

/// First target-trace index at which the aligned traces differ in program
/// counter or in how they end.
pub fn first_divergence(source: &RunReport, target: &RunReport) -> Option<usize> {
    let mut t = 0;
    for (rec, w) in source.trace.iter().zip(&source.weights) {
        match target.trace.get(t) {
            Some(trec) if trec.pc_addr == rec.pc_addr => {}
            _ => return Some(t),
        }
        t += w;
    }
    (source.outcome != target.outcome).then(|| t.min(target.steps))
}
