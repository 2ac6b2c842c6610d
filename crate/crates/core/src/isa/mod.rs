//! Single-step interpretation shared by both machines, plus the target machine.
//!
//! The interpreter is generic over a [`MachineState`] and a
//! [`MachineExtension`]. The extension supplies call recognition and every
//! instruction case that involves source-only tokens; the target extension
//! declines all of them.

mod exec;
mod target;

use std::convert::Infallible;
use std::fmt;

pub use exec::*;
pub use target::{TargetConfig, TargetRules};

use crate::machine::{
    dec_instr, exec_allowed, Addr, GlobalConstants, Instr, MemCap, MemorySegment, RegName,
    RegisterFile, SealableCap, Word,
};

/// Which machine a configuration or rule set belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MachineKind {
    Source,
    Target,
}

impl fmt::Display for MachineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MachineKind::Source => "source",
            MachineKind::Target => "target",
        })
    }
}

impl std::str::FromStr for MachineKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "source" | "src" => Ok(MachineKind::Source),
            "target" | "trg" => Ok(MachineKind::Target),
            _ => Err(format!("unknown machine `{s}` (expected source or target)")),
        }
    }
}

/// Registers and program memory, the part common to both configurations.
pub trait MachineState: Clone {
    fn regs(&self) -> &RegisterFile;
    fn regs_mut(&mut self) -> &mut RegisterFile;
    fn mem(&self) -> &MemorySegment;
    fn mem_mut(&mut self) -> &mut MemorySegment;

    fn reg(&self, r: RegName) -> Word {
        self.regs()[r]
    }

    fn set_reg(&mut self, r: RegName, w: Word) {
        self.regs_mut()[r] = w;
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepOutcome<S> {
    Running(S),
    Failed,
    Halted,
}

impl<S> StepOutcome<S> {
    pub fn kind(&self) -> OutcomeKind {
        match self {
            StepOutcome::Running(_) => OutcomeKind::Running,
            StepOutcome::Failed => OutcomeKind::Failed,
            StepOutcome::Halted => OutcomeKind::Halted,
        }
    }

    pub fn running(self) -> Option<S> {
        match self {
            StepOutcome::Running(s) => Some(s),
            _ => None,
        }
    }
}

/// An outcome with the configuration dropped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OutcomeKind {
    Running,
    Failed,
    Halted,
}

impl fmt::Display for OutcomeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutcomeKind::Running => "running",
            OutcomeKind::Failed => "failed",
            OutcomeKind::Halted => "halted",
        })
    }
}

/// Machine-specific behaviour plugged into the shared interpreter.
///
/// Every hook is a pure function of its inputs. The defaults report that no
/// case applies, which makes the step fail.
pub trait MachineExtension<S: MachineState> {
    /// A recognized call, ready to execute.
    type Call: fmt::Display;

    fn kind(&self) -> MachineKind;

    /// Checked before fetching. `pc` is the executable, plain program counter.
    fn recognize_call(&self, _cfg: &S, _pc: &MemCap, _gc: &GlobalConstants) -> Option<Self::Call> {
        None
    }

    fn exec_call(&self, _cfg: S, _call: Self::Call, _gc: &GlobalConstants) -> StepOutcome<S> {
        StepOutcome::Failed
    }

    /// `store`, `load`, `cca`, `restrict`, `seta2b`, `split` and `splice` when
    /// the capability operand is a stack pointer token.
    fn stack_case(&self, _cfg: S, _instr: &Instr, _gc: &GlobalConstants) -> StepOutcome<S> {
        StepOutcome::Failed
    }

    /// `xjmp` on a pair that the ordinary case rejects. Registers have already
    /// been cleared.
    fn xjump_return(
        &self,
        _cfg: S,
        _c1: SealableCap,
        _c2: SealableCap,
        _gc: &GlobalConstants,
    ) -> StepOutcome<S> {
        StepOutcome::Failed
    }
}

/// What a step did, for traces.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Action {
    /// The program counter was unusable; nothing was fetched.
    NoFetch,
    Instr(Instr),
    /// A call sequence executed as one step.
    Call(String),
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::NoFetch => f.write_str("-"),
            Action::Instr(i) => write!(f, "{i}"),
            Action::Call(c) => write!(f, "{c}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceRecord {
    pub step: usize,
    pub pc_addr: Option<Addr>,
    pub action: Action,
    pub outcome: OutcomeKind,
}

impl TraceRecord {
    /// `step<TAB>machine<TAB>pc_addr<TAB>instr<TAB>outcome`
    pub fn to_line(&self, machine: MachineKind) -> String {
        let pc = self.pc_addr.map_or_else(|| "-".to_string(), |a| a.to_string());
        format!("{}\t{machine}\t{pc}\t{}\t{}", self.step, self.action, self.outcome)
    }
}

/// One step, reporting what was executed.
pub fn step_traced<S, E>(cfg: S, ext: &E, gc: &GlobalConstants) -> (StepOutcome<S>, Action, Option<Addr>)
where
    S: MachineState,
    E: MachineExtension<S>,
{
    let Some(pc) = cfg.reg(RegName::Pc).as_mem_cap().copied() else {
        return (StepOutcome::Failed, Action::NoFetch, None);
    };
    let exec = exec_allowed(pc.perm);
    if exec {
        if let Some(call) = ext.recognize_call(&cfg, &pc, gc) {
            let label = call.to_string();
            return (ext.exec_call(cfg, call, gc), Action::Call(label), Some(pc.addr));
        }
    }
    if !(exec && pc.within_bounds()) {
        return (StepOutcome::Failed, Action::NoFetch, Some(pc.addr));
    }
    let instr = match cfg.mem().get(pc.addr) {
        Some(w) => dec_instr(w),
        // Outside the memory domain there is nothing to execute.
        None => return (StepOutcome::Failed, Action::NoFetch, Some(pc.addr)),
    };
    (exec_instr(cfg, &instr, ext, gc), Action::Instr(instr), Some(pc.addr))
}

pub fn step<S, E>(cfg: S, ext: &E, gc: &GlobalConstants) -> StepOutcome<S>
where
    S: MachineState,
    E: MachineExtension<S>,
{
    step_traced(cfg, ext, gc).0
}

#[derive(Clone, Debug)]
pub struct RunResult<S> {
    /// `Running` when fuel ran out.
    pub outcome: StepOutcome<S>,
    pub steps: usize,
    /// Empty unless tracing was requested.
    pub trace: Vec<TraceRecord>,
}

/// Steps at most `fuel` times.
pub fn run<S, E>(cfg: S, ext: &E, gc: &GlobalConstants, fuel: usize, trace: bool) -> RunResult<S>
where
    S: MachineState,
    E: MachineExtension<S>,
{
    let mut records = Vec::new();
    let mut cur = StepOutcome::Running(cfg);
    let mut steps = 0;
    while steps < fuel {
        let StepOutcome::Running(cfg) = cur else { break };
        let (next, action, pc_addr) = step_traced(cfg, ext, gc);
        if trace {
            records.push(TraceRecord {
                step: steps,
                pc_addr,
                action,
                outcome: next.kind(),
            });
        }
        steps += 1;
        cur = next;
    }
    RunResult {
        outcome: cur,
        steps,
        trace: records,
    }
}

/// Extension for a machine without calls or tokens.
impl<S: MachineState> MachineExtension<S> for TargetRules {
    type Call = Infallible;

    fn kind(&self) -> MachineKind {
        MachineKind::Target
    }
}
