//! Attacks on the calling convention. Each is a trusted library and an
//! adversarial context; with the stack base check in place every one of
//! them ends in failure on both machines.

use crate::asm::callmacro::CallConvention;
use crate::asm::{assemble, AsmConfig, AsmError};
use crate::component::{Component, InitError};

use super::fixtures::{STK_BASE, STK_END};
use super::run::{run_diff, DiffVerdict, RunOptions};

#[derive(Clone, Copy, Debug)]
pub struct Scenario {
    pub name: &'static str,
    pub description: &'static str,
    pub trusted: &'static str,
    pub context: &'static str,
}

macro_rules! scenario {
    ($name:literal, $desc:literal) => {
        Scenario {
            name: $name,
            description: $desc,
            trusted: include_str!(concat!("../../fixtures/attack/", $name, ".trusted.s")),
            context: include_str!(concat!("../../fixtures/attack/", $name, ".context.s")),
        }
    };
}

pub const SCENARIOS: &[Scenario] = &[
    scenario!(
        "partial_stack_return",
        "the callback returns with only the bottom part of the stack it was given"
    ),
    scenario!(
        "second_stack",
        "the context splits off a second stack and returns from an older call inside a newer one"
    ),
    scenario!("double_return", "the callback returns a second time through a saved return token"),
];

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("assembling {0}: {1}")]
    Asm(&'static str, AsmError),
    #[error(transparent)]
    Init(#[from] InitError),
}

impl Scenario {
    pub fn by_name(name: &str) -> Option<&'static Scenario> {
        SCENARIOS.iter().find(|s| s.name == name)
    }

    /// Both halves, with calls built for `conv`.
    pub fn assemble(&self, conv: CallConvention) -> Result<(Component, Component), ScenarioError> {
        let cfg = AsmConfig { convention: conv, ..AsmConfig::with_stk_base(STK_BASE) };
        let t = assemble(self.trusted, &cfg).map_err(|e| ScenarioError::Asm("trusted", e))?;
        let c = assemble(self.context, &cfg).map_err(|e| ScenarioError::Asm("context", e))?;
        Ok((t.component, c.component))
    }

    /// Runs the scenario on both machines, traced.
    pub fn run(&self, conv: CallConvention, opts: &RunOptions) -> Result<DiffVerdict, ScenarioError> {
        let (t, c) = self.assemble(conv)?;
        Ok(run_diff(&t, &c, STK_BASE, STK_END, conv, opts)?)
    }
}

fn run_named(name: &str, conv: CallConvention) -> DiffVerdict {
    let s = Scenario::by_name(name).expect("scenario is shipped");
    s.run(conv, &RunOptions::default()).expect("shipped scenarios assemble and link")
}

pub fn partial_stack_return() -> DiffVerdict {
    run_named("partial_stack_return", CallConvention::default())
}

/// With `conv` set to [`CallConvention::WEAKENED`] the target lets the old
/// call return.
pub fn second_stack(conv: CallConvention) -> DiffVerdict {
    run_named("second_stack", conv)
}

pub fn double_return() -> DiffVerdict {
    run_named("double_return", CallConvention::default())
}
