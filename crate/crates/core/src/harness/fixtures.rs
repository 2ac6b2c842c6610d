//! The shipped corpus: well-behaved trusted/context pairs, attack scenarios
//! and deliberately broken components.
//!
//! Layout shared by every pair: trusted code at 100 and data at 300, context
//! code at 500 and data at 700, stack at 1000..1099 with the stack base at
//! 1000.

use crate::asm::callmacro::CallConvention;
use crate::asm::{assemble, AsmConfig, AsmError};
use crate::component::{link, parse_component, validate_component, Component};
use crate::machine::{Addr, GlobalConstants};

use super::run::Outcome;

pub const STK_BASE: Addr = 1000;
pub const STK_END: Addr = 1099;

/// A trusted component and the context it is linked with.
#[derive(Clone, Copy, Debug)]
pub struct Fixture {
    pub name: &'static str,
    pub description: &'static str,
    pub trusted: &'static str,
    pub context: &'static str,
    /// How both machines end.
    pub expect: Outcome,
}

impl Fixture {
    /// Assembles both halves with calls built for [`STK_BASE`].
    pub fn assemble(&self) -> Result<(Component, Component), AsmError> {
        let cfg = AsmConfig::with_stk_base(STK_BASE);
        Ok((assemble(self.trusted, &cfg)?.component, assemble(self.context, &cfg)?.component))
    }
}

macro_rules! pair {
    ($name:literal, $expect:ident, $desc:literal) => {
        Fixture {
            name: $name,
            description: $desc,
            trusted: include_str!(concat!("../../fixtures/well/", $name, ".trusted.s")),
            context: include_str!(concat!("../../fixtures/well/", $name, ".context.s")),
            expect: Outcome::$expect,
        }
    };
}

pub const WELL_BEHAVED: &[Fixture] = &[
    pair!("roundtrip", Halted, "one trusted call to a callback that returns"),
    pair!("sequential", Halted, "three calls from three call sites"),
    pair!("nested", Halted, "a callback re-enters the library, which calls again one level deeper"),
    pair!("recursion", Halted, "recursion through the library, three frames deep"),
    pair!("data_pass", Halted, "arguments and result passed in registers"),
    pair!("stack_usage", Halted, "caller locals on the stack survive the call"),
    pair!("heavy_stack", Halted, "40 caller cells and 30 callee cells on the stack"),
    pair!("linear_cap", Halted, "a linear capability lent to the callback and handed back"),
    pair!("multi_seal", Halted, "several closure and return seals, two seal words"),
    pair!("ctx_call_macro", Halted, "the context uses the call sequence itself, outside the trusted addresses"),
    pair!("trusted_main", Halted, "the library is the entry point and calls an exported callback"),
    pair!("no_calls_smash", Halted, "the context rearranges its stack and never calls the library"),
    pair!("failing_callback", Failed, "the callback fails"),
    pair!("loop_diverge", FuelExhausted, "the callback loops forever"),
];

/// How a broken fixture is checked.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BrokenKind {
    /// Validated with the component's own code trusted.
    Component,
    /// Two components whose link is rejected.
    Link,
}

/// A deliberately broken component and the rule it breaks.
#[derive(Clone, Copy, Debug)]
pub struct Broken {
    pub name: &'static str,
    pub kind: BrokenKind,
    /// File names under `fixtures/invalid` and their contents.
    pub files: &'static [(&'static str, &'static str)],
    pub rule: &'static str,
}

macro_rules! broken {
    ($name:literal, $kind:ident, $rule:literal, [$($file:literal),+]) => {
        Broken {
            name: $name,
            kind: BrokenKind::$kind,
            files: &[$(($file, include_str!(concat!("../../fixtures/invalid/", $file)))),+],
            rule: $rule,
        }
    };
}

pub const BROKEN: &[Broken] = &[
    broken!("bad_pad", Component, "pad", ["bad_pad.comp"]),
    broken!("hidden_call", Component, "hidden-call", ["hidden_call.s"]),
    broken!("seal_double_claim", Component, "seal-double-claim", ["seal_double_claim.s"]),
    broken!("linear_overlap", Component, "linear-overlap", ["linear_overlap.comp"]),
    broken!("rx_data_cap", Component, "comp-value", ["rx_data_cap.comp"]),
    broken!("import_into_code", Component, "import-addr", ["import_into_code.comp"]),
    broken!("overlapping_link", Link, "code-overlap", ["overlap_a.comp", "overlap_b.comp"]),
    broken!("seal_set_clash", Component, "seal-sets", ["seal_set_clash.comp"]),
];

/// Reads a fixture file: `.s` files are assembled, anything else is parsed
/// as a component file.
pub fn load_file(file: &str, text: &str) -> Result<Component, String> {
    if file.ends_with(".s") {
        assemble(text, &AsmConfig::with_stk_base(STK_BASE)).map(|a| a.component).map_err(|e| e.to_string())
    } else {
        parse_component(text).map_err(|e| e.to_string())
    }
}

impl Broken {
    /// Rules reported for this fixture, in order.
    pub fn diagnose(&self) -> Result<Vec<String>, String> {
        let comps = self
            .files
            .iter()
            .map(|(f, t)| load_file(f, t).map_err(|e| format!("{f}: {e}")))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(match self.kind {
            BrokenKind::Component => {
                let c = &comps[0];
                let gc = GlobalConstants::new(c.code.domain(), STK_BASE);
                match validate_component(c, &gc, CallConvention::default()) {
                    Ok(()) => Vec::new(),
                    Err(ds) => ds.iter().map(|d| d.rule.to_string()).collect(),
                }
            }
            BrokenKind::Link => match link(&comps[0], &comps[1]) {
                Ok(_) => Vec::new(),
                Err(e) => vec![e.rule().to_string()],
            },
        })
    }
}

pub fn well_behaved(name: &str) -> Option<&'static Fixture> {
    WELL_BEHAVED.iter().find(|f| f.name == name)
}
