//! Command-line front end: assemble, validate, link, run and compare.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use capcall::asm::callmacro::CallConvention;
use capcall::asm::{assemble, disassemble, AsmConfig};
use capcall::component::{link, parse_component, validate_component, write_component, Component, TaChoice};
use capcall::harness::fixtures::{STK_BASE, STK_END, WELL_BEHAVED};
use capcall::harness::scenarios::{Scenario, SCENARIOS};
use capcall::harness::{run_diff_program, run_one, DiffVerdict, Outcome, RunOptions, RunReport, RunSetup};
use capcall::isa::MachineKind;
use capcall::machine::{Addr, GlobalConstants};

const EXIT_FAILED: u8 = 1;
const EXIT_DISAGREE: u8 = 2;
const EXIT_USAGE: u8 = 3;
const EXIT_INVALID: u8 = 4;

#[derive(Parser)]
#[command(name = "capcall", version, about = "Run programs on the source and target capability machines")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(clap::Args, Clone, Copy)]
struct ConvArgs {
    /// Build and recognize calls without the stack base check on return.
    #[arg(long, global = true)]
    no_stk_base_check: bool,
}

impl ConvArgs {
    fn convention(self) -> CallConvention {
        if self.no_stk_base_check {
            CallConvention::WEAKENED
        } else {
            CallConvention::default()
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Machine {
    Source,
    Target,
}

#[derive(Subcommand)]
enum Cmd {
    /// Assemble a `.s` file into a component file.
    Asm {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = STK_BASE)]
        stk_base: Addr,
        /// Do not add zero pads around the code.
        #[arg(long)]
        no_pads: bool,
        /// Also write `name<TAB>addr` lines to this file.
        #[arg(long)]
        symbols: Option<PathBuf>,
        #[command(flatten)]
        conv: ConvArgs,
    },
    /// Print a component's code as assembly.
    Disasm {
        input: PathBuf,
        #[arg(long, default_value_t = STK_BASE)]
        stk_base: Addr,
        #[command(flatten)]
        conv: ConvArgs,
    },
    /// Check a component's well-formedness.
    Validate {
        input: PathBuf,
        /// Trusted addresses: auto (the component's code), none, or a..b.
        #[arg(long, default_value = "auto")]
        ta: TaChoice,
        #[arg(long, default_value_t = STK_BASE)]
        stk_base: Addr,
        #[command(flatten)]
        conv: ConvArgs,
    },
    /// Link two components.
    Link {
        first: PathBuf,
        second: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = STK_BASE)]
        stk_base: Addr,
        #[command(flatten)]
        conv: ConvArgs,
    },
    /// Run a program, or the link of several components, on one machine.
    Run {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "target")]
        machine: Machine,
        /// Component to link in and trust.
        #[arg(long)]
        trusted: Option<PathBuf>,
        /// Trusted addresses; defaults to the trusted component's code.
        #[arg(long)]
        ta: Option<TaChoice>,
        /// Stack base checked on return; defaults to the stack's low end.
        #[arg(long)]
        stk_base: Option<Addr>,
        #[arg(long, default_value = "1000..1099")]
        stack: StackRange,
        #[arg(long, default_value_t = 100_000)]
        fuel: usize,
        /// Write the trace to this file.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Check linearity and stack invariants after every step.
        #[arg(long)]
        paranoid: bool,
        #[arg(long)]
        no_validate: bool,
        #[command(flatten)]
        conv: ConvArgs,
    },
    /// Link a context with a trusted component and compare both machines.
    Diff {
        trusted: PathBuf,
        context: PathBuf,
        #[arg(long, default_value = "1000..1099")]
        stack: StackRange,
        #[arg(long)]
        stk_base: Option<Addr>,
        #[arg(long, default_value_t = 100_000)]
        fuel: usize,
        /// Write source.trace and target.trace here.
        #[arg(long)]
        trace_dir: Option<PathBuf>,
        #[arg(long)]
        paranoid: bool,
        #[arg(long)]
        no_validate: bool,
        #[command(flatten)]
        conv: ConvArgs,
    },
    /// List or run the attack scenarios.
    Scenarios {
        #[arg(long)]
        list: bool,
        /// Run one scenario; all of them when omitted.
        #[arg(long)]
        run: Option<String>,
        #[arg(long)]
        trace_dir: Option<PathBuf>,
        #[command(flatten)]
        conv: ConvArgs,
    },
    /// List or run the well-behaved corpus.
    Corpus {
        #[arg(long)]
        list: bool,
        #[arg(long)]
        run: Option<String>,
        #[arg(long, default_value_t = 100_000)]
        fuel: usize,
        #[arg(long)]
        paranoid: bool,
    },
}

#[derive(Clone, Copy)]
struct StackRange(Addr, Addr);

impl std::str::FromStr for StackRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s.split_once("..").ok_or_else(|| format!("expected b..e, got `{s}`"))?;
        let p = |t: &str| t.parse::<Addr>().map_err(|e| format!("bad address `{t}`: {e}"));
        let (a, b) = (p(a)?, p(b)?);
        if a == 0 || a > b {
            return Err(format!("stack {a}..{b} must be nonempty and leave room for the guard cell below it"));
        }
        Ok(StackRange(a, b))
    }
}

/// An error with the exit code it maps to.
struct Fail(u8, String);

impl Fail {
    fn usage(msg: impl Into<String>) -> Self {
        Fail(EXIT_USAGE, msg.into())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match dispatch(cli.cmd) {
        Ok(code) => ExitCode::from(code),
        Err(Fail(code, msg)) => {
            eprintln!("capcall: {msg}");
            ExitCode::from(code)
        }
    }
}

fn read(path: &Path) -> Result<String, Fail> {
    fs::read_to_string(path).map_err(|e| Fail::usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Fail> {
    fs::write(path, text).map_err(|e| Fail::usage(format!("{}: {e}", path.display())))
}

/// Assembles `.s` files and parses everything else as a component file.
fn load(path: &Path, stk_base: Addr, conv: CallConvention) -> Result<Component, Fail> {
    let text = read(path)?;
    if path.extension().is_some_and(|e| e == "s") {
        let cfg = AsmConfig { convention: conv, ..AsmConfig::with_stk_base(stk_base) };
        assemble(&text, &cfg)
            .map(|a| a.component)
            .map_err(|e| Fail::usage(format!("{}:{e}", path.display())))
    } else {
        parse_component(&text).map_err(|e| Fail::usage(format!("{}:{e}", path.display())))
    }
}

fn check(label: &str, c: &Component, gc: &GlobalConstants, conv: CallConvention) -> Result<(), Fail> {
    match validate_component(c, gc, conv) {
        Ok(()) => Ok(()),
        Err(ds) => {
            for d in &ds {
                println!("{d}");
            }
            Err(Fail(EXIT_INVALID, format!("{label}: {} diagnostic(s)", ds.len())))
        }
    }
}

fn outcome_code(o: Outcome) -> u8 {
    match o {
        Outcome::Halted => 0,
        Outcome::Failed | Outcome::FuelExhausted => EXIT_FAILED,
    }
}

fn print_report(r: &RunReport) {
    println!("{}\t{}\t{} steps", r.machine, r.outcome, r.steps);
    for (step, v) in &r.violations {
        println!("violation\t{}\tstep {step}\t{v}", r.machine);
    }
}

fn print_verdict(d: &DiffVerdict) {
    print_report(&d.source);
    print_report(&d.target);
    if d.agree {
        println!("agree");
    } else {
        let at = d.first_divergence.map_or_else(|| "-".to_string(), |i| i.to_string());
        println!("disagree\tfirst divergence at target step {at}");
    }
}

fn write_traces(dir: &Path, prefix: &str, d: &DiffVerdict) -> Result<(), Fail> {
    fs::create_dir_all(dir).map_err(|e| Fail::usage(format!("{}: {e}", dir.display())))?;
    for r in [&d.source, &d.target] {
        let path = dir.join(format!("{prefix}{}.trace", r.machine));
        r.write_trace(&path).map_err(|e| Fail::usage(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn verdict_code(d: &DiffVerdict) -> u8 {
    if d.agree {
        0
    } else {
        EXIT_DISAGREE
    }
}

fn dispatch(cmd: Cmd) -> Result<u8, Fail> {
    match cmd {
        Cmd::Asm { input, output, stk_base, no_pads, symbols, conv } => {
            let cfg = AsmConfig { stk_base, convention: conv.convention(), pads: !no_pads };
            let a = assemble(&read(&input)?, &cfg).map_err(|e| Fail::usage(format!("{}:{e}", input.display())))?;
            write(&output, &write_component(&a.component))?;
            if let Some(p) = symbols {
                write(&p, &a.symbol_table())?;
            }
            Ok(0)
        }
        Cmd::Disasm { input, stk_base, conv } => {
            let c = load(&input, stk_base, conv.convention())?;
            print!("{}", disassemble(&c.code, stk_base, conv.convention()));
            if !c.data.is_empty() {
                print!("{}", disassemble(&c.data, stk_base, conv.convention()));
            }
            Ok(0)
        }
        Cmd::Validate { input, ta, stk_base, conv } => {
            let c = load(&input, stk_base, conv.convention())?;
            let gc = GlobalConstants::new(ta.resolve(&c), stk_base);
            check(&input.display().to_string(), &c, &gc, conv.convention())?;
            println!("ok");
            Ok(0)
        }
        Cmd::Link { first, second, output, stk_base, conv } => {
            let a = load(&first, stk_base, conv.convention())?;
            let b = load(&second, stk_base, conv.convention())?;
            let l = link(&a, &b).map_err(|e| Fail(EXIT_INVALID, format!("{}\tlink\t{e}", e.rule())))?;
            write(&output, &write_component(&l))?;
            Ok(0)
        }
        Cmd::Run { inputs, machine, trusted, ta, stk_base, stack, fuel, trace, paranoid, no_validate, conv } => {
            let conv = conv.convention();
            let stk_base = stk_base.unwrap_or(stack.0);
            let t = trusted.as_deref().map(|p| load(p, stk_base, conv)).transpose()?;
            let mut parts = Vec::new();
            for p in &inputs {
                parts.push((p.display().to_string(), load(p, stk_base, conv)?));
            }
            let ta: BTreeSet<Addr> = match (&ta, &t) {
                (Some(choice), _) => {
                    let all = t.iter().chain(parts.iter().map(|(_, c)| c)).fold(Component::default(), |mut acc, c| {
                        acc.code.extend(c.code.iter().map(|(a, w)| (a, *w)));
                        acc
                    });
                    choice.resolve(&all)
                }
                (None, Some(t)) => t.code.domain().collect(),
                (None, None) => BTreeSet::new(),
            };
            let gc = GlobalConstants::new(ta, stk_base);
            if !no_validate {
                if let Some(t) = &t {
                    check("trusted", t, &gc, conv)?;
                }
                for (name, c) in &parts {
                    check(name, c, &gc, conv)?;
                }
            }
            let mut prog = t.unwrap_or_default();
            for (_, c) in &parts {
                prog = link(&prog, c).map_err(|e| Fail(EXIT_INVALID, format!("{}\tlink\t{e}", e.rule())))?;
            }
            let setup = RunSetup { b_stk: stack.0, e_stk: stack.1, gc, convention: conv };
            let kind = match machine {
                Machine::Source => MachineKind::Source,
                Machine::Target => MachineKind::Target,
            };
            let opts = RunOptions { fuel, trace: trace.is_some(), paranoid };
            let r = run_one(&prog, kind, &setup, &opts).map_err(|e| Fail::usage(e.to_string()))?;
            print_report(&r);
            if let Some(p) = trace {
                r.write_trace(&p).map_err(|e| Fail::usage(format!("{}: {e}", p.display())))?;
            }
            Ok(outcome_code(r.outcome))
        }
        Cmd::Diff { trusted, context, stack, stk_base, fuel, trace_dir, paranoid, no_validate, conv } => {
            let conv = conv.convention();
            let stk_base = stk_base.unwrap_or(stack.0);
            let t = load(&trusted, stk_base, conv)?;
            let c = load(&context, stk_base, conv)?;
            let gc = GlobalConstants::new(t.code.domain(), stk_base);
            if !no_validate {
                check("trusted", &t, &gc, conv)?;
                check("context", &c, &gc, conv)?;
            }
            let prog = link(&c, &t).map_err(|e| Fail(EXIT_INVALID, format!("{}\tlink\t{e}", e.rule())))?;
            let setup = RunSetup { b_stk: stack.0, e_stk: stack.1, gc, convention: conv };
            let opts = RunOptions { fuel, trace: true, paranoid };
            let d = run_diff_program(&prog, &setup, &opts).map_err(|e| Fail::usage(e.to_string()))?;
            print_verdict(&d);
            if let Some(dir) = trace_dir {
                write_traces(&dir, "", &d)?;
            }
            Ok(verdict_code(&d))
        }
        Cmd::Scenarios { list, run, trace_dir, conv } => {
            if list {
                for s in SCENARIOS {
                    println!("{}\t{}", s.name, s.description);
                }
                return Ok(0);
            }
            let chosen: Vec<&Scenario> = match &run {
                Some(name) => vec![Scenario::by_name(name).ok_or_else(|| Fail::usage(format!("no scenario `{name}`")))?],
                None => SCENARIOS.iter().collect(),
            };
            let mut code = 0;
            for s in chosen {
                let d = s.run(conv.convention(), &RunOptions::default()).map_err(|e| Fail::usage(e.to_string()))?;
                println!("== {}", s.name);
                print_verdict(&d);
                if let Some(dir) = &trace_dir {
                    write_traces(dir, &format!("{}.", s.name), &d)?;
                }
                let c = if !d.agree {
                    EXIT_DISAGREE
                } else if d.source.outcome == Outcome::Halted {
                    EXIT_FAILED
                } else {
                    0
                };
                code = code.max(c);
            }
            Ok(code)
        }
        Cmd::Corpus { list, run, fuel, paranoid } => {
            if list {
                for f in WELL_BEHAVED {
                    println!("{}\t{}\t{}", f.name, f.expect, f.description);
                }
                return Ok(0);
            }
            let mut code = 0;
            for f in WELL_BEHAVED.iter().filter(|f| run.as_deref().is_none_or(|n| n == f.name)) {
                let (t, c) = f.assemble().map_err(|e| Fail::usage(format!("{}: {e}", f.name)))?;
                let prog = link(&c, &t).map_err(|e| Fail(EXIT_INVALID, format!("{}\tlink\t{e}", e.rule())))?;
                let setup = RunSetup::new(STK_BASE, STK_END, t.code.domain());
                let opts = RunOptions { fuel, trace: true, paranoid };
                let d = run_diff_program(&prog, &setup, &opts).map_err(|e| Fail::usage(e.to_string()))?;
                println!("== {}", f.name);
                print_verdict(&d);
                let bad_invariant = !(d.source.violations.is_empty() && d.target.violations.is_empty());
                let c = if !d.agree {
                    EXIT_DISAGREE
                } else if d.source.outcome != f.expect || bad_invariant {
                    EXIT_FAILED
                } else {
                    0
                };
                code = code.max(c);
            }
            Ok(code)
        }
    }
}
