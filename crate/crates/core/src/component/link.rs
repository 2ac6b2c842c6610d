//! Linking components and building initial configurations.

use std::collections::BTreeSet;

use super::Component;
use crate::isa::{MachineKind, TargetConfig};
use crate::machine::{
    is_exec, Addr, Capability, Linearity, MemCap, MemorySegment, Permission, RegName, RegisterFile,
    SealId, StkPtr, Word,
};
use crate::source::SourceConfig;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum LinkError {
    #[error("code segments overlap at {0}")]
    CodeOverlap(Addr),
    #[error("data segments overlap at {0}")]
    DataOverlap(Addr),
    #[error("address {0} is code in one component and data in the other")]
    CodeDataOverlap(Addr),
    #[error("return seal {0} is owned by both components")]
    RetSealOverlap(SealId),
    #[error("closure seal {0} is owned by both components")]
    ClosSealOverlap(SealId),
    #[error("seal {0} is a return seal on one side and a closure seal on the other")]
    RetClosClash(SealId),
    #[error("linear address {0} is claimed by both components")]
    LinearOverlap(Addr),
    #[error("symbol `{0}` is exported by both components")]
    DuplicateExport(String),
    #[error("both components have a main")]
    BothMains,
}

impl LinkError {
    /// Short name for diagnostics, in the style of validation rules.
    pub fn rule(&self) -> &'static str {
        match self {
            LinkError::CodeOverlap(_) => "code-overlap",
            LinkError::DataOverlap(_) => "data-overlap",
            LinkError::CodeDataOverlap(_) => "code-data-overlap",
            LinkError::RetSealOverlap(_) => "ret-seal-overlap",
            LinkError::ClosSealOverlap(_) => "clos-seal-overlap",
            LinkError::RetClosClash(_) => "ret-clos-clash",
            LinkError::LinearOverlap(_) => "linear-overlap",
            LinkError::DuplicateExport(_) => "duplicate-export",
            LinkError::BothMains => "both-mains",
        }
    }
}

fn disjoint_union<T: Ord + Copy>(
    a: &BTreeSet<T>,
    b: &BTreeSet<T>,
    err: impl Fn(T) -> LinkError,
) -> Result<BTreeSet<T>, LinkError> {
    if let Some(x) = a.intersection(b).next() {
        return Err(err(*x));
    }
    Ok(a.union(b).copied().collect())
}

/// Links two components, resolving each import against the combined exports.
pub fn link(c1: &Component, c2: &Component) -> Result<Component, LinkError> {
    if c1.main.is_some() && c2.main.is_some() {
        return Err(LinkError::BothMains);
    }
    let code = c1.code.disjoint_union(&c2.code).map_err(|o| LinkError::CodeOverlap(o.0))?;
    let mut data = c1.data.disjoint_union(&c2.data).map_err(|o| LinkError::DataOverlap(o.0))?;
    if let Some(a) = code.domain().find(|a| data.contains(*a)) {
        return Err(LinkError::CodeDataOverlap(a));
    }
    let sig_ret = disjoint_union(&c1.sig_ret, &c2.sig_ret, LinkError::RetSealOverlap)?;
    let sig_clos = disjoint_union(&c1.sig_clos, &c2.sig_clos, LinkError::ClosSealOverlap)?;
    if let Some(s) = sig_ret.intersection(&sig_clos).next() {
        return Err(LinkError::RetClosClash(*s));
    }
    let a_linear = disjoint_union(&c1.a_linear, &c2.a_linear, LinkError::LinearOverlap)?;

    let mut exports = c1.exports.clone();
    for (sym, w) in &c2.exports {
        if exports.insert(sym.clone(), *w).is_some() {
            return Err(LinkError::DuplicateExport(sym.clone()));
        }
    }
    let mut imports = Vec::new();
    for (a, sym) in c1.imports.iter().chain(&c2.imports) {
        match exports.get(sym) {
            Some(w) => {
                data.insert(*a, *w);
            }
            None => imports.push((*a, sym.clone())),
        }
    }
    Ok(Component {
        code,
        data,
        imports,
        exports,
        sig_ret,
        sig_clos,
        a_linear,
        main: c1.main.or(c2.main),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum InitError {
    #[error("component has no main")]
    NoMain,
    #[error("unresolved import `{0}`")]
    UnresolvedImport(String),
    #[error("main words must both be sealed capabilities")]
    MainNotSealed,
    #[error("main words are sealed with different seals {0} and {1}")]
    SealMismatch(SealId, SealId),
    #[error("main data capability is executable")]
    ExecutableData,
    #[error("stack range {0}..{1} is empty or has no room for guard cells")]
    BadStack(Addr, Addr),
    #[error("stack or its guard cells overlap the program at {0}")]
    StackOverlap(Addr),
    #[error(transparent)]
    Link(#[from] LinkError),
}

/// A starting configuration for either machine.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Config {
    Source(SourceConfig),
    Target(TargetConfig),
}

impl Config {
    pub fn kind(&self) -> MachineKind {
        match self {
            Config::Source(_) => MachineKind::Source,
            Config::Target(_) => MachineKind::Target,
        }
    }

    pub fn regs(&self) -> &RegisterFile {
        match self {
            Config::Source(c) => &c.regs,
            Config::Target(c) => &c.regs,
        }
    }

    pub fn mem(&self) -> &MemorySegment {
        match self {
            Config::Source(c) => &c.mem,
            Config::Target(c) => &c.mem,
        }
    }

    pub fn into_source(self) -> Option<SourceConfig> {
        match self {
            Config::Source(c) => Some(c),
            Config::Target(_) => None,
        }
    }

    pub fn into_target(self) -> Option<TargetConfig> {
        match self {
            Config::Target(c) => Some(c),
            Config::Source(_) => None,
        }
    }
}

/// Starting configuration of a program with the stack at `[b_stk, e_stk]`.
/// The cells just outside the stack are zero guard cells.
pub fn initial_config(p: &Component, kind: MachineKind, b_stk: Addr, e_stk: Addr) -> Result<Config, InitError> {
    let (mc, md) = p.main.ok_or(InitError::NoMain)?;
    if let Some((_, sym)) = p.imports.first() {
        return Err(InitError::UnresolvedImport(sym.clone()));
    }
    let (Word::Cap(Capability::Sealed(s1, code)), Word::Cap(Capability::Sealed(s2, data))) = (mc, md) else {
        return Err(InitError::MainNotSealed);
    };
    if s1 != s2 {
        return Err(InitError::SealMismatch(s1, s2));
    }
    if is_exec(&data) {
        return Err(InitError::ExecutableData);
    }
    let (Some(lo), Some(hi)) = (b_stk.checked_sub(1), e_stk.checked_add(1)) else {
        return Err(InitError::BadStack(b_stk, e_stk));
    };
    if b_stk > e_stk {
        return Err(InitError::BadStack(b_stk, e_stk));
    }
    let mut mem = p.code.disjoint_union(&p.data).map_err(|o| LinkError::CodeDataOverlap(o.0))?;
    if let Some(a) = (lo..=hi).find(|a| mem.contains(*a)) {
        return Err(InitError::StackOverlap(a));
    }
    mem.insert(lo, Word::Int(0));
    mem.insert(hi, Word::Int(0));
    let ms_stk = MemorySegment::filled(b_stk..=e_stk, Word::Int(0));

    let mut regs = RegisterFile::default();
    regs[RegName::Pc] = code.into();
    regs[RegName::Data] = data.into();
    Ok(match kind {
        MachineKind::Source => {
            regs[RegName::Stk] = StkPtr::new(Permission::RW, b_stk, e_stk, e_stk).into();
            let cfg = SourceConfig::new(mem, regs, Vec::new(), ms_stk).expect("stack checked disjoint");
            Config::Source(cfg)
        }
        MachineKind::Target => {
            regs[RegName::Stk] = MemCap::new(Permission::RW, Linearity::Linear, b_stk, e_stk, e_stk).into();
            mem.extend(ms_stk.iter().map(|(a, w)| (a, *w)));
            Config::Target(TargetConfig { mem, regs })
        }
    })
}

/// Links the context with the component and starts the resulting program.
pub fn plug(
    ctx: &Component,
    comp: &Component,
    kind: MachineKind,
    b_stk: Addr,
    e_stk: Addr,
) -> Result<Config, InitError> {
    let p = link(ctx, comp)?;
    initial_config(&p, kind, b_stk, e_stk)
}
