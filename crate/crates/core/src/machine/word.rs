//! Machine words: integers and capabilities.

use std::fmt;
use std::str::FromStr;

use super::perm::{exec_allowed, write_allowed, Linearity, Permission};

/// Memory address.
pub type Addr = u64;
/// Seal identifier.
pub type SealId = u64;

/// Upper end of a range: a finite address (or seal) or infinity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Bound {
    Fin(u64),
    Inf,
}

impl Bound {
    pub fn finite(self) -> Option<u64> {
        match self {
            Bound::Fin(v) => Some(v),
            Bound::Inf => None,
        }
    }

    /// Integer observed by `gete`. Infinity has no integer; it reads as the largest word.
    pub fn to_int(self) -> i128 {
        match self {
            Bound::Fin(v) => v as i128,
            Bound::Inf => i128::MAX,
        }
    }

    pub fn contains(self, v: u64) -> bool {
        Bound::Fin(v) <= self
    }
}

impl From<u64> for Bound {
    fn from(v: u64) -> Self {
        Bound::Fin(v)
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Fin(v) => write!(f, "{v}"),
            Bound::Inf => f.write_str("inf"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct MemCap {
    pub perm: Permission,
    pub lin: Linearity,
    pub base: Addr,
    pub end: Bound,
    pub addr: Addr,
}

impl MemCap {
    pub fn new(perm: Permission, lin: Linearity, base: Addr, end: impl Into<Bound>, addr: Addr) -> Self {
        MemCap {
            perm,
            lin,
            base,
            end: end.into(),
            addr,
        }
    }

    pub fn within_bounds(&self) -> bool {
        self.base <= self.addr && self.end.contains(self.addr)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SealCap {
    pub base: SealId,
    pub end: Bound,
    pub cursor: SealId,
}

impl SealCap {
    pub fn new(base: SealId, end: impl Into<Bound>, cursor: SealId) -> Self {
        SealCap {
            base,
            end: end.into(),
            cursor,
        }
    }

    pub fn within_bounds(&self) -> bool {
        self.base <= self.cursor && self.end.contains(self.cursor)
    }
}

/// Source-machine stack pointer token. Always linear, never executable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StkPtr {
    pub perm: Permission,
    pub base: Addr,
    pub end: Bound,
    pub addr: Addr,
}

impl StkPtr {
    pub fn new(perm: Permission, base: Addr, end: impl Into<Bound>, addr: Addr) -> Self {
        StkPtr {
            perm,
            base,
            end: end.into(),
            addr,
        }
    }

    pub fn within_bounds(&self) -> bool {
        self.base <= self.addr && self.end.contains(self.addr)
    }
}

/// Capabilities that may be sealed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SealableCap {
    Mem(MemCap),
    Seal(SealCap),
    /// Source only.
    Stk(StkPtr),
    /// Source only: the caller's private stack handed back on return.
    RetData { base: Addr, end: Bound },
    /// Source only: the return address of a call.
    RetCode { base: Addr, end: Bound, addr: Addr },
}

impl SealableCap {
    pub fn is_source_only(&self) -> bool {
        matches!(
            self,
            SealableCap::Stk(_) | SealableCap::RetData { .. } | SealableCap::RetCode { .. }
        )
    }

    pub fn is_linear(&self) -> bool {
        match self {
            SealableCap::Mem(c) => c.lin == Linearity::Linear,
            SealableCap::Stk(_) | SealableCap::RetData { .. } => true,
            SealableCap::Seal(_) | SealableCap::RetCode { .. } => false,
        }
    }

    /// Address (or seal) range governed by the capability.
    pub fn range(&self) -> (u64, Bound) {
        match *self {
            SealableCap::Mem(c) => (c.base, c.end),
            SealableCap::Seal(s) => (s.base, s.end),
            SealableCap::Stk(s) => (s.base, s.end),
            SealableCap::RetData { base, end } => (base, end),
            SealableCap::RetCode { base, end, .. } => (base, end),
        }
    }
}

impl From<MemCap> for SealableCap {
    fn from(c: MemCap) -> Self {
        SealableCap::Mem(c)
    }
}

impl From<SealCap> for SealableCap {
    fn from(c: SealCap) -> Self {
        SealableCap::Seal(c)
    }
}

impl From<StkPtr> for SealableCap {
    fn from(c: StkPtr) -> Self {
        SealableCap::Stk(c)
    }
}

/// A capability, optionally sealed. Seals do not nest.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Capability {
    Plain(SealableCap),
    Sealed(SealId, SealableCap),
}

impl Capability {
    pub fn inner(&self) -> &SealableCap {
        match self {
            Capability::Plain(sc) | Capability::Sealed(_, sc) => sc,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Word {
    Int(i128),
    Cap(Capability),
}

impl Default for Word {
    fn default() -> Self {
        Word::Int(0)
    }
}

impl From<i128> for Word {
    fn from(n: i128) -> Self {
        Word::Int(n)
    }
}

impl From<SealableCap> for Word {
    fn from(sc: SealableCap) -> Self {
        Word::Cap(Capability::Plain(sc))
    }
}

impl From<MemCap> for Word {
    fn from(c: MemCap) -> Self {
        SealableCap::Mem(c).into()
    }
}

impl From<SealCap> for Word {
    fn from(c: SealCap) -> Self {
        SealableCap::Seal(c).into()
    }
}

impl From<StkPtr> for Word {
    fn from(c: StkPtr) -> Self {
        SealableCap::Stk(c).into()
    }
}

impl From<Capability> for Word {
    fn from(c: Capability) -> Self {
        Word::Cap(c)
    }
}

impl Word {
    pub fn sealed(sigma: SealId, sc: SealableCap) -> Word {
        Word::Cap(Capability::Sealed(sigma, sc))
    }

    pub fn as_int(&self) -> Option<i128> {
        match self {
            Word::Int(n) => Some(*n),
            Word::Cap(_) => None,
        }
    }

    /// The unsealed capability, if any.
    pub fn as_plain(&self) -> Option<&SealableCap> {
        match self {
            Word::Cap(Capability::Plain(sc)) => Some(sc),
            _ => None,
        }
    }

    pub fn as_mem_cap(&self) -> Option<&MemCap> {
        match self.as_plain() {
            Some(SealableCap::Mem(c)) => Some(c),
            _ => None,
        }
    }

    pub fn as_stk_ptr(&self) -> Option<&StkPtr> {
        match self.as_plain() {
            Some(SealableCap::Stk(c)) => Some(c),
            _ => None,
        }
    }

    pub fn is_source_only(&self) -> bool {
        match self {
            Word::Int(_) => false,
            Word::Cap(c) => c.inner().is_source_only(),
        }
    }
}

/// Linear words: linear memory capabilities, stack pointers, return data
/// tokens, and sealed wrappers of any of those.
pub fn is_linear(w: &Word) -> bool {
    match w {
        Word::Int(_) => false,
        Word::Cap(c) => c.inner().is_linear(),
    }
}

/// Clears a linear word; other words are returned unchanged.
pub fn lin_cons(w: Word) -> Word {
    if is_linear(&w) {
        Word::Int(0)
    } else {
        w
    }
}

/// A linear word can only be read through a capability that may also clear it.
pub fn lin_cons_perm(p: Permission, w: &Word) -> bool {
    !is_linear(w) || write_allowed(p)
}

pub fn within_bounds(sc: &SealableCap) -> bool {
    match sc {
        SealableCap::Mem(c) => c.within_bounds(),
        SealableCap::Stk(s) => s.within_bounds(),
        SealableCap::Seal(s) => s.within_bounds(),
        SealableCap::RetData { .. } | SealableCap::RetCode { .. } => false,
    }
}

/// Only plain memory capabilities with an executable permission are executable.
pub fn is_exec(sc: &SealableCap) -> bool {
    matches!(sc, SealableCap::Mem(c) if exec_allowed(c.perm))
}

pub fn non_zero(w: &Word) -> bool {
    !matches!(w, Word::Int(0))
}

pub const TYPE_INT: i128 = 0;
pub const TYPE_MEM: i128 = 1;
pub const TYPE_SEAL: i128 = 2;
pub const TYPE_SEALED: i128 = 3;

/// Word type code observed by `gettype`. Source tokens report the type of the
/// target capability they stand for.
pub fn enc_type(w: &Word) -> i128 {
    match w {
        Word::Int(_) => TYPE_INT,
        Word::Cap(Capability::Sealed(..)) => TYPE_SEALED,
        Word::Cap(Capability::Plain(SealableCap::Seal(_))) => TYPE_SEAL,
        Word::Cap(Capability::Plain(_)) => TYPE_MEM,
    }
}

// Text form: int:N | cap:PERM,LIN,B,E,A | seal:B,E,C | stk:PERM,B,E,A
//          | retdata:B,E | retcode:B,E,A | sealed:S,(<sealable>)

impl fmt::Display for SealableCap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SealableCap::Mem(c) => write!(f, "cap:{},{},{},{},{}", c.perm, c.lin, c.base, c.end, c.addr),
            SealableCap::Seal(s) => write!(f, "seal:{},{},{}", s.base, s.end, s.cursor),
            SealableCap::Stk(s) => write!(f, "stk:{},{},{},{}", s.perm, s.base, s.end, s.addr),
            SealableCap::RetData { base, end } => write!(f, "retdata:{base},{end}"),
            SealableCap::RetCode { base, end, addr } => write!(f, "retcode:{base},{end},{addr}"),
        }
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Word::Int(n) => write!(f, "int:{n}"),
            Word::Cap(Capability::Plain(sc)) => write!(f, "{sc}"),
            Word::Cap(Capability::Sealed(s, sc)) => write!(f, "sealed:{s},({sc})"),
        }
    }
}

/// Parses the text form of a word. Numeric fields go through `num`, which lets
/// the assembler accept label expressions in place of literals.
pub fn parse_word_with(
    text: &str,
    num: &mut dyn FnMut(&str) -> Result<i128, String>,
) -> Result<Word, String> {
    let text = text.trim();
    let (tag, rest) = text
        .split_once(':')
        .ok_or_else(|| format!("word `{text}` lacks a `kind:` prefix"))?;
    let tag = tag.trim().to_ascii_lowercase();
    if tag == "int" {
        return num(rest.trim()).map(Word::Int);
    }
    if tag == "sealed" {
        let (sigma, inner) = rest
            .split_once(',')
            .ok_or_else(|| format!("malformed sealed word `{text}`"))?;
        let sigma = nat(num(sigma.trim())?)?;
        let inner = inner.trim();
        let inner = inner
            .strip_prefix('(')
            .and_then(|s| s.strip_suffix(')'))
            .unwrap_or(inner);
        return match parse_word_with(inner, num)? {
            Word::Cap(Capability::Plain(sc)) => Ok(Word::sealed(sigma, sc)),
            _ => Err(format!("sealed word `{text}` must wrap an unsealed capability")),
        };
    }
    let fields: Vec<&str> = rest.split(',').map(str::trim).collect();
    let want = |n: usize| -> Result<(), String> {
        if fields.len() == n {
            Ok(())
        } else {
            Err(format!("`{tag}` word expects {n} fields, got {}", fields.len()))
        }
    };
    let mut bound = |s: &str| -> Result<Bound, String> {
        if s.eq_ignore_ascii_case("inf") {
            Ok(Bound::Inf)
        } else {
            Ok(Bound::Fin(nat(num(s)?)?))
        }
    };
    let sc = match tag.as_str() {
        "cap" => {
            want(5)?;
            let perm: Permission = fields[0].parse()?;
            let lin: Linearity = fields[1].parse()?;
            let end = bound(fields[3])?;
            SealableCap::Mem(MemCap {
                perm,
                lin,
                base: nat(num(fields[2])?)?,
                end,
                addr: nat(num(fields[4])?)?,
            })
        }
        "seal" => {
            want(3)?;
            let end = bound(fields[1])?;
            SealableCap::Seal(SealCap {
                base: nat(num(fields[0])?)?,
                end,
                cursor: nat(num(fields[2])?)?,
            })
        }
        "stk" => {
            want(4)?;
            let perm: Permission = fields[0].parse()?;
            let end = bound(fields[2])?;
            SealableCap::Stk(StkPtr {
                perm,
                base: nat(num(fields[1])?)?,
                end,
                addr: nat(num(fields[3])?)?,
            })
        }
        "retdata" => {
            want(2)?;
            let end = bound(fields[1])?;
            SealableCap::RetData {
                base: nat(num(fields[0])?)?,
                end,
            }
        }
        "retcode" => {
            want(3)?;
            let end = bound(fields[1])?;
            SealableCap::RetCode {
                base: nat(num(fields[0])?)?,
                end,
                addr: nat(num(fields[2])?)?,
            }
        }
        _ => return Err(format!("unknown word kind `{tag}`")),
    };
    Ok(sc.into())
}

fn nat(n: i128) -> Result<u64, String> {
    u64::try_from(n).map_err(|_| format!("{n} is not a natural number"))
}

impl FromStr for Word {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_word_with(s, &mut |t: &str| {
            t.parse::<i128>().map_err(|e| format!("bad integer `{t}`: {e}"))
        })
    }
}
