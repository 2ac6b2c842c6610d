//! Well-formedness of components.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use super::Component;
use crate::asm::callmacro::{find_hidden_calls, recognize_call, CallConvention, CALL_LEN};
use crate::machine::{
    perm_leq, Addr, Bound, Capability, GlobalConstants, Linearity, MemCap, Permission, SealCap,
    SealId, SealableCap, Word,
};

/// One failed premise: the rule, where it failed and why.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub rule: &'static str,
    pub location: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}\t{}", self.rule, self.location, self.message)
    }
}

/// How to choose the trusted addresses for validation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TaChoice {
    /// The component's own code domain, pads included.
    Auto,
    /// No trusted addresses.
    Empty,
    Range(Addr, Addr),
}

impl TaChoice {
    pub fn resolve(&self, c: &Component) -> BTreeSet<Addr> {
        match self {
            TaChoice::Auto => c.code.domain().collect(),
            TaChoice::Empty => BTreeSet::new(),
            TaChoice::Range(lo, hi) => (*lo..=*hi).collect(),
        }
    }
}

impl FromStr for TaChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "auto" => Ok(TaChoice::Auto),
            "none" | "empty" => Ok(TaChoice::Empty),
            _ => {
                let (a, b) = s.split_once("..").ok_or_else(|| format!("expected auto, none or a..b, got `{s}`"))?;
                let p = |t: &str| t.parse::<Addr>().map_err(|e| format!("bad address `{t}`: {e}"));
                Ok(TaChoice::Range(p(a)?, p(b)?))
            }
        }
    }
}

struct Diags(Vec<Diagnostic>);

impl Diags {
    fn push(&mut self, rule: &'static str, location: impl fmt::Display, message: impl Into<String>) {
        self.0.push(Diagnostic { rule, location: location.to_string(), message: message.into() });
    }
}

/// Checks every premise of the component judgment and reports each failure.
/// `gc.stk_base` and `conv` determine what counts as a call sequence.
pub fn validate_component(c: &Component, gc: &GlobalConstants, conv: CallConvention) -> Result<(), Vec<Diagnostic>> {
    let mut d = Diags(Vec::new());
    let ta = &gc.ta;

    // code domain and pads
    let padded = c.code.contiguous_range();
    match padded {
        None if c.code.is_empty() => d.push("code-domain", "code", "code has no cells, not even pads"),
        None => d.push("code-domain", "code", "code domain is not a contiguous range"),
        Some((lo, hi)) if lo == hi => d.push("code-domain", lo, "code needs a pad on each side"),
        Some((lo, hi)) => {
            for pad in [lo, hi] {
                match c.code.get(pad) {
                    Some(Word::Int(0)) => {}
                    Some(w) => d.push("pad", pad, format!("pad cell holds {w}, expected int:0")),
                    None => unreachable!("pads are the ends of the code range"),
                }
            }
        }
    }
    let code = c.unpadded_code();
    let code_dom: BTreeSet<Addr> = code.domain().collect();

    for a in c.data.domain() {
        if code_dom.contains(&a) {
            d.push("code-data", a, "address is in both code and data");
        } else if c.code.contains(a) {
            d.push("pad-data", a, "data overlaps a code pad");
        } else if let Some((lo, hi)) = padded {
            if lo <= a && a <= hi {
                d.push("pad-data", a, "data lies inside the padded code range");
            }
        }
        if ta.contains(&a) {
            d.push("data-ta", a, "data address is trusted");
        }
    }

    let trusted = !code_dom.is_empty() && code_dom.is_subset(ta);
    let untrusted = code_dom.is_disjoint(ta) && c.sig_ret.is_empty();
    if !trusted && !untrusted {
        let msg = if code_dom.is_disjoint(ta) {
            "untrusted code may not own return seals"
        } else {
            "code must lie entirely inside or entirely outside the trusted addresses"
        };
        d.push("trust", "code", msg);
    }

    for s in c.sig_ret.intersection(&c.sig_clos) {
        d.push("seal-sets", format!("seal {s}"), "seal is both a return seal and a closure seal");
    }

    check_code(&mut d, c, &code, gc, conv);
    check_data(&mut d, c);

    let non_linear: BTreeSet<Addr> = c.data.domain().filter(|a| !c.a_linear.contains(a)).collect();
    for (sym, w) in &c.exports {
        if let Err(msg) = export_ok(w, &code_dom, &non_linear, &c.sig_clos) {
            d.push("comp-export", format!("export {sym}"), msg);
        }
    }
    for (a, sym) in &c.imports {
        if !c.data.contains(*a) {
            let where_ = if c.code.contains(*a) { "code" } else { "no segment" };
            d.push("import-addr", a, format!("import `{sym}` targets {where_}, not data"));
        }
        if c.exports.contains_key(sym) {
            d.push("import-export", format!("symbol {sym}"), "symbol is both imported and exported");
        }
    }
    if let Some((mc, md)) = &c.main {
        for (name, w) in [("code", mc), ("data", md)] {
            if !c.exports.values().any(|e| e == w) {
                d.push("main", name, format!("main {name} word {w} is not exported"));
            }
        }
    }

    if d.0.is_empty() {
        Ok(())
    } else {
        Err(d.0)
    }
}

fn check_code(
    d: &mut Diags,
    c: &Component,
    code: &crate::machine::MemorySegment,
    gc: &GlobalConstants,
    conv: CallConvention,
) {
    let all_seals: BTreeSet<SealId> = c.sig_ret.union(&c.sig_clos).copied().collect();
    // the seal word's range must be exactly the component's seals
    let seal_word_ok = |s: &SealCap| {
        let Some(end) = s.end.finite() else { return false };
        s.cursor == s.base
            && end.checked_sub(s.base).map(|n| n as u128 + 1) == Some(all_seals.len() as u128)
            && (s.base..=end).all(|x| all_seals.contains(&x))
    };

    if !code.iter().any(|(_, w)| matches!(w.as_plain(), Some(SealableCap::Seal(s)) if range_nonempty(s.base, s.end))) {
        d.push("seal-word", "code", "no seal word with a nonempty range");
    }

    for (a, w) in code.iter() {
        match w {
            Word::Int(_) => {}
            Word::Cap(Capability::Plain(SealableCap::Seal(s))) if seal_word_ok(s) => {}
            Word::Cap(Capability::Plain(SealableCap::Seal(s))) => d.push(
                "comp-code",
                a,
                format!("seal word {} must be seal(b,e,b) with [b,e] = return seals ∪ closure seals", SealableCap::Seal(*s)),
            ),
            _ => d.push("comp-code", a, format!("code may only hold integers and seal words, found {w}")),
        }
    }

    for h in find_hidden_calls(code, gc.stk_base, conv) {
        d.push("hidden-call", h.addr, h.to_string());
    }

    // build the seal ownership map: each trusted call claims one return seal
    let mut claims: BTreeMap<SealId, Addr> = BTreeMap::new();
    for a in code.domain() {
        let window = a..a.saturating_add(CALL_LEN as u64);
        if !window.clone().all(|x| gc.ta.contains(&x)) {
            continue;
        }
        let Some(p) = recognize_call(code, a, gc.stk_base, conv) else { continue };
        let seal_at = a + p.off_pc;
        let seal = match code.get(seal_at).and_then(Word::as_plain) {
            Some(SealableCap::Seal(s)) if s.cursor == s.base => *s,
            _ => {
                d.push("seal-claim", a, format!("call expects a seal(b,e,b) word at {seal_at}"));
                continue;
            }
        };
        let Some(sigma) = seal.base.checked_add(p.off_sigma) else {
            d.push("seal-claim", a, "return seal overflows");
            continue;
        };
        if !c.sig_ret.contains(&sigma) {
            d.push("seal-claim", a, format!("call uses seal {sigma}, which is not a return seal"));
        } else if let Some(prev) = claims.insert(sigma, a) {
            d.push(
                "seal-double-claim",
                a,
                format!("return seal {sigma} is already used by the call at {prev}"),
            );
        }
    }
}

fn range_nonempty(base: u64, end: Bound) -> bool {
    Bound::Fin(base) <= end
}

fn check_data(d: &mut Diags, c: &Component) {
    for a in &c.a_linear {
        if !c.data.contains(*a) {
            d.push("linear-set", a, "linear address is not a data address");
        }
    }
    let non_linear: BTreeSet<Addr> = c.data.domain().filter(|a| !c.a_linear.contains(a)).collect();
    // owner of each linear address
    let mut owner: BTreeMap<Addr, Addr> = BTreeMap::new();
    for (a, w) in c.data.iter() {
        if let Err(msg) = value_ok(w, &non_linear, &c.sig_clos) {
            d.push("comp-value", a, msg);
            continue;
        }
        let Some(range) = linear_range(w) else { continue };
        if let Some(x) = range.clone().find(|x| !c.a_linear.contains(x)) {
            d.push("comp-value", a, format!("linear capability covers {x}, which is not a linear address"));
            continue;
        }
        let clash = range.filter_map(|x| owner.insert(x, a).map(|prev| (x, prev))).next();
        if let Some((x, prev)) = clash {
            d.push(
                "linear-overlap",
                a,
                format!("linear capability overlaps the one at {prev} (address {x})"),
            );
        }
    }
}

/// The range owned by a (possibly sealed) linear memory capability.
fn linear_range(w: &Word) -> Option<std::ops::RangeInclusive<Addr>> {
    match w {
        Word::Cap(c) => match c.inner() {
            SealableCap::Mem(MemCap { lin: Linearity::Linear, base, end: Bound::Fin(e), .. }) => Some(*base..=*e),
            _ => None,
        },
        Word::Int(_) => None,
    }
}

fn value_ok(w: &Word, non_linear: &BTreeSet<Addr>, clos: &BTreeSet<SealId>) -> Result<(), String> {
    match w {
        Word::Int(_) => Ok(()),
        Word::Cap(Capability::Plain(sc)) => sealable_ok(sc, non_linear),
        Word::Cap(Capability::Sealed(s, sc)) => {
            sealable_ok(sc, non_linear)?;
            if clos.contains(s) {
                Ok(())
            } else {
                Err(format!("sealed with {s}, which is not a closure seal"))
            }
        }
    }
}

fn sealable_ok(sc: &SealableCap, non_linear: &BTreeSet<Addr>) -> Result<(), String> {
    let SealableCap::Mem(m) = sc else {
        return Err(format!("data may not hold {sc}"));
    };
    if !perm_leq(m.perm, Permission::RW) {
        return Err(format!("perm ⊑ rw fails for {}", m.perm));
    }
    match (m.lin, m.end) {
        (Linearity::Linear, Bound::Fin(e)) if m.base <= e => Ok(()),
        (Linearity::Linear, Bound::Fin(_)) => Err("linear capability with an empty range".into()),
        (_, Bound::Inf) => Err("unbounded range".into()),
        (Linearity::Normal, Bound::Fin(e)) => match (m.base..=e).find(|x| !non_linear.contains(x)) {
            None => Ok(()),
            Some(x) => Err(format!("normal capability reaches {x}, which is not a non-linear data address")),
        },
    }
}

fn export_ok(
    w: &Word,
    code_dom: &BTreeSet<Addr>,
    non_linear: &BTreeSet<Addr>,
    clos: &BTreeSet<SealId>,
) -> Result<(), String> {
    if let Word::Cap(Capability::Sealed(
        s,
        SealableCap::Mem(MemCap { perm: Permission::RX, lin: Linearity::Normal, base, end, .. }),
    )) = w
    {
        if !clos.contains(s) {
            return Err(format!("closure sealed with {s}, which is not a closure seal"));
        }
        return match end {
            Bound::Fin(e) => match (*base..=*e).find(|x| !code_dom.contains(x)) {
                None => Ok(()),
                Some(x) => Err(format!("closure reaches {x}, outside the code")),
            },
            Bound::Inf => Err("closure range is unbounded".into()),
        };
    }
    // any other export must be a value owning no linear addresses
    if linear_range(w).is_some() {
        return Err("linear capabilities cannot be exported".into());
    }
    value_ok(w, non_linear, clos)
}
