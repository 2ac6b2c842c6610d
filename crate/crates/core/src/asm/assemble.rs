//! Two-pass assembler from text to a [`Component`].
//!
//! ```text
//! ; trusted code calling a closure held in r0/r1
//!         .code 100
//!         .seals ret=11 clos=10
//! entry:  call seal 1 r0 r1      ; seal word at `seal`, return seal 10+1
//!         halt
//! seal:   .seal 10 11 10
//!         .data 300
//! cb:     .import callback       ; filled in by the linker
//!         .export main_c = sealed:10,(cap:RX,normal,code.start,code.end,entry)
//! ```
//!
//! `lea r label` is shorthand for `move r pc; cca r label-addr`, leaving in
//! `r` the program counter moved to `label`.
//!
//! Expressions are integers, labels and `label±k`. `code.start`, `code.end`,
//! `data.start` and `data.end` name the first and last address of each
//! section.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use super::callmacro::{expand_scall, CallConvention, CallParams, CALL_LEN};
use crate::component::Component;
use crate::machine::word::parse_word_with;
use crate::machine::{
    enc_instr, opcode_of, usage, Addr, Bound, Instr, MemorySegment, Operand, RegName, SealCap, Word,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AsmConfig {
    /// Stack base embedded in every call sequence.
    pub stk_base: Addr,
    pub convention: CallConvention,
    /// Surround the code with zero pads.
    pub pads: bool,
}

impl Default for AsmConfig {
    fn default() -> Self {
        AsmConfig { stk_base: 0, convention: CallConvention::default(), pads: true }
    }
}

impl AsmConfig {
    pub fn with_stk_base(stk_base: Addr) -> Self {
        AsmConfig { stk_base, ..Default::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {msg}")]
pub struct AsmError {
    pub line: usize,
    pub msg: String,
}

/// Assembled component plus every label and section symbol.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assembly {
    pub component: Component,
    pub symbols: BTreeMap<String, Addr>,
}

impl Assembly {
    /// Code and data as one segment.
    pub fn memory(&self) -> MemorySegment {
        let mut m = self.component.code.clone();
        m.extend(self.component.data.iter().map(|(a, w)| (a, *w)));
        m
    }

    /// `name<TAB>addr` per line, sorted by name.
    pub fn symbol_table(&self) -> String {
        let mut out = String::new();
        for (name, a) in &self.symbols {
            let _ = writeln!(out, "{name}\t{a}");
        }
        out
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Sec {
    Code,
    Data,
}

enum Item<'a> {
    Instr(&'a str, Vec<&'a str>),
    Word(&'a str),
    Seal(Vec<&'a str>),
    Call(Vec<&'a str>),
    Lea(&'a str, &'a str),
    Zero,
}

impl Item<'_> {
    fn size(&self) -> u64 {
        match self {
            Item::Call(_) => CALL_LEN as u64,
            Item::Lea(..) => 2,
            _ => 1,
        }
    }
}

struct Placed<'a> {
    line: usize,
    sec: Sec,
    addr: Addr,
    item: Item<'a>,
}

#[derive(Default)]
struct Pass1<'a> {
    placed: Vec<Placed<'a>>,
    labels: BTreeMap<String, Addr>,
    imports: Vec<(usize, &'a str, Option<&'a str>, Addr)>,
    exports: Vec<(usize, &'a str, &'a str)>,
    linear: Vec<(usize, &'a str)>,
    main: Option<(usize, &'a str, &'a str)>,
    sig_ret: BTreeSet<u64>,
    sig_clos: BTreeSet<u64>,
}

pub fn assemble(src: &str, cfg: &AsmConfig) -> Result<Assembly, AsmError> {
    let p1 = first_pass(src)?;
    let mut symbols = p1.labels.clone();
    for (sec, name) in [(Sec::Code, "code"), (Sec::Data, "data")] {
        let addrs = p1.placed.iter().filter(|p| p.sec == sec).flat_map(|p| {
            let n = p.item.size();
            [p.addr, p.addr + n - 1]
        });
        if let (Some(lo), Some(hi)) = (addrs.clone().min(), addrs.max()) {
            symbols.insert(format!("{name}.start"), lo);
            symbols.insert(format!("{name}.end"), hi);
        }
    }
    let ev = Eval { symbols: &symbols };

    let mut code = MemorySegment::new();
    let mut data = MemorySegment::new();
    for p in &p1.placed {
        let err = |msg: String| AsmError { line: p.line, msg };
        let words = encode_item(&p.item, p.addr, &ev, cfg).map_err(err)?;
        let seg = if p.sec == Sec::Code { &mut code } else { &mut data };
        for (i, w) in words.into_iter().enumerate() {
            let a = p.addr + i as u64;
            if seg.insert(a, w).is_some() {
                return Err(err(format!("address {a} is assembled twice")));
            }
        }
    }
    if let Some(a) = code.domain().find(|a| data.contains(*a)) {
        let line = p1.placed.iter().find(|p| p.addr == a).map_or(0, |p| p.line);
        return Err(AsmError { line, msg: format!("address {a} is both code and data") });
    }
    if cfg.pads {
        if let (Some(lo), Some(hi)) = (code.min_addr(), code.max_addr()) {
            let Some(below) = lo.checked_sub(1) else {
                return Err(AsmError { line: 0, msg: "code starting at 0 leaves no room for its pad".into() });
            };
            code.insert(below, Word::Int(0));
            code.insert(hi + 1, Word::Int(0));
        }
    }

    let mut c = Component { code, data, sig_ret: p1.sig_ret, sig_clos: p1.sig_clos, ..Default::default() };
    for &(line, sym, at, here) in &p1.imports {
        let a = match at {
            Some(e) => ev.addr(e).map_err(|msg| AsmError { line, msg })?,
            None => here,
        };
        c.imports.push((a, sym.to_string()));
    }
    for &(line, sym, text) in &p1.exports {
        let w = ev.word(text).map_err(|msg| AsmError { line, msg })?;
        if c.exports.insert(sym.to_string(), w).is_some() {
            return Err(AsmError { line, msg: format!("export `{sym}` defined twice") });
        }
    }
    for &(line, text) in &p1.linear {
        let err = |msg: String| AsmError { line, msg };
        let (lo, hi) = match text.split_once("..") {
            Some((a, b)) => (ev.addr(a).map_err(err)?, ev.addr(b).map_err(err)?),
            None => {
                let a = ev.addr(text).map_err(err)?;
                (a, a)
            }
        };
        c.a_linear.extend(lo..=hi);
    }
    if let Some((line, mc, md)) = p1.main {
        let get = |s: &str| {
            c.exports.get(s).copied().ok_or_else(|| AsmError { line, msg: format!("main refers to unknown export `{s}`") })
        };
        c.main = Some((get(mc)?, get(md)?));
    }
    Ok(Assembly { component: c, symbols })
}

fn first_pass(src: &str) -> Result<Pass1<'_>, AsmError> {
    let mut p = Pass1::default();
    let mut sec = Sec::Code;
    let mut loc = [0u64; 2];
    for (i, raw) in src.lines().enumerate() {
        let line = i + 1;
        let err = |msg: String| AsmError { line, msg };
        let mut text = raw.split(';').next().unwrap_or("").trim();
        // labels, possibly several
        while let Some((head, rest)) = text.split_once(':') {
            let head = head.trim();
            if !is_label(head) || head.contains(char::is_whitespace) {
                break;
            }
            if head.parse::<RegName>().is_ok() {
                return Err(err(format!("label `{head}` is a register name")));
            }
            if p.labels.insert(head.to_string(), loc[sec as usize]).is_some() {
                return Err(err(format!("label `{head}` defined twice")));
            }
            text = rest.trim();
        }
        if text.is_empty() {
            continue;
        }
        let (head, rest) = match text.split_once(char::is_whitespace) {
            Some((h, r)) => (h, r.trim()),
            None => (text, ""),
        };
        let args: Vec<&str> = rest.split([' ', '\t', ',']).filter(|s| !s.is_empty()).collect();
        let here = loc[sec as usize];
        let (item, size): (Option<Item>, u64) = match head {
            ".code" | ".data" => {
                sec = if head == ".code" { Sec::Code } else { Sec::Data };
                if let Some(a) = args.first() {
                    loc[sec as usize] = literal(a).map_err(err)?;
                }
                (None, 0)
            }
            ".org" => {
                let a = args.first().ok_or_else(|| err(".org needs an address".into()))?;
                loc[sec as usize] = literal(a).map_err(err)?;
                (None, 0)
            }
            ".word" => {
                if rest.is_empty() {
                    return Err(err(".word needs a value".into()));
                }
                (Some(Item::Word(rest)), 1)
            }
            ".zero" => {
                let n = args.first().ok_or_else(|| err(".zero needs a count".into()))?;
                let n = literal(n).map_err(err)?;
                for k in 0..n {
                    p.placed.push(Placed { line, sec, addr: here + k, item: Item::Zero });
                }
                loc[sec as usize] = here + n;
                continue;
            }
            ".seal" => {
                if args.len() != 3 {
                    return Err(err(".seal takes base, end and cursor".into()));
                }
                (Some(Item::Seal(args)), 1)
            }
            ".import" => match args.as_slice() {
                [sym] => {
                    p.imports.push((line, sym, None, here));
                    (Some(Item::Zero), 1)
                }
                [sym, at] if at.starts_with('@') => {
                    p.imports.push((line, sym, Some(&at[1..]), here));
                    (None, 0)
                }
                _ => return Err(err(".import takes a symbol and optionally @addr".into())),
            },
            ".export" => {
                let (sym, w) = rest.split_once('=').ok_or_else(|| err(".export needs `sym = word`".into()))?;
                p.exports.push((line, sym.trim(), w.trim()));
                (None, 0)
            }
            ".seals" => {
                for a in &args {
                    let (k, v) = a.split_once('=').ok_or_else(|| err(format!("expected ret=… or clos=…, got `{a}`")))?;
                    let set = crate::component::format::parse_set(v).map_err(err)?;
                    match k {
                        "ret" => p.sig_ret.extend(set),
                        "clos" => p.sig_clos.extend(set),
                        _ => return Err(err(format!("unknown seal set `{k}`"))),
                    }
                }
                (None, 0)
            }
            ".linear" => {
                for a in args {
                    p.linear.push((line, a));
                }
                (None, 0)
            }
            ".main" => match args.as_slice() {
                [c, d] => {
                    p.main = Some((line, c, d));
                    (None, 0)
                }
                _ => return Err(err(".main takes the code and data export names".into())),
            },
            "call" => {
                if args.len() != 4 {
                    return Err(err("call takes <seal-label|off_pc> <off_sigma> <r1> <r2>".into()));
                }
                (Some(Item::Call(args)), CALL_LEN as u64)
            }
            "lea" => match args.as_slice() {
                [r, target] => (Some(Item::Lea(r, target)), 2),
                _ => return Err(err("lea takes a register and a code label".into())),
            },
            d if d.starts_with('.') => return Err(err(format!("unknown directive `{d}`"))),
            m => (Some(Item::Instr(m, args)), 1),
        };
        if let Some(item) = item {
            let next = here.checked_add(size).ok_or_else(|| err("location counter overflows".into()))?;
            p.placed.push(Placed { line, sec, addr: here, item });
            loc[sec as usize] = next;
        }
    }
    Ok(p)
}

fn is_label(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn literal(s: &str) -> Result<u64, String> {
    s.parse().map_err(|_| format!("expected a non-negative integer, got `{s}`"))
}

struct Eval<'a> {
    symbols: &'a BTreeMap<String, Addr>,
}

impl Eval<'_> {
    /// Value of `term (± term)*`, and whether a symbol occurs in it.
    fn expr(&self, s: &str) -> Result<(i128, bool), String> {
        let s = s.trim();
        if s.is_empty() {
            return Err("empty expression".into());
        }
        let mut total: i128 = 0;
        let mut has_sym = false;
        let mut rest = s;
        let mut sign = 1;
        loop {
            if let Some(r) = rest.strip_prefix('-') {
                sign = -sign;
                rest = r;
                continue;
            }
            if let Some(r) = rest.strip_prefix('+') {
                rest = r;
                continue;
            }
            let end = rest.find(['+', '-']).unwrap_or(rest.len());
            let term = &rest[..end];
            let v = if term.starts_with(|c: char| c.is_ascii_digit()) {
                term.parse::<i128>().map_err(|_| format!("bad number `{term}` in `{s}`"))?
            } else {
                has_sym = true;
                *self.symbols.get(term).ok_or_else(|| format!("unresolved label `{term}`"))? as i128
            };
            total = total
                .checked_add(sign * v)
                .ok_or_else(|| format!("`{s}` overflows"))?;
            rest = &rest[end..];
            if rest.is_empty() {
                return Ok((total, has_sym));
            }
            sign = 1;
        }
    }

    fn value(&self, s: &str) -> Result<i128, String> {
        self.expr(s).map(|(v, _)| v)
    }

    fn addr(&self, s: &str) -> Result<Addr, String> {
        let v = self.value(s)?;
        u64::try_from(v).map_err(|_| format!("`{s}` = {v} is not an address"))
    }

    fn word(&self, s: &str) -> Result<Word, String> {
        if s.contains(':') {
            parse_word_with(s, &mut |t: &str| self.value(t))
        } else {
            self.value(s).map(Word::Int)
        }
    }
}

fn encode_item(item: &Item, addr: Addr, ev: &Eval, cfg: &AsmConfig) -> Result<Vec<Word>, String> {
    Ok(match item {
        Item::Zero => vec![Word::Int(0)],
        Item::Word(text) => vec![ev.word(text)?],
        Item::Seal(args) => {
            let end = if args[1].eq_ignore_ascii_case("inf") { Bound::Inf } else { Bound::Fin(ev.addr(args[1])?) };
            vec![SealCap::new(ev.addr(args[0])?, end, ev.addr(args[2])?).into()]
        }
        Item::Instr(m, args) => {
            let opcode = opcode_of(m).ok_or_else(|| format!("unknown mnemonic `{m}`"))?;
            let ops = args
                .iter()
                .map(|a| match a.parse::<RegName>() {
                    Ok(r) => Ok(Operand::Reg(r)),
                    Err(_) => ev.value(a).map(Operand::Imm),
                })
                .collect::<Result<Vec<_>, String>>()?;
            let instr = Instr::from_parts(opcode, &ops).ok_or_else(|| usage(opcode))?;
            vec![enc_instr(&instr).map_err(|e| e.to_string())?]
        }
        Item::Lea(r, target) => {
            let r = r.parse::<RegName>()?;
            let off = ev.value(target)? - addr as i128;
            [Instr::Move(r, Operand::Reg(RegName::Pc)), Instr::Cca(r, Operand::Imm(off))]
                .iter()
                .map(|i| enc_instr(i).map_err(|e| e.to_string()))
                .collect::<Result<_, _>>()?
        }
        Item::Call(args) => {
            let (target, relative) = ev.expr(args[0])?;
            let off_pc = if relative { target - addr as i128 } else { target };
            let off_pc = u64::try_from(off_pc).map_err(|_| format!("call offset {off_pc} is negative"))?;
            let off_sigma = u64::try_from(ev.value(args[1])?).map_err(|_| "off_sigma must be non-negative".to_string())?;
            let reg = |s: &str| s.parse::<RegName>();
            let p = CallParams { off_pc, off_sigma, r1: reg(args[2])?, r2: reg(args[3])? };
            expand_scall(&p, cfg.stk_base, cfg.convention).map_err(|e| e.to_string())?
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asm::callmacro::recognize_call;
    use crate::machine::{Capability, Linearity, MemCap, Permission, SealableCap};

    fn raw() -> AsmConfig {
        AsmConfig { pads: false, ..AsmConfig::with_stk_base(1000) }
    }

    #[test]
    fn halt_at_zero() {
        let a = assemble("halt", &raw()).unwrap();
        let want: MemorySegment = [(0, enc_instr(&Instr::Halt).unwrap())].into_iter().collect();
        assert_eq!(a.memory(), want);
    }

    #[test]
    fn word_directive() {
        let a = assemble(".org 7\n.word 42", &raw()).unwrap();
        assert_eq!(a.memory().get(7), Some(&Word::Int(42)));
    }

    #[test]
    fn call_occupies_26_cells_and_resolves_seal_label() {
        let src = ".code 10\nstart: call s 2 r0 r1\n halt\ns: .seal 5 9 5\n";
        let a = assemble(src, &AsmConfig::with_stk_base(1000)).unwrap();
        let code = &a.component.code;
        assert_eq!(code.contiguous_range(), Some((9, 38)));
        assert_eq!(a.symbols["s"], 37);
        let p = recognize_call(code, 10, 1000, CallConvention::default()).unwrap();
        assert_eq!((p.off_pc, p.off_sigma), (27, 2));
        assert_eq!(code.get(37), Some(&SealCap::new(5, 9, 5).into()));
    }

    #[test]
    fn labels_and_expressions() {
        let src = "a: move r0 b+2\n jmp r0\nb: .word b-a\n";
        let a = assemble(src, &raw()).unwrap();
        let m = a.memory();
        assert_eq!(m.get(0), Some(&enc_instr(&Instr::Move(RegName::Gen(0), Operand::Imm(4))).unwrap()));
        assert_eq!(m.get(2), Some(&Word::Int(2)));
        assert_eq!(a.symbol_table(), "a\t0\nb\t2\ncode.end\t2\ncode.start\t0\n");
    }

    #[test]
    fn component_directives() {
        let src = "
            .code 100
            .seals ret=11 clos=10
        f:  halt
            .seal 10 11 10
            .data 300
        d:  .word cap:RW,normal,d,d+1,d
            .word 0
        cb: .import callback
            .import other @d+1
            .linear 302..303
            .zero 2
            .export fc = sealed:10,(cap:RX,normal,code.start,code.end,f)
            .export fd = sealed:10,(cap:RW,normal,d,d+1,d)
            .main fc fd
        ";
        let a = assemble(src, &AsmConfig::with_stk_base(1000)).unwrap();
        let c = &a.component;
        assert_eq!(c.code.contiguous_range(), Some((99, 102)));
        assert_eq!(c.imports, vec![(302, "callback".to_string()), (301, "other".to_string())]);
        assert_eq!(c.data.contiguous_range(), Some((300, 304)));
        assert_eq!(c.a_linear, [302, 303].into());
        assert_eq!(c.sig_ret, [11].into());
        let fc = c.exports["fc"];
        assert_eq!(
            fc,
            Word::Cap(Capability::Sealed(
                10,
                SealableCap::Mem(MemCap::new(Permission::RX, Linearity::Normal, 100, 101, 100))
            ))
        );
        assert_eq!(c.main, Some((fc, c.exports["fd"])));
    }

    #[test]
    fn lea_points_at_label() {
        let a = assemble("nop: halt\n lea r2 nop\n", &raw()).unwrap();
        let m = a.memory();
        assert_eq!(m.get(1), Some(&enc_instr(&Instr::Move(RegName::Gen(2), Operand::Reg(RegName::Pc))).unwrap()));
        assert_eq!(m.get(2), Some(&enc_instr(&Instr::Cca(RegName::Gen(2), Operand::Imm(-1))).unwrap()));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = assemble("halt\nfrobnicate r1\n", &raw()).unwrap_err();
        assert_eq!(e.line, 2);
        let e = assemble("halt\n\njmp nowhere\n", &raw()).unwrap_err();
        assert_eq!(e.line, 3);
        assert!(e.msg.contains("nowhere"));
        let e = assemble("move r0 4294967296\n", &raw()).unwrap_err();
        assert!(e.msg.contains("immediate"));
        let e = assemble("x: halt\nx: halt\n", &raw()).unwrap_err();
        assert_eq!(e.line, 2);
        let e = assemble("call 30 0 rtmp1 r1\n", &raw()).unwrap_err();
        assert!(e.msg.contains("rtmp1"));
        let e = assemble(".code 0\nhalt\n", &AsmConfig::default()).unwrap_err();
        assert!(e.msg.contains("pad"));
    }
}
