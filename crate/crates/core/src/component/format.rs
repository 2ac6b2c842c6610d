//! Line-oriented container format for components.
//!
//! ```text
//! [code base=99]
//! int:0
//! int:4
//! [data]
//! 300 cap:RW,normal,300,309,300
//! [imports]
//! 310 callback
//! [exports]
//! entry sealed:10,(cap:RX,normal,100,140,100)
//! [seals ret=11..12 clos=10]
//! [linear]
//! 320..329
//! [main]
//! code sealed:10,(cap:RX,normal,100,140,100)
//! data sealed:10,(cap:RW,normal,300,309,300)
//! ```
//!
//! `#` and `;` start comments.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use super::Component;
use crate::machine::{Addr, Word};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {msg}")]
pub struct FormatError {
    pub line: usize,
    pub msg: String,
}

enum Section {
    None,
    Code(Addr),
    Data,
    Imports,
    Exports,
    Linear,
    Main,
}

pub fn parse_component(text: &str) -> Result<Component, FormatError> {
    let mut c = Component::default();
    let mut section = Section::None;
    let mut main_code = None;
    let mut main_data = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let err = |msg: String| FormatError { line: line_no, msg };
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('[') {
            let header = header.strip_suffix(']').ok_or_else(|| err("unterminated section header".into()))?;
            section = parse_header(header, &mut c).map_err(err)?;
            continue;
        }
        let word = |s: &str| s.parse::<Word>().map_err(err);
        match &mut section {
            Section::None => return Err(err("content outside of a section".into())),
            Section::Code(next) => {
                let a = *next;
                if c.code.insert(a, word(line)?).is_some() {
                    return Err(err(format!("code address {a} defined twice")));
                }
                *next = a + 1;
            }
            Section::Data => {
                let (a, w) = split2(line).ok_or_else(|| err("expected `addr word`".into()))?;
                let a = parse_addr(a).map_err(err)?;
                if c.data.insert(a, word(w)?).is_some() {
                    return Err(err(format!("data address {a} defined twice")));
                }
            }
            Section::Imports => {
                let (a, sym) = split2(line).ok_or_else(|| err("expected `addr symbol`".into()))?;
                c.imports.push((parse_addr(a).map_err(err)?, sym.to_string()));
            }
            Section::Exports => {
                let (sym, w) = split2(line).ok_or_else(|| err("expected `symbol word`".into()))?;
                if c.exports.insert(sym.to_string(), word(w)?).is_some() {
                    return Err(err(format!("export `{sym}` defined twice")));
                }
            }
            Section::Linear => {
                for item in line.split([',', ' ']).filter(|s| !s.is_empty()) {
                    c.a_linear.extend(parse_range(item).map_err(err)?);
                }
            }
            Section::Main => {
                let (which, w) = split2(line).ok_or_else(|| err("expected `code word` or `data word`".into()))?;
                match which {
                    "code" => main_code = Some(word(w)?),
                    "data" => main_data = Some(word(w)?),
                    _ => return Err(err(format!("unknown main entry `{which}`"))),
                }
            }
        }
    }
    match (main_code, main_data) {
        (Some(code), Some(data)) => c.main = Some((code, data)),
        (None, None) => {}
        _ => {
            return Err(FormatError {
                line: text.lines().count(),
                msg: "[main] needs both a code and a data entry".into(),
            })
        }
    }
    Ok(c)
}

fn strip_comment(line: &str) -> &str {
    match line.find(['#', ';']) {
        Some(i) => &line[..i],
        None => line,
    }
}

fn split2(line: &str) -> Option<(&str, &str)> {
    let (a, b) = line.split_once(char::is_whitespace)?;
    let b = b.trim();
    (!b.is_empty()).then_some((a, b))
}

fn parse_addr(s: &str) -> Result<Addr, String> {
    s.parse().map_err(|_| format!("bad address `{s}`"))
}

fn parse_range(s: &str) -> Result<std::ops::RangeInclusive<u64>, String> {
    match s.split_once("..") {
        Some((a, b)) => Ok(parse_addr(a)?..=parse_addr(b)?),
        None => {
            let a = parse_addr(s)?;
            Ok(a..=a)
        }
    }
}

/// Comma-separated numbers and `a..b` ranges; `-` or nothing for the empty set.
pub(crate) fn parse_set(s: &str) -> Result<BTreeSet<u64>, String> {
    let mut out = BTreeSet::new();
    for item in s.split(',').map(str::trim).filter(|t| !t.is_empty() && *t != "-") {
        out.extend(parse_range(item)?);
    }
    Ok(out)
}

pub(crate) fn format_set(set: &BTreeSet<u64>) -> String {
    let mut parts = Vec::new();
    let mut it = set.iter().copied().peekable();
    while let Some(lo) = it.next() {
        let mut hi = lo;
        while it.peek() == Some(&(hi + 1)) {
            hi += 1;
            it.next();
        }
        parts.push(if lo == hi { lo.to_string() } else { format!("{lo}..{hi}") });
    }
    if parts.is_empty() {
        "-".into()
    } else {
        parts.join(",")
    }
}

fn parse_header(header: &str, c: &mut Component) -> Result<Section, String> {
    let mut parts = header.split_whitespace();
    let name = parts.next().unwrap_or("");
    let args: Vec<(&str, &str)> = parts
        .map(|p| p.trim_end_matches(','))
        .filter(|p| !p.is_empty())
        .map(|p| p.split_once('=').ok_or_else(|| format!("expected key=value, got `{p}`")))
        .collect::<Result<_, _>>()?;
    let arg = |key: &str| args.iter().find(|(k, _)| *k == key).map(|(_, v)| *v);
    Ok(match name {
        "code" => {
            let base = arg("base").ok_or("[code] needs base=N")?;
            Section::Code(parse_addr(base)?)
        }
        "data" => Section::Data,
        "imports" => Section::Imports,
        "exports" => Section::Exports,
        "linear" => Section::Linear,
        "main" => Section::Main,
        "seals" => {
            c.sig_ret.extend(parse_set(arg("ret").unwrap_or(""))?);
            c.sig_clos.extend(parse_set(arg("clos").unwrap_or(""))?);
            Section::None
        }
        _ => return Err(format!("unknown section `{name}`")),
    })
}

pub fn write_component(c: &Component) -> String {
    let mut out = String::new();
    let mut prev: Option<Addr> = None;
    for (a, w) in c.code.iter() {
        if prev.is_none_or(|p| p + 1 != a) {
            let _ = writeln!(out, "[code base={a}]");
        }
        let _ = writeln!(out, "{w}");
        prev = Some(a);
    }
    if !c.data.is_empty() {
        out.push_str("[data]\n");
        for (a, w) in c.data.iter() {
            let _ = writeln!(out, "{a} {w}");
        }
    }
    if !c.imports.is_empty() {
        out.push_str("[imports]\n");
        for (a, sym) in &c.imports {
            let _ = writeln!(out, "{a} {sym}");
        }
    }
    if !c.exports.is_empty() {
        out.push_str("[exports]\n");
        for (sym, w) in &c.exports {
            let _ = writeln!(out, "{sym} {w}");
        }
    }
    let _ = writeln!(out, "[seals ret={} clos={}]", format_set(&c.sig_ret), format_set(&c.sig_clos));
    if !c.a_linear.is_empty() {
        let _ = writeln!(out, "[linear]\n{}", format_set(&c.a_linear));
    }
    if let Some((code, data)) = &c.main {
        let _ = writeln!(out, "[main]\ncode {code}\ndata {data}");
    }
    out
}
