//! Memory back to assembly text.

use std::fmt::Write as _;

use super::callmacro::{recognize_call, CallConvention, CALL_LEN};
use crate::machine::{dec_instr, enc_instr, Addr, Capability, MemorySegment, SealableCap, Word};

/// One line per cell, with call sequences folded into `call` lines and an
/// `.org` wherever the address is not the previous one plus one. Assembling
/// the output without pads gives back `seg`.
pub fn disassemble(seg: &MemorySegment, stk_base: Addr, conv: CallConvention) -> String {
    let mut out = String::new();
    let mut next: Option<Addr> = None;
    let mut skip_until = 0;
    for (a, w) in seg.iter() {
        if next.is_some() && a < skip_until {
            continue;
        }
        if next != Some(a) {
            let _ = writeln!(out, ".org {a}");
        }
        if let Some(p) = recognize_call(seg, a, stk_base, conv) {
            let _ = writeln!(out, "    {:<40} ; {a}..{}", p.to_string(), a + CALL_LEN as u64 - 1);
            skip_until = a + CALL_LEN as u64;
            next = Some(skip_until);
            continue;
        }
        let _ = writeln!(out, "    {:<40} ; {a}", cell(w));
        next = a.checked_add(1);
    }
    out
}

fn cell(w: &Word) -> String {
    match w {
        Word::Int(0) => ".word 0".into(),
        Word::Int(n) => {
            let i = dec_instr(w);
            if enc_instr(&i).ok().as_ref() == Some(w) {
                i.to_string()
            } else {
                format!(".word {n}")
            }
        }
        Word::Cap(Capability::Plain(SealableCap::Seal(s))) => format!(".seal {} {} {}", s.base, s.end, s.cursor),
        Word::Cap(c) => {
            let shape = match c {
                Capability::Sealed(..) => "sealed",
                Capability::Plain(SealableCap::Mem(_)) => "memory",
                Capability::Plain(_) => "token",
            };
            format!(".word {w}  ; {shape}")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asm::{assemble, AsmConfig};
    use crate::machine::{Linearity, MemCap, Permission};

    fn raw() -> AsmConfig {
        AsmConfig { pads: false, ..AsmConfig::with_stk_base(1000) }
    }

    #[test]
    fn folds_calls_and_roundtrips() {
        let src = ".code 10\ncall s 2 r0 r1\nhalt\nmove r2 -7\ns: .seal 5 9 5\n.org 50\n.word 123456789012345678901234\n";
        let a = assemble(src, &raw()).unwrap();
        let text = disassemble(&a.memory(), 1000, CallConvention::default());
        assert!(text.contains("call 28 2 r0 r1"), "{text}");
        assert_eq!(text.lines().filter(|l| l.contains("call")).count(), 1);
        let b = assemble(&text, &raw()).unwrap();
        assert_eq!(b.memory(), a.memory());
    }

    #[test]
    fn capabilities_print_as_data() {
        let mut m = MemorySegment::new();
        m.insert(3, MemCap::new(Permission::RW, Linearity::Linear, 1, 2, 1).into());
        let text = disassemble(&m, 0, CallConvention::default());
        assert!(text.contains(".word cap:RW,linear,1,2,1  ; memory"), "{text}");
        assert_eq!(assemble(&text, &raw()).unwrap().memory(), m);
    }
}
