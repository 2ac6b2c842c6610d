//! Instructions and their integer encoding.
//!
//! An instruction is packed as a mixed-radix number. The opcode is the lowest
//! digit (radix 23); each operand follows, register-only operands in radix
//! [`REG_COUNT`] and register-or-immediate operands in radix `2^33`, where a
//! register `r` is the even digit `2*r` and an immediate `n` the odd digit
//! `2*(n + 2^31) + 1`. Integers outside the image decode to `fail`.

use std::fmt;
use std::str::FromStr;

use super::regs::{RegName, REG_COUNT};
use super::word::Word;

/// Immediates satisfy `IMM_MIN <= n < IMM_MAX`.
pub const IMM_MIN: i128 = -(1 << 31);
pub const IMM_MAX: i128 = 1 << 31;

const OPCODES: i128 = 23;
const RN_RADIX: i128 = 1 << 33;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Operand {
    Reg(RegName),
    Imm(i128),
}

impl From<RegName> for Operand {
    fn from(r: RegName) -> Self {
        Operand::Reg(r)
    }
}

impl From<i128> for Operand {
    fn from(n: i128) -> Self {
        Operand::Imm(n)
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Reg(r) => write!(f, "{r}"),
            Operand::Imm(n) => write!(f, "{n}"),
        }
    }
}

impl FromStr for Operand {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Ok(n) = s.parse::<i128>() {
            return Ok(Operand::Imm(n));
        }
        s.parse::<RegName>().map(Operand::Reg)
    }
}

use Operand::Reg as R;
type Rg = RegName;
type Rn = Operand;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Instr {
    Fail,
    Halt,
    Jmp(Rg),
    Jnz(Rg, Rn),
    GetType(Rg, Rg),
    GetA(Rg, Rg),
    GetB(Rg, Rg),
    GetE(Rg, Rg),
    GetP(Rg, Rg),
    GetL(Rg, Rg),
    Move(Rg, Rn),
    Store(Rg, Rg),
    Load(Rg, Rg),
    Cca(Rg, Rn),
    Restrict(Rg, Rn),
    Lt(Rg, Rn, Rn),
    Plus(Rg, Rn, Rn),
    Minus(Rg, Rn, Rn),
    SetA2B(Rg),
    Xjmp(Rg, Rg),
    CSeal(Rg, Rg),
    Split(Rg, Rg, Rg, Rn),
    Splice(Rg, Rg, Rg),
}

/// Operand slot kinds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Slot {
    Reg,
    RegOrImm,
}

const MNEMONICS: [&str; 23] = [
    "fail", "halt", "jmp", "jnz", "gettype", "geta", "getb", "gete", "getp", "getl", "move",
    "store", "load", "cca", "restrict", "lt", "plus", "minus", "seta2b", "xjmp", "cseal", "split",
    "splice",
];

fn schema(opcode: usize) -> &'static [Slot] {
    use Slot::*;
    match opcode {
        0 | 1 => &[],
        2 | 18 => &[Reg],
        3 | 10 | 13 | 14 => &[Reg, RegOrImm],
        4..=9 | 11 | 12 | 19 | 20 => &[Reg, Reg],
        15..=17 => &[Reg, RegOrImm, RegOrImm],
        21 => &[Reg, Reg, Reg, RegOrImm],
        22 => &[Reg, Reg, Reg],
        _ => unreachable!("opcode out of range"),
    }
}

/// An immediate that cannot be encoded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
#[error("immediate {0} outside the encodable range [-2^31, 2^31)")]
pub struct ImmOutOfRange(pub i128);

impl Instr {
    pub fn opcode(&self) -> usize {
        match self {
            Instr::Fail => 0,
            Instr::Halt => 1,
            Instr::Jmp(..) => 2,
            Instr::Jnz(..) => 3,
            Instr::GetType(..) => 4,
            Instr::GetA(..) => 5,
            Instr::GetB(..) => 6,
            Instr::GetE(..) => 7,
            Instr::GetP(..) => 8,
            Instr::GetL(..) => 9,
            Instr::Move(..) => 10,
            Instr::Store(..) => 11,
            Instr::Load(..) => 12,
            Instr::Cca(..) => 13,
            Instr::Restrict(..) => 14,
            Instr::Lt(..) => 15,
            Instr::Plus(..) => 16,
            Instr::Minus(..) => 17,
            Instr::SetA2B(..) => 18,
            Instr::Xjmp(..) => 19,
            Instr::CSeal(..) => 20,
            Instr::Split(..) => 21,
            Instr::Splice(..) => 22,
        }
    }

    pub fn mnemonic(&self) -> &'static str {
        MNEMONICS[self.opcode()]
    }

    pub fn operands(&self) -> Vec<Operand> {
        match *self {
            Instr::Fail | Instr::Halt => vec![],
            Instr::Jmp(r) | Instr::SetA2B(r) => vec![R(r)],
            Instr::Jnz(r, n) | Instr::Move(r, n) | Instr::Cca(r, n) | Instr::Restrict(r, n) => {
                vec![R(r), n]
            }
            Instr::GetType(a, b)
            | Instr::GetA(a, b)
            | Instr::GetB(a, b)
            | Instr::GetE(a, b)
            | Instr::GetP(a, b)
            | Instr::GetL(a, b)
            | Instr::Store(a, b)
            | Instr::Load(a, b)
            | Instr::Xjmp(a, b)
            | Instr::CSeal(a, b) => vec![R(a), R(b)],
            Instr::Lt(r, a, b) | Instr::Plus(r, a, b) | Instr::Minus(r, a, b) => vec![R(r), a, b],
            Instr::Split(a, b, c, n) => vec![R(a), R(b), R(c), n],
            Instr::Splice(a, b, c) => vec![R(a), R(b), R(c)],
        }
    }

    /// Rebuilds an instruction from its opcode and operands. `None` when the
    /// arity or a register-only slot does not match.
    pub fn from_parts(opcode: usize, ops: &[Operand]) -> Option<Instr> {
        if opcode >= MNEMONICS.len() {
            return None;
        }
        let slots = schema(opcode);
        if slots.len() != ops.len() {
            return None;
        }
        let mut regs = [RegName::Pc; 4];
        for (i, (slot, op)) in slots.iter().zip(ops).enumerate() {
            match (slot, op) {
                (_, Operand::Reg(r)) => regs[i] = *r,
                (Slot::RegOrImm, Operand::Imm(_)) => {}
                (Slot::Reg, Operand::Imm(_)) => return None,
            }
        }
        let [a, b, c, _] = regs;
        let o = |i: usize| ops[i];
        Some(match opcode {
            0 => Instr::Fail,
            1 => Instr::Halt,
            2 => Instr::Jmp(a),
            3 => Instr::Jnz(a, o(1)),
            4 => Instr::GetType(a, b),
            5 => Instr::GetA(a, b),
            6 => Instr::GetB(a, b),
            7 => Instr::GetE(a, b),
            8 => Instr::GetP(a, b),
            9 => Instr::GetL(a, b),
            10 => Instr::Move(a, o(1)),
            11 => Instr::Store(a, b),
            12 => Instr::Load(a, b),
            13 => Instr::Cca(a, o(1)),
            14 => Instr::Restrict(a, o(1)),
            15 => Instr::Lt(a, o(1), o(2)),
            16 => Instr::Plus(a, o(1), o(2)),
            17 => Instr::Minus(a, o(1), o(2)),
            18 => Instr::SetA2B(a),
            19 => Instr::Xjmp(a, b),
            20 => Instr::CSeal(a, b),
            21 => Instr::Split(a, b, c, o(3)),
            22 => Instr::Splice(a, b, c),
            _ => unreachable!(),
        })
    }
}

pub fn enc_instr(i: &Instr) -> Result<Word, ImmOutOfRange> {
    let op = i.opcode();
    let mut acc: i128 = 0;
    for (slot, operand) in schema(op).iter().zip(i.operands()).rev() {
        let (radix, digit) = match (slot, operand) {
            (Slot::Reg, Operand::Reg(r)) => (REG_COUNT as i128, r.index() as i128),
            (Slot::RegOrImm, Operand::Reg(r)) => (RN_RADIX, 2 * r.index() as i128),
            (Slot::RegOrImm, Operand::Imm(n)) => {
                if !(IMM_MIN..IMM_MAX).contains(&n) {
                    return Err(ImmOutOfRange(n));
                }
                (RN_RADIX, 2 * (n - IMM_MIN) + 1)
            }
            (Slot::Reg, Operand::Imm(_)) => unreachable!("instruction shapes fix register slots"),
        };
        acc = acc * radix + digit;
    }
    Ok(Word::Int(acc * OPCODES + op as i128))
}

/// Total decoding. Capabilities, negative integers and integers outside the
/// image of [`enc_instr`] decode to `fail`.
pub fn dec_instr(w: &Word) -> Instr {
    let Word::Int(n) = *w else { return Instr::Fail };
    if n < 0 {
        return Instr::Fail;
    }
    let op = (n % OPCODES) as usize;
    let mut rest = n / OPCODES;
    let mut ops = Vec::with_capacity(4);
    for slot in schema(op) {
        let operand = match slot {
            Slot::Reg => {
                let d = rest % REG_COUNT as i128;
                rest /= REG_COUNT as i128;
                Operand::Reg(RegName::from_index(d as usize).expect("digit below REG_COUNT"))
            }
            Slot::RegOrImm => {
                let d = rest % RN_RADIX;
                rest /= RN_RADIX;
                if d % 2 == 0 {
                    match RegName::from_index((d / 2) as usize) {
                        Some(r) => Operand::Reg(r),
                        None => return Instr::Fail,
                    }
                } else {
                    Operand::Imm((d - 1) / 2 + IMM_MIN)
                }
            }
        };
        ops.push(operand);
    }
    if rest != 0 {
        return Instr::Fail;
    }
    Instr::from_parts(op, &ops).unwrap_or(Instr::Fail)
}

impl fmt::Display for Instr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.mnemonic())?;
        for op in self.operands() {
            write!(f, " {op}")?;
        }
        Ok(())
    }
}

/// Opcode of a mnemonic, case-insensitively.
pub fn opcode_of(mnemonic: &str) -> Option<usize> {
    let m = mnemonic.to_ascii_lowercase();
    MNEMONICS.iter().position(|x| *x == m)
}

/// Human-readable operand shape of an opcode, for error messages.
pub fn usage(opcode: usize) -> String {
    format!(
        "`{}` takes {} operand(s) of the form {:?}",
        MNEMONICS[opcode],
        schema(opcode).len(),
        schema(opcode)
    )
}

impl FromStr for Instr {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut toks = s.split_whitespace();
        let m = toks.next().ok_or("empty instruction")?;
        let opcode = opcode_of(m).ok_or_else(|| format!("unknown mnemonic `{m}`"))?;
        let ops = toks.map(str::parse).collect::<Result<Vec<Operand>, _>>()?;
        Instr::from_parts(opcode, &ops).ok_or_else(|| usage(opcode))
    }
}
