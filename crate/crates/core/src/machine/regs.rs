//! Register names and the register file.

use std::fmt;
use std::ops::{Index, IndexMut};
use std::str::FromStr;

use super::word::Word;

/// Number of general-purpose registers `r0..r15`.
pub const GEN_REGS: usize = 16;
/// Seven special registers followed by the general ones.
pub const REG_COUNT: usize = 7 + GEN_REGS;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RegName {
    Pc,
    RetData,
    RetCode,
    Stk,
    Data,
    Tmp1,
    Tmp2,
    /// General register; the index is below [`GEN_REGS`].
    Gen(u8),
}

impl RegName {
    pub fn index(self) -> usize {
        match self {
            RegName::Pc => 0,
            RegName::RetData => 1,
            RegName::RetCode => 2,
            RegName::Stk => 3,
            RegName::Data => 4,
            RegName::Tmp1 => 5,
            RegName::Tmp2 => 6,
            RegName::Gen(i) => 7 + i as usize,
        }
    }

    pub fn from_index(i: usize) -> Option<RegName> {
        Some(match i {
            0 => RegName::Pc,
            1 => RegName::RetData,
            2 => RegName::RetCode,
            3 => RegName::Stk,
            4 => RegName::Data,
            5 => RegName::Tmp1,
            6 => RegName::Tmp2,
            i if i < REG_COUNT => RegName::Gen((i - 7) as u8),
            _ => return None,
        })
    }

    pub fn all() -> impl Iterator<Item = RegName> {
        (0..REG_COUNT).filter_map(RegName::from_index)
    }
}

impl fmt::Display for RegName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegName::Pc => f.write_str("pc"),
            RegName::RetData => f.write_str("rretdata"),
            RegName::RetCode => f.write_str("rretcode"),
            RegName::Stk => f.write_str("rstk"),
            RegName::Data => f.write_str("rdata"),
            RegName::Tmp1 => f.write_str("rtmp1"),
            RegName::Tmp2 => f.write_str("rtmp2"),
            RegName::Gen(i) => write!(f, "r{i}"),
        }
    }
}

impl FromStr for RegName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        Ok(match lower.as_str() {
            "pc" => RegName::Pc,
            "rretdata" => RegName::RetData,
            "rretcode" => RegName::RetCode,
            "rstk" => RegName::Stk,
            "rdata" => RegName::Data,
            "rtmp1" => RegName::Tmp1,
            "rtmp2" => RegName::Tmp2,
            other => {
                let idx = other
                    .strip_prefix('r')
                    .and_then(|d| d.parse::<usize>().ok())
                    .filter(|&i| i < GEN_REGS)
                    .ok_or_else(|| format!("unknown register `{s}`"))?;
                RegName::Gen(idx as u8)
            }
        })
    }
}

/// Total map from register names to words.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RegisterFile([Word; REG_COUNT]);

impl Default for RegisterFile {
    fn default() -> Self {
        RegisterFile([Word::Int(0); REG_COUNT])
    }
}

impl RegisterFile {
    pub fn iter(&self) -> impl Iterator<Item = (RegName, &Word)> {
        RegName::all().zip(self.0.iter())
    }
}

impl Index<RegName> for RegisterFile {
    type Output = Word;

    fn index(&self, r: RegName) -> &Word {
        &self.0[r.index()]
    }
}

impl IndexMut<RegName> for RegisterFile {
    fn index_mut(&mut self, r: RegName) -> &mut Word {
        &mut self.0[r.index()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_roundtrip() {
        let all: Vec<_> = RegName::all().collect();
        assert_eq!(all.len(), REG_COUNT);
        for (i, r) in all.iter().enumerate() {
            assert_eq!(r.index(), i);
            assert_eq!(r.to_string().parse::<RegName>().unwrap(), *r);
        }
        assert!(RegName::from_index(REG_COUNT).is_none());
        assert!("r16".parse::<RegName>().is_err());
    }

    #[test]
    fn fresh_file_is_zero() {
        let rf = RegisterFile::default();
        assert!(rf.iter().all(|(_, w)| *w == Word::Int(0)));
    }
}
