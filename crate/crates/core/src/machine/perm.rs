//! Permissions, linearity and their integer encodings.

use std::fmt;
use std::str::FromStr;

/// Memory permission. Ordered by the lattice
///
/// ```text
///        RWX
///       /   \
///     RW     RX
///       \   /
///         R
///         |
///         0
/// ```
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Permission {
    P0,
    R,
    RW,
    RX,
    RWX,
}

impl Permission {
    pub const ALL: [Permission; 5] = [
        Permission::P0,
        Permission::R,
        Permission::RW,
        Permission::RX,
        Permission::RWX,
    ];
}

/// `p ⊑ q` in the permission lattice.
pub fn perm_leq(p: Permission, q: Permission) -> bool {
    use Permission::*;
    matches!(
        (p, q),
        (P0, _) | (R, R | RW | RX | RWX) | (RW, RW | RWX) | (RX, RX | RWX) | (RWX, RWX)
    )
}

pub fn read_allowed(p: Permission) -> bool {
    matches!(
        p,
        Permission::RWX | Permission::RW | Permission::RX | Permission::R
    )
}

pub fn write_allowed(p: Permission) -> bool {
    matches!(p, Permission::RWX | Permission::RW)
}

pub fn exec_allowed(p: Permission) -> bool {
    matches!(p, Permission::RWX | Permission::RX)
}

pub fn enc_perm(p: Permission) -> i128 {
    match p {
        Permission::P0 => 0,
        Permission::R => 1,
        Permission::RW => 2,
        Permission::RX => 3,
        Permission::RWX => 4,
    }
}

/// Total: integers outside the table decode to the bottom permission.
pub fn dec_perm(n: i128) -> Permission {
    match n {
        1 => Permission::R,
        2 => Permission::RW,
        3 => Permission::RX,
        4 => Permission::RWX,
        _ => Permission::P0,
    }
}

impl fmt::Display for Permission {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Permission::P0 => "0",
            Permission::R => "R",
            Permission::RW => "RW",
            Permission::RX => "RX",
            Permission::RWX => "RWX",
        };
        f.write_str(s)
    }
}

impl FromStr for Permission {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "0" | "P0" => Ok(Permission::P0),
            "R" => Ok(Permission::R),
            "RW" => Ok(Permission::RW),
            "RX" => Ok(Permission::RX),
            "RWX" => Ok(Permission::RWX),
            _ => Err(format!("unknown permission `{s}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Linearity {
    Normal,
    Linear,
}

pub fn enc_lin(l: Linearity) -> i128 {
    match l {
        Linearity::Normal => 0,
        Linearity::Linear => 1,
    }
}

impl fmt::Display for Linearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Linearity::Normal => "normal",
            Linearity::Linear => "linear",
        })
    }
}

impl FromStr for Linearity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "normal" => Ok(Linearity::Normal),
            "linear" => Ok(Linearity::Linear),
            _ => Err(format!("unknown linearity `{s}`")),
        }
    }
}
