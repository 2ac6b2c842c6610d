//! Instructions and permissions as integers, and what decodes to `fail`.

use capcall::machine::{dec_instr, dec_perm, enc_instr, enc_perm, Instr, Linearity, MemCap, Permission, Word};

fn main() {
    for text in ["halt", "jmp r0", "move r1 -7", "split r0 r1 r2 1049", "xjmp rretcode rretdata", "cca rtmp1 25"] {
        let i: Instr = text.parse().unwrap();
        let w = enc_instr(&i).unwrap();
        println!("{text:<24} -> {w:<28} -> {}", dec_instr(&w));
    }

    // capabilities and integers outside the image run as `fail`
    let cap: Word = MemCap::new(Permission::RX, Linearity::Normal, 0, 9, 0).into();
    println!("{cap} -> {}", dec_instr(&cap));
    println!("int:-1 -> {}", dec_instr(&Word::Int(-1)));

    for p in Permission::ALL {
        let n = enc_perm(p);
        println!("perm {p:<3} -> {n} -> {}", dec_perm(n));
    }
}
