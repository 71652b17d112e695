//! Interleave 4-D grid coordinates into Morton indices and back.

use sfcm::morton::{morton_decode, morton_encode, vector_length, GridCoord};

fn main() {
    let bits = 4;
    println!("vector length at {bits} bits: {}", vector_length(bits));
    for g in [
        GridCoord { d: 1, r: 0, t: 0, p: 0 },
        GridCoord { d: 2, r: 1, t: 0, p: 0 },
        GridCoord { d: 15, r: 15, t: 15, p: 15 },
        GridCoord { d: 3, r: 9, t: 4, p: 12 },
    ] {
        let i = morton_encode(g, bits);
        println!("{g:?} -> {i:>5} = {i:016b}");
        assert_eq!(morton_decode(i, bits).unwrap(), g);
    }

    // neighbouring azimuth bins mostly stay close on the curve
    let base = GridCoord { d: 6, r: 7, t: 8, p: 0 };
    let steps: Vec<u64> = (0..8).map(|p| morton_encode(GridCoord { p, ..base }, bits)).collect();
    println!("azimuth sweep: {steps:?}");
}
