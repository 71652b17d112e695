//! Discretization onto the 4-D grid and Morton (Z-order) flattening into a
//! sparse count vector.
//!
//! Bit layout: for level `b` (0 = least significant) the index carries
//! φ-bit `b` at position `4b`, θ at `4b+1`, r at `4b+2` and the descriptor
//! at `4b+3`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::descriptors::{DescribedAtom, DescriptorVariant};

pub const DEFAULT_BITS: u32 = 4;
pub const MAX_BITS: u32 = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MortonError {
    #[error("index {index} out of range for {bits}-bit grid")]
    IndexOutOfRange { index: u64, bits: u32 },
    #[error("resolution {0} bits is outside 1..=8")]
    BadBits(u32),
    #[error("line {line}: {reason}")]
    BadLine { line: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridCoord {
    pub d: u32,
    pub r: u32,
    pub t: u32,
    pub p: u32,
}

fn check_bits(bits: u32) -> Result<(), MortonError> {
    if (1..=MAX_BITS).contains(&bits) {
        Ok(())
    } else {
        Err(MortonError::BadBits(bits))
    }
}

/// Number of entries in a vector at the given resolution, `2^(4·bits)`.
pub fn vector_length(bits: u32) -> u64 {
    1u64 << (4 * bits)
}

fn bin(value: f64, hi: f64, bits: u32) -> u32 {
    let top = (1u32 << bits) - 1;
    let width = hi / f64::from(1u32 << bits);
    let raw = (value / width).floor();
    if raw.is_nan() || raw <= 0.0 {
        0
    } else if raw >= f64::from(top) {
        top
    } else {
        raw as u32
    }
}

/// Linear binning on each axis: descriptor over `[0, range_max]`, r over
/// `[0, sphere_radius]`, θ over `[0, π]`, φ over `[0, 2π)`. Out-of-range
/// values clamp into the end bins.
pub fn discretize(atom: &DescribedAtom, variant: &DescriptorVariant, bits: u32, sphere_radius: f64) -> GridCoord {
    GridCoord {
        d: bin(atom.descriptor, variant.range_max, bits),
        r: bin(atom.spherical.r, sphere_radius, bits),
        t: bin(atom.spherical.theta, PI, bits),
        p: bin(atom.spherical.phi, 2.0 * PI, bits),
    }
}

pub fn morton_encode(g: GridCoord, bits: u32) -> u64 {
    let mut index = 0u64;
    for b in 0..bits {
        let bit = |v: u32| u64::from((v >> b) & 1);
        index |= bit(g.p) << (4 * b);
        index |= bit(g.t) << (4 * b + 1);
        index |= bit(g.r) << (4 * b + 2);
        index |= bit(g.d) << (4 * b + 3);
    }
    index
}

pub fn morton_decode(index: u64, bits: u32) -> Result<GridCoord, MortonError> {
    check_bits(bits)?;
    if index >= vector_length(bits) {
        return Err(MortonError::IndexOutOfRange { index, bits });
    }
    let mut g = GridCoord { d: 0, r: 0, t: 0, p: 0 };
    for b in 0..bits {
        let bit = |k: u32| ((index >> (4 * b + k)) & 1) as u32;
        g.p |= bit(0) << b;
        g.t |= bit(1) << b;
        g.r |= bit(2) << b;
        g.d |= bit(3) << b;
    }
    Ok(g)
}

/// A `2^(4·bits)`-long count vector stored as ascending `(index, count)` pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparseVector {
    pub bits: u32,
    entries: Vec<(u64, u32)>,
}

impl SparseVector {
    pub fn empty(bits: u32) -> Self {
        SparseVector { bits, entries: Vec::new() }
    }

    /// Builds a vector from arbitrary `(index, count)` pairs; duplicate
    /// indices are summed and zero counts dropped.
    pub fn from_pairs(bits: u32, pairs: impl IntoIterator<Item = (u64, u32)>) -> Result<Self, MortonError> {
        check_bits(bits)?;
        let mut acc: BTreeMap<u64, u32> = BTreeMap::new();
        for (index, count) in pairs {
            if index >= vector_length(bits) {
                return Err(MortonError::IndexOutOfRange { index, bits });
            }
            if count > 0 {
                *acc.entry(index).or_default() += count;
            }
        }
        Ok(SparseVector { bits, entries: acc.into_iter().collect() })
    }

    pub fn len(&self) -> u64 {
        vector_length(self.bits)
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(u64, u32)] {
        &self.entries
    }

    pub fn total(&self) -> u64 {
        self.entries.iter().map(|&(_, c)| u64::from(c)).sum()
    }

    pub fn get(&self, index: u64) -> u32 {
        self.entries.binary_search_by_key(&index, |&(i, _)| i).map_or(0, |pos| self.entries[pos].1)
    }
}

/// Histograms the atoms over Morton indices.
pub fn encode_structure(
    atoms: &[DescribedAtom],
    variant: &DescriptorVariant,
    bits: u32,
    sphere_radius: f64,
) -> SparseVector {
    let mut indices: Vec<u64> =
        atoms.iter().map(|a| morton_encode(discretize(a, variant, bits, sphere_radius), bits)).collect();
    indices.sort_unstable();
    let mut entries: Vec<(u64, u32)> = Vec::new();
    for idx in indices {
        match entries.last_mut() {
            Some((last, count)) if *last == idx => *count += 1,
            _ => entries.push((idx, 1)),
        }
    }
    SparseVector { bits, entries }
}

/// One line of a `.sfm` file: `id,bits,idx:count idx:count ...`.
pub fn format_vector_line(id: &str, v: &SparseVector) -> String {
    let mut line = format!("{id},{}", v.bits);
    line.push(',');
    for (n, (idx, count)) in v.entries.iter().enumerate() {
        if n > 0 {
            line.push(' ');
        }
        let _ = write!(line, "{idx}:{count}");
    }
    line
}

pub fn parse_vector_line(line: &str, line_no: usize) -> Result<(String, SparseVector), MortonError> {
    let bad = |reason: String| MortonError::BadLine { line: line_no, reason };
    let mut parts = line.rsplitn(3, ',');
    let (Some(pairs), Some(bits), Some(id)) = (parts.next(), parts.next(), parts.next()) else {
        return Err(bad("expected `id,bits,pairs`".into()));
    };
    let bits: u32 = bits.trim().parse().map_err(|_| bad(format!("bad bits `{bits}`")))?;
    check_bits(bits).map_err(|e| bad(e.to_string()))?;
    let mut entries = Vec::new();
    for pair in pairs.split_whitespace() {
        let (idx, count) = pair.split_once(':').ok_or_else(|| bad(format!("bad pair `{pair}`")))?;
        let idx: u64 = idx.parse().map_err(|_| bad(format!("bad index `{idx}`")))?;
        let count: u32 = count.parse().map_err(|_| bad(format!("bad count `{count}`")))?;
        if idx >= vector_length(bits) {
            return Err(bad(format!("index {idx} exceeds vector length")));
        }
        if count == 0 {
            return Err(bad(format!("zero count at index {idx}")));
        }
        if entries.last().is_some_and(|&(prev, _)| prev >= idx) {
            return Err(bad("indices must be strictly increasing".into()));
        }
        entries.push((idx, count));
    }
    Ok((id.to_string(), SparseVector { bits, entries }))
}

pub fn write_vectors<'a>(rows: impl IntoIterator<Item = (&'a str, &'a SparseVector)>) -> String {
    let mut out = String::new();
    for (id, v) in rows {
        out.push_str(&format_vector_line(id, v));
        out.push('\n');
    }
    out
}

pub fn read_vectors(text: &str) -> Result<Vec<(String, SparseVector)>, MortonError> {
    text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()).map(|(n, l)| parse_vector_line(l, n + 1)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::element::Element;
    use crate::geometry::SphericalAtom;
    use proptest::prelude::*;

    fn described(d: f64, r: f64, theta: f64, phi: f64) -> DescribedAtom {
        DescribedAtom { spherical: SphericalAtom { element: Element::C, site: 0, r, theta, phi }, descriptor: d }
    }

    #[test]
    fn discretize_examples() {
        let v = DescriptorVariant::m1();
        assert_eq!(discretize(&described(0.0, 0.0, 0.0, 0.0), &v, 4, 60.0), GridCoord { d: 0, r: 0, t: 0, p: 0 });
        assert_eq!(discretize(&described(0.0, 60.0, 0.0, 0.0), &v, 4, 60.0).r, 15);
        assert_eq!(discretize(&described(0.0, 0.0, PI / 2.0, 0.0), &v, 4, 60.0).t, 8);
        assert_eq!(discretize(&described(8.0, 0.0, PI, 0.0), &v, 4, 60.0), GridCoord { d: 8, r: 0, t: 15, p: 0 });
        // clamping above range
        assert_eq!(discretize(&described(99.0, 0.0, 0.0, 0.0), &v, 4, 60.0).d, 15);
    }

    #[test]
    fn encode_examples() {
        assert_eq!(morton_encode(GridCoord { d: 0, r: 0, t: 0, p: 0 }, 4), 0);
        assert_eq!(morton_encode(GridCoord { d: 15, r: 15, t: 15, p: 15 }, 4), 65535);
        assert_eq!(morton_encode(GridCoord { d: 1, r: 0, t: 0, p: 0 }, 4), 8);
        assert_eq!(morton_encode(GridCoord { d: 2, r: 1, t: 0, p: 0 }, 4), 132);
    }

    #[test]
    fn decode_examples_and_errors() {
        assert_eq!(morton_decode(0, 4).unwrap(), GridCoord { d: 0, r: 0, t: 0, p: 0 });
        assert_eq!(morton_decode(65535, 4).unwrap(), GridCoord { d: 15, r: 15, t: 15, p: 15 });
        assert_eq!(morton_decode(65536, 4), Err(MortonError::IndexOutOfRange { index: 65536, bits: 4 }));
        assert_eq!(morton_decode(0, 9), Err(MortonError::BadBits(9)));
    }

    #[test]
    fn exhaustive_bijection_at_four_bits() {
        for idx in 0..vector_length(4) {
            let g = morton_decode(idx, 4).unwrap();
            assert_eq!(morton_encode(g, 4), idx);
        }
    }

    #[test]
    fn single_axis_monotone() {
        for bits in [2, 4, 6] {
            let n = 1u32 << bits;
            for axis in 0..4 {
                let mut prev = None;
                for v in 0..n {
                    let mut g = GridCoord { d: 0, r: 0, t: 0, p: 0 };
                    *[&mut g.d, &mut g.r, &mut g.t, &mut g.p][axis] = v;
                    let idx = morton_encode(g, bits);
                    if let Some(p) = prev {
                        assert!(idx > p);
                    }
                    prev = Some(idx);
                }
            }
        }
    }

    #[test]
    fn phi_neighbour_locality() {
        for idx in 0..vector_length(4) {
            let g = morton_decode(idx, 4).unwrap();
            if g.p & 1 == 0 {
                let next = GridCoord { p: g.p + 1, ..g };
                assert_eq!(morton_encode(next, 4) - idx, 1);
            }
        }
    }

    #[test]
    fn encode_structure_counts() {
        let v = DescriptorVariant::m1();
        assert!(encode_structure(&[], &v, 4, 60.0).is_empty());
        let two = [described(6.0, 1.0, 0.1, 0.1), described(6.2, 1.1, 0.12, 0.11)];
        let sv = encode_structure(&two, &v, 4, 60.0);
        assert_eq!(sv.nnz(), 1);
        assert_eq!(sv.entries()[0].1, 2);
        assert_eq!(sv.len(), 65536);
    }

    fn random_atoms(seed: u64, n: usize) -> Vec<DescribedAtom> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                described(
                    rng.gen_range(0.0..16.0),
                    rng.gen_range(0.0..60.0),
                    rng.gen_range(0.0..PI),
                    rng.gen_range(0.0..2.0 * PI),
                )
            })
            .collect()
    }

    #[test]
    fn encode_matches_dense_histogram() {
        let v = DescriptorVariant::m1();
        let atoms = random_atoms(11, 100);
        let mut dense = vec![0u32; 1 << 16];
        for a in &atoms {
            // independent of discretize(): direct per-axis binning
            let d = ((a.descriptor / 1.0).floor() as usize).min(15);
            let r = ((a.spherical.r / 3.75).floor() as usize).min(15);
            let t = ((a.spherical.theta / (PI / 16.0)).floor() as usize).min(15);
            let p = ((a.spherical.phi / (PI / 8.0)).floor() as usize).min(15);
            let mut idx = 0usize;
            for b in 0..4 {
                idx |= ((p >> b) & 1) << (4 * b);
                idx |= ((t >> b) & 1) << (4 * b + 1);
                idx |= ((r >> b) & 1) << (4 * b + 2);
                idx |= ((d >> b) & 1) << (4 * b + 3);
            }
            dense[idx] += 1;
        }
        let sv = encode_structure(&atoms, &v, 4, 60.0);
        assert_eq!(sv.total(), 100);
        let expected: Vec<(u64, u32)> =
            dense.iter().enumerate().filter(|(_, &c)| c > 0).map(|(i, &c)| (i as u64, c)).collect();
        assert_eq!(sv.entries(), expected.as_slice());
    }

    #[test]
    fn line_format() {
        let sv = SparseVector::from_pairs(4, [(17, 2), (3, 1), (17, 1)]).unwrap();
        assert_eq!(format_vector_line("abc", &sv), "abc,4,3:1 17:3");
        assert_eq!(format_vector_line("e", &SparseVector::empty(4)), "e,4,");
        assert_eq!(parse_vector_line("e,4,", 1).unwrap(), ("e".to_string(), SparseVector::empty(4)));
        assert!(parse_vector_line("x,4,5:1 3:1", 1).is_err());
        assert!(parse_vector_line("x,4,70000:1", 1).is_err());
        assert!(parse_vector_line("x,4,5:0", 1).is_err());
        assert!(SparseVector::from_pairs(4, [(1 << 16, 1)]).is_err());
    }

    proptest! {
        #[test]
        fn permutation_invariant(seed in 0u64..1000, n in 0usize..200) {
            let v = DescriptorVariant::m1();
            let atoms = random_atoms(seed, n);
            let mut shuffled = atoms.clone();
            shuffled.reverse();
            shuffled.rotate_left(n / 3);
            let a = encode_structure(&atoms, &v, 4, 60.0);
            prop_assert_eq!(a.total(), n as u64);
            prop_assert_eq!(a, encode_structure(&shuffled, &v, 4, 60.0));
        }

        #[test]
        fn line_round_trip(pairs in proptest::collection::vec((0u64..(1 << 20), 1u32..50), 0..40), id in "[a-zA-Z0-9_.-]{1,12}") {
            let sv = SparseVector::from_pairs(5, pairs).unwrap();
            let text = write_vectors([(id.as_str(), &sv)]);
            let back = read_vectors(&text).unwrap();
            prop_assert_eq!(back, vec![(id, sv)]);
        }
    }
}
