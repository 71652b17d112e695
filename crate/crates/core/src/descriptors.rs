//! The atomic-descriptor axis of the 4-D encoding.
//!
//! * M1: atomic number.
//! * M2: atomic number plus coordination sites (bonds and lone pairs).
//! * M3: Coulombic charge `C_α = Σ_{β≠α} Z_α Z_β / r_αβ` over the other
//!   sites of the unit cell (e²/Å). Sphere images inherit their parent
//!   site's value.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::element::Element;
use crate::geometry::{to_spherical, CartAtom, SphericalAtom};
use crate::structure_io::CrystalStructure;

/// Bond tolerance applied to the sum of covalent radii.
pub const BOND_TOLERANCE: f64 = 1.2;

/// Default descriptor range for M1 and M2.
pub const DEFAULT_INTEGER_RANGE: f64 = 16.0;

/// Headroom applied to the largest training-set charge for M3.
pub const M3_RANGE_HEADROOM: f64 = 1.05;

const COINCIDENT_EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DescriptorError {
    #[error("sites {0} and {1} coincide (distance below 1e-6 Å)")]
    CoincidentAtoms(usize, usize),
    #[error("site index {0} out of range")]
    SiteOutOfRange(usize),
    #[error("unknown descriptor variant `{0}` (expected m1, m2 or m3)")]
    UnknownVariant(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariantTag {
    M1,
    M2,
    M3,
}

impl VariantTag {
    /// Display label used in reports, e.g. `SFC-M2`.
    pub fn label(self) -> &'static str {
        match self {
            VariantTag::M1 => "SFC-M1",
            VariantTag::M2 => "SFC-M2",
            VariantTag::M3 => "SFC-M3",
        }
    }
}

impl fmt::Display for VariantTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VariantTag::M1 => "m1",
            VariantTag::M2 => "m2",
            VariantTag::M3 => "m3",
        })
    }
}

impl FromStr for VariantTag {
    type Err = DescriptorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().trim_start_matches("sfc-") {
            "m1" => Ok(VariantTag::M1),
            "m2" => Ok(VariantTag::M2),
            "m3" => Ok(VariantTag::M3),
            _ => Err(DescriptorError::UnknownVariant(s.to_string())),
        }
    }
}

/// Which descriptor to use and the upper end of its binning range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescriptorVariant {
    pub tag: VariantTag,
    pub range_max: f64,
}

impl DescriptorVariant {
    pub fn new(tag: VariantTag, range_max: f64) -> Self {
        assert!(range_max > 0.0 && range_max.is_finite(), "range_max must be positive");
        DescriptorVariant { tag, range_max }
    }

    pub fn m1() -> Self {
        Self::new(VariantTag::M1, DEFAULT_INTEGER_RANGE)
    }

    pub fn m2() -> Self {
        Self::new(VariantTag::M2, DEFAULT_INTEGER_RANGE)
    }

    pub fn m3(range_max: f64) -> Self {
        Self::new(VariantTag::M3, range_max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescribedAtom {
    pub spherical: SphericalAtom,
    pub descriptor: f64,
}

pub fn descriptor_m1(element: Element) -> f64 {
    f64::from(element.atomic_number())
}

/// Electron domains around an atom with `bonds` bonded neighbours: the
/// neighbours plus the lone pairs left over from its valence shell, capped
/// at the octet's four domains (but never below the bond count).
pub fn coordination_sites(element: Element, bonds: usize) -> usize {
    let lone_pairs = (element.valence_electrons() as usize).saturating_sub(bonds) / 2;
    (bonds + lone_pairs).min(4).max(bonds)
}

/// Atomic number plus coordination sites; water's oxygen (two bonds, two
/// lone pairs) gets 12.
pub fn descriptor_m2(element: Element, bonds: usize) -> f64 {
    f64::from(element.atomic_number()) + coordination_sites(element, bonds) as f64
}

/// Per-atom coordination numbers under the covalent-radius rule
/// `d ≤ 1.2 (r_i + r_j)`. Uses a uniform cell list, so cost is linear in
/// the number of atoms.
pub fn detect_bonds(atoms: &[CartAtom]) -> Vec<usize> {
    let mut counts = vec![0usize; atoms.len()];
    let Some(max_r) = atoms.iter().map(|a| a.element.covalent_radius()).reduce(f64::max) else {
        return counts;
    };
    let cutoff = BOND_TOLERANCE * 2.0 * max_r;
    let key = |a: &CartAtom| -> [i64; 3] { [0, 1, 2].map(|k| (a.pos[k] / cutoff).floor() as i64) };

    let mut grid: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    for (i, a) in atoms.iter().enumerate() {
        grid.entry(key(a)).or_default().push(i);
    }
    for (i, a) in atoms.iter().enumerate() {
        let c = key(a);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    let Some(bucket) = grid.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) else {
                        continue;
                    };
                    for &j in bucket {
                        if j <= i {
                            continue;
                        }
                        let b = &atoms[j];
                        let limit = BOND_TOLERANCE * (a.element.covalent_radius() + b.element.covalent_radius());
                        if (a.pos - b.pos).norm() <= limit {
                            counts[i] += 1;
                            counts[j] += 1;
                        }
                    }
                }
            }
        }
    }
    counts
}

/// Coulombic charge of every site of the unit cell (no periodic images).
pub fn coulomb_charges(cell: &CrystalStructure) -> Result<Vec<f64>, DescriptorError> {
    let pos: Vec<_> = cell.sites.iter().map(|s| cell.lattice.to_cartesian(s.frac)).collect();
    let z: Vec<f64> = cell.sites.iter().map(|s| descriptor_m1(s.element)).collect();
    let mut charges = vec![0.0; pos.len()];
    for i in 0..pos.len() {
        for j in i + 1..pos.len() {
            let r = (pos[i] - pos[j]).norm();
            if r < COINCIDENT_EPS {
                return Err(DescriptorError::CoincidentAtoms(i, j));
            }
            let term = z[i] * z[j] / r;
            charges[i] += term;
            charges[j] += term;
        }
    }
    Ok(charges)
}

pub fn descriptor_m3(alpha: usize, cell: &CrystalStructure) -> Result<f64, DescriptorError> {
    if alpha >= cell.sites.len() {
        return Err(DescriptorError::SiteOutOfRange(alpha));
    }
    coulomb_charges(cell).map(|c| c[alpha])
}

/// Attaches descriptor values to (already aligned) sphere atoms and converts
/// them to spherical coordinates. M2 bonds are detected among the sphere
/// atoms themselves.
pub fn describe(
    atoms: &[CartAtom],
    cell: &CrystalStructure,
    variant: &DescriptorVariant,
) -> Result<Vec<DescribedAtom>, DescriptorError> {
    let values: Vec<f64> = match variant.tag {
        VariantTag::M1 => atoms.iter().map(|a| descriptor_m1(a.element)).collect(),
        VariantTag::M2 => {
            detect_bonds(atoms).into_iter().zip(atoms).map(|(n, a)| descriptor_m2(a.element, n)).collect()
        }
        VariantTag::M3 => {
            let charges = coulomb_charges(cell)?;
            atoms
                .iter()
                .map(|a| charges.get(a.site).copied().ok_or(DescriptorError::SiteOutOfRange(a.site)))
                .collect::<Result<_, _>>()?
        }
    };
    Ok(atoms
        .iter()
        .zip(values)
        .map(|(a, descriptor)| DescribedAtom { spherical: to_spherical(a), descriptor })
        .collect())
}
