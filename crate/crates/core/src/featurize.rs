//! Structure → sparse vector: sphere expansion, alignment, descriptors and
//! Morton encoding chained together.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::descriptors::{
    coulomb_charges, describe, DescriptorError, DescriptorVariant, VariantTag, DEFAULT_INTEGER_RANGE, M3_RANGE_HEADROOM,
};
use crate::geometry::{expand_to_sphere, inertia_align, CartAtom, DEFAULT_SPHERE_RADIUS};
use crate::morton::{encode_structure, SparseVector, DEFAULT_BITS};
use crate::structure_io::CrystalStructure;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturizeConfig {
    pub variant: VariantTag,
    pub bits: u32,
    pub sphere_radius: f64,
    /// Descriptor range; `None` picks the variant default (16 for M1/M2,
    /// the largest charge in the set ×1.05 for M3).
    pub range_max: Option<f64>,
}

impl Default for FeaturizeConfig {
    fn default() -> Self {
        FeaturizeConfig {
            variant: VariantTag::M1,
            bits: DEFAULT_BITS,
            sphere_radius: DEFAULT_SPHERE_RADIUS,
            range_max: None,
        }
    }
}

/// Aligns the given sphere contents, describes and encodes them. `atoms`
/// may be arbitrarily rotated about the origin; the result does not change.
pub fn featurize_atoms(
    atoms: &[CartAtom],
    cell: &CrystalStructure,
    variant: &DescriptorVariant,
    bits: u32,
    sphere_radius: f64,
) -> Result<SparseVector, DescriptorError> {
    let aligned = inertia_align(atoms);
    let described = describe(&aligned, cell, variant)?;
    Ok(encode_structure(&described, variant, bits, sphere_radius))
}

pub fn featurize_structure(
    s: &CrystalStructure,
    variant: &DescriptorVariant,
    bits: u32,
    sphere_radius: f64,
) -> Result<SparseVector, DescriptorError> {
    featurize_atoms(&expand_to_sphere(s, sphere_radius), s, variant, bits, sphere_radius)
}

/// Fixes the descriptor range for a dataset. Structures whose charges
/// cannot be computed are ignored here; they fail again at encoding time.
pub fn resolve_variant(cfg: &FeaturizeConfig, structures: &[CrystalStructure]) -> DescriptorVariant {
    if let Some(range) = cfg.range_max {
        return DescriptorVariant::new(cfg.variant, range);
    }
    match cfg.variant {
        VariantTag::M1 | VariantTag::M2 => DescriptorVariant::new(cfg.variant, DEFAULT_INTEGER_RANGE),
        VariantTag::M3 => {
            let max = structures
                .par_iter()
                .filter_map(|s| coulomb_charges(s).ok())
                .flat_map_iter(|c| c.into_iter())
                .reduce(|| 0.0, f64::max);
            DescriptorVariant::m3(if max > 0.0 { max * M3_RANGE_HEADROOM } else { 1.0 })
        }
    }
}

/// Featurizes every structure in parallel; output order follows input order.
pub fn featurize_all(
    structures: &[CrystalStructure],
    cfg: &FeaturizeConfig,
) -> (DescriptorVariant, Vec<Result<SparseVector, DescriptorError>>) {
    let variant = resolve_variant(cfg, structures);
    let vectors =
        structures.par_iter().map(|s| featurize_structure(s, &variant, cfg.bits, cfg.sphere_radius)).collect();
    (variant, vectors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure_io::generate_synthetic;
    use nalgebra::{Rotation3, Unit, Vector3};

    #[test]
    fn total_count_equals_sphere_population() {
        let (s, _) = generate_synthetic(2, 1, 6).remove(0);
        let v = featurize_structure(&s, &DescriptorVariant::m1(), 4, 20.0).unwrap();
        assert_eq!(v.total() as usize, expand_to_sphere(&s, 20.0).len());
    }

    #[test]
    fn rotated_sphere_gives_identical_vector() {
        let (s, _) = generate_synthetic(4, 1, 9).remove(0);
        let atoms = expand_to_sphere(&s, 25.0);
        for variant in [DescriptorVariant::m1(), DescriptorVariant::m2(), DescriptorVariant::m3(400.0)] {
            let base = featurize_atoms(&atoms, &s, &variant, 4, 25.0).unwrap();
            let rot = Rotation3::from_axis_angle(&Unit::new_normalize(Vector3::new(0.3, -1.0, 0.7)), 2.1);
            let rotated: Vec<CartAtom> = atoms.iter().map(|a| CartAtom { pos: rot * a.pos, ..a.clone() }).collect();
            assert_eq!(base, featurize_atoms(&rotated, &s, &variant, 4, 25.0).unwrap());
        }
    }

    #[test]
    fn m3_range_covers_every_charge() {
        let structures: Vec<_> = generate_synthetic(6, 5, 8).into_iter().map(|(s, _)| s).collect();
        let cfg = FeaturizeConfig { variant: VariantTag::M3, ..FeaturizeConfig::default() };
        let v = resolve_variant(&cfg, &structures);
        let max = structures.iter().flat_map(|s| coulomb_charges(s).unwrap()).fold(0.0, f64::max);
        assert!((v.range_max - max * 1.05).abs() < 1e-9);
    }
}
