//! Turn one crystal into a sparse Morton count vector under each
//! descriptor variant.

use sfcm::featurize::{featurize_all, FeaturizeConfig};
use sfcm::geometry::{expand_to_sphere, inertia_align};
use sfcm::structure_io::generate_synthetic;
use sfcm::VariantTag;

fn main() {
    let (cell, _) = generate_synthetic(42, 1, 10).remove(0);
    let radius = 30.0;
    let sphere = expand_to_sphere(&cell, radius);
    let aligned = inertia_align(&sphere);
    println!("{}: {} sites, {} atoms within {radius} Å", cell.id, cell.sites.len(), aligned.len());

    for variant in [VariantTag::M1, VariantTag::M2, VariantTag::M3] {
        let cfg = FeaturizeConfig { variant, sphere_radius: radius, ..FeaturizeConfig::default() };
        let (desc, mut vectors) = featurize_all(std::slice::from_ref(&cell), &cfg);
        let v = vectors.remove(0).expect("featurizes");
        let busiest = v.entries().iter().max_by_key(|(_, c)| *c).unwrap();
        println!(
            "{:<7} range_max {:>8.2}  nnz {:>5} of {}  total {}  busiest index {} ({} atoms)",
            variant.label(),
            desc.range_max,
            v.nnz(),
            v.len(),
            v.total(),
            busiest.0,
            busiest.1
        );
    }
}
