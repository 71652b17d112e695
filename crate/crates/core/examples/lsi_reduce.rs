//! Fit TF-IDF + truncated SVD on a set of structures, choose k from the
//! singular-value gradient, and project an unseen structure.

use sfcm::featurize::{featurize_all, featurize_structure, FeaturizeConfig};
use sfcm::lsi::{normalized_gradient, KChoice, LsiModel, SvdOptions, DEFAULT_K_SCAN, DEFAULT_K_THRESHOLD};
use sfcm::structure_io::generate_synthetic;

fn main() {
    let data = generate_synthetic(7, 81, 8);
    let cells: Vec<_> = data.iter().map(|(s, _)| s.clone()).collect();
    let (train, held_out) = cells.split_at(80);
    let cfg = FeaturizeConfig { sphere_radius: 30.0, ..FeaturizeConfig::default() };
    let (variant, vectors) = featurize_all(train, &cfg);
    let vectors: Vec<_> = vectors.into_iter().collect::<Result<_, _>>().unwrap();

    let choice = KChoice::Auto { threshold: DEFAULT_K_THRESHOLD, scan: DEFAULT_K_SCAN };
    let fit = LsiModel::fit(&vectors, variant, choice, &SvdOptions::default()).unwrap();
    let grad = normalized_gradient(&fit.spectrum);
    println!("{} terms x {} documents", fit.model.terms.len(), vectors.len());
    for (i, s) in fit.spectrum.iter().take(12).enumerate() {
        let g = grad.get(i).map_or(String::new(), |g| format!("{g:+.4}"));
        println!("  σ{:<2} {:>9.5}  {g}", i + 1, s);
    }
    println!("chosen k = {} (scan limit {DEFAULT_K_SCAN})", fit.model.k);

    let unseen = featurize_structure(&held_out[0], &variant, cfg.bits, cfg.sphere_radius).unwrap();
    let x = fit.model.transform(&unseen);
    let head: Vec<String> = x.iter().take(5).map(|v| format!("{v:+.4}")).collect();
    println!("held-out {} -> [{}, ...] ({} features)", held_out[0].id, head.join(", "), x.len());
}
