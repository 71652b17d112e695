//! Random search over network shape, learn rate and batch size.

use sfcm::featurize::{featurize_all, FeaturizeConfig};
use sfcm::lsi::{KChoice, LsiModel, SvdOptions};
use sfcm::mlp::{random_search, SearchSpace};
use sfcm::structure_io::generate_synthetic;

fn main() {
    let data = generate_synthetic(5, 100, 8);
    let cells: Vec<_> = data.iter().map(|(s, _)| s.clone()).collect();
    let ys: Vec<[f64; 4]> = data.iter().map(|(_, e)| e.values()).collect();
    let cfg = FeaturizeConfig { sphere_radius: 25.0, ..FeaturizeConfig::default() };
    let (variant, vectors) = featurize_all(&cells, &cfg);
    let vectors: Vec<_> = vectors.into_iter().collect::<Result<_, _>>().unwrap();
    let fit = LsiModel::fit(&vectors, variant, KChoice::Fixed(8), &SvdOptions::default()).unwrap();
    let xs: Vec<Vec<f64>> =
        (0..fit.features.ncols()).map(|j| fit.features.column(j).iter().copied().collect()).collect();

    let space = SearchSpace { epochs: 60, ..SearchSpace::default() };
    let outcome = random_search(&space, 8, 17, &xs, &ys).unwrap();
    for (c, afe) in &outcome.trials {
        println!(
            "{:<16} lr {:.2e} batch {:>2}  validation AFE {afe:.4}",
            format!("{:?}", c.hidden_sizes),
            c.learn_rate,
            c.batch_size
        );
    }
    println!("best: {:?} (AFE {:.4})", outcome.best.hidden_sizes, outcome.best_afe);
}
