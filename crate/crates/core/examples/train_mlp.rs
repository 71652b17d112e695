//! Train the four-output network on LSI features and save it as JSON.

use sfcm::featurize::{featurize_all, FeaturizeConfig};
use sfcm::lsi::{KChoice, LsiModel, SvdOptions};
use sfcm::mlp::{init, predict, train, MlpConfig, MlpModel};
use sfcm::structure_io::generate_synthetic;

fn main() {
    let data = generate_synthetic(3, 120, 8);
    let cells: Vec<_> = data.iter().map(|(s, _)| s.clone()).collect();
    let ys: Vec<[f64; 4]> = data.iter().map(|(_, e)| e.values()).collect();
    let cfg = FeaturizeConfig { sphere_radius: 30.0, ..FeaturizeConfig::default() };
    let (variant, vectors) = featurize_all(&cells, &cfg);
    let vectors: Vec<_> = vectors.into_iter().collect::<Result<_, _>>().unwrap();
    let fit = LsiModel::fit(&vectors, variant, KChoice::Fixed(10), &SvdOptions::default()).unwrap();
    let xs: Vec<Vec<f64>> =
        (0..fit.features.ncols()).map(|j| fit.features.column(j).iter().copied().collect()).collect();

    let mlp = MlpConfig { hidden_sizes: vec![32, 16], learn_rate: 0.05, batch_size: 16, epochs: 150, seed: 1 };
    let (model, report) = train(init(&mlp, xs[0].len()), &xs, &ys, &mlp).unwrap();
    for (e, loss) in report.epoch_losses.iter().enumerate().step_by(25) {
        println!("epoch {e:>3}  loss {loss:.5}");
    }
    println!("final loss {:.5}", report.final_loss);

    let json = model.to_json();
    let restored = MlpModel::from_json(&json).unwrap();
    let p = predict(&restored, &xs[..3]).unwrap();
    for (pred, truth) in p.iter().zip(&ys) {
        println!(
            "predicted {:?}\n   actual {:?}",
            pred.map(|v| (v * 10.0).round() / 10.0),
            truth.map(|v| (v * 10.0).round() / 10.0)
        );
    }
    println!("model JSON: {} bytes", json.len());
}
