//! Ten-fold evaluation on synthetic data: AFE per task against the mean
//! predictor, and recall of the most stable 15%.

use sfcm::eval::{cross_validate, metrics_csv, recall_csv, CvSettings, Dataset, LsiSettings, TASK_LABELS};
use sfcm::featurize::{featurize_all, FeaturizeConfig};
use sfcm::lsi::{KChoice, SvdOptions};
use sfcm::mlp::MlpConfig;
use sfcm::structure_io::generate_synthetic;

fn main() {
    let data = generate_synthetic(11, 200, 8);
    let cells: Vec<_> = data.iter().map(|(s, _)| s.clone()).collect();
    let cfg = FeaturizeConfig { sphere_radius: 30.0, ..FeaturizeConfig::default() };
    let (variant, vectors) = featurize_all(&cells, &cfg);
    let rows = cells.iter().zip(vectors).map(|(c, v)| (c.id.clone(), v.unwrap())).collect();
    let targets: Vec<_> = data.into_iter().map(|(_, e)| e).collect();
    let dataset = Dataset::join(rows, &targets).unwrap();

    let lsi = LsiSettings { k: KChoice::Fixed(10), svd: SvdOptions::default() };
    let mlp = MlpConfig { hidden_sizes: vec![32, 16], learn_rate: 0.05, batch_size: 16, epochs: 150, seed: 2 };
    let outcome =
        cross_validate(&dataset, variant, &lsi, &mlp, &CvSettings { seed: 2, ..CvSettings::default() }).unwrap();
    let r = &outcome.report;
    for (t, name) in TASK_LABELS.iter().enumerate() {
        println!(
            "{name:<13} train {:.4}  test {:.4} ± {:.4}  mean predictor {:.4}",
            r.train_afe[t].mean, r.test_afe[t].mean, r.test_afe[t].std, r.mean_predictor_afe[t].mean
        );
    }
    println!("\n{}\n{}", metrics_csv(std::slice::from_ref(r)), recall_csv(std::slice::from_ref(r)));
}
