//! Error metrics, recall of the most stable candidates and the k-fold
//! cross-validation harness.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::descriptors::DescriptorVariant;
use crate::lsi::{KChoice, LsiError, LsiModel, SvdOptions};
use crate::mlp::{init, predict, train, MlpConfig, MlpError, N_TASKS};
use crate::morton::SparseVector;
use crate::seed::subseed;
use crate::structure_io::EnergyRecord;

pub const TASK_LABELS: [&str; N_TASKS] = ["Single Point", "Ewald", "Lattice", "MBD"];
pub const DEFAULT_FOLDS: usize = 10;
pub const DEFAULT_RECALL_PCT: f64 = 15.0;

const NEAR_ZERO: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("reference value at index {index} is too close to zero for a relative error")]
    NearZeroReference { index: usize },
    #[error("length mismatch: {0} predictions vs {1} references")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    Empty,
    #[error("need at least {folds} samples for {folds}-fold splitting, got {n}")]
    TooFewSamples { n: usize, folds: usize },
    #[error("no energy targets for {} structure(s), first `{}`", .0.len(), .0[0])]
    MissingTargets(Vec<String>),
    #[error(transparent)]
    Lsi(#[from] LsiError),
    #[error(transparent)]
    Mlp(#[from] MlpError),
}

/// Mean absolute fraction error `⟨|(pred − calc) / calc|⟩`.
pub fn afe(pred: &[f64], calc: &[f64]) -> Result<f64, EvalError> {
    if pred.len() != calc.len() {
        return Err(EvalError::LengthMismatch(pred.len(), calc.len()));
    }
    if calc.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut sum = 0.0;
    for (index, (p, c)) in pred.iter().zip(calc).enumerate() {
        if c.abs() < NEAR_ZERO {
            return Err(EvalError::NearZeroReference { index });
        }
        sum += ((p - c) / c).abs();
    }
    Ok(sum / calc.len() as f64)
}

/// AFE of always predicting the training mean.
pub fn mean_predictor(train_targets: &[f64], test_targets: &[f64]) -> Result<f64, EvalError> {
    if train_targets.is_empty() || test_targets.is_empty() {
        return Err(EvalError::Empty);
    }
    let mean = train_targets.iter().sum::<f64>() / train_targets.len() as f64;
    afe(&vec![mean; test_targets.len()], test_targets)
}

/// Which end of a score list counts as "top".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ranking {
    /// Lowest first (energies: most stable first).
    LowestFirst,
    HighestFirst,
}

fn top_set(scores: &[f64], size: usize, ranking: Ranking) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    // stable sort keeps input order among ties
    idx.sort_by(|&a, &b| match ranking {
        Ranking::LowestFirst => scores[a].total_cmp(&scores[b]),
        Ranking::HighestFirst => scores[b].total_cmp(&scores[a]),
    });
    idx.truncate(size);
    idx
}

/// Fraction of the true top `pct`% (lowest scores) that the predicted top
/// `pct`% recovers. The top set holds `ceil(pct·n/100)` items.
pub fn recall_at(pred_scores: &[f64], true_scores: &[f64], pct: f64) -> f64 {
    recall_at_with(pred_scores, true_scores, pct, Ranking::LowestFirst)
}

pub fn recall_at_with(pred_scores: &[f64], true_scores: &[f64], pct: f64, ranking: Ranking) -> f64 {
    assert_eq!(pred_scores.len(), true_scores.len(), "score lists differ in length");
    assert!(pct > 0.0 && pct < 100.0, "pct must lie in (0, 100)");
    let n = true_scores.len();
    if n == 0 {
        return 0.0;
    }
    let size = ((pct * n as f64 / 100.0).ceil() as usize).clamp(1, n);
    let predicted = top_set(pred_scores, size, ranking);
    let truth = top_set(true_scores, size, ranking);
    let hits = predicted.iter().filter(|i| truth.contains(i)).count();
    hits as f64 / size as f64
}

/// Fold index per sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSplit {
    pub folds: usize,
    pub assignment: Vec<usize>,
}

impl FoldSplit {
    /// Sample indices of fold `f`, ascending.
    pub fn members(&self, f: usize) -> Vec<usize> {
        (0..self.assignment.len()).filter(|&i| self.assignment[i] == f).collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.folds];
        for &f in &self.assignment {
            s[f] += 1;
        }
        s
    }
}

/// Seeded shuffle, then round-robin assignment to `folds` folds.
pub fn kfold(n: usize, folds: usize, seed: u64) -> Result<FoldSplit, EvalError> {
    if folds < 2 || n < folds {
        return Err(EvalError::TooFewSamples { n, folds: folds.max(2) });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut assignment = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        assignment[i] = pos % folds;
    }
    Ok(FoldSplit { folds, assignment })
}

/// Featurized structures joined with their targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub ids: Vec<String>,
    pub vectors: Vec<SparseVector>,
    pub targets: Vec<[f64; N_TASKS]>,
}

impl Dataset {
    /// Keeps vector order; every vector needs a target row.
    pub fn join(vectors: Vec<(String, SparseVector)>, targets: &[EnergyRecord]) -> Result<Dataset, EvalError> {
        let by_id: HashMap<&str, &EnergyRecord> = targets.iter().map(|r| (r.id.as_str(), r)).collect();
        let missing: Vec<String> =
            vectors.iter().filter(|(id, _)| !by_id.contains_key(id.as_str())).map(|(id, _)| id.clone()).collect();
        if !missing.is_empty() {
            return Err(EvalError::MissingTargets(missing));
        }
        let targets = vectors.iter().map(|(id, _)| by_id[id.as_str()].values()).collect();
        let (ids, vectors) = vectors.into_iter().unzip();
        Ok(Dataset { ids, vectors, targets })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn task(&self, t: usize) -> Vec<f64> {
        self.targets.iter().map(|y| y[t]).collect()
    }
}

#[derive(Debug, Clone)]
pub struct LsiSettings {
    pub k: KChoice,
    pub svd: SvdOptions,
}

#[derive(Debug, Clone)]
pub struct CvSettings {
    pub folds: usize,
    pub seed: u64,
    pub recall_pct: f64,
    pub ranking: Ranking,
}

impl Default for CvSettings {
    fn default() -> Self {
        CvSettings { folds: DEFAULT_FOLDS, seed: 0, recall_pct: DEFAULT_RECALL_PCT, ranking: Ranking::LowestFirst }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    /// Mean and sample (n − 1) standard deviation; the spread of one value is 0.
    pub fn of(values: &[f64]) -> Stat {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Stat { mean, std }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecallStat {
    pub best: f64,
    pub mean: f64,
    pub std: f64,
}

impl RecallStat {
    fn of(values: &[f64]) -> RecallStat {
        let s = Stat::of(values);
        RecallStat { best: values.iter().copied().fold(f64::NEG_INFINITY, f64::max), mean: s.mean, std: s.std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub k: usize,
    pub train_afe: [f64; N_TASKS],
    pub test_afe: [f64; N_TASKS],
    pub mean_predictor_afe: [f64; N_TASKS],
    pub recall: f64,
    pub lattice_recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub fp: String,
    pub folds: usize,
    pub recall_pct: f64,
    pub train_afe: [Stat; N_TASKS],
    pub test_afe: [Stat; N_TASKS],
    pub mean_predictor_afe: [Stat; N_TASKS],
    pub recall: RecallStat,
    /// Ranking by calculated lattice energy as a stand-in for the single point energy.
    pub lattice_recall: RecallStat,
    pub per_fold: Vec<FoldResult>,
}

/// Held-out prediction for one structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub fold: usize,
    pub calculated: [f64; N_TASKS],
    pub predicted: [f64; N_TASKS],
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    pub report: MetricReport,
    /// Test-fold predictions, in dataset order.
    pub predictions: Vec<Prediction>,
}

fn columns(features: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..features.ncols()).map(|j| features.column(j).iter().copied().collect()).collect()
}

fn per_task<F: Fn(usize) -> Result<f64, EvalError>>(f: F) -> Result<[f64; N_TASKS], EvalError> {
    Ok([f(0)?, f(1)?, f(2)?, f(3)?])
}

fn task_of(rows: &[[f64; N_TASKS]], t: usize) -> Vec<f64> {
    rows.iter().map(|r| r[t]).collect()
}

fn run_fold(
    data: &Dataset,
    split: &FoldSplit,
    fold: usize,
    descriptor: DescriptorVariant,
    lsi: &LsiSettings,
    mlp: &MlpConfig,
    cv: &CvSettings,
) -> Result<(FoldResult, Vec<Prediction>), EvalError> {
    let test = split.members(fold);
    let train_idx: Vec<usize> = (0..data.len()).filter(|&i| split.assignment[i] != fold).collect();

    let train_vectors: Vec<SparseVector> = train_idx.iter().map(|&i| data.vectors[i].clone()).collect();
    let fit = LsiModel::fit(&train_vectors, descriptor, lsi.k, &lsi.svd)?;
    let train_x = columns(&fit.features);
    let test_x: Vec<Vec<f64>> = test.iter().map(|&i| fit.model.transform(&data.vectors[i])).collect();
    let train_y: Vec<[f64; N_TASKS]> = train_idx.iter().map(|&i| data.targets[i]).collect();
    let test_y: Vec<[f64; N_TASKS]> = test.iter().map(|&i| data.targets[i]).collect();

    let (model, _) = train(init(mlp, fit.model.k), &train_x, &train_y, mlp)?;
    let train_pred = predict(&model, &train_x)?;
    let test_pred = predict(&model, &test_x)?;

    let train_afe = per_task(|t| afe(&task_of(&train_pred, t), &task_of(&train_y, t)))?;
    let test_afe = per_task(|t| afe(&task_of(&test_pred, t), &task_of(&test_y, t)))?;
    let mean_predictor_afe = per_task(|t| mean_predictor(&task_of(&train_y, t), &task_of(&test_y, t)))?;

    let truth = task_of(&test_y, 0);
    let recall = recall_at_with(&task_of(&test_pred, 0), &truth, cv.recall_pct, cv.ranking);
    let lattice_recall = recall_at_with(&task_of(&test_y, 2), &truth, cv.recall_pct, cv.ranking);

    let predictions = test
        .iter()
        .zip(test_y.iter().zip(&test_pred))
        .map(|(&i, (calc, pred))| Prediction { id: data.ids[i].clone(), fold, calculated: *calc, predicted: *pred })
        .collect();
    Ok((
        FoldResult { fold, k: fit.model.k, train_afe, test_afe, mean_predictor_afe, recall, lattice_recall },
        predictions,
    ))
}

/// K-fold evaluation: per fold, LSI and the MLP are fit on the training
/// part only and scored on the held-out part. Folds run in parallel and
/// are joined in fold order.
pub fn cross_validate(
    data: &Dataset,
    descriptor: DescriptorVariant,
    lsi: &LsiSettings,
    mlp: &MlpConfig,
    cv: &CvSettings,
) -> Result<CvOutcome, EvalError> {
    let split = kfold(data.len(), cv.folds, subseed(cv.seed, "fold"))?;
    let results: Vec<(FoldResult, Vec<Prediction>)> = (0..cv.folds)
        .into_par_iter()
        .map(|f| run_fold(data, &split, f, descriptor, lsi, mlp, cv))
        .collect::<Result<_, _>>()?;

    let stat = |get: &dyn Fn(&FoldResult) -> [f64; N_TASKS]| -> [Stat; N_TASKS] {
        [0, 1, 2, 3].map(|t| Stat::of(&results.iter().map(|(r, _)| get(r)[t]).collect::<Vec<_>>()))
    };
    let report = MetricReport {
        fp: descriptor.tag.label().to_string(),
        folds: cv.folds,
        recall_pct: cv.recall_pct,
        train_afe: stat(&|r| r.train_afe),
        test_afe: stat(&|r| r.test_afe),
        mean_predictor_afe: stat(&|r| r.mean_predictor_afe),
        recall: RecallStat::of(&results.iter().map(|(r, _)| r.recall).collect::<Vec<_>>()),
        lattice_recall: RecallStat::of(&results.iter().map(|(r, _)| r.lattice_recall).collect::<Vec<_>>()),
        per_fold: results.iter().map(|(r, _)| r.clone()).collect(),
    };

    let mut predictions: Vec<Prediction> = results.into_iter().flat_map(|(_, p)| p).collect();
    let position: HashMap<&str, usize> = data.ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    predictions.sort_by_key(|p| position[p.id.as_str()]);
    Ok(CvOutcome { report, predictions })
}

/// Table of AFE values: one row per (section, representation), mean and
/// spread per task.
pub fn metrics_csv(reports: &[MetricReport]) -> String {
    let mut out =
        String::from("section,fp,single_point,single_point_std,ewald,ewald_std,lattice,lattice_std,mbd,mbd_std\n");
    let mut row = |section: &str, fp: &str, stats: &[Stat; N_TASKS]| {
        let _ = write!(out, "{section},{fp}");
        for s in stats {
            let _ = write!(out, ",{:?},{:?}", s.mean, s.std);
        }
        out.push('\n');
    };
    for r in reports {
        row("mean_predictor", "-", &r.mean_predictor_afe);
    }
    for r in reports {
        row("train", &r.fp, &r.train_afe);
    }
    for r in reports {
        row("test", &r.fp, &r.test_afe);
    }
    out
}

/// Recall table with the lattice-energy benchmark first.
pub fn recall_csv(reports: &[MetricReport]) -> String {
    let mut out = String::from("feature,best,mean,std\n");
    if let Some(first) = reports.first() {
        let l = first.lattice_recall;
        let _ = writeln!(out, "Lattice,{:?},{:?},{:?}", l.best, l.mean, l.std);
    }
    for r in reports {
        let _ = writeln!(out, "{},{:?},{:?},{:?}", r.fp, r.recall.best, r.recall.mean, r.recall.std);
    }
    out
}

/// Long-format held-out predictions for distribution plots.
pub fn distributions_csv(predictions: &[Prediction]) -> String {
    let mut out = String::from("id,fold,task,calculated,predicted\n");
    for p in predictions {
        for (t, label) in ["single_point", "ewald", "lattice", "mbd"].iter().enumerate() {
            let _ = writeln!(out, "{},{},{},{:?},{:?}", p.id, p.fold, label, p.calculated[t], p.predicted[t]);
        }
    }
    out
}
