//! Multi-task multilayer perceptron: logistic hidden layers, an affine
//! four-unit output (single point, Ewald, lattice, MBD), mean-squared-error
//! loss on z-scored targets and plain mini-batch gradient descent.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::afe;
use crate::seed::subseed;

pub const N_TASKS: usize = 4;
pub const MLP_MODEL_VERSION: u32 = 1;
pub const DEFAULT_EPOCHS: usize = 200;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MlpError {
    #[error("expected input of length {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("loss became non-finite in epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("invalid MLP configuration: {0}")]
    InvalidConfig(String),
}

/// Numerically stable `1 / (1 + e^-x)`.
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub hidden_sizes: Vec<usize>,
    pub learn_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl MlpConfig {
    /// Tuned settings per representation: `sfc-m1`, `sfc-m2`, `sfc-m3`.
    pub fn preset(name: &str) -> Option<MlpConfig> {
        let (hidden, lr, batch) = match name.to_ascii_lowercase().as_str() {
            "sfc-m1" | "m1" => (vec![72, 38, 468], 3.74e-4, 37),
            "sfc-m2" | "m2" => (vec![41, 62, 15], 7.11e-4, 52),
            "sfc-m3" | "m3" => (vec![79, 33, 90], 1.03e-5, 72),
            _ => return None,
        };
        Some(MlpConfig { hidden_sizes: hidden, learn_rate: lr, batch_size: batch, epochs: DEFAULT_EPOCHS, seed: 0 })
    }

    /// Reduced dimensionality paired with each preset.
    pub fn preset_k(name: &str) -> Option<usize> {
        match name.to_ascii_lowercase().as_str() {
            "sfc-m1" | "m1" => Some(7),
            "sfc-m2" | "m2" => Some(10),
            "sfc-m3" | "m3" => Some(17),
            _ => None,
        }
    }

    pub fn validate(&self, n_train: usize) -> Result<(), MlpError> {
        let bad = |m: String| Err(MlpError::InvalidConfig(m));
        if self.hidden_sizes.is_empty() || self.hidden_sizes.len() > 8 {
            return bad(format!("{} hidden layers; expected 1..=8", self.hidden_sizes.len()));
        }
        if self.hidden_sizes.contains(&0) {
            return bad("hidden layer of width 0".into());
        }
        if !(self.learn_rate >= 0.0 && self.learn_rate.is_finite()) {
            return bad(format!("learn rate {}", self.learn_rate));
        }
        if self.batch_size == 0 || self.batch_size > n_train {
            return bad(format!("batch size {} with {} training rows", self.batch_size, n_train));
        }
        if self.epochs == 0 {
            return bad("zero epochs".into());
        }
        Ok(())
    }
}

/// Per-column z-scoring; zero or non-finite spreads are replaced by 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Normalizer {
    pub fn identity(dim: usize) -> Self {
        Normalizer { mean: vec![0.0; dim], std: vec![1.0; dim] }
    }

    pub fn fit<R: AsRef<[f64]>>(rows: &[R], dim: usize) -> Self {
        let n = rows.len().max(1) as f64;
        let mut mean = vec![0.0; dim];
        for r in rows {
            for (m, x) in mean.iter_mut().zip(r.as_ref()) {
                *m += x / n;
            }
        }
        let mut var = vec![0.0; dim];
        for r in rows {
            for ((v, x), m) in var.iter_mut().zip(r.as_ref()).zip(&mean) {
                *v += (x - m).powi(2) / n;
            }
        }
        let std = var
            .into_iter()
            .map(|v| {
                let s = v.sqrt();
                if s > 1e-12 && s.is_finite() {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Normalizer { mean, std }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.mean).zip(&self.std).map(|((x, m), s)| (x - m) / s).collect()
    }

    pub fn invert(&self, z: &[f64]) -> Vec<f64> {
        z.iter().zip(&self.mean).zip(&self.std).map(|((z, m), s)| z * s + m).collect()
    }
}

/// Dense layer; `weights` is `n_out × n_in`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub n_in: usize,
    pub n_out: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    fn affine(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.n_in)
            .zip(&self.biases)
            .map(|(row, b)| row.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + b)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub format_version: u32,
    pub layers: Vec<Layer>,
    pub input_norm: Normalizer,
    pub target_norm: Normalizer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean mini-batch loss seen during each epoch.
    pub epoch_losses: Vec<f64>,
    pub final_loss: f64,
}

/// Weight and bias gradients, laid out like the model's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

/// Glorot-uniform weights, zero biases, identity normalization.
pub fn init(cfg: &MlpConfig, input_dim: usize) -> MlpModel {
    assert!(input_dim >= 1, "input_dim must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(subseed(cfg.seed, "init"));
    let mut sizes = vec![input_dim];
    sizes.extend(&cfg.hidden_sizes);
    sizes.push(N_TASKS);
    let layers = sizes
        .windows(2)
        .map(|w| {
            let (n_in, n_out) = (w[0], w[1]);
            let s = (6.0 / (n_in + n_out) as f64).sqrt();
            Layer {
                n_in,
                n_out,
                weights: (0..n_in * n_out).map(|_| rng.gen_range(-s..=s)).collect(),
                biases: vec![0.0; n_out],
            }
        })
        .collect();
    MlpModel {
        format_version: MLP_MODEL_VERSION,
        layers,
        input_norm: Normalizer::identity(input_dim),
        target_norm: Normalizer::identity(N_TASKS),
    }
}

impl MlpModel {
    pub fn input_dim(&self) -> usize {
        self.layers[0].n_in
    }

    /// Outputs of every layer, input first.
    fn activations(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = vec![x.to_vec()];
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = layer.affine(acts.last().expect("non-empty"));
            if l < last {
                z.iter_mut().for_each(|v| *v = logistic(*v));
            }
            acts.push(z);
        }
        acts
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), MlpError> {
        if x.len() != self.input_dim() {
            return Err(MlpError::DimensionMismatch { expected: self.input_dim(), found: x.len() });
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Normalized-space forward pass.
pub fn forward(m: &MlpModel, x: &[f64]) -> Result<[f64; N_TASKS], MlpError> {
    m.check_dim(x)?;
    let out = m.activations(x).pop().expect("output layer");
    Ok(out.try_into().expect("four outputs"))
}

/// Mean over samples and tasks of the squared error, with exact gradients.
pub fn loss_and_gradient(m: &MlpModel, xs: &[Vec<f64>], ys: &[[f64; N_TASKS]]) -> (f64, Gradients) {
    let mut grads = Gradients {
        weights: m.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
        biases: m.layers.iter().map(|l| vec![0.0; l.n_out]).collect(),
    };
    let scale = 1.0 / (xs.len() * N_TASKS) as f64;
    let mut loss = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let acts = m.activations(x);
        let out = acts.last().expect("output");
        let mut delta: Vec<f64> = out.iter().zip(y).map(|(o, t)| 2.0 * (o - t) * scale).collect();
        loss += out.iter().zip(y).map(|(o, t)| (o - t).powi(2)).sum::<f64>() * scale;

        for l in (0..m.layers.len()).rev() {
            let layer = &m.layers[l];
            let input = &acts[l];
            for (o, d) in delta.iter().enumerate() {
                grads.biases[l][o] += d;
                let row = &mut grads.weights[l][o * layer.n_in..(o + 1) * layer.n_in];
                row.iter_mut().zip(input).for_each(|(g, a)| *g += d * a);
            }
            if l > 0 {
                // back through the weights, then the logistic of layer l-1
                let mut prev = vec![0.0; layer.n_in];
                for (o, d) in delta.iter().enumerate() {
                    let row = &layer.weights[o * layer.n_in..(o + 1) * layer.n_in];
                    prev.iter_mut().zip(row).for_each(|(p, w)| *p += d * w);
                }
                prev.iter_mut().zip(input).for_each(|(p, a)| *p *= a * (1.0 - a));
                delta = prev;
            }
        }
    }
    (loss, grads)
}

fn apply_step(m: &mut MlpModel, g: &Gradients, lr: f64) {
    for (l, layer) in m.layers.iter_mut().enumerate() {
        layer.weights.iter_mut().zip(&g.weights[l]).for_each(|(w, d)| *w -= lr * d);
        layer.biases.iter_mut().zip(&g.biases[l]).for_each(|(b, d)| *b -= lr * d);
    }
}

/// Fits normalization on `(xs, ys)` and runs mini-batch gradient descent.
pub fn train(
    mut m: MlpModel,
    xs: &[Vec<f64>],
    ys: &[[f64; N_TASKS]],
    cfg: &MlpConfig,
) -> Result<(MlpModel, TrainReport), MlpError> {
    if xs.len() != ys.len() {
        return Err(MlpError::InvalidConfig(format!("{} feature rows but {} target rows", xs.len(), ys.len())));
    }
    cfg.validate(xs.len())?;
    for x in xs {
        m.check_dim(x)?;
    }
    m.input_norm = Normalizer::fit(xs, m.input_dim());
    m.target_norm = Normalizer::fit(ys, N_TASKS);
    let nx: Vec<Vec<f64>> = xs.iter().map(|x| m.input_norm.apply(x)).collect();
    let ny: Vec<[f64; N_TASKS]> = ys.iter().map(|y| m.target_norm.apply(y).try_into().expect("four targets")).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(subseed(cfg.seed, "shuffle"));
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let bx: Vec<Vec<f64>> = batch.iter().map(|&i| nx[i].clone()).collect();
            let by: Vec<[f64; N_TASKS]> = batch.iter().map(|&i| ny[i]).collect();
            let (loss, grads) = loss_and_gradient(&m, &bx, &by);
            total += loss * batch.len() as f64;
            apply_step(&mut m, &grads, cfg.learn_rate);
        }
        let mean = total / xs.len() as f64;
        if !mean.is_finite() {
            return Err(MlpError::NonFiniteLoss { epoch });
        }
        epoch_losses.push(mean);
    }
    let (final_loss, _) = loss_and_gradient(&m, &nx, &ny);
    if !final_loss.is_finite() {
        return Err(MlpError::NonFiniteLoss { epoch: cfg.epochs });
    }
    Ok((m, TrainReport { epoch_losses, final_loss }))
}

/// Predictions in original target units.
pub fn predict(m: &MlpModel, xs: &[Vec<f64>]) -> Result<Vec<[f64; N_TASKS]>, MlpError> {
    xs.iter()
        .map(|x| {
            let z = forward(m, &m.input_norm.apply(x))?;
            Ok(m.target_norm.invert(&z).try_into().expect("four outputs"))
        })
        .collect()
}

/// Bounds for [`random_search`]. The learn rate is sampled log-uniformly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub layers: (usize, usize),
    pub units: (usize, usize),
    pub learn_rate: (f64, f64),
    pub batch_size: (usize, usize),
    pub epochs: usize,
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            layers: (1, 3),
            units: (8, 128),
            learn_rate: (1e-4, 1e-1),
            batch_size: (8, 72),
            epochs: DEFAULT_EPOCHS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub best: MlpConfig,
    pub best_afe: f64,
    /// Every evaluated configuration and its validation AFE (mean over tasks).
    pub trials: Vec<(MlpConfig, f64)>,
}

/// Random search over `space`, scored by mean validation AFE on a seeded
/// 20% hold-out of `(xs, ys)`. Failed trainings score `+inf`.
pub fn random_search(
    space: &SearchSpace,
    budget: usize,
    seed: u64,
    xs: &[Vec<f64>],
    ys: &[[f64; N_TASKS]],
) -> Result<SearchOutcome, MlpError> {
    if budget == 0 {
        return Err(MlpError::InvalidConfig("search budget must be at least 1".into()));
    }
    if xs.len() < 2 || xs.len() != ys.len() {
        return Err(MlpError::InvalidConfig("random search needs at least two matching rows".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(subseed(seed, "search"));
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.shuffle(&mut rng);
    let n_val = ((xs.len() as f64 * 0.2).round() as usize).clamp(1, xs.len() - 1);
    let (val, fit) = idx.split_at(n_val);
    let fx: Vec<Vec<f64>> = fit.iter().map(|&i| xs[i].clone()).collect();
    let fy: Vec<[f64; N_TASKS]> = fit.iter().map(|&i| ys[i]).collect();
    let vx: Vec<Vec<f64>> = val.iter().map(|&i| xs[i].clone()).collect();
    let vy: Vec<[f64; N_TASKS]> = val.iter().map(|&i| ys[i]).collect();

    let mut trials = Vec::with_capacity(budget);
    for _ in 0..budget {
        let n_layers = rng.gen_range(space.layers.0..=space.layers.1);
        let (llo, lhi) = (space.learn_rate.0.ln(), space.learn_rate.1.ln());
        let cfg = MlpConfig {
            hidden_sizes: (0..n_layers).map(|_| rng.gen_range(space.units.0..=space.units.1)).collect(),
            learn_rate: if lhi > llo { rng.gen_range(llo..lhi).exp() } else { space.learn_rate.0 },
            batch_size: rng.gen_range(space.batch_size.0..=space.batch_size.1).min(fx.len()),
            epochs: space.epochs,
            seed: rng.gen(),
        };
        let score = init(&cfg, xs[0].len());
        let score = train(score, &fx, &fy, &cfg)
            .and_then(|(m, _)| predict(&m, &vx))
            .ok()
            .and_then(|pred| {
                (0..N_TASKS)
                    .map(|t| {
                        let p: Vec<f64> = pred.iter().map(|r| r[t]).collect();
                        let c: Vec<f64> = vy.iter().map(|r| r[t]).collect();
                        afe(&p, &c).ok()
                    })
                    .sum::<Option<f64>>()
                    .map(|s| s / N_TASKS as f64)
            })
            .filter(|s| s.is_finite())
            .unwrap_or(f64::INFINITY);
        trials.push((cfg, score));
    }
    let (best, best_afe) =
        trials.iter().min_by(|a, b| a.1.total_cmp(&b.1)).map(|(c, s)| (c.clone(), *s)).expect("budget >= 1");
    Ok(SearchOutcome { best, best_afe, trials })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_cfg(hidden: Vec<usize>) -> MlpConfig {
        MlpConfig { hidden_sizes: hidden, learn_rate: 0.05, batch_size: 8, epochs: 200, seed: 3 }
    }

    #[test]
    fn logistic_values() {
        assert_eq!(logistic(0.0), 0.5);
        for x in [-30.0, -2.5, -0.1, 0.7, 4.0, 35.0] {
            assert!((logistic(x) - (1.0 - logistic(-x))).abs() < 1e-15);
        }
        assert_eq!(logistic(-1000.0), 0.0);
        assert_eq!(logistic(1000.0), 1.0);
        assert!(logistic(-700.0) > 0.0);
    }

    #[test]
    fn init_contract() {
        let cfg = tiny_cfg(vec![5, 3]);
        let a = init(&cfg, 4);
        assert_eq!(a, init(&cfg, 4));
        let shapes: Vec<_> = a.layers.iter().map(|l| (l.n_in, l.n_out)).collect();
        assert_eq!(shapes, vec![(4, 5), (5, 3), (3, 4)]);
        for l in &a.layers {
            let s = (6.0 / (l.n_in + l.n_out) as f64).sqrt();
            assert!(l.biases.iter().all(|&b| b == 0.0));
            assert!(l.weights.iter().all(|w| w.abs() <= s));
        }
    }

    #[test]
    fn forward_hand_cases() {
        let mut m = init(&tiny_cfg(vec![3]), 2);
        for l in &mut m.layers {
            l.weights.iter_mut().for_each(|w| *w = 0.0);
        }
        assert_eq!(forward(&m, &[5.0, -3.0]).unwrap(), [0.0; 4]);

        let mut m = init(&tiny_cfg(vec![1]), 1);
        m.layers[0].weights = vec![1.0];
        m.layers[1].weights = vec![2.0, 0.0, 0.0, 0.0];
        assert_eq!(forward(&m, &[0.0]).unwrap()[0], 1.0);
        assert!(forward(&m, &[1e6]).unwrap().iter().all(|v| v.is_finite()));
        assert_eq!(forward(&m, &[1.0, 2.0]), Err(MlpError::DimensionMismatch { expected: 1, found: 2 }));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let cfg = MlpConfig { hidden_sizes: vec![4, 3], learn_rate: 0.1, batch_size: 2, epochs: 1, seed: 11 };
        let mut m = init(&cfg, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for l in &mut m.layers {
            l.biases.iter_mut().for_each(|b| *b = rng.gen_range(-0.5..0.5));
        }
        let xs: Vec<Vec<f64>> = (0..5).map(|_| (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
        let ys: Vec<[f64; 4]> = (0..5).map(|_| [0; 4].map(|_: i32| rng.gen_range(-1.0..1.0))).collect();
        let (_, g) = loss_and_gradient(&m, &xs, &ys);
        let h = 1e-5;
        for l in 0..m.layers.len() {
            for i in 0..m.layers[l].weights.len() + m.layers[l].biases.len() {
                let nw = m.layers[l].weights.len();
                let bump = |m: &mut MlpModel, d: f64| {
                    if i < nw {
                        m.layers[l].weights[i] += d
                    } else {
                        m.layers[l].biases[i - nw] += d
                    }
                };
                let mut plus = m.clone();
                bump(&mut plus, h);
                let mut minus = m.clone();
                bump(&mut minus, -h);
                let fd = (loss_and_gradient(&plus, &xs, &ys).0 - loss_and_gradient(&minus, &xs, &ys).0) / (2.0 * h);
                let an = if i < nw { g.weights[l][i] } else { g.biases[l][i - nw] };
                assert!((an - fd).abs() / fd.abs().max(1.0) < 1e-5, "layer {l} param {i}: {an} vs {fd}");
            }
        }
    }

    fn linear_data(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<[f64; 4]>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let ys = xs
            .iter()
            .map(|x| {
                [
                    -50.0 + 3.0 * x[0] - x[1],
                    -20.0 + x[1] + 2.0 * x[2],
                    -10.0 + 0.5 * x[0] + x[2],
                    -5.0 - x[0] + x[1] - x[2],
                ]
            })
            .collect();
        (xs, ys)
    }

    #[test]
    fn training_reduces_loss() {
        let (xs, ys) = linear_data(80, 1);
        let cfg = tiny_cfg(vec![8]);
        let (_, report) = train(init(&cfg, 3), &xs, &ys, &cfg).unwrap();
        assert_eq!(report.epoch_losses.len(), 200);
        assert!(report.epoch_losses[0] >= 10.0 * report.final_loss, "{report:?}");
    }

    #[test]
    fn zero_learn_rate_freezes_weights() {
        let (xs, ys) = linear_data(20, 2);
        let cfg = MlpConfig { learn_rate: 0.0, epochs: 5, ..tiny_cfg(vec![4]) };
        let start = init(&cfg, 3);
        let (end, _) = train(start.clone(), &xs, &ys, &cfg).unwrap();
        assert_eq!(start.layers, end.layers);
    }

    #[test]
    fn training_is_deterministic() {
        let (xs, ys) = linear_data(30, 3);
        let cfg = MlpConfig { epochs: 20, ..tiny_cfg(vec![6, 4]) };
        let a = train(init(&cfg, 3), &xs, &ys, &cfg).unwrap();
        let b = train(init(&cfg, 3), &xs, &ys, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn overfits_a_single_point() {
        let xs = vec![vec![0.3, -1.2, 2.0]];
        let ys = vec![[-12.5, 3.0, 40.0, -0.7]];
        let cfg = MlpConfig { hidden_sizes: vec![4], learn_rate: 0.1, batch_size: 1, epochs: 300, seed: 1 };
        let (m, _) = train(init(&cfg, 3), &xs, &ys, &cfg).unwrap();
        let p = predict(&m, &xs).unwrap()[0];
        for t in 0..4 {
            assert!((p[t] - ys[0][t]).abs() < 1e-3);
        }
    }

    #[test]
    fn predict_is_denormalized_forward() {
        let (xs, ys) = linear_data(25, 4);
        let cfg = MlpConfig { epochs: 10, ..tiny_cfg(vec![5]) };
        let (m, _) = train(init(&cfg, 3), &xs, &ys, &cfg).unwrap();
        let p = predict(&m, &xs[..1]).unwrap()[0];
        let manual = m.target_norm.invert(&forward(&m, &m.input_norm.apply(&xs[0])).unwrap());
        assert_eq!(p.to_vec(), manual);
    }

    #[test]
    fn constant_feature_column_is_safe() {
        let (mut xs, ys) = linear_data(20, 5);
        xs.iter_mut().for_each(|x| x[1] = 7.0);
        let cfg = MlpConfig { epochs: 10, ..tiny_cfg(vec![4]) };
        let (m, _) = train(init(&cfg, 3), &xs, &ys, &cfg).unwrap();
        assert_eq!(m.input_norm.std[1], 1.0);
        assert!(predict(&m, &xs).unwrap().iter().flatten().all(|v| v.is_finite()));
    }

    #[test]
    fn mean_predictor_loss_is_unit_per_task() {
        let (xs, ys) = linear_data(50, 6);
        let cfg = MlpConfig { epochs: 1, learn_rate: 0.0, ..tiny_cfg(vec![3]) };
        let mut m = init(&cfg, 3);
        m.layers.last_mut().unwrap().weights.iter_mut().for_each(|w| *w = 0.0);
        let (m, report) = train(m, &xs, &ys, &cfg).unwrap();
        assert!((report.final_loss - 1.0).abs() < 1e-12);
        assert_eq!(m.layers.len(), 2);
    }

    #[test]
    fn config_validation() {
        let (xs, ys) = linear_data(5, 7);
        let cfg = MlpConfig { batch_size: 6, ..tiny_cfg(vec![3]) };
        assert!(matches!(train(init(&cfg, 3), &xs, &ys, &cfg), Err(MlpError::InvalidConfig(_))));
        assert!(MlpConfig { hidden_sizes: vec![], ..tiny_cfg(vec![]) }.validate(10).is_err());
        assert!(MlpConfig { hidden_sizes: vec![1; 9], ..tiny_cfg(vec![]) }.validate(10).is_err());
    }

    #[test]
    fn exploding_training_reports_epoch() {
        let (xs, mut ys) = linear_data(20, 8);
        ys[0][0] = 1e200;
        let cfg = MlpConfig { learn_rate: 1e6, epochs: 50, ..tiny_cfg(vec![4]) };
        match train(init(&cfg, 3), &xs, &ys, &cfg) {
            Err(MlpError::NonFiniteLoss { .. }) => {}
            other => panic!("expected NonFiniteLoss, got {:?}", other.map(|r| r.1)),
        }
    }

    #[test]
    fn presets() {
        let m2 = MlpConfig::preset("sfc-m2").unwrap();
        assert_eq!((m2.hidden_sizes.clone(), m2.learn_rate, m2.batch_size), (vec![41, 62, 15], 7.11e-4, 52));
        assert_eq!(MlpConfig::preset("sfc-m1").unwrap().hidden_sizes, vec![72, 38, 468]);
        assert_eq!(MlpConfig::preset("sfc-m3").unwrap().learn_rate, 1.03e-5);
        assert_eq!(MlpConfig::preset_k("sfc-m3"), Some(17));
        assert!(MlpConfig::preset("sfc-m9").is_none());
    }

    #[test]
    fn random_search_contract() {
        let (xs, ys) = linear_data(40, 9);
        let space =
            SearchSpace { layers: (1, 2), units: (2, 8), learn_rate: (1e-3, 1e-1), batch_size: (4, 16), epochs: 15 };
        let one = random_search(&space, 1, 4, &xs, &ys).unwrap();
        assert_eq!(one.trials.len(), 1);
        assert_eq!(one.best, one.trials[0].0);

        let a = random_search(&space, 5, 4, &xs, &ys).unwrap();
        assert_eq!(a, random_search(&space, 5, 4, &xs, &ys).unwrap());
        assert!(a.trials.iter().all(|(_, s)| a.best_afe <= *s));
    }

    #[test]
    fn json_round_trip() {
        let (xs, ys) = linear_data(20, 10);
        let cfg = MlpConfig { epochs: 3, ..tiny_cfg(vec![3]) };
        let (m, _) = train(init(&cfg, 3), &xs, &ys, &cfg).unwrap();
        assert_eq!(MlpModel::from_json(&m.to_json()).unwrap(), m);
    }
}
