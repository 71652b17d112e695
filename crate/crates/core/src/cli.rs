//! Pipeline commands behind the `sfcm` binary: synthetic data, featurization,
//! k sweeps, training and cross-validated evaluation. Every command reads a
//! [`PipelineConfig`] and writes plain files into its output directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::descriptors::{DescriptorError, DescriptorVariant, VariantTag};
use crate::eval::{
    cross_validate, distributions_csv, metrics_csv, recall_csv, CvOutcome, CvSettings, Dataset, EvalError, LsiSettings,
    Ranking, DEFAULT_FOLDS, DEFAULT_RECALL_PCT,
};
use crate::featurize::{featurize_all, FeaturizeConfig};
use crate::geometry::DEFAULT_SPHERE_RADIUS;
use crate::lsi::{
    normalized_gradient, select_k, KChoice, LsiError, LsiModel, SvdOptions, DEFAULT_K_SCAN, DEFAULT_K_THRESHOLD,
};
use crate::mlp::{init, predict, train, MlpConfig, MlpError, N_TASKS};
use crate::morton::{read_vectors, write_vectors, MortonError, SparseVector, DEFAULT_BITS, MAX_BITS};
use crate::seed::subseed;
use crate::structure_io::{
    generate_synthetic, load_targets, parse_cif, write_cif, write_targets, EnergyRecord, TargetsError,
};

pub const VECTORS_FILE: &str = "vectors.sfm";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const LSI_MODEL_FILE: &str = "lsi_model.json";
pub const MLP_MODEL_FILE: &str = "mlp_model.json";
pub const METRICS_FILE: &str = "metrics.csv";
pub const RECALL_FILE: &str = "recall.csv";
pub const SINGULAR_VALUES_FILE: &str = "singular_values.csv";
pub const DISTRIBUTIONS_FILE: &str = "distributions.csv";
pub const SWEEP_FILE: &str = "sweep_k.csv";
pub const REPORT_FILE: &str = "report.json";
pub const TARGETS_FILE: &str = "targets.csv";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("missing setting `{0}`")]
    MissingSetting(&'static str),
    #[error("no structure in {0} could be featurized")]
    NoValidStructures(PathBuf),
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("targets: {0}")]
    Targets(#[from] TargetsError),
    #[error(transparent)]
    Morton(#[from] MortonError),
    #[error(transparent)]
    Descriptor(#[from] DescriptorError),
    #[error(transparent)]
    Lsi(#[from] LsiError),
    #[error(transparent)]
    Mlp(#[from] MlpError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

type Result<T> = std::result::Result<T, PipelineError>;

/// Rank choice as written in a config: `auto` or a number.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KSetting {
    Auto,
    Fixed(usize),
}

/// Every pipeline setting. Parsed from flat `key = value` text; `#` starts
/// a comment. Unset MLP fields fall back to the preset of the variant.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub input_dir: Option<PathBuf>,
    pub targets: Option<PathBuf>,
    /// Existing vector file; when unset, commands featurize `input_dir`.
    pub vectors: Option<PathBuf>,
    pub variant: VariantTag,
    pub bits: u32,
    pub sphere_radius: f64,
    pub range_max: Option<f64>,
    /// `None` means the k paired with the variant preset.
    pub k: Option<KSetting>,
    pub threshold: f64,
    pub k_scan: usize,
    pub k_list: Vec<usize>,
    pub preset: Option<String>,
    pub hidden_sizes: Option<Vec<usize>>,
    pub learn_rate: Option<f64>,
    pub batch_size: Option<usize>,
    pub epochs: Option<usize>,
    pub folds: usize,
    pub recall_pct: f64,
    pub ranking: Ranking,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub synth_count: usize,
    pub synth_sites: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            input_dir: None,
            targets: None,
            vectors: None,
            variant: VariantTag::M1,
            bits: DEFAULT_BITS,
            sphere_radius: DEFAULT_SPHERE_RADIUS,
            range_max: None,
            k: None,
            threshold: DEFAULT_K_THRESHOLD,
            k_scan: DEFAULT_K_SCAN,
            k_list: (1..=20).collect(),
            preset: None,
            hidden_sizes: None,
            learn_rate: None,
            batch_size: None,
            epochs: None,
            folds: DEFAULT_FOLDS,
            recall_pct: DEFAULT_RECALL_PCT,
            ranking: Ranking::LowestFirst,
            seed: 0,
            out_dir: PathBuf::from("out"),
            synth_count: 300,
            synth_sites: 8,
        }
    }
}

fn parse_list<T: std::str::FromStr>(v: &str) -> Option<Vec<T>> {
    v.split(',').map(|x| x.trim().parse().ok()).collect()
}

impl PipelineConfig {
    pub fn parse(text: &str) -> Result<PipelineConfig> {
        let mut cfg = PipelineConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| PipelineError::Config {
                line: i + 1,
                message: format!("expected `key = value`, found `{line}`"),
            })?;
            cfg.set(key.trim(), value.trim()).map_err(|message| PipelineError::Config { line: i + 1, message })?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<PipelineConfig> {
        PipelineConfig::parse(&read(path)?)
    }

    /// Applies one setting; command-line overrides use the same keys.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> std::result::Result<T, String> {
            v.parse().map_err(|_| format!("`{key}`: cannot parse `{v}`"))
        }
        fn positive(key: &str, v: f64) -> std::result::Result<f64, String> {
            if v > 0.0 && v.is_finite() {
                Ok(v)
            } else {
                Err(format!("`{key}` must be positive, found {v}"))
            }
        }
        match key {
            "input_dir" => self.input_dir = Some(value.into()),
            "targets" => self.targets = Some(value.into()),
            "vectors" => self.vectors = Some(value.into()),
            "variant" => self.variant = value.parse().map_err(|e: DescriptorError| e.to_string())?,
            "bits" => {
                let b: u32 = num(key, value)?;
                if b == 0 || b > MAX_BITS {
                    return Err(format!("`bits` must lie in 1..={MAX_BITS}"));
                }
                self.bits = b;
            }
            "sphere_radius" => self.sphere_radius = positive(key, num(key, value)?)?,
            "range_max" => self.range_max = Some(positive(key, num(key, value)?)?),
            "k" => {
                self.k = Some(if value.eq_ignore_ascii_case("auto") {
                    KSetting::Auto
                } else {
                    KSetting::Fixed(num(key, value)?)
                })
            }
            "threshold" => self.threshold = num(key, value)?,
            "k_scan" => self.k_scan = num(key, value)?,
            "k_list" => self.k_list = parse_list(value).ok_or_else(|| format!("`k_list`: cannot parse `{value}`"))?,
            "preset" => {
                if MlpConfig::preset(value).is_none() {
                    return Err(format!("unknown preset `{value}`"));
                }
                self.preset = Some(value.to_string());
            }
            "hidden_sizes" => {
                self.hidden_sizes =
                    Some(parse_list(value).ok_or_else(|| format!("`hidden_sizes`: cannot parse `{value}`"))?)
            }
            "learn_rate" => self.learn_rate = Some(num(key, value)?),
            "batch_size" => self.batch_size = Some(num(key, value)?),
            "epochs" => self.epochs = Some(num(key, value)?),
            "folds" => {
                self.folds = num(key, value)?;
                if self.folds < 2 {
                    return Err("`folds` must be at least 2".into());
                }
            }
            "recall_pct" => {
                let p: f64 = num(key, value)?;
                if !(p > 0.0 && p < 100.0) {
                    return Err("`recall_pct` must lie strictly between 0 and 100".into());
                }
                self.recall_pct = p;
            }
            "ranking" => {
                self.ranking = match value {
                    "lowest" => Ranking::LowestFirst,
                    "highest" => Ranking::HighestFirst,
                    _ => return Err(format!("`ranking` must be `lowest` or `highest`, found `{value}`")),
                }
            }
            "seed" => self.seed = num(key, value)?,
            "out_dir" => self.out_dir = value.into(),
            "synth_count" => self.synth_count = num(key, value)?,
            "synth_sites" => self.synth_sites = num(key, value)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    fn preset_name(&self) -> String {
        self.preset.clone().unwrap_or_else(|| format!("sfc-{}", self.variant))
    }

    /// Preset values with any explicit fields laid over them.
    pub fn mlp_config(&self) -> MlpConfig {
        let mut m = MlpConfig::preset(&self.preset_name()).expect("preset names are validated");
        if let Some(h) = &self.hidden_sizes {
            m.hidden_sizes = h.clone();
        }
        if let Some(lr) = self.learn_rate {
            m.learn_rate = lr;
        }
        if let Some(b) = self.batch_size {
            m.batch_size = b;
        }
        if let Some(e) = self.epochs {
            m.epochs = e;
        }
        m.seed = self.seed;
        m
    }

    pub fn k_choice(&self) -> KChoice {
        match self.k {
            Some(KSetting::Fixed(k)) => KChoice::Fixed(k),
            Some(KSetting::Auto) => KChoice::Auto { threshold: self.threshold, scan: self.k_scan },
            None => KChoice::Fixed(MlpConfig::preset_k(&self.preset_name()).expect("preset names are validated")),
        }
    }

    pub fn svd_options(&self) -> SvdOptions {
        SvdOptions { seed: subseed(self.seed, "lsi"), ..SvdOptions::default() }
    }

    pub fn cv_settings(&self) -> CvSettings {
        CvSettings { folds: self.folds, seed: self.seed, recall_pct: self.recall_pct, ranking: self.ranking }
    }

    fn featurize_config(&self) -> FeaturizeConfig {
        FeaturizeConfig {
            variant: self.variant,
            bits: self.bits,
            sphere_radius: self.sphere_radius,
            range_max: self.range_max,
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| PipelineError::Io { path: path.to_path_buf(), source })
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| PipelineError::Io { path: path.to_path_buf(), source })
}

fn ensure_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|source| PipelineError::Io { path: path.to_path_buf(), source })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|source| PipelineError::Json { path: path.to_path_buf(), source })?;
    write(path, &(text + "\n"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedFile {
    pub file: String,
    pub reason: String,
}

/// Featurization record stored next to `vectors.sfm`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub variant: VariantTag,
    pub bits: u32,
    pub sphere_radius: f64,
    pub range_max: f64,
    pub count: usize,
    pub skipped: Vec<SkippedFile>,
}

impl Manifest {
    pub fn descriptor(&self) -> DescriptorVariant {
        DescriptorVariant::new(self.variant, self.range_max)
    }
}

/// Writes `synth_count` synthetic CIFs to `out/cifs` and their energies
/// to `out/targets.csv`.
pub fn cmd_synth(cfg: &PipelineConfig) -> Result<()> {
    let cif_dir = cfg.out_dir.join("cifs");
    ensure_dir(&cif_dir)?;
    let data = generate_synthetic(subseed(cfg.seed, "synth"), cfg.synth_count, cfg.synth_sites);
    for (s, _) in &data {
        write(&cif_dir.join(format!("{}.cif", s.id)), &write_cif(s))?;
    }
    let records: Vec<EnergyRecord> = data.into_iter().map(|(_, e)| e).collect();
    write(&cfg.out_dir.join(TARGETS_FILE), &write_targets(&records))
}

/// Parses every `*.cif` in `input_dir` (in file-name order), featurizes the
/// parseable ones and writes `vectors.sfm` plus `manifest.json`. Failures
/// are listed in the manifest; only a run with no usable file is an error.
pub fn cmd_featurize(cfg: &PipelineConfig) -> Result<Manifest> {
    let dir = cfg.input_dir.as_ref().ok_or(PipelineError::MissingSetting("input_dir"))?;
    let entries = fs::read_dir(dir).map_err(|source| PipelineError::Io { path: dir.clone(), source })?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("cif")))
        .collect();
    files.sort();

    let mut skipped = Vec::new();
    let mut structures = Vec::new();
    for path in &files {
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let parsed = read(path).map_err(|e| e.to_string()).and_then(|t| parse_cif(&t).map_err(|e| e.to_string()));
        match parsed {
            Ok(s) => structures.push((name, s)),
            Err(reason) => skipped.push(SkippedFile { file: name, reason }),
        }
    }

    let cells: Vec<_> = structures.iter().map(|(_, s)| s.clone()).collect();
    let (variant, results) = featurize_all(&cells, &cfg.featurize_config());
    let mut rows: Vec<(String, SparseVector)> = Vec::new();
    for ((name, s), r) in structures.into_iter().zip(results) {
        match r {
            Ok(v) => rows.push((s.id, v)),
            Err(e) => skipped.push(SkippedFile { file: name, reason: e.to_string() }),
        }
    }
    if rows.is_empty() {
        return Err(PipelineError::NoValidStructures(dir.clone()));
    }
    skipped.sort_by(|a, b| a.file.cmp(&b.file));

    ensure_dir(&cfg.out_dir)?;
    write(&cfg.out_dir.join(VECTORS_FILE), &write_vectors(rows.iter().map(|(id, v)| (id.as_str(), v))))?;
    let manifest = Manifest {
        variant: variant.tag,
        bits: cfg.bits,
        sphere_radius: cfg.sphere_radius,
        range_max: variant.range_max,
        count: rows.len(),
        skipped,
    };
    write_json(&cfg.out_dir.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

/// Featurized rows and their descriptor: from `vectors` (with the manifest
/// beside it) when set, otherwise by featurizing `input_dir` first.
pub fn load_or_featurize(cfg: &PipelineConfig) -> Result<(DescriptorVariant, Vec<(String, SparseVector)>)> {
    let vectors_path = match &cfg.vectors {
        Some(p) => p.clone(),
        None => {
            cmd_featurize(cfg)?;
            cfg.out_dir.join(VECTORS_FILE)
        }
    };
    let manifest_path = vectors_path.with_file_name(MANIFEST_FILE);
    let manifest: Manifest = serde_json::from_str(&read(&manifest_path)?)
        .map_err(|source| PipelineError::Json { path: manifest_path, source })?;
    Ok((manifest.descriptor(), read_vectors(&read(&vectors_path)?)?))
}

fn load_dataset(cfg: &PipelineConfig) -> Result<(DescriptorVariant, Dataset)> {
    let (descriptor, rows) = load_or_featurize(cfg)?;
    let targets_path = cfg.targets.as_ref().ok_or(PipelineError::MissingSetting("targets"))?;
    let targets = load_targets(&read(targets_path)?)?;
    Ok((descriptor, Dataset::join(rows, &targets)?))
}

/// σ, σ/σ₁, the forward gradient and a marker on the rank the gradient
/// rule picks.
pub fn singular_values_csv(spectrum: &[f64], threshold: f64) -> Result<(String, Option<usize>)> {
    let chosen = if spectrum.len() >= 2 { Some(select_k(spectrum, threshold)?) } else { None };
    let normalized: Vec<f64> = spectrum.iter().map(|s| s / spectrum[0]).collect();
    let gradient = if spectrum.len() >= 2 { normalized_gradient(spectrum) } else { Vec::new() };
    let mut out = String::from("index,sigma,normalized,gradient,selected\n");
    for (i, s) in spectrum.iter().enumerate() {
        let g = gradient.get(i).map(|g| format!("{g:?}")).unwrap_or_default();
        let mark = u8::from(chosen == Some(i + 1));
        let _ = writeln!(out, "{},{:?},{:?},{},{}", i + 1, s, normalized[i], g, mark);
    }
    Ok((out, chosen))
}

fn full_spectrum(cfg: &PipelineConfig, descriptor: DescriptorVariant, data: &Dataset) -> Result<Vec<f64>> {
    let fit = LsiModel::fit(
        &data.vectors,
        descriptor,
        KChoice::Auto { threshold: cfg.threshold, scan: cfg.k_scan },
        &cfg.svd_options(),
    )?;
    Ok(fit.spectrum)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub label: String,
    pub k: usize,
    pub outcome: CvOutcome,
}

/// Cross-validated AFE for each k in `k_list`, plus a row `auto`. That row
/// reports the rank the gradient rule picks on the full-data spectrum
/// (also marked in `singular_values.csv`); its folds apply the same rule to
/// their own training spectra.
pub fn cmd_sweep_k(cfg: &PipelineConfig) -> Result<Vec<SweepRow>> {
    let (descriptor, data) = load_dataset(cfg)?;
    ensure_dir(&cfg.out_dir)?;
    let spectrum = full_spectrum(cfg, descriptor, &data)?;
    let (sv_csv, auto_k) = singular_values_csv(&spectrum, cfg.threshold)?;
    write(&cfg.out_dir.join(SINGULAR_VALUES_FILE), &sv_csv)?;

    let mlp = cfg.mlp_config();
    let auto = KChoice::Auto { threshold: cfg.threshold, scan: cfg.k_scan };
    let mut plan: Vec<(String, usize, KChoice)> =
        cfg.k_list.iter().map(|&k| (k.to_string(), k, KChoice::Fixed(k))).collect();
    plan.push(("auto".into(), auto_k.unwrap_or(1), auto));
    let mut rows = Vec::with_capacity(plan.len());
    for (label, k, choice) in plan {
        let lsi = LsiSettings { k: choice, svd: cfg.svd_options() };
        let outcome = cross_validate(&data, descriptor, &lsi, &mlp, &cfg.cv_settings())?;
        rows.push(SweepRow { label, k, outcome });
    }

    let mut out = String::from("label,k");
    for t in ["single_point", "ewald", "lattice", "mbd"] {
        let _ = write!(out, ",{t},{t}_std");
    }
    out.push('\n');
    for r in &rows {
        let _ = write!(out, "{},{}", r.label, r.k);
        for s in &r.outcome.report.test_afe {
            let _ = write!(out, ",{:?},{:?}", s.mean, s.std);
        }
        out.push('\n');
    }
    write(&cfg.out_dir.join(SWEEP_FILE), &out)?;
    Ok(rows)
}

/// Final LSI and MLP models fit on every row.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModels {
    pub lsi: LsiModel,
    pub mlp: crate::mlp::MlpModel,
    pub spectrum: Vec<f64>,
    pub final_loss: f64,
}

fn fit_all(cfg: &PipelineConfig, descriptor: DescriptorVariant, data: &Dataset) -> Result<TrainedModels> {
    let fit = LsiModel::fit(&data.vectors, descriptor, cfg.k_choice(), &cfg.svd_options())?;
    let xs: Vec<Vec<f64>> =
        (0..fit.features.ncols()).map(|j| fit.features.column(j).iter().copied().collect()).collect();
    let mlp_cfg = cfg.mlp_config();
    let (mlp, report) = train(init(&mlp_cfg, fit.model.k), &xs, &data.targets, &mlp_cfg)?;
    Ok(TrainedModels { lsi: fit.model, mlp, spectrum: fit.spectrum, final_loss: report.final_loss })
}

fn write_models(cfg: &PipelineConfig, m: &TrainedModels) -> Result<()> {
    write(&cfg.out_dir.join(LSI_MODEL_FILE), &m.lsi.to_json())?;
    write(&cfg.out_dir.join(MLP_MODEL_FILE), &m.mlp.to_json())?;
    let (sv_csv, _) = singular_values_csv(&m.spectrum, cfg.threshold)?;
    write(&cfg.out_dir.join(SINGULAR_VALUES_FILE), &sv_csv)
}

/// Fits LSI and the MLP on the whole dataset and writes both models.
pub fn cmd_train(cfg: &PipelineConfig) -> Result<TrainedModels> {
    let (descriptor, data) = load_dataset(cfg)?;
    ensure_dir(&cfg.out_dir)?;
    let models = fit_all(cfg, descriptor, &data)?;
    write_models(cfg, &models)?;
    Ok(models)
}

/// K-fold evaluation plus final models on all data.
pub fn cmd_evaluate(cfg: &PipelineConfig) -> Result<CvOutcome> {
    let (descriptor, data) = load_dataset(cfg)?;
    ensure_dir(&cfg.out_dir)?;
    let lsi = LsiSettings { k: cfg.k_choice(), svd: cfg.svd_options() };
    let outcome = cross_validate(&data, descriptor, &lsi, &cfg.mlp_config(), &cfg.cv_settings())?;
    let reports = [outcome.report.clone()];
    write(&cfg.out_dir.join(METRICS_FILE), &metrics_csv(&reports))?;
    write(&cfg.out_dir.join(RECALL_FILE), &recall_csv(&reports))?;
    write(&cfg.out_dir.join(DISTRIBUTIONS_FILE), &distributions_csv(&outcome.predictions))?;
    write_json(&cfg.out_dir.join(REPORT_FILE), &outcome.report)?;
    write_models(cfg, &fit_all(cfg, descriptor, &data)?)?;
    Ok(outcome)
}

/// Applies saved models to new vectors: one row of four predicted energies
/// per input.
pub fn predict_with(
    lsi: &LsiModel,
    mlp: &crate::mlp::MlpModel,
    rows: &[(String, SparseVector)],
) -> Result<Vec<(String, [f64; N_TASKS])>> {
    let xs: Vec<Vec<f64>> = rows.iter().map(|(_, v)| lsi.transform(v)).collect();
    let preds = predict(mlp, &xs)?;
    Ok(rows.iter().map(|(id, _)| id.clone()).zip(preds).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parsing_and_overrides() {
        let cfg = PipelineConfig::parse(
            "# comment\nvariant = m2\nk = auto   # trailing\nhidden_sizes = 8, 4\nlearn_rate = 0.01\nseed = 7\n",
        )
        .unwrap();
        assert_eq!(cfg.variant, VariantTag::M2);
        assert_eq!(cfg.k, Some(KSetting::Auto));
        let m = cfg.mlp_config();
        assert_eq!(m.hidden_sizes, vec![8, 4]);
        assert_eq!(m.learn_rate, 0.01);
        assert_eq!(m.batch_size, 52);
        assert_eq!(m.seed, 7);
        assert!(matches!(cfg.k_choice(), KChoice::Auto { .. }));
    }

    #[test]
    fn default_k_follows_preset() {
        let mut cfg = PipelineConfig::default();
        assert_eq!(cfg.k_choice(), KChoice::Fixed(7));
        cfg.set("variant", "m3").unwrap();
        assert_eq!(cfg.k_choice(), KChoice::Fixed(17));
        cfg.set("k", "5").unwrap();
        assert_eq!(cfg.k_choice(), KChoice::Fixed(5));
    }

    #[test]
    fn config_errors_name_the_line() {
        match PipelineConfig::parse("seed = 1\nbits = 12\n") {
            Err(PipelineError::Config { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(PipelineConfig::parse("nonsense\n").is_err());
        assert!(PipelineConfig::parse("colour = red\n").is_err());
        assert!(PipelineConfig::parse("preset = sfc-m9\n").is_err());
        assert!(PipelineConfig::parse("range_max = -1\n").is_err());
        assert!(PipelineConfig::parse("sphere_radius = 0\n").is_err());
        assert!(PipelineConfig::parse("folds = 1\n").is_err());
        assert!(PipelineConfig::parse("recall_pct = 100\n").is_err());
    }

    #[test]
    fn singular_value_table_marks_choice() {
        let (csv, k) = singular_values_csv(&[1.0, 0.4, 0.3995, 0.3990], DEFAULT_K_THRESHOLD).unwrap();
        assert_eq!(k, Some(2));
        let marked: Vec<&str> = csv.lines().skip(1).filter(|l| l.ends_with(",1")).collect();
        assert_eq!(marked.len(), 1);
        assert!(marked[0].starts_with("2,"));
    }
}
