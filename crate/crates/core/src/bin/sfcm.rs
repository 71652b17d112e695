use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sfcm::cli::{cmd_evaluate, cmd_featurize, cmd_sweep_k, cmd_synth, cmd_train};
use sfcm::PipelineConfig;

#[derive(Parser)]
#[command(name = "sfcm", version, about = "Morton-curve crystal featurization, LSI and energy regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write synthetic CIFs and a targets file
    Synth(Common),
    /// Encode a directory of CIFs into sparse vectors
    Featurize(Common),
    /// Cross-validated error for a list of k values
    SweepK(Common),
    /// Fit LSI and the network on all structures
    Train(Common),
    /// K-fold evaluation, recall and final models
    Evaluate(Common),
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` settings file
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// m1, m2 or m3
    #[arg(long)]
    variant: Option<String>,
    /// `auto` or a fixed rank
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Any other setting, as KEY=VALUE (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Common {
    fn resolve(&self) -> Result<PipelineConfig, String> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::load(p).map_err(|e| e.to_string())?,
            None => PipelineConfig::default(),
        };
        let mut pairs: Vec<(String, String)> = Vec::new();
        for o in &self.overrides {
            let (k, v) = o.split_once('=').ok_or_else(|| format!("--set expects KEY=VALUE, got `{o}`"))?;
            pairs.push((k.trim().into(), v.trim().into()));
        }
        if let Some(s) = self.seed {
            pairs.push(("seed".into(), s.to_string()));
        }
        if let Some(v) = &self.variant {
            pairs.push(("variant".into(), v.clone()));
        }
        if let Some(k) = &self.k {
            pairs.push(("k".into(), k.clone()));
        }
        if let Some(o) = &self.out {
            pairs.push(("out_dir".into(), o.display().to_string()));
        }
        for (k, v) in pairs {
            cfg.set(&k, &v)?;
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Synth(c) => {
            let cfg = c.resolve()?;
            cmd_synth(&cfg).map_err(|e| e.to_string())?;
            eprintln!("wrote {} structures to {}", cfg.synth_count, cfg.out_dir.display());
        }
        Command::Featurize(c) => {
            let m = cmd_featurize(&c.resolve()?).map_err(|e| e.to_string())?;
            eprintln!("featurized {} structures, skipped {}", m.count, m.skipped.len());
            for s in &m.skipped {
                eprintln!("  skipped {}: {}", s.file, s.reason);
            }
        }
        Command::SweepK(c) => {
            for r in cmd_sweep_k(&c.resolve()?).map_err(|e| e.to_string())? {
                eprintln!("k = {:>3} ({}): single point AFE {:.4}", r.k, r.label, r.outcome.report.test_afe[0].mean);
            }
        }
        Command::Train(c) => {
            let m = cmd_train(&c.resolve()?).map_err(|e| e.to_string())?;
            eprintln!("k = {}, final training loss {:.5}", m.lsi.k, m.final_loss);
        }
        Command::Evaluate(c) => {
            let o = cmd_evaluate(&c.resolve()?).map_err(|e| e.to_string())?;
            let r = &o.report;
            for (t, label) in sfcm::eval::TASK_LABELS.iter().enumerate() {
                eprintln!(
                    "{label:<13} test AFE {:.4} ± {:.4}   mean predictor {:.4}",
                    r.test_afe[t].mean, r.test_afe[t].std, r.mean_predictor_afe[t].mean
                );
            }
            eprintln!(
                "recall@{}%: {:.3} (lattice benchmark {:.3})",
                r.recall_pct, r.recall.mean, r.lattice_recall.mean
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
