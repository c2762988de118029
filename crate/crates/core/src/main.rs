use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qcascade::cascade::{evaluate_cascade, CascadeModel};
use qcascade::featsel::consensus_ranking;
use qcascade::noise::{noise_sweep, NoiseKind};
use qcascade::oracles::OodFamily;
use qcascade::pipeline::artifacts::{consensus_table, ensure_parent};
use qcascade::pipeline::experiment::{
    ablation, ablation_table, all_ks, cascade_tables, generate, metrics_table, noise_table, ood_report, ood_tables,
    prefix_table, rank_model, split_dataset, train_kind, tuning_table, AblationInputs,
};
use qcascade::pipeline::{read_json, write_json, ExperimentConfig, RankFile};
use qcascade::sampling::{DatasetKind, LabeledDataset};
use qcascade::svm::{evaluate, SvmModel};
use qcascade::{Error, Result};

#[derive(Parser)]
#[command(name = "qcascade", version, about = "Three-qubit entanglement classification with cascaded SVM witnesses")]
struct Cli {
    /// Root seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Flat `key = value` experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a labelled dataset CSV and its metadata sidecar.
    Gen {
        #[arg(long)]
        kind: DatasetKind,
        #[arg(long)]
        n: Option<usize>,
        /// Dataset path; defaults to `<out>/<KIND>.csv`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Tune and train one binary model; writes the model JSON and metrics.
    Train {
        #[arg(long)]
        kind: DatasetKind,
        #[arg(long)]
        data: PathBuf,
    },
    /// Score a trained model on a whole dataset.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
    /// Four-class evaluation of the cascade.
    CascadeEval {
        #[command(flatten)]
        models: ModelArgs,
        /// CASCADE4 dataset; generated from the seed when omitted.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Out-of-distribution report over the named state families.
    Ood {
        #[command(flatten)]
        models: ModelArgs,
        /// Samples per family; defaults to the config value.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        families: Vec<OodFamily>,
        /// Apply independent local unitaries to each sample (not X-states).
        #[arg(long)]
        rotated: bool,
    },
    /// Cascade accuracy under single-qubit noise on every qubit.
    Noise {
        #[command(flatten)]
        models: ModelArgs,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        kinds: Vec<NoiseKind>,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        strengths: Option<Vec<f64>>,
    },
    /// Permutation importance and prefix retraining curve for one model.
    Rank {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
    /// Merge three rank files into the consensus ordering.
    Consensus {
        #[arg(long)]
        ghz: PathBuf,
        #[arg(long)]
        w: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
    /// Retrain all models on consensus prefixes.
    Ablation {
        #[arg(long)]
        consensus: PathBuf,
        #[command(flatten)]
        models: ModelArgs,
        #[arg(long)]
        ghz_data: PathBuf,
        #[arg(long)]
        w_data: PathBuf,
        #[arg(long)]
        b_data: PathBuf,
        #[arg(long)]
        cascade_data: Option<PathBuf>,
        /// Prefix sizes; all of 1..=63 by default.
        #[arg(long, value_delimiter = ',')]
        ks: Vec<usize>,
    },
}

#[derive(clap::Args)]
struct ModelArgs {
    #[arg(long)]
    ghz_model: PathBuf,
    #[arg(long)]
    w_model: PathBuf,
    #[arg(long)]
    b_model: PathBuf,
}

impl ModelArgs {
    fn load(&self) -> Result<CascadeModel> {
        Ok(CascadeModel::new(
            load_model(&self.ghz_model, DatasetKind::Ghz)?,
            load_model(&self.w_model, DatasetKind::W)?,
            load_model(&self.b_model, DatasetKind::B)?,
        ))
    }
}

fn load_model(path: &Path, kind: DatasetKind) -> Result<SvmModel> {
    let m = SvmModel::load(path)?;
    if m.kind != kind.as_str() {
        return Err(Error::Schema(format!("{} holds a {} model, expected {kind}", path.display(), m.kind)));
    }
    Ok(m)
}

fn load_dataset(path: &Path, kind: Option<DatasetKind>) -> Result<LabeledDataset> {
    let ds = LabeledDataset::load(path)?;
    match kind {
        Some(k) if ds.kind != k => Err(Error::Schema(format!("{} is a {} dataset, expected {k}", path.display(), ds.kind))),
        _ => Ok(ds),
    }
}

fn cascade_set(data: &Option<PathBuf>, cfg: &ExperimentConfig) -> Result<LabeledDataset> {
    match data {
        Some(p) => load_dataset(p, Some(DatasetKind::Cascade4)),
        None => generate(DatasetKind::Cascade4, cfg.n_cascade, cfg),
    }
}

fn announce(path: &Path) {
    println!("wrote {}", path.display());
}

fn run(cmd: &Cmd, cfg: &ExperimentConfig) -> Result<()> {
    let out = |name: &str| cfg.out_dir.join(name);
    match cmd {
        Cmd::Gen { kind, n, output } => {
            let path = output.clone().unwrap_or_else(|| out(&format!("{kind}.csv")));
            ensure_parent(&path)?;
            let ds = generate(*kind, n.unwrap_or_else(|| cfg.n_for(*kind)), cfg)?;
            ds.save(&path)?;
            announce(&path);
        }
        Cmd::Train { kind, data } => {
            if *kind == DatasetKind::Cascade4 {
                return Err(Error::InvalidArgument("train takes a binary dataset kind".into()));
            }
            let split = split_dataset(&load_dataset(data, Some(*kind))?, cfg);
            let res = train_kind(&split, cfg)?;
            let model_path = out(&format!("model_{kind}.json"));
            ensure_parent(&model_path)?;
            res.model.save(&model_path)?;
            announce(&model_path);
            let p = out(&format!("metrics_{kind}.csv"));
            metrics_table(cfg, &[("val", &res.val), ("test", &res.test)]).write(&p)?;
            announce(&p);
            let p = out(&format!("tuning_{kind}.csv"));
            tuning_table(cfg, &res).write(&p)?;
            announce(&p);
            println!(
                "{kind}: C={} gamma={} val accuracy {:.4} test accuracy {:.4} AUC {:.4}",
                res.best_c, res.best_gamma, res.val.accuracy, res.test.accuracy, res.test.auc
            );
        }
        Cmd::Eval { model, data } => {
            let ds = load_dataset(data, None)?;
            let m = load_model(model, ds.kind)?;
            let metrics = evaluate(&m, &ds);
            let p = out(&format!("eval_{}.csv", ds.kind));
            metrics_table(cfg, &[("eval", &metrics)]).write(&p)?;
            announce(&p);
            println!("{}: accuracy {:.4} AUC {:.4}", ds.kind, metrics.accuracy, metrics.auc);
        }
        Cmd::CascadeEval { models, data } => {
            let cascade = models.load()?;
            let ds = cascade_set(data, cfg)?;
            let m = evaluate_cascade(&cascade, &ds)?;
            let bundle = out("cascade_bundle.json");
            ensure_parent(&bundle)?;
            cascade.save(&bundle)?;
            announce(&bundle);
            let (conf, summary) = cascade_tables(cfg, &m);
            for (t, name) in [(conf, "cascade_confusion.csv"), (summary, "cascade_summary.csv")] {
                t.write(&out(name))?;
                announce(&out(name));
            }
            println!("cascade accuracy {:.4} on {} states", m.accuracy, ds.len());
        }
        Cmd::Ood {
            models,
            n,
            families,
            rotated,
        } => {
            let c = models.load()?;
            let fams = if families.is_empty() { OodFamily::ALL.to_vec() } else { families.clone() };
            let fams: Vec<OodFamily> = fams.into_iter().filter(|f| !(*rotated && *f == OodFamily::XState)).collect();
            let list = [(DatasetKind::Ghz, &c.m_ghz), (DatasetKind::W, &c.m_w), (DatasetKind::B, &c.m_b)];
            let recs = ood_report(&list, &fams, n.unwrap_or(cfg.ood_samples), *rotated, cfg)?;
            let (rep, sum) = ood_tables(cfg, &recs);
            for (t, name) in [(rep, "ood_report.csv"), (sum, "ood_summary.csv")] {
                t.write(&out(name))?;
                announce(&out(name));
            }
        }
        Cmd::Noise {
            models,
            data,
            kinds,
            strengths,
        } => {
            let c = models.load()?;
            let ds = cascade_set(data, cfg)?;
            let kinds = if kinds.is_empty() { cfg.noise_kinds.clone() } else { kinds.clone() };
            let strengths = strengths.clone().unwrap_or_else(|| cfg.noise_strengths.clone());
            let pts = noise_sweep(&c, &ds, &kinds, &strengths)?;
            let p = out("noise_sweep.csv");
            noise_table(cfg, &pts).write(&p)?;
            announce(&p);
        }
        Cmd::Rank { model, data } => {
            let ds = load_dataset(data, None)?;
            let m = load_model(model, ds.kind)?;
            let split = split_dataset(&ds, cfg);
            let (ranking, curve) = rank_model(&m, &split, &all_ks(), cfg)?;
            let p = out(&format!("prefix_{}.csv", ds.kind));
            prefix_table(cfg, &ranking.order, &curve).write(&p)?;
            announce(&p);
            let p = out(&format!("rank_{}.json", ds.kind));
            write_json(&p, &RankFile::new(ds.kind, &ranking, curve))?;
            announce(&p);
        }
        Cmd::Consensus { ghz, w, b } => {
            let load = |p: &PathBuf, kind: DatasetKind| -> Result<_> {
                let f: RankFile = read_json(p)?;
                if f.kind != kind {
                    return Err(Error::Schema(format!("{} ranks a {} model, expected {kind}", p.display(), f.kind)));
                }
                f.model_curve()
            };
            let curves = [load(ghz, DatasetKind::Ghz)?, load(w, DatasetKind::W)?, load(b, DatasetKind::B)?];
            let c = consensus_ranking([&curves[0], &curves[1], &curves[2]])?;
            let p = out("consensus.json");
            write_json(&p, &c)?;
            announce(&p);
            let p = out("consensus.csv");
            consensus_table(cfg, &c).write(&p)?;
            announce(&p);
        }
        Cmd::Ablation {
            consensus,
            models,
            ghz_data,
            w_data,
            b_data,
            cascade_data,
            ks,
        } => {
            let cons = read_json(consensus)?;
            let c = models.load()?;
            let split = |p: &PathBuf, k| load_dataset(p, Some(k)).map(|d| split_dataset(&d, cfg));
            let (sg, sw, sb) = (split(ghz_data, DatasetKind::Ghz)?, split(w_data, DatasetKind::W)?, split(b_data, DatasetKind::B)?);
            let test = cascade_set(cascade_data, cfg)?;
            let inputs = AblationInputs {
                ghz: (&sg, &c.m_ghz),
                w: (&sw, &c.m_w),
                b: (&sb, &c.m_b),
                cascade_test: &test,
            };
            let ks = if ks.is_empty() { all_ks() } else { ks.clone() };
            let rows = ablation(&cons, &ks, &inputs, cfg)?;
            let p = out("ablation.csv");
            ablation_table(cfg, &rows).write(&p)?;
            announce(&p);
        }
    }
    Ok(())
}

/// Flags the user can fix by changing the command line.
fn usage_check(cmd: &Cmd) -> std::result::Result<(), String> {
    match cmd {
        Cmd::Noise { strengths: Some(s), .. } if s.is_empty() => Err("empty --strengths grid".into()),
        Cmd::Noise { strengths: Some(s), .. } if s.iter().any(|v| !(0.0..=1.0).contains(v)) => {
            Err("noise strengths must lie in [0, 1]".into())
        }
        Cmd::Gen { n: Some(n), .. } if *n == 0 => Err("--n must be positive".into()),
        Cmd::Ablation { ks, .. } if ks.iter().any(|&k| k == 0 || k > 63) => Err("--ks values must lie in 1..=63".into()),
        Cmd::Ood { rotated: true, families, .. } if families == &[OodFamily::XState] => {
            Err("X-states cannot be rotated".into())
        }
        _ => Ok(()),
    }
}

fn config_from(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out_dir = o.clone();
    }
    if let Some(t) = cli.threads {
        cfg.threads = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match config_from(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Err(msg) = usage_check(&cli.cmd) {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    if cfg.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli.cmd, &cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
