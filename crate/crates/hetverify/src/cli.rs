//! Subcommands `gen-data`, `pretrain`, `finetune`, `crossval` and `eval`.
//!
//! Each command reads an experiment config, optionally loads datasets or
//! checkpoints written by an earlier command (otherwise the datasets are
//! generated from the config), and writes its outputs into the output
//! directory, which must already exist. Files are written atomically.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use hetverify_core::data::PairDataset;
use hetverify_core::eval::{cross_validate, evaluate};
use hetverify_core::model::{EmbeddingModel, SiblingPair};
use hetverify_core::synth::{gen_pair_dataset, gen_source_dataset};
use hetverify_core::trainer::{finetune, init_head, pretrain};

use crate::config::{ExperimentConfig, LossName};
use crate::error::{Error, Result};
use crate::{checkpoint, dataset, fsio, report};

#[derive(Debug, Parser)]
#[command(name = "hetverify", version, about = "Heterogeneous ID-vs-selfie verification experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic datasets: source.hvd, pairs.hvd and, when
    /// data.shifted_selfie_shift is set, shifted.hvd.
    GenData(Common),
    /// Train the base model with AM-Softmax; writes base.ckpt and
    /// pretrain_loss.csv.
    Pretrain(PretrainArgs),
    /// Fine-tune sibling networks from a base model; writes id.ckpt,
    /// selfie.ckpt and finetune_loss.csv.
    Finetune(FinetuneArgs),
    /// k-fold cross-validation of fine-tuning; writes crossval_report.txt
    /// and crossval_roc.csv.
    Crossval(FinetuneArgs),
    /// Score a pair dataset with fixed checkpoints; writes eval_report.txt
    /// and eval_roc.csv.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Experiment config (TOML).
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Output directory; overrides output_dir from the config. Must exist.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PretrainArgs {
    #[command(flatten)]
    pub common: Common,
    /// Labeled source dataset; generated from the config when omitted.
    #[arg(long, value_name = "PATH")]
    pub data: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FinetuneArgs {
    #[command(flatten)]
    pub common: Common,
    /// Base checkpoint; defaults to finetune.base_checkpoint from the config.
    #[arg(long, value_name = "PATH")]
    pub base: Option<PathBuf>,
    /// Pair dataset; generated from the config when omitted.
    #[arg(long, value_name = "PATH")]
    pub data: Option<PathBuf>,
    /// Fine-tuning loss; overrides finetune.loss.
    #[arg(long, value_enum)]
    pub loss: Option<LossName>,
    /// Train one network for both domains instead of two siblings.
    #[arg(long)]
    pub shared: bool,
    /// Train on a seeded random subset of this many subjects.
    #[arg(long, value_name = "N")]
    pub train_size: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: Common,
    /// Checkpoint applied to ID photos.
    #[arg(long, value_name = "PATH")]
    pub id: PathBuf,
    /// Checkpoint applied to selfies; defaults to --id.
    #[arg(long, value_name = "PATH")]
    pub selfie: Option<PathBuf>,
    /// Pair dataset; defaults to the shifted dataset when configured,
    /// otherwise the primary one, generated from the config.
    #[arg(long, value_name = "PATH")]
    pub data: Option<PathBuf>,
}

struct Ctx {
    config: ExperimentConfig,
    out: PathBuf,
}

impl Ctx {
    fn new(common: &Common) -> Result<Self> {
        let config = ExperimentConfig::load(&common.config)?;
        let out = common.out.clone().unwrap_or_else(|| config.output_dir.clone());
        if !out.is_dir() {
            return Err(Error::ConfigInvalid(format!(
                "output directory {} does not exist",
                out.display()
            )));
        }
        Ok(Self { config, out })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn pairs(&self, path: Option<&Path>) -> Result<PairDataset> {
        match path {
            Some(p) => dataset::load_pair(p),
            None => Ok(gen_pair_dataset(&self.config.synth()?)?),
        }
    }
}

/// Runs one command, returning the summary printed on success.
pub fn run(cli: Cli) -> Result<String> {
    match cli.command {
        Command::GenData(a) => gen_data(&a),
        Command::Pretrain(a) => cmd_pretrain(&a),
        Command::Finetune(a) => cmd_finetune(&a),
        Command::Crossval(a) => cmd_crossval(&a),
        Command::Eval(a) => cmd_eval(&a),
    }
}

fn gen_data(args: &Common) -> Result<String> {
    let ctx = Ctx::new(args)?;
    let (primary, shifted) = ctx.config.synth_pair()?;
    let source = gen_source_dataset(&primary)?;
    let pairs = gen_pair_dataset(&primary)?;
    let shifted = shifted.map(|s| gen_pair_dataset(&s)).transpose()?;
    dataset::save_labeled(&ctx.path("source.hvd"), &source)?;
    dataset::save_pair(&ctx.path("pairs.hvd"), &pairs)?;
    let mut summary = format!(
        "source: {} classes, {} samples\npairs: {} subjects, {} selfies\n",
        source.num_classes(),
        source.len(),
        pairs.len(),
        selfie_count(&pairs)
    );
    if let Some(s) = shifted {
        dataset::save_pair(&ctx.path("shifted.hvd"), &s)?;
        summary += &format!("shifted: {} subjects, {} selfies\n", s.len(), selfie_count(&s));
    }
    Ok(summary)
}

fn selfie_count(d: &PairDataset) -> usize {
    d.subjects().iter().map(|s| s.selfie_inputs.len()).sum()
}

fn cmd_pretrain(args: &PretrainArgs) -> Result<String> {
    let ctx = Ctx::new(&args.common)?;
    let cfg = &ctx.config;
    let source = match &args.data {
        Some(p) => dataset::load_labeled(p)?,
        None => gen_source_dataset(&cfg.synth()?)?,
    };
    let train = cfg.pretrain_config()?;
    let model_cfg = cfg.model_config();
    let head = init_head(model_cfg.embedding_dim, source.num_classes(), cfg.pretrain_margin(), cfg.seed)?;
    let (model, head, trace) = pretrain(EmbeddingModel::init(model_cfg)?, head, &source, &train)?;
    checkpoint::save(&ctx.path("base.ckpt"), &model)?;
    fsio::write_atomic(&ctx.path("pretrain_loss.csv"), report::trace_csv(&trace).as_bytes())?;
    Ok(format!(
        "pretrained {} steps, final loss {:.6}, scale {:.4}\n",
        train.total_steps,
        trace.entries.last().map_or(f64::NAN, |e| e.loss),
        head.scale()
    ))
}

fn base_model(ctx: &Ctx, args: &FinetuneArgs) -> Result<EmbeddingModel> {
    let path = args
        .base
        .as_ref()
        .or(ctx.config.finetune.base_checkpoint.as_ref())
        .ok_or_else(|| Error::ConfigInvalid("no base checkpoint: pass --base or set finetune.base_checkpoint".into()))?;
    checkpoint::load(path)
}

fn finetune_setup(args: &FinetuneArgs) -> Result<(Ctx, EmbeddingModel, PairDataset)> {
    let ctx = Ctx::new(&args.common)?;
    let base = base_model(&ctx, args)?;
    let data = ctx.pairs(args.data.as_deref())?;
    Ok((ctx, base, data))
}

fn cmd_finetune(args: &FinetuneArgs) -> Result<String> {
    let (ctx, base, data) = finetune_setup(args)?;
    let cfg = &ctx.config;
    let options = cfg.finetune_options(args.loss, args.shared.then_some(true))?;
    let data = match args.train_size.or(cfg.finetune.train_size) {
        Some(n) => data.random_subset(n, cfg.seed)?,
        None => data,
    };
    let (SiblingPair { id_model, selfie_model }, trace) = finetune(&base, &data, &options)?;
    checkpoint::save(&ctx.path("id.ckpt"), &id_model)?;
    checkpoint::save(&ctx.path("selfie.ckpt"), &selfie_model)?;
    fsio::write_atomic(&ctx.path("finetune_loss.csv"), report::trace_csv(&trace).as_bytes())?;
    Ok(format!(
        "fine-tuned on {} subjects for {} steps, final loss {:.6}\n",
        data.len(),
        options.train.total_steps,
        trace.entries.last().map_or(f64::NAN, |e| e.loss)
    ))
}

fn cmd_crossval(args: &FinetuneArgs) -> Result<String> {
    let (ctx, base, data) = finetune_setup(args)?;
    let cfg = &ctx.config;
    let options = cfg.finetune_options(args.loss, args.shared.then_some(true))?;
    let cv = cfg.crossval_config(args.train_size)?;
    let rep = cross_validate(&data, &base, &options, &cv)?;
    let table = report::table(&rep);
    fsio::write_atomic(&ctx.path("crossval_report.txt"), table.as_bytes())?;
    fsio::write_atomic(&ctx.path("crossval_roc.csv"), report::roc_csv(&rep).as_bytes())?;
    Ok(table)
}

fn cmd_eval(args: &EvalArgs) -> Result<String> {
    let ctx = Ctx::new(&args.common)?;
    let id_model = checkpoint::load(&args.id)?;
    let selfie_model = match &args.selfie {
        Some(p) => checkpoint::load(p)?,
        None => id_model.clone(),
    };
    let data = match &args.data {
        Some(p) => dataset::load_pair(p)?,
        None => {
            let (primary, shifted) = ctx.config.synth_pair()?;
            gen_pair_dataset(&shifted.unwrap_or(primary))?
        }
    };
    let e = &ctx.config.eval;
    let siblings = SiblingPair { id_model, selfie_model };
    let rep = evaluate(&data, &siblings, &e.far_targets, e.roc_points)?;
    let table = report::table(&rep);
    fsio::write_atomic(&ctx.path("eval_report.txt"), table.as_bytes())?;
    fsio::write_atomic(&ctx.path("eval_roc.csv"), report::roc_csv(&rep).as_bytes())?;
    Ok(table)
}
