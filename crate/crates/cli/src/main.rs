use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use marl_rrm::dqn::{run_training, DqnError, DqnPolicy};
use marl_rrm::harness::{
    build_validation_set, evaluate, evaluate_baseline, export_decision_log, interference_profile,
    pareto_front, write_decision_log, write_epoch_csv, write_evaluation_csv, EnvSet, Evaluation,
    MetricsSummary, RunConfig,
};
use marl_rrm::nn::{read_checkpoint, write_checkpoint};
use marl_rrm::normalize::{collect_offline_dataset, NormalizationStats};
use marl_rrm::scheduler::run_episode;
use marl_rrm::{BaselineKind, EnvConfig};

#[derive(Parser)]
#[command(name = "marl-rrm", version, about = "Multi-agent RL downlink scheduling simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the default run configuration as JSON.
    DefaultConfig {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run baselines offline and fit normalization statistics.
    CollectNormStats {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Persist a set of random environment realizations.
    EnvSet {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Build a validation set (realizations close to the baseline means).
        #[arg(long)]
        validation: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a shared double DQN policy.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Reuse previously fitted normalization statistics.
        #[arg(long)]
        norm_stats: Option<PathBuf>,
        /// Validate on this environment set instead of building one.
        #[arg(long)]
        validation: Option<PathBuf>,
    },
    /// Greedy evaluation of a checkpoint on an environment set.
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        env_set: PathBuf,
        /// Defaults to norm_stats.json in the training output directory.
        #[arg(long)]
        norm_stats: Option<PathBuf>,
        /// Refit normalization statistics on the environment set's config.
        #[arg(long)]
        refit_norm: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Per-environment metrics CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a reference scheduler on an environment set.
    Baseline {
        #[arg(long)]
        kind: BaselineKind,
        #[arg(long)]
        env_set: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-interval decision trace of the first environment.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Analyses that produce CSV data for plots.
    Analyze {
        #[command(subcommand)]
        what: Analysis,
    },
}

#[derive(Subcommand)]
enum Analysis {
    /// Mean SINR versus number of nearest interfering APs.
    Interferers {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        realizations: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-agent inputs and actions of a trained policy.
    Decisions {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        env_set: PathBuf,
        #[arg(long)]
        norm_stats: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pareto front of evaluation summaries.
    Pareto {
        /// Summary JSON files written by `evaluate` or `baseline`.
        #[arg(required = true)]
        summaries: Vec<PathBuf>,
    },
}

/// Aggregate result printed by `evaluate` and `baseline`, rates in Mbps.
#[derive(Debug, Serialize, Deserialize)]
struct Summary {
    name: String,
    num_envs: usize,
    mean: MetricsSummary,
    std: MetricsSummary,
}

impl Summary {
    fn new(name: String, eval: &Evaluation, bandwidth_hz: f64) -> Self {
        Self {
            name,
            num_envs: eval.per_env.len(),
            mean: eval.mean.mbps(bandwidth_hz),
            std: eval.std.mbps(bandwidth_hz),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct BestCheckpoint {
    best_epoch: usize,
    /// Relative to the run directory.
    checkpoint: PathBuf,
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p).with_context(|| format!("reading config {}", p.display())),
        None => Ok(RunConfig::default()),
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn fit_stats(cfg: &RunConfig, env: &EnvConfig, seed: u64) -> Result<NormalizationStats> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = &cfg.normalization;
    let data = collect_offline_dataset(env, &n.baselines, n.episodes, &mut rng)?;
    Ok(NormalizationStats::fit(&data, n.levels, env)?)
}

fn checkpoint_name(epoch: usize) -> String {
    format!("epoch_{epoch:04}.ckpt")
}

fn load_policy(checkpoint: &Path, norm_stats: Option<&Path>) -> Result<(DqnPolicy, NormalizationStats)> {
    let (net, _) = read_checkpoint(
        File::open(checkpoint).with_context(|| format!("opening {}", checkpoint.display()))?,
    )?;
    let stats_path = match norm_stats {
        Some(p) => p.to_path_buf(),
        None => checkpoint
            .parent()
            .and_then(Path::parent)
            .map(|d| d.join("norm_stats.json"))
            .context("cannot locate norm_stats.json; pass --norm-stats")?,
    };
    let stats = NormalizationStats::load(&stats_path)
        .with_context(|| format!("reading {}", stats_path.display()))?;
    Ok((DqnPolicy::new(net, stats.mapper.clone()), stats))
}

fn check_policy_fits(policy: &DqnPolicy, env: &EnvConfig) -> Result<()> {
    if policy.net.input_len() != env.observation_len() || policy.net.output_len() != env.num_actions() {
        bail!(
            "checkpoint expects {} inputs and {} actions, environment set has {} and {}",
            policy.net.input_len(),
            policy.net.output_len(),
            env.observation_len(),
            env.num_actions()
        );
    }
    Ok(())
}

fn train(cfg_path: Option<&Path>, seed: u64, out: &Path, norm: Option<&Path>, val: Option<&Path>) -> Result<()> {
    let cfg = load_config(cfg_path)?;
    fs::create_dir_all(out.join("checkpoints"))?;
    cfg.save(&out.join("config.json"))?;

    let stats = match norm {
        Some(p) => {
            let s = NormalizationStats::load(p)?;
            if !s.matches(&cfg.env) {
                eprintln!("warning: normalization statistics were fitted on a different configuration");
            }
            s
        }
        None => {
            eprintln!("collecting normalization statistics");
            fit_stats(&cfg, &cfg.env, seed)?
        }
    };
    stats.save(&out.join("norm_stats.json"))?;

    let validation = match val {
        Some(p) => EnvSet::load(p)?,
        None => {
            eprintln!("building validation set");
            let v = &cfg.validation;
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
            let set = build_validation_set(
                &cfg.env,
                v.target_count,
                v.population_size,
                v.tolerance,
                v.max_candidates,
                &mut rng,
            )?;
            set.save(&out.join("validation_set.json"))?;
            set.env_set()
        }
    };

    let ckpt_dir = out.join("checkpoints");
    let schedule = cfg.trainer.adam.schedule;
    let outcome = run_training(&cfg.env, &cfg.trainer, &stats, &validation, seed, |rec, policy| {
        eprintln!(
            "epoch {:>4}  sum {:>8.2} Mbps  pct5 {:>6.3} Mbps  score {:>7.3}  loss {:.4}",
            rec.epoch, rec.sum_rate_mbps, rec.pct5_mbps, rec.score, rec.mean_loss
        );
        let file = File::create(ckpt_dir.join(checkpoint_name(rec.epoch))).map_err(marl_rrm::nn::NnError::from)?;
        write_checkpoint(&policy.net, rec.train_steps, schedule, BufWriter::new(file))
            .map_err(DqnError::from)
    })?;
    write_epoch_csv(&outcome.epochs, File::create(out.join("epochs.csv"))?)?;
    let best = BestCheckpoint {
        best_epoch: outcome.best_epoch,
        checkpoint: PathBuf::from("checkpoints").join(checkpoint_name(outcome.best_epoch)),
    };
    fs::write(out.join("best.json"), serde_json::to_string_pretty(&best)?)?;
    print_json(&best)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::DefaultConfig { out } => {
            let cfg = RunConfig::default();
            match out {
                Some(p) => cfg.save(&p)?,
                None => print_json(&cfg)?,
            }
        }
        Command::CollectNormStats { config, seed, out } => {
            let cfg = load_config(config.as_deref())?;
            let stats = fit_stats(&cfg, &cfg.env, seed)?;
            stats.save(&out)?;
            print_json(&stats)?;
        }
        Command::EnvSet { config, count, seed, validation, out } => {
            let cfg = load_config(config.as_deref())?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            if validation {
                let v = &cfg.validation;
                let set = build_validation_set(
                    &cfg.env,
                    count.unwrap_or(v.target_count),
                    v.population_size,
                    v.tolerance,
                    v.max_candidates,
                    &mut rng,
                )?;
                set.save(&out)?;
            } else {
                EnvSet::random(cfg.env.clone(), count.unwrap_or(cfg.test_envs), &mut rng).save(&out)?;
            }
        }
        Command::Train { config, seed, out, norm_stats, validation } => {
            train(config.as_deref(), seed, &out, norm_stats.as_deref(), validation.as_deref())?;
        }
        Command::Evaluate { checkpoint, env_set, norm_stats, refit_norm, seed, out } => {
            let set = EnvSet::load(&env_set)?;
            let (mut policy, _) = load_policy(&checkpoint, norm_stats.as_deref())?;
            check_policy_fits(&policy, &set.env_config)?;
            if refit_norm {
                let cfg = RunConfig { env: set.env_config.clone(), ..RunConfig::default() };
                policy.mapper = fit_stats(&cfg, &set.env_config, seed)?.mapper;
            }
            let eval = evaluate(&set, |_| policy.clone())?;
            if let Some(p) = out {
                write_evaluation_csv(&set, &eval, File::create(p)?)?;
            }
            let name = checkpoint.display().to_string();
            print_json(&Summary::new(name, &eval, set.env_config.radio.bandwidth_hz))?;
        }
        Command::Baseline { kind, env_set, out, trace } => {
            let set = EnvSet::load(&env_set)?;
            let eval = evaluate_baseline(&set, kind)?;
            if let Some(p) = out {
                write_evaluation_csv(&set, &eval, File::create(p)?)?;
            }
            if let (Some(p), false) = (trace, set.is_empty()) {
                let mut env = set.instantiate(0)?;
                let mut rows = Vec::new();
                let mut scheduler = kind;
                run_episode(&mut env, &mut scheduler, Some(&mut rows))?;
                marl_rrm::env::write_trace_csv(&rows, File::create(p)?)?;
            }
            print_json(&Summary::new(kind.to_string(), &eval, set.env_config.radio.bandwidth_hz))?;
        }
        Command::Analyze { what } => match what {
            Analysis::Interferers { config, realizations, seed, out } => {
                let cfg = load_config(config.as_deref())?;
                let n: Vec<usize> = (0..cfg.env.deployment.num_aps).collect();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let pts = interference_profile(&cfg.env, &n, realizations, &mut rng)?;
                let mut w = csv_writer(&out)?;
                w.write_record(["interferers", "mean_sinr_db"])?;
                for p in &pts {
                    w.write_record([p.interferers.to_string(), p.mean_sinr_db.to_string()])?;
                }
                w.flush()?;
                print_json(&pts)?;
            }
            Analysis::Decisions { checkpoint, env_set, norm_stats, out } => {
                let set = EnvSet::load(&env_set)?;
                let (policy, _) = load_policy(&checkpoint, norm_stats.as_deref())?;
                check_policy_fits(&policy, &set.env_config)?;
                let rows = export_decision_log(&set, |_| policy.clone())?;
                write_decision_log(&rows, BufWriter::new(File::create(&out)?))?;
                eprintln!("{} rows written to {}", rows.len(), out.display());
            }
            Analysis::Pareto { summaries } => {
                let items: Vec<Summary> = summaries
                    .iter()
                    .map(|p| {
                        let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                        Ok(serde_json::from_str(&text)?)
                    })
                    .collect::<Result<_>>()?;
                let means: Vec<MetricsSummary> = items.iter().map(|s| s.mean).collect();
                let front = pareto_front(&means);
                println!("name,sum_rate_mbps,pct5_mbps,score,pareto");
                for (s, on) in items.iter().zip(front) {
                    println!("{},{},{},{},{}", s.name, s.mean.sum_rate, s.mean.pct5_rate, s.mean.score, on);
                }
            }
        },
    }
    Ok(())
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    Ok(csv::Writer::from_writer(File::create(path)?))
}

fn main() -> Result<()> {
    run(Cli::parse())
}
