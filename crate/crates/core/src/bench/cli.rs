//! `cascade-gp` command line.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use super::config::ExperimentConfig;
use super::experiments::{evaluate, iterations_report, learning_curve, trajectory_spearman, ResultTable};
use crate::ctrlsim;
use crate::datasets::{self, RawTrajectory};
use crate::error::{Error, Result};
use crate::learner::{self, InverseDynamicsModel, TrainingSet};

/// Environment variable naming the directory relative output paths go under.
pub const OUTPUT_ROOT_ENV: &str = "CASCADE_GP_OUTPUT_ROOT";
pub const TABLE_FORMAT: &str = "cascade-gp-table/1";
pub const RUN_FORMAT: &str = "cascade-gp-run/1";

#[derive(Debug, Parser)]
#[command(name = "cascade-gp", version, about = "Cascaded GP learning of manipulator inverse dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic trajectory dataset.
    Gen {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one model variant on the configured training region.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Variant name; the first configured one when absent.
        #[arg(long)]
        variant: Option<String>,
    },
    /// Score a trained model on a dataset.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Learning curves for every configured variant.
    Curve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Absolute Spearman correlation matrix of a dataset.
    Corr {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "corr.csv")]
        out: PathBuf,
    },
    /// Optimizer iteration counts per joint and variant.
    Iters {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Closed-loop tracking simulation.
    Sim {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Serialize)]
struct RunManifest {
    format: &'static str,
    tool_version: &'static str,
    command: String,
    seed: Option<u64>,
    config_hash: Option<String>,
    dataset_fingerprint: Option<String>,
    /// Which outward-cascade input dimension is in effect.
    outward_dimension: &'static str,
    outputs: Vec<String>,
}

impl RunManifest {
    fn new(command: &str) -> Self {
        Self {
            format: RUN_FORMAT,
            tool_version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            seed: None,
            config_hash: None,
            dataset_fingerprint: None,
            outward_dimension: "component_list",
            outputs: Vec::new(),
        }
    }

    fn with_config(mut self, cfg: &ExperimentConfig) -> Self {
        self.seed = Some(cfg.experiment.seed);
        self.config_hash = Some(cfg.hash());
        self
    }

    fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

/// Relative paths go under `$CASCADE_GP_OUTPUT_ROOT` when it is set.
pub fn output_path(p: &Path) -> PathBuf {
    match std::env::var_os(OUTPUT_ROOT_ENV) {
        Some(root) if p.is_relative() && !root.is_empty() => PathBuf::from(root).join(p),
        _ => p.to_path_buf(),
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn ensure_parent(file: &Path) -> Result<()> {
    match file.parent() {
        Some(p) if !p.as_os_str().is_empty() => ensure_dir(p),
        _ => Ok(()),
    }
}

/// Writes a comma-separated table preceded by a `# cascade-gp-table/1` line.
pub fn write_table(path: &Path, kind: &str, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    ensure_parent(path)?;
    let mut f = File::create(path)?;
    writeln!(f, "# {TABLE_FORMAT} {kind}")?;
    let mut w = csv::Writer::from_writer(f);
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn s(v: impl ToString) -> String {
    v.to_string()
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|x| x.to_string()).collect()
}

fn slug(name: &str) -> String {
    name.to_ascii_lowercase().replace('-', "_")
}

/// Loads either a saved trajectory or a SARCOS-style file, by its first line.
pub fn load_any(path: &Path) -> Result<RawTrajectory> {
    let mut first = String::new();
    BufReader::new(File::open(path)?).read_line(&mut first)?;
    if first.starts_with("# cascade-gp-trajectory") {
        datasets::load_trajectory(path)
    } else {
        datasets::load_sarcos(path)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let traj = cfg.load_dataset()?;
            let out = output_path(&out);
            ensure_parent(&out)?;
            datasets::save_trajectory(&traj, &out)?;
            let mut m = RunManifest::new("gen").with_config(&cfg);
            m.dataset_fingerprint = Some(traj.fingerprint());
            m.outputs.push(out.display().to_string());
            m.write(&out.with_extension("run.json"))?;
            println!("wrote {} rows to {}", traj.len(), out.display());
        }
        Command::Train { config, out, variant } => {
            let cfg = ExperimentConfig::load(&config)?;
            let variants = cfg.variants()?;
            let variant = match variant {
                Some(name) => {
                    let mut v: learner::ModelVariant = name.parse()?;
                    if v.derivative_mode.is_free() {
                        v.derivative_mode = crate::features::DerivativeMode::DerivativeFree(cfg.df_transform()?);
                    }
                    v
                }
                None => variants[0].clone(),
            };
            let data = cfg.prepare()?;
            let opts = cfg.train_options();
            let set = TrainingSet::from_trajectory(&data.train, learner::required_history(&variant, opts.df_mean))?;
            let model = learner::train(&variant, &set, data.chain.as_ref(), &opts)?;
            let out = output_path(&out);
            model.save(&out)?;
            let mut m = RunManifest::new("train").with_config(&cfg);
            m.dataset_fingerprint = model.dataset_fingerprint.clone();
            m.outputs.push(out.display().to_string());
            m.write(&out.join("run.json"))?;
            println!("trained {variant} on {} samples into {}", set.len(), out.display());
        }
        Command::Eval { model, data, out } => {
            let model = InverseDynamicsModel::load(&model)?;
            let test = load_any(&data)?;
            let scores = evaluate(&model, &test)?;
            let pred = model.predict_trajectory(&test)?;
            let out = output_path(&out);
            ensure_dir(&out)?;
            let rows: Vec<Vec<String>> = scores.iter().enumerate().map(|(j, e)| vec![s(j + 1), s(e)]).collect();
            write_table(&out.join("eval.csv"), "eval", &strings(&["joint", "nrmse"]), &rows)?;
            let n = test.dof();
            let mut header = vec![s("t")];
            header.extend((1..=n).map(|j| format!("pred_{j}")));
            header.extend((1..=n).map(|j| format!("tau_{j}")));
            let rows: Vec<Vec<String>> = (0..test.len())
                .map(|i| {
                    let mut r = vec![s(test.t[i])];
                    r.extend((0..n).map(|j| s(pred[(j, i)])));
                    r.extend((0..n).map(|j| s(test.tau[(i, j)])));
                    r
                })
                .collect();
            write_table(&out.join("predictions.csv"), "predictions", &header, &rows)?;
            let mut m = RunManifest::new("eval");
            m.seed = Some(model.seed);
            m.dataset_fingerprint = Some(test.fingerprint());
            m.outputs = vec![s("eval.csv"), s("predictions.csv")];
            m.write(&out.join("run.json"))?;
            for (j, e) in scores.iter().enumerate() {
                println!("joint {}: nRMSE {e:.5}", j + 1);
            }
        }
        Command::Curve { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let data = cfg.prepare()?;
            let durations = cfg.durations(&data.subsets);
            let opts = cfg.train_options();
            let out = output_path(&out);
            ensure_dir(&out)?;
            let mut m = RunManifest::new("curve").with_config(&cfg);
            m.dataset_fingerprint = Some(data.train.fingerprint());
            let mut all = ResultTable::default();
            for v in cfg.variants()? {
                log::info!("learning curve for {v}");
                let table = learning_curve(&v, &data.subsets, &durations, &data.test, data.chain.as_ref(), &opts)?;
                let header = strings(&[
                    "variant", "subset_id", "duration_s", "joint", "nrmse", "n_train", "fit_iterations", "fit_evaluations",
                    "wall_time_s",
                ]);
                let rows: Vec<Vec<String>> = table
                    .rows
                    .iter()
                    .map(|r| {
                        vec![
                            r.variant.clone(),
                            s(r.subset_id),
                            s(r.duration_s),
                            s(r.joint),
                            s(r.nrmse),
                            s(r.n_train),
                            s(r.fit_iterations),
                            s(r.fit_evaluations),
                            s(r.wall_time_s),
                        ]
                    })
                    .collect();
                let name = format!("curve_{}.csv", slug(&v.to_string()));
                write_table(&out.join(&name), "learning_curve", &header, &rows)?;
                m.outputs.push(name);
                all.rows.extend(table.rows);
            }
            let header = strings(&["variant", "duration_s", "joint", "mean", "std", "count", "mean_iterations"]);
            let rows: Vec<Vec<String>> = all
                .aggregate()
                .into_iter()
                .map(|a| vec![a.variant, s(a.duration_s), s(a.joint), s(a.mean), s(a.std), s(a.count), s(a.mean_iterations)])
                .collect();
            write_table(&out.join("aggregate.csv"), "learning_curve_aggregate", &header, &rows)?;
            let mut rows = Vec::new();
            for v in all.variants() {
                for j in all.joints() {
                    for &t in &cfg.experiment.summary_points {
                        let val = all.summary_at(t, &v, j).map_or_else(|| s("NA"), s);
                        rows.push(vec![v.clone(), s(j), s(t), val]);
                    }
                }
            }
            write_table(&out.join("summary.csv"), "summary", &strings(&["variant", "joint", "at_s", "mean_nrmse"]), &rows)?;
            m.outputs.extend([s("aggregate.csv"), s("summary.csv")]);
            m.write(&out.join("run.json"))?;
            println!("wrote {} curve points to {}", all.rows.len(), out.display());
        }
        Command::Corr { data, out } => {
            let traj = load_any(&data)?;
            let (names, rho) = trajectory_spearman(&traj)?;
            let out = output_path(&out);
            let mut header = vec![s("column")];
            header.extend(names.iter().cloned());
            let rows: Vec<Vec<String>> = names
                .iter()
                .enumerate()
                .map(|(i, n)| {
                    let mut r = vec![n.clone()];
                    r.extend((0..names.len()).map(|j| s(rho[(i, j)])));
                    r
                })
                .collect();
            write_table(&out, "spearman_abs", &header, &rows)?;
            let mut m = RunManifest::new("corr");
            m.dataset_fingerprint = Some(traj.fingerprint());
            m.outputs.push(out.display().to_string());
            m.write(&out.with_extension("run.json"))?;
            println!("wrote {0}x{0} matrix to {1}", names.len(), out.display());
        }
        Command::Iters { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let data = cfg.prepare()?;
            let rows = iterations_report(&cfg.variants()?, &data.train, data.chain.as_ref(), &cfg.iterations_config())?;
            let out = output_path(&out);
            ensure_dir(&out)?;
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.variant.clone(),
                        s(r.joint),
                        s(r.mean_iterations),
                        s(r.mean_evaluations),
                        s(r.restarts),
                        s(r.n_points),
                    ]
                })
                .collect();
            let header = strings(&["variant", "joint", "mean_iterations", "mean_evaluations", "restarts", "n_points"]);
            write_table(&out.join("iterations.csv"), "iterations", &header, &table)?;
            let mut m = RunManifest::new("iters").with_config(&cfg);
            m.dataset_fingerprint = Some(data.train.fingerprint());
            m.outputs.push(s("iterations.csv"));
            m.write(&out.join("run.json"))?;
            println!("wrote {} rows to {}", rows.len(), out.display());
        }
        Command::Sim { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let plant = cfg.plant()?;
            let n = plant.dof();
            let controller = cfg.controller(n)?;
            let reference = cfg.reference(n)?;
            let trace = ctrlsim::simulate(&plant, &controller, reference.as_ref(), &cfg.sim_settings())?;
            let out = output_path(&out);
            ensure_dir(&out)?;
            let mut header = vec![s("t")];
            for block in ["q_des", "qd_des", "qdd_des", "q", "qd", "tau"] {
                header.extend((1..=n).map(|j| format!("{block}_{j}")));
            }
            let rows: Vec<Vec<String>> = (0..trace.len())
                .map(|i| {
                    let mut r = vec![s(trace.t[i])];
                    for m in [&trace.q_desired, &trace.qd_desired, &trace.qdd_desired, &trace.q, &trace.qd, &trace.tau] {
                        r.extend((0..n).map(|j| s(m[(i, j)])));
                    }
                    r
                })
                .collect();
            write_table(&out.join("trace.csv"), "sim_trace", &header, &rows)?;
            let rms = trace.rms_error();
            let rows: Vec<Vec<String>> = rms.iter().enumerate().map(|(j, e)| vec![s(j + 1), s(e)]).collect();
            write_table(&out.join("tracking.csv"), "tracking_rms", &strings(&["joint", "rms_error"]), &rows)?;
            let mut m = RunManifest::new("sim").with_config(&cfg);
            if let ctrlsim::Feedforward::Learned(model) = &controller.feedforward {
                m.dataset_fingerprint = model.dataset_fingerprint.clone();
            }
            m.outputs = vec![s("trace.csv"), s("tracking.csv")];
            m.write(&out.join("run.json"))?;
            if trace.diverged {
                return Err(Error::InvalidArgument(format!(
                    "simulation diverged at t = {}",
                    trace.t.last().copied().unwrap_or(0.0)
                )));
            }
            for (j, e) in rms.iter().enumerate() {
                println!("joint {}: RMS tracking error {e:.3e} rad", j + 1);
            }
        }
    }
    Ok(())
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code: 0 on success, 1 on a runtime error, 2 on bad usage.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
