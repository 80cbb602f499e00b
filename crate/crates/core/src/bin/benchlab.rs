use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use benchlab::agents::{run_episodes, Agent};
use benchlab::audit::{drift_test, placebo_test, GuardedEvaluator, LabelBiasedEvaluator, SteppedDriftEvaluator};
use benchlab::channel::{sample_aggregate, Artifact, BenchmarkSpec};
use benchlab::discrim::{estimate_kappa, plan_samples, validate_misranking, ArtifactMetric, DiscreteMetric, Separation};
use benchlab::experiments::reproduce_counterexample;
use benchlab::guard::{canonicalize, EvaluationMode, ObservationPolicy};
use benchlab::io::{self, PilotRecord};
use benchlab::jpc::assemble_report;
use benchlab::prompt_space::{ClauseEditMetric, ClauseSequence, KnobMetric};
use benchlab::rng::{seeded, stream};
use benchlab::{Error, Result};

#[derive(Parser)]
#[command(name = "benchlab", version, about = "Benchmark-channel simulation lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the XOR counterexample quantities.
    ReproduceCounterexample {
        #[arg(long, default_value_t = 100_000)]
        episodes: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: Output,
    },
    /// Pilot a benchmark: per-artifact kernel estimates, optionally the raw scores.
    EstimateKernel {
        #[command(flatten)]
        spec: SpecArg,
        #[command(flatten)]
        artifacts: ArtifactArgs,
        /// Artifact ids (or labels) to pilot.
        #[arg(required = true)]
        ids: Vec<String>,
        #[arg(long, default_value_t = 1000)]
        n_reps: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write raw scores as a pilot CSV.
        #[arg(long)]
        pilot_out: Option<PathBuf>,
        #[command(flatten)]
        out: Output,
    },
    /// Estimate discriminability from a pilot file.
    Kappa {
        #[arg(long)]
        pilot: PathBuf,
        #[arg(long, value_parser = ["discrete", "clause-edit", "knob"], default_value = "discrete")]
        metric: String,
        /// clause-edit: JSON array of text artifacts; knob: JSON {"knobs": {id: [..]}, "scale": [..]}.
        #[arg(long)]
        artifacts: Option<PathBuf>,
        #[arg(long, default_value_t = 1.0)]
        r: f64,
        #[arg(long, default_value_t = 0.05)]
        q: f64,
        /// Write the pairwise SNR table as CSV.
        #[arg(long)]
        pairs_out: Option<PathBuf>,
        #[command(flatten)]
        out: Output,
    },
    /// Evaluation calls per artifact for a misranking probability of at most delta.
    Plan {
        #[arg(long)]
        kappa: f64,
        #[arg(long)]
        delta: f64,
    },
    /// Empirical misranking curve next to the exponential bound.
    ValidateMisrank {
        #[command(flatten)]
        spec: SpecArg,
        #[command(flatten)]
        artifacts: ArtifactArgs,
        /// The artifact assumed better.
        #[arg(long)]
        first: String,
        #[arg(long)]
        second: String,
        #[arg(long, value_delimiter = ',', default_value = "10,20,50,100,200")]
        n_grid: Vec<u64>,
        #[arg(long, default_value_t = 2000)]
        episodes: u64,
        /// Known mean gap; with --sigma skips the pilot.
        #[arg(long, requires = "sigma")]
        delta_mu: Option<f64>,
        #[arg(long, requires = "delta_mu")]
        sigma: Option<f64>,
        #[arg(long, default_value_t = 2000)]
        pilot_reps: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        csv_out: Option<PathBuf>,
        #[command(flatten)]
        out: Output,
    },
    /// Compare transcript laws of one agent under two benchmarks.
    JpcTest {
        #[arg(long)]
        spec_a: PathBuf,
        #[arg(long)]
        spec_b: PathBuf,
        /// "leak-distinguisher", "fixed:<label>,<label>,...", or a path to an agent JSON.
        #[arg(long, default_value = "leak-distinguisher")]
        agent: String,
        #[arg(long, default_value = "aggregate-only")]
        policy: String,
        #[arg(long, default_value_t = 2)]
        horizon: usize,
        #[arg(long, default_value_t = 100_000)]
        episodes: usize,
        #[arg(long, default_value_t = 0.01)]
        alpha: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write benchmark A transcripts as JSONL (one round per line, blank line between episodes).
        #[arg(long)]
        transcripts_out: Option<PathBuf>,
        #[command(flatten)]
        out: Output,
    },
    /// Placebo provenance test, plus a drift test with --slices.
    AuditAb {
        #[command(flatten)]
        spec: SpecArg,
        #[command(flatten)]
        artifacts: ArtifactArgs,
        #[arg(long)]
        artifact: String,
        #[arg(long, value_delimiter = ',', default_value = "ours,baseline")]
        labels: Vec<String>,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0.95)]
        confidence: f64,
        #[arg(long)]
        slices: Option<usize>,
        /// Simulate a label-biased evaluator that adds this to the second label's scores.
        #[arg(long)]
        inject_label_bias: Option<f64>,
        /// Simulate drift: add this to scores from the second half of the slices on.
        #[arg(long)]
        inject_drift: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: Output,
    },
}

#[derive(Args)]
struct SpecArg {
    /// Benchmark spec JSON, or a run config JSON (schema_version 1).
    #[arg(long)]
    spec: PathBuf,
}

impl SpecArg {
    fn load(&self) -> Result<BenchmarkSpec> {
        let text = std::fs::read_to_string(&self.spec)?;
        let value: serde_json::Value = serde_json::from_str(&text)?;
        if value.get("schema_version").is_some() {
            io::RunConfig::from_json(&text)?.resolve_spec()
        } else {
            BenchmarkSpec::from_json(&text)
        }
    }
}

#[derive(Args)]
struct ArtifactArgs {
    /// JSON array of artifacts; ids then refer to entries. Without it, ids are labels.
    #[arg(long)]
    artifacts: Option<PathBuf>,
}

impl ArtifactArgs {
    fn resolve(&self, ids: &[String]) -> Result<Vec<Artifact>> {
        let Some(path) = &self.artifacts else {
            return Ok(ids.iter().map(|id| Artifact::label(id.clone())).collect());
        };
        let all: Vec<Artifact> = io::read_json(path)?;
        ids.iter()
            .map(|id| {
                all.iter()
                    .find(|a| &a.id == id)
                    .cloned()
                    .ok_or_else(|| Error::Argument(format!("artifact {id:?} not in {}", path.display())))
            })
            .collect()
    }
}

#[derive(Args)]
struct Output {
    /// Write the JSON report here instead of stdout; metadata goes to <path>.meta.json.
    #[arg(long)]
    output: Option<PathBuf>,
}

impl Output {
    fn emit<T: Serialize>(&self, command: &str, seed: Option<u64>, report: &T) -> Result<()> {
        match &self.output {
            None => print!("{}", io::to_json_string(report)),
            Some(path) => {
                io::write_json(report, path)?;
                let created = std::time::SystemTime::now()
                    .duration_since(std::time::UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0);
                let meta = serde_json::json!({
                    "command": command,
                    "seed": seed,
                    "created_unix": created,
                    "tool_version": env!("CARGO_PKG_VERSION"),
                });
                io::write_json(&meta, meta_path(path))?;
            }
        }
        Ok(())
    }
}

fn meta_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn parse_policy(s: &str) -> Result<ObservationPolicy> {
    serde_json::from_value(serde_json::Value::String(s.into()))
        .map_err(|_| Error::Argument(format!("unknown policy {s:?}")))
}

fn parse_agent(s: &str) -> Result<Agent> {
    if s == "leak-distinguisher" {
        return Ok(Agent::xor_leak_distinguisher());
    }
    if let Some(list) = s.strip_prefix("fixed:") {
        return Ok(Agent::fixed(list.split(',').map(|l| Artifact::label(l.trim())).collect()));
    }
    io::read_json(s)
}

fn kappa_metric(kind: &str, artifacts: Option<&Path>) -> Result<Box<dyn ArtifactMetric>> {
    let need = || Error::Argument(format!("--metric {kind} needs --artifacts"));
    Ok(match kind {
        "discrete" => Box::new(DiscreteMetric),
        "clause-edit" => {
            let all: Vec<Artifact> = io::read_json(artifacts.ok_or_else(need)?)?;
            let sequences = all
                .iter()
                .map(|a| Ok((a.id.clone(), ClauseSequence::from(&canonicalize(a)?))))
                .collect::<Result<_>>()?;
            Box::new(ClauseEditMetric { sequences })
        }
        "knob" => {
            let m: KnobMetric = io::read_json(artifacts.ok_or_else(need)?)?;
            Box::new(m)
        }
        other => return Err(Error::Argument(format!("unknown metric {other:?}"))),
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::ReproduceCounterexample { episodes, seed, out } => {
            let report = reproduce_counterexample(episodes, seed)?;
            eprint!("{}", report.render());
            out.emit("reproduce-counterexample", Some(seed), &report)
        }
        Command::EstimateKernel { spec, artifacts, ids, n_reps, seed, pilot_out, out } => {
            if n_reps < 2 {
                return Err(Error::Argument(format!("n_reps must be at least 2, got {n_reps}")));
            }
            let spec = spec.load()?;
            let arts = artifacts.resolve(&ids)?;
            let mut records = Vec::new();
            for (i, w) in arts.iter().enumerate() {
                let key = w.key()?;
                let mut rng = stream(seed, i as u64);
                let mut buf = Vec::new();
                for rep in 0..n_reps {
                    let score = sample_aggregate(&spec, &key, &mut buf, &mut rng)?;
                    records.push(PilotRecord { artifact_id: w.id.clone(), rep, score });
                }
            }
            if let Some(path) = pilot_out {
                io::write_pilot_records(&records, File::create(path)?)?;
            }
            let mut kernels = io::kernels_from_records(&records)?;
            if spec.outcome_is_discrete() {
                for k in &mut kernels {
                    let scores: Vec<f64> =
                        records.iter().filter(|r| r.artifact_id == k.artifact_id).map(|r| r.score).collect();
                    *k = benchlab::channel::EmpiricalKernel::from_scores(k.artifact_id.clone(), &scores, true)?;
                }
            }
            out.emit("estimate-kernel", Some(seed), &kernels)
        }
        Command::Kappa { pilot, metric, artifacts, r, q, pairs_out, out } => {
            let kernels = io::load_pilot(&pilot)?;
            let m = kappa_metric(&metric, artifacts.as_deref())?;
            let est = estimate_kappa(&kernels, m.as_ref(), r, q)?;
            if let Some(path) = pairs_out {
                io::write_csv(&est.table.entries, File::create(path)?)?;
            }
            out.emit("kappa", None, &est)
        }
        Command::Plan { kappa, delta } => {
            let plan = plan_samples(kappa, delta)?;
            println!("{}", plan.n_required);
            Ok(())
        }
        Command::ValidateMisrank {
            spec, artifacts, first, second, n_grid, episodes, delta_mu, sigma, pilot_reps, seed, csv_out, out,
        } => {
            let spec = spec.load()?;
            let arts = artifacts.resolve(&[first, second])?;
            let separation = match (delta_mu, sigma) {
                (Some(delta_mu), Some(sigma)) => Separation::Known { delta_mu, sigma },
                _ => Separation::Pilot { n_reps: pilot_reps },
            };
            let curve =
                validate_misranking(&spec, &arts[0], &arts[1], &n_grid, episodes, separation, &mut seeded(seed))?;
            if let Some(path) = csv_out {
                io::write_csv(&curve.points, File::create(path)?)?;
            }
            out.emit("validate-misrank", Some(seed), &curve)
        }
        Command::JpcTest {
            spec_a, spec_b, agent, policy, horizon, episodes, alpha, seed, transcripts_out, out,
        } => {
            let a = io::load_spec(spec_a)?;
            let b = io::load_spec(spec_b)?;
            let agent = parse_agent(&agent)?;
            let policy = parse_policy(&policy)?;
            if episodes < 100 {
                return Err(Error::Argument(format!("need at least 100 episodes per benchmark, got {episodes}")));
            }
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Error::Argument(format!("alpha must lie in (0, 1), got {alpha}")));
            }
            let mode = EvaluationMode::fresh();
            let mut rng = seeded(seed);
            use rand::RngCore;
            let (sa, sb) = (rng.next_u64(), rng.next_u64());
            let eps_a = run_episodes(&agent, &a, policy, &mode, horizon, episodes, sa)?;
            let eps_b = run_episodes(&agent, &b, policy, &mode, horizon, episodes, sb)?;
            if let Some(path) = transcripts_out {
                let mut f = std::io::BufWriter::new(File::create(path)?);
                for t in &eps_a {
                    f.write_all(t.to_jsonl().as_bytes())?;
                    f.write_all(b"\n")?;
                }
                f.flush()?;
            }
            let report = assemble_report(&agent, policy, horizon, alpha, &eps_a, &eps_b);
            eprint!("{}", report.render());
            out.emit("jpc-test", Some(seed), &report)
        }
        Command::AuditAb {
            spec, artifacts, artifact, labels, n, confidence, slices, inject_label_bias, inject_drift, seed, out,
        } => {
            let [la, lb] = labels.as_slice() else {
                return Err(Error::Argument("--labels takes exactly two labels".into()));
            };
            let spec = spec.load()?;
            let w = artifacts.resolve(&[artifact])?.remove(0);
            let base = GuardedEvaluator { spec };
            let eval = LabelBiasedEvaluator {
                inner: SteppedDriftEvaluator {
                    inner: base,
                    from_slice: slices.map_or(usize::MAX, |k| k / 2),
                    shift: inject_drift.unwrap_or(0.0),
                },
                biased_label: lb.clone(),
                shift: inject_label_bias.unwrap_or(0.0),
            };
            let mut rng = seeded(seed);
            let placebo = placebo_test(&eval, &w, (la, lb), n, confidence, &mut rng)?;
            let drift = slices.map(|k| drift_test(&eval, &w, k, n, confidence, &mut rng)).transpose()?;
            out.emit("audit-ab", Some(seed), &serde_json::json!({ "placebo": placebo, "drift": drift }))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let body = serde_json::json!({ "error": e.category(), "message": e.to_string() });
            eprintln!("{body}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
