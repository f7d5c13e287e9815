mod manifest;
mod reproduce;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ftrisk::inference::{draws_csv, histogram, summarize_samples, SummaryReport};
use ftrisk::likelihood::parse_observations_csv;
use ftrisk::simulation::Sampler;
use ftrisk::{
    build_priors, parse_sessions, posterior_importance, posterior_mh, push_forward, run_study, sample_prior, FaultTree,
    MaskPolicy, MhSettings, PriorSpec, SampleSet, StudyConfig,
};

use manifest::{read_input, Outputs, RunManifest};

pub const HISTOGRAM_BINS: usize = 200;

#[derive(Parser)]
#[command(name = "ftrisk", version, about = "Bayesian fault-tree risk assessment")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a tree file.
    Validate { tree: PathBuf },
    /// Fit beta priors from a pairwise-comparison file.
    Elicit {
        tree: PathBuf,
        comparisons: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample the prior and push it through the tree.
    Prior {
        tree: PathBuf,
        priors: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        extra: ExtraOutputs,
    },
    /// Update the prior with an observation file.
    Update {
        tree: PathBuf,
        priors: PathBuf,
        data: PathBuf,
        #[command(flatten)]
        sampler: SamplerArgs,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        extra: ExtraOutputs,
    },
    /// Run a repeated-update study on simulated data.
    Simulate {
        tree: PathBuf,
        priors: PathBuf,
        /// JSON map of primary event id to true probability.
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        m: usize,
        /// complete, top-only, top-and-intermediate or random:<q>; repeatable.
        #[arg(long = "mask", required = true)]
        masks: Vec<String>,
        #[arg(long, default_value_t = 20)]
        reps: usize,
        #[command(flatten)]
        sampler: SamplerArgs,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also write the report as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Write every replicate's masked datasets into this directory.
        #[arg(long)]
        dump_data: Option<PathBuf>,
    },
    /// Re-run a published analysis and compare with the recorded values.
    Reproduce {
        name: reproduce::Name,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        outdir: PathBuf,
        /// Replicates for the simulation studies.
        #[arg(long, default_value_t = 20)]
        reps: usize,
        /// Metropolis iterations per posterior.
        #[arg(long, default_value_t = ftrisk::inference::DEFAULT_ITERATIONS)]
        iters: usize,
    },
}

#[derive(Args)]
struct ExtraOutputs {
    /// Write the draws (primaries and derived events) as CSV.
    #[arg(long)]
    draws: Option<PathBuf>,
    /// Write 200-bin histograms over [0, 1] as CSV.
    #[arg(long)]
    histogram: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Is,
    Mh,
}

#[derive(Args)]
struct SamplerArgs {
    #[arg(long, value_enum, default_value = "mh")]
    method: Method,
    /// Prior draws for importance sampling.
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = ftrisk::inference::DEFAULT_ITERATIONS)]
    iters: usize,
    #[arg(long, default_value_t = ftrisk::inference::DEFAULT_STEP_VARIANCE)]
    step: f64,
    #[arg(long)]
    burnin: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
}

impl SamplerArgs {
    fn sampler(&self) -> Sampler {
        match self.method {
            Method::Is => Sampler::Importance { draws: self.samples },
            Method::Mh => Sampler::Metropolis(MhSettings {
                iterations: self.iters,
                step_variance: self.step,
                burnin: self.burnin,
                thin: self.thin,
                jacobian: true,
            }),
        }
    }

    fn record(&self, manifest: &mut RunManifest) {
        match self.sampler() {
            Sampler::Importance { draws } => {
                manifest.param("method", "is").param("samples", draws);
            }
            Sampler::Metropolis(s) => {
                manifest
                    .param("method", "mh")
                    .param("iters", s.iterations)
                    .param("step", s.step_variance)
                    .param("burnin", s.resolved_burnin())
                    .param("thin", s.resolved_thin());
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn load_tree(manifest: &mut RunManifest, path: &Path) -> Result<FaultTree> {
    let text = read_input(manifest, path)?;
    FaultTree::from_json(&text).with_context(|| format!("invalid tree {}", path.display()))
}

fn load_priors(manifest: &mut RunManifest, tree: &FaultTree, path: &Path) -> Result<PriorSpec> {
    let text = read_input(manifest, path)?;
    PriorSpec::from_json(tree, &text).with_context(|| format!("invalid priors {}", path.display()))
}

fn non_primary(tree: &FaultTree) -> Vec<&str> {
    (tree.primary_count()..tree.len())
        .map(|i| tree.id(i).as_str())
        .collect()
}

/// Primary draws followed by the derived event probabilities.
pub fn sample_columns(tree: &FaultTree, samples: &SampleSet) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut ids: Vec<String> = samples.ids().iter().map(|e| e.to_string()).collect();
    let mut columns: Vec<Vec<f64>> = (0..samples.dimension()).map(|j| samples.column(j)).collect();
    for (id, values) in push_forward(tree, samples, &non_primary(tree))? {
        ids.push(id.to_string());
        columns.push(values);
    }
    Ok((ids, columns))
}

pub fn histogram_csv(ids: &[String], columns: &[Vec<f64>]) -> String {
    let counts: Vec<Vec<u64>> = columns.iter().map(|c| histogram(c, HISTOGRAM_BINS)).collect();
    let mut out = format!("bin_lower,bin_upper,{}\n", ids.join(","));
    for b in 0..HISTOGRAM_BINS {
        let lower = b as f64 / HISTOGRAM_BINS as f64;
        let upper = (b + 1) as f64 / HISTOGRAM_BINS as f64;
        let row: Vec<String> = counts.iter().map(|c| c[b].to_string()).collect();
        out.push_str(&format!("{lower},{upper},{}\n", row.join(",")));
    }
    out
}

fn write_sample_outputs(
    tree: &FaultTree,
    samples: &SampleSet,
    report: &SummaryReport,
    out: &Path,
    extra: &ExtraOutputs,
    manifest: RunManifest,
) -> Result<()> {
    let mut outputs = Outputs::new(out);
    outputs.add_json(out, report);
    if extra.draws.is_some() || extra.histogram.is_some() {
        let (ids, columns) = sample_columns(tree, samples)?;
        if let Some(path) = &extra.draws {
            outputs.add(path, draws_csv(&ids, &columns));
        }
        if let Some(path) = &extra.histogram {
            outputs.add(path, histogram_csv(&ids, &columns));
        }
    }
    outputs.write(manifest)
}

fn print_summary(report: &SummaryReport) {
    for q in &report.quantities {
        println!(
            "{:<6} mean {:.5}  sd {:.5}  95% ({:.5}, {:.5})  mcse {:.2e}",
            q.event, q.summary.mean, q.summary.sd, q.summary.q025, q.summary.q975, q.mcse
        );
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Validate { tree } => {
            let text = fs::read_to_string(&tree).with_context(|| format!("reading {}", tree.display()))?;
            let tree = FaultTree::from_json(&text).with_context(|| format!("invalid tree {}", tree.display()))?;
            println!(
                "k={} n={} {}",
                tree.primary_count(),
                tree.len(),
                tree.classify_structure().as_str()
            );
            Ok(())
        }
        Command::Elicit { tree, comparisons, out } => {
            let mut manifest = RunManifest::new("elicit", None);
            let tree = load_tree(&mut manifest, &tree)?;
            let text = read_input(&mut manifest, &comparisons)?;
            let sessions =
                parse_sessions(&text).with_context(|| format!("invalid comparisons {}", comparisons.display()))?;
            let elicitation = build_priors(&tree, &sessions)?;
            for w in &elicitation.warnings {
                eprintln!("warning: {w}");
            }
            for p in &elicitation.priors {
                println!(
                    "{:<6} weight {:.4}  interval ({:.5}, {:.5})  beta({:.4}, {:.4})  mean {:.5}",
                    p.event,
                    p.weight,
                    p.interval.lower,
                    p.interval.upper,
                    p.beta.a,
                    p.beta.b,
                    p.beta.mean()
                );
            }
            let mut outputs = Outputs::new(&out);
            outputs.add_json(&out, &elicitation.entries());
            outputs.write(manifest)
        }
        Command::Prior {
            tree,
            priors,
            samples,
            seed,
            out,
            extra,
        } => {
            let mut manifest = RunManifest::new("prior", Some(seed));
            manifest.param("samples", samples);
            let tree = load_tree(&mut manifest, &tree)?;
            let spec = load_priors(&mut manifest, &tree, &priors)?;
            let draws = sample_prior(&spec, samples, seed)?;
            let report = summarize_samples(&tree, &draws, &non_primary(&tree))?;
            print_summary(&report);
            write_sample_outputs(&tree, &draws, &report, &out, &extra, manifest)
        }
        Command::Update {
            tree,
            priors,
            data,
            sampler,
            seed,
            out,
            extra,
        } => {
            let mut manifest = RunManifest::new("update", Some(seed));
            sampler.record(&mut manifest);
            let tree = load_tree(&mut manifest, &tree)?;
            let spec = load_priors(&mut manifest, &tree, &priors)?;
            let text = read_input(&mut manifest, &data)?;
            let observations = parse_observations_csv(&tree, &text)
                .with_context(|| format!("invalid observations {}", data.display()))?;
            let samples = match sampler.sampler() {
                Sampler::Importance { draws } => posterior_importance(&spec, &tree, &observations, draws, seed)?,
                Sampler::Metropolis(s) => posterior_mh(&spec, &tree, &observations, &s, seed)?,
            };
            for w in &samples.diagnostics.warnings {
                eprintln!("warning: {w}");
            }
            let report = summarize_samples(&tree, &samples, &non_primary(&tree))?;
            print_summary(&report);
            write_sample_outputs(&tree, &samples, &report, &out, &extra, manifest)
        }
        Command::Simulate {
            tree,
            priors,
            truth,
            m,
            masks,
            reps,
            sampler,
            seed,
            out,
            csv,
            dump_data,
        } => {
            let mut manifest = RunManifest::new("simulate", Some(seed));
            sampler.record(&mut manifest);
            manifest.param("m", m).param("mask", &masks).param("reps", reps);
            let tree = load_tree(&mut manifest, &tree)?;
            let spec = load_priors(&mut manifest, &tree, &priors)?;
            let truth_text = read_input(&mut manifest, &truth)?;
            let truth = parse_truth(&tree, &truth_text)?;
            let policies = masks
                .iter()
                .map(|m| MaskPolicy::parse(m))
                .collect::<ftrisk::Result<Vec<_>>>()?;
            let config = StudyConfig {
                tree,
                truth,
                prior: spec,
                m,
                policies,
                replicates: reps,
                sampler: sampler.sampler(),
                seed,
            };
            let report = run_study(&config)?;
            for p in &report.policies {
                for f in &p.failures {
                    eprintln!(
                        "warning: {} replicate {} failed: {}",
                        p.policy.name(),
                        f.replicate,
                        f.error
                    );
                }
                let top = config.tree.id(config.tree.top()).as_str();
                if let Some(q) = p.get(top) {
                    println!(
                        "{:<22} {top} mean {:.4}  sd {:.4}  rmse {:.4}  ({} of {} replicates)",
                        p.policy.name(),
                        q.mean,
                        q.sd,
                        q.rmse,
                        p.succeeded,
                        reps
                    );
                }
            }
            let mut outputs = Outputs::new(&out);
            outputs.add_json(&out, &report);
            if let Some(path) = &csv {
                outputs.add(path, report.to_csv());
            }
            if let Some(dir) = &dump_data {
                for r in 0..reps {
                    for (policy, data) in config.policies.iter().zip(config.replicate_datasets(r)?) {
                        let path = dir.join(format!("replicate{r:03}_{}.csv", policy.name().replace(':', "_")));
                        outputs.add(&path, ftrisk::likelihood::observations_csv(&config.tree, &data));
                    }
                }
            }
            outputs.write(manifest)
        }
        Command::Reproduce {
            name,
            seed,
            outdir,
            reps,
            iters,
        } => reproduce::run(name, seed, &outdir, reps, iters),
    }
}

fn parse_truth(tree: &FaultTree, text: &str) -> Result<Vec<f64>> {
    let map: BTreeMap<String, f64> =
        serde_json::from_str(text).context("truth file must map event ids to probabilities")?;
    for id in map.keys() {
        let i = tree.require_index(id)?;
        if !tree.is_primary(i) {
            bail!("truth given for non-primary event {id}");
        }
    }
    tree.primary_ids()
        .map(|id| {
            map.get(id.as_str())
                .copied()
                .with_context(|| format!("truth file has no value for {id}"))
        })
        .collect()
}
