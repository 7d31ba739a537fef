use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use clap::parser::ValueSource;
use clap::{ArgMatches, CommandFactory, FromArgMatches};
use serde_json::Value;

use moelab::experiments::{
    cell_tuple, run_certificate, run_distribution_check, run_haagerup_gap, run_kesten_sweep,
    run_main_estimate, run_moe, run_product_bound, streams, Check, ExperimentRecord, Outcome,
    RecordMeta, SlackPolicy,
};
use moelab::fields;
use moelab::linalg::trace;
use moelab::spectral_opt::OptConfig;

use crate::cli::{Cli, Command, OptArgs, OutputArgs, SlackArgs};
use crate::config::{load_config, ConfigFile, Format, SizeList};
use crate::output::{print_checks, print_table, write_records};

pub const THREADS_ENV: &str = "MOELAB_THREADS";

/// A failure that maps to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl<E: std::fmt::Display> From<E> for UsageError {
    fn from(e: E) -> Self {
        UsageError(e.to_string())
    }
}

type RunResult = Result<bool, UsageError>;

struct Resolver<'a> {
    matches: &'a ArgMatches,
    file: ConfigFile,
}

impl Resolver<'_> {
    fn on_command_line(&self, id: &str) -> bool {
        self.matches.value_source(id) == Some(ValueSource::CommandLine)
    }

    /// Flag if given on the command line, else the config value, else the default.
    fn pick<T>(&self, id: &str, flag: T, file: Option<T>) -> T {
        if self.on_command_line(id) {
            flag
        } else {
            file.unwrap_or(flag)
        }
    }

    fn single_n(&self, flag: usize) -> Result<usize, UsageError> {
        match (&self.file.n, self.on_command_line("n")) {
            (Some(SizeList(list)), false) => match list.as_slice() {
                [n] => Ok(*n),
                _ => Err(UsageError(
                    "config `n` must hold a single size for this subcommand".into(),
                )),
            },
            _ => Ok(flag),
        }
    }

    fn seeds(&self, flag: Vec<u64>) -> Vec<u64> {
        self.pick("seeds", flag, self.file.seeds.clone().map(|s| s.0))
    }

    fn slack(&self, args: &SlackArgs) -> SlackPolicy {
        SlackPolicy {
            at_256: self.pick("slack_256", args.slack_256, self.file.tolerances.slack_256),
            at_512: self.pick("slack_512", args.slack_512, self.file.tolerances.slack_512),
        }
    }

    fn opt(&self, args: &OptArgs) -> OptConfig {
        OptConfig {
            starts: self.pick("starts", args.starts, self.file.starts),
            max_iters: self.pick("max_iters", args.max_iters, self.file.max_iters),
            ..OptConfig::default()
        }
    }
}

fn configure_threads(file: &ConfigFile) -> Result<(), UsageError> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => Some(
            v.trim()
                .parse::<usize>()
                .ok()
                .filter(|&t| t > 0)
                .ok_or_else(|| {
                    UsageError(format!(
                        "{THREADS_ENV} must be a positive integer, got `{v}`"
                    ))
                })?,
        ),
        Err(_) => file.threads,
    };
    if let Some(t) = threads {
        // Fails harmlessly when `all` has already built the pool.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global();
    }
    Ok(())
}

struct Emit<'a> {
    output: &'a OutputArgs,
    out: Option<PathBuf>,
    format: Format,
    config: BTreeMap<String, Value>,
}

impl Emit<'_> {
    fn finish(self, outcome: &dyn Outcome, started: chrono::DateTime<chrono::Utc>) -> RunResult {
        let (started_at, finished_at) = if self.output.no_timestamps {
            (None, None)
        } else {
            (Some(started), Some(chrono::Utc::now()))
        };
        let meta = RecordMeta {
            started_at,
            finished_at,
            extra_params: fields! { "config" => self.config },
        };
        let records = outcome.records(&meta);
        let checks = outcome.checks();
        let mut stdout = std::io::stdout().lock();
        print_table(&mut stdout, outcome.name(), &records)?;
        print_checks(&mut stdout, &checks)?;
        writeln!(stdout)?;
        if let Some(path) = &self.out {
            write_records(outcome.name(), &records, path, self.format)?;
        }
        Ok(checks.iter().all(|c| c.passed))
    }
}

fn prepare<'a>(
    matches: &'a ArgMatches,
    output: &'a OutputArgs,
) -> Result<(Resolver<'a>, Emit<'a>), UsageError> {
    let file = match &output.config {
        Some(path) => {
            let (file, warnings) = load_config(path)?;
            for w in warnings {
                eprintln!("warning: {w}");
            }
            file
        }
        None => ConfigFile::default(),
    };
    configure_threads(&file)?;
    let resolver = Resolver { matches, file };
    let out = if resolver.on_command_line("out") {
        output.out.clone()
    } else {
        output.out.clone().or_else(|| resolver.file.out.clone())
    };
    let format = resolver.pick("format", output.format, resolver.file.format);
    let emit = Emit {
        output,
        out,
        format,
        config: BTreeMap::new(),
    };
    Ok((resolver, emit))
}

/// Echo of the effective configuration stored in every record.
fn echo(
    command: &str,
    emit: &Emit<'_>,
    mut values: BTreeMap<String, Value>,
) -> BTreeMap<String, Value> {
    values.insert("command".into(), Value::from(command));
    values.insert(
        "format".into(),
        serde_json::to_value(emit.format).unwrap_or(Value::Null),
    );
    values
}

/// Summary of one sampled tuple.
struct SampleSummary {
    k: usize,
    n: usize,
    seed: u64,
    defects: Vec<f64>,
    traces: Vec<(f64, f64)>,
}

const SAMPLE_DEFECT_LIMIT: f64 = 1e-10;

impl Outcome for SampleSummary {
    fn name(&self) -> &'static str {
        "sample"
    }

    fn records(&self, meta: &RecordMeta) -> Vec<ExperimentRecord> {
        (0..self.k)
            .map(|i| {
                ExperimentRecord::new(
                    self.name(),
                    fields! { "k" => self.k, "n" => self.n, "seed" => self.seed, "index" => i },
                    fields! {
                        "stream" => streams::TUPLE + i as u64,
                        "unitarity_defect" => self.defects[i],
                        "normalized_trace_re" => self.traces[i].0,
                        "normalized_trace_im" => self.traces[i].1,
                    },
                    meta,
                )
            })
            .collect()
    }

    fn checks(&self) -> Vec<Check> {
        let worst = self.defects.iter().copied().fold(0.0, f64::max);
        vec![Check {
            name: "unitarity".into(),
            passed: worst <= SAMPLE_DEFECT_LIMIT,
            detail: format!("max |U*U - I| = {worst:.3e}"),
        }]
    }
}

/// Runs one parsed subcommand; `Ok(false)` means an assertion failed.
pub fn execute(command: Command, matches: &ArgMatches) -> RunResult {
    let started = chrono::Utc::now();
    match command {
        Command::Sample(a) => {
            let (r, mut emit) = prepare(matches, &a.output)?;
            let k = r.pick("k", a.k, r.file.k);
            let n = r.single_n(a.n)?;
            let seed = r.pick(
                "seed",
                a.seed,
                r.file.seeds.as_ref().and_then(|s| s.0.first().copied()),
            );
            emit.config = echo(
                "sample",
                &emit,
                fields! { "k" => k, "n" => n, "seed" => seed },
            );
            let tuple = cell_tuple(n, k, seed)?;
            let summary = SampleSummary {
                k,
                n,
                seed,
                defects: tuple
                    .matrices()
                    .iter()
                    .map(moelab::linalg::unitarity_defect)
                    .collect(),
                traces: tuple
                    .matrices()
                    .iter()
                    .map(|u| {
                        let t = trace(u) / n as f64;
                        (t.re, t.im)
                    })
                    .collect(),
            };
            emit.finish(&summary, started)
        }
        Command::Kesten(a) => {
            let (r, mut emit) = prepare(matches, &a.output)?;
            let k = r.pick("k", a.k, r.file.k);
            let n = r.pick("n", a.n, r.file.n.clone());
            let seeds = r.seeds(a.seeds.0);
            emit.config = echo(
                "kesten",
                &emit,
                fields! { "k" => k, "n" => n, "seeds" => seeds },
            );
            let outcome = run_kesten_sweep(k, &n.0, &seeds)?;
            emit.finish(&outcome, started)
        }
        Command::DistCheck(a) => {
            let (r, mut emit) = prepare(matches, &a.output)?;
            let k = r.pick("k", a.k, r.file.k);
            let n = r.single_n(a.n)?;
            let words = r.pick("words", a.words, r.file.words.clone());
            let samples = r.pick("samples", a.samples, r.file.samples);
            let tolerance = r.pick("tolerance", a.tolerance, r.file.tolerances.distribution);
            let seed = r.pick(
                "seed",
                a.seed,
                r.file.seeds.as_ref().and_then(|s| s.0.first().copied()),
            );
            let slack = r.slack(&a.slack);
            emit.config = echo(
                "dist-check",
                &emit,
                fields! {
                    "k" => k, "n" => n, "words" => words, "samples" => samples,
                    "tolerance" => tolerance, "seed" => seed, "slack" => slack,
                },
            );
            let outcome =
                run_distribution_check(k, n, &words.reduced(k)?, samples, seed, tolerance, &slack)?;
            emit.finish(&outcome, started)
        }
        Command::Haagerup(a) => {
            let (r, mut emit) = prepare(matches, &a.output)?;
            let k = r.pick("k", a.k, r.file.k);
            let n = r.single_n(a.n)?;
            let matrices = r.pick("matrices", a.matrices, r.file.matrices);
            let moment_order = r.pick("moment_order", a.moment_order, r.file.moment_order);
            let seeds = r.seeds(a.seeds.0);
            let slack = r.slack(&a.slack);
            emit.config = echo(
                "haagerup",
                &emit,
                fields! {
                    "k" => k, "n" => n, "matrices" => matrices, "moment_order" => moment_order,
                    "seeds" => seeds, "slack" => slack,
                },
            );
            let outcome = run_haagerup_gap(k, n, matrices, &seeds, moment_order, &slack)?;
            emit.finish(&outcome, started)
        }
        Command::MainEstimate(a) => {
            let (r, mut emit) = prepare(matches, &a.output)?;
            let k = r.pick("k", a.k, r.file.k);
            let n = r.single_n(a.n)?;
            let seeds = r.seeds(a.seeds.0);
            let cfg = r.opt(&a.opt);
            let slack = r.slack(&a.slack);
            emit.config = echo(
                "main-estimate",
                &emit,
                fields! {
                    "k" => k, "n" => n, "seeds" => seeds, "starts" => cfg.starts,
                    "max_iters" => cfg.max_iters, "slack" => slack,
                },
            );
            let outcome = run_main_estimate(k, n, &cfg, &seeds, &slack)?;
            emit.finish(&outcome, started)
        }
        Command::Moe(a) => {
            let (r, mut emit) = prepare(matches, &a.output)?;
            let k = r.pick("k", a.k, r.file.k);
            let n = r.single_n(a.n)?;
            let seeds = r.seeds(a.seeds.0);
            let cfg = r.opt(&a.opt);
            let slack = r.slack(&a.slack);
            emit.config = echo(
                "moe",
                &emit,
                fields! {
                    "k" => k, "n" => n, "seeds" => seeds, "starts" => cfg.starts,
                    "max_iters" => cfg.max_iters, "slack" => slack,
                },
            );
            let outcome = run_moe(k, n, &cfg, &seeds, &slack)?;
            emit.finish(&outcome, started)
        }
        Command::ProductBound(a) => {
            let (r, mut emit) = prepare(matches, &a.output)?;
            let k = r.pick("k", a.k, r.file.k);
            let n = r.single_n(a.n)?;
            let seeds = r.seeds(a.seeds.0);
            emit.config = echo(
                "product-bound",
                &emit,
                fields! { "k" => k, "n" => n, "seeds" => seeds },
            );
            let outcome = run_product_bound(k, n, &seeds)?;
            emit.finish(&outcome, started)
        }
        Command::Certificate(a) => {
            let (r, mut emit) = prepare(matches, &a.output)?;
            let k = r.pick("k", a.k, r.file.k);
            let n = r.single_n(a.n)?;
            let seeds = match a.seed {
                Some(s) => vec![s],
                None => r.seeds(a.seeds.0),
            };
            let cfg = r.opt(&a.opt);
            emit.config = echo(
                "certificate",
                &emit,
                fields! {
                    "k" => k, "n" => n, "seeds" => seeds, "starts" => cfg.starts,
                    "max_iters" => cfg.max_iters,
                },
            );
            let outcome = run_certificate(k, n, &cfg, &seeds)?;
            emit.finish(&outcome, started)
        }
        Command::All(a) => run_all(matches, &a.output, &a.slack),
    }
}

const ALL_SUBCOMMANDS: &[&str] = &[
    "sample",
    "kesten",
    "dist-check",
    "haagerup",
    "main-estimate",
    "moe",
    "product-bound",
    "certificate",
];

const SLACK_SUBCOMMANDS: &[&str] = &["dist-check", "haagerup", "main-estimate", "moe"];

/// Re-dispatches every subcommand with the shared flags that were given.
fn run_all(matches: &ArgMatches, output: &OutputArgs, slack: &SlackArgs) -> RunResult {
    let given = |id: &str| matches.value_source(id) == Some(ValueSource::CommandLine);
    let mut shared: Vec<String> = Vec::new();
    if let Some(c) = &output.config {
        shared.extend(["--config".into(), c.display().to_string()]);
    }
    if let Some(o) = &output.out {
        shared.extend(["--out".into(), o.display().to_string()]);
    }
    if given("format") {
        let f = serde_json::to_value(output.format)?;
        shared.extend(["--format".into(), f.as_str().unwrap_or("json").to_owned()]);
    }
    if output.no_timestamps {
        shared.push("--no-timestamps".into());
    }
    let mut slack_flags: Vec<String> = Vec::new();
    if given("slack_256") {
        slack_flags.extend(["--slack-256".into(), slack.slack_256.to_string()]);
    }
    if given("slack_512") {
        slack_flags.extend(["--slack-512".into(), slack.slack_512.to_string()]);
    }

    let mut all_passed = true;
    for name in ALL_SUBCOMMANDS {
        let mut argv: Vec<String> = vec!["moelab".into(), (*name).into()];
        argv.extend(shared.iter().cloned());
        if SLACK_SUBCOMMANDS.contains(name) {
            argv.extend(slack_flags.iter().cloned());
        }
        let top = Cli::command().try_get_matches_from(&argv)?;
        let cli = Cli::from_arg_matches(&top)?;
        let (_, sub) = top.subcommand().expect("a subcommand was given");
        all_passed &= execute(cli.command, sub)?;
    }
    Ok(all_passed)
}
