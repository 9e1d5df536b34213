use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lumpkit::codec::{build_decoder, encode, FirstSample};
use lumpkit::enumerate::{
    admissible_pairs, greedy_sfs2, list_all_sfs2_with, randomized_sfs2, Objective,
};
use lumpkit::infotheory::{
    growth_rate_estimate, lumped_entropy_report, marginal_entropy, preimage_count, simulate,
    MIN_TRACE_LEN,
};
use lumpkit::io::{
    entropy_report_json, model_from_csv, model_from_json, model_to_csv, model_to_json,
    partition_from_json, read_sequences, record_json, report_jsonl, round12, summary_json,
    write_sequences,
};
use lumpkit::ngram::{
    experiment_report, preprocess, train_bigram, train_trigram_lifted, PreprocessPolicy, Strategy,
};
use lumpkit::sfs::{is_sfs_k, work_budget_from_env, WORK_BUDGET_ENV};
use lumpkit::{Error, Partition, Result, TransitionModel};
use serde_json::{json, Value};

// println! panics on a closed pipe; this surfaces it as an io error instead
macro_rules! out {
    ($($arg:tt)*) => {
        writeln!(std::io::stdout(), $($arg)*)?
    };
}

#[derive(Parser)]
#[command(
    name = "lumpkit",
    version,
    about = "Information-preserving lumpings of finite Markov chains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Machine-readable JSON output.
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads for the exhaustive search.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    threads: u64,
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ModelArg {
    /// Model file (`.csv` for i,j,p triplets, JSON otherwise).
    #[arg(long)]
    model: PathBuf,
}

#[derive(Args)]
struct PartitionArg {
    /// Partition JSON file, or text such as `{1,2,3}{4,5}`.
    #[arg(long)]
    partition: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    MarginalEntropy,
    EntropyRateGap,
}

impl From<ObjectiveArg> for Objective {
    fn from(o: ObjectiveArg) -> Self {
        match o {
            ObjectiveArg::MarginalEntropy => Objective::MarginalEntropy,
            ObjectiveArg::EntropyRateGap => Objective::EntropyRateGap,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Exhaustive,
    Greedy,
    Randomized,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Gatsby,
    Raw,
}

#[derive(Subcommand)]
enum Command {
    /// Degree and spectral lower bounds on the number of blocks.
    Bounds(ModelArg),
    /// Admissible state pairs.
    Pairs(ModelArg),
    /// Every SFS(2) lumping, grouped by number of blocks.
    Enumerate(ModelArg),
    /// Greedy descent through SFS(2) lumpings.
    Greedy {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long, value_enum, default_value = "marginal-entropy")]
        objective: ObjectiveArg,
    },
    /// Randomized descent sampling a fixed number of pairs per level.
    Random {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long, value_enum, default_value = "marginal-entropy")]
        objective: ObjectiveArg,
        #[arg(long, default_value_t = 10)]
        sample_size: usize,
    },
    /// SFS(k) verdict with a witness on failure.
    Check {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        partition: PartitionArg,
        #[arg(long, default_value_t = 2)]
        order: usize,
    },
    /// Entropy report of a lumping.
    Entropy {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        partition: PartitionArg,
    },
    /// Preimage counts along a simulated (or given) trajectory.
    PreimageTrace {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        partition: PartitionArg,
        /// Length of the simulated trajectory.
        #[arg(long, default_value_t = 1000)]
        length: usize,
        /// State sequence file to use instead of a simulation (first line).
        #[arg(long = "in")]
        input: Option<PathBuf>,
    },
    /// Maps state sequences to block sequences.
    Encode {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        partition: PartitionArg,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recovers state sequences from block sequences.
    Decode {
        #[command(flatten)]
        model: ModelArg,
        #[command(flatten)]
        partition: PartitionArg,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        order: usize,
        /// Known first state of every stream.
        #[arg(long)]
        hint: Option<String>,
    },
    /// Stationary-start trajectory.
    Simulate {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long, default_value_t = 1000)]
        length: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Trains a character model from a text file.
    Train {
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(2..=3))]
        order: u8,
        #[arg(long, value_enum, default_value = "gatsby")]
        policy: PolicyArg,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Bounds, admissible pairs, a search and per-lumping entropies as JSON lines.
    Report {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long, value_enum, default_value = "greedy")]
        strategy: StrategyArg,
        #[arg(long, value_enum, default_value = "marginal-entropy")]
        objective: ObjectiveArg,
        #[arg(long, default_value_t = 10)]
        sample_size: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_model(path: &Path) -> Result<TransitionModel> {
    let text = fs::read_to_string(path)?;
    if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
    {
        model_from_csv(&text)
    } else {
        model_from_json(&text)
    }
}

fn load_partition(arg: &str, model: &TransitionModel) -> Result<Partition> {
    let p = if Path::new(arg).is_file() {
        let text = fs::read_to_string(arg)?;
        if text.trim_start().starts_with("{\"") || text.trim_start().starts_with("{ \"") {
            partition_from_json(&text)?
        } else {
            Partition::parse_text(&text, model.labels())?
        }
    } else {
        Partition::parse_text(arg, model.labels())?
    };
    if p.n_states() != model.n_states() {
        return Err(Error::InvalidPartition(format!(
            "partition has {} states, model has {}",
            p.n_states(),
            model.n_states()
        )));
    }
    Ok(p)
}

fn check_output(path: &Option<PathBuf>) -> Result<()> {
    if let Some(parent) = path.as_ref().and_then(|p| p.parent()) {
        if !parent.as_os_str().is_empty() && !parent.is_dir() {
            return Err(Error::InvalidInput(format!(
                "output directory {} does not exist",
                parent.display()
            )));
        }
    }
    Ok(())
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn print_json(v: &Value) -> Result<()> {
    out!("{v}");
    Ok(())
}

/// Names of the blocks, `{a,b}` style.
fn block_names(p: &Partition, labels: &[String]) -> Vec<String> {
    p.blocks()
        .iter()
        .map(|b| {
            format!(
                "{{{}}}",
                b.iter()
                    .map(|&x| labels[x].as_str())
                    .collect::<Vec<_>>()
                    .join(",")
            )
        })
        .collect()
}

fn path_json(model: &TransitionModel, path: &[Partition]) -> Result<Value> {
    let mu = model.stationary()?;
    Ok(Value::Array(
        path.iter()
            .map(|p| {
                json!({
                    "m": p.n_blocks(),
                    "blocks": p.blocks(),
                    "marginal_entropy_bits": round12(marginal_entropy(&mu, p)),
                })
            })
            .collect(),
    ))
}

fn print_path(model: &TransitionModel, path: &[Partition], json_out: bool) -> Result<()> {
    let entries = path_json(model, path)?;
    if json_out {
        print_json(&json!({ "path": entries }))?;
    } else {
        for (p, e) in path.iter().zip(entries.as_array().into_iter().flatten()) {
            out!(
                "M={} H(Y)={} {}",
                p.n_blocks(),
                e["marginal_entropy_bits"],
                p.format_with_labels(model.labels())
            );
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let json_out = cli.json;
    let threads = cli.threads as usize;
    match cli.command {
        Command::Bounds(m) => {
            let model = load_model(&m.model)?;
            let b = model.adjacency().lower_bounds()?;
            if json_out {
                print_json(&json!({
                    "min_degree": b.min_degree,
                    "max_degree": b.max_degree,
                    "spectral_radius": round12(b.spectral),
                    "sfs2_min_blocks": b.max_degree,
                }))?;
            } else {
                out!(
                    "min={} max={} spectral={:?}",
                    b.min_degree,
                    b.max_degree,
                    round12(b.spectral)
                );
            }
        }
        Command::Pairs(m) => {
            let model = load_model(&m.model)?;
            let pairs = admissible_pairs(model.adjacency());
            let labels = model.labels();
            if json_out {
                print_json(&json!({
                    "possible_pairs": pairs.possible_pairs(),
                    "pairs": pairs.pairs(),
                    "labels": pairs.pairs().iter().map(|&(a, b)| [&labels[a], &labels[b]]).collect::<Vec<_>>(),
                }))?;
            } else {
                for &(a, b) in pairs.pairs() {
                    out!("{{{},{}}}", labels[a], labels[b]);
                }
                out!(
                    "{} of {} pairs admissible",
                    pairs.len(),
                    pairs.possible_pairs()
                );
            }
        }
        Command::Enumerate(m) => {
            let model = load_model(&m.model)?;
            let adj = model.adjacency();
            let levels = list_all_sfs2_with(adj, &admissible_pairs(adj), threads);
            let identity = Partition::identity(model.n_states());
            let mut groups = vec![(model.n_states(), vec![identity])];
            groups.extend(levels.into_iter().map(|l| (l.n_blocks(), l.partitions)));
            if json_out {
                let levels: Vec<Value> = groups
                    .iter()
                    .map(|(m, ps)| json!({"m": m, "partitions": ps.iter().map(Partition::blocks).collect::<Vec<_>>()}))
                    .collect();
                print_json(&json!({ "levels": levels }))?;
            } else {
                for (m, ps) in &groups {
                    out!("M={m} ({})", ps.len());
                    for p in ps {
                        out!("  {}", p.format_with_labels(model.labels()));
                    }
                }
            }
        }
        Command::Greedy { model, objective } => {
            let model = load_model(&model.model)?;
            let path = greedy_sfs2(&model, objective.into())?;
            print_path(&model, &path, json_out)?;
        }
        Command::Random {
            model,
            objective,
            sample_size,
        } => {
            let model = load_model(&model.model)?;
            let path = randomized_sfs2(&model, objective.into(), sample_size, cli.seed)?;
            print_path(&model, &path, json_out)?;
        }
        Command::Check {
            model,
            partition,
            order,
        } => {
            let model = load_model(&model.model)?;
            let p = load_partition(&partition.partition, &model)?;
            let verdict = is_sfs_k(model.adjacency(), &p, order, work_budget_from_env())?;
            let labels = model.labels();
            let names = block_names(&p, labels);
            let show = |xs: &[usize]| xs.iter().map(|&x| labels[x].clone()).collect::<Vec<_>>();
            if json_out {
                let witness = verdict.witness.as_ref().map(|w| {
                    json!({
                        "blocks": w.blocks.iter().map(|&b| &names[b]).collect::<Vec<_>>(),
                        "first": show(&w.first),
                        "second": show(&w.second),
                    })
                });
                print_json(&json!({"order": order, "holds": verdict.holds, "witness": witness}))?;
            } else if verdict.holds {
                out!("SFS({order}) holds for {}", p.format_with_labels(labels));
            } else {
                out!("SFS({order}) fails for {}", p.format_with_labels(labels));
                if let Some(w) = &verdict.witness {
                    let blocks: Vec<&str> = w.blocks.iter().map(|&b| names[b].as_str()).collect();
                    out!("  blocks {}", blocks.join(" "));
                    out!(
                        "  paths {} and {}",
                        show(&w.first).join(" "),
                        show(&w.second).join(" ")
                    );
                }
            }
        }
        Command::Entropy { model, partition } => {
            let model = load_model(&model.model)?;
            let p = load_partition(&partition.partition, &model)?;
            let mu = model.stationary()?;
            let report = entropy_report_json(&lumped_entropy_report(&model, &mu, &p));
            if json_out {
                print_json(&report)?;
            } else {
                for (k, v) in report.as_object().into_iter().flatten() {
                    out!("{k} {v}");
                }
            }
        }
        Command::PreimageTrace {
            model,
            partition,
            length,
            input,
        } => {
            let model = load_model(&model.model)?;
            let p = load_partition(&partition.partition, &model)?;
            let xs = match &input {
                Some(path) => read_sequences(&fs::read_to_string(path)?, model.labels())?
                    .into_iter()
                    .next()
                    .ok_or_else(|| Error::InvalidInput("no sequence in input".into()))?,
                None => {
                    if length == 0 {
                        return Err(Error::InvalidInput("length must be at least 1".into()));
                    }
                    simulate(&model, &model.stationary()?, length, cli.seed)
                }
            };
            let trace = preimage_count(model.adjacency(), &p, &encode(&p, &xs), None)?;
            let growth = (trace.len() >= MIN_TRACE_LEN)
                .then(|| growth_rate_estimate(&trace))
                .transpose()?;
            if json_out {
                print_json(&json!({
                    "counts": trace.counts,
                    "capped": trace.capped,
                    "max": trace.max(),
                    "growth_bits_per_symbol": growth.map(round12),
                }))?;
            } else {
                out!(
                    "length {} max {} capped {}",
                    trace.len(),
                    trace.max(),
                    trace.capped
                );
                if let Some(g) = growth {
                    out!("growth {:?} bits/symbol", round12(g));
                }
            }
        }
        Command::Encode {
            model,
            partition,
            input,
            out,
        } => {
            check_output(&out)?;
            let model = load_model(&model.model)?;
            let p = load_partition(&partition.partition, &model)?;
            let seqs = read_sequences(&fs::read_to_string(&input)?, model.labels())?;
            let encoded: Vec<Vec<usize>> = seqs.iter().map(|xs| encode(&p, xs)).collect();
            let text = write_sequences(&encoded, &block_names(&p, model.labels()));
            emit(&out, &text)?;
        }
        Command::Decode {
            model,
            partition,
            input,
            out,
            order,
            hint,
        } => {
            check_output(&out)?;
            let model = load_model(&model.model)?;
            let p = load_partition(&partition.partition, &model)?;
            let labels = model.labels();
            let names = block_names(&p, labels);
            let seqs = read_sequences(&fs::read_to_string(&input)?, &names)?;
            let hint = match &hint {
                Some(h) => Some(
                    labels
                        .iter()
                        .position(|l| l == h)
                        .ok_or_else(|| Error::InvalidInput(format!("unknown state '{h}'")))?,
                ),
                None => None,
            };
            let decoder = build_decoder(model.adjacency(), &p, order, work_budget_from_env())?;
            let mut text = String::new();
            for ys in &seqs {
                let decoded = decoder.decode(ys, hint)?;
                let mut tokens = vec![match &decoded.first {
                    FirstSample::Known(x) => labels[*x].clone(),
                    FirstSample::Ambiguous(_) => names[ys[0]].clone(),
                }];
                tokens.extend(decoded.tail.iter().map(|&x| labels[x].clone()));
                if json_out {
                    let first = match &decoded.first {
                        FirstSample::Known(x) => json!({"known": labels[*x]}),
                        FirstSample::Ambiguous(xs) => {
                            json!({"ambiguous": xs.iter().map(|&x| &labels[x]).collect::<Vec<_>>()})
                        }
                    };
                    let tail: Vec<&String> = decoded.tail.iter().map(|&x| &labels[x]).collect();
                    text.push_str(&json!({"first": first, "tail": tail}).to_string());
                } else {
                    text.push_str(&tokens.join(" "));
                }
                text.push('\n');
            }
            emit(&out, &text)?;
        }
        Command::Simulate { model, length, out } => {
            check_output(&out)?;
            let model = load_model(&model.model)?;
            let xs = simulate(&model, &model.stationary()?, length, cli.seed);
            emit(&out, &write_sequences(&[xs], model.labels()))?;
        }
        Command::Train {
            order,
            policy,
            input,
            out,
        } => {
            check_output(&Some(out.clone()))?;
            let policy = match policy {
                PolicyArg::Gatsby => PreprocessPolicy::gatsby(),
                PolicyArg::Raw => PreprocessPolicy::raw(),
            };
            let corpus = preprocess(&fs::read(&input)?, policy)?;
            let trained: lumpkit::TrainedModel = if order == 2 {
                train_bigram(&corpus)?
            } else {
                train_trigram_lifted(&corpus)?
            };
            let text = if out
                .extension()
                .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
            {
                model_to_csv(&trained.model)
            } else {
                model_to_json(&trained.model)
            };
            fs::write(&out, text)?;
            if json_out {
                print_json(&json!({
                    "symbols": corpus.len(),
                    "alphabet": corpus.alphabet().len(),
                    "n": trained.model.n_states(),
                    "dropped": trained.dropped,
                }))?;
            } else {
                out!(
                    "{} symbols, alphabet {}, model states {}, dropped {}",
                    corpus.len(),
                    corpus.alphabet().len(),
                    trained.model.n_states(),
                    trained.dropped.len()
                );
            }
        }
        Command::Report {
            model,
            strategy,
            objective,
            sample_size,
            out,
        } => {
            check_output(&out)?;
            let model = load_model(&model.model)?;
            let strategy = match strategy {
                StrategyArg::Exhaustive => Strategy::Exhaustive { threads },
                StrategyArg::Greedy => Strategy::Greedy,
                StrategyArg::Randomized => Strategy::Randomized {
                    sample_size,
                    seed: cli.seed,
                },
            };
            let report = experiment_report(&model, strategy, objective.into())?;
            match &out {
                Some(_) => {
                    emit(&out, &report_jsonl(&report, model.labels()))?;
                    let summary = summary_json(&report, model.labels());
                    if json_out {
                        print_json(&summary)?;
                    } else {
                        print_summary(&report, &model)?;
                    }
                }
                None if json_out => emit(&None, &report_jsonl(&report, model.labels()))?,
                None => {
                    for r in &report.records {
                        out!("{}", record_json(r));
                    }
                    print_summary(&report, &model)?;
                }
            }
        }
    }
    Ok(())
}

fn print_summary(report: &lumpkit::ngram::ExperimentReport, model: &TransitionModel) -> Result<()> {
    out!(
        "N={} degrees {}..{} spectral {:?}",
        report.n_states,
        report.bounds.min_degree,
        report.bounds.max_degree,
        round12(report.bounds.spectral)
    );
    out!(
        "{} of {} pairs admissible",
        report.admissible_pairs.len(),
        report.admissible_pairs.possible_pairs()
    );
    let levels: Vec<String> = report
        .level_counts
        .iter()
        .map(|(m, c)| format!("M={m}:{c}"))
        .collect();
    out!("levels {}", levels.join(" "));
    out!(
        "marginal entropy {:?} bits before lumping",
        round12(report.baseline_marginal_entropy_bits)
    );
    if let Some(best) = &report.best {
        out!(
            "best M={} marginal entropy {:?} bits {}",
            best.m,
            round12(best.marginal_entropy_bits),
            best.partition.format_with_labels(model.labels())
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            let mut detail = json!(e.to_string());
            if let Error::WorkBudgetExceeded { .. } = e {
                detail = json!(format!("{e} (raise {WORK_BUDGET_ENV} to allow more)"));
            }
            eprintln!("{}", json!({"error": e.code(), "detail": detail}));
            ExitCode::from(1)
        }
    }
}
