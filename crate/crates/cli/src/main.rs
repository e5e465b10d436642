//! `ransec`: run latency campaigns and crypto benchmarks against the
//! emulated RAN pipeline. See `doc/ransec.1.md` for the full reference.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use ransec::bench::{analyze_ordering, bench_suite, plot_data, BenchCurve, BenchTarget};
use ransec::crypto::{aes_acceleration_available, suite_catalog, SecuritySuite};
use ransec::harness::{
    compare_tables, matrix_scenarios, run_cp_experiment, run_matrix, run_up_experiment, MatrixOptions,
};
use ransec::pipeline::{Execution, Interface};
use ransec::scenario::{
    env_layer, flag_layer, read_file_layer, secure_preset, Experiment, Layer, Scenario, ScenarioSources, ENV_PREFIX,
};
use ransec::stats::report::{
    read_bench, read_summaries_from, write_rows, write_rows_to, write_samples, BenchRow, SummaryRow,
};
use ransec::wire::dump::{dump, PduKind};

#[derive(Parser)]
#[command(
    name = "ransec",
    version,
    about = "Security overhead emulator for disaggregated RAN links",
    after_help = "Scenario fields resolve flag > RANSEC_* environment variable > file > default."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario (up-echo, cp-procedures or bench).
    Run(RunArgs),
    /// Per-scenario overhead of SECURED over BASELINE summary CSVs.
    Compare {
        baseline: PathBuf,
        secured: PathBuf,
    },
    /// Every valid (interface, suite) pair plus baselines into one CSV.
    Matrix(MatrixArgs),
    /// Shorthand for `run --experiment bench`.
    Bench(RunArgs),
    /// Gnuplot columns from a bench CSV.
    PlotData { bench_csv: PathBuf },
    /// Annotated hex dump of one encoded PDU.
    Dump {
        /// gtpu, esp, dtls or pdcp
        kind: PduKind,
        /// PDU bytes as hex; read from stdin when omitted
        hex: Option<String>,
        /// Suite for ESP framing; for PDCP any suite means a MAC-I is present
        #[arg(long)]
        suite: Option<String>,
    },
    /// Print the suite catalog.
    Suites,
}

#[derive(Args, Clone, Default)]
struct RunArgs {
    /// Scenario TOML file
    scenario: Option<PathBuf>,
    /// Override any field, KEY=VALUE (e.g. links.F1-U.security=AES-GCM-128)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// all | up | none | IF[=SUITE],...
    #[arg(long)]
    secure: Option<String>,
    #[arg(long)]
    experiment: Option<String>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    repetitions: Option<usize>,
    #[arg(long)]
    payload_size: Option<usize>,
    #[arg(long)]
    warmup: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    execution: Option<String>,
    /// Comma separated sizes in bytes (bench)
    #[arg(long)]
    sizes: Option<String>,
    /// Comma separated suite names (bench)
    #[arg(long)]
    suites: Option<String>,
    /// Output CSV; stdout when omitted
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Write raw round-trip samples (ns), one per line
    #[arg(long)]
    samples: Option<PathBuf>,
    /// Worker threads for bench suites. Rejected for latency experiments.
    #[arg(long)]
    parallel: Option<usize>,
    /// Print the resolved scenario and where each value came from, then exit
    #[arg(long)]
    explain: bool,
}

#[derive(Args)]
struct MatrixArgs {
    /// Consolidated CSV; existing rows are kept and their entries skipped
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, default_value_t = MatrixOptions::default().up_repetitions)]
    up_repetitions: usize,
    #[arg(long, default_value_t = MatrixOptions::default().cp_repetitions)]
    cp_repetitions: usize,
    #[arg(long, default_value_t = MatrixOptions::default().payload_size)]
    payload_size: usize,
    #[arg(long, default_value_t = MatrixOptions::default().warmup)]
    warmup: usize,
    #[arg(long, default_value = "deterministic")]
    execution: Execution,
    #[arg(long, default_value_t = MatrixOptions::default().seed)]
    seed: u64,
    #[arg(long)]
    parallel: Option<usize>,
}

impl RunArgs {
    /// Flag layer: --secure first, then the named flags, then --set.
    fn flags(&self) -> Result<Layer> {
        let mut layer = match &self.secure {
            Some(s) => secure_preset(s)?,
            None => Layer::new(),
        };
        let named = [
            ("experiment", self.experiment.clone()),
            ("mode", self.mode.clone()),
            ("repetitions", self.repetitions.map(|v| v.to_string())),
            ("payload_size", self.payload_size.map(|v| v.to_string())),
            ("warmup", self.warmup.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            ("execution", self.execution.clone()),
            ("bench.sizes", self.sizes.clone()),
            ("bench.suites", self.suites.clone()),
        ];
        for (k, v) in named {
            if let Some(v) = v {
                layer.insert(k.to_string(), v);
            }
        }
        layer.extend(flag_layer(self.sets.iter().map(String::as_str))?);
        Ok(layer)
    }

    fn sources(&self) -> Result<ScenarioSources> {
        Ok(ScenarioSources {
            file: match &self.scenario {
                Some(p) => read_file_layer(p)?,
                None => Layer::new(),
            },
            env: env_layer(std::env::vars().filter(|(k, _)| k.starts_with(ENV_PREFIX)))?,
            flags: self.flags()?,
        })
    }
}

fn emit<T: serde::Serialize>(out: Option<&Path>, rows: &[T]) -> Result<()> {
    match out {
        Some(p) => write_rows_to(p, rows)?,
        None => write_rows(std::io::stdout().lock(), rows)?,
    }
    Ok(())
}

fn explain(src: &ScenarioSources, sc: &Scenario) {
    println!("id = {}", sc.id);
    let mut keys: Vec<&String> = src.file.keys().chain(src.env.keys()).chain(src.flags.keys()).collect();
    keys.sort();
    keys.dedup();
    for k in keys {
        println!("{k} = {} ({})", src.get(k).unwrap_or_default(), src.origin(k));
    }
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let src = args.sources()?;
    let sc = src.resolve()?;
    if args.explain {
        explain(&src, &sc);
        return Ok(());
    }
    if args.parallel.is_some() && sc.experiment != Experiment::Bench {
        bail!("--parallel is only allowed for bench; concurrent latency campaigns would measure each other");
    }
    eprintln!("running {} ({} repetitions)", sc.id, sc.repetitions);
    match sc.experiment {
        Experiment::UpEcho => {
            let r = run_up_experiment(&sc)?;
            if let Some(p) = &args.samples {
                write_samples(p, &r.samples_ns)?;
            }
            for (role, ops) in &r.ops_per_rtt {
                eprintln!("  {role}: {} ops/RTT ({} ESP)", ops.total(), ops.esp);
            }
            emit(args.out.as_deref(), &[r.row()])
        }
        Experiment::CpProcedures => {
            let r = run_cp_experiment(&sc)?;
            if let Some(p) = &args.samples {
                write_samples(p, &r.bearer_context.samples_ns)?;
            }
            emit(args.out.as_deref(), &r.rows())
        }
        Experiment::Bench => {
            let curves = run_bench(&sc, args.parallel.unwrap_or(1))?;
            if curves.len() > 1 {
                match analyze_ordering(&curves)?.total_order() {
                    Some(order) => eprintln!("order at large sizes: {}", order.join(" > ")),
                    None => eprintln!("no total order at large sizes"),
                }
            }
            let rows: Vec<BenchRow> = curves.iter().flat_map(BenchCurve::rows).collect();
            emit(args.out.as_deref(), &rows)
        }
    }
}

fn run_bench(sc: &Scenario, workers: usize) -> Result<Vec<BenchCurve>> {
    if workers == 0 {
        bail!("--parallel needs at least one worker");
    }
    let b = &sc.bench;
    let targets: Vec<BenchTarget> = b.suites.iter().map(|&s| BenchTarget::Suite(s)).collect();
    let run = |t: BenchTarget| {
        eprintln!("  bench {}", t.label());
        bench_suite(t, &b.sizes, b.repetitions, sc.seed)
    };
    if workers == 1 {
        return Ok(targets.into_iter().map(run).collect::<Result<_, _>>()?);
    }
    let chunk = targets.len().div_ceil(workers).max(1);
    let results: Vec<_> = std::thread::scope(|s| {
        let handles: Vec<_> = targets
            .chunks(chunk)
            .map(|c| s.spawn(move || c.iter().map(|&t| run(t)).collect::<Vec<_>>()))
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("bench worker panicked")).collect()
    });
    Ok(results.into_iter().collect::<Result<_, _>>()?)
}

fn fmt_us(v: f64) -> String {
    format!("{v:.3}")
}

fn cmd_compare(baseline: &Path, secured: &Path) -> Result<()> {
    let b = read_summaries_from(baseline).with_context(|| format!("reading {}", baseline.display()))?;
    let s = read_summaries_from(secured).with_context(|| format!("reading {}", secured.display()))?;
    let reports = compare_tables(&b, &s)?;
    let find = |rows: &[SummaryRow], id: &str| rows.iter().find(|r| r.scenario_id == id).cloned();
    let mut out = csv::Writer::from_writer(std::io::stdout().lock());
    out.write_record([
        "scenario",
        "baseline_us",
        "secured_us",
        "delta_us",
        "delta_pct",
        "delta_ci_low_us",
        "delta_ci_high_us",
        "verdict",
        "baseline_crypto_ops",
        "secured_crypto_ops",
        "baseline_esp_ops",
        "secured_esp_ops",
    ])?;
    for (i, r) in reports.iter().enumerate() {
        let br = find(&b, &r.baseline_id).unwrap_or_else(|| b[i].clone());
        let sr = find(&s, &r.secured_id).unwrap_or_else(|| s[i].clone());
        out.write_record([
            r.secured_id.clone(),
            fmt_us(br.mean_us),
            fmt_us(sr.mean_us),
            fmt_us(r.delta_mean_us),
            format!("{:.2}", r.delta_pct),
            fmt_us(r.delta_ci_low_us),
            fmt_us(r.delta_ci_high_us),
            r.verdict.to_string(),
            br.crypto_ops.to_string(),
            sr.crypto_ops.to_string(),
            br.esp_ops.to_string(),
            sr.esp_ops.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_matrix(a: &MatrixArgs) -> Result<()> {
    if a.parallel.is_some() {
        bail!("--parallel is only allowed for bench; the matrix runs latency campaigns");
    }
    let opts = MatrixOptions {
        up_repetitions: a.up_repetitions,
        cp_repetitions: a.cp_repetitions,
        payload_size: a.payload_size,
        warmup: a.warmup,
        execution: a.execution,
        seed: a.seed,
    };
    let entries = matrix_scenarios(&opts)?;
    if !aes_acceleration_available() {
        eprintln!("warning: no AES acceleration detected; rows are flagged accel=false");
    }
    let total = entries.len();
    let mut i = 0;
    let outcome = run_matrix(&entries, &a.out, |e| {
        i += 1;
        eprintln!("[{i}/{total}] {}", e.id);
    })?;
    eprintln!(
        "{} rows written, {} entries already present",
        outcome.rows.len(),
        outcome.skipped.len()
    );
    Ok(())
}

fn cmd_plot_data(path: &Path) -> Result<()> {
    let f = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let curves = BenchCurve::from_rows(&read_bench(f)?);
    print!("{}", plot_data(&curves));
    Ok(())
}

fn cmd_dump(kind: PduKind, hex_arg: Option<&str>, suite: Option<&str>) -> Result<()> {
    let text = match hex_arg {
        Some(h) => h.to_string(),
        None => std::io::read_to_string(std::io::stdin())?,
    };
    let clean: String = text.chars().filter(|c| !c.is_whitespace() && *c != ':').collect();
    let bytes = hex::decode(&clean).context("PDU must be hex")?;
    let suite = suite.map(ransec::crypto::suite_by_id).transpose()?;
    print!("{}", dump(kind, &bytes, suite.as_ref())?);
    Ok(())
}

fn interfaces_for(s: &SecuritySuite) -> String {
    Interface::ALL
        .into_iter()
        .filter(|i| i.accepts(s.id))
        .map(|i| i.as_str())
        .collect::<Vec<_>>()
        .join(" ")
}

fn cmd_suites() {
    println!("{:<32} {:<5} {:>8} {:>6} {:>7}  interfaces", "suite", "layer", "key_bits", "iv", "tag");
    for s in suite_catalog() {
        println!(
            "{:<32} {:<5} {:>8} {:>6} {:>7}  {}",
            s.id.as_str(),
            format!("{:?}", s.family).to_ascii_uppercase(),
            s.key_len,
            s.iv_len,
            s.tag_len,
            interfaces_for(&s)
        );
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match &cli.cmd {
        Cmd::Run(a) => cmd_run(a),
        Cmd::Bench(a) => {
            let mut a = a.clone();
            a.experiment = Some("bench".into());
            cmd_run(&a)
        }
        Cmd::Compare { baseline, secured } => cmd_compare(baseline, secured),
        Cmd::Matrix(a) => cmd_matrix(a),
        Cmd::PlotData { bench_csv } => cmd_plot_data(bench_csv),
        Cmd::Dump { kind, hex, suite } => cmd_dump(*kind, hex.as_deref(), suite.as_deref()),
        Cmd::Suites => {
            cmd_suites();
            Ok(())
        }
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
