use std::fmt::Write as _;
use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::{json, Value};

use qperc::experiments::{self, RecipeParams};
use qperc::generators::{Family, GeneratorSpec};
use qperc::percolation::{uniform_grid, BidirectionalRule, CurveParseError};
use qperc::walk::{evolve_trace, find_ghz_schedule, ghz_fidelity, WalkProgram, WalkState, NORM_TOL};
use qperc::{
    analytic_threshold, degree_stats, estimate_threshold, parse, qswap_directed, qswap_undirected, serialize,
    sweep, walk_rewrite, PercolationConfig, PercolationCurve, ThresholdMethod, WalkMode,
};

const FIDELITY_TOL: f64 = 1e-10;

#[derive(Parser, Debug)]
#[command(name = "qperc", version, about = "Entanglement percolation on quantum networks")]
struct Cli {
    /// Seed for every random choice; falls back to QPERC_SEED, then 0.
    #[arg(long, global = true, env = "QPERC_SEED", default_value_t = 0)]
    seed: u64,
    /// Append the run manifest (one JSON line) here. Defaults to
    /// `<output>.manifest.jsonl` next to a file output; stdout runs write none.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Output format. Only csv exists today.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Format {
    Csv,
}

#[derive(Args, Debug)]
struct Io {
    /// Input file; stdin when omitted.
    #[arg(short, long)]
    input: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a network in the edge-list format.
    Generate {
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long)]
        n: Option<usize>,
        /// Mean degree (even integer for ws and ring).
        #[arg(long)]
        k: Option<f64>,
        #[arg(long, default_value_t = 0.1)]
        beta: f64,
        /// Lattice side for kleinberg and square.
        #[arg(long)]
        side: Option<usize>,
        /// Long-range links per node (kleinberg).
        #[arg(long, default_value_t = 2)]
        long_range: usize,
        /// Distance exponent (kleinberg).
        #[arg(long, default_value_t = 2.0)]
        exponent: f64,
        #[arg(long, default_value_t = 0.75)]
        lambda1: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Rewrite a network by q-swap or quantum walk; prints the swap report.
    Preprocess {
        #[arg(long, value_enum)]
        op: OpArg,
        #[arg(long, conflicts_with_all = ["q_in", "q_out"])]
        q: Option<usize>,
        #[arg(long)]
        q_in: Option<usize>,
        #[arg(long)]
        q_out: Option<usize>,
        #[arg(long, value_enum, default_value_t = ModeArg::Triangle)]
        mode: ModeArg,
        #[command(flatten)]
        io: Io,
        /// Where the report line goes; stdout if the graph goes to a file,
        /// stderr otherwise.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Degree moments, analytic threshold and histogram.
    DegreeStats {
        #[command(flatten)]
        io: Io,
    },
    /// GCC-vs-SCP sweep as CSV.
    Sweep {
        #[arg(long, default_value_t = 0.01)]
        step: f64,
        /// Explicit comma-separated p values (overrides --step).
        #[arg(long, value_delimiter = ',')]
        p: Option<Vec<f64>>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, value_enum, default_value_t = RuleArg::Doubled)]
        rule: RuleArg,
        #[arg(long, value_enum, default_value_t = NormArg::All)]
        normalization: NormArg,
        /// Reuse one uniform draw per bond across all p.
        #[arg(long)]
        coupled: bool,
        #[command(flatten)]
        io: Io,
    },
    /// Threshold estimate from a sweep CSV.
    Threshold {
        #[arg(long, value_enum, default_value_t = MethodArg::Both)]
        method: MethodArg,
        #[arg(long, default_value_t = qperc::percolation::DEFAULT_THETA)]
        theta: f64,
        #[command(flatten)]
        io: Io,
    },
    /// Checks that an identity-coin walk fuses two Bell pairs into a GHZ state.
    WalkVerify {
        #[arg(long, allow_negative_numbers = true)]
        a: f64,
        #[arg(long, allow_negative_numbers = true)]
        b: f64,
    },
    /// Runs a figure recipe and writes its CSV bundle.
    Reproduce {
        figure: String,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        realizations: Option<usize>,
        #[arg(long)]
        step: Option<f64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum FamilyArg {
    Ws,
    Kleinberg,
    Er,
    Square,
    Ring,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum OpArg {
    Qswap,
    Walk,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ModeArg {
    Triangle,
    Ghz,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum RuleArg {
    Doubled,
    Independent,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum NormArg {
    All,
    Participants,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum MethodArg {
    Crossing,
    Susceptibility,
    Both,
}

enum Failure {
    Usage(String),
    Parse(String),
    Check(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Parse(_) => 3,
            Failure::Check(_) => 4,
            Failure::Io(_) => 5,
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

fn usage(e: impl ToString) -> Failure {
    Failure::Usage(e.to_string())
}

fn read_input(path: &Option<PathBuf>) -> Result<String, Failure> {
    match path {
        Some(p) => fs::read_to_string(p).map_err(|e| Failure::Io(format!("{}: {e}", p.display()))),
        None => {
            let mut s = String::new();
            io::stdin().read_to_string(&mut s)?;
            Ok(s)
        }
    }
}

fn write_output(path: &Option<PathBuf>, body: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, body).map_err(|e| Failure::Io(format!("{}: {e}", p.display()))),
        None => {
            io::stdout().write_all(body.as_bytes())?;
            Ok(())
        }
    }
}

fn read_graph(path: &Option<PathBuf>) -> Result<qperc::EntangledGraph, Failure> {
    parse(&read_input(path)?).map_err(|e| Failure::Parse(e.to_string()))
}

struct Manifest {
    subcommand: &'static str,
    params: Value,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

fn path_list(paths: &[PathBuf]) -> Vec<String> {
    paths.iter().map(|p| p.display().to_string()).collect()
}

fn emit_manifest(seed: u64, target: Option<PathBuf>, m: &Manifest, started: Instant) -> Result<(), Failure> {
    let line = json!({
        "tool": "qperc",
        "version": env!("CARGO_PKG_VERSION"),
        "subcommand": m.subcommand,
        "seed": seed,
        "params": m.params,
        "inputs": path_list(&m.inputs),
        "outputs": path_list(&m.outputs),
        "argv": std::env::args().collect::<Vec<_>>(),
        "wall_time_s": started.elapsed().as_secs_f64(),
    })
    .to_string();
    if let Some(p) = target {
        let mut f = fs::OpenOptions::new().create(true).append(true).open(&p)?;
        writeln!(f, "{line}")?;
    }
    Ok(())
}

fn family(
    kind: FamilyArg,
    n: Option<usize>,
    k: Option<f64>,
    beta: f64,
    side: Option<usize>,
    long_range: usize,
    exponent: f64,
) -> Result<Family, Failure> {
    let need_n = || n.ok_or_else(|| usage("--n is required for this family"));
    let need_k = || k.ok_or_else(|| usage("--k is required for this family"));
    let need_side = || side.ok_or_else(|| usage("--side is required for this family"));
    let int_k = |k: f64| {
        if k >= 0.0 && k.fract() == 0.0 {
            Ok(k as usize)
        } else {
            Err(usage(format!("--k must be an integer for this family, got {k}")))
        }
    };
    Ok(match kind {
        FamilyArg::Ws => Family::Ws {
            n: need_n()?,
            k: int_k(need_k()?)?,
            beta,
        },
        FamilyArg::Ring => Family::RingRegular {
            n: need_n()?,
            k: int_k(need_k()?)?,
        },
        FamilyArg::Er => Family::Er {
            n: need_n()?,
            mean_degree: need_k()?,
        },
        FamilyArg::Square => Family::SquareLattice { side: need_side()? },
        FamilyArg::Kleinberg => Family::Kleinberg {
            side: need_side()?,
            long_range,
            exponent,
        },
    })
}

fn degree_report(g: &qperc::EntangledGraph) -> String {
    let stats = degree_stats(g);
    let threshold = analytic_threshold(stats.mean_k(), stats.mean_k2())
        .map_or("none".to_owned(), |t| format!("{t:.6}"));
    let mut out = String::from("nodes,edges,mean_k,mean_k2,analytic_threshold\n");
    writeln!(
        out,
        "{},{},{:.6},{:.6},{threshold}",
        g.node_count(),
        g.edge_count(),
        stats.mean_k(),
        stats.mean_k2()
    )
    .unwrap();
    out.push('\n');
    match &stats.directed {
        Some((din, dout)) => {
            out.push_str("k,count,in_count,out_count\n");
            let max = [&stats.total, din, dout]
                .iter()
                .filter_map(|d| d.histogram.keys().max().copied())
                .max()
                .unwrap_or(0);
            for k in 0..=max {
                let get = |d: &qperc::DegreeDistribution| d.histogram.get(&k).copied().unwrap_or(0);
                let row = (get(&stats.total), get(din), get(dout));
                if row != (0, 0, 0) {
                    writeln!(out, "{k},{},{},{}", row.0, row.1, row.2).unwrap();
                }
            }
        }
        None => {
            out.push_str("k,count\n");
            for (k, c) in &stats.total.histogram {
                writeln!(out, "{k},{c}").unwrap();
            }
        }
    }
    out
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let started = Instant::now();
    let Format::Csv = cli.format;
    let seed = cli.seed;
    let manifest = match &cli.command {
        Command::Generate {
            family: kind,
            n,
            k,
            beta,
            side,
            long_range,
            exponent,
            lambda1,
            output,
        } => {
            let fam = family(*kind, *n, *k, *beta, *side, *long_range, *exponent)?;
            let g = GeneratorSpec {
                family: fam.clone(),
                lambda1: *lambda1,
                seed,
            }
            .generate()
            .map_err(usage)?;
            write_output(output, &serialize(&g))?;
            Manifest {
                subcommand: "generate",
                params: json!({ "family": format!("{fam:?}"), "lambda1": lambda1 }),
                inputs: vec![],
                outputs: output.iter().cloned().collect(),
            }
        }
        Command::Preprocess {
            op,
            q,
            q_in,
            q_out,
            mode,
            io,
            report,
        } => {
            let g = read_graph(&io.input)?;
            let walk_mode = match mode {
                ModeArg::Triangle => WalkMode::TriangleIndependent,
                ModeArg::Ghz => WalkMode::AtomicGhz,
            };
            let (h, r) = match op {
                OpArg::Walk => walk_rewrite(&g, walk_mode, seed),
                OpArg::Qswap if g.is_directed() => qswap_directed(&g, q_in.or(*q), q_out.or(*q), seed),
                OpArg::Qswap => {
                    let q = q.ok_or_else(|| usage("--q is required for an undirected q-swap"))?;
                    qswap_undirected(&g, q, seed)
                }
            }
            .map_err(usage)?;
            write_output(&io.output, &serialize(&h))?;
            let line = format!("{}\n{}\n", qperc::SwapReport::CSV_HEADER, r.to_csv());
            match (report, &io.output) {
                (Some(p), _) => fs::write(p, &line)?,
                (None, Some(_)) => print!("{line}"),
                (None, None) => eprint!("{line}"),
            }
            Manifest {
                subcommand: "preprocess",
                params: json!({
                    "op": format!("{op:?}").to_lowercase(),
                    "q": q, "q_in": q_in, "q_out": q_out,
                    "mode": format!("{mode:?}").to_lowercase(),
                }),
                inputs: io.input.iter().cloned().collect(),
                outputs: io.output.iter().chain(report.iter()).cloned().collect(),
            }
        }
        Command::DegreeStats { io } => {
            let g = read_graph(&io.input)?;
            write_output(&io.output, &degree_report(&g))?;
            Manifest {
                subcommand: "degree-stats",
                params: json!({}),
                inputs: io.input.iter().cloned().collect(),
                outputs: io.output.iter().cloned().collect(),
            }
        }
        Command::Sweep {
            step,
            p,
            trials,
            rule,
            normalization,
            coupled,
            io,
        } => {
            let g = read_graph(&io.input)?;
            let grid = match p {
                Some(ps) => ps.clone(),
                None => uniform_grid(*step).map_err(usage)?,
            };
            let cfg = PercolationConfig {
                bidirectional_rule: match rule {
                    RuleArg::Doubled => BidirectionalRule::Doubled,
                    RuleArg::Independent => BidirectionalRule::Independent,
                },
                normalization: match normalization {
                    NormArg::All => qperc::percolation::GccNormalization::AllNodes,
                    NormArg::Participants => qperc::percolation::GccNormalization::Participants,
                },
                coupled: *coupled,
                ..PercolationConfig::new(grid.clone(), *trials, seed).map_err(usage)?
            };
            let curve = sweep(&g, &cfg).map_err(usage)?;
            write_output(&io.output, &curve.to_csv())?;
            Manifest {
                subcommand: "sweep",
                params: json!({
                    "p_values": grid, "trials": trials,
                    "rule": format!("{rule:?}").to_lowercase(),
                    "normalization": format!("{normalization:?}").to_lowercase(),
                    "coupled": coupled,
                }),
                inputs: io.input.iter().cloned().collect(),
                outputs: io.output.iter().cloned().collect(),
            }
        }
        Command::Threshold { method, theta, io } => {
            let curve = PercolationCurve::from_csv(&read_input(&io.input)?)
                .map_err(|e: CurveParseError| Failure::Parse(e.to_string()))?;
            let mut out = String::from("method,threshold\n");
            let mut methods = Vec::new();
            if matches!(method, MethodArg::Crossing | MethodArg::Both) {
                methods.push(("gcc-crossing", ThresholdMethod::GccCrossing { theta: *theta }));
            }
            if matches!(method, MethodArg::Susceptibility | MethodArg::Both) {
                methods.push(("susceptibility-peak", ThresholdMethod::SusceptibilityPeak));
            }
            for (name, m) in methods {
                match estimate_threshold(&curve, m) {
                    Ok(t) => writeln!(out, "{name},{t:.6}").unwrap(),
                    Err(qperc::percolation::ThresholdError::BadTheta(t)) => {
                        return Err(usage(format!("--theta {t} outside (0, 1)")))
                    }
                    Err(_) => writeln!(out, "{name},none").unwrap(),
                }
            }
            write_output(&io.output, &out)?;
            Manifest {
                subcommand: "threshold",
                params: json!({ "method": format!("{method:?}").to_lowercase(), "theta": theta }),
                inputs: io.input.iter().cloned().collect(),
                outputs: io.output.iter().cloned().collect(),
            }
        }
        Command::WalkVerify { a, b } => {
            let (a, b) = (Complex64::new(*a, 0.0), Complex64::new(*b, 0.0));
            let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
            if !(norm > 0.0 && norm.is_finite()) {
                return Err(usage("(a, b) must not both be zero"));
            }
            let (a, b) = (a / norm, b / norm);
            let schedule = find_ghz_schedule(a, b, FIDELITY_TOL).map_err(usage)?;
            let (coins, parties, spectator) = match &schedule {
                Some(s) => (s.coins.clone(), s.parties.to_vec(), s.spectator),
                None => (
                    qperc::walk::GHZ_SCHEDULE.to_vec(),
                    qperc::walk::GHZ_PARTIES.to_vec(),
                    qperc::walk::GHZ_SPECTATOR,
                ),
            };
            let initial = WalkState::bell_pairs(a, b).map_err(usage)?;
            let trace = evolve_trace(&initial, &WalkProgram::identity_coins(2, &coins).map_err(usage)?).map_err(usage)?;
            let drift = trace.iter().map(|s| (s.norm() - 1.0).abs()).fold(0.0, f64::max);
            let fidelity = ghz_fidelity(trace.last().unwrap(), &parties, a, b).map_err(usage)?;
            let join = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
            println!("a,b,fidelity,coins,parties,spectator,max_norm_drift");
            println!(
                "{:.12},{:.12},{fidelity:.15},{},{},{spectator},{drift:.3e}",
                a.re,
                b.re,
                join(&coins),
                join(&parties)
            );
            if fidelity < 1.0 - FIDELITY_TOL || drift > NORM_TOL {
                return Err(Failure::Check(format!("fidelity {fidelity} below 1 - {FIDELITY_TOL}")));
            }
            return Ok(());
        }
        Command::Reproduce {
            figure,
            trials,
            realizations,
            step,
            out,
        } => {
            let defaults = RecipeParams::default();
            let params = RecipeParams {
                trials: trials.unwrap_or(defaults.trials),
                realizations: realizations.unwrap_or(defaults.realizations),
                grid_step: step.unwrap_or(defaults.grid_step),
                ..defaults
            };
            let report = experiments::run_figure(figure, &params, seed).map_err(|e| match e {
                experiments::ExperimentError::Io(e) => Failure::Io(e.to_string()),
                other => usage(other),
            })?;
            let written = report.write_bundle(out).map_err(|e| Failure::Io(e.to_string()))?;
            println!("{} - {}", report.id, report.title);
            print!("{}", report.thresholds_csv());
            for c in &report.claims {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            let mut params_json = params.to_json();
            params_json["figure"] = json!(report.id);
            let m = Manifest {
                subcommand: "reproduce",
                params: params_json,
                inputs: vec![],
                outputs: written,
            };
            let target = cli.manifest.clone().unwrap_or_else(|| out.join("manifest.jsonl"));
            emit_manifest(seed, Some(target), &m, started)?;
            if !report.passed() {
                let failed = report.claims.iter().filter(|c| !c.passed).count();
                return Err(Failure::Check(format!("{failed} claim(s) failed for {}", report.id)));
            }
            return Ok(());
        }
    };
    let target = cli.manifest.clone().or_else(|| {
        manifest.outputs.first().map(|o| {
            let mut name = o.file_name().unwrap_or_default().to_os_string();
            name.push(".manifest.jsonl");
            o.with_file_name(name)
        })
    });
    emit_manifest(seed, target, &manifest, started)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let msg = match &f {
                Failure::Usage(m) | Failure::Parse(m) | Failure::Check(m) | Failure::Io(m) => m,
            };
            eprintln!("qperc: {msg}");
            ExitCode::from(f.code())
        }
    }
}
