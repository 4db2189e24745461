use clap::{Args, Parser, Subcommand, ValueEnum};
use fan_cd::flag::{cd_index_of, flag_h};
use fan_cd::lefschetz::lab::{conjecture_lab, Experiment};
use fan_cd::lefschetz::{cd_index_lefschetz, EngineError};
use fan_cd::poset::{FamilyRegistry, GradedPoset};
use fan_cd::report::{cd_tsv, emit_report, render, CdIndexReport, LefschetzReport, RunConfig};
use fan_cd::verify::run_suite;
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "fan-cd", version, about = "cd-index of complete fans from flag vectors and Lefschetz decompositions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the face poset of a built-in fan.
    Gen {
        #[arg(long)]
        family: String,
        /// Dimension, or number of rays for polygons.
        #[arg(long)]
        dim: usize,
        #[arg(short = 'o', long = "json")]
        output: Option<PathBuf>,
    },
    /// Compute the cd-index.
    CdIndex {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum, default_value_t = Method::Flag)]
        method: Method,
        #[command(flatten)]
        opts: Opts,
    },
    /// Run the recursive decomposition and print its certificate.
    Lefschetz {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        opts: Opts,
    },
    /// Run the full invariant suite.
    Verify {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        opts: Opts,
    },
    /// Randomized experiments.
    Lab {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, value_enum, default_value_t = ExperimentArg::Lefschetz)]
        experiment: ExperimentArg,
        #[command(flatten)]
        opts: Opts,
    },
}

#[derive(Args)]
struct Input {
    /// Poset JSON file.
    poset: Option<PathBuf>,
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
}

#[derive(Args)]
struct Opts {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 8)]
    retries: usize,
    #[arg(long, default_value_t = 10_000)]
    entry_bound: i64,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long, default_value_t = fan_cd::poset::DEFAULT_DIM_CAP)]
    dim_cap: usize,
    #[arg(short = 'o', long = "json")]
    output: Option<PathBuf>,
    /// Print `word<TAB>coeff` lines instead of JSON.
    #[arg(long)]
    tsv: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Flag,
    Lefschetz,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Generic,
    Multiplication,
    Torus,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExperimentArg {
    Lefschetz,
    Transversality,
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Mode::Generic => "generic",
            Mode::Multiplication => "multiplication",
            Mode::Torus => "torus",
        }
    }
}

impl Opts {
    fn config(&self, default_mode: Mode) -> RunConfig {
        RunConfig {
            seed: self.seed,
            retries: self.retries,
            entry_bound: self.entry_bound,
            mode: self.mode.unwrap_or(default_mode).name().into(),
            dim_cap: self.dim_cap,
            output: self.output.as_ref().map(|p| p.display().to_string()),
        }
    }
}

/// A failure with its exit code.
struct Failure(u8, String);

impl From<EngineError> for Failure {
    fn from(e: EngineError) -> Self {
        Failure(e.exit_code() as u8, e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure(1, e.to_string())
    }
}

fn build_family(family: &str, dim: usize) -> Result<GradedPoset, Failure> {
    let reg = FamilyRegistry::standard();
    let f = reg
        .get(family)
        .ok_or_else(|| Failure(1, format!("unknown family '{family}' (known: {})", reg.names().join(", "))))?;
    f.build(dim).map_err(|e| Failure(1, e.to_string()))
}

/// Loads and validates the input; invalid posets print their diagnostics.
fn load(input: &Input, cap: usize) -> Result<GradedPoset, Failure> {
    let p = match (&input.poset, &input.family, input.dim) {
        (Some(path), None, None) => GradedPoset::ingest(path).map_err(|e| Failure(1, e.to_string()))?,
        (None, Some(f), Some(d)) => build_family(f, d)?,
        _ => return Err(Failure(1, "give either a poset file or --family with --dim".into())),
    };
    p.check_dim_cap(cap).map_err(|e| Failure(1, e.to_string()))?;
    let report = p.validate();
    if !report.all_passed() {
        let text = serde_json::to_string_pretty(&json!({ "poset": p.name(), "validation": report })).expect("json");
        eprintln!("{text}");
        return Err(Failure(1, format!("validation failed: {}", report.failure_summary())));
    }
    Ok(p)
}

fn write(cfg: &RunConfig, text: &str) -> Result<(), Failure> {
    emit_report(text, cfg.output.as_deref().map(std::path::Path::new))?;
    Ok(())
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Gen { family, dim, output } => {
            let p = build_family(&family, dim)?;
            emit_report(&(p.to_json() + "\n"), output.as_deref())?;
            Ok(0)
        }
        Command::CdIndex { input, method, opts } => {
            let cfg = opts.config(Mode::Generic);
            let p = load(&input, cfg.dim_cap)?;
            let h = flag_h(&p).map_err(|e| Failure(1, e.to_string()))?;
            let flag_cd = cd_index_of(&p).map_err(|e| Failure(1, e.to_string()))?;
            let (name, rank) = (p.name().to_string(), p.rank_n());
            let (report, code, shown) = match method {
                Method::Flag => (CdIndexReport::new(&name, rank, "flag", &h, &flag_cd), 0, flag_cd),
                Method::Lefschetz => {
                    let out = cd_index_lefschetz(&p, &cfg.params())?;
                    let mut r = CdIndexReport::new(&name, rank, "lefschetz", &h, &out.cd);
                    r.certificate = Some(out.certificate);
                    (r, 0, out.cd)
                }
                Method::Both => {
                    let out = cd_index_lefschetz(&p, &cfg.params())?;
                    let agree = out.cd == flag_cd;
                    let mut r = CdIndexReport::new(&name, rank, "both", &h, &flag_cd);
                    r.lefschetz_cd_index = Some(out.cd.json_terms());
                    r.agree = Some(agree);
                    r.certificate = Some(out.certificate);
                    if !agree {
                        eprintln!("cd-index mismatch: flag {flag_cd}, lefschetz {}", out.cd);
                    }
                    (r, if agree { 0 } else { 4 }, flag_cd)
                }
            };
            let text = if opts.tsv { cd_tsv(&shown) } else { render(&cfg, &report) };
            write(&cfg, &text)?;
            Ok(code)
        }
        Command::Lefschetz { input, opts } => {
            let cfg = opts.config(Mode::Generic);
            let p = load(&input, cfg.dim_cap)?;
            let out = cd_index_lefschetz(&p, &cfg.params())?;
            let text = if opts.tsv {
                cd_tsv(&out.cd)
            } else {
                render(&cfg, &LefschetzReport { poset: p.name().into(), certificate: out.certificate })
            };
            write(&cfg, &text)?;
            Ok(0)
        }
        Command::Verify { input, opts } => {
            let cfg = opts.config(Mode::Generic);
            let p = load(&input, cfg.dim_cap)?;
            let rep = run_suite(&p, &cfg.params())?;
            write(&cfg, &render(&cfg, &rep))?;
            Ok(if rep.passed { 0 } else { 4 })
        }
        Command::Lab { input, trials, experiment, opts } => {
            let cfg = opts.config(Mode::Multiplication);
            let experiment = match experiment {
                ExperimentArg::Lefschetz => Experiment::Lefschetz,
                ExperimentArg::Transversality => Experiment::Transversality,
            };
            let p = match experiment {
                Experiment::Lefschetz => Some(load(&input, cfg.dim_cap)?),
                Experiment::Transversality => None,
            };
            let rep = conjecture_lab(p.as_ref(), experiment, trials, &cfg.params(), 2 * cfg.dim_cap)?;
            let text = if trials == 0 {
                serde_json::to_string(&rep.to_json()).expect("json") + "\n"
            } else {
                render(&cfg, &rep)
            };
            write(&cfg, &text)?;
            Ok(rep.exit_code() as u8)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
