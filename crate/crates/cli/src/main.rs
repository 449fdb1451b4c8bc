use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gazekit::config::Config;
use gazekit::{GazeParams, NormalizedBBox};

mod field;
mod inspect;
mod score;

const EXIT_STATUS: &str = "\
Exit status:
  0  success
  1  I/O error: unreadable input, unwritable output
  2  validation error: bad arguments or config, malformed corpus lines,
     trace parse errors";

#[derive(Parser, Debug)]
#[command(name = "gazekit", version, about = "Gaze-steered attention toolkit", after_help = EXIT_STATUS)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Flat TOML config file.
    #[arg(long, global = true, env = "GAZEKIT_CONFIG")]
    config: Option<PathBuf>,
    /// Suppression strength (overrides the config).
    #[arg(long, global = true)]
    alpha_s: Option<f64>,
    /// Plateau falloff width (overrides the config).
    #[arg(long, global = true)]
    sigma: Option<f64>,
    /// Token grid as ROWSxCOLS (overrides the config; default 32x32).
    #[arg(long, global = true, value_parser = parse_grid)]
    grid: Option<(usize, usize)>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Score a JSONL corpus of {id, question, ground_truth, trace} records.
    Score {
        corpus: PathBuf,
        /// JSONL of {id, ground_truth}; takes precedence over record fields.
        #[arg(long)]
        ground_truth: Option<PathBuf>,
    },
    /// Write the accumulated bias field for a set of boxes.
    Biasfield {
        /// Box as x1,y1,x2,y2 in normalized coordinates. Repeatable.
        #[arg(long = "box", value_parser = parse_box)]
        boxes: Vec<NormalizedBBox>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Summarize the field over a list of suppression strengths.
    Sweep {
        #[arg(long = "box", value_parser = parse_box)]
        boxes: Vec<NormalizedBBox>,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "0,1,2,4,8,16,20",
            allow_hyphen_values = true
        )]
        alphas: Vec<f64>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Dump a trace's segments, stats and gaze events. Reads stdin when the
    /// path is absent or `-`.
    Parse { input: Option<PathBuf> },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
    Pgm,
}

#[derive(Debug)]
enum Failure {
    Io(String),
    Invalid(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Invalid(_) => 2,
        }
    }
}

fn io_failure(what: &str, path: &Path, e: io::Error) -> Failure {
    Failure::Io(format!("cannot {what} {}: {e}", path.display()))
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (r, c) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected ROWSxCOLS, got `{s}`"))?;
    let dim = |v: &str| match v.trim().parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(format!("grid dimension `{v}` must be a positive integer")),
    };
    Ok((dim(r)?, dim(c)?))
}

fn parse_box(s: &str) -> Result<NormalizedBBox, String> {
    let inner = s.trim().trim_start_matches('[').trim_end_matches(']');
    let coords: Vec<f64> = inner
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| format!("invalid coordinate `{}`", v.trim()))
        })
        .collect::<Result<_, _>>()?;
    let raw: [f64; 4] = coords
        .try_into()
        .map_err(|v: Vec<f64>| format!("expected 4 coordinates, found {}", v.len()))?;
    NormalizedBBox::try_from(raw).map_err(|e| e.to_string())
}

fn resolve_config(common: &Common) -> Result<Config, Failure> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| io_failure("read config", path, e))?;
            Config::from_toml_str(&text)
                .map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?
        }
        None => Config::default(),
    };
    if common.alpha_s.is_some() || common.sigma.is_some() {
        cfg.gaze = GazeParams::new(
            common.alpha_s.unwrap_or(cfg.gaze.alpha_s()),
            common.sigma.unwrap_or(cfg.gaze.sigma()),
        )
        .map_err(|e| Failure::Invalid(e.to_string()))?;
    }
    if let Some((rows, cols)) = common.grid {
        cfg.grid_rows = rows;
        cfg.grid_cols = cols;
    }
    Ok(cfg)
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, bytes).map_err(|e| io_failure("write", path, e)),
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(bytes)
                .and_then(|_| stdout.flush())
                .map_err(|e| Failure::Io(format!("cannot write stdout: {e}")))
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = resolve_config(&cli.common)?;
    let out = cli.common.out.as_deref();
    match cli.command {
        Command::Score {
            corpus,
            ground_truth,
        } => {
            let report = score::run(&corpus, ground_truth.as_deref(), &cfg)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            emit(out, report.body.as_bytes())?;
            if report.invalid_lines > 0 {
                return Err(Failure::Invalid(format!(
                    "{} corpus line(s) skipped",
                    report.invalid_lines
                )));
            }
            Ok(())
        }
        Command::Biasfield { boxes, format } => emit(out, &field::biasfield(&cfg, &boxes, format)?),
        Command::Sweep {
            boxes,
            alphas,
            format,
        } => emit(out, field::sweep(&cfg, &boxes, &alphas, format)?.as_bytes()),
        Command::Parse { input } => {
            let dump = inspect::run(input.as_deref().filter(|p| *p != Path::new("-")), &cfg)?;
            emit(out, dump.as_bytes())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Io(msg) | Failure::Invalid(msg) => eprintln!("error: {msg}"),
            }
            ExitCode::from(f.code())
        }
    }
}
