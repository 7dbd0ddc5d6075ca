mod commands;
mod mask;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use zii_core::{parse_density_spec, DensityFamily, Error, ErrorClass};

use commands::{MaskFormat, Output};
use report::{RunReport, SpecSource};

#[derive(Parser)]
#[command(name = "zii", version, about = "Zeros in the inverse of bivariate moment matrices")]
struct Cli {
    /// Append wall-clock timing to the report.
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TextFormat {
    Text,
    Json,
}

#[derive(clap::Args)]
struct SpecArgs {
    /// Density spec file (TOML).
    #[arg(long)]
    spec: PathBuf,
    /// Write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// What goes to stdout.
    #[arg(long, value_enum, default_value = "text")]
    format: TextFormat,
}

#[derive(Subcommand)]
enum Command {
    /// Print the ZII mask of a degree.
    Mask {
        #[arg(long)]
        degree: u32,
        #[arg(long, value_enum, default_value = "ascii")]
        format: MaskFormat,
        /// Write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Truncated moment matrix.
    Matrix {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        degree: u32,
    },
    /// Exact inverse as adjugate over determinant.
    Inverse {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        degree: u32,
    },
    /// ZII equations at one degree.
    Equations {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        degree: u32,
    },
    /// Smallest degree at which the ZII equations force independence.
    Collapse {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        max_degree: u32,
        /// Witnesses listed per degree.
        #[arg(long, default_value_t = 8)]
        witnesses: usize,
    },
    /// Product form, moment factorization and numeric ZII residuals at a point.
    Check {
        #[command(flatten)]
        spec: SpecArgs,
        /// Parameter values, `name=value,...`.
        #[arg(long, default_value = "")]
        at: String,
        #[arg(long, default_value_t = 2)]
        degree: u32,
    },
    /// Canonical form of a spec file.
    Render {
        #[command(flatten)]
        spec: SpecArgs,
    },
}

fn exit_code(class: ErrorClass) -> u8 {
    match class {
        ErrorClass::Parse => 2,
        ErrorClass::Singular => 3,
        ErrorClass::Unsupported => 4,
        ErrorClass::Constraint => 5,
        ErrorClass::Internal => 1,
    }
}

fn load(path: &Path) -> Result<(DensityFamily, SpecSource), Error> {
    let bytes = std::fs::read(path).map_err(|e| Error::Usage(format!("{}: {e}", path.display())))?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| Error::Usage(format!("{}: not UTF-8", path.display())))?;
    let family = parse_density_spec(&text)?;
    Ok((family, SpecSource::new(&path.display().to_string(), &bytes)))
}

fn setup_threads() -> Result<(), Error> {
    let Ok(v) = std::env::var("ZII_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| Error::Usage(format!("ZII_THREADS: `{v}` is not a thread count")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Usage(format!("ZII_THREADS: {e}")))
}

struct Run {
    command: &'static str,
    spec: Option<SpecSource>,
    output: Output,
    out: Option<PathBuf>,
    json_stdout: bool,
    // SVG goes to stdout untouched.
    raw: bool,
}

fn run(cli: Cli) -> Result<Run, Error> {
    let with_spec = |s: &SpecArgs,
                     command: &'static str,
                     f: &dyn Fn(&DensityFamily) -> Result<Output, Error>|
     -> Result<Run, Error> {
        let (family, source) = load(&s.spec)?;
        Ok(Run {
            command,
            spec: Some(source),
            output: f(&family)?,
            out: s.out.clone(),
            json_stdout: s.format == TextFormat::Json,
            raw: false,
        })
    };
    match cli.command {
        Command::Mask { degree, format, out } => Ok(Run {
            command: "mask",
            spec: None,
            output: commands::mask(degree, format)?,
            out,
            json_stdout: false,
            raw: format == MaskFormat::Svg,
        }),
        Command::Matrix { spec, degree } => with_spec(&spec, "matrix", &|f| commands::matrix(f, degree)),
        Command::Inverse { spec, degree } => with_spec(&spec, "inverse", &|f| commands::inverse(f, degree)),
        Command::Equations { spec, degree } => with_spec(&spec, "equations", &|f| commands::equations(f, degree)),
        Command::Collapse {
            spec,
            max_degree,
            witnesses,
        } => with_spec(&spec, "collapse", &|f| commands::collapse(f, max_degree, witnesses)),
        Command::Check { spec, at, degree } => with_spec(&spec, "check", &|f| commands::check(f, &at, degree)),
        Command::Render { spec } => with_spec(&spec, "render", &|f| {
            let text = zii_core::render_spec(f);
            Ok(Output {
                payload: serde_json::json!({ "spec": text }),
                text,
            })
        }),
    }
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let cli = Cli::parse();
    let timing = cli.timing;
    let start = Instant::now();
    let result = setup_threads().and_then(|()| run(cli));
    let run = match result {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(e.class()));
        }
    };
    let report = RunReport {
        command: run.command.to_string(),
        invocation: std::iter::once("zii".to_string())
            .chain(args)
            .collect::<Vec<_>>()
            .join(" "),
        spec: run.spec,
        text: run.output.text,
        payload: run.output.payload,
        timing_ms: timing.then(|| start.elapsed().as_secs_f64() * 1e3),
    };
    if let Some(path) = &run.out {
        if let Err(e) = std::fs::write(path, report.json_text()) {
            eprintln!("error: {}: {e}", path.display());
            return ExitCode::from(1);
        }
    }
    if run.json_stdout {
        print!("{}", report.json_text());
    } else if run.raw {
        print!("{}", report.text);
    } else {
        print!("{}", report.human_text());
    }
    ExitCode::SUCCESS
}
