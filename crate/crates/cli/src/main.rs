use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use holonomy_cli::{
    cmd_coeffs, cmd_degree, cmd_example, cmd_frame, cmd_holonomy, cmd_regularity, cmd_singular, cmd_variation,
    load_model, Outcome, Settings, EXIT_ERROR,
};

#[derive(Parser)]
#[command(name = "holonomy", version, about = "Degree, admissibility and holonomy analysis of ruled submanifolds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Length of the characteristic cylinder.
    #[arg(long)]
    eps: Option<f64>,
    /// RK4 steps along each characteristic (even, at least 4).
    #[arg(long)]
    steps: Option<usize>,
    /// Slice grid points per dimension.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    tol_rank: Option<f64>,
    #[arg(long)]
    tol_cert: Option<f64>,
    #[arg(long)]
    tol_deg: Option<f64>,
    /// Write the JSON report here instead of stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Write the main table as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

impl Common {
    fn settings(&self) -> Settings {
        Settings {
            eps: self.eps,
            steps: self.steps,
            grid: self.grid,
            tol_rank: self.tol_rank,
            tol_cert: self.tol_cert,
            tol_deg: self.tol_deg,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Pointwise and global degree, flag, singular points and degree area.
    Degree {
        model: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Adapted tangent/complement split on the slice.
    Frame {
        model: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Coefficients A and B of the admissibility system at every node.
    Coeffs {
        model: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Holonomy map applied to controls from the model or a CSV file.
    Holonomy {
        model: PathBuf,
        /// Node controls with columns `i, j1.., g<idx>..`.
        #[arg(long)]
        controls: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Regularity verdict; exits with 2 when singular.
    Regularity {
        model: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Certificates of singularity.
    Singular {
        model: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Degree excess of the variation along the probe in `[controls]`.
    Variation {
        model: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Runs a built-in model.
    Example {
        #[arg(value_parser = ["engel-plane", "visual-cortex", "heisenberg"])]
        name: String,
        /// Angle function for visual-cortex, in x and y.
        #[arg(long, default_value = "x")]
        theta: String,
        /// Dimension parameter for heisenberg.
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[command(flatten)]
        common: Common,
    },
}

fn run(cli: Cli) -> holonomy_core::Result<(Outcome, Common)> {
    let with_model = |path: &PathBuf, common: &Common, f: &dyn Fn(&holonomy_cli::Loaded) -> holonomy_core::Result<Outcome>| {
        let loaded = load_model(path, &common.settings()).map_err(|e| match e {
            holonomy_core::Error::Model { line, message } => {
                holonomy_core::Error::Invalid(format!("{}:{line}: {message}", path.display()))
            }
            other => other,
        })?;
        Ok((f(&loaded)?, common.clone()))
    };
    match cli.command {
        Command::Degree { model, common } => with_model(&model, &common, &|l| cmd_degree(&l.model)),
        Command::Frame { model, common } => with_model(&model, &common, &|l| cmd_frame(&l.model)),
        Command::Coeffs { model, common } => with_model(&model, &common, &|l| cmd_coeffs(&l.model)),
        Command::Holonomy { model, controls, common } => {
            with_model(&model, &common, &|l| cmd_holonomy(&l.model, controls.as_deref(), &l.base))
        }
        Command::Regularity { model, common } => with_model(&model, &common, &|l| cmd_regularity(&l.model)),
        Command::Singular { model, common } => with_model(&model, &common, &|l| cmd_singular(&l.model)),
        Command::Variation { model, common } => with_model(&model, &common, &|l| cmd_variation(&l.model)),
        Command::Example { name, theta, n, common } => {
            Ok((cmd_example(&name, &theta, n, &common.settings())?, common))
        }
    }
}

fn emit(outcome: &Outcome, common: &Common) -> std::io::Result<()> {
    let json = serde_json::to_string_pretty(&outcome.report).expect("report serializes");
    match &common.output {
        Some(path) => std::fs::write(path, json + "\n")?,
        None => writeln!(std::io::stdout().lock(), "{json}")?,
    }
    if let (Some(path), Some(table)) = (&common.csv, &outcome.table) {
        std::fs::write(path, table)?;
    }
    eprintln!("{}", outcome.summary);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok((outcome, common)) => {
            if let Err(e) = emit(&outcome, &common) {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_ERROR as u8);
            }
            ExitCode::from(outcome.code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
