use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use coherent_projection::experiments::{self, ExperimentConfig, OutputFormat, Report, Suite};
use coherent_projection::Error;

#[derive(Parser)]
#[command(name = "cohproj", version, about = "Run and verify constrained coherent-state experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its result rows.
    Run {
        /// Experiment name (alternatively `--name`).
        experiment: Option<String>,
        /// Extra `key=value` parameter assignments.
        assignments: Vec<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        name: Option<String>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        format: Option<String>,
    },
    /// Print the experiment catalogue.
    List,
    /// Run the acceptance suite.
    Verify {
        #[arg(long, default_value = "fast")]
        suite: String,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Numeric(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Usage(m) | Error::Config(m) => Failure::Usage(m),
            other => Failure::Numeric(other.to_string()),
        }
    }
}

fn write_output(text: &str, out: Option<&PathBuf>) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn render(report: &Report, format: OutputFormat) -> Result<String, Failure> {
    Ok(match format {
        OutputFormat::Csv => report.to_csv(),
        OutputFormat::Json => report.to_json()? + "\n",
    })
}

#[allow(clippy::too_many_arguments)]
fn run(
    experiment: Option<String>,
    assignments: Vec<String>,
    config: Option<PathBuf>,
    name: Option<String>,
    set: Vec<String>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    format: Option<String>,
) -> Result<(), Failure> {
    let mut cfg = match config {
        Some(path) => {
            let text = std::fs::read_to_string(&path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
            ExperimentConfig::parse(&text)?
        }
        None => ExperimentConfig::default(),
    };
    let name = name
        .or(experiment)
        .or(cfg.name.clone())
        .ok_or_else(|| Failure::Usage("no experiment given; use --name or see `cohproj list`".into()))?;
    let exp = experiments::find(&name)?;
    for a in assignments.iter().chain(&set) {
        cfg.set(&name, a)?;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(f) = format {
        cfg.format = f.parse()?;
    }
    let out = out.or(cfg.output_path.clone());
    let report = exp.run(&cfg.section(&name), cfg.seed)?;
    write_output(&render(&report, cfg.format)?, out.as_ref())?;
    if report.passed() {
        Ok(())
    } else {
        let lines: Vec<String> = report
            .failing()
            .map(|r| format!("  {}: residual {:.3e} > tolerance {:.3e}", r.quantity, r.residual, r.tolerance))
            .collect();
        Err(Failure::Numeric(format!("{name} failed\n{}", lines.join("\n"))))
    }
}

fn verify(suite: String, set: Vec<String>, seed: Option<u64>, out: Option<PathBuf>) -> Result<(), Failure> {
    let suite: Suite = suite.parse()?;
    let mut overrides = BTreeMap::new();
    for a in &set {
        let mut cfg = ExperimentConfig::default();
        cfg.set("verify", a)?;
        overrides.extend(cfg.section("verify"));
    }
    let start = Instant::now();
    let results = experiments::verify(suite, &overrides, seed.unwrap_or(0));
    let mut table = String::from("criterion,pass,worst_residual_over_tolerance\n");
    let mut failing = Vec::new();
    for (exp, res) in &results {
        match res {
            Ok(report) => {
                let ok = report.passed();
                println!("{:<20} {}  worst residual/tolerance {:.3e}", exp.name, if ok { "PASS" } else { "FAIL" }, report.worst_ratio());
                for r in report.failing() {
                    println!("    {}: residual {:.3e} > tolerance {:.3e}", r.quantity, r.residual, r.tolerance);
                }
                table.push_str(&format!("{},{},{:.16e}\n", exp.name, ok, report.worst_ratio()));
                if !ok {
                    failing.push(exp.name);
                }
            }
            Err(e) => {
                println!("{:<20} FAIL  {e}", exp.name);
                table.push_str(&format!("{},false,inf\n", exp.name));
                failing.push(exp.name);
            }
        }
    }
    println!("elapsed {:.1} s", start.elapsed().as_secs_f64());
    if let Some(path) = out {
        std::fs::write(&path, table).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))?;
    }
    if failing.is_empty() {
        Ok(())
    } else {
        Err(Failure::Numeric(format!("failing: {}", failing.join(", "))))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { experiment, assignments, config, name, set, seed, out, format } => {
            run(experiment, assignments, config, name, set, seed, out, format)
        }
        Command::List => {
            for e in experiments::registry() {
                println!("{:<20} [{}] {}", e.name, e.anchor, e.description);
            }
            Ok(())
        }
        Command::Verify { suite, set, seed, out } => verify(suite, set, seed, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Numeric(m)) => {
            eprintln!("{m}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("usage error: {m}");
            ExitCode::from(2)
        }
    }
}
