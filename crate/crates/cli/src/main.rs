//! `swcurve`: fit Smith-Wilson discount curves from an instruments CSV and
//! export them on a term mesh.

mod failure;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use smithwilson::curve::ufr_from_annual;
use smithwilson::marketio::export_compare;

use failure::{Failure, EXIT_VALIDATION};
use run::{Input, MeshSpec, Method, Model};

#[derive(Parser)]
#[command(name = "swcurve", version, about = "Smith-Wilson yield curves from par swaps, zero-coupon bonds and cash-flow schedules")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one curve and write it with its diagnostics.
    Fit(FitArgs),
    /// Fit several variants on the same instruments and write them side by side.
    Compare(CompareArgs),
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct UfrArgs {
    /// Ultimate forward rate, annually compounded (0.039 for 3.9%).
    #[arg(long)]
    ufr_annual: Option<f64>,
    /// Ultimate forward rate, continuously compounded.
    #[arg(long)]
    ufr_continuous: Option<f64>,
}

impl UfrArgs {
    fn f_inf(&self) -> f64 {
        match (self.ufr_annual, self.ufr_continuous) {
            (Some(a), _) => ufr_from_annual(a),
            (None, Some(c)) => c,
            (None, None) => unreachable!("clap requires one UFR flag"),
        }
    }
}

#[derive(Args)]
struct ModelArgs {
    /// Convergence speed.
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[command(flatten)]
    ufr: UfrArgs,
    /// Convergence term T2 (finite method only).
    #[arg(long)]
    t2: Option<f64>,
    /// Liquidity weight scale C: R in (0,1) maps to weight -C ln(1-R).
    #[arg(long = "C", default_value_t = 1.0)]
    scale: f64,
    /// Drop the instrument with this id before fitting (repeatable).
    #[arg(long)]
    exclude: Vec<String>,
}

#[derive(Args)]
struct MeshArgs {
    #[arg(long)]
    mesh_start: Option<f64>,
    /// Defaults to max(T2, 60).
    #[arg(long)]
    mesh_end: Option<f64>,
    #[arg(long)]
    mesh_step: Option<f64>,
}

impl MeshArgs {
    fn spec(&self) -> MeshSpec {
        MeshSpec {
            start: self.mesh_start,
            end: self.mesh_end,
            step: self.mesh_step,
        }
    }
}

#[derive(Args)]
struct FitArgs {
    #[arg(long, value_parser = ["classic", "weighted", "finite"])]
    method: String,
    #[command(flatten)]
    model: ModelArgs,
    /// Instruments CSV.
    #[arg(long = "in")]
    input: PathBuf,
    /// Curve CSV to write.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    mesh: MeshArgs,
    /// Diagnostics JSON to write; defaults to diagnostics.json next to --out.
    #[arg(long)]
    diagnostics: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Variant as label:method[:key=value,...]; keys alpha, ufr_annual,
    /// ufr_continuous, t2, C, exclude, mesh_end, mesh_step (repeatable).
    #[arg(long = "variant", required = true)]
    variants: Vec<String>,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    mesh: MeshArgs,
    /// Optional JSON with the diagnostics of every variant.
    #[arg(long)]
    diagnostics: Option<PathBuf>,
}

fn base_model(method: Method, m: &ModelArgs) -> Model {
    Model {
        method,
        alpha: m.alpha,
        f_inf: m.ufr.f_inf(),
        t2: m.t2,
        scale: m.scale,
        exclude: m.exclude.clone(),
    }
}

fn cmd_fit(args: &FitArgs) -> Result<(), Failure> {
    let method = Method::parse(&args.method).expect("clap restricts the method");
    let model = base_model(method, &args.model);
    model.validate()?;
    let input = Input::read(&args.input)?;
    let outcome = run::fit(&input, &model)?;
    let table = outcome.table(&args.mesh.spec(), model.t2)?;
    let diag_path = args.diagnostics.clone().unwrap_or_else(|| {
        args.out
            .parent()
            .map(|d| d.join("diagnostics.json"))
            .unwrap_or_else(|| PathBuf::from("diagnostics.json"))
    });
    run::write(&args.out, &table.to_csv())?;
    run::write(&diag_path, &run::pretty(&outcome.diagnostics))
}

fn cmd_compare(args: &CompareArgs) -> Result<(), Failure> {
    let base = base_model(Method::Classic, &args.model);
    let mut variants = args
        .variants
        .iter()
        .map(|v| run::parse_variant(v, &base, args.mesh.spec()))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(v) = variants.iter().enumerate().find_map(|(i, v)| {
        variants[..i].iter().any(|w| w.label == v.label).then_some(&v.label)
    }) {
        return Err(Failure::validation(format!("duplicate variant label '{v}'")));
    }
    // One shared default end so variants with different T2 still align.
    let shared_end = variants
        .iter()
        .filter_map(|v| v.model.t2)
        .fold(60.0_f64, f64::max);
    for v in &mut variants {
        v.mesh.end.get_or_insert(shared_end);
    }

    let input = Input::read(&args.input)?;
    let mut tables = Vec::with_capacity(variants.len());
    let mut diagnostics = Vec::with_capacity(variants.len());
    for v in &variants {
        let outcome = run::fit(&input, &v.model)?;
        tables.push((v.label.clone(), outcome.table(&v.mesh, v.model.t2)?));
        let mut d = outcome.diagnostics;
        d["label"] = json!(v.label);
        diagnostics.push(d);
    }
    let csv = export_compare(&tables)?;
    run::write(&args.out, &csv)?;
    if let Some(path) = &args.diagnostics {
        run::write(path, &run::pretty(&Value::Array(diagnostics)))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version.
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let message = text
                .lines()
                .take_while(|l| !l.starts_with("Usage:"))
                .map(|l| l.trim().trim_start_matches("error: "))
                .filter(|l| !l.is_empty())
                .collect::<Vec<_>>()
                .join(" ");
            let line = json!({ "error": "usage", "message": message, "exit_code": EXIT_VALIDATION });
            eprintln!("{line}");
            return ExitCode::from(EXIT_VALIDATION as u8);
        }
    };
    let result = match &cli.command {
        Command::Fit(args) => cmd_fit(args),
        Command::Compare(args) => cmd_compare(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.to_json_line());
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
