//! Batch experiment runner.
//!
//! Reads one config, runs the named experiment, writes `report.json` and/or
//! `report.csv` into the output directory, and encodes the outcome in the
//! exit status: 0 pass, 1 fail, 2 inadmissible input, 3 config error,
//! 4 output error, 5 computation error. Diagnostics go to stderr with a
//! stable machine-readable code, `error[<code>]: message`.

mod config;

use clap::Parser;
use config::{
    parse_config, AxiomsConfig, CommandConfig, CorollaryConfig, ExperimentConfig, ExtractConfig,
    Format, ResidualConfig, RunConfig, Theorem26Config,
};
use serde_json::json;
use std::fs;
use std::path::{Path, PathBuf};
use ternlab::report::{
    axiom_csv, bound_checks_csv, certificates_csv, defect_csv, to_canonical_json,
};
use ternlab::stability::{ExtractionRecord, DEFAULT_N_MAX};
use ternlab::{
    check_algebra_axioms, corollary_bound, direct_method_point, residual_sup, run_theorem_2_5,
    run_theorem_2_6, AlgebraInstance, ControlFunction, Element, Error, ExperimentSpec, JIndex,
    Result, RhoParameter, Scalar, Verdict,
};

const EXIT_PASS: i32 = 0;
const EXIT_FAIL: i32 = 1;
const EXIT_INADMISSIBLE: i32 = 2;
const EXIT_CONFIG: i32 = 3;
const EXIT_OUTPUT: i32 = 4;
const EXIT_COMPUTE: i32 = 5;

#[derive(Parser)]
#[command(name = "ternlab", version, about = "Config-driven functional-equation stability runner")]
struct Cli {
    /// Path to a JSON or TOML config with a `schema_version` and `command`.
    #[arg(long)]
    config: PathBuf,

    /// Output directory for report files (overrides the config value).
    #[arg(long)]
    out: Option<PathBuf>,

    /// Comma-separated report formats: json,csv (overrides the config value).
    #[arg(long, value_delimiter = ',')]
    format: Option<Vec<String>>,

    /// Seed override applied to the experiment (and any grid without its own).
    #[arg(long)]
    seed: Option<u64>,
}

fn diagnostic(code: &str, message: &str) {
    eprintln!("error[{code}]: {message}");
}

/// What one command run produced: files to write plus the exit status.
struct Outcome {
    exit: i32,
    summary: String,
    json: serde_json::Value,
    csv: Option<String>,
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = Cli::parse();

    let text = match fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            diagnostic(
                "config-unreadable",
                &format!("cannot read {}: {e}", cli.config.display()),
            );
            return EXIT_CONFIG;
        }
    };
    let cfg: RunConfig = match parse_config(&text, &cli.config) {
        Ok(c) => c,
        Err(e) => {
            diagnostic("config-schema", &e);
            return EXIT_CONFIG;
        }
    };
    if let Err(e) = cfg.validate() {
        diagnostic("config-schema", &e.to_string());
        return EXIT_CONFIG;
    }

    let formats = match resolve_formats(&cli, &cfg) {
        Ok(f) => f,
        Err(msg) => {
            diagnostic("config-schema", &msg);
            return EXIT_CONFIG;
        }
    };
    let out_dir = cli
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    if let Err(e) = fs::create_dir_all(&out_dir) {
        diagnostic(
            "output-unwritable",
            &format!("cannot create {}: {e}", out_dir.display()),
        );
        return EXIT_OUTPUT;
    }

    let outcome = match dispatch(&cfg.command, cli.seed) {
        Ok(o) => o,
        Err(err) => {
            let (code, exit) = classify(&err);
            diagnostic(code, &err.to_string());
            if exit == EXIT_INADMISSIBLE {
                // Inadmissible inputs still leave a marker report behind.
                let marker = json!({
                    "verdict": Verdict::Inadmissible,
                    "error": err.to_string(),
                });
                let _ = write_reports(&out_dir, &formats, &marker, &None);
            }
            return exit;
        }
    };

    if let Err(e) = write_reports(&out_dir, &formats, &outcome.json, &outcome.csv) {
        diagnostic(
            "output-unwritable",
            &format!("cannot write into {}: {e}", out_dir.display()),
        );
        return EXIT_OUTPUT;
    }
    println!("{} -> {}", outcome.summary, out_dir.display());
    outcome.exit
}

fn resolve_formats(cli: &Cli, cfg: &RunConfig) -> std::result::Result<Vec<Format>, String> {
    if let Some(flags) = &cli.format {
        let mut out = Vec::new();
        for f in flags {
            match f.as_str() {
                "json" => out.push(Format::Json),
                "csv" => out.push(Format::Csv),
                other => return Err(format!("unknown format `{other}` (expected json or csv)")),
            }
        }
        if out.is_empty() {
            return Err("at least one format is required".into());
        }
        Ok(out)
    } else {
        Ok(cfg.formats.clone().unwrap_or_else(|| vec![Format::Json]))
    }
}

fn write_reports(
    dir: &Path,
    formats: &[Format],
    json: &serde_json::Value,
    csv: &Option<String>,
) -> Result<()> {
    if formats.contains(&Format::Json) {
        fs::write(dir.join("report.json"), to_canonical_json(json)?)?;
    }
    if formats.contains(&Format::Csv) {
        if let Some(csv) = csv {
            fs::write(dir.join("report.csv"), csv)?;
        }
    }
    Ok(())
}

fn classify(err: &Error) -> (&'static str, i32) {
    match err {
        Error::Inadmissible(_) => ("inadmissible", EXIT_INADMISSIBLE),
        Error::UnknownAlgebra(_) | Error::InvalidRho => ("config-schema", EXIT_CONFIG),
        Error::Io(_) => ("output-unwritable", EXIT_OUTPUT),
        Error::Divergence { .. } => ("divergence", EXIT_COMPUTE),
        _ => ("compute", EXIT_COMPUTE),
    }
}

fn dispatch(command: &CommandConfig, seed_override: Option<u64>) -> Result<Outcome> {
    match command {
        CommandConfig::Axioms(c) => run_axioms(c, seed_override),
        CommandConfig::Residual(c) => run_residual(c, seed_override),
        CommandConfig::Extract(c) => run_extract(c, seed_override),
        CommandConfig::Theorem25(c) => run_experiment_25(c, seed_override),
        CommandConfig::Theorem26(c) => run_experiment_26(c, seed_override),
        CommandConfig::Corollary(c) => run_corollary(c),
    }
}

fn parse_rho(rho: &Option<[f64; 2]>) -> Result<RhoParameter> {
    match rho {
        Some([re, im]) => RhoParameter::new(Scalar::new(*re, *im)),
        None => Ok(RhoParameter::default_real()),
    }
}

fn run_axioms(cfg: &AxiomsConfig, seed_override: Option<u64>) -> Result<Outcome> {
    let algebra: AlgebraInstance = cfg.algebra.parse()?;
    let seed = seed_override.or(cfg.seed).unwrap_or(0);
    let grid = cfg.grid.build(seed);
    let tol = cfg.tol.unwrap_or(1e-9);
    let report = check_algebra_axioms(&algebra, &grid, tol)?;
    let pass = report.all_pass;
    Ok(Outcome {
        exit: if pass { EXIT_PASS } else { EXIT_FAIL },
        summary: format!("axioms on {algebra}: {}", if pass { "PASS" } else { "FAIL" }),
        csv: Some(axiom_csv(&report)?),
        json: json!({ "command": "axioms", "report": report }),
    })
}

fn run_residual(cfg: &ResidualConfig, seed_override: Option<u64>) -> Result<Outcome> {
    let algebra: AlgebraInstance = cfg.algebra.parse()?;
    let j = JIndex::from_value(cfg.j)?;
    let rho = parse_rho(&cfg.rho)?;
    let handle = cfg.handle.build(algebra.clone());
    let seed = seed_override.or(cfg.seed).unwrap_or(0);
    let grid = cfg.grid.build(seed);
    let report = residual_sup(&handle, j, &rho, &grid, cfg.control.as_ref())?;
    let pass = cfg.tol.is_none_or(|t| report.max_defect <= t);
    Ok(Outcome {
        exit: if pass { EXIT_PASS } else { EXIT_FAIL },
        summary: format!(
            "residual sup {:.6e} on {algebra}: {}",
            report.max_defect,
            if pass { "PASS" } else { "FAIL" }
        ),
        csv: Some(defect_csv(&report)?),
        json: json!({
            "command": "residual",
            "algebra": algebra,
            "j": j,
            "rho": rho,
            "tol": cfg.tol,
            "grid": grid,
            "handle": handle,
            "report": report,
        }),
    })
}

fn run_extract(cfg: &ExtractConfig, seed_override: Option<u64>) -> Result<Outcome> {
    let algebra: AlgebraInstance = cfg.algebra.parse()?;
    let j = JIndex::from_value(cfg.j)?;
    let handle = cfg.handle.build(algebra.clone());
    let n_max = cfg.n_max.unwrap_or(DEFAULT_N_MAX);
    let tol = cfg.tol.unwrap_or(1e-12);
    let seed = seed_override.or(cfg.seed).unwrap_or(0);
    let points: Vec<Element> = match &cfg.points {
        Some(list) => list
            .iter()
            .map(|coords| Element::new(coords.iter().map(|p| Scalar::new(p[0], p[1])).collect()))
            .collect(),
        None => cfg.grid.build(seed).points(&algebra)?,
    };
    let mut records = Vec::with_capacity(points.len());
    let mut all_converged = true;
    for point in points {
        let certificate = direct_method_point(&handle, j, &point, n_max, tol)?;
        all_converged &= certificate.converged;
        records.push(ExtractionRecord {
            label: "extract".to_string(),
            point,
            certificate,
        });
    }
    Ok(Outcome {
        exit: if all_converged { EXIT_PASS } else { EXIT_FAIL },
        summary: format!(
            "extracted {} points on {algebra}: {}",
            records.len(),
            if all_converged { "PASS" } else { "FAIL" }
        ),
        csv: Some(certificates_csv(&records)?),
        json: json!({
            "command": "extract",
            "algebra": algebra,
            "j": j,
            "n_max": n_max,
            "tol": tol,
            "handle": handle,
            "certificates": records,
            "all_converged": all_converged,
        }),
    })
}

fn build_spec(cfg: &ExperimentConfig, seed_override: Option<u64>) -> Result<ExperimentSpec> {
    let algebra: AlgebraInstance = cfg.algebra.parse()?;
    let seed = seed_override.unwrap_or(cfg.seed);
    Ok(ExperimentSpec {
        algebra: algebra.clone(),
        j: JIndex::from_value(cfg.j)?,
        rho: parse_rho(&cfg.rho)?,
        base: cfg.base.build(algebra),
        perturbation: ControlFunction::power_delta(cfg.perturbation.s, cfg.perturbation.r),
        seed,
        grid: cfg.grid.build(seed),
        tolerances: cfg.tolerances.unwrap_or_default(),
        n_max: cfg.n_max.unwrap_or(DEFAULT_N_MAX),
    })
}

fn experiment_outcome(report: ternlab::StabilityReport) -> Result<Outcome> {
    let exit = match report.verdict {
        Verdict::Pass => EXIT_PASS,
        Verdict::Fail => EXIT_FAIL,
        Verdict::Inadmissible => EXIT_INADMISSIBLE,
    };
    Ok(Outcome {
        exit,
        summary: format!("{}: {}", report.experiment, report.verdict),
        csv: Some(bound_checks_csv(&report)?),
        json: serde_json::to_value(&report)?,
    })
}

fn run_experiment_25(cfg: &ExperimentConfig, seed_override: Option<u64>) -> Result<Outcome> {
    let spec = build_spec(cfg, seed_override)?;
    experiment_outcome(run_theorem_2_5(&spec)?)
}

fn run_experiment_26(cfg: &Theorem26Config, seed_override: Option<u64>) -> Result<Outcome> {
    let spec = build_spec(&cfg.experiment, seed_override)?;
    let base_der = cfg.base_der.build(spec.algebra.clone());
    let sigma = ControlFunction::power_sigma(cfg.sigma.s, cfg.sigma.r);
    let delta_der = cfg
        .perturbation_der
        .as_ref()
        .map(|p| ControlFunction::power_delta(p.s, p.r));
    experiment_outcome(run_theorem_2_6(&spec, &base_der, &sigma, delta_der.as_ref())?)
}

fn run_corollary(cfg: &CorollaryConfig) -> Result<Outcome> {
    let j = JIndex::from_value(cfg.j)?;
    let bound = corollary_bound(cfg.s, cfg.r, j)?;
    Ok(Outcome {
        exit: EXIT_PASS,
        summary: format!("corollary constant {:.6e}", bound.constant),
        csv: Some(format!(
            "constant,case_note\n{},{}\n",
            ternlab::report::fmt_f64(bound.constant),
            csv_quote(&bound.case_note)
        )),
        json: json!({
            "command": "corollary",
            "s": cfg.s,
            "r": cfg.r,
            "j": j,
            "constant": bound.constant,
            "case_note": bound.case_note,
        }),
    })
}

fn csv_quote(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
