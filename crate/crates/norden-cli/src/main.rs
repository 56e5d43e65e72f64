//! Command-line verification harness: load or generate instances, run the
//! check registry, emit text or JSON reports.
//!
//! Exit codes: 0 = all checks pass, 1 = at least one check failed,
//! 2 = usage, IO or malformed-model error. `not_applicable` outcomes are
//! counted in the summary but never affect the exit code.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use norden::forge::{self, InstanceRecipe, RecipeKind};
use norden::model::{load_model, validate, validate_strict};
use norden::report::{self, VerificationReport};
use norden::{NordenError, Tolerances};

#[derive(Debug, Parser)]
#[command(name = "norden", version)]
#[command(about = "verify connection and curvature identities on almost complex manifolds with Norden metric")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate the structure axioms of a model file
    Validate {
        file: PathBuf,
    },
    /// Run the verification registry against a model file
    Verify {
        file: PathBuf,
        /// Comma-separated check ids (default: all)
        #[arg(long, value_delimiter = ',')]
        checks: Vec<String>,
        /// Write the JSON report here instead of printing text
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Generate an instance and write it as a model file
    Generate {
        /// flat | random_norden | quasi_kahler_search | isotropic_search | parallel_torsion_search
        #[arg(long)]
        kind: String,
        /// Even dimension 2n
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        budget: u64,
        /// Output path; when inside a corpus directory the MANIFEST is updated
        #[arg(long)]
        out: PathBuf,
    },
    /// Verify every model file in a corpus directory
    CorpusRun {
        dir: PathBuf,
        /// Write the merged JSON report here
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Re-render a stored JSON report
    Report {
        file: PathBuf,
        #[arg(long, default_value = "text")]
        format: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, NordenError> {
    let tols = Tolerances::from_env();
    match cli.command {
        Command::Validate { file } => {
            let (structure, frame, _) = load_model(&file)?;
            let outcome = validate(&structure, &frame, &tols)?;
            if outcome.is_valid() {
                println!("{}: valid Norden structure", file.display());
                Ok(ExitCode::SUCCESS)
            } else {
                for v in outcome.violations() {
                    println!(
                        "violated: {} (residual {:.3e}, tolerance {:.3e})",
                        v.invariant, v.residual, v.tolerance
                    );
                }
                Ok(ExitCode::from(1))
            }
        }
        Command::Verify { file, checks, json } => {
            let (structure, frame, provenance) = load_model(&file)?;
            // verification presumes a valid instance; invalid input is a
            // usage-class error (exit 2), surfaced via Err
            validate_strict(&structure, &frame, &tols)?;
            let name = file.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let only = if checks.is_empty() { None } else { Some(checks.as_slice()) };
            for id in &checks {
                if report::check_spec(id).is_none() {
                    return Err(NordenError::ModelFormat(format!("unknown check id `{id}`")));
                }
            }
            let rep = report::verify_instance(&name, &structure, &frame, provenance, tols, only)?;
            match json {
                Some(path) => std::fs::write(path, rep.to_json()? + "\n")?,
                None => print!("{}", rep.render_text()),
            }
            Ok(if rep.all_pass() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Generate { kind, dim, seed, budget, out } => {
            let kind = RecipeKind::parse(&kind)
                .ok_or_else(|| NordenError::ModelFormat(format!("unknown kind `{kind}`")))?;
            let name = out
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "instance".into());
            let recipe = InstanceRecipe { name, kind, dim, seed, search_budget: budget };
            let dir = out.parent().unwrap_or(Path::new("."));
            // search recipes may legitimately find nothing
            match kind {
                RecipeKind::IsotropicSearch => {
                    let res = forge::isotropic_search(dim / 2, seed, budget)?;
                    if res.instance.is_none() {
                        println!("not found, best residual {:.3e}", res.best_residual);
                        return Ok(ExitCode::SUCCESS);
                    }
                }
                RecipeKind::ParallelTorsionSearch => {
                    let res = forge::parallel_torsion_search(dim / 2, seed, budget)?;
                    if res.instance.is_none() {
                        println!("not found, best residual {:.3e}", res.best_residual);
                        return Ok(ExitCode::SUCCESS);
                    }
                }
                _ => {}
            }
            match forge::emit_into_corpus(dir, &recipe)? {
                Some(path) => {
                    println!("wrote {}", path.display());
                    Ok(ExitCode::SUCCESS)
                }
                None => {
                    println!("not found");
                    Ok(ExitCode::SUCCESS)
                }
            }
        }
        Command::CorpusRun { dir, json } => {
            let mut names: Vec<PathBuf> = std::fs::read_dir(&dir)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().map(|x| x == "json").unwrap_or(false))
                .collect();
            names.sort();
            if names.is_empty() {
                return Err(NordenError::ModelFormat(format!(
                    "no model files in {}",
                    dir.display()
                )));
            }
            let mut reports: Vec<VerificationReport> = Vec::new();
            let mut any_fail = false;
            for path in &names {
                let (structure, frame, provenance) = load_model(path)?;
                validate_strict(&structure, &frame, &tols)?;
                let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                let rep = report::verify_instance(&name, &structure, &frame, provenance, tols, None)?;
                any_fail |= !rep.all_pass();
                println!(
                    "{name}: {} pass, {} fail, {} n/a",
                    rep.summary.pass, rep.summary.fail, rep.summary.not_applicable
                );
                reports.push(rep);
            }
            if let Some(path) = json {
                let text = serde_json::to_string_pretty(&reports)?;
                std::fs::write(path, text + "\n")?;
            }
            Ok(if any_fail { ExitCode::from(1) } else { ExitCode::SUCCESS })
        }
        Command::Report { file, format } => {
            let text = std::fs::read_to_string(&file)?;
            // accept a single report or a corpus-run array
            let reports: Vec<VerificationReport> = match VerificationReport::from_json(&text) {
                Ok(r) => vec![r],
                Err(_) => serde_json::from_str(&text)?,
            };
            match format.as_str() {
                "json" => {
                    let out = if reports.len() == 1 {
                        reports[0].to_json()?
                    } else {
                        serde_json::to_string_pretty(&reports)?
                    };
                    println!("{out}");
                }
                "text" => {
                    for r in &reports {
                        print!("{}", r.render_text());
                    }
                }
                other => {
                    return Err(NordenError::ModelFormat(format!("unknown format `{other}`")));
                }
            }
            let any_fail = reports.iter().any(|r| !r.all_pass());
            Ok(if any_fail { ExitCode::from(1) } else { ExitCode::SUCCESS })
        }
    }
}
