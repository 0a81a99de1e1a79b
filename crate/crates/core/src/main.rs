use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use regcheck::checker::{prepare, read_report_json, run_check, write_bcf, write_report_json, CheckConfig, Stage};
use regcheck::dsl::{lint_pack, load_pack_path, pack_directory, RulePack};

#[derive(Parser)]
#[command(name = "regcheck", version, about = "Check building models against rule packs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum StageArg {
    Lifted,
    Geom,
    Inferred,
}

#[derive(Subcommand)]
enum Command {
    /// Run a rule pack against a model.
    Check {
        model: PathBuf,
        /// Pack ZIP or directory. Defaults to the built-in pack.
        #[arg(long)]
        pack: Option<PathBuf>,
        /// Comma-separated topics to run.
        #[arg(long, value_delimiter = ',')]
        topics: Option<Vec<String>>,
        /// Report path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        bcf: Option<PathBuf>,
        #[arg(long)]
        lift_config: Option<PathBuf>,
        /// Ground datum in meters.
        #[arg(long, allow_negative_numbers = true)]
        ground_datum: Option<f64>,
        /// Record real rule runtimes instead of zeros.
        #[arg(long)]
        timings: bool,
    },
    /// Write the model's triples as N-Triples.
    Convert {
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "inferred")]
        stage: StageArg,
        #[arg(long)]
        lift_config: Option<PathBuf>,
        #[arg(long, allow_negative_numbers = true)]
        ground_datum: Option<f64>,
    },
    /// Load a pack and print static warnings.
    LintRules { pack: PathBuf },
    /// Print one rule's findings from a report.
    Explain { report: PathBuf, rule: String },
    /// Zip a pack directory.
    BuildPack { dir: PathBuf, out: PathBuf },
}

fn load(pack: Option<&Path>) -> Result<RulePack> {
    match pack {
        None => Ok(RulePack::builtin_default()),
        Some(p) => load_pack_path(p).with_context(|| format!("loading pack {}", p.display())),
    }
}

fn write_out(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Check {
            model,
            pack,
            topics,
            out,
            bcf,
            lift_config,
            ground_datum,
            timings,
        } => {
            let pack = load(pack.as_deref())?;
            let config = CheckConfig {
                topics: topics.map(|t| t.into_iter().map(|s| s.trim().to_string()).collect::<BTreeSet<_>>()),
                ground_datum,
                lift_config,
                deterministic: !timings,
                parallel: true,
            };
            let report = run_check(&model, &pack, &config)?;
            let json = write_report_json(&report);
            match &out {
                Some(p) => write_out(p, &json)?,
                None => print!("{}", String::from_utf8_lossy(&json)),
            }
            if let Some(p) = &bcf {
                write_out(p, &write_bcf(&report))?;
            }
            if out.is_some() {
                eprintln!("{} finding(s) from {} rule(s)", report.findings.len(), report.rules.len());
            }
            Ok(if report.findings.is_empty() { 0 } else { 1 })
        }
        Command::Convert {
            model,
            out,
            stage,
            lift_config,
            ground_datum,
        } => {
            let source = std::fs::read_to_string(&model).with_context(|| format!("reading {}", model.display()))?;
            let config = CheckConfig {
                ground_datum,
                lift_config,
                ..CheckConfig::default()
            };
            let stage = match stage {
                StageArg::Lifted => Stage::Lifted,
                StageArg::Geom => Stage::Geometry,
                StageArg::Inferred => Stage::Inferred,
            };
            let prepared = prepare(&source, &config, stage)?;
            for d in &prepared.diagnostics {
                eprintln!("{d}");
            }
            write_out(&out, prepared.graph.to_ntriples().as_bytes())?;
            Ok(0)
        }
        Command::LintRules { pack } => {
            let pack = load(Some(&pack))?;
            let diags = lint_pack(&pack, &pack.vocab);
            for w in pack.warnings() {
                println!("warning: {w}");
            }
            for d in &diags {
                println!("{d}");
            }
            println!("{} rule(s), {} diagnostic(s)", pack.rules.len(), diags.len());
            Ok(if diags.is_empty() { 0 } else { 1 })
        }
        Command::Explain { report, rule } => {
            let bytes = std::fs::read(&report).with_context(|| format!("reading {}", report.display()))?;
            let report = read_report_json(&bytes).context("parsing report")?;
            if !report.rules.iter().any(|r| r.id == rule) {
                bail!("rule '{rule}' did not run in this report");
            }
            let mut count = 0;
            for f in report.findings_for(&rule) {
                count += 1;
                let label = if f.guid.is_empty() { "-" } else { &f.guid };
                println!("{} [{}] {} {}", f.rule, f.severity, label, f.iri);
                println!("  {}", f.message);
                for e in &f.explanation {
                    let g = if e.guid.is_empty() { "-" } else { &e.guid };
                    println!("  - {}: {} {}", e.role, g, e.iri);
                }
            }
            println!("{count} finding(s) for {rule}");
            Ok(if count == 0 { 0 } else { 1 })
        }
        Command::BuildPack { dir, out } => {
            let bytes = pack_directory(&dir).with_context(|| format!("packing {}", dir.display()))?;
            write_out(&out, &bytes)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
