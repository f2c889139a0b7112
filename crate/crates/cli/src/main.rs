use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use mira_core::data::{self, SynthSpec};
use mira_core::inference::{self, EvalReport};
use mira_core::{induction, personalization, rulefile};
use mira_core::{Alphabet, Dataset, InductionConfig, RuleKind, RuleSet};

/// Learn, apply and personalize interpretable rule lists for radar gestures.
#[derive(Parser)]
#[command(name = "mira", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Induce a rule list from training and validation samples.
    Train {
        #[arg(long, value_parser = path_arg)]
        train: PathBuf,
        #[arg(long, value_parser = path_arg)]
        val: PathBuf,
        /// `key = value` induction settings; unset keys keep their defaults.
        #[arg(long, value_parser = path_arg)]
        config: PathBuf,
        #[arg(long, value_parser = path_arg)]
        out: PathBuf,
        /// Write a JSON trace of every covering iteration.
        #[arg(long, value_parser = path_arg)]
        trace: Option<PathBuf>,
        /// Comma-separated class names; inferred from the training labels if absent.
        #[arg(long)]
        alphabet: Option<String>,
    },
    /// Score a rule list on labelled samples.
    Evaluate {
        #[arg(long, value_parser = path_arg)]
        rules: PathBuf,
        #[arg(long, value_parser = path_arg)]
        data: PathBuf,
        /// Write the full report as JSON.
        #[arg(long, value_parser = path_arg)]
        report: Option<PathBuf>,
    },
    /// Print the predicted label and fired rule for every sample.
    Predict {
        #[arg(long, value_parser = path_arg)]
        rules: PathBuf,
        #[arg(long, value_parser = path_arg)]
        data: PathBuf,
        /// Also print each literal checked on the way to the fired rule.
        #[arg(long)]
        explain: bool,
    },
    /// Append per-user rules learned from calibration samples.
    Personalize {
        #[arg(long, value_parser = path_arg)]
        rules: PathBuf,
        #[arg(long, value_parser = path_arg)]
        calibration: PathBuf,
        #[arg(long, value_parser = path_arg)]
        config: PathBuf,
        #[arg(long, value_parser = path_arg)]
        out: PathBuf,
    },
    /// Pretty-print a rule list with its coverage statistics.
    Inspect {
        #[arg(long, value_parser = path_arg)]
        rules: PathBuf,
    },
    /// Generate a synthetic sample CSV from a spec file.
    Synth {
        #[arg(long, value_parser = path_arg)]
        spec: PathBuf,
        #[arg(long, value_parser = path_arg)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Average frame-level recordings over their gesture windows into a sample CSV.
    Distill {
        #[arg(long, value_parser = path_arg)]
        recordings: PathBuf,
        #[arg(long, value_parser = path_arg)]
        out: PathBuf,
        #[arg(long)]
        alphabet: Option<String>,
        /// Require every gesture window to span exactly this many frames.
        #[arg(long)]
        gesture_frames: Option<usize>,
    },
}

fn path_arg(s: &str) -> Result<PathBuf, String> {
    if s.trim().is_empty() {
        Err("path must not be empty".into())
    } else {
        Ok(PathBuf::from(s))
    }
}

fn parse_alphabet(list: &str) -> Result<Alphabet> {
    Ok(Alphabet::new(list.split(',').map(str::trim))?)
}

fn load_config(path: &Path) -> Result<InductionConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    InductionConfig::from_kv(&text).with_context(|| format!("invalid config {}", path.display()))
}

fn load_rules(path: &Path) -> Result<RuleSet> {
    rulefile::load_rules(path).with_context(|| format!("loading rules from {}", path.display()))
}

fn load_samples(path: &Path, alphabet: Option<&Alphabet>) -> Result<Dataset> {
    data::load_samples_csv(path, alphabet)
        .with_context(|| format!("loading samples from {}", path.display()))
}

fn write_json<T: serde::Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn literal_counts(rs: &RuleSet) -> String {
    rs.rules()
        .iter()
        .map(|r| r.literals.len().to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn train(
    train: &Path,
    val: &Path,
    config: &Path,
    out: &Path,
    trace: Option<&Path>,
    alphabet: Option<&str>,
) -> Result<()> {
    let cfg = load_config(config)?;
    let alphabet = alphabet.map(parse_alphabet).transpose()?;
    let train_ds = load_samples(train, alphabet.as_ref())?;
    let val_ds = load_samples(val, Some(train_ds.alphabet()))?;
    let (rs, tr) = induction::induce_ruleset(&train_ds, &val_ds, &cfg)?;
    rulefile::save_rules(&rs, out)?;
    if let Some(path) = trace {
        write_json(&tr, path)?;
    }
    let train_acc = inference::evaluate(&rs, &train_ds)?.accuracy;
    let val_acc = inference::evaluate(&rs, &val_ds)?.accuracy;
    println!(
        "rules {} ({} specific + default)",
        rs.len(),
        rs.non_default().len()
    );
    println!("literals {}", literal_counts(&rs));
    println!("train accuracy {train_acc:.3}");
    println!("val accuracy {val_acc:.3}");
    println!("stop {:?}", tr.stop);
    Ok(())
}

fn render_report(rs: &RuleSet, report: &EvalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "accuracy {:.3}", report.accuracy);
    let _ = writeln!(out, "samples {}", report.n_samples);
    let width = report
        .alphabet
        .iter()
        .map(String::len)
        .max()
        .unwrap_or(0)
        .max(5);
    let _ = write!(out, "{:width$}", "true\\pred");
    for name in &report.alphabet {
        let _ = write!(out, " {name:>width$}");
    }
    out.push('\n');
    for (name, row) in report.alphabet.iter().zip(&report.confusion) {
        let _ = write!(out, "{name:width$}");
        for n in row {
            let _ = write!(out, " {n:>width$}");
        }
        out.push('\n');
    }
    for m in &report.per_class {
        let pct = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.3}"));
        let _ = writeln!(
            out,
            "class {}: support {} precision {} recall {}",
            m.class,
            m.support,
            pct(m.precision),
            pct(m.recall)
        );
    }
    for (i, (rule, fired)) in rs.rules().iter().zip(&report.per_rule).enumerate() {
        let _ = writeln!(
            out,
            "rule {i}: fired {} correct {}  {}",
            fired.covered,
            fired.correct,
            inference::format_rule(rule, rs.alphabet())
        );
    }
    out
}

fn evaluate(rules: &Path, data: &Path, report: Option<&Path>) -> Result<()> {
    let rs = load_rules(rules)?;
    let ds = load_samples(data, Some(rs.alphabet()))?;
    let ev = inference::evaluate(&rs, &ds)?;
    print!("{}", render_report(&rs, &ev));
    if let Some(path) = report {
        write_json(&ev, path)?;
    }
    Ok(())
}

fn predict(rules: &Path, data: &Path, explain: bool) -> Result<()> {
    let rs = load_rules(rules)?;
    let ds = load_samples(data, Some(rs.alphabet()))?;
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    for s in ds.samples() {
        let p = inference::predict(&rs, &s.features);
        let tag = if p.is_default { " default" } else { "" };
        writeln!(
            out,
            "{} {} rule={}{tag}",
            s.sample_id,
            rs.alphabet().name(p.label),
            p.fired_rule_index
        )?;
        if explain {
            for check in inference::explain(&rs, &s.features) {
                let lits: Vec<String> = check
                    .literals
                    .iter()
                    .map(|l| {
                        format!(
                            "{} = {} {} {} [{}]",
                            l.feature.name(),
                            l.value,
                            l.op.symbol(),
                            l.threshold,
                            if l.holds { "true" } else { "false" }
                        )
                    })
                    .collect();
                let body = if lits.is_empty() {
                    "ELSE".to_string()
                } else {
                    lits.join(" AND ")
                };
                let verdict = if check.fired { "fired" } else { "skipped" };
                writeln!(out, "  rule {}: {body} -> {verdict}", check.rule_index)?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn personalize(rules: &Path, calibration: &Path, config: &Path, out: &Path) -> Result<()> {
    let rs = load_rules(rules)?;
    let cfg = load_config(config)?;
    let calib = load_samples(calibration, Some(rs.alphabet()))?;
    let residual = personalization::calibration_residuals(&rs, &calib).len();
    let before = rs.n_kind(RuleKind::Personalized);
    let personal = personalization::personalize(&rs, &calib, &cfg)?;
    rulefile::save_rules(&personal, out)?;
    println!("calibration samples {} (uncovered {residual})", calib.len());
    println!(
        "personalized rules added {} (total {})",
        personal.n_kind(RuleKind::Personalized) - before,
        personal.n_kind(RuleKind::Personalized)
    );
    println!(
        "default {}",
        rs.alphabet().name(personal.default_rule().predicted)
    );
    Ok(())
}

fn inspect(rules: &Path) -> Result<()> {
    let rs = load_rules(rules)?;
    print!("{}", inference::render_rule_list(&rs));
    Ok(())
}

fn synth(spec: &Path, out: &Path, seed: u64) -> Result<()> {
    let text = fs::read_to_string(spec).with_context(|| format!("reading {}", spec.display()))?;
    let spec = SynthSpec::parse(&text)?;
    let ds = data::synthesize(&spec, seed)?;
    data::write_samples_csv(&ds, out)?;
    println!("wrote {} samples to {}", ds.len(), out.display());
    Ok(())
}

fn distill(
    recordings: &Path,
    out: &Path,
    alphabet: Option<&str>,
    gesture_frames: Option<usize>,
) -> Result<()> {
    let alphabet = alphabet.map(parse_alphabet).transpose()?;
    let rows = data::load_recordings_csv(recordings)?;
    let ds = data::distill(&rows, alphabet.as_ref(), gesture_frames)?;
    data::write_samples_csv(&ds, out)?;
    println!("wrote {} samples to {}", ds.len(), out.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train {
            train: t,
            val,
            config,
            out,
            trace,
            alphabet,
        } => train(
            &t,
            &val,
            &config,
            &out,
            trace.as_deref(),
            alphabet.as_deref(),
        ),
        Command::Evaluate {
            rules,
            data,
            report,
        } => evaluate(&rules, &data, report.as_deref()),
        Command::Predict {
            rules,
            data,
            explain,
        } => predict(&rules, &data, explain),
        Command::Personalize {
            rules,
            calibration,
            config,
            out,
        } => personalize(&rules, &calibration, &config, &out),
        Command::Inspect { rules } => inspect(&rules),
        Command::Synth { spec, out, seed } => synth(&spec, &out, seed),
        Command::Distill {
            recordings,
            out,
            alphabet,
            gesture_frames,
        } => distill(&recordings, &out, alphabet.as_deref(), gesture_frames),
    }
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        // a reader such as `head` closing the pipe early is not a failure
        Err(e)
            if e.downcast_ref::<io::Error>()
                .is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe) =>
        {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
