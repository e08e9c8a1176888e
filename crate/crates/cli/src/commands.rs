use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::json;
use sumtype_mpc::analysis::{
    audit_all, comm_csv, comm_report, comm_text, distortion_csv, distortion_experiment, distortion_text, privacy_text,
    AuditConfig, FieldRule, MRule, Verdict,
};
use sumtype_mpc::rational::{self, format_rational};
use sumtype_mpc::sampling::{estimate_function, SearchMode};
use sumtype_mpc::{run_protocol, FunctionTable, PrimeField, Protocol, ProtocolKind, RunOptions};

use crate::config::Resolved;
use crate::inputs::{load_function, parse_alphabets, parse_generator, parse_list, read_sequence};
use crate::{resolve_protocol, AuditArgs, CliError, CommArgs, Command, DistortionArgs, Format, Mode, Outcome, RunArgs};

pub fn dispatch(command: Command, extra: &[&dyn Protocol], out: &mut dyn Write) -> Result<Outcome, CliError> {
    match command {
        Command::Run(a) => cmd_run(&a, extra, out),
        Command::Audit(a) => cmd_audit(&a, extra, out),
        Command::Distortion(a) => cmd_distortion(&a, out),
        Command::CommCost(a) => cmd_comm_cost(&a, out),
    }
}

fn emit(text: &str, path: Option<&Path>, out: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| io_error(p, e)),
        None => out
            .write_all(text.as_bytes())
            .map_err(|e| io_error(Path::new("<stdout>"), e)),
    }
}

fn io_error(path: &Path, source: std::io::Error) -> CliError {
    CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn out_name(path: &Option<PathBuf>) -> String {
    path.as_ref()
        .map_or_else(|| "-".to_string(), |p| p.display().to_string())
}

fn function(spec: &str, alphabets: &Option<String>) -> Result<FunctionTable, CliError> {
    let sizes = alphabets.as_deref().map(parse_alphabets).transpose()?;
    load_function(spec, sizes)
}

fn alphabet_sizes(f1: &FunctionTable) -> String {
    format!("{},{}", f1.x_alphabet().len(), f1.y_alphabet().len())
}

fn builtin_kind(name: &str) -> Result<ProtocolKind, CliError> {
    name.parse().map_err(CliError::Engine)
}

fn require_format(format: Format, allowed: &[Format], command: &str) -> Result<(), CliError> {
    if allowed.contains(&format) {
        return Ok(());
    }
    let names: Vec<&str> = allowed.iter().map(|f| f.name()).collect();
    Err(CliError::Usage(format!(
        "{command} supports --format {}, not {}",
        names.join("|"),
        format.name()
    )))
}

fn positive_budget(budget: u64) -> Result<u64, CliError> {
    if budget == 0 {
        return Err(CliError::Usage("--budget must be positive".to_string()));
    }
    Ok(budget)
}

pub fn cmd_run(a: &RunArgs, extra: &[&dyn Protocol], out: &mut dyn Write) -> Result<Outcome, CliError> {
    require_format(a.format, &[Format::Text, Format::Json], "run")?;
    let protocol = resolve_protocol(&a.protocol, extra)?;
    let f1 = function(&a.f1, &a.alphabets)?;
    let seed = a.seed.ok_or_else(|| CliError::Usage("run needs --seed".to_string()))?;
    let mut cfg = Resolved::new("run");
    cfg.set("protocol", protocol.name())
        .set("f1", &a.f1)
        .set("alphabets", alphabet_sizes(&f1));

    let (x, y) = match (&a.generator, &a.x, &a.y) {
        (Some(g), None, None) => {
            let n = a.n.ok_or_else(|| CliError::Usage("--gen needs --n".to_string()))?;
            let generator = parse_generator(g)?;
            cfg.set("gen", generator.name());
            generator.generate(n, f1.x_alphabet().len(), f1.y_alphabet().len())
        }
        (None, Some(xp), Some(yp)) => {
            let x = read_sequence(xp, f1.x_alphabet())?;
            let y = read_sequence(yp, f1.y_alphabet())?;
            cfg.set("x", xp.display()).set("y", yp.display());
            (x, y)
        }
        _ => {
            return Err(CliError::Usage(
                "give either both --x and --y, or --gen with --n".to_string(),
            ))
        }
    };
    if x.len() != y.len() {
        return Err(CliError::Usage(format!(
            "x has {} symbols but y has {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if let Some(want) = a.n {
        if want != n {
            return Err(CliError::Usage(format!(
                "--n is {want} but the sequences have length {n}"
            )));
        }
    }
    let m_rule: MRule = a.m.parse().map_err(CliError::Usage)?;
    let m = m_rule.m_for(n);
    if m > n {
        return Err(CliError::Usage(format!("m = {m} exceeds n = {n}")));
    }
    let options = RunOptions {
        modulus: a.modulus,
        fixed_index_set: None,
    };
    let result = run_protocol(protocol, &f1, &x, &y, m, seed, &options)?;
    let exact = f1.eval_sum_type(&x, &y).map_err(|e| CliError::Usage(e.to_string()))?;
    let oracle = estimate_function(&f1, &x, &y, &result.index_set).map_err(|e| CliError::Analysis(e.into()))?;
    let verified = oracle == result.estimate;
    let abs_error = rational::abs(&(&result.estimate - &exact));

    cfg.set("n", n)
        .set("m", m)
        .set("m-rule", &a.m)
        .set("seed", seed)
        .set("modulus", result.params.modulus)
        .set("format", a.format.name())
        .set("out", out_name(&a.out))
        .set("transcript", out_name(&a.transcript));

    if let Some(path) = &a.transcript {
        std::fs::write(path, result.transcript()).map_err(|e| io_error(path, e))?;
    }

    let rows: Vec<(&str, String)> = vec![
        ("protocol", result.protocol.clone()),
        ("n", n.to_string()),
        ("m", m.to_string()),
        ("p", result.params.modulus.to_string()),
        ("F_hat", format_rational(&result.estimate)),
        ("f_n", format_rational(&exact)),
        ("abs_error", format_rational(&abs_error)),
        ("k", result.total_bits.to_string()),
        ("index_bits", result.index_bits.to_string()),
        ("R", format_rational(&result.rate)),
        ("R_decimal", format!("{:.6}", rational::to_f64(&result.rate))),
        ("oracle", if verified { "match" } else { "MISMATCH" }.to_string()),
    ];
    let text = match a.format {
        Format::Json => {
            let mut body = serde_json::Map::new();
            body.insert("config".to_string(), cfg.to_json());
            for (k, v) in &rows {
                body.insert(k.to_string(), v.clone().into());
            }
            serde_json::to_string_pretty(&body).expect("json map serializes") + "\n"
        }
        _ => {
            let mut text = cfg.comment_block();
            for (k, v) in &rows {
                let _ = writeln!(text, "{k:<11}{v}");
            }
            text
        }
    };
    emit(&text, a.out.as_deref(), out)?;
    Ok(if verified { Outcome::Verified } else { Outcome::Failed })
}

pub fn cmd_audit(a: &AuditArgs, extra: &[&dyn Protocol], out: &mut dyn Write) -> Result<Outcome, CliError> {
    require_format(a.format, &[Format::Text, Format::Json], "audit")?;
    let protocol = resolve_protocol(&a.protocol, extra)?;
    let f1 = function(&a.f1, &a.alphabets)?;
    if a.m == 0 || a.m > a.n {
        return Err(CliError::Usage(format!(
            "audit needs 1 <= m <= n, got m = {}, n = {}",
            a.m, a.n
        )));
    }
    let field = match a.modulus {
        Some(p) => PrimeField::new(p).map_err(|e| CliError::Usage(e.to_string()))?,
        None => protocol.default_field(&f1, a.m),
    };
    let mut audit = AuditConfig::new(a.m, field);
    audit.budget = positive_budget(a.budget)?;

    let mut cfg = Resolved::new("audit");
    cfg.set("protocol", protocol.name())
        .set("f1", &a.f1)
        .set("alphabets", alphabet_sizes(&f1))
        .set("n", a.n)
        .set("m", a.m)
        .set("modulus", field.modulus())
        .set("budget", audit.budget)
        .set("format", a.format.name())
        .set("out", out_name(&a.out));

    let reports = audit_all(protocol, &f1, a.n, &audit)?;
    let passed = reports.iter().all(|r| r.verdict == Verdict::Pass);
    let text = match a.format {
        Format::Json => {
            let body = json!({ "config": cfg.to_json(), "reports": reports });
            serde_json::to_string_pretty(&body).expect("reports serialize") + "\n"
        }
        _ => cfg.comment_block() + &privacy_text(&reports),
    };
    emit(&text, a.out.as_deref(), out)?;
    Ok(if passed { Outcome::Verified } else { Outcome::Failed })
}

pub fn cmd_distortion(a: &DistortionArgs, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let kind = builtin_kind(&a.protocol)?;
    let f1 = function(&a.f1, &a.alphabets)?;
    let n_list = parse_list(&a.n, "--n")?;
    let m_list = parse_list(&a.m, "--m")?;
    let budget = positive_budget(a.budget)?;
    let mode = match a.mode {
        Mode::Exhaustive => SearchMode::Exhaustive,
        Mode::MonteCarlo => SearchMode::MonteCarlo {
            trials: a.trials,
            seed: a.seed,
            random_pairs: a.random_pairs,
        },
    };

    let mut cfg = Resolved::new("distortion");
    cfg.set("f1", &a.f1)
        .set("alphabets", alphabet_sizes(&f1))
        .set("n", &a.n)
        .set("m", &a.m)
        .set(
            "mode",
            if a.mode == Mode::Exhaustive {
                "exhaustive"
            } else {
                "monte-carlo"
            },
        );
    if a.mode == Mode::MonteCarlo {
        cfg.set("trials", a.trials)
            .set("seed", a.seed)
            .set("random-pairs", a.random_pairs);
    }
    cfg.set("protocol", kind.name())
        .set("budget", budget)
        .set("format", a.format.name())
        .set("out", out_name(&a.out));

    let reports = distortion_experiment(&f1, &n_list, &m_list, mode, kind, budget)?;
    let within = reports.iter().all(|r| r.within_bound);
    let text = match a.format {
        Format::Csv => cfg.comment_block() + &distortion_csv(&reports),
        Format::Text => cfg.comment_block() + &distortion_text(&reports),
        Format::Json => {
            let body = json!({ "config": cfg.to_json(), "rows": reports });
            serde_json::to_string_pretty(&body).expect("reports serialize") + "\n"
        }
    };
    emit(&text, a.out.as_deref(), out)?;
    Ok(if within { Outcome::Verified } else { Outcome::Failed })
}

pub fn cmd_comm_cost(a: &CommArgs, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let kind = builtin_kind(&a.protocol)?;
    let f1 = function(&a.f1, &a.alphabets)?;
    let n_list = parse_list(&a.n, "--n")?;
    let m_rule: MRule = a.m_rule.parse().map_err(CliError::Usage)?;
    let field_rule = match a.modulus {
        Some(p) => FieldRule::Fixed(p),
        None => FieldRule::Minimal,
    };

    let mut cfg = Resolved::new("comm-cost");
    cfg.set("protocol", kind.name())
        .set("f1", &a.f1)
        .set("alphabets", alphabet_sizes(&f1))
        .set("n", &a.n)
        .set("m-rule", &a.m_rule)
        .set(
            "modulus",
            a.modulus.map_or_else(|| "minimal".to_string(), |p| p.to_string()),
        )
        .set("verify-live", a.verify_live)
        .set("format", a.format.name())
        .set("out", out_name(&a.out));

    let rows = comm_report(kind, &f1, &n_list, m_rule, field_rule, a.verify_live)?;
    let consistent = rows.iter().all(|r| r.live_match != Some(false));
    let text = match a.format {
        Format::Csv => cfg.comment_block() + &comm_csv(&rows),
        Format::Text => cfg.comment_block() + &comm_text(&rows),
        Format::Json => {
            let body = json!({ "config": cfg.to_json(), "rows": rows });
            serde_json::to_string_pretty(&body).expect("rows serialize") + "\n"
        }
    };
    emit(&text, a.out.as_deref(), out)?;
    Ok(if consistent { Outcome::Verified } else { Outcome::Failed })
}
