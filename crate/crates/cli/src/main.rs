use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use glsm_core::git::{inertia_sectors, is_criterion_effective, semistable_supports, sr_generators};
use glsm_core::scalar::{format_rational, parse_rational, Rational};
use glsm_core::special::{ci_compare_with, fjrw_I_direct, hybrid_I_direct};
use glsm_core::{
    build_ring, compact_type_report, glsm_I_with, parse_model, parse_series, parse_specialization, render_latex,
    render_text, series_compare, series_from_json, series_to_string, twist_novikov, validate_model, z_partial, Cache,
    Engine, EngineOptions, Error, GlsmModel, InsertionSet, JobKey, Mode, SeriesMap, Specialization, ZMethod,
};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "glsm", version, about = "Exact GLSM and toric I-functions")]
struct Cli {
    /// Write the artifact here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Bypass the result cache.
    #[arg(long, global = true)]
    no_cache: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Latex,
    Text,
}

#[derive(clap::Args)]
struct SeriesArgs {
    file: PathBuf,
    #[arg(long)]
    qbound: String,
    #[arg(long, default_value_t = 0)]
    torder: u32,
    /// `NAME=POLY` in characters, e.g. `t=rho1` or `s=[1,0]^2`.
    #[arg(long = "insert")]
    insert: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Insertion,
    Multiplication,
    Verify,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    Fjrw,
    Hybrid,
    Ci,
}

#[derive(Subcommand)]
enum Command {
    /// Run the model checks.
    Validate { file: PathBuf },
    /// List inertia sectors with their rings.
    Sectors { file: PathBuf },
    /// Enumerate effective degrees up to a θ-degree bound.
    Effective {
        file: PathBuf,
        #[arg(long)]
        qbound: String,
    },
    /// Ambient big I-function.
    Ifun(SeriesArgs),
    /// GLSM I-function.
    GlsmIfun {
        #[command(flatten)]
        args: SeriesArgs,
        /// 1-based coordinates carrying the GLSM ranges; defaults to the R-charged ones.
        #[arg(long, value_delimiter = ',')]
        hat_i: Option<Vec<usize>>,
    },
    /// Apply `Π z∂_ρ` to an ambient series.
    Dz {
        series: PathBuf,
        /// Characters separated by `;`, entries by `,`.
        #[arg(long, allow_hyphen_values = true)]
        rho: String,
        #[arg(long, value_enum, default_value_t = MethodArg::Verify)]
        method: MethodArg,
    },
    /// Compact-type report for a series.
    CheckCt { series: PathBuf },
    /// Novikov sign twist by characters τ.
    Twist {
        series: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        tau: String,
    },
    /// Run a specialization block of a model file.
    Specialize {
        #[arg(value_enum)]
        kind: Kind,
        file: PathBuf,
        #[arg(long)]
        qbound: String,
        #[arg(long, default_value_t = 0)]
        torder: u32,
    },
    /// Compare two series on their common truncation.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// JSON `{"degree": [[...]], "t": [...]}` or a file containing it.
        #[arg(long)]
        map: Option<String>,
    },
    /// LaTeX view of a series.
    RenderLatex { series: PathBuf },
}

enum Artifact {
    Series(String),
    Json(Value, bool),
    Compare(Value, bool),
    Specialize(Value, bool),
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

/// A model file, or a file holding only a specialization block.
fn load_model(path: &Path) -> anyhow::Result<GlsmModel> {
    let text = read(path)?;
    match parse_model(&text) {
        Ok(m) => Ok(m),
        Err(e @ (Error::Schema(_) | Error::DimensionMismatch(_))) => match parse_specialization(&text) {
            Ok(s) => Ok(s.model()?),
            Err(_) => Err(e.into()),
        },
        Err(e) => Err(e.into()),
    }
}

fn rational(text: &str) -> anyhow::Result<Rational> {
    Ok(parse_rational(text.trim())?)
}

fn char_list(text: &str) -> anyhow::Result<Vec<Vec<i64>>> {
    text.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|c| {
            c.split(',')
                .map(|x| x.trim().parse::<i64>().map_err(|_| anyhow!("invalid character entry {x:?}")))
                .collect()
        })
        .collect()
}

fn options() -> anyhow::Result<EngineOptions> {
    let threads = match std::env::var("GLSM_THREADS") {
        Ok(v) if !v.trim().is_empty() => v.trim().parse().map_err(|_| anyhow!("GLSM_THREADS must be a nonnegative integer"))?,
        _ => 0,
    };
    Ok(EngineOptions { threads })
}

fn cache(no_cache: bool) -> Option<Cache> {
    if no_cache {
        return None;
    }
    let dir = std::env::var_os("GLSM_CACHE_DIR").map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("glsm-cache"));
    Some(Cache::new(dir))
}

fn cached(cache: &Option<Cache>, key: &JobKey, compute: impl FnOnce() -> anyhow::Result<String>) -> anyhow::Result<String> {
    if let Some(c) = cache {
        if let Some(hit) = c.get(key) {
            return Ok(hit);
        }
    }
    let out = compute()?;
    if let Some(c) = cache {
        // a failed write only costs a recomputation
        if let Err(e) = c.put(key, &out) {
            eprintln!("warning: cache write failed: {e}");
        }
    }
    Ok(out)
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values serialize");
    s.push('\n');
    s
}

fn series_command(cli: &Cli, args: &SeriesArgs, hat_i: Option<&Vec<usize>>, glsm: bool) -> anyhow::Result<Artifact> {
    let m = load_model(&args.file)?;
    let bound = rational(&args.qbound)?;
    let ins = InsertionSet::parse(&args.insert, &m)?;
    let hat: Option<Vec<usize>> = match hat_i {
        None => None,
        Some(v) => Some(
            v.iter()
                .map(|&i| if i >= 1 && i <= m.r { Ok(i - 1) } else { Err(anyhow!("--hat-i entry {i} out of range 1..{}", m.r)) })
                .collect::<anyhow::Result<_>>()?,
        ),
    };
    let command = if glsm { "glsm-ifun" } else { "ifun" };
    let extra = json!({"hat_i": hat});
    let key = JobKey::new(&m, command, &bound, args.torder, &ins, &extra);
    let opts = options()?;
    let text = cached(&cache(cli.no_cache), &key, || {
        let s = if glsm {
            glsm_I_with(&m, &ins, &bound, args.torder, hat.clone(), opts)?
        } else {
            Engine::new(&m)?.series(&ins, &bound, args.torder, &Mode::Ambient, opts)?
        };
        Ok(series_to_string(&s))
    })?;
    Ok(Artifact::Series(text))
}

fn specialize(cli: &Cli, kind: Kind, file: &Path, qbound: &str, torder: u32) -> anyhow::Result<Artifact> {
    let text = read(file)?;
    let spec = parse_specialization(&text)?;
    let wanted = match kind {
        Kind::Fjrw => "fjrw",
        Kind::Hybrid => "hybrid",
        Kind::Ci => "ci",
    };
    if spec.kind() != wanted {
        return Err(Error::Schema(format!("file holds a {:?} specialization, not {wanted:?}", spec.kind())).into());
    }
    let bound = rational(qbound)?;
    let model = spec.model()?;
    let opts = options()?;
    let key = JobKey::new(&model, &format!("specialize-{wanted}"), &bound, torder, &InsertionSet::new(), &Value::Null);
    let out = cached(&cache(cli.no_cache), &key, || {
        let v = match &spec {
            Specialization::Fjrw(s) => {
                let direct = fjrw_I_direct(s, &bound, torder)?;
                let engine = glsm_I_with(&model, &s.insertions(), &bound, torder, Some(s.hat_i()), opts)?;
                let diff = series_compare(&engine, &direct, None)?;
                json!({"kind": wanted, "model": model.to_json(), "direct": glsm_core::series_to_json(&direct), "engine_agreement": diff.to_json()})
            }
            Specialization::Hybrid(s) => {
                let direct = hybrid_I_direct(s, &bound, torder)?;
                let engine = glsm_I_with(&model, &s.insertions(), &bound, torder, Some(s.hat_i()), opts)?;
                let diff = series_compare(&engine, &direct, None)?;
                json!({"kind": wanted, "model": model.to_json(), "direct": glsm_core::series_to_json(&direct), "engine_agreement": diff.to_json()})
            }
            Specialization::Ci(s) => {
                let report = ci_compare_with(s, &bound, torder, opts)?;
                json!({"kind": wanted, "model": model.to_json(), "report": report.to_json()})
            }
        };
        Ok(pretty(&v))
    })?;
    let v: Value = serde_json::from_str(&out).context("corrupt cache entry")?;
    let equal = v
        .get("engine_agreement")
        .or_else(|| v.pointer("/report/diff"))
        .and_then(|d| d.get("equal"))
        .and_then(Value::as_bool)
        .unwrap_or(false);
    Ok(Artifact::Specialize(v, equal))
}

fn run(cli: &Cli) -> anyhow::Result<Artifact> {
    match &cli.command {
        Command::Validate { file } => {
            let m = load_model(file)?;
            let report = validate_model(&m);
            Ok(Artifact::Json(report.to_json(), report.overall))
        }
        Command::Sectors { file } => {
            let m = load_model(file)?;
            let mut out = Vec::new();
            for g in inertia_sectors(&m)? {
                let ring = build_ring(&m, &g)?;
                out.push(json!({
                    "lambda": g.to_strings(),
                    "age": format_rational(&g.age(&m)),
                    "fixed": g.fixed(&m).iter().map(|i| i + 1).collect::<Vec<_>>(),
                    "sr_generators": sr_generators(&m, &g)?.iter().map(|t| t.iter().map(|i| i + 1).collect::<Vec<_>>()).collect::<Vec<_>>(),
                    "dimension": ring.dimension(),
                    "basis": glsm_core::series::staircase_names(&ring),
                }));
            }
            Ok(Artifact::Json(json!({"sectors": out}), true))
        }
        Command::Effective { file, qbound } => {
            let m = load_model(file)?;
            let bound = rational(qbound)?;
            let supports = semistable_supports(&m)?;
            let degrees = Engine::new(&m)?.effective_degrees(&bound)?;
            let list: Vec<Value> = degrees
                .iter()
                .map(|d| {
                    json!({
                        "degree": d.iter().map(format_rational).collect::<Vec<_>>(),
                        "theta_degree": format_rational(&m.theta_degree(d)),
                        "sector_lambda": glsm_core::sector_of_degree(d).to_strings(),
                        "criterion_effective": is_criterion_effective(&m, &supports, d),
                    })
                })
                .collect();
            Ok(Artifact::Json(json!({"q_bound": format_rational(&bound), "degrees": list}), true))
        }
        Command::Ifun(args) => series_command(cli, args, None, false),
        Command::GlsmIfun { args, hat_i } => series_command(cli, args, hat_i.as_ref(), true),
        Command::Dz { series, rho, method } => {
            let s = parse_series(&read(series)?)?;
            let method = match method {
                MethodArg::Insertion => ZMethod::ByInsertion,
                MethodArg::Multiplication => ZMethod::ByMultiplication,
                MethodArg::Verify => ZMethod::Verify,
            };
            let out = z_partial(&s, &char_list(rho)?, method)?;
            Ok(Artifact::Series(series_to_string(&out)))
        }
        Command::CheckCt { series } => {
            let s = parse_series(&read(series)?)?;
            let report = compact_type_report(&s, &s.model)?;
            Ok(Artifact::Json(report.to_json(), report.passes()))
        }
        Command::Twist { series, tau } => {
            let s = parse_series(&read(series)?)?;
            let out = twist_novikov(&s, &char_list(tau)?)?;
            Ok(Artifact::Series(series_to_string(&out)))
        }
        Command::Specialize { kind, file, qbound, torder } => specialize(cli, *kind, file, qbound, *torder),
        Command::Compare { a, b, map } => {
            let sa = parse_series(&read(a)?)?;
            let sb = parse_series(&read(b)?)?;
            let map = match map {
                None => None,
                Some(text) => {
                    let body = if text.trim_start().starts_with('{') { text.clone() } else { read(Path::new(text))? };
                    let v: Value = serde_json::from_str(&body).context("invalid --map JSON")?;
                    Some(SeriesMap::from_json(&v)?)
                }
            };
            let diff = series_compare(&sa, &sb, map.as_ref())?;
            let mut v = diff.to_json();
            v["summary"] = json!(if diff.is_empty() { "equal on common truncation" } else { "series differ" });
            Ok(Artifact::Compare(v, diff.is_empty()))
        }
        Command::RenderLatex { series } => {
            let s = parse_series(&read(series)?)?;
            Ok(Artifact::Json(Value::String(render_latex(&s)), true))
        }
    }
}

fn render(cli: &Cli, artifact: &Artifact) -> anyhow::Result<(String, bool)> {
    let raw_latex = matches!(cli.command, Command::RenderLatex { .. });
    Ok(match artifact {
        Artifact::Json(Value::String(s), ok) if raw_latex => (s.clone(), *ok),
        Artifact::Series(text) => match cli.format {
            Format::Json => (text.clone(), true),
            Format::Latex => (render_latex(&parse_series(text)?), true),
            Format::Text => (render_text(&parse_series(text)?), true),
        },
        Artifact::Specialize(v, ok) => match (cli.format, v.get("direct")) {
            (Format::Latex, Some(d)) => (render_latex(&series_from_json(d)?), *ok),
            (Format::Text, Some(d)) => (render_text(&series_from_json(d)?), *ok),
            (Format::Json, _) | (_, None) => (pretty(v), *ok),
        },
        Artifact::Compare(v, ok) => match cli.format {
            Format::Text => {
                let mut s = format!("{}\n", v["summary"].as_str().unwrap_or_default());
                for d in v["differences"].as_array().into_iter().flatten() {
                    s.push_str(&format!("{d}\n"));
                }
                (s, *ok)
            }
            _ => (pretty(v), *ok),
        },
        Artifact::Json(v, ok) => match cli.format {
            Format::Text => (text_report(v), *ok),
            Format::Latex => bail!("LaTeX output is only available for series"),
            Format::Json => (pretty(v), *ok),
        },
    })
}

fn text_report(v: &Value) -> String {
    match v.get("checks").and_then(Value::as_array) {
        Some(checks) => {
            let mut s = format!("overall: {}\n", v["overall"].as_str().unwrap_or_default());
            for c in checks {
                s.push_str(&format!(
                    "{}: {} {}\n",
                    c["name"].as_str().unwrap_or_default(),
                    c["status"].as_str().unwrap_or_default(),
                    c["detail"].as_str().unwrap_or_default()
                ));
            }
            s
        }
        None => pretty(v),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if let Some(e) = err.downcast_ref::<Error>() {
        if e.is_internal() {
            3
        } else if e.is_input_error() {
            2
        } else {
            1
        }
    } else {
        2
    }
}

fn emit(cli: &Cli, body: &str) -> anyhow::Result<()> {
    match &cli.out {
        Some(p) => fs::write(p, body).with_context(|| format!("cannot write {}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(body.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(&cli).and_then(|a| render(&cli, &a)).and_then(|(body, ok)| emit(&cli, &body).map(|_| ok));
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
