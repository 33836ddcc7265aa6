//! `bsl`: experiment descriptors in, reports out.
//!
//! Exit status: 0 on success (for `verify-paper`: every check passed), 1 when
//! a check fails or a computation misses its tolerance, 2 on usage, schema or
//! input-domain errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use brownian_lab::asymptotics::{c00_adjoint_decay, c00_forward_decay, DecayReport};
use brownian_lab::brownian::{apply, norm_diagnostic, BrownianShiftParams, BrownianVector};
use brownian_lab::hardy::{ComplexJson, HardyVector};
use brownian_lab::subspace::{
    classify_equivalence, EquivalenceVerdict, SubspaceDescriptor, SubspaceKind, SubspaceSpec, DEFAULT_ORDER,
    DEFAULT_TOL_RATIO, DEFAULT_TOL_THETA,
};
use brownian_lab::suite::{run_battery, BatteryConfig, BatteryReport, DEFAULT_SEED};
use brownian_lab::LabError;
use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Parser)]
#[command(name = "bsl", version, about = "Brownian shift laboratory")]
struct Cli {
    /// JSON descriptor for the command.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// RNG seed in hex (default 0xB705).
    #[arg(long, global = true, value_parser = parse_hex)]
    seed: Option<u64>,
    /// Truncation order N.
    #[arg(long, global = true)]
    trunc: Option<usize>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Operator norm: formula against the truncated largest singular value.
    Norm {
        #[arg(long, allow_negative_numbers = true)]
        sigma: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        theta: Option<f64>,
    },
    /// Unitary equivalence of two restrictions; the pair comes from --config.
    Classify,
    /// Decay of the normalized powers applied to a vector (default (0, 1)).
    Decay {
        #[arg(long, allow_negative_numbers = true)]
        sigma: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        theta: Option<f64>,
        #[arg(long)]
        n_max: Option<usize>,
        /// Use the adjoint.
        #[arg(long)]
        adjoint: bool,
    },
    /// Run the full verification battery.
    VerifyPaper,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{0}")]
    Lab(#[from] LabError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0} check(s) failed")]
    Failed(usize),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Failed(_) | CliError::Lab(LabError::Precision { .. }) | CliError::Io(_) => 1,
            _ => 2,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn parse_hex(s: &str) -> Result<u64, String> {
    let digits = s.trim_start_matches("0x").trim_start_matches("0X");
    u64::from_str_radix(digits, 16).map_err(|e| format!("invalid hex seed {s:?}: {e}"))
}

/// Reads a JSON descriptor; an empty file counts as `{}`.
fn read_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> CliResult<T> {
    let Some(path) = path else { return Ok(T::default()) };
    let text = fs::read_to_string(path)?;
    if text.trim().is_empty() {
        return Ok(T::default());
    }
    serde_json::from_str(&text).map_err(|e| LabError::Schema(format!("{}: {e}", path.display())).into())
}

/// Truncation precedence: flag, then config, then `BSL_TRUNC`, then 256.
fn resolve_trunc(flag: Option<usize>, config: Option<usize>) -> CliResult<usize> {
    if let Some(n) = flag.or(config) {
        return Ok(n);
    }
    match std::env::var("BSL_TRUNC") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("BSL_TRUNC={v:?} is not a truncation order"))),
        Err(_) => Ok(DEFAULT_ORDER),
    }
}

fn emit(out: Option<&Path>, body: &str) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, body)?,
        None => print!("{body}"),
    }
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct NormConfig {
    sigma: Option<f64>,
    theta: Option<f64>,
    trunc: Option<usize>,
}

#[derive(Serialize)]
struct NormReport {
    sigma: f64,
    theta: f64,
    trunc: usize,
    formula: f64,
    truncated: f64,
    gap: f64,
    power_iterations: usize,
    slot_image_norm: f64,
}

fn cmd_norm(cli: &Cli, sigma: Option<f64>, theta: Option<f64>) -> CliResult<String> {
    let cfg: NormConfig = read_config(cli.config.as_deref())?;
    let sigma = sigma
        .or(cfg.sigma)
        .ok_or_else(|| CliError::Usage("norm needs --sigma".into()))?;
    let p = BrownianShiftParams::new(sigma, theta.or(cfg.theta).unwrap_or(0.0))?;
    let trunc = resolve_trunc(cli.trunc, cfg.trunc)?;
    let d = norm_diagnostic(&p, trunc, cli.seed.unwrap_or(DEFAULT_SEED))?;
    let r = NormReport {
        sigma: p.sigma(),
        theta: p.theta(),
        trunc,
        formula: d.exact,
        truncated: d.truncated.value,
        gap: d.gap,
        power_iterations: d.truncated.iterations,
        slot_image_norm: apply(&p, &BrownianVector::slot(trunc)).norm(),
    };
    Ok(match cli.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&r),
        Format::Text => format!(
            "sigma {}  theta {}  N {}\nformula    {:.15}\ntruncated  {:.15}\ngap        {:.3e}\n",
            r.sigma, r.theta, r.trunc, r.formula, r.truncated, r.gap
        ),
        Format::Csv => format!(
            "sigma,theta,trunc,formula,truncated,gap\n{},{},{},{:e},{:e},{:e}\n",
            r.sigma, r.theta, r.trunc, r.formula, r.truncated, r.gap
        ),
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Side {
    subspace: SubspaceDescriptor,
    /// Defaults to the subspace's own parameters for Type II.
    #[serde(default)]
    params: Option<BrownianShiftParams>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PairConfig {
    first: Side,
    second: Side,
    #[serde(default)]
    tol_theta: Option<f64>,
    #[serde(default)]
    tol_ratio: Option<f64>,
    #[serde(default)]
    trunc: Option<usize>,
}

fn build_side(side: Side, order: usize) -> CliResult<(SubspaceSpec, BrownianShiftParams)> {
    let mut desc = side.subspace;
    let params = match (side.params, desc.kind) {
        (Some(p), _) => p,
        (None, SubspaceKind::TypeII) => {
            let (Some(s), Some(t)) = (desc.sigma, desc.theta) else {
                return Err(CliError::Usage("Type II subspace needs sigma and theta, or params".into()));
            };
            BrownianShiftParams::new(s, t)?
        }
        (None, SubspaceKind::TypeI) => {
            return Err(CliError::Usage("Type I subspace needs operator params".into()));
        }
    };
    if desc.kind == SubspaceKind::TypeII {
        desc.sigma.get_or_insert(params.sigma());
        desc.theta.get_or_insert(params.theta());
    }
    Ok((SubspaceSpec::build(desc, order)?, params))
}

fn cmd_classify(cli: &Cli) -> CliResult<String> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| CliError::Usage("classify needs --config <pair.json>".into()))?;
    let text = fs::read_to_string(path)?;
    let cfg: PairConfig =
        serde_json::from_str(&text).map_err(|e| LabError::Schema(format!("{}: {e}", path.display())))?;
    let trunc = resolve_trunc(cli.trunc, cfg.trunc)?;
    let a = build_side(cfg.first, trunc)?;
    let b = build_side(cfg.second, trunc)?;
    let v: EquivalenceVerdict = classify_equivalence(
        (&a.0, &a.1),
        (&b.0, &b.1),
        cfg.tol_theta.unwrap_or(DEFAULT_TOL_THETA),
        cfg.tol_ratio.unwrap_or(DEFAULT_TOL_RATIO),
    )?;
    Ok(match cli.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&v),
        Format::Text => format!(
            "{} ({}){}\n",
            if v.equivalent { "equivalent" } else { "not equivalent" },
            v.reason.as_str(),
            v.ratio_residual.map(|r| format!(", ratio residual {r:.3e}")).unwrap_or_default()
        ),
        Format::Csv => format!(
            "equivalent,reason,ratio_residual\n{},{},{}\n",
            v.equivalent,
            v.reason.as_str(),
            v.ratio_residual.map(|r| format!("{r:e}")).unwrap_or_default()
        ),
    })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct VectorConfig {
    #[serde(default)]
    coeffs: Vec<ComplexJson>,
    #[serde(default = "zero")]
    scalar: ComplexJson,
}

fn zero() -> ComplexJson {
    ComplexJson { re: 0.0, im: 0.0 }
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct DecayConfig {
    sigma: Option<f64>,
    theta: Option<f64>,
    n_max: Option<usize>,
    adjoint: bool,
    u: Option<VectorConfig>,
    trunc: Option<usize>,
}

fn cmd_decay(cli: &Cli, sigma: Option<f64>, theta: Option<f64>, n_max: Option<usize>, adjoint: bool) -> CliResult<String> {
    let cfg: DecayConfig = read_config(cli.config.as_deref())?;
    let sigma = sigma
        .or(cfg.sigma)
        .ok_or_else(|| CliError::Usage("decay needs --sigma".into()))?;
    let p = BrownianShiftParams::new(sigma, theta.or(cfg.theta).unwrap_or(0.0))?;
    let trunc = resolve_trunc(cli.trunc, cfg.trunc)?;
    let n_max = n_max.or(cfg.n_max).unwrap_or(50);
    if n_max >= trunc {
        return Err(LabError::Dimension(format!("n_max = {n_max} must stay below truncation {trunc}")).into());
    }
    let u = match cfg.u {
        None => BrownianVector::slot(trunc),
        Some(v) => {
            if v.coeffs.len() > trunc {
                return Err(LabError::Dimension(format!("{} coefficients exceed truncation {trunc}", v.coeffs.len())).into());
            }
            let coeffs: Vec<_> = v.coeffs.iter().map(|&c| c.into()).collect();
            BrownianVector::new(HardyVector::from_coeffs(&coeffs, trunc), v.scalar.into())
        }
    };
    if u.norm_sqr() == 0.0 {
        return Err(LabError::Domain("decay of the zero vector".into()).into());
    }
    let report: DecayReport = if adjoint || cfg.adjoint {
        c00_adjoint_decay(&p, &u, n_max)?
    } else {
        c00_forward_decay(&p, &u, n_max)?
    };
    Ok(match cli.format.unwrap_or(Format::Csv) {
        Format::Csv => report.to_csv(),
        Format::Json => to_json(&report),
        Format::Text => {
            let mut s = format!("{:>5}  {:>14}  {:>14}\n", "n", "measured", "bound");
            for ((n, m), b) in report.n_values.iter().zip(&report.measured).zip(&report.bound) {
                s += &format!("{n:>5}  {m:>14.6e}  {b:>14.6e}\n");
            }
            s += &format!("bound satisfied: {}\n", report.satisfied);
            s
        }
    })
}

fn cmd_verify(cli: &Cli) -> CliResult<(String, BatteryReport)> {
    let cfg: BatteryConfig = read_config(cli.config.as_deref())?;
    let seed = cli.seed.or(cfg.seed).unwrap_or(DEFAULT_SEED);
    let trunc = resolve_trunc(cli.trunc, cfg.trunc)?;
    let report = run_battery(&cfg, seed, trunc)?;
    let body = match cli.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&report),
        Format::Text => report.to_text(),
        Format::Csv => report.to_csv(),
    };
    Ok((body, report))
}

fn run(cli: &Cli) -> CliResult<()> {
    let body = match &cli.command {
        Command::Norm { sigma, theta } => cmd_norm(cli, *sigma, *theta)?,
        Command::Classify => cmd_classify(cli)?,
        Command::Decay {
            sigma,
            theta,
            n_max,
            adjoint,
        } => cmd_decay(cli, *sigma, *theta, *n_max, *adjoint)?,
        Command::VerifyPaper => {
            let (body, report) = cmd_verify(cli)?;
            emit(cli.out.as_deref(), &body)?;
            let failed: Vec<_> = report.failures().collect();
            for c in &failed {
                eprintln!(
                    "FAIL {}: expected {:e}, computed {:e}, tolerance {:e}",
                    c.name, c.expected, c.computed, c.tolerance
                );
            }
            return if failed.is_empty() {
                Ok(())
            } else {
                Err(CliError::Failed(failed.len()))
            };
        }
    };
    emit(cli.out.as_deref(), &body)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bsl: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
