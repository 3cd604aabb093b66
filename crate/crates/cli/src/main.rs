//! Batch driver for experiments on finite channel families. Every
//! subcommand echoes its configuration (seed included) to stdout, writes
//! file outputs atomically (temp file + rename), and reruns with identical
//! configuration produce byte-identical outputs.
//!
//! Exit codes: 0 success, 2 validation/usage failure, 3 budget or size
//! limit, 4 IO failure. `AVQCLAB_THREADS` caps internal parallelism.

use std::fmt;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use avqclab_core::avqc::{
    interpolated_family, overlap_example, search_eb_in_hull, symmetrizability, Avqc,
    HullSearchReport, SymmetrizabilityOptions, ValueCertificate,
};
use avqclab_core::capacities::{binary_entropy, chi_minimax_lower_bound, holevo_chi};
use avqclab_core::channels::{diamond_set_distance, DiamondOptions, EbVerdict};
use avqclab_core::finite_resources::{
    blocklength_bound_l, blocklength_rough, derandomize_simulate, randomness_bound_k,
    DerandomizationResult, FiniteResourceParams,
};
use avqclab_core::linalg::{DensityMatrix, PureStateVector};
use avqclab_core::optim::SimplexWeights;

#[derive(Parser)]
#[command(
    name = "avqclab",
    version,
    about = "Numerical experiments on finite arbitrarily varying quantum channels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Construct a channel family and write it to a JSON file.
    Build {
        /// "example" for the fixed two-channel family, or "family" for the
        /// interpolated variant (requires --lambda and --eta).
        kind: String,
        /// Interpolation weight toward the example members.
        #[arg(long)]
        lambda: Option<f64>,
        /// Depolarizing strength of the noise endpoint.
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Estimate the symmetrizability functional of a stored family.
    Symmetrizability {
        /// Path to a family JSON file produced by `build`.
        #[arg(long)]
        avqc: PathBuf,
        /// Blocklength of the functional.
        #[arg(long, default_value_t = 1)]
        l: usize,
        /// Random witness starts for the ascent.
        #[arg(long = "budget-starts", default_value_t = 64)]
        budget_starts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Optional JSON report destination.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep the interpolated family over a (lambda, eta) grid and record
    /// symmetrizability, distance to the limit family, hull classification,
    /// and the minimax Holevo bound.
    SweepDiscontinuity {
        /// Points per axis; the grid is the product of two uniform axes on
        /// [0, 1].
        #[arg(long, default_value_t = 5)]
        grid: usize,
        #[arg(long = "budget-starts", default_value_t = 32)]
        budget_starts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Tabulate the Holevo quantity along the hull of the example family
    /// against its closed form.
    Capacity {
        /// Number of hull points t between 0 and 1 inclusive.
        #[arg(long, default_value_t = 11)]
        grid: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Tabulate the randomness and blocklength counting formulas.
    Tradeoff {
        /// Comma-separated error thresholds; default is the ten-point
        /// harmonic grid 0.05/i.
        #[arg(long)]
        lambdas: Option<String>,
        /// Comma-separated exponent gaps; default 0.2.
        #[arg(long)]
        gaps: Option<String>,
        /// Comma-separated alphabet sizes; default 2.
        #[arg(long = "s-sizes")]
        s_sizes: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample random code mixtures from the permutation ensemble of a toy
    /// code and compare the failure rate against the tail bound.
    Simulate {
        #[arg(long)]
        avqc: PathBuf,
        /// Number of sampled permutation codes per trial.
        #[arg(long)]
        k: u64,
        /// Blocklength.
        #[arg(long, default_value_t = 2)]
        l: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Worst-case error threshold defining a failed trial.
        #[arg(long, default_value_t = 0.5)]
        lambda: f64,
        /// Message rate; the code carries max(2, floor(2^{rate * l}))
        /// messages.
        #[arg(long, default_value_t = 0.5)]
        rate: f64,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, default_value_t = 0.3)]
        exponent: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Classify each member of a family and search its hull for an
    /// entanglement-breaking mixture.
    EbHull {
        #[arg(long)]
        avqc: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Hausdorff diamond-norm distance between two stored families.
    DiamondDistance {
        #[arg(long)]
        avqc: PathBuf,
        #[arg(long)]
        other: PathBuf,
        #[arg(long = "budget-starts", default_value_t = 32)]
        budget_starts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum CliError {
    Core(avqclab_core::Error),
    Io(String),
    Usage(String),
}

impl From<avqclab_core::Error> for CliError {
    fn from(e: avqclab_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(m) | CliError::Usage(m) => f.write_str(m),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) => {
                if e.is_validation() {
                    2
                } else {
                    3
                }
            }
            CliError::Io(_) => 4,
        }
    }
}

fn main() -> ExitCode {
    configure_threads();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn configure_threads() {
    if let Ok(v) = std::env::var("AVQCLAB_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            if n > 0 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn run(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Build {
            kind,
            lambda,
            eta,
            out,
            seed,
        } => cmd_build(&kind, lambda, eta, &out, seed),
        Command::Symmetrizability {
            avqc,
            l,
            budget_starts,
            seed,
            out,
        } => cmd_symmetrizability(&avqc, l, budget_starts, seed, out.as_deref()),
        Command::SweepDiscontinuity {
            grid,
            budget_starts,
            seed,
            out,
        } => cmd_sweep(grid, budget_starts, seed, &out),
        Command::Capacity { grid, seed, out } => cmd_capacity(grid, seed, &out),
        Command::Tradeoff {
            lambdas,
            gaps,
            s_sizes,
            seed,
            out,
        } => cmd_tradeoff(
            lambdas.as_deref(),
            gaps.as_deref(),
            s_sizes.as_deref(),
            seed,
            &out,
        ),
        Command::Simulate {
            avqc,
            k,
            l,
            trials,
            seed,
            lambda,
            rate,
            eps,
            exponent,
            out,
        } => cmd_simulate(&avqc, k, l, trials, seed, lambda, rate, eps, exponent, &out),
        Command::EbHull { avqc, seed, out } => cmd_eb_hull(&avqc, seed, out.as_deref()),
        Command::DiamondDistance {
            avqc,
            other,
            budget_starts,
            seed,
            out,
        } => cmd_diamond(&avqc, &other, budget_starts, seed, out.as_deref()),
    }
}

// ---- shared plumbing ----

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Usage(format!("{} has no file name", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.{}.tmp",
        name.to_string_lossy(),
        std::process::id()
    ));
    fs::write(&tmp, bytes).map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))?;
    Ok(())
}

fn load_family(path: &Path) -> Result<Avqc, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// Twelve significant digits, scientific notation; fixed across platforms
/// so that reruns and diffs are byte-stable.
fn sci(x: f64) -> String {
    format!("{x:.11e}")
}

fn to_json(value: &impl Serialize) -> Result<String, CliError> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| CliError::Io(e.to_string()))
}

fn parse_f64_list(s: &str, flag: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| CliError::Usage(format!("{flag}: '{t}': {e}")))
        })
        .collect()
}

fn parse_usize_list(s: &str, flag: &str) -> Result<Vec<usize>, CliError> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|e| CliError::Usage(format!("{flag}: '{t}': {e}")))
        })
        .collect()
}

// ---- subcommands ----

fn cmd_build(
    kind: &str,
    lambda: Option<f64>,
    eta: Option<f64>,
    out: &Path,
    seed: u64,
) -> Result<(), CliError> {
    let family = match kind {
        "example" => {
            if lambda.is_some() || eta.is_some() {
                return Err(CliError::Usage(
                    "--lambda/--eta only apply to kind 'family'".into(),
                ));
            }
            overlap_example()
        }
        "family" => {
            let l = lambda
                .ok_or_else(|| CliError::Usage("kind 'family' requires --lambda".into()))?;
            let e =
                eta.ok_or_else(|| CliError::Usage("kind 'family' requires --eta".into()))?;
            interpolated_family(l, e)?
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown build kind '{other}' (expected 'example' or 'family')"
            )))
        }
    };
    write_atomic(out, to_json(&family)?.as_bytes())?;
    // The written file must reload through the validating parser.
    let reloaded = load_family(out)?;
    println!("command: build");
    println!("seed: {seed}");
    println!("kind: {kind}");
    println!("label: {}", reloaded.label());
    println!(
        "channels: {} ({} -> {})",
        reloaded.num_channels(),
        reloaded.dim_in(),
        reloaded.dim_out()
    );
    println!("out: {}", out.display());
    Ok(())
}

fn describe_certificate(cert: &ValueCertificate) -> String {
    match cert {
        ValueCertificate::StructuredZero { residual } => {
            format!("structured-zero (residual {})", sci(*residual))
        }
        ValueCertificate::AscentLowerBound { converged_starts } => {
            format!("ascent-lower-bound ({converged_starts} converged starts)")
        }
    }
}

fn cmd_symmetrizability(
    avqc: &Path,
    l: usize,
    budget_starts: usize,
    seed: u64,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let family = load_family(avqc)?;
    let opts = SymmetrizabilityOptions {
        starts: budget_starts,
        seed,
        ..Default::default()
    };
    let report = symmetrizability(&family, l, &opts)?;
    println!("command: symmetrizability");
    println!("seed: {seed}");
    println!("avqc: {} (label {})", avqc.display(), family.label());
    println!("l: {l}");
    println!("budget-starts: {budget_starts}");
    println!("value: {}", sci(report.value));
    println!("certificate: {}", describe_certificate(&report.certificate));
    println!("converged: {}", report.converged);
    if let Some(out) = out {
        write_atomic(out, to_json(&report)?.as_bytes())?;
        println!("out: {}", out.display());
    }
    Ok(())
}

fn cmd_sweep(grid: usize, budget_starts: usize, seed: u64, out: &Path) -> Result<(), CliError> {
    if grid < 2 {
        return Err(CliError::Usage("--grid must be at least 2".into()));
    }
    println!("command: sweep-discontinuity");
    println!("seed: {seed}");
    println!("grid: {grid}");
    println!("budget-starts: {budget_starts}");
    println!("out: {}", out.display());

    let limit = overlap_example();
    let inputs = [PureStateVector::basis(2, 0), PureStateVector::basis(2, 1)];
    let sym_opts = SymmetrizabilityOptions {
        starts: budget_starts,
        seed,
        ..Default::default()
    };
    let diamond_opts = DiamondOptions {
        starts: budget_starts.min(16),
        seed,
        ..Default::default()
    };

    let mut csv = String::from("lambda,eta,F1,D_to_limit_set,eb_hull_verdict,chi_minimax\n");
    for i in 0..grid {
        let lambda = i as f64 / (grid - 1) as f64;
        for j in 0..grid {
            let eta = j as f64 / (grid - 1) as f64;
            let family = interpolated_family(lambda, eta)?;
            let sym = symmetrizability(&family, 1, &sym_opts)?;
            let (dist, _) =
                diamond_set_distance(family.channels(), limit.channels(), &diamond_opts)?;
            let hull = search_eb_in_hull(&family, seed)?;
            let mm = chi_minimax_lower_bound(&family, &inputs, 21)?;
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{}",
                sci(lambda),
                sci(eta),
                sci(sym.value),
                sci(dist),
                hull.verdict,
                sci(mm.value)
            );
            println!(
                "row: lambda={lambda} eta={eta} F1={} converged={} certificate={} verdict={}",
                sci(sym.value),
                sym.converged,
                describe_certificate(&sym.certificate),
                hull.verdict
            );
        }
    }
    write_atomic(out, csv.as_bytes())?;
    Ok(())
}

fn cmd_capacity(grid: usize, seed: u64, out: &Path) -> Result<(), CliError> {
    if grid < 2 {
        return Err(CliError::Usage("--grid must be at least 2".into()));
    }
    let family = overlap_example();
    let weights = SimplexWeights::uniform(2);
    let mut csv = String::from("t,chi,closed_form,abs_err\n");
    let mut min_chi = f64::INFINITY;
    let mut min_t = 0.0;
    for i in 0..grid {
        let t = i as f64 / (grid - 1) as f64;
        let mixed = family.hull_member(&SimplexWeights::projected(&[1.0 - t, t]))?;
        let outputs = (0..2)
            .map(|k| mixed.apply(&DensityMatrix::basis_projector(2, k)))
            .collect::<avqclab_core::Result<Vec<_>>>()?;
        let chi = holevo_chi(&outputs, &weights)?;
        let closed = 1.0 - binary_entropy(t)? / 2.0;
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            sci(t),
            sci(chi),
            sci(closed),
            sci((chi - closed).abs())
        );
        if chi < min_chi {
            min_chi = chi;
            min_t = t;
        }
    }
    println!("command: capacity");
    println!("seed: {seed}");
    println!("grid: {grid}");
    println!("minimum: chi={} at t={}", sci(min_chi), sci(min_t));
    println!("out: {}", out.display());
    write_atomic(out, csv.as_bytes())?;
    Ok(())
}

fn cmd_tradeoff(
    lambdas: Option<&str>,
    gaps: Option<&str>,
    s_sizes: Option<&str>,
    seed: u64,
    out: &Path,
) -> Result<(), CliError> {
    let lambdas = match lambdas {
        Some(s) => parse_f64_list(s, "--lambdas")?,
        None => (1..=10).map(|i| 0.05 / i as f64).collect(),
    };
    let gaps = match gaps {
        Some(s) => parse_f64_list(s, "--gaps")?,
        None => vec![0.2],
    };
    let s_sizes = match s_sizes {
        Some(s) => parse_usize_list(s, "--s-sizes")?,
        None => vec![2],
    };
    if lambdas.is_empty() || gaps.is_empty() || s_sizes.is_empty() {
        return Err(CliError::Usage("grids must be nonempty".into()));
    }

    let mut csv = String::from("lambda,E_minus_eps,S_size,K,L,L_rough\n");
    for &lambda in &lambdas {
        for &gap in &gaps {
            for &s in &s_sizes {
                // The counting formulas depend only on the difference
                // exponent - eps; taking (gap, 2 gap) keeps that difference
                // exactly equal to the requested gap in floating point.
                let p = FiniteResourceParams::new(lambda, 0.5, gap, 2.0 * gap, s)?;
                let k = randomness_bound_k(&p)?;
                let l = blocklength_bound_l(&p)?;
                let rough = blocklength_rough(&p)?;
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{}",
                    sci(lambda),
                    sci(gap),
                    s,
                    k,
                    l,
                    sci(rough)
                );
            }
        }
    }
    println!("command: tradeoff");
    println!("seed: {seed}");
    println!("lambdas: {}", lambdas.len());
    println!("gaps: {}", gaps.len());
    println!("s-sizes: {}", s_sizes.len());
    println!("out: {}", out.display());
    write_atomic(out, csv.as_bytes())?;
    Ok(())
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct SimulateConfig {
    avqc: String,
    label: String,
    k: u64,
    l: usize,
    trials: usize,
    seed: u64,
    lambda: f64,
    rate: f64,
    eps: f64,
    exponent: f64,
    s_size: usize,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct SimulateReport {
    config: SimulateConfig,
    result: DerandomizationResult,
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    avqc: &Path,
    k: u64,
    l: usize,
    trials: usize,
    seed: u64,
    lambda: f64,
    rate: f64,
    eps: f64,
    exponent: f64,
    out: &Path,
) -> Result<(), CliError> {
    let family = load_family(avqc)?;
    let s_size = family.num_channels().max(2);
    let params = FiniteResourceParams::new(lambda, rate, eps, exponent, s_size)?;
    let result = derandomize_simulate(&family, &params, k, l, trials, seed)?;
    let report = SimulateReport {
        config: SimulateConfig {
            avqc: avqc.display().to_string(),
            label: family.label().to_string(),
            k,
            l,
            trials,
            seed,
            lambda,
            rate,
            eps,
            exponent,
            s_size,
        },
        result,
    };
    println!("command: simulate");
    println!("seed: {seed}");
    println!("avqc: {} (label {})", avqc.display(), family.label());
    println!("k: {k}");
    println!("l: {l}");
    println!("trials: {trials}");
    println!("lambda: {lambda}");
    println!("rate: {rate}");
    println!("worst-case error: {}", sci(report.result.worst_case_error));
    println!("failure fraction: {}", sci(report.result.failure_fraction));
    println!("theoretical bound: {}", sci(report.result.theoretical_bound));
    println!("out: {}", out.display());
    write_atomic(out, to_json(&report)?.as_bytes())?;
    Ok(())
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct MemberClassification {
    index: usize,
    verdict: EbVerdict,
    min_pt_eigenvalue: f64,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct EbHullReport {
    label: String,
    members: Vec<MemberClassification>,
    hull: HullSearchReport,
}

fn cmd_eb_hull(avqc: &Path, seed: u64, out: Option<&Path>) -> Result<(), CliError> {
    let family = load_family(avqc)?;
    let members: Vec<MemberClassification> = family
        .channels()
        .iter()
        .enumerate()
        .map(|(index, ch)| MemberClassification {
            index,
            verdict: ch.is_entanglement_breaking(),
            min_pt_eigenvalue: ch.ppt_min_eigenvalue(),
        })
        .collect();
    let hull = search_eb_in_hull(&family, seed)?;
    println!("command: eb-hull");
    println!("seed: {seed}");
    println!("avqc: {} (label {})", avqc.display(), family.label());
    for m in &members {
        println!(
            "member {}: {} (min PT eigenvalue {})",
            m.index,
            m.verdict,
            sci(m.min_pt_eigenvalue)
        );
    }
    println!(
        "hull: {} (best min PT eigenvalue {}, converged {})",
        hull.verdict,
        sci(hull.min_pt_eig),
        hull.converged
    );
    if let Some(out) = out {
        let report = EbHullReport {
            label: family.label().to_string(),
            members,
            hull,
        };
        write_atomic(out, to_json(&report)?.as_bytes())?;
        println!("out: {}", out.display());
    }
    Ok(())
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct DiamondReport {
    label_a: String,
    label_b: String,
    set_distance: f64,
    pairwise: Vec<Vec<f64>>,
}

fn cmd_diamond(
    avqc: &Path,
    other: &Path,
    budget_starts: usize,
    seed: u64,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let a = load_family(avqc)?;
    let b = load_family(other)?;
    let opts = DiamondOptions {
        starts: budget_starts,
        seed,
        ..Default::default()
    };
    let (set_distance, pairwise) = diamond_set_distance(a.channels(), b.channels(), &opts)?;
    println!("command: diamond-distance");
    println!("seed: {seed}");
    println!("avqc: {} (label {})", avqc.display(), a.label());
    println!("other: {} (label {})", other.display(), b.label());
    println!("budget-starts: {budget_starts}");
    println!("set distance: {}", sci(set_distance));
    for (i, row) in pairwise.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|&v| sci(v)).collect();
        println!("pairwise[{i}]: {}", cells.join(" "));
    }
    if let Some(out) = out {
        let report = DiamondReport {
            label_a: a.label().to_string(),
            label_b: b.label().to_string(),
            set_distance,
            pairwise,
        };
        write_atomic(out, to_json(&report)?.as_bytes())?;
        println!("out: {}", out.display());
    }
    Ok(())
}
