//! Command-line front end. Every command prints (or writes to `--out`) a JSON
//! report carrying full provenance; some also offer CSV.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::json;

use crate::chaining;
use crate::error::{Error, Result};
use crate::geometry::{self, SetFamily};
use crate::harness::{self, EnsembleSpec, SweepConfig};
use crate::report::{self, Provenance, Report};
use crate::rip;
use crate::sketch::{EnsembleKind, SketchDescriptor, SketchOperator};
use crate::transforms::TransformKind;

#[derive(Debug, Parser)]
#[command(name = "sorsketch", version, about = "Structured sketching, RIP certification and width estimation")]
pub struct Cli {
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Monte-Carlo trials (command-specific default when omitted).
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Absolute constant used by the bound calculators.
    #[arg(long = "constant-C", alias = "constant-c", global = true, default_value_t = 1.0)]
    pub constant_c: f64,
    /// Worker threads (defaults to all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte-Carlo Gaussian mean width and radius of a set.
    Width(FamilyArgs),
    /// RIP constant of a matrix (exact enumeration, randomized beyond the budget).
    Rip(RipArgs),
    /// Multiresolution RIP check.
    Mrip(MripArgs),
    /// Dimension and parameter calculators.
    Bounds {
        #[command(subcommand)]
        which: BoundsCommand,
    },
    /// Apply an operator to vectors read from CSV.
    Sketch(SketchArgs),
    /// Empirical distortion against sketch dimension.
    Sweep(SweepArgs),
    /// Apply-time benchmark, SORS against dense Gaussian.
    Bench(BenchArgs),
    /// Greedy successive covers and the gamma_2 upper estimate.
    Gamma2(Gamma2Args),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyKind {
    Sphere,
    Sparse,
    Subspace,
    L1,
    Points,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct FamilyArgs {
    #[arg(long, value_enum)]
    pub family: FamilyKind,
    /// Ambient dimension.
    #[arg(long)]
    pub n: Option<usize>,
    /// Sparsity for `sparse`.
    #[arg(long)]
    pub s: Option<usize>,
    /// Subspace dimension for `subspace` (random subspace drawn from the seed).
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    /// CSV of points (`points`) or JSON set description (`json`).
    #[arg(long)]
    pub input: Option<PathBuf>,
}

impl FamilyArgs {
    fn need_n(&self) -> Result<usize> {
        self.n
            .ok_or_else(|| Error::InvalidParameter("--n is required for this family".into()))
    }

    pub fn build(&self, seed: u64) -> Result<SetFamily> {
        let input = || {
            self.input
                .clone()
                .ok_or_else(|| Error::InvalidParameter("--input is required for this family".into()))
        };
        match self.family {
            FamilyKind::Sphere => SetFamily::sphere(self.need_n()?),
            FamilyKind::Sparse => SetFamily::sparse_unit(
                self.need_n()?,
                self.s.ok_or_else(|| Error::InvalidParameter("--s is required".into()))?,
            ),
            FamilyKind::Subspace => SetFamily::random_subspace(
                self.need_n()?,
                self.k.ok_or_else(|| Error::InvalidParameter("--k is required".into()))?,
                crate::rng::child_seed(seed, "cli/subspace", 0),
            ),
            FamilyKind::L1 => SetFamily::l1_ball(self.need_n()?, self.radius),
            FamilyKind::Points => SetFamily::finite_points(report::read_points_csv(&input()?)?),
            FamilyKind::Json => {
                let family: SetFamily = serde_json::from_str(&std::fs::read_to_string(input()?)?)?;
                validate_family(family)
            }
        }
    }
}

fn validate_family(f: SetFamily) -> Result<SetFamily> {
    match f {
        SetFamily::FinitePoints { points, .. } => SetFamily::finite_points(points),
        SetFamily::SparseUnit { n, s } => SetFamily::sparse_unit(n, s),
        SetFamily::SubspaceBall { basis, .. } => SetFamily::subspace_ball(basis),
        SetFamily::L1Ball { n, radius } => SetFamily::l1_ball(n, radius),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EnsembleArg {
    Sors,
    Gaussian,
    /// SORS over a permuted identity (maximal coherence control).
    IdentityControl,
}

#[derive(Debug, Clone, Args)]
pub struct OperatorArgs {
    #[arg(long, value_enum, default_value_t = EnsembleArg::Sors)]
    pub ensemble: EnsembleArg,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    /// Sample distinct rows instead of i.i.d. rows.
    #[arg(long)]
    pub no_replacement: bool,
    /// JSON operator descriptor; overrides the flags above.
    #[arg(long)]
    pub descriptor: Option<PathBuf>,
}

impl OperatorArgs {
    fn descriptor(&self, seed: u64) -> Result<SketchDescriptor> {
        if let Some(path) = &self.descriptor {
            return Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?);
        }
        let n = self
            .n
            .ok_or_else(|| Error::InvalidParameter("--n is required".into()))?;
        let m = self
            .m
            .ok_or_else(|| Error::InvalidParameter("--m is required".into()))?;
        let (kind, transform) = match self.ensemble {
            EnsembleArg::Sors => (EnsembleKind::Sors, TransformKind::WalshHadamard),
            EnsembleArg::Gaussian => (EnsembleKind::Gaussian, TransformKind::WalshHadamard),
            EnsembleArg::IdentityControl => (EnsembleKind::Sors, TransformKind::IdentityPermuted),
        };
        Ok(SketchDescriptor {
            kind,
            n,
            m,
            seed,
            replacement: kind == EnsembleKind::Sors && !self.no_replacement,
            transform,
        })
    }

    fn build(&self, seed: u64) -> Result<SketchOperator> {
        SketchOperator::from_descriptor(&self.descriptor(seed)?)
    }
}

#[derive(Debug, Clone, Args)]
pub struct MatrixSource {
    #[command(flatten)]
    pub op: OperatorArgs,
    /// Dense matrix from CSV (one row per line); overrides the operator flags.
    #[arg(long)]
    pub matrix: Option<PathBuf>,
}

impl MatrixSource {
    fn load(&self, seed: u64) -> Result<(DMatrix<f64>, Option<SketchDescriptor>)> {
        if let Some(path) = &self.matrix {
            let rows = report::read_points_csv(path)?;
            let cols = rows[0].len();
            if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
                return Err(Error::LengthMismatch {
                    expected: cols,
                    actual: bad.len(),
                });
            }
            let flat: Vec<f64> = rows.concat();
            return Ok((DMatrix::from_row_slice(rows.len(), cols, &flat), None));
        }
        let op = self.op.build(seed)?;
        Ok((op.materialize()?, Some(op.descriptor().clone())))
    }
}

#[derive(Debug, Clone, Args)]
pub struct RipArgs {
    #[command(flatten)]
    pub source: MatrixSource,
    #[arg(long)]
    pub s: usize,
    /// Also report whether RIP(delta, s) holds.
    #[arg(long)]
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct MripArgs {
    #[command(flatten)]
    pub source: MatrixSource,
    #[arg(long)]
    pub s: usize,
    #[arg(long)]
    pub delta: f64,
}

#[derive(Debug, Subcommand)]
pub enum BoundsCommand {
    /// Gaussian requirement ceil((omega + eta)^2 / delta^2).
    Gordon {
        #[arg(long)]
        omega: f64,
        #[arg(long, default_value_t = 0.0)]
        eta: f64,
        #[arg(long)]
        delta: f64,
    },
    /// SORS requirement with polylog and coherence factors.
    Sors {
        #[arg(long)]
        omega: f64,
        #[arg(long, default_value_t = 1.0)]
        rad: f64,
        #[arg(long, default_value_t = 0.0)]
        eta: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        n: f64,
        #[arg(long, default_value_t = 1.0)]
        coherence: f64,
    },
    /// RIP parameters sufficient for a discrete JL embedding of a finite set.
    Kw {
        #[arg(long)]
        set_size: usize,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.0)]
        eta: f64,
        /// Cap the sparsity at the ambient dimension.
        #[arg(long)]
        n: Option<usize>,
    },
    /// MRIP sparsity and distortion levels for embedding a set of given width and radius.
    Thm31 {
        #[arg(long)]
        omega: f64,
        #[arg(long, default_value_t = 1.0)]
        rad: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 0.0)]
        eta: f64,
    },
    /// Rows needed for RIP(delta, s) of a subsampled orthonormal matrix.
    Rip {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        s: usize,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 0.0)]
        eta: f64,
        #[arg(long, default_value_t = 1.0)]
        coherence: f64,
    },
    /// Rows needed for multiresolution RIP.
    Mrip {
        #[arg(long)]
        n: f64,
        #[arg(long)]
        s: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 0.0)]
        eta: f64,
        #[arg(long, default_value_t = 1.0)]
        coherence: f64,
    },
}

#[derive(Debug, Clone, Args)]
pub struct SketchArgs {
    #[command(flatten)]
    pub op: OperatorArgs,
    /// CSV of input vectors, one per row.
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    #[arg(long, value_enum, default_value_t = EnsembleKindArg::Sors)]
    pub ensemble: EnsembleKindArg,
    /// Comma-separated, strictly increasing sketch dimensions.
    #[arg(long, value_delimiter = ',', required = true)]
    pub m_grid: Vec<usize>,
    #[arg(long, default_value_t = 200)]
    pub num_points: usize,
    #[arg(long, default_value_t = 1.0)]
    pub eta: f64,
    #[arg(long)]
    pub no_replacement: bool,
    #[arg(long, default_value_t = 2000)]
    pub width_trials: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EnsembleKindArg {
    Sors,
    Gaussian,
}

impl From<EnsembleKindArg> for EnsembleKind {
    fn from(value: EnsembleKindArg) -> Self {
        match value {
            EnsembleKindArg::Sors => EnsembleKind::Sors,
            EnsembleKindArg::Gaussian => EnsembleKind::Gaussian,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Comma-separated powers of two.
    #[arg(long, value_delimiter = ',', default_values_t = [1024usize, 4096, 16384, 65536])]
    pub n_grid: Vec<usize>,
    #[arg(long, default_value_t = 256)]
    pub m: usize,
}

#[derive(Debug, Clone, Args)]
pub struct Gamma2Args {
    #[command(flatten)]
    pub family: FamilyArgs,
    /// Net size for continuous families.
    #[arg(long, default_value_t = chaining::DEFAULT_NET_SIZE)]
    pub net_size: usize,
    /// Deepest cover level (defaults to the first level with room for every point).
    #[arg(long)]
    pub max_level: Option<usize>,
    #[arg(long, default_value_t = 2000)]
    pub width_trials: usize,
}

/// Arguments recorded in provenance: everything except where the output goes
/// and how many threads ran, neither of which affects the numbers.
fn recorded_arguments(args: &[String]) -> Vec<String> {
    let mut out = Vec::new();
    let mut skip_next = false;
    for a in args.iter().skip(1) {
        if skip_next {
            skip_next = false;
            continue;
        }
        if a == "--out" || a == "--threads" {
            skip_next = true;
            continue;
        }
        if a.starts_with("--out=") || a.starts_with("--threads=") {
            continue;
        }
        out.push(a.clone());
    }
    out
}

fn envelope<T: Serialize>(cli: &Cli, command: &str, args: &[String], result: T) -> Result<String> {
    let report = Report {
        command: command.to_string(),
        provenance: Provenance::new(cli.seed, cli.trials, cli.constant_c, recorded_arguments(args)),
        result,
    };
    let mut s = serde_json::to_string_pretty(&report)?;
    s.push('\n');
    Ok(s)
}

/// Execute a parsed command line and return the rendered report.
pub fn execute(cli: &Cli, args: &[String]) -> Result<String> {
    let seed = cli.seed;
    let c = cli.constant_c;
    match &cli.command {
        Command::Width(fam) => {
            let family = fam.build(seed)?;
            let trials = cli.trials.unwrap_or(geometry::DEFAULT_WIDTH_TRIALS);
            let width = geometry::width_estimate(&family, trials, seed)?;
            envelope(
                cli,
                "width",
                args,
                json!({ "family": family, "width": width, "rad": family.max_norm() }),
            )
        }
        Command::Rip(a) => {
            let (matrix, provenance) = a.source.load(seed)?;
            let mut report = rip::rip_constant(&matrix, a.s, seed)?;
            report.provenance = provenance;
            let holds = a.delta.map(|d| report.delta <= d);
            envelope(cli, "rip", args, json!({ "report": report, "delta_checked": a.delta, "holds": holds }))
        }
        Command::Mrip(a) => {
            let (matrix, provenance) = a.source.load(seed)?;
            let report = rip::mrip_check(&matrix, a.s, a.delta)?;
            envelope(cli, "mrip", args, json!({ "report": report, "operator": provenance }))
        }
        Command::Bounds { which } => {
            let result = match which {
                BoundsCommand::Gordon { omega, eta, delta } => json!({
                    "bound": "gordon", "omega": omega, "eta": eta, "delta": delta,
                    "m_min": geometry::gordon_bound(*omega, *eta, *delta)?,
                }),
                BoundsCommand::Sors {
                    omega,
                    rad,
                    eta,
                    delta,
                    n,
                    coherence,
                } => json!({
                    "bound": "sors", "omega": omega, "rad": rad, "eta": eta, "delta": delta,
                    "n": n, "coherence": coherence, "constant_c": c,
                    "m_min": geometry::sors_bound(*omega, *rad, *eta, *delta, *n, *coherence, c)?,
                }),
                BoundsCommand::Kw { set_size, epsilon, eta, n } => {
                    let mut req = rip::kw_requirements(*set_size, *epsilon, *eta)?;
                    if let Some(n) = n {
                        req = req.capped(*n);
                    }
                    json!({
                        "bound": "kw", "set_size": set_size, "epsilon": epsilon, "eta": eta,
                        "sparsity_required": req.sparsity, "delta_required": req.delta,
                    })
                }
                BoundsCommand::Thm31 { omega, rad, delta, eta } => {
                    let t = rip::theorem31_params(*omega, *rad, *delta, *eta, c)?;
                    json!({
                        "bound": "thm31", "omega": omega, "rad": rad, "delta": delta, "eta": eta,
                        "constant_c": c, "sparsity": t.sparsity, "sparsity_ceil": t.sparsity_ceil(),
                        "delta_tilde": t.delta_tilde,
                    })
                }
                BoundsCommand::Rip {
                    n,
                    s,
                    delta,
                    eta,
                    coherence,
                } => json!({
                    "bound": "rip", "n": n, "s": s, "delta": delta, "eta": eta,
                    "coherence": coherence, "constant_c": c,
                    "m_min": rip::rip_sample_bound(*n, *s, *delta, *eta, *coherence, c)?,
                }),
                BoundsCommand::Mrip {
                    n,
                    s,
                    delta,
                    eta,
                    coherence,
                } => json!({
                    "bound": "mrip", "n": n, "s": s, "delta_tilde": delta, "eta": eta,
                    "coherence": coherence, "constant_c": c,
                    "m_min": rip::mrip_sample_bound(*n, *s, *delta, *eta, *coherence, c)?,
                }),
            };
            envelope(cli, "bounds", args, result)
        }
        Command::Sketch(a) => {
            let op = a.op.build(seed)?;
            let inputs = report::read_points_csv(&a.input)?;
            let outputs = inputs
                .iter()
                .map(|x| op.apply(x))
                .collect::<Result<Vec<_>>>()?;
            match cli.format {
                Format::Csv => report::write_rows_csv(&outputs),
                Format::Json => envelope(
                    cli,
                    "sketch",
                    args,
                    json!({ "descriptor": op.descriptor(), "scale": op.scale(), "vectors": outputs }),
                ),
            }
        }
        Command::Sweep(a) => {
            let family = a.family.build(seed)?;
            let spec = EnsembleSpec {
                kind: a.ensemble.into(),
                replacement: !a.no_replacement,
            };
            let config = SweepConfig {
                num_points: a.num_points,
                eta: a.eta,
                constant_c: c,
                width_trials: a.width_trials,
            };
            let trials = cli.trials.unwrap_or(50);
            let result = harness::distortion_sweep(&family, spec, &a.m_grid, trials, seed, config)?;
            match cli.format {
                Format::Csv => result.to_csv(),
                Format::Json => envelope(cli, "sweep", args, result),
            }
        }
        Command::Bench(a) => {
            let trials = cli.trials.unwrap_or(21);
            let result = harness::bench(&a.n_grid, a.m, trials, seed)?;
            match cli.format {
                Format::Csv => result.to_csv(),
                Format::Json => envelope(cli, "bench", args, result),
            }
        }
        Command::Gamma2(a) => {
            let family = a.family.build(seed)?;
            let net = chaining::net_from_family(&family, a.net_size, crate::rng::child_seed(seed, "cli/net", 0));
            let max_level = a.max_level.unwrap_or_else(|| chaining::default_max_level(net.len()));
            let hierarchy = chaining::build_covers(&net, max_level)?;
            let width = geometry::width_estimate(&family, a.width_trials, seed)?;
            let ratio = hierarchy.gamma2_upper / width.omega_hat;
            envelope(
                cli,
                "gamma2",
                args,
                json!({
                    "net_size": net.len(),
                    "max_level": max_level,
                    "gamma2_upper": hierarchy.gamma2_upper,
                    "width": width,
                    "gamma2_over_width": ratio,
                    "levels": hierarchy.summary(),
                }),
            )
        }
    }
}

/// Parse `args`, run, and write the report.
pub fn run(args: Vec<String>) -> Result<()> {
    let cli = Cli::parse_from(&args);
    let rendered = match cli.threads {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?
            .install(|| execute(&cli, &args))?,
        None => execute(&cli, &args)?,
    };
    match &cli.out {
        Some(path) => std::fs::write(path, rendered)?,
        None => print!("{rendered}"),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> String {
        let args: Vec<String> = args.iter().map(|s| s.to_string()).collect();
        execute(&Cli::parse_from(&args), &args).unwrap()
    }

    #[test]
    fn bounds_report() {
        let out = run_args(&["sorsketch", "bounds", "gordon", "--omega", "10", "--eta", "2", "--delta", "0.5"]);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["result"]["m_min"], 576);
        assert_eq!(v["provenance"]["tool"], "sorsketch");
    }

    #[test]
    fn provenance_ignores_output_flags() {
        let args: Vec<String> = ["sorsketch", "--threads", "4", "width", "--out=x.json", "--family", "sphere"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(recorded_arguments(&args), vec!["width", "--family", "sphere"]);
    }
}
