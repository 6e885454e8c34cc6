//! Command-line front end. Every subcommand writes a CSV table (header
//! row, LF endings) to stdout and diagnostics to stderr.
//!
//! Exit codes: `0` success, `2` usage or validation error, `3` a `verify`
//! check failed.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::bounds::{self, BoundQuery, KVariant, Method};
use crate::chain::{self, build_from_spec, load_chain, InitialDistribution, ReversibleChain};
use crate::error::{Error, Result};
use crate::format::{field, real};
use crate::observable::{center, load_observable, random_observable, VectorObservable};
use crate::simulator::simulate_tails;
use crate::verify::run_checks;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_CHECK_FAILED: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "revchain",
    version,
    about = "Tail bounds for vector sums on reversible Markov chains"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Eigenvalue summary of a chain.
    Spectral(ChainArgs),
    /// Evaluate one tail bound at a given N.
    Bound(BoundArgs),
    /// Smallest N that pushes a bound below --target.
    SampleSize(BoundArgs),
    /// Reproduce the sample-size comparison table.
    Table1,
    /// Run the perturbation check battery.
    Verify(VerifyArgs),
    /// Monte Carlo tail estimates against the bound.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct ChainArgs {
    /// Builder (`complete:N`, `hypercube:D`, `cycle:N`) or chain file.
    #[arg(long)]
    pub chain: String,
    /// Use this spectral gap instead of 1 − λ₁.
    #[arg(long = "gap-override")]
    pub gap_override: Option<f64>,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[command(flatten)]
    pub chain: ChainArgs,
    #[arg(long, default_value = "kargin")]
    pub method: String,
    /// k variant for the kargin method: prop9 or literal.
    #[arg(long, default_value = "prop9")]
    pub variant: String,
    /// Observable file; supplies m, σ² and L unless overridden.
    #[arg(long)]
    pub observable: Option<PathBuf>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub eps: f64,
    #[arg(long = "N")]
    pub steps: Option<u64>,
    #[arg(long)]
    pub target: Option<f64>,
    #[arg(long)]
    pub sigma2: Option<f64>,
    #[arg(long = "L")]
    pub linf: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub chi: f64,
    /// Spread; defaults to the chain's max μ / min μ.
    #[arg(long)]
    pub nu: Option<f64>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub chain: ChainArgs,
    #[arg(long)]
    pub observable: Option<PathBuf>,
    /// Dimension of the seeded random observable (ignored with --observable).
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub chain: ChainArgs,
    #[arg(long)]
    pub observable: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "N")]
    pub steps: u64,
    #[arg(long, default_value_t = 10_000)]
    pub replicas: u64,
    /// Thresholds as `start:end:step`, both ends inclusive.
    #[arg(long = "eps-grid")]
    pub eps_grid: String,
}

/// Parses and runs a command line, returning the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return EXIT_OK;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            let _ = writeln!(err, "E_USAGE: {}", first.trim_start_matches("error: "));
            return EXIT_INVALID;
        }
    };
    let result = match &cli.command {
        Command::Spectral(a) => spectral(a, out),
        Command::Bound(a) => bound(a, out),
        Command::SampleSize(a) => sample_size(a, out),
        Command::Table1 => table1(out),
        Command::Verify(a) => verify(a, out),
        Command::Simulate(a) => simulate(a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "{}: {}", e.code(), e);
            EXIT_INVALID
        }
    }
}

fn io(e: std::io::Error) -> Error {
    Error::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    }
}

fn resolve_chain(spec: &str) -> Result<ReversibleChain> {
    build_from_spec(spec).unwrap_or_else(|| load_chain(spec))
}

fn gap_of(chain: &ReversibleChain, args: &ChainArgs) -> Result<f64> {
    match args.gap_override {
        Some(g) => Ok(g),
        None => Ok(chain.spectrum()?.gap),
    }
}

/// Loaded observable, centered, or a seeded random one with `‖f‖_∞ ≤ 1`.
fn resolve_observable(
    chain: &ReversibleChain,
    path: Option<&PathBuf>,
    m: usize,
    seed: u64,
) -> Result<VectorObservable> {
    match path {
        Some(p) => center(&load_observable(p, chain)?, chain),
        None => random_observable(chain, m, 1.0, seed),
    }
}

fn spectral(args: &ChainArgs, out: &mut dyn Write) -> Result<i32> {
    let chain = resolve_chain(&args.chain)?;
    let spec = chain.spectrum()?;
    let gap = args.gap_override.unwrap_or(spec.gap);
    writeln!(
        out,
        "chain,n,lambda0,lambda1,lambda_min,gap,absolute_gap,spread"
    )
    .map_err(io)?;
    writeln!(
        out,
        "{},{},{},{},{},{},{},{}",
        field(chain.label()),
        chain.n(),
        real(spec.eigenvalues[0]),
        real(spec.lambda1()),
        real(spec.smallest()),
        real(gap),
        real(spec.absolute_gap),
        real(chain::spread(&chain)),
    )
    .map_err(io)?;
    Ok(EXIT_OK)
}

fn build_query(args: &BoundArgs) -> Result<BoundQuery> {
    let mut method: Method = args.method.parse()?;
    let variant: KVariant = args.variant.parse()?;
    if method == Method::Kargin && variant == KVariant::LiteralThm1 {
        method = Method::KarginLiteral;
    }
    let chain = resolve_chain(&args.chain.chain)?;
    let observable = args
        .observable
        .as_ref()
        .map(|p| load_observable(p, &chain))
        .transpose()?;
    if let Some(f) = &observable {
        if !f.is_centered() {
            return Err(Error::Precondition(format!(
                "observable {} is not centered (mean {:?})",
                args.observable.as_ref().unwrap().display(),
                f.mean()
            )));
        }
    }
    let dim = args
        .m
        .or(observable.as_ref().map(VectorObservable::dim))
        .unwrap_or(1);
    let linf = args
        .linf
        .or(observable
            .as_ref()
            .map(VectorObservable::linf)
            .filter(|l| *l > 0.0))
        .unwrap_or(1.0);
    let sigma2 = args
        .sigma2
        .or(observable
            .as_ref()
            .map(VectorObservable::principal_variance))
        .unwrap_or(linf * linf);
    let gap = if method.uses_gap() {
        gap_of(&chain, &args.chain)?
    } else {
        args.chain.gap_override.unwrap_or(f64::NAN)
    };
    Ok(BoundQuery {
        method,
        epsilon: args.eps,
        steps: args.steps,
        dim,
        sigma2,
        linf,
        gap,
        spread: args.nu.unwrap_or_else(|| chain::spread(&chain)),
        chi: args.chi,
        n_states: Some(chain.n()),
    })
}

const QUERY_HEADER: &str = "method,m,epsilon,sigma2,L,g,nu,chi";

fn query_fields(q: &BoundQuery) -> String {
    format!(
        "{},{},{},{},{},{},{},{}",
        q.method,
        q.dim,
        real(q.epsilon),
        real(q.sigma2),
        real(q.linf),
        real(q.gap),
        real(q.spread),
        real(q.chi)
    )
}

fn bound(args: &BoundArgs, out: &mut dyn Write) -> Result<i32> {
    let q = build_query(args)?;
    let steps = q.steps.ok_or(Error::MissingParameter("--N"))?;
    let b = bounds::evaluate(&q)?;
    writeln!(out, "{QUERY_HEADER},N,prefactor,rate,probability").map_err(io)?;
    writeln!(
        out,
        "{},{},{},{},{}",
        query_fields(&q),
        steps,
        real(b.prefactor),
        real(b.rate),
        real(b.probability.unwrap_or(f64::NAN))
    )
    .map_err(io)?;
    Ok(EXIT_OK)
}

fn sample_size(args: &BoundArgs, out: &mut dyn Write) -> Result<i32> {
    let q = build_query(args)?;
    let target = args.target.ok_or(Error::MissingParameter("--target"))?;
    let b = bounds::evaluate(&q)?;
    let n = bounds::sample_size(&q, target)?;
    writeln!(out, "{QUERY_HEADER},target,prefactor,rate,N_required").map_err(io)?;
    writeln!(
        out,
        "{},{},{},{},{}",
        query_fields(&q),
        real(target),
        real(b.prefactor),
        real(b.rate),
        n
    )
    .map_err(io)?;
    Ok(EXIT_OK)
}

fn table1(out: &mut dyn Write) -> Result<i32> {
    writeln!(
        out,
        "method,chain,m,N_required,N_required_millions_rounded,printed_mln,flag"
    )
    .map_err(io)?;
    for row in bounds::table1()? {
        let method = match row.method {
            Method::GillmanMd => "gillman",
            m => m.name(),
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            method,
            row.chain.name(),
            row.dim,
            row.n_required.map(|n| n.to_string()).unwrap_or_default(),
            row.millions_rounded().unwrap_or_default(),
            row.printed.map(|p| real(p.millions)).unwrap_or_default(),
            row.flag.name()
        )
        .map_err(io)?;
    }
    Ok(EXIT_OK)
}

fn verify(args: &VerifyArgs, out: &mut dyn Write) -> Result<i32> {
    let chain = resolve_chain(&args.chain.chain)?;
    let f = resolve_observable(&chain, args.observable.as_ref(), args.m, args.seed)?;
    let rows = run_checks(&chain, &f, args.seed)?;
    writeln!(out, "check_name,chain,seed,value,bound,margin,pass").map_err(io)?;
    for r in &rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.check,
            field(&r.chain),
            r.seed,
            real(r.value),
            real(r.bound),
            real(r.margin),
            r.pass
        )
        .map_err(io)?;
    }
    Ok(if rows.iter().all(|r| r.pass) {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    })
}

/// Parses `start:end:step` into an inclusive grid.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidParameter(format!("bad grid `{spec}`; expected start:end:step"));
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let [start, end, step] = parts[..] else {
        return Err(bad());
    };
    if !(step > 0.0 && end >= start && start.is_finite() && end.is_finite()) {
        return Err(bad());
    }
    let count = ((end - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

fn simulate(args: &SimulateArgs, out: &mut dyn Write) -> Result<i32> {
    let chain = resolve_chain(&args.chain.chain)?;
    let f = resolve_observable(&chain, args.observable.as_ref(), args.m, args.seed)?;
    let grid = parse_grid(&args.eps_grid)?;
    let mu0 = InitialDistribution::stationary(&chain);
    let report = simulate_tails(
        &chain,
        &f,
        &mu0,
        args.steps,
        args.replicas,
        &grid,
        args.seed,
    )?;
    let gap = gap_of(&chain, &args.chain)?;
    let linf = if f.linf() > 0.0 { f.linf() } else { 1.0 };
    writeln!(
        out,
        "epsilon,hits,replicas,estimate,upper99,bound_kargin,dominated"
    )
    .map_err(io)?;
    for (i, &eps) in grid.iter().enumerate() {
        let q = BoundQuery {
            steps: Some(args.steps),
            sigma2: f.principal_variance().min(linf * linf),
            linf,
            chi: chain::chi_distance(&mu0, &chain)?.max(1.0),
            ..BoundQuery::new(Method::Kargin, eps, f.dim(), gap)
        };
        let b = bounds::bound_kargin(&q, KVariant::Prop9)?
            .probability
            .expect("steps given");
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            real(eps),
            report.hits[i],
            report.replicas,
            real(report.estimate[i]),
            real(report.upper99[i]),
            real(b),
            b >= report.upper99[i]
        )
        .map_err(io)?;
    }
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        let g = parse_grid("0.02:0.2:0.02").unwrap();
        assert_eq!(g.len(), 10);
        assert!((g[9] - 0.2).abs() < 1e-12);
        assert_eq!(parse_grid("1:1:0.5").unwrap(), vec![1.0]);
        assert!(parse_grid("0.2:0.1:0.01").is_err());
        assert!(parse_grid("0.1:0.2").is_err());
        assert!(parse_grid("0.1:0.2:0").is_err());
    }
}
