//! Finite reversible Markov chains: builders, text ingestion and the
//! spectrum of the symmetrized kernel `S = D P D⁻¹`, `D = diag(√μ)`.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, Matrix, SymmetricEigen};

/// Row sums must equal 1 within this tolerance.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;
/// Largest tolerated `|μ_s P_st − μ_t P_ts|` (and `|(μP)_t − μ_t|`).
pub const REVERSIBILITY_TOLERANCE: f64 = 1e-8;
/// Power iteration stops once `‖μP − μ‖_∞` is below this.
pub const POWER_ITERATION_RESIDUAL: f64 = 1e-12;
/// A power-iteration weight below this marks a transient state.
pub const REDUCIBILITY_THRESHOLD: f64 = 1e-12;
/// Largest supported hypercube dimension (`2^12 = 4096` states, dense).
pub const MAX_HYPERCUBE_DIM: u32 = 12;

const POWER_ITERATION_CAP: usize = 10_000_000;

/// A row-stochastic kernel `P` with a strictly positive invariant
/// distribution `μ` satisfying detailed balance.
#[derive(Debug, Clone, PartialEq)]
pub struct ReversibleChain {
    transition: Matrix,
    stationary: Vec<f64>,
    label: String,
}

impl ReversibleChain {
    /// Validates `P` and a caller-supplied `μ`.
    pub fn with_distribution(
        transition: Matrix,
        stationary: Vec<f64>,
        label: impl Into<String>,
    ) -> Result<Self> {
        validate_kernel(&transition)?;
        let n = transition.rows();
        if stationary.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: stationary.len(),
            });
        }
        if let Some((s, &w)) = stationary
            .iter()
            .enumerate()
            .find(|(_, w)| !(w.is_finite() && **w > 0.0))
        {
            return Err(Error::InvalidParameter(format!(
                "invariant weight mu[{s}] = {w} must be positive"
            )));
        }
        let total: f64 = stationary.iter().sum();
        if (total - 1.0).abs() > ROW_SUM_TOLERANCE {
            return Err(Error::InvalidParameter(format!(
                "invariant distribution sums to {total}, not 1"
            )));
        }
        let chain = Self {
            transition,
            stationary,
            label: label.into(),
        };
        chain.check_balance()?;
        Ok(chain)
    }

    /// Validates `P` and computes `μ` by power iteration.
    pub fn from_kernel(transition: Matrix, label: impl Into<String>) -> Result<Self> {
        validate_kernel(&transition)?;
        let mu = invariant_distribution(&transition)?;
        Self::with_distribution(transition, mu, label)
    }

    pub fn n(&self) -> usize {
        self.stationary.len()
    }

    pub fn transition(&self) -> &Matrix {
        &self.transition
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Largest `|μ_s P_st − μ_t P_ts|` over all pairs.
    pub fn balance_violation(&self) -> f64 {
        let (p, mu) = (&self.transition, &self.stationary);
        let mut worst = 0.0_f64;
        for s in 0..self.n() {
            for t in s + 1..self.n() {
                worst = worst.max((mu[s] * p[(s, t)] - mu[t] * p[(t, s)]).abs());
            }
        }
        worst
    }

    /// Largest `|(μP)_t − μ_t|`.
    pub fn stationarity_residual(&self) -> f64 {
        self.transition
            .vec_mul(&self.stationary)
            .iter()
            .zip(&self.stationary)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    fn check_balance(&self) -> Result<()> {
        let (p, mu) = (&self.transition, &self.stationary);
        for s in 0..self.n() {
            for t in s + 1..self.n() {
                let violation = (mu[s] * p[(s, t)] - mu[t] * p[(t, s)]).abs();
                if violation > REVERSIBILITY_TOLERANCE {
                    return Err(Error::NotReversible { s, t, violation });
                }
            }
        }
        let residual = self.stationarity_residual();
        if residual > REVERSIBILITY_TOLERANCE {
            return Err(Error::InvalidParameter(format!(
                "mu is not invariant: |mu P - mu| = {residual:e}"
            )));
        }
        Ok(())
    }

    /// The symmetric matrix `S = D P D⁻¹`, symmetrized to remove rounding.
    pub fn symmetrized(&self) -> Matrix {
        let n = self.n();
        let root: Vec<f64> = self.stationary.iter().map(|m| m.sqrt()).collect();
        let mut s = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                s[(i, j)] = root[i] * self.transition[(i, j)] / root[j];
            }
        }
        s.symmetrize();
        s
    }

    /// Full eigen-decomposition of `S`, eigenvalues descending.
    pub fn symmetric_decomposition(&self) -> Result<SymmetricEigen> {
        symmetric_eigen(&self.symmetrized(), true)
    }

    pub fn spectrum(&self) -> Result<Spectrum> {
        spectrum(self)
    }

    /// Serializes the chain in the text format accepted by [`load_chain`],
    /// including the `mu:` line. Values use shortest round-trip formatting.
    pub fn to_text(&self) -> String {
        let n = self.n();
        let mut out = String::new();
        if !self.label.is_empty() {
            let _ = writeln!(out, "# {}", self.label);
        }
        let _ = writeln!(out, "{n}");
        for i in 0..n {
            let row: Vec<String> = self
                .transition
                .row(i)
                .iter()
                .map(|x| x.to_string())
                .collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
        let mu: Vec<String> = self.stationary.iter().map(|x| x.to_string()).collect();
        let _ = writeln!(out, "mu: {}", mu.join(" "));
        out
    }
}

fn validate_kernel(p: &Matrix) -> Result<()> {
    if !p.is_square() {
        return Err(Error::DimensionMismatch {
            expected: p.rows(),
            got: p.cols(),
        });
    }
    if p.rows() < 2 {
        return Err(Error::InvalidParameter(
            "a chain needs at least 2 states".into(),
        ));
    }
    for i in 0..p.rows() {
        let row = p.row(i);
        if let Some(&x) = row
            .iter()
            .find(|x| !(x.is_finite() && **x >= 0.0 && **x <= 1.0))
        {
            return Err(Error::InvalidParameter(format!(
                "transition probability {x} in row {i} is outside [0, 1]"
            )));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
            return Err(Error::NonStochasticRow { row: i, sum });
        }
    }
    Ok(())
}

/// Left Perron vector of `P` by power iteration on the lazy kernel
/// `(I + P)/2`, which shares `μ` and is aperiodic.
fn invariant_distribution(p: &Matrix) -> Result<Vec<f64>> {
    let n = p.rows();
    let mut mu = vec![1.0 / n as f64; n];
    let residual = |mu: &[f64]| {
        p.vec_mul(mu)
            .iter()
            .zip(mu)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    };
    // iterate past the required residual so transient weights decay
    // well below the reducibility threshold
    let target = 1e-2 * POWER_ITERATION_RESIDUAL;
    let mut iterations = 0;
    while residual(&mu) > target {
        if iterations == POWER_ITERATION_CAP {
            return Err(Error::Numerical(format!(
                "power iteration for the invariant distribution did not converge in {POWER_ITERATION_CAP} steps"
            )));
        }
        iterations += 1;
        let next = p.vec_mul(&mu);
        let total: f64 = next.iter().zip(&mu).map(|(a, b)| 0.5 * (a + b)).sum();
        for (m, x) in mu.iter_mut().zip(&next) {
            *m = 0.5 * (*m + x) / total;
        }
    }
    if let Some((state, &weight)) = mu
        .iter()
        .enumerate()
        .find(|(_, w)| **w <= REDUCIBILITY_THRESHOLD)
    {
        return Err(Error::Reducible { state, weight });
    }
    Ok(mu)
}

/// Eigenvalues of the kernel, descending, with the two gap notions.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// `1 − λ₁`.
    pub gap: f64,
    /// `1 − max_{i≥1} |λ_i|`.
    pub absolute_gap: f64,
}

impl Spectrum {
    fn from_eigenvalues(eigenvalues: Vec<f64>) -> Self {
        let gap = 1.0 - eigenvalues[1];
        let second_modulus = eigenvalues[1..].iter().map(|l| l.abs()).fold(0.0, f64::max);
        Self {
            eigenvalues,
            gap,
            absolute_gap: 1.0 - second_modulus,
        }
    }

    pub fn lambda1(&self) -> f64 {
        self.eigenvalues[1]
    }

    pub fn smallest(&self) -> f64 {
        *self.eigenvalues.last().expect("non-empty spectrum")
    }
}

pub fn spectrum(chain: &ReversibleChain) -> Result<Spectrum> {
    let eig = symmetric_eigen(&chain.symmetrized(), false)?;
    Ok(Spectrum::from_eigenvalues(eig.values))
}

/// Starting distribution `μ⁽⁰⁾`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialDistribution {
    weights: Vec<f64>,
}

impl InitialDistribution {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidParameter("empty initial distribution".into()));
        }
        if let Some(&w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "initial weight {w} is negative"
            )));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > ROW_SUM_TOLERANCE {
            return Err(Error::InvalidParameter(format!(
                "initial distribution sums to {total}, not 1"
            )));
        }
        Ok(Self { weights })
    }

    pub fn uniform(n: usize) -> Self {
        Self {
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn point_mass(n: usize, state: usize) -> Result<Self> {
        if state >= n {
            return Err(Error::InvalidParameter(format!(
                "state {state} out of range 0..{n}"
            )));
        }
        let mut weights = vec![0.0; n];
        weights[state] = 1.0;
        Ok(Self { weights })
    }

    pub fn stationary(chain: &ReversibleChain) -> Self {
        Self {
            weights: chain.stationary().to_vec(),
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Random walk on the complete graph `K_n`.
pub fn build_complete(n: usize) -> Result<ReversibleChain> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "complete graph needs n >= 2, got {n}"
        )));
    }
    let off = 1.0 / (n - 1) as f64;
    let mut p = Matrix::zeros(n, n);
    for s in 0..n {
        for t in 0..n {
            if s != t {
                p[(s, t)] = off;
            }
        }
    }
    ReversibleChain::with_distribution(p, vec![1.0 / n as f64; n], format!("complete:{n}"))
}

/// Lazy walk on the `d`-cube: hold or flip one of `d` bits, each with
/// probability `1/(d+1)`. States are the integers `0..2^d`.
pub fn build_lazy_hypercube(d: u32) -> Result<ReversibleChain> {
    if d < 1 {
        return Err(Error::InvalidParameter(
            "hypercube dimension must be >= 1".into(),
        ));
    }
    if d > MAX_HYPERCUBE_DIM {
        return Err(Error::Capacity(format!(
            "hypercube dimension {d} exceeds the dense limit {MAX_HYPERCUBE_DIM}"
        )));
    }
    let n = 1usize << d;
    let w = 1.0 / f64::from(d + 1);
    let mut p = Matrix::zeros(n, n);
    for x in 0..n {
        p[(x, x)] = w;
        for bit in 0..d {
            p[(x, x ^ (1 << bit))] = w;
        }
    }
    ReversibleChain::with_distribution(p, vec![1.0 / n as f64; n], format!("hypercube:{d}"))
}

/// Simple random walk on the cycle `Z_n`.
pub fn build_cycle(n: usize) -> Result<ReversibleChain> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!(
            "cycle needs n >= 3, got {n}"
        )));
    }
    let mut p = Matrix::zeros(n, n);
    for x in 0..n {
        p[(x, (x + 1) % n)] = 0.5;
        p[(x, (x + n - 1) % n)] = 0.5;
    }
    ReversibleChain::with_distribution(p, vec![1.0 / n as f64; n], format!("cycle:{n}"))
}

/// Resolves `complete:N`, `hypercube:D` or `cycle:N`; `None` if `spec` is
/// not a builder string.
pub fn build_from_spec(spec: &str) -> Option<Result<ReversibleChain>> {
    let (family, arg) = spec.split_once(':')?;
    let parse = |arg: &str| {
        arg.trim()
            .parse::<usize>()
            .map_err(|_| Error::InvalidParameter(format!("bad size in chain spec `{spec}`")))
    };
    let built = match family {
        "complete" => parse(arg).and_then(build_complete),
        "hypercube" => parse(arg).and_then(|d| {
            u32::try_from(d)
                .map_err(|_| Error::Capacity(format!("hypercube dimension {d} too large")))
                .and_then(build_lazy_hypercube)
        }),
        "cycle" => parse(arg).and_then(build_cycle),
        _ => return None,
    };
    Some(built)
}

/// Parses the chain text format: `#` comment lines, the state count `n`,
/// `n·n` row-major probabilities, then optionally `mu:` and `n` weights.
pub fn parse_chain(text: &str, label: impl Into<String>) -> Result<ReversibleChain> {
    let mut tokens = tokens(text);
    let (line, first) = tokens.next().ok_or(Error::Parse {
        line: 0,
        msg: "empty chain file".into(),
    })?;
    let n: usize = first.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("expected state count, found `{first}`"),
    })?;
    if n == 0 {
        return Err(Error::Parse {
            line,
            msg: "state count must be positive".into(),
        });
    }
    let mut data = Vec::with_capacity(n * n);
    for _ in 0..n * n {
        let (line, tok) = tokens.next().ok_or(Error::Parse {
            line: usize::MAX,
            msg: format!("expected {} probabilities, found {}", n * n, data.len()),
        })?;
        data.push(parse_real(line, tok)?);
    }
    let mut mu = None;
    if let Some((line, tok)) = tokens.next() {
        if tok != "mu:" {
            return Err(Error::Parse {
                line,
                msg: format!("unexpected token `{tok}`"),
            });
        }
        let mut weights = Vec::with_capacity(n);
        for _ in 0..n {
            let (line, tok) = tokens.next().ok_or(Error::Parse {
                line,
                msg: format!("expected {n} invariant weights after `mu:`"),
            })?;
            weights.push(parse_real(line, tok)?);
        }
        if let Some((line, tok)) = tokens.next() {
            return Err(Error::Parse {
                line,
                msg: format!("trailing token `{tok}`"),
            });
        }
        mu = Some(weights);
    }
    let p = Matrix::from_row_major(n, n, data);
    match mu {
        Some(mu) => ReversibleChain::with_distribution(p, mu, label),
        None => ReversibleChain::from_kernel(p, label),
    }
}

pub fn load_chain(path: impl AsRef<Path>) -> Result<ReversibleChain> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_chain(&text, path.display().to_string())
}

/// Non-comment whitespace tokens paired with their 1-based line numbers.
pub(crate) fn tokens(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim_start().starts_with('#'))
        .flat_map(|(i, l)| l.split_whitespace().map(move |t| (i + 1, t)))
}

pub(crate) fn parse_real(line: usize, tok: &str) -> Result<f64> {
    tok.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::Parse {
            line,
            msg: format!("expected a real number, found `{tok}`"),
        })
}

/// `ν = max μ / min μ`.
pub fn spread(chain: &ReversibleChain) -> f64 {
    let mu = chain.stationary();
    let max = mu.iter().copied().fold(f64::MIN, f64::max);
    let min = mu.iter().copied().fold(f64::MAX, f64::min);
    max / min
}

/// `‖μ⁽⁰⁾/μ‖ = sqrt(Σ_s (μ⁽⁰⁾_s)² / μ_s)`.
pub fn chi_distance(mu0: &InitialDistribution, chain: &ReversibleChain) -> Result<f64> {
    if mu0.len() != chain.n() {
        return Err(Error::DimensionMismatch {
            expected: chain.n(),
            got: mu0.len(),
        });
    }
    Ok(mu0
        .weights()
        .iter()
        .zip(chain.stationary())
        .map(|(w, m)| w * w / m)
        .sum::<f64>()
        .sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn complete_graph_spectra() {
        let k32 = build_complete(32).unwrap();
        let spec = k32.spectrum().unwrap();
        assert!(close(spec.gap, 32.0 / 31.0, 1e-10));

        let k2 = build_complete(2).unwrap();
        assert_eq!(
            k2.transition(),
            &Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]])
        );
        let spec = k2.spectrum().unwrap();
        assert!(close(spec.eigenvalues[0], 1.0, 1e-12));
        assert!(close(spec.eigenvalues[1], -1.0, 1e-12));
        assert!(close(spec.gap, 2.0, 1e-12));

        let k4 = build_complete(4).unwrap().spectrum().unwrap();
        let expected = [1.0, -1.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0];
        for (l, e) in k4.eigenvalues.iter().zip(expected) {
            assert!(close(*l, e, 1e-12), "{:?}", k4.eigenvalues);
        }
        assert!(matches!(build_complete(1), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn hypercube_spectra() {
        let q5 = build_lazy_hypercube(5).unwrap().spectrum().unwrap();
        assert!(close(q5.gap, 1.0 / 3.0, 1e-10));
        let q1 = build_lazy_hypercube(1).unwrap();
        assert_eq!(
            q1.transition(),
            &Matrix::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]])
        );
        assert!(close(q1.spectrum().unwrap().gap, 1.0, 1e-12));
        assert!(close(
            build_lazy_hypercube(3).unwrap().spectrum().unwrap().gap,
            0.5,
            1e-10
        ));
        assert!(matches!(build_lazy_hypercube(13), Err(Error::Capacity(_))));
        assert!(build_lazy_hypercube(0).is_err());
    }

    #[test]
    fn cycle_spectra() {
        let c33 = build_cycle(33).unwrap().spectrum().unwrap();
        let pi = std::f64::consts::PI;
        assert!(close(c33.absolute_gap, 1.0 - (pi / 33.0).cos(), 1e-10));
        assert!(close(c33.absolute_gap, 0.0045281, 1e-7));
        assert!(close(c33.gap, 1.0 - (2.0 * pi / 33.0).cos(), 1e-10));
        assert!(close(c33.gap, 0.0180713, 1e-7));

        let c4 = build_cycle(4).unwrap().spectrum().unwrap();
        for (l, e) in c4.eigenvalues.iter().zip([1.0, 0.0, 0.0, -1.0]) {
            assert!(close(*l, e, 1e-12));
        }
        assert!(close(c4.absolute_gap, 0.0, 1e-12));
        assert!(build_cycle(2).is_err());
    }

    #[test]
    fn identity_kernel_has_zero_gap() {
        let p = Matrix::identity(3);
        let chain = ReversibleChain::with_distribution(p, vec![1.0 / 3.0; 3], "id").unwrap();
        let spec = chain.spectrum().unwrap();
        assert!(spec.eigenvalues.iter().all(|l| close(*l, 1.0, 1e-15)));
        assert!(close(spec.gap, 0.0, 1e-15));
    }

    #[test]
    fn spread_examples() {
        assert_eq!(spread(&build_cycle(7).unwrap()), 1.0);
        let p = Matrix::from_rows(&[vec![0.5, 0.5], vec![2.0, -1.0]]);
        assert!(ReversibleChain::with_distribution(p, vec![0.8, 0.2], "bad").is_err());
        let chain = two_state(0.8, 0.2);
        assert!(close(spread(&chain), 4.0, 1e-12));
    }

    /// Two-state chain with the given invariant distribution.
    fn two_state(a: f64, b: f64) -> ReversibleChain {
        // P_01 = b, P_10 = a gives a·b = b·a
        let p = Matrix::from_rows(&[vec![1.0 - b, b], vec![a, 1.0 - a]]);
        ReversibleChain::with_distribution(p, vec![a, b], "two").unwrap()
    }

    #[test]
    fn chi_distance_examples() {
        let chain = two_state(0.8, 0.2);
        let mu = InitialDistribution::stationary(&chain);
        assert!(close(chi_distance(&mu, &chain).unwrap(), 1.0, 1e-15));
        let point = InitialDistribution::point_mass(2, 1).unwrap();
        assert!(close(
            chi_distance(&point, &chain).unwrap(),
            0.2_f64.powf(-0.5),
            1e-12
        ));
        let uniform = InitialDistribution::uniform(2);
        assert!(close(chi_distance(&uniform, &chain).unwrap(), 1.25, 1e-12));
        let wrong = InitialDistribution::uniform(3);
        assert!(matches!(
            chi_distance(&wrong, &chain),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn parse_swap_matrix_computes_uniform_mu() {
        let chain = parse_chain("# swap\n2\n0 1\n1 0\n", "swap").unwrap();
        assert_eq!(chain.n(), 2);
        assert_eq!(chain.stationary(), &[0.5, 0.5]);
    }

    #[test]
    fn parse_rejects_bad_inputs() {
        assert!(matches!(
            parse_chain("2\n0.5 0.4\n0.5 0.5\n", "x"),
            Err(Error::NonStochasticRow { row: 0, .. })
        ));
        assert!(matches!(
            parse_chain("2\n0.5 oops\n0.5 0.5\n", "x"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            parse_chain("2\n1 0\n", "x"),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(parse_chain("", "x"), Err(Error::Parse { .. })));
        // a 3-cycle walking one way is stochastic but not reversible
        let rotation = "3\n0 1 0\n0 0 1\n1 0 0\n";
        assert!(matches!(
            parse_chain(rotation, "x"),
            Err(Error::NotReversible { .. })
        ));
        // state 1 is absorbing, so state 0 is transient
        let absorbing = "2\n0.5 0.5\n0 1\n";
        assert!(matches!(
            parse_chain(absorbing, "x"),
            Err(Error::Reducible { state: 0, .. })
        ));
    }

    #[test]
    fn birth_death_chain_spread_from_power_iteration() {
        // μ ∝ (1, 2, 4): P_01 = 0.5, P_10 = 0.25, P_12 = 0.5, P_21 = 0.25
        let text = "3\n0.5 0.5 0\n0.25 0.25 0.5\n0 0.25 0.75\n";
        let chain = parse_chain(text, "bd").unwrap();
        let mu = chain.stationary();
        for (m, e) in mu.iter().zip([1.0 / 7.0, 2.0 / 7.0, 4.0 / 7.0]) {
            assert!(close(*m, e, 1e-11));
        }
        assert!(close(spread(&chain), 4.0, 1e-10));
    }

    #[test]
    fn text_round_trip_is_exact() {
        let k32 = build_complete(32).unwrap();
        let back = parse_chain(&k32.to_text(), "complete:32").unwrap();
        assert_eq!(back, k32);
    }

    #[test]
    fn builder_specs() {
        assert_eq!(build_from_spec("cycle:5").unwrap().unwrap().n(), 5);
        assert_eq!(build_from_spec("hypercube:3").unwrap().unwrap().n(), 8);
        assert!(build_from_spec("complete:x").unwrap().is_err());
        assert!(build_from_spec("chain.txt").is_none());
        assert!(build_from_spec("torus:3").is_none());
    }
}
