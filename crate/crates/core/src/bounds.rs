//! Tail bounds of the form `Pr{|S_N| ≥ εN} ≤ C·exp(−r·N)` for sums of a
//! bounded centered observable along a reversible chain, plus the
//! comparator bounds used to judge them.
//!
//! | method          | prefactor `C`      | rate `r`                      |
//! |-----------------|--------------------|-------------------------------|
//! | kargin          | `3·χ·2^{m/2}`      | `ε² / (8k)`                   |
//! | corollary2      | `3·χ·2^{m/2}`      | `α(g)·ε²/L²`                  |
//! | gillman         | `2·χ`              | `g/(20ν)·(ε/L)²`              |
//! | gillman-md      | `2·m·χ`            | `g/(20ν)·(ε/L)²/m`            |
//! | martingale      | `2`                | `½·ε²/(2(n−1)L)²`             |
//! | hoeffding-iid   | `2`                | `½·ε²/L²`                     |
//!
//! with `χ = ‖μ⁽⁰⁾/μ‖` and
//! `k = σ²(1/2 + 1/g) + L²·(192/125)·g/ln²(1 + g/2)`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

const K_THIRD_TERM: f64 = 192.0 / 125.0;
const GAP_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Kargin,
    KarginLiteral,
    Corollary2,
    Gillman,
    GillmanMd,
    Martingale,
    HoeffdingIid,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Kargin,
        Method::KarginLiteral,
        Method::Corollary2,
        Method::Gillman,
        Method::GillmanMd,
        Method::Martingale,
        Method::HoeffdingIid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Kargin => "kargin",
            Method::KarginLiteral => "kargin-literal",
            Method::Corollary2 => "corollary2",
            Method::Gillman => "gillman",
            Method::GillmanMd => "gillman-md",
            Method::Martingale => "martingale",
            Method::HoeffdingIid => "hoeffding-iid",
        }
    }

    pub fn uses_gap(self) -> bool {
        matches!(
            self,
            Method::Kargin
                | Method::KarginLiteral
                | Method::Corollary2
                | Method::Gillman
                | Method::GillmanMd
        )
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown method `{s}`")))
    }
}

/// Which third term to use in `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KVariant {
    /// `L²·(192/125)·g/ln²(1+g/2)`, consistent with the eigenvalue bound
    /// and with the closed-form `α` of the `corollary2` method.
    #[default]
    Prop9,
    /// `L²·192/(125·ln²(1+g/2))`, without the factor `g`.
    LiteralThm1,
}

impl FromStr for KVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "prop9" => Ok(KVariant::Prop9),
            "literal" | "literal-thm1" => Ok(KVariant::LiteralThm1),
            _ => Err(Error::InvalidParameter(format!("unknown k variant `{s}`"))),
        }
    }
}

fn check_gap(g: f64) -> Result<()> {
    if g.is_finite() && g > 0.0 && g <= 2.0 + GAP_SLACK {
        Ok(())
    } else {
        Err(Error::InvalidGap(g))
    }
}

/// The variance proxy `k` in the exponent `ε²N/(8k)`.
pub fn k_constant(sigma2: f64, linf: f64, g: f64, variant: KVariant) -> Result<f64> {
    check_gap(g)?;
    let log_sq = (1.0 + 0.5 * g).ln().powi(2);
    let third = match variant {
        KVariant::Prop9 => K_THIRD_TERM * g / log_sq,
        KVariant::LiteralThm1 => K_THIRD_TERM / log_sq,
    };
    Ok(sigma2 * (0.5 + 1.0 / g) + linf * linf * third)
}

/// `α = (4 + 8/g + (1536/125)·g/ln²(1 + g/2))⁻¹`.
pub fn alpha_corollary2(g: f64) -> Result<f64> {
    check_gap(g)?;
    let log_sq = (1.0 + 0.5 * g).ln().powi(2);
    Ok(1.0 / (4.0 + 8.0 / g + (1536.0 / 125.0) * g / log_sq))
}

/// Inputs of a bound evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundQuery {
    pub method: Method,
    /// Deviation threshold `ε` per step.
    pub epsilon: f64,
    /// Number of steps `N`; `None` for sample-size queries.
    pub steps: Option<u64>,
    /// Observable dimension `m`.
    pub dim: usize,
    /// Principal variance bound `σ²`.
    pub sigma2: f64,
    /// Sup-norm bound `L`.
    pub linf: f64,
    /// Spectral gap `g`.
    pub gap: f64,
    /// Spread `ν = max μ / min μ`.
    pub spread: f64,
    /// `‖μ⁽⁰⁾/μ‖`.
    pub chi: f64,
    /// State count (martingale method only).
    pub n_states: Option<usize>,
}

impl BoundQuery {
    /// A query with `σ² = L² = 1`, `ν = χ = 1`, no step count.
    pub fn new(method: Method, epsilon: f64, dim: usize, gap: f64) -> Self {
        Self {
            method,
            epsilon,
            steps: None,
            dim,
            sigma2: 1.0,
            linf: 1.0,
            gap,
            spread: 1.0,
            chi: 1.0,
            n_states: None,
        }
    }

    pub fn with_steps(mut self, steps: u64) -> Self {
        self.steps = Some(steps);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return invalid(format!("epsilon must be nonnegative, got {}", self.epsilon));
        }
        if !(self.linf.is_finite() && self.linf > 0.0) {
            return invalid(format!("L must be positive, got {}", self.linf));
        }
        if self.dim == 0 {
            return invalid("dimension m must be >= 1".into());
        }
        if !(self.sigma2 >= 0.0 && self.sigma2 <= self.linf * self.linf + 1e-12) {
            return invalid(format!(
                "sigma2 = {} must lie in [0, L^2 = {}]",
                self.sigma2,
                self.linf * self.linf
            ));
        }
        if !(self.chi >= 1.0 - 1e-12) {
            return invalid(format!("chi must be >= 1, got {}", self.chi));
        }
        if !(self.spread >= 1.0 - 1e-12) {
            return invalid(format!("spread must be >= 1, got {}", self.spread));
        }
        if self.method.uses_gap() {
            check_gap(self.gap)?;
        }
        Ok(())
    }
}

/// `min(1, prefactor·e^{−rate·N})` decomposed.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundResult {
    pub method: Method,
    pub prefactor: f64,
    pub rate: f64,
    /// Clamped probability, present when the query carried `N`.
    pub probability: Option<f64>,
}

impl BoundResult {
    fn new(method: Method, prefactor: f64, rate: f64, steps: Option<u64>) -> Self {
        let probability = steps.map(|n| (prefactor * (-rate * n as f64).exp()).min(1.0));
        Self {
            method,
            prefactor,
            rate,
            probability,
        }
    }

    /// Unclamped `prefactor·e^{−rate·N}`.
    pub fn raw_at(&self, steps: f64) -> f64 {
        self.prefactor * (-self.rate * steps).exp()
    }
}

fn require_scalar(q: &BoundQuery) -> Result<()> {
    if q.dim != 1 {
        return Err(Error::WrongMethod {
            method: q.method.name(),
            reason: format!("needs m = 1, got m = {} (use gillman-md for m > 1)", q.dim),
        });
    }
    Ok(())
}

fn kargin_prefactor(q: &BoundQuery) -> f64 {
    3.0 * q.chi * 2f64.powf(q.dim as f64 / 2.0)
}

/// The dimension-free-rate bound with `k` from [`k_constant`].
pub fn bound_kargin(q: &BoundQuery, variant: KVariant) -> Result<BoundResult> {
    q.validate()?;
    let k = k_constant(q.sigma2, q.linf, q.gap, variant)?;
    let rate = q.epsilon * q.epsilon / (8.0 * k);
    Ok(BoundResult::new(
        q.method,
        kargin_prefactor(q),
        rate,
        q.steps,
    ))
}

/// The `L`-only form with the closed-form `α`.
pub fn bound_corollary2(q: &BoundQuery) -> Result<BoundResult> {
    q.validate()?;
    let alpha = alpha_corollary2(q.gap)?;
    let rate = alpha * (q.epsilon / q.linf).powi(2);
    Ok(BoundResult::new(
        q.method,
        kargin_prefactor(q),
        rate,
        q.steps,
    ))
}

fn gillman_rate(q: &BoundQuery) -> f64 {
    q.gap / (20.0 * q.spread) * (q.epsilon / q.linf).powi(2)
}

/// Scalar Gillman bound, applied with prefactor `2χ` to the two-sided event.
pub fn bound_gillman(q: &BoundQuery) -> Result<BoundResult> {
    q.validate()?;
    require_scalar(q)?;
    Ok(BoundResult::new(
        q.method,
        2.0 * q.chi,
        gillman_rate(q),
        q.steps,
    ))
}

/// Componentwise union bound at threshold `ε/√m` on each coordinate.
pub fn bound_gillman_md(q: &BoundQuery) -> Result<BoundResult> {
    q.validate()?;
    let m = q.dim as f64;
    Ok(BoundResult::new(
        q.method,
        2.0 * m * q.chi,
        gillman_rate(q) / m,
        q.steps,
    ))
}

/// Bernstein inequality for the Doob martingale with increments bounded
/// by `2(n−1)L`.
pub fn bound_martingale(q: &BoundQuery) -> Result<BoundResult> {
    q.validate()?;
    require_scalar(q)?;
    let n = q.n_states.ok_or(Error::MissingParameter("n_states"))?;
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "n_states must be >= 2, got {n}"
        )));
    }
    let increment = 2.0 * (n - 1) as f64 * q.linf;
    let rate = 0.5 * q.epsilon * q.epsilon / (increment * increment);
    Ok(BoundResult::new(q.method, 2.0, rate, q.steps))
}

/// Independent-sample Bernstein–Hoeffding bound.
pub fn bound_hoeffding_iid(q: &BoundQuery) -> Result<BoundResult> {
    q.validate()?;
    require_scalar(q)?;
    let rate = 0.5 * (q.epsilon / q.linf).powi(2);
    Ok(BoundResult::new(q.method, 2.0, rate, q.steps))
}

/// Dispatches on `q.method`.
pub fn evaluate(q: &BoundQuery) -> Result<BoundResult> {
    match q.method {
        Method::Kargin => bound_kargin(q, KVariant::Prop9),
        Method::KarginLiteral => bound_kargin(q, KVariant::LiteralThm1),
        Method::Corollary2 => bound_corollary2(q),
        Method::Gillman => bound_gillman(q),
        Method::GillmanMd => bound_gillman_md(q),
        Method::Martingale => bound_martingale(q),
        Method::HoeffdingIid => bound_hoeffding_iid(q),
    }
}

/// Smallest `N` with `prefactor·e^{−rate·N} ≤ target`.
pub fn sample_size(q: &BoundQuery, target: f64) -> Result<u64> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "target must lie in (0, 1), got {target}"
        )));
    }
    let b = evaluate(q)?;
    if target >= b.prefactor {
        return Ok(0);
    }
    if b.rate <= 0.0 {
        return Err(Error::Unattainable);
    }
    let n = ((b.prefactor / target).ln() / b.rate).ceil();
    if n > u64::MAX as f64 {
        return Err(Error::Capacity(format!(
            "required sample size {n:e} overflows u64"
        )));
    }
    Ok(n as u64)
}

/// Gap of the 33-cycle as used in the reference table, `1 − cos(π/33)`.
pub fn printed_cycle_gap() -> f64 {
    1.0 - (std::f64::consts::PI / 33.0).cos()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableChain {
    Complete,
    Hypercube,
    Circle,
}

impl TableChain {
    pub const ALL: [TableChain; 3] = [
        TableChain::Complete,
        TableChain::Hypercube,
        TableChain::Circle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TableChain::Complete => "complete",
            TableChain::Hypercube => "hypercube",
            TableChain::Circle => "circle",
        }
    }

    /// Gap used for the table: `32/31`, `1/3` and `1 − cos(π/33)`.
    pub fn gap(self) -> f64 {
        match self {
            TableChain::Complete => 32.0 / 31.0,
            TableChain::Hypercube => 1.0 / 3.0,
            TableChain::Circle => printed_cycle_gap(),
        }
    }

    pub fn n_states(self) -> usize {
        match self {
            TableChain::Complete | TableChain::Hypercube => 32,
            TableChain::Circle => 33,
        }
    }
}

/// How a computed cell relates to the printed one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellFlag {
    /// Ordinary table cell.
    Table,
    /// Table cell whose printed value is not reproduced at the stated `m`.
    Discrepancy,
    /// Extra row evaluating a flagged cell at `m = 10`.
    Substitution,
    /// No bound is defined for this cell.
    NotApplicable,
}

impl CellFlag {
    pub fn name(self) -> &'static str {
        match self {
            CellFlag::Table => "table",
            CellFlag::Discrepancy => "discrepancy",
            CellFlag::Substitution => "m10-substitution",
            CellFlag::NotApplicable => "not-applicable",
        }
    }
}

/// A printed table entry in millions, with its printed rounding quantum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrintedValue {
    pub millions: f64,
    pub quantum: f64,
}

impl PrintedValue {
    const fn new(millions: f64, quantum: f64) -> Self {
        Self { millions, quantum }
    }

    /// Rounds `n_required` to this entry's printed precision and compares.
    pub fn matches(&self, n_required: u64) -> bool {
        let x = n_required as f64 / 1e6;
        let k = (x / self.quantum).round();
        (k * self.quantum - self.millions).abs() < 0.5 * self.quantum
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table1Row {
    pub method: Method,
    pub chain: TableChain,
    pub dim: usize,
    pub n_required: Option<u64>,
    pub printed: Option<PrintedValue>,
    pub flag: CellFlag,
}

impl Table1Row {
    pub fn millions_rounded(&self) -> Option<String> {
        self.n_required.map(round_millions)
    }
}

/// Printed sample sizes (millions) by method, chain and `m`.
fn printed(method: Method, chain: TableChain, dim: usize) -> Option<PrintedValue> {
    use TableChain::*;
    let p = PrintedValue::new;
    match (method, chain, dim) {
        (Method::Kargin, Complete, 1) => Some(p(4.0, 1.0)),
        (Method::Kargin, Complete, 20) => Some(p(9.0, 1.0)),
        (Method::Kargin, Hypercube, 1) => Some(p(9.0, 1.0)),
        (Method::Kargin, Hypercube, 20) => Some(p(22.0, 1.0)),
        (Method::Kargin, Circle, 1) => Some(p(560.0, 10.0)),
        (Method::Kargin, Circle, 20 | 10) => Some(p(960.0, 10.0)),
        (Method::Martingale, Complete, 1) => Some(p(280.0, 10.0)),
        (Method::Martingale, Hypercube, 1) => Some(p(280.0, 10.0)),
        (Method::Martingale, Circle, 1) => Some(p(300.0, 100.0)),
        (Method::GillmanMd, Complete, 1) => Some(p(0.7, 0.1)),
        (Method::GillmanMd, Complete, 20) => Some(p(26.0, 1.0)),
        (Method::GillmanMd, Hypercube, 1) => Some(p(2.0, 1.0)),
        (Method::GillmanMd, Hypercube, 20) => Some(p(80.0, 10.0)),
        (Method::GillmanMd, Circle, 1) => Some(p(160.0, 10.0)),
        (Method::GillmanMd, Circle, 20 | 10) => Some(p(2640.0, 10.0)),
        _ => None,
    }
}

/// Table inputs: `ε = 0.01`, target `0.05`, `L = σ² = 1`, `χ = ν = 1`.
pub const TABLE1_EPSILON: f64 = 0.01;
pub const TABLE1_TARGET: f64 = 0.05;

fn table1_query(method: Method, chain: TableChain, dim: usize) -> BoundQuery {
    BoundQuery {
        n_states: Some(chain.n_states()),
        ..BoundQuery::new(method, TABLE1_EPSILON, dim, chain.gap())
    }
}

/// Sample sizes for the three methods × three chains × `m ∈ {1, 20}`,
/// followed by the two circle cells re-evaluated at `m = 10`.
///
/// The Gillman column uses the componentwise reduction (`gillman-md`),
/// which coincides with `gillman` at `m = 1`.
pub fn table1() -> Result<Vec<Table1Row>> {
    let mut rows = Vec::with_capacity(20);
    for method in [Method::Kargin, Method::Martingale, Method::GillmanMd] {
        for chain in TableChain::ALL {
            for dim in [1, 20] {
                let n_required = if method == Method::Martingale && dim > 1 {
                    None
                } else {
                    Some(sample_size(
                        &table1_query(method, chain, dim),
                        TABLE1_TARGET,
                    )?)
                };
                let flag = match (n_required, printed(method, chain, dim)) {
                    (None, _) => CellFlag::NotApplicable,
                    (Some(n), Some(p)) if !p.matches(n) => CellFlag::Discrepancy,
                    _ => CellFlag::Table,
                };
                rows.push(Table1Row {
                    method,
                    chain,
                    dim,
                    n_required,
                    printed: printed(method, chain, dim),
                    flag,
                });
            }
        }
    }
    for method in [Method::Kargin, Method::GillmanMd] {
        let chain = TableChain::Circle;
        let n = sample_size(&table1_query(method, chain, 10), TABLE1_TARGET)?;
        rows.push(Table1Row {
            method,
            chain,
            dim: 10,
            n_required: Some(n),
            printed: printed(method, chain, 10),
            flag: CellFlag::Substitution,
        });
    }
    Ok(rows)
}

/// Millions rounded for presentation: one significant figure below 10 mln,
/// two significant figures above.
pub fn round_millions(n: u64) -> String {
    let x = n as f64 / 1e6;
    if x == 0.0 {
        return "0".into();
    }
    let sig = if x < 10.0 { 1 } else { 2 };
    let magnitude = x.log10().floor() as i32;
    let exp = magnitude - sig + 1;
    let quantum = 10f64.powi(exp);
    let k = (x / quantum).round();
    let decimals = (-exp).max(0) as usize;
    format!("{:.*}", decimals, k * quantum)
}
