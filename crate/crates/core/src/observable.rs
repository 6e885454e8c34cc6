//! Vector-valued functions on the state space and the statistics every
//! bound consumes: the stationary mean `Ef`, the sup-norm `L = max_s |f(s)|`
//! and the principal variance `σ² = sup_{|u|=1} E⟨f, u⟩²`.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chain::{parse_real, tokens, ReversibleChain};
use crate::error::{Error, Result};
use crate::linalg::{norm2, symmetric_eigen, Matrix};

/// Observables whose mean exceeds this (per coordinate) are not centered.
pub const CENTERING_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct VectorObservable {
    dim: usize,
    values: Vec<f64>,
    mean: Vec<f64>,
    linf: f64,
    principal_variance: f64,
}

impl VectorObservable {
    /// Builds an observable from one `dim`-vector per state, computing its
    /// statistics against `chain`'s invariant distribution.
    pub fn new(chain: &ReversibleChain, dim: usize, rows: &[Vec<f64>]) -> Result<Self> {
        if rows.len() != chain.n() {
            return Err(Error::DimensionMismatch {
                expected: chain.n(),
                got: rows.len(),
            });
        }
        let mut values = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Self::from_flat(chain, dim, values)
    }

    fn from_flat(chain: &ReversibleChain, dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter(
                "observable dimension must be >= 1".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "observable has non-finite values".into(),
            ));
        }
        let mut f = Self {
            dim,
            values,
            mean: Vec::new(),
            linf: 0.0,
            principal_variance: 0.0,
        };
        f.refresh(chain)?;
        Ok(f)
    }

    fn refresh(&mut self, chain: &ReversibleChain) -> Result<()> {
        let mu = chain.stationary();
        let m = self.dim;
        let mut mean = vec![0.0; m];
        let mut second = Matrix::zeros(m, m);
        for (s, &w) in mu.iter().enumerate() {
            let x = &self.values[s * m..(s + 1) * m];
            for i in 0..m {
                mean[i] += w * x[i];
                for j in i..m {
                    second[(i, j)] += w * x[i] * x[j];
                }
            }
        }
        for i in 0..m {
            for j in 0..i {
                second[(i, j)] = second[(j, i)];
            }
        }
        self.linf = (0..chain.n())
            .map(|s| norm2(self.value(s)))
            .fold(0.0, f64::max);
        self.principal_variance = if m == 1 {
            second[(0, 0)]
        } else {
            symmetric_eigen(&second, false)?.values[0].max(0.0)
        };
        self.mean = mean;
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.values.len() / self.dim
    }

    /// `f(s)`.
    pub fn value(&self, s: usize) -> &[f64] {
        &self.values[s * self.dim..(s + 1) * self.dim]
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// `max_s |f(s)|` with the Euclidean norm.
    pub fn linf(&self) -> f64 {
        self.linf
    }

    /// Top eigenvalue of `Σ_s μ_s f(s) f(s)ᵀ`; equal to `σ²` when centered.
    pub fn principal_variance(&self) -> f64 {
        self.principal_variance
    }

    pub fn is_centered(&self) -> bool {
        self.mean.iter().all(|m| m.abs() <= CENTERING_TOLERANCE)
    }

    /// `⟨f(s), u⟩` for every state.
    pub fn project(&self, u: &[f64]) -> Vec<f64> {
        (0..self.n())
            .map(|s| self.value(s).iter().zip(u).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `c·f`, statistics recomputed.
    pub fn scaled(&self, chain: &ReversibleChain, c: f64) -> Result<Self> {
        Self::from_flat(chain, self.dim, self.values.iter().map(|v| c * v).collect())
    }

    /// Rescales so that `‖f‖_∞ ≤ bound`; unchanged if already within it.
    pub fn clipped_to(&self, chain: &ReversibleChain, bound: f64) -> Result<Self> {
        if self.linf <= bound {
            return Ok(self.clone());
        }
        let mut c = bound / self.linf;
        loop {
            let f = self.scaled(chain, c)?;
            if f.linf <= bound {
                return Ok(f);
            }
            c *= 1.0 - f64::EPSILON;
        }
    }

    /// Text form accepted by [`parse_observable`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.n(), self.dim);
        for s in 0..self.n() {
            let row: Vec<String> = self.value(s).iter().map(|x| x.to_string()).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
        out
    }
}

/// Parses `n m` followed by `n` rows of `m` reals.
pub fn parse_observable(text: &str, chain: &ReversibleChain) -> Result<VectorObservable> {
    let mut toks = tokens(text);
    let mut header = |what: &str| {
        let (line, tok) = toks.next().ok_or(Error::Parse {
            line: 0,
            msg: format!("missing {what}"),
        })?;
        tok.parse::<usize>().map_err(|_| Error::Parse {
            line,
            msg: format!("expected {what}, found `{tok}`"),
        })
    };
    let n = header("state count")?;
    let m = header("dimension")?;
    if n != chain.n() {
        return Err(Error::DimensionMismatch {
            expected: chain.n(),
            got: n,
        });
    }
    if m == 0 {
        return Err(Error::Parse {
            line: 1,
            msg: "dimension must be positive".into(),
        });
    }
    let mut values = Vec::with_capacity(n * m);
    for _ in 0..n * m {
        let (line, tok) = toks.next().ok_or(Error::Parse {
            line: usize::MAX,
            msg: format!("expected {} values, found {}", n * m, values.len()),
        })?;
        values.push(parse_real(line, tok)?);
    }
    if let Some((line, tok)) = toks.next() {
        return Err(Error::Parse {
            line,
            msg: format!("trailing token `{tok}`"),
        });
    }
    VectorObservable::from_flat(chain, m, values)
}

pub fn load_observable(
    path: impl AsRef<Path>,
    chain: &ReversibleChain,
) -> Result<VectorObservable> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_observable(&text, chain)
}

/// `f − Ef` under `chain`'s invariant distribution.
pub fn center(f: &VectorObservable, chain: &ReversibleChain) -> Result<VectorObservable> {
    let mu = chain.stationary();
    if f.n() != mu.len() {
        return Err(Error::DimensionMismatch {
            expected: mu.len(),
            got: f.n(),
        });
    }
    let m = f.dim;
    let mut mean = vec![0.0; m];
    for (s, &w) in mu.iter().enumerate() {
        for (acc, x) in mean.iter_mut().zip(f.value(s)) {
            *acc += w * x;
        }
    }
    let values = f
        .values
        .chunks(m)
        .flat_map(|row| {
            row.iter()
                .zip(&mean)
                .map(|(x, c)| x - c)
                .collect::<Vec<_>>()
        })
        .collect();
    VectorObservable::from_flat(chain, m, values)
}

/// `σ²(f)` for a centered observable.
pub fn principal_variance(f: &VectorObservable, chain: &ReversibleChain) -> Result<f64> {
    if f.n() != chain.n() {
        return Err(Error::DimensionMismatch {
            expected: chain.n(),
            got: f.n(),
        });
    }
    let recomputed = VectorObservable::from_flat(chain, f.dim, f.values.clone())?;
    if !recomputed.is_centered() {
        return Err(Error::Precondition(format!(
            "observable is not centered (mean {:?})",
            recomputed.mean
        )));
    }
    Ok(recomputed.principal_variance)
}

/// Seeded test input: uniform entries in `[-1, 1]`, centered, then scaled
/// down to `‖f‖_∞ ≤ bound` when needed.
pub fn random_observable(
    chain: &ReversibleChain,
    dim: usize,
    bound: f64,
    seed: u64,
) -> Result<VectorObservable> {
    if !(bound > 0.0 && bound.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "sup-norm bound must be positive, got {bound}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..chain.n() * dim)
        .map(|_| rng.gen_range(-1.0..=1.0))
        .collect();
    let raw = VectorObservable::from_flat(chain, dim, values)?;
    center(&raw, chain)?.clipped_to(chain, bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{build_complete, build_lazy_hypercube};

    #[test]
    fn zero_observable() {
        let chain = build_complete(4).unwrap();
        let f = parse_observable("4 2\n0 0\n0 0\n0 0\n0 0\n", &chain).unwrap();
        assert_eq!(f.linf(), 0.0);
        assert_eq!(f.principal_variance(), 0.0);
        assert_eq!(principal_variance(&f, &chain).unwrap(), 0.0);
    }

    #[test]
    fn rademacher_on_two_states() {
        let chain = build_complete(2).unwrap();
        let f = parse_observable("# +-1\n2 1\n1\n-1\n", &chain).unwrap();
        assert_eq!(f.linf(), 1.0);
        assert_eq!(principal_variance(&f, &chain).unwrap(), 1.0);
    }

    #[test]
    fn parse_errors() {
        let chain = build_complete(3).unwrap();
        assert!(matches!(
            parse_observable("2 1\n1\n-1\n", &chain),
            Err(Error::DimensionMismatch {
                expected: 3,
                got: 2
            })
        ));
        assert!(matches!(
            parse_observable("3 1\n1\nx\n0\n", &chain),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            parse_observable("3 1\n1\n0\n", &chain),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn centering() {
        let chain = build_complete(5).unwrap();
        let constant = VectorObservable::new(&chain, 2, &vec![vec![3.0, -1.5]; 5]).unwrap();
        let c = center(&constant, &chain).unwrap();
        assert!((0..5).all(|s| c.value(s).iter().all(|v| v.abs() < 1e-15)));

        let f = random_observable(&chain, 3, 1.0, 11).unwrap();
        let again = center(&f, &chain).unwrap();
        for s in 0..5 {
            for (a, b) in f.value(s).iter().zip(again.value(s)) {
                assert!((a - b).abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn non_centered_is_rejected() {
        let chain = build_complete(2).unwrap();
        let f = VectorObservable::new(&chain, 1, &[vec![1.0], vec![0.0]]).unwrap();
        assert!(matches!(
            principal_variance(&f, &chain),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn cross_shaped_observable_has_variance_half() {
        let chain = build_lazy_hypercube(2).unwrap();
        let rows = vec![
            vec![1.0, 0.0],
            vec![-1.0, 0.0],
            vec![0.0, 1.0],
            vec![0.0, -1.0],
        ];
        let f = VectorObservable::new(&chain, 2, &rows).unwrap();
        let sigma2 = principal_variance(&f, &chain).unwrap();
        assert!((sigma2 - 0.5).abs() < 1e-15);
        // grid over the unit circle approaches from below
        let grid_max = (0..3600)
            .map(|k| {
                let t = k as f64 * std::f64::consts::PI / 1800.0;
                let u = [t.cos(), t.sin()];
                f.project(&u).iter().map(|p| 0.25 * p * p).sum::<f64>()
            })
            .fold(0.0, f64::max);
        assert!(grid_max <= sigma2 + 1e-12 && sigma2 - grid_max < 1e-6);
    }

    #[test]
    fn random_observable_is_deterministic_and_bounded() {
        let chain = build_complete(6).unwrap();
        let a = random_observable(&chain, 4, 0.3, 99).unwrap();
        let b = random_observable(&chain, 4, 0.3, 99).unwrap();
        assert_eq!(a, b);
        assert!(a.linf() <= 0.3);
        assert!(a.mean().iter().all(|m| m.abs() <= 1e-12));
        assert_ne!(a, random_observable(&chain, 4, 0.3, 100).unwrap());

        let two = build_complete(2).unwrap();
        let f = random_observable(&two, 1, 1.0, 5).unwrap();
        assert!((f.value(0)[0] + f.value(1)[0]).abs() < 1e-15);
        assert!(f.value(0)[0].abs() <= 1.0);
        assert!(random_observable(&two, 1, 0.0, 5).is_err());
    }

    #[test]
    fn text_round_trip() {
        let chain = build_complete(4).unwrap();
        let f = random_observable(&chain, 3, 1.0, 1).unwrap();
        assert_eq!(parse_observable(&f.to_text(), &chain).unwrap(), f);
    }
}
