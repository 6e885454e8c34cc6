//! The tilted kernel `P(u)_st = P_st·e^{⟨f(t),u⟩}` and numerical checks of
//! the eigenvalue estimates behind the vector tail bound.
//!
//! `P(u)` is similar to the symmetric `S_u = E_u S E_u` with
//! `E_u = diag(e^{⟨f(s),u⟩/2})` and `S = D P D⁻¹`, `D = diag(√μ)`:
//!
//! ```text
//! P(u) = (E_u D)⁻¹ S_u (E_u D)
//! ```
//!
//! so every eigenvalue here comes from a symmetric eigensolve of `S_u`.
//! The top eigenvalue `λ₀(u)` is the spectral radius of `P(u)`.

use num_complex::Complex64;

use crate::bounds::{k_constant, KVariant};
use crate::chain::{chi_distance, InitialDistribution, ReversibleChain};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, symmetric_eigen, Matrix, SymmetricEigen};
use crate::observable::VectorObservable;

/// Default central-difference step.
pub const DEFAULT_STEP: f64 = 1e-4;
pub const MIN_STEP: f64 = 1e-6;
pub const MAX_STEP: f64 = 1e-2;
/// Richardson steps are this fraction of `ln(1 + g/2)`, the scale on which
/// `λ₀` stays analytic; much smaller steps drown in rounding.
pub const RICHARDSON_FRACTION: f64 = 0.1;
/// Intermediate magnitude that triggers rescaling in [`quadratic_form_power`].
pub const OVERFLOW_GUARD: f64 = 1e300;

const HYPOTHESIS_SLACK: f64 = 1e-12;
const UNIT_TOLERANCE: f64 = 1e-9;

fn check_pair(chain: &ReversibleChain, f: &VectorObservable) -> Result<()> {
    if f.n() != chain.n() {
        return Err(Error::DimensionMismatch {
            expected: chain.n(),
            got: f.n(),
        });
    }
    Ok(())
}

fn check_direction(f: &VectorObservable, u: &[f64]) -> Result<()> {
    if u.len() != f.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            got: u.len(),
        });
    }
    if u.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter(
            "perturbation has non-finite entries".into(),
        ));
    }
    Ok(())
}

fn check_unit(u: &[f64]) -> Result<()> {
    let len = norm2(u);
    if (len - 1.0).abs() > UNIT_TOLERANCE {
        return Err(Error::Precondition(format!(
            "direction must have unit length, got {len}"
        )));
    }
    Ok(())
}

/// `P(u)` and its symmetric similar `S_u`.
#[derive(Debug, Clone)]
pub struct PerturbedKernel<'a> {
    chain: &'a ReversibleChain,
    observable: &'a VectorObservable,
    u: Vec<f64>,
    pu: Matrix,
    su: Matrix,
}

impl<'a> PerturbedKernel<'a> {
    pub fn chain(&self) -> &'a ReversibleChain {
        self.chain
    }

    pub fn observable(&self) -> &'a VectorObservable {
        self.observable
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    /// `P(u)`.
    pub fn pu(&self) -> &Matrix {
        &self.pu
    }

    /// `S_u = E_u S E_u`.
    pub fn su(&self) -> &Matrix {
        &self.su
    }

    /// All eigenvalues of `P(u)`, descending.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(symmetric_eigen(&self.su, false)?.values)
    }

    /// Top eigenvalue of `S_u`, refined as the Rayleigh quotient of the
    /// Jacobi eigenvector with compensated sums. The quotient is second-order
    /// in the vector error, so this removes the rounding the rotations
    /// accumulate; finite differences of `λ₀` depend on that.
    pub fn lambda0(&self) -> Result<f64> {
        let eig = symmetric_eigen(&self.su, true)?;
        let v = eig.vector(0).expect("vectors requested");
        let n = v.len();
        let mut num = NeumaierSum::default();
        let mut den = NeumaierSum::default();
        for i in 0..n {
            den.add(v[i] * v[i]);
            for j in 0..n {
                num.add(self.su[(i, j)] * v[i] * v[j]);
            }
        }
        Ok(num.total() / den.total())
    }
}

/// Neumaier's compensated summation.
#[derive(Debug, Default)]
struct NeumaierSum {
    sum: f64,
    carry: f64,
}

impl NeumaierSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.carry
    }
}

pub fn perturbed<'a>(
    chain: &'a ReversibleChain,
    f: &'a VectorObservable,
    u: &[f64],
) -> Result<PerturbedKernel<'a>> {
    check_pair(chain, f)?;
    check_direction(f, u)?;
    let s = chain.symmetrized();
    Ok(build_kernel(chain, f, &s, u))
}

fn build_kernel<'a>(
    chain: &'a ReversibleChain,
    f: &'a VectorObservable,
    s: &Matrix,
    u: &[f64],
) -> PerturbedKernel<'a> {
    let n = chain.n();
    let tilt = f.project(u);
    let full: Vec<f64> = tilt.iter().map(|v| v.exp()).collect();
    let half: Vec<f64> = tilt.iter().map(|v| (0.5 * v).exp()).collect();
    let p = chain.transition();
    let mut pu = Matrix::zeros(n, n);
    let mut su = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            pu[(i, j)] = p[(i, j)] * full[j];
            su[(i, j)] = s[(i, j)] * (half[i] * half[j]);
        }
    }
    PerturbedKernel {
        chain,
        observable: f,
        u: u.to_vec(),
        pu,
        su,
    }
}

/// `λ₀(u)`, the top eigenvalue of `S_u`.
pub fn lambda0(kernel: &PerturbedKernel<'_>) -> Result<f64> {
    kernel.lambda0()
}

/// Outcome of a single eigenvalue-bound check at `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationReport {
    pub lambda0: f64,
    pub k_used: f64,
    /// `e^{k|u|²} − λ₀(u)`; expected nonnegative.
    pub margin: f64,
    /// Central-difference `λ₀′(0)` along `u/|u|`.
    pub derivative1: f64,
    /// Central-difference `λ₀″(0)` along `u/|u|`.
    pub derivative2: f64,
    /// `(1 + 2/g)·σ²`.
    pub d2_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeEstimates {
    pub derivative1: f64,
    pub derivative2: f64,
}

/// Outcome of the resolvent-norm scan on `|ζ − 1| = g/2`.
///
/// The `λ₀ = 1` term `|1/(1 − ζ)|` equals `2/g` everywhere on the circle,
/// so the full norm is flat there up to rounding. The remaining terms peak
/// strictly at `ζ₀ = 1 − g/2`, which is what `subdominant_*` records.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolventReport {
    /// Largest sampled `‖R_S(ζ) S‖`.
    pub max_norm: f64,
    /// `‖R_S(ζ₀) S‖`.
    pub at_zeta0: f64,
    /// `2/g`.
    pub expected: f64,
    /// Sample at which the maximum occurred.
    pub argmax: Complex64,
    /// Largest sampled `max_{i≥1} |λ_i/(λ_i − ζ)|` and where it occurred.
    pub subdominant_max: f64,
    pub subdominant_argmax: Complex64,
    pub gap: f64,
}

impl ResolventReport {
    pub fn relative_error(&self) -> f64 {
        (self.max_norm - self.expected).abs() / self.expected
    }

    /// Maximum equals `2/g` within `1e−6` relative and is attained at
    /// `1 − g/2` to rounding.
    pub fn passes(&self) -> bool {
        self.relative_error() <= 1e-6 && self.at_zeta0 >= self.max_norm * (1.0 - 1e-12)
    }
}

/// `mantissa · 2^exponent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledValue {
    pub mantissa: f64,
    pub exponent: i32,
}

impl ScaledValue {
    /// Plain value; may overflow to infinity.
    pub fn to_f64(self) -> f64 {
        self.mantissa * 2f64.powi(self.exponent)
    }

    pub fn ln(self) -> f64 {
        self.mantissa.ln() + f64::from(self.exponent) * std::f64::consts::LN_2
    }
}

/// Everything derived from one `(chain, f)` pair that the checks share:
/// the decomposition of `S`, the gap `g = 1 − λ₁` and `σ²`.
#[derive(Debug, Clone)]
pub struct PerturbationAnalysis<'a> {
    chain: &'a ReversibleChain,
    observable: &'a VectorObservable,
    s: Matrix,
    decomposition: SymmetricEigen,
    gap: f64,
}

impl<'a> PerturbationAnalysis<'a> {
    pub fn new(chain: &'a ReversibleChain, f: &'a VectorObservable) -> Result<Self> {
        check_pair(chain, f)?;
        let s = chain.symmetrized();
        let decomposition = symmetric_eigen(&s, true)?;
        let gap = 1.0 - decomposition.values[1];
        Ok(Self {
            chain,
            observable: f,
            s,
            decomposition,
            gap,
        })
    }

    pub fn chain(&self) -> &'a ReversibleChain {
        self.chain
    }

    pub fn observable(&self) -> &'a VectorObservable {
        self.observable
    }

    /// `1 − λ₁`.
    pub fn gap(&self) -> f64 {
        self.gap
    }

    /// `RICHARDSON_FRACTION · ln(1 + g/2)`.
    pub fn richardson_step(&self) -> f64 {
        RICHARDSON_FRACTION * (1.0 + 0.5 * self.gap).ln()
    }

    pub fn sigma2(&self) -> f64 {
        self.observable.principal_variance()
    }

    pub fn kernel(&self, u: &[f64]) -> Result<PerturbedKernel<'a>> {
        check_direction(self.observable, u)?;
        Ok(build_kernel(self.chain, self.observable, &self.s, u))
    }

    pub fn lambda0_at(&self, u: &[f64]) -> Result<f64> {
        self.kernel(u)?.lambda0()
    }

    fn require_centered(&self) -> Result<()> {
        if !self.observable.is_centered() {
            return Err(Error::Precondition(format!(
                "observable is not centered (mean {:?})",
                self.observable.mean()
            )));
        }
        Ok(())
    }

    fn require_unit_bounded(&self) -> Result<()> {
        if self.observable.linf() > 1.0 + HYPOTHESIS_SLACK {
            return Err(Error::Precondition(format!(
                "needs ||f||_inf <= 1, got {}",
                self.observable.linf()
            )));
        }
        Ok(())
    }

    fn require_gap(&self) -> Result<()> {
        if !(self.gap > HYPOTHESIS_SLACK) {
            return Err(Error::InvalidGap(self.gap));
        }
        Ok(())
    }

    /// `λ₀(u) ≤ e^{k|u|²}` with `k` from `σ²(f)`, `L = 1`, `g = 1 − λ₁`.
    pub fn verify_eigenvalue_bound(&self, u: &[f64]) -> Result<PerturbationReport> {
        self.require_centered()?;
        self.require_unit_bounded()?;
        self.require_gap()?;
        check_direction(self.observable, u)?;
        let sigma2 = self.sigma2();
        let k = k_constant(sigma2, 1.0, self.gap, KVariant::Prop9)?;
        let lambda0 = self.lambda0_at(u)?;
        let len = norm2(u);
        let margin = (k * len * len).exp() - lambda0;

        let direction: Vec<f64> = if len > 0.0 {
            u.iter().map(|x| x / len).collect()
        } else {
            let mut e = vec![0.0; u.len()];
            e[0] = 1.0;
            e
        };
        let d = self.derivative_checks(&direction, DEFAULT_STEP)?;
        Ok(PerturbationReport {
            lambda0,
            k_used: k,
            margin,
            derivative1: d.derivative1,
            derivative2: d.derivative2,
            d2_bound: (1.0 + 2.0 / self.gap) * sigma2,
        })
    }

    /// Central differences of `z ↦ λ₀(z·u)` at `z = 0`.
    pub fn derivative_checks(&self, direction: &[f64], step: f64) -> Result<DerivativeEstimates> {
        self.require_centered()?;
        self.require_unit_bounded()?;
        check_direction(self.observable, direction)?;
        check_unit(direction)?;
        if !(MIN_STEP..=MAX_STEP).contains(&step) {
            return Err(Error::InvalidParameter(format!(
                "step {step} outside [{MIN_STEP}, {MAX_STEP}]"
            )));
        }
        self.central_differences(direction, step)
    }

    fn central_differences(&self, direction: &[f64], h: f64) -> Result<DerivativeEstimates> {
        let at = |z: f64| {
            let u: Vec<f64> = direction.iter().map(|x| z * x).collect();
            self.lambda0_at(&u)
        };
        let plus = at(h)?;
        let zero = at(0.0)?;
        let minus = at(-h)?;
        Ok(DerivativeEstimates {
            derivative1: (plus - minus) / (2.0 * h),
            derivative2: (plus - 2.0 * zero + minus) / (h * h),
        })
    }

    /// `X′(0) = μ V (I − P)†` with the pseudo-inverse realized on the
    /// eigenbasis of `S`: `(I − S)†` has eigenvalues `1/(1 − λ_i)` for
    /// `i ≥ 1` and `0` on the top eigenvector.
    pub fn eigenvector_derivative(&self, direction: &[f64]) -> Result<Vec<f64>> {
        self.require_gap()?;
        check_direction(self.observable, direction)?;
        let mu = self.chain.stationary();
        let tilt = self.observable.project(direction);
        // μ V D⁻¹ has entries √μ_s ⟨f(s),u⟩
        let y: Vec<f64> = mu.iter().zip(&tilt).map(|(m, v)| m.sqrt() * v).collect();
        let vectors = self
            .decomposition
            .vectors
            .as_ref()
            .expect("decomposition has vectors");
        let n = self.chain.n();
        let mut w = vec![0.0; n];
        for i in 1..n {
            let v = vectors.column(i);
            let coef = dot(&y, &v) / (1.0 - self.decomposition.values[i]);
            for (wk, vk) in w.iter_mut().zip(&v) {
                *wk += coef * vk;
            }
        }
        Ok(w.iter().zip(mu).map(|(wk, m)| wk * m.sqrt()).collect())
    }

    /// `λ₀″(0) = μ V² 1 + 2 X′(0) P V 1` along a unit direction.
    pub fn second_derivative_formula(&self, direction: &[f64]) -> Result<f64> {
        self.require_centered()?;
        check_direction(self.observable, direction)?;
        check_unit(direction)?;
        let x = self.eigenvector_derivative(direction)?;
        let mu = self.chain.stationary();
        let tilt = self.observable.project(direction);
        let first: f64 = mu.iter().zip(&tilt).map(|(m, v)| m * v * v).sum();
        let pv1 = self.chain.transition().mul_vec(&tilt);
        Ok(first + 2.0 * dot(&x, &pv1))
    }

    /// `(‖X′(0)(I − P) − μV‖_∞, |⟨X′(0), 1⟩|)`.
    pub fn eigenvector_equation_residuals(&self, direction: &[f64]) -> Result<(f64, f64)> {
        let x = self.eigenvector_derivative(direction)?;
        let xp = self.chain.transition().vec_mul(&x);
        let mu = self.chain.stationary();
        let tilt = self.observable.project(direction);
        let residual = (0..self.chain.n())
            .map(|t| ((x[t] - xp[t]) - mu[t] * tilt[t]).abs())
            .fold(0.0, f64::max);
        Ok((residual, x.iter().sum::<f64>().abs()))
    }

    /// `|FD₂(2h) − formula| / |FD₂(h) − formula|`; close to 4 when the
    /// central difference is in its `O(h²)` regime.
    pub fn richardson_ratio(&self, direction: &[f64], h: f64) -> Result<f64> {
        let exact = self.second_derivative_formula(direction)?;
        let coarse = self.central_differences(direction, 2.0 * h)?.derivative2;
        let fine = self.central_differences(direction, h)?.derivative2;
        Ok((coarse - exact).abs() / (fine - exact).abs())
    }

    /// Richardson-extrapolated `λ₀″(0)`: `(4·FD₂(h) − FD₂(2h))/3`, accurate
    /// to `O(h⁴)`.
    pub fn extrapolated_second_derivative(&self, direction: &[f64], h: f64) -> Result<f64> {
        let coarse = self.central_differences(direction, 2.0 * h)?.derivative2;
        let fine = self.central_differences(direction, h)?.derivative2;
        Ok((4.0 * fine - coarse) / 3.0)
    }

    /// `3·‖μ⁽⁰⁾/μ‖·λ₀(u)^N − (μ⁽⁰⁾, P(u)^N 1)`.
    pub fn verify_norm_bound(
        &self,
        u: &[f64],
        mu0: &InitialDistribution,
        steps: u32,
    ) -> Result<f64> {
        self.require_unit_bounded()?;
        check_direction(self.observable, u)?;
        if norm2(u) > 1.0 + HYPOTHESIS_SLACK {
            return Err(Error::Precondition(format!(
                "needs |u| <= 1, got {}",
                norm2(u)
            )));
        }
        let chi = chi_distance(mu0, self.chain)?;
        let kernel = self.kernel(u)?;
        let lambda0 = kernel.lambda0()?;
        let form = quadratic_form_power(&kernel, mu0, steps)?;
        let bound_ln = (3.0 * chi).ln() + f64::from(steps) * lambda0.ln();
        let form_ln = form.ln();
        let peak = bound_ln.max(form_ln);
        if peak < 700.0 {
            Ok(bound_ln.exp() - form_ln.exp())
        } else {
            Ok(((bound_ln - peak).exp() - (form_ln - peak).exp()) * peak.exp())
        }
    }

    /// `λ₀(z·u) ≤ e^z` for a unit direction and `z > 0`.
    pub fn unit_growth_margin(&self, direction: &[f64], z: f64) -> Result<f64> {
        self.require_unit_bounded()?;
        check_unit(direction)?;
        let u: Vec<f64> = direction.iter().map(|x| z * x).collect();
        Ok(z.exp() - self.lambda0_at(&u)?)
    }
}

/// See [`PerturbationAnalysis::verify_eigenvalue_bound`].
pub fn verify_eigenvalue_bound(
    chain: &ReversibleChain,
    f: &VectorObservable,
    u: &[f64],
) -> Result<PerturbationReport> {
    PerturbationAnalysis::new(chain, f)?.verify_eigenvalue_bound(u)
}

/// See [`PerturbationAnalysis::derivative_checks`].
pub fn derivative_checks(
    chain: &ReversibleChain,
    f: &VectorObservable,
    direction: &[f64],
    step: f64,
) -> Result<DerivativeEstimates> {
    PerturbationAnalysis::new(chain, f)?.derivative_checks(direction, step)
}

/// See [`PerturbationAnalysis::second_derivative_formula`].
pub fn second_derivative_formula(
    chain: &ReversibleChain,
    f: &VectorObservable,
    direction: &[f64],
) -> Result<f64> {
    PerturbationAnalysis::new(chain, f)?.second_derivative_formula(direction)
}

/// See [`PerturbationAnalysis::verify_norm_bound`].
pub fn verify_norm_bound(
    chain: &ReversibleChain,
    f: &VectorObservable,
    u: &[f64],
    mu0: &InitialDistribution,
    steps: u32,
) -> Result<f64> {
    PerturbationAnalysis::new(chain, f)?.verify_norm_bound(u, mu0, steps)
}

/// `max_ζ ‖R_S(ζ) S‖ = max_ζ max_i |λ_i / (λ_i − ζ)|` over `samples` points
/// `ζ_j = 1 + (g/2)·e^{i(π + 2πj/samples)}`; `j = 0` is `ζ₀ = 1 − g/2`.
pub fn resolvent_check(chain: &ReversibleChain, samples: usize) -> Result<ResolventReport> {
    let eigenvalues = chain.spectrum()?.eigenvalues;
    let gap = 1.0 - eigenvalues[1];
    if !(gap > HYPOTHESIS_SLACK) {
        return Err(Error::InvalidGap(gap));
    }
    if samples == 0 {
        return Err(Error::InvalidParameter(
            "need at least one sample on the circle".into(),
        ));
    }
    let angles: Vec<f64> = (0..samples)
        .map(|j| std::f64::consts::PI * (1.0 + 2.0 * j as f64 / samples as f64))
        .collect();
    Ok(resolvent_scan(&eigenvalues, gap, &angles))
}

fn resolvent_terms(eigenvalues: &[f64], zeta: Complex64) -> (f64, f64) {
    let term = |l: f64| (Complex64::new(l, 0.0) / (l - zeta)).norm();
    let rest = eigenvalues[1..]
        .iter()
        .map(|&l| term(l))
        .fold(0.0, f64::max);
    (term(eigenvalues[0]).max(rest), rest)
}

/// Scans `‖R_S(ζ) S‖` at `ζ = 1 + (g/2)e^{iθ}` for the given angles.
/// `eigenvalues` must be sorted descending with `λ₀ = 1` first.
pub fn resolvent_scan(eigenvalues: &[f64], gap: f64, angles: &[f64]) -> ResolventReport {
    let radius = 0.5 * gap;
    let origin = Complex64::new(0.0, 0.0);
    let (mut best, mut sub) = ((f64::NEG_INFINITY, origin), (f64::NEG_INFINITY, origin));
    for &theta in angles {
        let zeta = Complex64::new(1.0, 0.0) + Complex64::from_polar(radius, theta);
        let (norm, rest) = resolvent_terms(eigenvalues, zeta);
        if norm > best.0 {
            best = (norm, zeta);
        }
        if rest > sub.0 {
            sub = (rest, zeta);
        }
    }
    ResolventReport {
        max_norm: best.0,
        at_zeta0: resolvent_terms(eigenvalues, Complex64::new(1.0 - radius, 0.0)).0,
        expected: 2.0 / gap,
        argmax: best.1,
        subdominant_max: sub.0,
        subdominant_argmax: sub.1,
        gap,
    }
}

/// `(μ⁽⁰⁾, P(u)^N 1)` by `N` matrix–vector products, rescaling by powers
/// of two whenever an intermediate exceeds [`OVERFLOW_GUARD`].
pub fn quadratic_form_power(
    kernel: &PerturbedKernel<'_>,
    mu0: &InitialDistribution,
    steps: u32,
) -> Result<ScaledValue> {
    let n = kernel.chain.n();
    if mu0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: mu0.len(),
        });
    }
    let mut v = vec![1.0; n];
    let mut exponent: i32 = 0;
    for _ in 0..steps {
        v = kernel.pu.mul_vec(&v);
        let peak = v.iter().copied().fold(0.0, f64::max);
        if !peak.is_finite() {
            return Err(Error::Numerical(
                "matrix power overflowed before rescaling".into(),
            ));
        }
        if peak > OVERFLOW_GUARD || (peak > 0.0 && peak < 1.0 / OVERFLOW_GUARD) {
            let shift = peak.log2().floor() as i32;
            let factor = 2f64.powi(-shift);
            v.iter_mut().for_each(|x| *x *= factor);
            exponent += shift;
        }
    }
    Ok(ScaledValue {
        mantissa: dot(mu0.weights(), &v),
        exponent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{build_complete, build_cycle};
    use crate::observable::{random_observable, VectorObservable};

    fn rademacher_k2() -> (ReversibleChain, VectorObservable) {
        let chain = build_complete(2).unwrap();
        let f = VectorObservable::new(&chain, 1, &[vec![1.0], vec![-1.0]]).unwrap();
        (chain, f)
    }

    #[test]
    fn zero_perturbation_is_the_chain() {
        let chain = build_cycle(5).unwrap();
        let f = random_observable(&chain, 2, 1.0, 3).unwrap();
        let k = perturbed(&chain, &f, &[0.0, 0.0]).unwrap();
        assert_eq!(k.pu(), chain.transition());
        assert_eq!(k.su(), &chain.symmetrized());
        assert!((lambda0(&k).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn two_state_hand_computation() {
        let (chain, f) = rademacher_k2();
        let k = perturbed(&chain, &f, &[2f64.ln()]).unwrap();
        let expected = Matrix::from_rows(&[vec![0.0, 0.5], vec![2.0, 0.0]]);
        for i in 0..2 {
            for j in 0..2 {
                assert!((k.pu()[(i, j)] - expected[(i, j)]).abs() < 1e-15);
            }
        }
        let eig = k.eigenvalues().unwrap();
        assert!((eig[0] - 1.0).abs() < 1e-14 && (eig[1] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn dimension_checks() {
        let (chain, f) = rademacher_k2();
        assert!(matches!(
            perturbed(&chain, &f, &[1.0, 0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        let other = build_complete(3).unwrap();
        assert!(perturbed(&other, &f, &[1.0]).is_err());
    }

    #[test]
    fn zero_observable_has_flat_eigenvalue() {
        let chain = build_complete(4).unwrap();
        let f = VectorObservable::new(&chain, 1, &vec![vec![0.0]; 4]).unwrap();
        let d = derivative_checks(&chain, &f, &[1.0], 1e-4).unwrap();
        assert_eq!(d.derivative1, 0.0);
        assert_eq!(d.derivative2, 0.0);
        assert_eq!(second_derivative_formula(&chain, &f, &[1.0]).unwrap(), 0.0);
    }

    #[test]
    fn derivative_step_range_and_unit_direction() {
        let chain = build_complete(4).unwrap();
        let f = random_observable(&chain, 2, 1.0, 1).unwrap();
        assert!(derivative_checks(&chain, &f, &[1.0, 0.0], 1e-7).is_err());
        assert!(derivative_checks(&chain, &f, &[1.0, 0.0], 0.1).is_err());
        assert!(derivative_checks(&chain, &f, &[1.0, 1.0], 1e-4).is_err());
    }

    #[test]
    fn eigenvalue_bound_at_origin_has_zero_margin() {
        let chain = build_complete(6).unwrap();
        let f = random_observable(&chain, 2, 1.0, 4).unwrap();
        let r = verify_eigenvalue_bound(&chain, &f, &[0.0, 0.0]).unwrap();
        assert!((r.lambda0 - 1.0).abs() < 1e-14);
        assert!(r.margin.abs() < 1e-14);
    }

    #[test]
    fn eigenvalue_bound_rejects_hypothesis_violations() {
        let chain = build_complete(3).unwrap();
        let raw = VectorObservable::new(&chain, 1, &[vec![1.0], vec![0.0], vec![0.0]]).unwrap();
        assert!(matches!(
            verify_eigenvalue_bound(&chain, &raw, &[0.5]),
            Err(Error::Precondition(_))
        ));
        let big = VectorObservable::new(&chain, 1, &[vec![2.0], vec![-1.0], vec![-1.0]]).unwrap();
        assert!(matches!(
            verify_eigenvalue_bound(&chain, &big, &[0.5]),
            Err(Error::Precondition(_))
        ));
        let id = ReversibleChain::with_distribution(Matrix::identity(3), vec![1.0 / 3.0; 3], "id")
            .unwrap();
        let f = VectorObservable::new(&id, 1, &[vec![1.0], vec![-1.0], vec![0.0]]).unwrap();
        assert!(matches!(
            verify_eigenvalue_bound(&id, &f, &[0.5]),
            Err(Error::InvalidGap(_))
        ));
    }

    #[test]
    fn quadratic_form_trivial_cases() {
        let chain = build_cycle(5).unwrap();
        let f = random_observable(&chain, 1, 1.0, 8).unwrap();
        let mu0 = InitialDistribution::point_mass(5, 2).unwrap();
        let k0 = perturbed(&chain, &f, &[0.0]).unwrap();
        for steps in [0, 1, 7, 50] {
            assert!((quadratic_form_power(&k0, &mu0, steps).unwrap().to_f64() - 1.0).abs() < 1e-13);
        }
        let k = perturbed(&chain, &f, &[0.7]).unwrap();
        assert_eq!(quadratic_form_power(&k, &mu0, 0).unwrap().to_f64(), 1.0);
    }

    #[test]
    fn quadratic_form_rescales_instead_of_overflowing() {
        let chain = build_complete(3).unwrap();
        let f = VectorObservable::new(&chain, 1, &[vec![1.0], vec![1.0], vec![1.0]]).unwrap();
        // P(u) = e^{u} P, so the form is e^{uN} exactly
        let u = 10.0;
        let k = perturbed(&chain, &f, &[u]).unwrap();
        let mu0 = InitialDistribution::uniform(3);
        let v = quadratic_form_power(&k, &mu0, 200).unwrap();
        assert!(v.exponent > 0);
        assert!((v.ln() - 2000.0).abs() < 1e-9, "{}", v.ln());
    }

    #[test]
    fn norm_bound_at_origin() {
        let chain = build_cycle(5).unwrap();
        let f = random_observable(&chain, 1, 1.0, 2).unwrap();
        let mu0 = InitialDistribution::point_mass(5, 0).unwrap();
        let chi = chi_distance(&mu0, &chain).unwrap();
        let margin = verify_norm_bound(&chain, &f, &[0.0], &mu0, 10).unwrap();
        assert!((margin - (3.0 * chi - 1.0)).abs() < 1e-12);
        assert!(verify_norm_bound(&chain, &f, &[1.5], &mu0, 10).is_err());
    }

    #[test]
    fn second_derivative_formula_matches_differences_on_k8() {
        let chain = build_complete(8).unwrap();
        let f = random_observable(&chain, 3, 1.0, 5).unwrap();
        let a = PerturbationAnalysis::new(&chain, &f).unwrap();
        let dir = [0.6, 0.0, -0.8];
        let formula = a.second_derivative_formula(&dir).unwrap();
        let fd = a.derivative_checks(&dir, 1e-3).unwrap().derivative2;
        assert!((formula - fd).abs() < 1e-4, "{formula} vs {fd}");
        let h = a.richardson_step();
        let extrapolated = a.extrapolated_second_derivative(&dir, h).unwrap();
        assert!((formula - extrapolated).abs() < (formula - fd).abs().max(1e-9));
    }

    #[test]
    fn resolvent_peak_is_at_the_real_point() {
        let chain = build_complete(32).unwrap();
        let r = resolvent_check(&chain, 360).unwrap();
        assert!((r.expected - 1.9375).abs() < 1e-12);
        assert!(r.passes(), "{r:?}");
        let zeta0 = Complex64::new(1.0 - 0.5 * r.gap, 0.0);
        assert!((r.subdominant_argmax - zeta0).norm() < 1e-12);
        // 2|1 − g|/g from λ₁ at distance g/2
        assert!((r.subdominant_max - 2.0 * (1.0 - r.gap).abs() / r.gap).abs() < 1e-9);

        // the λ₀ term is flat on the circle, so dropping ζ₀ keeps the full
        // maximum but strictly lowers the subdominant one
        let eig = chain.spectrum().unwrap().eigenvalues;
        let off: Vec<f64> = (1..360)
            .map(|j| std::f64::consts::PI * (1.0 + j as f64 / 180.0))
            .collect();
        let without = resolvent_scan(&eig, r.gap, &off);
        assert!((without.max_norm - r.expected).abs() < 1e-9);
        assert!(without.subdominant_max < r.subdominant_max);
    }
}
