//! The check battery behind the `verify` subcommand: one row per check,
//! each a value compared against a bound.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::chain::{chi_distance, InitialDistribution, ReversibleChain};
use crate::error::Result;
use crate::linalg::norm2;
use crate::observable::VectorObservable;
use crate::perturbation::{quadratic_form_power, resolvent_check, PerturbationAnalysis};

/// Tolerances applied by the battery.
pub const FIRST_DERIVATIVE_TOLERANCE: f64 = 1e-6;
pub const SECOND_DERIVATIVE_SLACK: f64 = 1e-6;
pub const FORMULA_TOLERANCE: f64 = 1e-4;
pub const EIGENVECTOR_RESIDUAL_TOLERANCE: f64 = 1e-11;
pub const EIGENVECTOR_ORTHOGONALITY_TOLERANCE: f64 = 1e-12;
/// Accepted Richardson ratios are `4 ± RICHARDSON_HALF_WIDTH`.
pub const RICHARDSON_HALF_WIDTH: f64 = 0.5;
pub const RESOLVENT_SAMPLES: usize = 360;
pub const NORM_BOUND_STEPS: u32 = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub check: String,
    pub chain: String,
    pub seed: u64,
    pub value: f64,
    pub bound: f64,
    pub margin: f64,
    pub pass: bool,
}

/// Seeded unit vector in `R^dim`.
pub fn random_direction(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let len = norm2(&v);
        if len > 1e-3 {
            return v.iter().map(|x| x / len).collect();
        }
    }
}

/// Runs every check on a centered observable with `‖f‖_∞ ≤ 1`.
pub fn run_checks(
    chain: &ReversibleChain,
    f: &VectorObservable,
    seed: u64,
) -> Result<Vec<CheckRow>> {
    let analysis = PerturbationAnalysis::new(chain, f)?;
    let dir = random_direction(f.dim(), seed);
    let mut rows = Vec::new();
    let mut push = |check: &str, value: f64, bound: f64, margin: f64, pass: bool| {
        rows.push(CheckRow {
            check: check.to_string(),
            chain: chain.label().to_string(),
            seed,
            value,
            bound,
            margin,
            pass,
        });
    };
    let upper =
        |push: &mut dyn FnMut(&str, f64, f64, f64, bool), name: &str, value: f64, bound: f64| {
            let margin = bound - value;
            push(name, value, bound, margin, margin >= 0.0);
        };

    for step in 1..=30 {
        let z = 0.1 * f64::from(step);
        let u: Vec<f64> = dir.iter().map(|x| z * x).collect();
        let r = analysis.verify_eigenvalue_bound(&u)?;
        push(
            "prop9",
            r.lambda0,
            r.lambda0 + r.margin,
            r.margin,
            r.margin >= 0.0,
        );
    }

    let d = analysis.derivative_checks(&dir, crate::perturbation::DEFAULT_STEP)?;
    upper(
        &mut push,
        "first_derivative",
        d.derivative1.abs(),
        FIRST_DERIVATIVE_TOLERANCE,
    );
    let d2_bound = (1.0 + 2.0 / analysis.gap()) * analysis.sigma2() + SECOND_DERIVATIVE_SLACK;
    upper(&mut push, "second_derivative", d.derivative2, d2_bound);

    // small gaps make the plain h = 1e−3 difference too coarse, so compare
    // against the extrapolated one at the gap-scaled step
    let h = analysis.richardson_step();
    let formula = analysis.second_derivative_formula(&dir)?;
    let fd = analysis.extrapolated_second_derivative(&dir, h)?;
    upper(
        &mut push,
        "second_derivative_formula",
        (formula - fd).abs(),
        FORMULA_TOLERANCE,
    );

    let ratio = analysis.richardson_ratio(&dir, h)?;
    let slack = RICHARDSON_HALF_WIDTH - (ratio - 4.0).abs();
    push("richardson_ratio", ratio, 4.0, slack, slack >= 0.0);

    let (residual, orthogonality) = analysis.eigenvector_equation_residuals(&dir)?;
    upper(
        &mut push,
        "eigenvector_residual",
        residual,
        EIGENVECTOR_RESIDUAL_TOLERANCE,
    );
    upper(
        &mut push,
        "eigenvector_orthogonality",
        orthogonality,
        EIGENVECTOR_ORTHOGONALITY_TOLERANCE,
    );

    let res = resolvent_check(chain, RESOLVENT_SAMPLES)?;
    push(
        "resolvent_norm",
        res.max_norm,
        res.expected,
        1e-6 - res.relative_error(),
        res.passes(),
    );

    for step in 1..=10 {
        let z = 0.5 * f64::from(step);
        let margin = analysis.unit_growth_margin(&dir, z)?;
        push(
            "unit_growth",
            z.exp() - margin,
            z.exp(),
            margin,
            margin >= 0.0,
        );
    }

    for (name, mu0) in [
        (
            "norm_bound_stationary_start",
            InitialDistribution::stationary(chain),
        ),
        (
            "norm_bound_point_start",
            InitialDistribution::point_mass(chain.n(), 0)?,
        ),
    ] {
        let kernel = analysis.kernel(&dir)?;
        let form = quadratic_form_power(&kernel, &mu0, NORM_BOUND_STEPS)?.to_f64();
        let bound =
            3.0 * chi_distance(&mu0, chain)? * kernel.lambda0()?.powi(NORM_BOUND_STEPS as i32);
        let margin = analysis.verify_norm_bound(&dir, &mu0, NORM_BOUND_STEPS)?;
        push(name, form, bound, margin, margin >= 0.0);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::build_complete;
    use crate::observable::random_observable;

    #[test]
    fn battery_passes_on_complete_graph() {
        let chain = build_complete(8).unwrap();
        let f = random_observable(&chain, 3, 1.0, 7).unwrap();
        let rows = run_checks(&chain, &f, 7).unwrap();
        assert!(rows.iter().all(|r| r.pass), "{rows:#?}");
        assert_eq!(rows.len(), 30 + 6 + 1 + 10 + 2);
    }

    #[test]
    fn directions_are_unit_and_seeded() {
        let a = random_direction(5, 1);
        assert!((norm2(&a) - 1.0).abs() < 1e-15);
        assert_eq!(a, random_direction(5, 1));
        assert_ne!(a, random_direction(5, 2));
    }
}
