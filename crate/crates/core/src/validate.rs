//! Finite-difference and spectral diagnostics for inference problems.
//!
//! The dual machinery makes quantitative promises: its gradient is the
//! constraint mismatch, its curvature matrix is the Jacobian of that
//! gradient, the curvature is positive semidefinite with negative
//! semidefinite inverse sensitivities, and on the Bell problem the
//! observable multiplier equals the entropy derivative with respect to the
//! target. This module checks each promise numerically so both the test
//! suite and the command-line diagnostics report observed deviations
//! instead of bare booleans.

use ndarray::Array2;

use crate::bell;
use crate::functional::EntropicFunctional;
use crate::linalg::{C64, HermitianMatrix};
use crate::solver::{self, ConstraintSet, MaxEntSolution, SolverOptions};
use crate::Result;

/// Central-difference step for multiplier and target perturbations.
pub const FD_STEP: f64 = 1e-5;
/// Gradient vs finite differences of the dual value.
pub const GRADIENT_FD_TOL: f64 = 1e-6;
/// Curvature matrix vs finite-difference Jacobian of the gradient.
pub const CURVATURE_FD_TOL: f64 = 1e-5;
/// Eigenvalue slack accepted on definiteness checks.
pub const PSD_TOL: f64 = 1e-10;
/// Observable multiplier vs entropy slope on the Bell problem.
pub const DS_DB_TOL: f64 = 1e-5;

/// One named diagnostic with its observed deviation.
#[derive(Clone, Debug)]
pub struct Check {
    pub name: &'static str,
    pub observed: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(name: &'static str, observed: f64, tolerance: f64) -> Self {
        Self {
            name,
            observed,
            tolerance,
            pass: observed <= tolerance,
        }
    }
}

pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.pass)
}

/// Largest deviation between the analytic dual gradient and central
/// differences of the dual value. Holds at any multiplier vector, not just
/// the optimum.
pub fn fd_gradient_deviation(
    lambda: &[f64],
    cs: &ConstraintSet,
    functional: &EntropicFunctional,
) -> Result<f64> {
    let (_, grad) = solver::dual_objective(lambda, cs, functional)?;
    let mut worst = 0.0f64;
    for alpha in 0..lambda.len() {
        let mut up = lambda.to_vec();
        let mut dn = lambda.to_vec();
        up[alpha] += FD_STEP;
        dn[alpha] -= FD_STEP;
        let (vu, _) = solver::dual_objective(&up, cs, functional)?;
        let (vd, _) = solver::dual_objective(&dn, cs, functional)?;
        worst = worst.max(((vu - vd) / (2.0 * FD_STEP) - grad[alpha]).abs());
    }
    Ok(worst)
}

/// Largest entrywise deviation between the curvature matrix and the
/// finite-difference Jacobian of the dual gradient.
pub fn fd_curvature_deviation(
    lambda: &[f64],
    cs: &ConstraintSet,
    functional: &EntropicFunctional,
) -> Result<f64> {
    let a = solver::curvature(lambda, cs, functional)?.a;
    let mut worst = 0.0f64;
    for beta in 0..lambda.len() {
        let mut up = lambda.to_vec();
        let mut dn = lambda.to_vec();
        up[beta] += FD_STEP;
        dn[beta] -= FD_STEP;
        let (_, gu) = solver::dual_objective(&up, cs, functional)?;
        let (_, gd) = solver::dual_objective(&dn, cs, functional)?;
        for alpha in 0..lambda.len() {
            let fd = (gu[alpha] - gd[alpha]) / (2.0 * FD_STEP);
            worst = worst.max((fd - a[[alpha, beta]]).abs());
        }
    }
    Ok(worst)
}

fn symmetric_eigenvalues(m: &Array2<f64>) -> Result<Vec<f64>> {
    let complex = m.mapv(|x| C64::new(x, 0.0));
    let (eigs, _) = HermitianMatrix::new(complex)?.eigh()?;
    Ok(eigs.to_vec())
}

/// Smallest eigenvalue of a real symmetric matrix.
pub fn min_symmetric_eigenvalue(m: &Array2<f64>) -> Result<f64> {
    let eigs = symmetric_eigenvalues(m)?;
    Ok(*eigs.last().expect("non-empty matrix"))
}

/// Largest eigenvalue of a real symmetric matrix.
pub fn max_symmetric_eigenvalue(m: &Array2<f64>) -> Result<f64> {
    let eigs = symmetric_eigenvalues(m)?;
    Ok(eigs[0])
}

/// Deviation between the observable multiplier and the central-difference
/// entropy slope with respect to the target on the Bell problem.
pub fn bell_entropy_slope_deviation(b: f64, functional: &EntropicFunctional) -> Result<f64> {
    let here = bell::solve_bell(b, functional)?;
    let up = bell::solve_bell(b + FD_STEP, functional)?;
    let dn = bell::solve_bell(b - FD_STEP, functional)?;
    let slope = (up.state.entropy(functional) - dn.state.entropy(functional)) / (2.0 * FD_STEP);
    Ok((slope - here.lambda_1).abs())
}

/// Solve a constraint set and run the full diagnostic battery at the
/// solution: gradient identity, curvature identity, curvature PSD, and
/// sensitivity NSD.
pub fn thermo_suite(
    cs: &ConstraintSet,
    functional: &EntropicFunctional,
    options: &SolverOptions,
) -> Result<(MaxEntSolution, Vec<Check>)> {
    let sol = solver::solve(cs, functional, options)?;
    let mut checks = Vec::new();
    checks.push(Check::new(
        "dual gradient vs finite differences",
        fd_gradient_deviation(&sol.lambda, cs, functional)?,
        GRADIENT_FD_TOL,
    ));
    checks.push(Check::new(
        "curvature vs gradient Jacobian",
        fd_curvature_deviation(&sol.lambda, cs, functional)?,
        CURVATURE_FD_TOL,
    ));
    let min_eig = min_symmetric_eigenvalue(&sol.curvature.a)?;
    checks.push(Check::new(
        "curvature positive semidefinite",
        (-min_eig).max(0.0),
        PSD_TOL,
    ));
    let sens = solver::primal_sensitivities(&sol)?;
    let max_eig = max_symmetric_eigenvalue(&sens)?;
    checks.push(Check::new(
        "sensitivities negative semidefinite",
        max_eig.max(0.0),
        PSD_TOL,
    ));
    Ok((sol, checks))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bell::{chsh_observable, solve_bell};
    use crate::solver::ConstraintSet;
    use ndarray::array;

    fn bell_problem(b: f64) -> ConstraintSet {
        ConstraintSet::new(4, vec![chsh_observable()], vec![b]).unwrap()
    }

    #[test]
    fn symmetric_eigenvalue_helpers() {
        let m = array![[2.0, 0.0], [0.0, -1.0]];
        assert!((min_symmetric_eigenvalue(&m).unwrap() + 1.0).abs() < 1e-14);
        assert!((max_symmetric_eigenvalue(&m).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn gradient_identity_holds_away_from_the_optimum() {
        let f = EntropicFunctional::shannon(1.0).unwrap();
        let cs = bell_problem(0.3);
        let dev = fd_gradient_deviation(&[0.3, -0.2], &cs, &f).unwrap();
        assert!(dev < GRADIENT_FD_TOL, "{dev}");
    }

    #[test]
    fn full_suite_passes_on_bell_points() {
        let fns = [
            EntropicFunctional::shannon(1.0).unwrap(),
            EntropicFunctional::tsallis(2.0, 1.0).unwrap(),
            EntropicFunctional::exponential(1.0, 1.0).unwrap(),
        ];
        for f in &fns {
            let cs = bell_problem(0.3);
            let (sol, checks) = thermo_suite(&cs, f, &Default::default()).unwrap();
            assert!(sol.max_residual() < 1e-9);
            assert!(all_pass(&checks), "{}: {checks:?}", f.name());
            assert_eq!(checks.len(), 4);
        }
    }

    #[test]
    fn multiplier_equals_entropy_slope() {
        let fns = [
            EntropicFunctional::shannon(1.0).unwrap(),
            EntropicFunctional::tsallis(2.0, 1.0).unwrap(),
            EntropicFunctional::exponential(1.0, 1.0).unwrap(),
        ];
        for f in &fns {
            let dev = bell_entropy_slope_deviation(0.3, f).unwrap();
            assert!(dev < DS_DB_TOL, "{}: {dev}", f.name());
        }
    }

    #[test]
    fn slope_identity_also_holds_in_the_cutoff_regime() {
        let f = EntropicFunctional::tsallis(2.0, 1.0).unwrap();
        let r = solve_bell(0.7, &f).unwrap();
        assert_eq!(r.regime, crate::bell::BellRegime::Cutoff);
        let dev = bell_entropy_slope_deviation(0.7, &f).unwrap();
        assert!(dev < DS_DB_TOL, "{dev}");
    }

    #[test]
    fn unconstrained_problem_yields_one_by_one_tables() {
        let f = EntropicFunctional::shannon(1.0).unwrap();
        let cs = ConstraintSet::new(3, vec![], vec![]).unwrap();
        let (sol, checks) = thermo_suite(&cs, &f, &Default::default()).unwrap();
        assert_eq!(sol.curvature.a.dim(), (1, 1));
        assert_eq!(solver::primal_sensitivities(&sol).unwrap().dim(), (1, 1));
        assert!(all_pass(&checks));
    }
}
