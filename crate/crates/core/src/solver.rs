//! Constrained maximization of `S_f = Tr f(rho)` over density operators.
//!
//! The primal problem (maximize `S_f` subject to `Tr(rho O_alpha) = t_alpha`)
//! is solved through its dual: the stationary state is `rho = p(h)` with
//! `h = sum_alpha lambda_alpha O_alpha` and `p` the inverse of `f'` applied
//! spectrally, and the multipliers minimize the convex dual
//!
//! ```text
//! value(lambda) = sum_i [f(p_i) - p_i h_i] + lambda . t
//! ```
//!
//! whose gradient is `t_alpha - <O_alpha>` and whose Hessian is the positive
//! semidefinite curvature matrix `A`. The iteration is damped Newton with
//! Levenberg regularization and a backtracking line search.

use ndarray::{Array1, Array2};

use crate::functional::EntropicFunctional;
use crate::linalg::{adjoint, C64, DensityOperator, HermitianMatrix};
use crate::{Error, Result};

/// Minimum eigenvalue of the normalized observable Gram matrix; below this
/// the constraint directions are treated as linearly dependent.
const GRAM_MIN_EIG: f64 = 1e-10;
/// Field gaps below this use the degenerate (diagonal) curvature limit.
const DEGENERATE_FIELD_GAP: f64 = 1e-9;
/// Slack allowed below `f'(1)` before a field spectrum counts as out of range.
const DOMAIN_SLACK: f64 = 1e-12;
/// Consecutive no-progress iterations before declaring the targets infeasible.
const STALL_LIMIT: usize = 25;
/// Relative dual-value change under which an iteration counts as stalled.
const STALL_VALUE_TOL: f64 = 1e-14;
const LINE_SEARCH_HALVINGS: usize = 30;
const DAMPING_ESCALATIONS: usize = 8;
/// A step that fails to lower the dual value is still accepted if it
/// contracts the residual by at least this factor; near the optimum the
/// value change sits in float noise while the residual is still meaningful.
const RESIDUAL_CONTRACTION: f64 = 0.99;
/// Ridge added to `A` when inverting it for sensitivities.
const SENSITIVITY_RIDGE: f64 = 1e-12;

/// Expectation-value constraints `Tr(rho O_alpha) = t_alpha`. Constraint 0
/// is always the identity with target 1 (normalization); user observables
/// follow from index 1.
#[derive(Clone, Debug)]
pub struct ConstraintSet {
    dim: usize,
    observables: Vec<HermitianMatrix>,
    targets: Vec<f64>,
}

impl ConstraintSet {
    /// `observables` and `targets` are the physical constraints; the
    /// identity/trace pair is prepended automatically. Rejects linearly
    /// dependent observable sets, since those make the multipliers
    /// non-unique and the curvature singular.
    pub fn new(
        dim: usize,
        observables: Vec<HermitianMatrix>,
        targets: Vec<f64>,
    ) -> Result<Self> {
        if observables.len() != targets.len() {
            return Err(Error::DimensionMismatch {
                expected: observables.len(),
                got: targets.len(),
            });
        }
        let mut eye = Array2::<C64>::zeros((dim, dim));
        for i in 0..dim {
            eye[[i, i]] = C64::new(1.0, 0.0);
        }
        let mut all = vec![HermitianMatrix::new(eye)?];
        all.extend(observables);
        for o in &all {
            if o.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: o.dim(),
                });
            }
        }
        let mut all_targets = vec![1.0];
        all_targets.extend(targets);
        check_independent(&all)?;
        Ok(Self {
            dim,
            observables: all,
            targets: all_targets,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of constraints including the identity.
    pub fn count(&self) -> usize {
        self.observables.len()
    }

    pub fn observables(&self) -> &[HermitianMatrix] {
        &self.observables
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    /// The field operator `h = sum_alpha lambda_alpha O_alpha`.
    pub fn field(&self, lambda: &[f64]) -> Result<HermitianMatrix> {
        if lambda.len() != self.count() {
            return Err(Error::DimensionMismatch {
                expected: self.count(),
                got: lambda.len(),
            });
        }
        HermitianMatrix::linear_combination(lambda, &self.observables)
    }
}

fn check_independent(observables: &[HermitianMatrix]) -> Result<()> {
    let mc = observables.len();
    let mut norms = Vec::with_capacity(mc);
    for o in observables {
        let n2: f64 = o.matrix().iter().map(|z| z.norm_sqr()).sum();
        if n2 <= 0.0 {
            return Err(Error::DependentObservables { min_eig: 0.0 });
        }
        norms.push(n2.sqrt());
    }
    let mut gram = Array2::<C64>::zeros((mc, mc));
    for a in 0..mc {
        for b in 0..mc {
            let dot = crate::linalg::trace_product(
                &observables[a].matrix().view(),
                &observables[b].matrix().view(),
            );
            gram[[a, b]] = dot / C64::new(norms[a] * norms[b], 0.0);
        }
    }
    let (eigs, _) = HermitianMatrix::new(gram)?.eigh()?;
    let min_eig = eigs[eigs.len() - 1];
    if min_eig <= GRAM_MIN_EIG {
        return Err(Error::DependentObservables { min_eig });
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    /// Convergence threshold on `max_alpha |<O_alpha> - t_alpha|`.
    pub tol: f64,
    pub max_iter: usize,
    /// Baseline Levenberg damping added to the curvature matrix.
    pub ridge: f64,
    /// Print per-iteration progress to stderr.
    pub verbose: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 200,
            ridge: 1e-12,
            verbose: false,
        }
    }
}

/// One accepted (or failed) Newton iteration, for diagnostics.
#[derive(Clone, Copy, Debug)]
pub struct TraceRow {
    pub iteration: usize,
    pub residual: f64,
    pub value: f64,
    /// Line-search scale actually taken; 0 when no step was accepted.
    pub step: f64,
    /// Levenberg shift used for the step; 0 marks a steepest-descent
    /// fallback step.
    pub damping: f64,
}

/// Curvature of the dual at a multiplier vector.
#[derive(Clone, Debug)]
pub struct CurvatureData {
    /// `(m+1) x (m+1)` constraint-space curvature; symmetric PSD.
    pub a: Array2<f64>,
    /// `n x n` level curvature with entries `>= 0`: diagonal `-p'(h_i)`,
    /// off-diagonal divided differences `(p_j - p_i)/(h_i - h_j)`.
    pub c: Array2<f64>,
}

/// Converged output of [`solve`].
#[derive(Clone, Debug)]
pub struct MaxEntSolution {
    /// Multipliers; index 0 belongs to the identity.
    pub lambda: Vec<f64>,
    pub rho: DensityOperator,
    /// `sum_i [f(p_i) - p_i h_i]` at the optimum.
    pub dual_value: f64,
    /// `S_f` of the returned state.
    pub entropy: f64,
    /// `<O_alpha> - t_alpha` for every constraint including normalization.
    pub residuals: Vec<f64>,
    pub curvature: CurvatureData,
    /// Newton iterations taken; 0 when the start already satisfied the
    /// constraints.
    pub iterations: usize,
    pub trace: Vec<TraceRow>,
}

impl MaxEntSolution {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, r| m.max(r.abs()))
    }
}

/// Inverts the field relation: `rho = p(h)` spectrally, with exact zeros on
/// levels at or beyond a finite `f'(0+)`. The result keeps the eigenbasis of
/// `h` and is generally not unit trace; normalization belongs to the
/// multiplier on the identity.
pub fn density_from_field(
    h: &HermitianMatrix,
    functional: &EntropicFunctional,
) -> Result<DensityOperator> {
    let (field_eigs, basis) = h.eigh()?;
    check_field_domain(&field_eigs, functional)?;
    let occupations = field_eigs.mapv(|hi| functional.occupation_unchecked(hi));
    DensityOperator::from_spectrum_any_trace(occupations, basis)
}

fn check_field_domain(field_eigs: &Array1<f64>, functional: &EntropicFunctional) -> Result<()> {
    let lower = functional.slope_at_one();
    if lower.is_finite() {
        // eigenvalues arrive sorted descending
        let min = field_eigs[field_eigs.len() - 1];
        if min < lower - DOMAIN_SLACK {
            return Err(Error::FieldOutOfRange { h: min, lower });
        }
    }
    Ok(())
}

struct Evaluation {
    field_eigs: Array1<f64>,
    basis: Array2<C64>,
    occupations: Array1<f64>,
    sbar: f64,
    value: f64,
    gradient: Vec<f64>,
    residual: f64,
}

fn quad_form(o: &Array2<C64>, basis: &Array2<C64>, col: usize) -> f64 {
    let n = o.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for r in 0..n {
        let vr = basis[[r, col]].conj();
        for s in 0..n {
            acc += vr * o[[r, s]] * basis[[s, col]];
        }
    }
    acc.re
}

fn evaluate(
    lambda: &[f64],
    cs: &ConstraintSet,
    functional: &EntropicFunctional,
) -> Result<Evaluation> {
    let h = cs.field(lambda)?;
    let (field_eigs, basis) = h.eigh()?;
    check_field_domain(&field_eigs, functional)?;
    let occupations = field_eigs.mapv(|hi| functional.occupation_unchecked(hi));
    let n = cs.dim();
    let mut sbar = 0.0;
    for i in 0..n {
        let p = occupations[i];
        if p > 0.0 {
            sbar += functional.f(p) - p * field_eigs[i];
        }
    }
    let mut value = sbar;
    for (l, t) in lambda.iter().zip(cs.targets()) {
        value += l * t;
    }
    let gradient: Vec<f64> = cs
        .observables()
        .iter()
        .zip(cs.targets())
        .map(|(o, t)| {
            let mut e = 0.0;
            for i in 0..n {
                let p = occupations[i];
                if p > 0.0 {
                    e += p * quad_form(o.matrix(), &basis, i);
                }
            }
            t - e
        })
        .collect();
    let residual = gradient.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    Ok(Evaluation {
        field_eigs,
        basis,
        occupations,
        sbar,
        value,
        gradient,
        residual,
    })
}

/// Dual objective and its analytic gradient at a multiplier vector.
/// The gradient entries are `t_alpha - <O_alpha>`; they vanish at the
/// minimizer.
pub fn dual_objective(
    lambda: &[f64],
    cs: &ConstraintSet,
    functional: &EntropicFunctional,
) -> Result<(f64, Vec<f64>)> {
    let e = evaluate(lambda, cs, functional)?;
    Ok((e.value, e.gradient))
}

/// Curvature matrices of the dual at a multiplier vector.
pub fn curvature(
    lambda: &[f64],
    cs: &ConstraintSet,
    functional: &EntropicFunctional,
) -> Result<CurvatureData> {
    let e = evaluate(lambda, cs, functional)?;
    Ok(curvature_from_evaluation(&e, cs, functional))
}

fn curvature_from_evaluation(
    e: &Evaluation,
    cs: &ConstraintSet,
    functional: &EntropicFunctional,
) -> CurvatureData {
    let n = cs.dim();
    let mc = cs.count();
    // occupation response p'(h_i): 1/f''(p_i) on occupied levels, 0 beyond
    // the cutoff
    let pprime: Vec<f64> = (0..n)
        .map(|i| {
            let p = e.occupations[i];
            if p > 0.0 {
                1.0 / functional.d2f(p)
            } else {
                0.0
            }
        })
        .collect();
    let mut c = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        c[[i, i]] = -pprime[i];
        for j in i + 1..n {
            let gap = e.field_eigs[i] - e.field_eigs[j];
            let val = if gap.abs() < DEGENERATE_FIELD_GAP {
                -pprime[i]
            } else {
                (e.occupations[j] - e.occupations[i]) / gap
            };
            c[[i, j]] = val;
            c[[j, i]] = val;
        }
    }
    let vdag = adjoint(&e.basis.view());
    let ms: Vec<Array2<C64>> = cs
        .observables()
        .iter()
        .map(|o| vdag.dot(o.matrix()).dot(&e.basis))
        .collect();
    let mut a = Array2::<f64>::zeros((mc, mc));
    for al in 0..mc {
        for be in al..mc {
            let mut acc = 0.0;
            for i in 0..n {
                for j in 0..n {
                    acc += (ms[al][[i, j]] * ms[be][[i, j]].conj()).re * c[[i, j]];
                }
            }
            a[[al, be]] = acc;
            a[[be, al]] = acc;
        }
    }
    CurvatureData { a, c }
}

fn cholesky_solve(a: &Array2<f64>, rhs: &[f64]) -> Option<Vec<f64>> {
    let n = rhs.len();
    let mut l = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[[i, j]];
            for k in 0..j {
                sum -= l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return None;
                }
                l[[i, i]] = sum.sqrt();
            } else {
                l[[i, j]] = sum / l[[j, j]];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut sum = rhs[i];
        for k in 0..i {
            sum -= l[[i, k]] * y[k];
        }
        y[i] = sum / l[[i, i]];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in i + 1..n {
            sum -= l[[k, i]] * x[k];
        }
        x[i] = sum / l[[i, i]];
    }
    Some(x)
}

/// Minimize the dual and return the inferred state with its diagnostics.
///
/// Starts from `lambda = (f'(1/n), 0, ..., 0)`, which reproduces the
/// maximally mixed state and is always inside the field domain. Steps that
/// would push a field eigenvalue below `f'(1)` are shortened; when neither
/// the value nor the residual can be improved for [`STALL_LIMIT`]
/// consecutive iterations the targets are reported as infeasible.
pub fn solve(
    cs: &ConstraintSet,
    functional: &EntropicFunctional,
    opts: &SolverOptions,
) -> Result<MaxEntSolution> {
    let n = cs.dim();
    let mc = cs.count();
    let mut lambda = vec![0.0; mc];
    lambda[0] = functional.df(1.0 / n as f64);
    let mut current = evaluate(&lambda, cs, functional)?;
    let mut trace = Vec::new();
    let mut stall = 0usize;
    let mut iterations = 0usize;

    while current.residual > opts.tol {
        if iterations >= opts.max_iter {
            return Err(Error::MaxIterations {
                iters: iterations,
                residual: current.residual,
            });
        }
        iterations += 1;
        let curv = curvature_from_evaluation(&current, cs, functional);
        let neg_grad: Vec<f64> = current.gradient.iter().map(|g| -g).collect();

        // Acceptance cascade, strictly ordered so no two channels can
        // alternate in a cycle:
        //   1. damped Newton step that strictly decreases the value;
        //   2. steepest descent when every Newton direction is crippled
        //      (near an occupation cutoff the level curvature 1/|f''| blows
        //      up and the Newton step collapses in that direction);
        //   3. a residual-contracting step whose value change is below
        //      float resolution, to polish the terminal phase.
        let mut mu = opts.ridge;
        let mut accepted: Option<(Vec<f64>, Evaluation, f64, f64)> = None;
        let mut polish: Option<(Vec<f64>, Evaluation, f64, f64)> = None;
        let flat_band = STALL_VALUE_TOL * (1.0 + current.value.abs());
        'damping: for _ in 0..DAMPING_ESCALATIONS {
            let mut reg = curv.a.clone();
            for d in 0..mc {
                reg[[d, d]] += mu;
            }
            if let Some(delta) = cholesky_solve(&reg, &neg_grad) {
                let mut step = 1.0f64;
                for _ in 0..LINE_SEARCH_HALVINGS {
                    let cand: Vec<f64> = lambda
                        .iter()
                        .zip(&delta)
                        .map(|(l, d)| l + step * d)
                        .collect();
                    match evaluate(&cand, cs, functional) {
                        Err(Error::FieldOutOfRange { .. }) => {
                            step *= 0.5;
                        }
                        Err(other) => return Err(other),
                        Ok(e) => {
                            if e.value < current.value {
                                accepted = Some((cand, e, step, mu));
                                break 'damping;
                            }
                            if polish.is_none()
                                && e.residual < RESIDUAL_CONTRACTION * current.residual
                                && e.value - current.value <= flat_band
                            {
                                polish = Some((cand, e, step, mu));
                            }
                            step *= 0.5;
                        }
                    }
                }
            }
            mu = (mu * 100.0).max(1e-10);
        }
        if accepted.is_none() {
            let mut step = 1.0f64;
            for _ in 0..LINE_SEARCH_HALVINGS {
                let cand: Vec<f64> = lambda
                    .iter()
                    .zip(&neg_grad)
                    .map(|(l, g)| l + step * g)
                    .collect();
                match evaluate(&cand, cs, functional) {
                    Err(Error::FieldOutOfRange { .. }) => step *= 0.5,
                    Err(other) => return Err(other),
                    Ok(e) => {
                        if e.value < current.value {
                            accepted = Some((cand, e, step, 0.0));
                            break;
                        }
                        step *= 0.5;
                    }
                }
            }
        }
        if accepted.is_none() {
            accepted = polish;
        }
        match accepted {
            Some((next_lambda, next_eval, step, damping)) => {
                let dv = (next_eval.value - current.value).abs();
                let stalled = dv < STALL_VALUE_TOL * (1.0 + current.value.abs())
                    && next_eval.residual > opts.tol;
                stall = if stalled { stall + 1 } else { 0 };
                lambda = next_lambda;
                current = next_eval;
                trace.push(TraceRow {
                    iteration: iterations,
                    residual: current.residual,
                    value: current.value,
                    step,
                    damping,
                });
            }
            None => {
                stall += 1;
                trace.push(TraceRow {
                    iteration: iterations,
                    residual: current.residual,
                    value: current.value,
                    step: 0.0,
                    damping: mu,
                });
            }
        }
        if opts.verbose {
            let row = trace.last().unwrap();
            eprintln!(
                "iter {:3}  residual {:.3e}  value {:+.12e}  step {:.4}  damping {:.1e}",
                row.iteration, row.residual, row.value, row.step, row.damping
            );
        }
        if stall >= STALL_LIMIT {
            return Err(Error::Infeasible {
                residual: current.residual,
            });
        }
    }

    let curv = curvature_from_evaluation(&current, cs, functional);
    let total: f64 = current.occupations.sum();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::Infeasible {
            residual: current.residual,
        });
    }
    let spectrum = current.occupations.mapv(|p| p / total);
    let rho = DensityOperator::from_spectrum(spectrum, current.basis.clone())?;
    let entropy = rho.entropy(functional);
    let residuals: Vec<f64> = current.gradient.iter().map(|g| -g).collect();
    Ok(MaxEntSolution {
        lambda,
        rho,
        dual_value: current.sbar,
        entropy,
        residuals,
        curvature: curv,
        iterations,
        trace,
    })
}

/// `-A^{-1}`: the Hessian of the achieved entropy with respect to the
/// constraint targets. Adds a small ridge when `A` is singular; errors only
/// if it stays singular after regularization.
pub fn primal_sensitivities(solution: &MaxEntSolution) -> Result<Array2<f64>> {
    let a = &solution.curvature.a;
    if let Some(inv) = invert_spd(a) {
        return Ok(inv.mapv(|x| -x));
    }
    let mc = a.nrows();
    let scale = (0..mc).fold(0.0f64, |m, d| m.max(a[[d, d]].abs()));
    let mut reg = a.clone();
    for d in 0..mc {
        reg[[d, d]] += SENSITIVITY_RIDGE * (1.0 + scale);
    }
    match invert_spd(&reg) {
        Some(inv) => Ok(inv.mapv(|x| -x)),
        None => Err(Error::SingularCurvature),
    }
}

fn invert_spd(a: &Array2<f64>) -> Option<Array2<f64>> {
    let n = a.nrows();
    let mut out = Array2::<f64>::zeros((n, n));
    for col in 0..n {
        let mut e = vec![0.0; n];
        e[col] = 1.0;
        let x = cholesky_solve(a, &e)?;
        for row in 0..n {
            out[[row, col]] = x[row];
        }
    }
    Some(out)
}
