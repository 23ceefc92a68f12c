//! Two-qubit Bell-diagonal maximum-entropy inference.
//!
//! With the mean value of the CHSH-type observable `B` as the only
//! constraint besides normalization, the inferred state is diagonal in the
//! Bell basis and the whole problem collapses to one scalar equation for
//! the weight `p_plus` of `|Phi+>`:
//!
//! ```text
//! f'(p_plus) + f'(p_plus - b) - 2 f'((1+b)/2 - p_plus) = 0
//! ```
//!
//! on `(b, (1+b)/2)`. The left side is strictly decreasing, so a bracketed
//! bisection is exact and safe. Beyond a critical field `b_c` (for
//! functionals with finite slope at the origin) the `|Psi->` level empties
//! and the solution switches to the closed cutoff form `(b, 0, (1-b)/2)`.
//!
//! For the Tsallis and exponential families the stationarity sign is
//! evaluated in the log domain: at large `|q|` the power/exponential terms
//! sit hundreds of orders of magnitude below the constant part of `f'` and
//! a direct sum of slopes rounds to zero across the entire bracket.

use ndarray::{Array1, Array2};

use crate::functional::{EntropicFunctional, SlopeAtZero};
use crate::linalg::{C64, DensityOperator, HermitianMatrix};
use crate::root;
use crate::solver::{self, ConstraintSet, SolverOptions};
use crate::{Error, Result};

/// Bracket shrink applied before root evaluation so the stationarity sign
/// never sees an exact endpoint where `f'` can diverge.
const BRACKET_SHRINK: f64 = 1e-14;
/// Bisection tolerance on `p_plus`.
const P_PLUS_TOL: f64 = 1e-14;
/// Bisection tolerance on critical fields.
const CRITICAL_B_TOL: f64 = 1e-12;
/// Bisection tolerance on the fake-entanglement onset.
const ONSET_TOL: f64 = 1e-10;
/// Largest-eigenvalue guard: entangled only when `2 p_M - 1` clears this.
const ENTANGLEMENT_GUARD: f64 = 2e-12;
/// Closure tolerance for Bell-diagonal weight vectors.
const CLOSURE_TOL: f64 = 1e-12;
/// Below this `|q|` the exponential critical-field closed form loses
/// precision to cancellation and the generic root is used instead.
const EXPONENTIAL_CLOSED_FORM_MIN_Q: f64 = 1e-3;

/// Weights of a state diagonal in the Bell basis: `p_plus` on `|Phi+>`,
/// `p_minus` on `|Psi->`, and `p_zero` on each of `|Psi+>` and `|Phi->`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BellDiagonalState {
    pub p_plus: f64,
    pub p_minus: f64,
    pub p_zero: f64,
}

impl BellDiagonalState {
    pub fn new(p_plus: f64, p_minus: f64, p_zero: f64) -> Result<Self> {
        let mut w = [p_plus, p_minus, p_zero];
        for x in &mut w {
            if *x < -CLOSURE_TOL {
                return Err(Error::NegativeEigenvalue { value: *x });
            }
            if *x < 0.0 {
                *x = 0.0;
            }
        }
        let total = w[0] + w[1] + 2.0 * w[2];
        if (total - 1.0).abs() > CLOSURE_TOL {
            return Err(Error::TraceNotOne { trace: total });
        }
        Ok(Self {
            p_plus: w[0],
            p_minus: w[1],
            p_zero: w[2],
        })
    }

    /// Spectrum in the order `Phi+, Psi-, Psi+, Phi-`.
    pub fn probabilities(&self) -> [f64; 4] {
        [self.p_plus, self.p_minus, self.p_zero, self.p_zero]
    }

    pub fn largest(&self) -> f64 {
        self.p_plus.max(self.p_minus).max(self.p_zero)
    }

    /// Mean value of the CHSH observable in this state.
    pub fn b(&self) -> f64 {
        self.p_plus - self.p_minus
    }

    /// Mean value of its square.
    pub fn b2(&self) -> f64 {
        self.p_plus + self.p_minus
    }

    pub fn entropy(&self, functional: &EntropicFunctional) -> f64 {
        functional.f(self.p_plus) + functional.f(self.p_minus)
            + 2.0 * functional.f(self.p_zero)
    }

    /// The density operator in the product basis.
    pub fn density(&self) -> Result<DensityOperator> {
        let spectrum = Array1::from_vec(self.probabilities().to_vec());
        DensityOperator::from_spectrum(spectrum, bell_basis())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BellRegime {
    /// All four weights strictly positive; `p_plus` from the root equation.
    Interior,
    /// `|b| >= b_c`: the `|Psi->` weight is exactly zero.
    Cutoff,
}

/// Everything known about one Bell-diagonal inference.
#[derive(Clone, Debug)]
pub struct BellReport {
    pub state: BellDiagonalState,
    pub b: f64,
    pub b_c: f64,
    pub regime: BellRegime,
    pub largest_eigenvalue: f64,
    pub concurrence: f64,
    pub entangled: bool,
    /// Entangled inferred state from a separably-attainable `|b| < 1/2`.
    pub fake: bool,
    /// Multiplier on the identity, `f'(p_zero)`.
    pub lambda_0: f64,
    /// Multiplier on the observable; equals the entropy derivative with
    /// respect to the target `b`.
    pub lambda_1: f64,
    /// Family-specific `q` above which fake entanglement cannot occur;
    /// only set by the weighted-observable path.
    pub q_threshold: Option<f64>,
}

/// Bell basis as columns in the product-basis ordering
/// `(up-up, up-down, down-up, down-down)`; column order `Phi+, Psi-, Psi+,
/// Phi-`, aligned with the spectrum of [`chsh_observable`].
pub fn bell_basis() -> Array2<C64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut m = Array2::<C64>::zeros((4, 4));
    // |Phi+> = (|uu> + |dd>)/sqrt2
    m[[0, 0]] = C64::new(s, 0.0);
    m[[3, 0]] = C64::new(s, 0.0);
    // |Psi-> = (|ud> - |du>)/sqrt2
    m[[1, 1]] = C64::new(s, 0.0);
    m[[2, 1]] = C64::new(-s, 0.0);
    // |Psi+> = (|ud> + |du>)/sqrt2
    m[[1, 2]] = C64::new(s, 0.0);
    m[[2, 2]] = C64::new(s, 0.0);
    // |Phi-> = (|uu> - |dd>)/sqrt2
    m[[0, 3]] = C64::new(s, 0.0);
    m[[3, 3]] = C64::new(-s, 0.0);
    m
}

fn bell_projector(col: usize) -> Array2<C64> {
    let basis = bell_basis();
    let mut p = Array2::<C64>::zeros((4, 4));
    for i in 0..4 {
        for j in 0..4 {
            p[[i, j]] = basis[[i, col]] * basis[[j, col]].conj();
        }
    }
    p
}

/// The scaled CHSH observable `B = |Phi+><Phi+| - |Psi-><Psi-|`, with
/// eigenvalues `{1, -1, 0, 0}`.
pub fn chsh_observable() -> HermitianMatrix {
    let m = bell_projector(0) - bell_projector(1);
    HermitianMatrix::new(m).expect("projector difference is Hermitian")
}

/// The weighted observable `B_alpha = |Phi+><Phi+| - alpha |Psi-><Psi-|`.
pub fn chsh_alpha(alpha: f64) -> Result<HermitianMatrix> {
    if alpha < 0.0 || !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "alpha must be finite and >= 0, got {alpha}"
        )));
    }
    let m = bell_projector(0) - bell_projector(1).mapv(|z| z * alpha);
    HermitianMatrix::new(m)
}

fn logsumexp2(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Sign-faithful evaluation of `alpha f'(x) + f'(z) - (1+alpha) f'(y)`.
///
/// For Tsallis `q > 1` and the exponential family the constant part of `f'`
/// cancels algebraically and the remaining terms are compared in the log
/// domain, which keeps the sign correct even when the terms underflow a
/// direct sum (large `|q|`). Other families evaluate the slopes directly.
fn weighted_balance_sign(
    functional: &EntropicFunctional,
    alpha: f64,
    x: f64,
    z: f64,
    y: f64,
) -> f64 {
    use crate::functional::Family;
    match functional.family() {
        Family::Tsallis { q, .. } if q > 1.0 => {
            let e = q - 1.0;
            let ly = (1.0 + alpha).ln() + e * y.ln();
            let lx = alpha.ln() + e * x.ln();
            let lz = e * z.ln();
            ly - logsumexp2(lx, lz)
        }
        Family::Exponential { q, .. } => {
            let ly = (1.0 + alpha).ln() + q * y;
            let lx = alpha.ln() + q * x;
            let lz = q * z;
            let v = ly - logsumexp2(lx, lz);
            if q > 0.0 {
                v
            } else {
                -v
            }
        }
        _ => alpha * functional.df(x) + functional.df(z) - (1.0 + alpha) * functional.df(y),
    }
}

/// Closed forms quoted against the generic machinery in tests and used as
/// fast paths where they are exact.
pub mod closed_form {
    /// `p_plus = (1+b)^2 / 4` for the Shannon functional, `0 <= b <= 1`.
    pub fn shannon_p_plus(b: f64) -> f64 {
        0.25 * (1.0 + b) * (1.0 + b)
    }

    /// `p_plus = (1 + 2b)/4` below the cutoff for Tsallis `q = 2` (and for
    /// the quadratic functional, which is the same curve).
    pub fn tsallis_q2_p_plus(b: f64) -> f64 {
        0.25 * (1.0 + 2.0 * b)
    }

    /// `ln cosh` without overflow for large arguments.
    pub fn ln_cosh(x: f64) -> f64 {
        let a = x.abs();
        a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
    }

    /// Interior `p_plus` for the exponential family:
    /// `(1 + 2b)/4 - ln cosh(b q / 2) / (2q)`.
    pub fn exponential_p_plus(q: f64, b: f64) -> f64 {
        if q == 0.0 {
            return tsallis_q2_p_plus(b);
        }
        0.25 * (1.0 + 2.0 * b) - ln_cosh(0.5 * b * q) / (2.0 * q)
    }

    /// `b_c = 1 / (1 + 2^{1 - 1/(q-1)})` for Tsallis `q > 1`.
    pub fn tsallis_critical_b(q: f64) -> f64 {
        1.0 / (1.0 + 2.0f64.powf(1.0 - 1.0 / (q - 1.0)))
    }

    /// Critical field for the exponential family from the depressed cubic
    /// `s^3 + e^{-q/3} s - 2 = 0`: `b_c = 1/3 + (2/q) ln s`. Loses accuracy
    /// to cancellation below `|q| ~ 1e-3` (the limit value is 1/2) and
    /// switches to an asymptote once `e^{-q}` would overflow.
    pub fn exponential_critical_b(q: f64) -> f64 {
        if q == 0.0 {
            return 0.5;
        }
        if q <= -600.0 {
            return 1.0 + 2.0 * std::f64::consts::LN_2 / q;
        }
        let t = (-q / 3.0).exp();
        let t3 = (-q).exp();
        let beta = (1.0 + (1.0 + t3 / 27.0).sqrt()).cbrt();
        let s = beta - t / (3.0 * beta);
        1.0 / 3.0 + (2.0 / q) * s.ln()
    }
}

/// Field strength beyond which the `|Psi->` level empties. Returns 1 for
/// functionals with divergent slope at the origin; uses family closed forms
/// where available, the generic root otherwise.
pub fn critical_b(functional: &EntropicFunctional) -> f64 {
    use crate::functional::Family;
    match functional.family() {
        Family::Shannon { .. } => 1.0,
        Family::Tsallis { q, .. } if q > 1.0 => closed_form::tsallis_critical_b(q),
        Family::Tsallis { .. } => 1.0,
        Family::Exponential { q, .. } if q.abs() >= EXPONENTIAL_CLOSED_FORM_MIN_Q => {
            closed_form::exponential_critical_b(q)
        }
        Family::Exponential { .. } => critical_root(functional, 1.0),
        Family::Quadratic { .. } => 0.5,
        Family::Custom => critical_b_from_root(functional),
    }
}

/// Generic-root version of [`critical_b`]: bisection on
/// `f'(b) + f'(0) - 2 f'((1-b)/2)` over `[1/3, 1]`.
pub fn critical_b_from_root(functional: &EntropicFunctional) -> f64 {
    if functional.slope_at_zero() == SlopeAtZero::Divergent {
        return 1.0;
    }
    critical_root(functional, 1.0)
}

/// Critical field of the weighted problem: root of
/// `alpha f'(b) + f'(0) - (1+alpha) f'((1-b)/2)`.
pub fn critical_b_alpha(functional: &EntropicFunctional, alpha: f64) -> Result<f64> {
    if alpha < 0.0 || !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "alpha must be finite and >= 0, got {alpha}"
        )));
    }
    if functional.slope_at_zero() == SlopeAtZero::Divergent {
        return Ok(1.0);
    }
    if alpha == 1.0 {
        return Ok(critical_b(functional));
    }
    Ok(critical_root(functional, alpha))
}

fn critical_root(functional: &EntropicFunctional, alpha: f64) -> f64 {
    let g = |b: f64| weighted_balance_sign(functional, alpha, b, 0.0, 0.5 * (1.0 - b));
    root::bisect(1.0 / 3.0, 1.0, g, CRITICAL_B_TOL, 200).unwrap_or(1.0)
}

/// Interior/cutoff `p_plus` at field `b >= 0` given the critical field.
fn p_plus_at(functional: &EntropicFunctional, b: f64, b_c: f64) -> Result<(f64, BellRegime)> {
    if b >= b_c {
        return Ok((b, BellRegime::Cutoff));
    }
    let lo = b + BRACKET_SHRINK;
    let hi = 0.5 * (1.0 + b) - BRACKET_SHRINK;
    if lo >= hi {
        return Ok((b, BellRegime::Cutoff));
    }
    let g = |p: f64| weighted_balance_sign(functional, 1.0, p, p - b, 0.5 * (1.0 + b) - p);
    match root::bisect(lo, hi, g, P_PLUS_TOL, 200) {
        Ok(p) => Ok((p, BellRegime::Interior)),
        // float-thin bracket right at the regime boundary
        Err(Error::NoSignChange { .. }) => Ok((b, BellRegime::Cutoff)),
        Err(e) => Err(e),
    }
}

/// Infer the Bell-diagonal state with `Tr(rho B) = b`, `|b| <= 1`.
///
/// Negative `b` is solved at `|b|` and reported with the `Phi+`/`Psi-`
/// weights swapped and the observable multiplier negated, which is the
/// exact symmetry of the problem.
pub fn solve_bell(b: f64, functional: &EntropicFunctional) -> Result<BellReport> {
    if b.is_nan() || b.abs() > 1.0 {
        return Err(Error::InvalidParameter(format!(
            "b must lie in [-1, 1], got {b}"
        )));
    }
    let mag = b.abs();
    let b_c = critical_b(functional);
    let (p_plus, regime) = p_plus_at(functional, mag, b_c)?;
    let (p_plus, p_minus, p_zero) = match regime {
        BellRegime::Interior => (p_plus, p_plus - mag, 0.5 * (1.0 + mag) - p_plus),
        BellRegime::Cutoff => (mag, 0.0, 0.5 * (1.0 - mag)),
    };
    let lambda_0 = functional.df(p_zero);
    let lambda_1 = functional.df(p_plus) - lambda_0;
    let (p_plus, p_minus, lambda_1) = if b < 0.0 {
        (p_minus, p_plus, -lambda_1)
    } else {
        (p_plus, p_minus, lambda_1)
    };
    let state = BellDiagonalState::new(p_plus, p_minus, p_zero)?;
    finish_report(state, b, b_c, regime, lambda_0, lambda_1, None)
}

fn finish_report(
    state: BellDiagonalState,
    b: f64,
    b_c: f64,
    regime: BellRegime,
    lambda_0: f64,
    lambda_1: f64,
    q_threshold: Option<f64>,
) -> Result<BellReport> {
    let largest_eigenvalue = state.largest();
    let (entangled, concurrence) = separability(&state);
    let fake = entangled && b.abs() < 0.5;
    Ok(BellReport {
        state,
        b,
        b_c,
        regime,
        largest_eigenvalue,
        concurrence,
        entangled,
        fake,
        lambda_0,
        lambda_1,
        q_threshold,
    })
}

/// Entanglement decision and concurrence of a Bell-diagonal state:
/// entangled exactly when the largest weight clears 1/2 (with a small guard
/// against float flapping), in which case the concurrence is `2 p_M - 1`.
pub fn separability(state: &BellDiagonalState) -> (bool, f64) {
    let raw = 2.0 * state.largest() - 1.0;
    if raw > ENTANGLEMENT_GUARD {
        (true, raw)
    } else {
        (false, 0.0)
    }
}

/// The Bell-diagonal state compatible with `b` whose largest eigenvalue is
/// as small as possible: the entanglement-minimizing reference.
pub fn min_largest_eigenvalue_state(b: f64) -> Result<BellDiagonalState> {
    if !(0.0..=1.0).contains(&b) {
        return Err(Error::InvalidParameter(format!(
            "b must lie in [0, 1], got {b}"
        )));
    }
    if b <= 1.0 / 3.0 {
        BellDiagonalState::new(0.25 * (1.0 + b), 0.25 * (1.0 - 3.0 * b), 0.25 * (1.0 + b))
    } else {
        BellDiagonalState::new(b, 0.0, 0.5 * (1.0 - b))
    }
}

/// With both `<B> = b` and `<B^2> = b2` constrained the state is fixed by
/// the constraints alone, independently of the functional:
/// `p_pm = (b2 +- b)/2`, `p_zero = (1 - b2)/2`.
pub fn solve_with_dispersion(b: f64, b2: f64) -> Result<BellDiagonalState> {
    if !(b.abs() <= b2 && b2 <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "need |b| <= b2 <= 1, got b={b}, b2={b2}"
        )));
    }
    BellDiagonalState::new(0.5 * (b2 + b), 0.5 * (b2 - b), 0.5 * (1.0 - b2))
}

/// Quadratic small-field approximant
/// `p_plus ~ (1 + 2b + gamma b^2)/4`; a consistency oracle for
/// [`solve_bell`], accurate to `O(b^4)` for `|b| <= 0.1`.
pub fn small_b_expansion(functional: &EntropicFunctional, b: f64) -> f64 {
    0.25 * (1.0 + 2.0 * b + functional.gamma_coefficient() * b * b)
}

/// The interval of `b` values whose inferred state is entangled even though
/// `b < 1/2` is reachable by separable states; `None` when the functional
/// avoids the artifact entirely.
pub fn fake_entanglement_interval(
    functional: &EntropicFunctional,
) -> Result<Option<(f64, f64)>> {
    let b_c = critical_b(functional);
    let at_half = p_plus_at(functional, 0.5, b_c)?.0;
    if at_half <= 0.5 + ENTANGLEMENT_GUARD {
        return Ok(None);
    }
    let g = |b: f64| match p_plus_at(functional, b, b_c) {
        Ok((p, _)) => p - 0.5,
        Err(_) => f64::NAN,
    };
    let onset = root::bisect(0.0, 0.5, g, ONSET_TOL, 200)?;
    if onset >= 0.5 - 1e-9 {
        return Ok(None);
    }
    Ok(Some((onset, 0.5)))
}

fn family_q_threshold(functional: &EntropicFunctional, alpha: f64) -> Option<f64> {
    use crate::functional::Family;
    if alpha <= 0.0 {
        return None;
    }
    match functional.family() {
        Family::Tsallis { .. } => Some(1.0 + (1.0 + 1.0 / alpha).log2()),
        Family::Exponential { .. } => Some(-4.0 * alpha.ln()),
        _ => None,
    }
}

/// Inference constrained by the weighted observable `B_alpha`; runs through
/// the general dual solver and reads the weights back in the Bell basis.
/// `alpha = 1` reproduces [`solve_bell`]; `alpha = 0` yields Werner states
/// `(b, (1-b)/3, (1-b)/3)` for every functional.
pub fn solve_bell_alpha(
    b: f64,
    alpha: f64,
    functional: &EntropicFunctional,
) -> Result<BellReport> {
    if !(0.0..=1.0).contains(&b) {
        return Err(Error::InvalidParameter(format!(
            "b must lie in [0, 1], got {b}"
        )));
    }
    let observable = chsh_alpha(alpha)?;
    let cs = ConstraintSet::new(4, vec![observable], vec![b])?;
    let sol = solver::solve(&cs, functional, &SolverOptions::default())?;
    let basis = bell_basis();
    let mut diag = [0.0f64; 4];
    for (col, d) in diag.iter_mut().enumerate() {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..4 {
            for j in 0..4 {
                acc += basis[[i, col]].conj() * sol.rho.matrix()[[i, j]] * basis[[j, col]];
            }
        }
        *d = acc.re;
    }
    let state = BellDiagonalState::new(diag[0], diag[1], 0.5 * (diag[2] + diag[3]))?;
    let b_c = critical_b_alpha(functional, alpha)?;
    let regime = if b >= b_c {
        BellRegime::Cutoff
    } else {
        BellRegime::Interior
    };
    finish_report(
        state,
        b,
        b_c,
        regime,
        sol.lambda[0],
        sol.lambda[1],
        family_q_threshold(functional, alpha),
    )
}
