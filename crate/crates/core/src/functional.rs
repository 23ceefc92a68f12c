//! Trace-form entropy functionals and their scalar calculus.
//!
//! An entropic functional is a strictly concave `f: [0,1] -> R` with
//! `f(0) = f(1) = 0`; the associated entropy of a density operator is
//! `S_f = Tr f(rho)`. Everything the rest of the crate needs is derived from
//! five scalar maps (`f`, `f'`, `f''`, `f'''`, and the inverse of `f'`)
//! plus the boundary slopes `f'(0+)` and `f'(1)`.
//!
//! `f'(0+)` decides whether maximum-entropy states can have empty levels:
//! a finite value acts as a cutoff (field values at or above it carry zero
//! occupation), a divergent one keeps every occupation strictly positive.

use std::fmt;
use std::sync::Arc;

use crate::root;
use crate::{Error, Result};

/// Shared scalar map; cheap to clone, safe to send across threads.
pub type ScalarMap = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Number of interior samples used to vet concavity at construction.
const CONCAVITY_SAMPLES: usize = 1000;
/// |f(0)|, |f(1)| must be below this at construction.
const ENDPOINT_TOL: f64 = 1e-12;
/// Band around zero inside which the additivity indicator counts as zero.
const ADDITIVITY_TOL: f64 = 1e-10;
/// Bracket tolerance for a synthesized inverse of f'.
const INVERSE_BISECT_TOL: f64 = 1e-13;

/// The slope of `f` at the origin, kept as a distinguished value so cutoff
/// logic can branch on finiteness instead of comparing against huge floats.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SlopeAtZero {
    Finite(f64),
    Divergent,
}

impl SlopeAtZero {
    pub fn finite(self) -> Option<f64> {
        match self {
            SlopeAtZero::Finite(c) => Some(c),
            SlopeAtZero::Divergent => None,
        }
    }

    /// True when `h` sits at or above a finite slope ceiling, i.e. the level
    /// gets zero occupation.
    pub fn caps(self, h: f64) -> bool {
        matches!(self, SlopeAtZero::Finite(c) if h >= c)
    }
}

/// Which analytic family a functional belongs to. Closed-form shortcuts key
/// off this; `Custom` always takes the generic numeric paths.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Family {
    Shannon { k: f64 },
    Tsallis { k: f64, q: f64 },
    Exponential { k: f64, q: f64 },
    /// `f(p) = k p(1-p)/2`, the exponential family's q -> 0 limit.
    Quadratic { k: f64 },
    Custom,
}

/// How `S_f` composes over uncorrelated subsystems.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdditivityClass {
    Additive,
    SubAdditive,
    SuperAdditive,
    Indeterminate,
}

/// A validated trace-form entropy functional.
#[derive(Clone)]
pub struct EntropicFunctional {
    name: String,
    family: Family,
    f: ScalarMap,
    df: ScalarMap,
    d2f: ScalarMap,
    d3f: ScalarMap,
    /// Raw inverse of f'; range guards live in [`Self::inverse_df`].
    inv: ScalarMap,
    slope_at_zero: SlopeAtZero,
    slope_at_one: f64,
}

/// Ingredients for [`EntropicFunctional::custom`].
pub struct CustomSpec {
    pub name: String,
    pub f: ScalarMap,
    pub df: ScalarMap,
    pub d2f: ScalarMap,
    pub d3f: ScalarMap,
    /// Inverse of `df`; synthesized by bisection when absent.
    pub inverse_df: Option<ScalarMap>,
    pub slope_at_zero: SlopeAtZero,
}

impl EntropicFunctional {
    /// `f(p) = -k p ln p`.
    pub fn shannon(k: f64) -> Result<Self> {
        check_scale(k)?;
        let parts = Self {
            name: named("shannon", None, k),
            family: Family::Shannon { k },
            f: Arc::new(move |p| if p <= 0.0 { 0.0 } else { -k * p * p.ln() }),
            df: Arc::new(move |p| -k * (p.ln() + 1.0)),
            d2f: Arc::new(move |p| -k / p),
            d3f: Arc::new(move |p| k / (p * p)),
            inv: Arc::new(move |h| (-(h / k + 1.0)).exp()),
            slope_at_zero: SlopeAtZero::Divergent,
            slope_at_one: -k,
        };
        parts.validated()
    }

    /// `f(p) = k (p - p^q)/(q - 1)` for `q > 0`; `q = 1` dispatches to the
    /// Shannon limit exactly.
    pub fn tsallis(q: f64, k: f64) -> Result<Self> {
        check_scale(k)?;
        if !q.is_finite() || q <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "tsallis requires finite q > 0, got {q}"
            )));
        }
        if q == 1.0 {
            return Self::shannon(k);
        }
        let parts = Self {
            name: named("tsallis", Some(q), k),
            family: Family::Tsallis { k, q },
            // p - p^q = -p expm1((q-1) ln p), stable down to q ~ 1
            f: Arc::new(move |p| {
                if p <= 0.0 {
                    0.0
                } else {
                    -k * p * ((q - 1.0) * p.ln()).exp_m1() / (q - 1.0)
                }
            }),
            df: Arc::new(move |p| {
                let e = ((q - 1.0) * p.ln()).exp_m1();
                -k * (1.0 + q * e / (q - 1.0))
            }),
            d2f: Arc::new(move |p| -k * q * p.powf(q - 2.0)),
            d3f: Arc::new(move |p| -k * q * (q - 2.0) * p.powf(q - 3.0)),
            inv: Arc::new(move |h| {
                // [(1 - (q-1)h/k)/q]^{1/(q-1)} via ln_1p for accuracy near q=1
                let x = -(q - 1.0) * (1.0 + h / k) / q;
                if x <= -1.0 {
                    0.0
                } else {
                    (x.ln_1p() / (q - 1.0)).exp()
                }
            }),
            slope_at_zero: if q > 1.0 {
                SlopeAtZero::Finite(k / (q - 1.0))
            } else {
                SlopeAtZero::Divergent
            },
            slope_at_one: -k,
        };
        parts.validated()
    }

    /// `f(p) = k/q [p - (e^{qp}-1)/(e^q-1)]`; `q = 0` dispatches to the
    /// quadratic limit `k p(1-p)/2`. Concave for every `q`.
    ///
    /// For `q > 0` all exponentials are evaluated through `e^{q(p-1)}` and
    /// `expm1(-q)` so that large `q` neither overflows nor loses the tail.
    pub fn exponential(q: f64, k: f64) -> Result<Self> {
        check_scale(k)?;
        if !q.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "exponential requires finite q, got {q}"
            )));
        }
        if q == 0.0 {
            let parts = Self {
                name: named("exponential", Some(0.0), k),
                family: Family::Quadratic { k },
                f: Arc::new(move |p| 0.5 * k * p * (1.0 - p)),
                df: Arc::new(move |p| k * (0.5 - p)),
                d2f: Arc::new(move |_| -k),
                d3f: Arc::new(move |_| 0.0),
                inv: Arc::new(move |h| 0.5 - h / k),
                slope_at_zero: SlopeAtZero::Finite(0.5 * k),
                slope_at_one: -0.5 * k,
            };
            return parts.validated();
        }
        let parts = if q > 0.0 {
            let en = -(-q).exp_m1(); // 1 - e^{-q} in (0, 1]
            Self {
                name: named("exponential", Some(q), k),
                family: Family::Exponential { k, q },
                f: Arc::new(move |p| {
                    let ratio = (q * (p - 1.0)).exp() * (-q * p).exp_m1() / -en;
                    (k / q) * (p - ratio)
                }),
                df: Arc::new(move |p| k * (1.0 / q - (q * (p - 1.0)).exp() / en)),
                d2f: Arc::new(move |p| -k * q * (q * (p - 1.0)).exp() / en),
                d3f: Arc::new(move |p| -k * q * q * (q * (p - 1.0)).exp() / en),
                inv: Arc::new(move |h| {
                    let t = 1.0 / q - h / k;
                    if t <= 0.0 {
                        0.0
                    } else {
                        (q + en.ln() + t.ln()) / q
                    }
                }),
                slope_at_zero: SlopeAtZero::Finite(k * (1.0 / q - 1.0 / q.exp_m1())),
                slope_at_one: k * (1.0 / q - 1.0 / en),
            }
        } else {
            let em = q.exp_m1(); // e^q - 1 in (-1, 0)
            Self {
                name: named("exponential", Some(q), k),
                family: Family::Exponential { k, q },
                f: Arc::new(move |p| (k / q) * (p - (q * p).exp_m1() / em)),
                df: Arc::new(move |p| k * (1.0 / q - (q * p).exp() / em)),
                d2f: Arc::new(move |p| -k * q * (q * p).exp() / em),
                d3f: Arc::new(move |p| -k * q * q * (q * p).exp() / em),
                inv: Arc::new(move |h| {
                    let a = em * (1.0 / q - h / k);
                    if a <= 0.0 {
                        0.0
                    } else {
                        a.ln() / q
                    }
                }),
                slope_at_zero: SlopeAtZero::Finite(k * (1.0 / q - 1.0 / em)),
                slope_at_one: k * (1.0 / q - q.exp() / em),
            }
        };
        parts.validated()
    }

    /// Build a functional from user-supplied maps. The inverse of `f'` is
    /// synthesized by bisection over `[0, 1]` when not provided.
    pub fn custom(spec: CustomSpec) -> Result<Self> {
        let slope_at_one = (spec.df)(1.0);
        let inv = spec.inverse_df.unwrap_or_else(|| {
            let df = spec.df.clone();
            Arc::new(move |h| {
                match root::bisect(0.0, 1.0, |p| df(p) - h, INVERSE_BISECT_TOL, 200) {
                    Ok(p) => p,
                    // h outside the slope range; pick the saturated end
                    Err(_) => {
                        if df(0.5) < h {
                            0.0
                        } else {
                            1.0
                        }
                    }
                }
            })
        });
        let parts = Self {
            name: spec.name,
            family: Family::Custom,
            f: spec.f,
            df: spec.df,
            d2f: spec.d2f,
            d3f: spec.d3f,
            inv,
            slope_at_zero: spec.slope_at_zero,
            slope_at_one,
        };
        parts.validated()
    }

    /// Parse `"shannon"`, `"tsallis:q=2"`, `"exponential:q=-4,k=0.5"`, ...
    pub fn parse(spec: &str) -> Result<Self> {
        let s = spec.trim();
        let (head, rest) = match s.split_once(':') {
            Some((h, r)) => (h, Some(r)),
            None => (s, None),
        };
        let mut q = None;
        let mut k = None;
        if let Some(rest) = rest {
            for item in rest.split(',') {
                let (key, val) = item.split_once('=').ok_or_else(|| Error::FunctionalParse {
                    spec: spec.to_owned(),
                    detail: format!("expected key=value, got {item:?}"),
                })?;
                let v: f64 = val.trim().parse().map_err(|_| Error::FunctionalParse {
                    spec: spec.to_owned(),
                    detail: format!("bad number {:?} for {}", val.trim(), key.trim()),
                })?;
                match key.trim() {
                    "q" => q = Some(v),
                    "k" => k = Some(v),
                    other => {
                        return Err(Error::FunctionalParse {
                            spec: spec.to_owned(),
                            detail: format!("unknown key {other:?}"),
                        })
                    }
                }
            }
        }
        let k = k.unwrap_or(1.0);
        match head {
            "shannon" => {
                if q.is_some() {
                    return Err(Error::FunctionalParse {
                        spec: spec.to_owned(),
                        detail: "shannon takes no q parameter".into(),
                    });
                }
                Self::shannon(k)
            }
            "tsallis" => {
                let q = q.ok_or_else(|| Error::FunctionalParse {
                    spec: spec.to_owned(),
                    detail: "tsallis requires q".into(),
                })?;
                Self::tsallis(q, k)
            }
            "exponential" => {
                let q = q.ok_or_else(|| Error::FunctionalParse {
                    spec: spec.to_owned(),
                    detail: "exponential requires q".into(),
                })?;
                Self::exponential(q, k)
            }
            "quadratic" => {
                if q.is_some() {
                    return Err(Error::FunctionalParse {
                        spec: spec.to_owned(),
                        detail: "quadratic takes no q parameter".into(),
                    });
                }
                Self::exponential(0.0, k)
            }
            other => Err(Error::FunctionalParse {
                spec: spec.to_owned(),
                detail: format!("unknown family {other:?}"),
            }),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn f(&self, p: f64) -> f64 {
        (self.f)(p)
    }

    pub fn df(&self, p: f64) -> f64 {
        (self.df)(p)
    }

    pub fn d2f(&self, p: f64) -> f64 {
        (self.d2f)(p)
    }

    pub fn d3f(&self, p: f64) -> f64 {
        (self.d3f)(p)
    }

    pub fn slope_at_zero(&self) -> SlopeAtZero {
        self.slope_at_zero
    }

    pub fn slope_at_one(&self) -> f64 {
        self.slope_at_one
    }

    /// Occupation solving `f'(p) = h`: zero at or above a finite `f'(0+)`,
    /// an error below `f'(1)` (which would require p > 1).
    pub fn inverse_df(&self, h: f64) -> Result<f64> {
        if h.is_nan() {
            return Err(Error::InvalidParameter("field value is NaN".into()));
        }
        if h < self.slope_at_one {
            return Err(Error::FieldOutOfRange {
                h,
                lower: self.slope_at_one,
            });
        }
        Ok(self.occupation_unchecked(h))
    }

    /// Same as [`Self::inverse_df`] but saturating below `f'(1)` instead of
    /// erroring; only for callers that have already vetted the range.
    pub(crate) fn occupation_unchecked(&self, h: f64) -> f64 {
        if self.slope_at_zero.caps(h) {
            return 0.0;
        }
        (self.inv)(h).clamp(0.0, 1.0)
    }

    /// The reflected functional `p -> f(1 - p)`.
    pub fn mirror(&self) -> Self {
        let (f0, df0, d2f0, d3f0) = (
            self.f.clone(),
            self.df.clone(),
            self.d2f.clone(),
            self.d3f.clone(),
        );
        let inner_inv = self.inv.clone();
        let inner_s0 = self.slope_at_zero;
        let slope_at_zero = if self.slope_at_one == f64::NEG_INFINITY {
            SlopeAtZero::Divergent
        } else {
            SlopeAtZero::Finite(-self.slope_at_one)
        };
        let slope_at_one = match self.slope_at_zero {
            SlopeAtZero::Finite(c) => -c,
            SlopeAtZero::Divergent => f64::NEG_INFINITY,
        };
        Self {
            name: format!("mirror({})", self.name),
            family: Family::Custom,
            f: Arc::new(move |p| f0(1.0 - p)),
            df: Arc::new(move |p| -df0(1.0 - p)),
            d2f: Arc::new(move |p| d2f0(1.0 - p)),
            d3f: Arc::new(move |p| -d3f0(1.0 - p)),
            inv: Arc::new(move |h| {
                let hh = -h;
                let p = if inner_s0.caps(hh) {
                    0.0
                } else {
                    inner_inv(hh).clamp(0.0, 1.0)
                };
                1.0 - p
            }),
            slope_at_zero,
            slope_at_one,
        }
    }

    /// Quadratic response coefficient `-f'''(1/4) / (4 f''(1/4))`; controls
    /// the curvature of the Bell-diagonal solution near zero field.
    pub fn gamma_coefficient(&self) -> f64 {
        -0.25 * self.d3f(0.25) / self.d2f(0.25)
    }

    /// Classify how `S_f` composes over product states by sampling the sign
    /// of `(p f''(p))' = f''(p) + p f'''(p)` on an interior grid.
    ///
    /// Panics if `grid_size < 100`; the default used across this crate is
    /// 1000 points.
    pub fn classify_additivity(&self, grid_size: usize) -> AdditivityClass {
        assert!(grid_size >= 100, "grid_size must be at least 100");
        let mut min_v = f64::INFINITY;
        let mut max_v = f64::NEG_INFINITY;
        for i in 0..grid_size {
            let p = (i as f64 + 0.5) / grid_size as f64;
            let v = self.d2f(p) + p * self.d3f(p);
            min_v = min_v.min(v);
            max_v = max_v.max(v);
        }
        if max_v.abs() <= ADDITIVITY_TOL && min_v.abs() <= ADDITIVITY_TOL {
            AdditivityClass::Additive
        } else if max_v <= ADDITIVITY_TOL {
            AdditivityClass::SubAdditive
        } else if min_v >= -ADDITIVITY_TOL {
            AdditivityClass::SuperAdditive
        } else {
            AdditivityClass::Indeterminate
        }
    }

    fn validated(self) -> Result<Self> {
        let at_zero = self.f(0.0);
        let at_one = self.f(1.0);
        if !(at_zero.abs() <= ENDPOINT_TOL && at_one.abs() <= ENDPOINT_TOL) {
            return Err(Error::EndpointsNotZero { at_zero, at_one });
        }
        let mut strict = false;
        for i in 0..CONCAVITY_SAMPLES {
            let p = (i as f64 + 0.5) / CONCAVITY_SAMPLES as f64;
            let d2 = self.d2f(p);
            if d2.is_nan() || d2 > 0.0 {
                return Err(Error::NotConcave { p, d2 });
            }
            if d2 < 0.0 {
                strict = true;
            }
        }
        if !strict {
            return Err(Error::NotConcave { p: 0.5, d2: 0.0 });
        }
        Ok(self)
    }
}

impl fmt::Debug for EntropicFunctional {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        fm.debug_struct("EntropicFunctional")
            .field("name", &self.name)
            .field("slope_at_zero", &self.slope_at_zero)
            .field("slope_at_one", &self.slope_at_one)
            .finish()
    }
}

impl fmt::Display for EntropicFunctional {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        fm.write_str(&self.name)
    }
}

fn check_scale(k: f64) -> Result<()> {
    if k > 0.0 && k.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "scale k must be positive and finite, got {k}"
        )))
    }
}

fn named(head: &str, q: Option<f64>, k: f64) -> String {
    let mut s = String::from(head);
    let mut sep = ':';
    if let Some(q) = q {
        s.push(sep);
        s.push_str(&format!("q={q}"));
        sep = ',';
    }
    if k != 1.0 {
        s.push(sep);
        s.push_str(&format!("k={k}"));
    }
    s
}
