//! The contraction engine.
//!
//! Houses the dyadic rescaling operator `Q_j(g)(x) = 2^j g(x/2)`, the pointwise
//! limit `lim 2^{jn} f(x/2^n)`, the grid-sup generalized distance with its
//! control-function denominators, contraction-constant estimation, the
//! `k/(2(1-k))` bound, and a generic certified fixed-point iterator.

use crate::algebra::{AlgebraInstance, Element};
use crate::error::{Error, Result};
use crate::funceq::{FunctionHandle, JIndex, PointMap};
use crate::grid::SampleGrid;
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;

/// Threshold below which a control value counts as exactly zero (separates
/// genuine zeros from underflow).
pub const NEAR_ZERO_DENOM: f64 = 1e-300;

const DEFAULT_ZERO_TOL: f64 = 1e-12;

/// Which side of the hypothesis a control bounds; the sigma role scales with
/// exponent `3j` instead of `j` under argument halving.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControlRole {
    #[default]
    Delta,
    Sigma,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ControlFamily {
    /// `s (|x|^r + |y|^r + |z|^r)`
    Power { s: f64, r: f64 },
    /// Constant `c >= 0`.
    Constant { c: f64 },
}

/// Nonnegative control on argument triples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlFunction {
    #[serde(flatten)]
    pub family: ControlFamily,
    #[serde(default)]
    pub role: ControlRole,
}

impl ControlFunction {
    pub fn power(s: f64, r: f64, role: ControlRole) -> Self {
        ControlFunction {
            family: ControlFamily::Power { s, r },
            role,
        }
    }

    pub fn power_delta(s: f64, r: f64) -> Self {
        ControlFunction::power(s, r, ControlRole::Delta)
    }

    pub fn power_sigma(s: f64, r: f64) -> Self {
        ControlFunction::power(s, r, ControlRole::Sigma)
    }

    pub fn constant(c: f64, role: ControlRole) -> Self {
        ControlFunction {
            family: ControlFamily::Constant { c },
            role,
        }
    }

    pub fn value_from_norms(&self, nx: f64, ny: f64, nz: f64) -> f64 {
        match &self.family {
            ControlFamily::Power { s, r } => {
                s * (pow_or_zero(nx, *r) + pow_or_zero(ny, *r) + pow_or_zero(nz, *r))
            }
            ControlFamily::Constant { c } => *c,
        }
    }

    pub fn value(
        &self,
        algebra: &AlgebraInstance,
        x: &Element,
        y: &Element,
        z: &Element,
    ) -> Result<f64> {
        Ok(self.value_from_norms(algebra.norm(x)?, algebra.norm(y)?, algebra.norm(z)?))
    }

    /// Halving exponent: `j` for delta controls, `3j` for sigma controls.
    pub fn scaling_exponent(&self, j: JIndex) -> u32 {
        match self.role {
            ControlRole::Delta => j.value(),
            ControlRole::Sigma => 3 * j.value(),
        }
    }

    /// Exact contraction constant for the power family: `2^(e - r)`.
    pub fn analytic_contraction(&self, j: JIndex) -> Option<f64> {
        match &self.family {
            ControlFamily::Power { r, .. } => {
                Some(2f64.powf(self.scaling_exponent(j) as f64 - r))
            }
            ControlFamily::Constant { .. } => None,
        }
    }
}

/// `t^r` with the convention that a zero norm contributes zero (controls
/// vanish at the origin for the admissible exponents).
fn pow_or_zero(t: f64, r: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t.powf(r)
    }
}

/// Sampled (and, for power controls, analytic) contraction constant.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ContractionEstimate {
    pub k_hat: f64,
    pub k_analytic: Option<f64>,
    pub admissible: bool,
}

/// Worst observed ratio `2^e * control(x/2, y/2, z/2) / control(x, y, z)`
/// over seeded norm triples from the grid's radius band.
pub fn contraction_constant_estimate(
    control: &ControlFunction,
    j: JIndex,
    grid: &SampleGrid,
) -> Result<ContractionEstimate> {
    if grid.count == 0 {
        return Err(Error::EmptyGrid);
    }
    let radii = grid.sample_radii(0x6B, 3 * grid.count);
    let scale = 2f64.powi(control.scaling_exponent(j) as i32);
    let mut k_hat: Option<f64> = None;
    for w in radii.chunks_exact(3) {
        let denom = control.value_from_norms(w[0], w[1], w[2]);
        if denom < NEAR_ZERO_DENOM {
            continue;
        }
        let num = control.value_from_norms(w[0] * 0.5, w[1] * 0.5, w[2] * 0.5);
        let ratio = scale * num / denom;
        k_hat = Some(k_hat.map_or(ratio, |k: f64| k.max(ratio)));
    }
    let k_hat = k_hat.ok_or(Error::DegenerateControl)?;
    Ok(ContractionEstimate {
        k_hat,
        k_analytic: control.analytic_contraction(j),
        admissible: k_hat < 1.0,
    })
}

/// The bound `k / (2 (1 - k)) * delta_value` for a strict contraction.
pub fn stability_bound(k: f64, delta_value: f64) -> Result<f64> {
    if !(k > 0.0 && k < 1.0) {
        return Err(Error::InvalidLipschitz(k));
    }
    Ok(k / (2.0 * (1.0 - k)) * delta_value)
}

/// Nonnegative real extended with a bona fide infinity; totally ordered and
/// absorbing under addition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtendedReal(f64);

impl ExtendedReal {
    pub fn finite(v: f64) -> Result<Self> {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::Precondition(format!(
                "extended real must be finite and nonnegative, got {v}"
            )));
        }
        Ok(ExtendedReal(v))
    }

    pub fn infinity() -> Self {
        ExtendedReal(f64::INFINITY)
    }

    pub fn is_infinite(&self) -> bool {
        self.0.is_infinite()
    }

    pub fn value(&self) -> f64 {
        self.0
    }

}

impl std::ops::Add for ExtendedReal {
    type Output = ExtendedReal;

    fn add(self, other: ExtendedReal) -> ExtendedReal {
        ExtendedReal(self.0 + other.0)
    }
}

impl Eq for ExtendedReal {}

impl PartialOrd for ExtendedReal {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtendedReal {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            write!(f, "inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Serialize for ExtendedReal {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_infinite() {
            serializer.serialize_str("inf")
        } else {
            serializer.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for ExtendedReal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct V;

        impl Visitor<'_> for V {
            type Value = ExtendedReal;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                write!(f, "a nonnegative number or the string \"inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<ExtendedReal, E> {
                ExtendedReal::finite(v).map_err(E::custom)
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<ExtendedReal, E> {
                self.visit_f64(v as f64)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<ExtendedReal, E> {
                self.visit_f64(v as f64)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<ExtendedReal, E> {
                if v == "inf" {
                    Ok(ExtendedReal::infinity())
                } else {
                    Err(E::custom(format!("unexpected extended-real string `{v}`")))
                }
            }
        }

        deserializer.deserialize_any(V)
    }
}

/// Recorded iteration trace with an a-posteriori error bound.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConvergenceCertificate<P> {
    pub n_steps: usize,
    pub increments: Vec<f64>,
    pub limit: P,
    pub aposteriori_bound: ExtendedReal,
    pub converged: bool,
    pub flags: Vec<String>,
}

fn bound_from_increments(increments: &[f64], flags: &mut Vec<String>) -> ExtendedReal {
    let Some(&first) = increments.first() else {
        return ExtendedReal(0.0);
    };
    let mut observed: Option<f64> = None;
    for w in increments.windows(2) {
        if w[0] > NEAR_ZERO_DENOM {
            let r = w[1] / w[0];
            observed = Some(observed.map_or(r, |o: f64| o.max(r)));
        }
    }
    match observed {
        Some(lhat) if lhat >= 1.0 => {
            flags.push("no-observed-contraction".to_string());
            ExtendedReal::infinity()
        }
        Some(lhat) => ExtendedReal(first / (1.0 - lhat)),
        None => ExtendedReal(first),
    }
}

/// The pointwise dyadic limit `lim_n 2^{jn} f(x / 2^n)`.
///
/// Stops as soon as an increment falls to `tol` or the step budget runs out;
/// a non-finite iterate aborts with the offending step index.
pub fn direct_method_point<M: PointMap + ?Sized>(
    f: &M,
    j: JIndex,
    x: &Element,
    n_max: usize,
    tol: f64,
) -> Result<ConvergenceCertificate<Element>> {
    if n_max < 1 {
        return Err(Error::Precondition("n_max must be at least 1".into()));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::Precondition("tolerance must be positive".into()));
    }
    let a = f.algebra();
    a.check_member(x, "x")?;
    let zero = a.zero();
    let at_zero = a.norm(&f.eval(&zero)?)?;
    if at_zero > DEFAULT_ZERO_TOL {
        return Err(Error::Precondition(format!(
            "mapping must vanish at zero; |f(0)| = {at_zero:.3e}"
        )));
    }

    let two_j = j.two_pow();
    let mut arg = x.clone();
    let mut factor = 1.0f64;
    let mut prev = f.eval(&arg)?;
    let mut limit = prev.clone();
    let mut increments = Vec::new();
    let mut converged = false;

    for step in 1..=n_max {
        arg = arg.halve();
        factor *= two_j;
        let cur = f.eval(&arg)?.scale_re(factor);
        if !cur.is_finite() {
            return Err(Error::Divergence { step });
        }
        let delta = a.norm(&cur.sub(&prev))?;
        increments.push(delta);
        limit = cur.clone();
        if delta <= tol {
            converged = true;
            break;
        }
        prev = cur;
    }

    let mut flags = Vec::new();
    let aposteriori_bound = bound_from_increments(&increments, &mut flags);
    let n_steps = if converged {
        increments.len().saturating_sub(1)
    } else {
        n_max
    };
    Ok(ConvergenceCertificate {
        n_steps,
        increments,
        limit,
        aposteriori_bound,
        converged,
        flags,
    })
}

/// Grid-sup of `|g(x) - h(x)| / denom(x)` where the denominator is the control
/// at `(0, x, -x)` for j = 1 and `(x, 0, -x)` for j = 2. A vanishing
/// denominator under a genuinely different value yields infinity.
pub fn generalized_distance<M1, M2>(
    g: &M1,
    h: &M2,
    j: JIndex,
    delta: &ControlFunction,
    grid: &SampleGrid,
) -> Result<ExtendedReal>
where
    M1: PointMap + ?Sized,
    M2: PointMap + ?Sized,
{
    let a = g.algebra();
    if h.algebra() != a {
        return Err(Error::AlgebraMismatch {
            expected: a.to_string(),
            got: h.algebra().to_string(),
        });
    }
    let points = grid.points(a)?;
    if points.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let zero = a.zero();
    for (label, m) in [("g", a.norm(&g.eval(&zero)?)?), ("h", a.norm(&h.eval(&zero)?)?)] {
        if m > DEFAULT_ZERO_TOL {
            return Err(Error::Precondition(format!(
                "{label} must vanish at zero; got |{label}(0)| = {m:.3e}"
            )));
        }
    }

    let mut sup = 0.0f64;
    for x in &points {
        let gx = g.eval(x)?;
        let diff = a.norm(&gx.sub(&h.eval(x)?))?;
        let nx = a.norm(x)?;
        let denom = match j {
            JIndex::J1 => delta.value_from_norms(0.0, nx, nx),
            JIndex::J2 => delta.value_from_norms(nx, 0.0, nx),
        };
        if denom < NEAR_ZERO_DENOM {
            if diff > DEFAULT_ZERO_TOL * (1.0 + a.norm(&gx)?) {
                return Ok(ExtendedReal::infinity());
            }
        } else {
            sup = sup.max(diff / denom);
        }
    }
    ExtendedReal::finite(sup)
}

/// The dyadic rescaling operator on handles: `x -> 2^j g(x/2)`.
pub fn halving_operator(g: &FunctionHandle, j: JIndex) -> FunctionHandle {
    g.clone().rescaled(0.5, j.two_pow())
}

/// Certified iteration of a declared strict contraction. Observed step ratios
/// above the declared constant are flagged in the certificate rather than
/// treated as errors.
pub fn diaz_margolis_iterate<T, F, D>(
    map: F,
    start: &T,
    metric: D,
    lipschitz: f64,
    n_max: usize,
    tol: f64,
) -> Result<ConvergenceCertificate<T>>
where
    T: Clone,
    F: Fn(&T) -> T,
    D: Fn(&T, &T) -> f64,
{
    if !(lipschitz > 0.0 && lipschitz < 1.0) {
        return Err(Error::InvalidLipschitz(lipschitz));
    }
    if n_max < 1 {
        return Err(Error::Precondition("n_max must be at least 1".into()));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::Precondition("tolerance must be positive".into()));
    }

    let check_metric = |a: &T, b: &T| -> Result<f64> {
        let d = metric(a, b);
        let back = metric(b, a);
        if d < 0.0 || !d.is_finite() {
            return Err(Error::Precondition(format!(
                "metric must be finite and nonnegative, got {d}"
            )));
        }
        if (d - back).abs() > 1e-12 * (1.0 + d.abs()) {
            return Err(Error::Precondition(format!(
                "metric must be symmetric; d(a,b) = {d}, d(b,a) = {back}"
            )));
        }
        Ok(d)
    };

    let mut cur = map(start);
    let first = check_metric(start, &cur)?;
    let mut increments = vec![first];
    let mut converged = first <= tol;
    let mut ratio_violation = false;

    if !converged {
        let mut prev_point = cur.clone();
        for _ in 1..n_max {
            let next = map(&prev_point);
            let d = check_metric(&prev_point, &next)?;
            if let Some(&last) = increments.last() {
                if last > NEAR_ZERO_DENOM && d / last > lipschitz + 1e-9 {
                    ratio_violation = true;
                }
            }
            increments.push(d);
            prev_point = next.clone();
            cur = next;
            if d <= tol {
                converged = true;
                break;
            }
        }
    }

    let mut flags = Vec::new();
    if ratio_violation {
        flags.push("contraction-ratio-exceeded".to_string());
    }
    let aposteriori_bound = ExtendedReal(first / (1.0 - lipschitz));
    let n_steps = if converged {
        increments.len().saturating_sub(1)
    } else {
        n_max
    };
    Ok(ConvergenceCertificate {
        n_steps,
        increments,
        limit: cur,
        aposteriori_bound,
        converged,
        flags,
    })
}

/// A mapping defined pointwise as the dyadic limit of a handle; evaluating it
/// anywhere reruns the iteration at that point.
#[derive(Clone, Debug)]
pub struct ExtractedMapping {
    source: FunctionHandle,
    j: JIndex,
    n_max: usize,
    tol: f64,
}

impl ExtractedMapping {
    pub fn new(source: FunctionHandle, j: JIndex, n_max: usize, tol: f64) -> Self {
        ExtractedMapping {
            source,
            j,
            n_max,
            tol,
        }
    }

    pub fn source(&self) -> &FunctionHandle {
        &self.source
    }

    pub fn certificate_at(&self, x: &Element) -> Result<ConvergenceCertificate<Element>> {
        direct_method_point(&self.source, self.j, x, self.n_max, self.tol)
    }
}

impl PointMap for ExtractedMapping {
    fn algebra(&self) -> &AlgebraInstance {
        self.source.algebra()
    }

    fn eval(&self, x: &Element) -> Result<Element> {
        Ok(self.certificate_at(x)?.limit)
    }
}
