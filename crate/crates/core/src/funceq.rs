//! The additive-quadratic residual operator and its defect measures.
//!
//! `residual` evaluates, term by term in printed order,
//!
//! ```text
//! E_j f(x,y,z) = 3^j f((x+y+z)/3) + f(x) + f(y) + (-1)^j f(z)
//!                - 2^j f((x+y)/2) - 2^j f((y+z)/2) - (-1)^j 2^j f((x+z)/2)
//!                - rho * [ j f(x+y+z) + j f(x) - f(x+y) - f(x+z) - (j-1) f(y+z) ]
//! ```
//!
//! together with the classical additive/quadratic defects, the ternary
//! homomorphism and hom-derivation defects, and mechanized checks of the
//! substitution identities the convergence argument runs on.

use crate::algebra::{AlgebraInstance, Element, Scalar};
use crate::error::{Error, Result};
use crate::fixedpoint::ControlFunction;
use crate::grid::{mix64, SampleGrid};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;

/// Index selecting the additive (1) or quadratic (2) side of the equation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JIndex {
    J1,
    J2,
}

impl JIndex {
    pub fn from_value(v: u32) -> Result<Self> {
        match v {
            1 => Ok(JIndex::J1),
            2 => Ok(JIndex::J2),
            _ => Err(Error::Precondition(format!("index j must be 1 or 2, got {v}"))),
        }
    }

    pub fn value(self) -> u32 {
        match self {
            JIndex::J1 => 1,
            JIndex::J2 => 2,
        }
    }

    /// 2^j
    pub fn two_pow(self) -> f64 {
        match self {
            JIndex::J1 => 2.0,
            JIndex::J2 => 4.0,
        }
    }

    /// 3^j
    pub fn three_pow(self) -> f64 {
        match self {
            JIndex::J1 => 3.0,
            JIndex::J2 => 9.0,
        }
    }

    /// (-1)^j
    pub fn sign(self) -> f64 {
        match self {
            JIndex::J1 => -1.0,
            JIndex::J2 => 1.0,
        }
    }
}

impl Serialize for JIndex {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_u32(self.value())
    }
}

impl<'de> Deserialize<'de> for JIndex {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let v = u32::deserialize(deserializer)?;
        JIndex::from_value(v).map_err(serde::de::Error::custom)
    }
}

/// The complex equation parameter; anything except 0, 1 and -1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RhoParameter(Scalar);

impl RhoParameter {
    pub fn new(value: Scalar) -> Result<Self> {
        let forbidden = [(0.0, 0.0), (1.0, 0.0), (-1.0, 0.0)];
        if forbidden.iter().any(|&(re, im)| value.re == re && value.im == im) {
            return Err(Error::InvalidRho);
        }
        Ok(RhoParameter(value))
    }

    /// The default used by experiments when a config does not override it.
    pub fn default_real() -> Self {
        RhoParameter(Scalar::new(2.0, 0.0))
    }

    pub fn value(&self) -> Scalar {
        self.0
    }
}

impl Serialize for RhoParameter {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        [self.0.re, self.0.im].serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for RhoParameter {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let p = <[f64; 2]>::deserialize(deserializer)?;
        RhoParameter::new(Scalar::new(p[0], p[1])).map_err(serde::de::Error::custom)
    }
}

/// Declared symmetry of a handle under negation of the argument.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Odd,
    Even,
    None,
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Parity::Odd => write!(f, "odd"),
            Parity::Even => write!(f, "even"),
            Parity::None => write!(f, "none"),
        }
    }
}

/// How a perturbation term picks its unit direction at a given point.
///
/// Directions depend only on the ray through the point (and the declared
/// parity), so halving the argument never changes the direction. That keeps
/// the dyadic iteration's increments exactly geometric.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DirectionRule {
    /// The first basis element, sign-folded for odd parity.
    FixedBasis,
    /// Unit element with pseudo-random coordinates keyed on (seed, ray).
    Seeded { seed: u64 },
}

impl fmt::Display for DirectionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DirectionRule::FixedBasis => write!(f, "fixed_basis"),
            DirectionRule::Seeded { seed } => write!(f, "seeded:{seed}"),
        }
    }
}

impl std::str::FromStr for DirectionRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "fixed_basis" {
            Ok(DirectionRule::FixedBasis)
        } else if let Some(rest) = s.strip_prefix("seeded:") {
            rest.parse::<u64>()
                .map(|seed| DirectionRule::Seeded { seed })
                .map_err(|_| Error::Precondition(format!("bad direction rule `{s}`")))
        } else {
            Err(Error::Precondition(format!("bad direction rule `{s}`")))
        }
    }
}

impl Serialize for DirectionRule {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for DirectionRule {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(deserializer)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

pub(crate) mod scalar_pair {
    use super::Scalar;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(
        value: &Scalar,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        [value.re, value.im].serialize(serializer)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Scalar, D::Error> {
        let p = <[f64; 2]>::deserialize(deserializer)?;
        Ok(Scalar::new(p[0], p[1]))
    }
}

/// Closed-form building blocks for deterministic handles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "term", rename_all = "snake_case")]
pub enum CatalogTerm {
    Linear {
        #[serde(with = "scalar_pair")]
        coeff: Scalar,
    },
    Quadratic {
        #[serde(with = "scalar_pair")]
        coeff: Scalar,
    },
    Cubic {
        #[serde(with = "scalar_pair")]
        coeff: Scalar,
    },
    EvenQuartic {
        #[serde(with = "scalar_pair")]
        coeff: Scalar,
    },
    PowerPerturbation {
        s: f64,
        r: f64,
        direction: DirectionRule,
    },
}

impl CatalogTerm {
    fn natural_parity(&self) -> Option<Parity> {
        match self {
            CatalogTerm::Linear { .. } | CatalogTerm::Cubic { .. } => Some(Parity::Odd),
            CatalogTerm::Quadratic { .. } | CatalogTerm::EvenQuartic { .. } => Some(Parity::Even),
            // Perturbations inherit the handle's declared parity.
            CatalogTerm::PowerPerturbation { .. } => None,
        }
    }
}

/// A deterministic mapping of the carrier into itself: a sum of catalog terms,
/// optionally pre-scaled in the argument and post-scaled in the value so the
/// dyadic rescaling operator stays inside the family.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FunctionHandle {
    algebra: AlgebraInstance,
    parity: Parity,
    terms: Vec<CatalogTerm>,
    arg_scale: f64,
    #[serde(with = "scalar_pair")]
    out_scale: Scalar,
}

impl FunctionHandle {
    /// Builds a handle, inferring parity from the polynomial terms (odd
    /// degrees only -> odd, even only -> even, mixed -> none).
    pub fn new(algebra: AlgebraInstance, terms: Vec<CatalogTerm>) -> Self {
        let parities: Vec<Parity> = terms.iter().filter_map(|t| t.natural_parity()).collect();
        let parity = if parities.is_empty() {
            Parity::None
        } else if parities.iter().all(|p| *p == Parity::Odd) {
            Parity::Odd
        } else if parities.iter().all(|p| *p == Parity::Even) {
            Parity::Even
        } else {
            Parity::None
        };
        FunctionHandle::with_parity(algebra, parity, terms)
    }

    pub fn with_parity(algebra: AlgebraInstance, parity: Parity, terms: Vec<CatalogTerm>) -> Self {
        FunctionHandle {
            algebra,
            parity,
            terms,
            arg_scale: 1.0,
            out_scale: Scalar::new(1.0, 0.0),
        }
    }

    pub fn algebra(&self) -> &AlgebraInstance {
        &self.algebra
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn terms(&self) -> &[CatalogTerm] {
        &self.terms
    }

    pub fn with_term(mut self, term: CatalogTerm) -> Self {
        self.terms.push(term);
        self
    }

    /// Post-scales the handle's values by `c`.
    pub fn scaled(mut self, c: Scalar) -> Self {
        self.out_scale *= c;
        self
    }

    /// Replaces x -> arg_factor * x and post-scales by `out_factor`.
    pub fn rescaled(mut self, arg_factor: f64, out_factor: f64) -> Self {
        self.arg_scale *= arg_factor;
        self.out_scale *= out_factor;
        self
    }

    pub fn eval(&self, x: &Element) -> Result<Element> {
        self.algebra.check_member(x, "x")?;
        let ax = if self.arg_scale == 1.0 {
            x.clone()
        } else {
            x.scale_re(self.arg_scale)
        };
        let mut acc = self.algebra.zero();
        for term in &self.terms {
            acc = acc.add(&self.eval_term(term, &ax)?);
        }
        if self.out_scale != Scalar::new(1.0, 0.0) {
            acc = acc.scale(self.out_scale);
        }
        Ok(acc)
    }

    fn eval_term(&self, term: &CatalogTerm, x: &Element) -> Result<Element> {
        let a = &self.algebra;
        match term {
            CatalogTerm::Linear { coeff } => Ok(x.scale(*coeff)),
            CatalogTerm::Quadratic { coeff } => Ok(a.bproduct(x, x)?.scale(*coeff)),
            CatalogTerm::Cubic { coeff } => {
                let x2 = a.bproduct(x, x)?;
                Ok(a.bproduct(&x2, x)?.scale(*coeff))
            }
            CatalogTerm::EvenQuartic { coeff } => {
                let x2 = a.bproduct(x, x)?;
                Ok(a.bproduct(&x2, &x2)?.scale(*coeff))
            }
            CatalogTerm::PowerPerturbation { s, r, direction } => {
                let t = a.norm(x)?;
                if t == 0.0 || *s == 0.0 {
                    return Ok(a.zero());
                }
                let magnitude = s * t.powf(*r);
                let unit = self.unit_direction(direction, x, t)?;
                Ok(unit.scale_re(magnitude))
            }
        }
    }

    fn unit_direction(&self, rule: &DirectionRule, x: &Element, norm_x: f64) -> Result<Element> {
        let ray = x.scale_re(1.0 / norm_x);
        match rule {
            DirectionRule::FixedBasis => {
                let e = self.algebra.unit_basis();
                match self.parity {
                    Parity::Odd => {
                        let (_, sign) = canonical_ray(&ray);
                        Ok(e.scale_re(sign))
                    }
                    _ => Ok(e),
                }
            }
            DirectionRule::Seeded { seed } => {
                let (rep, sign) = match self.parity {
                    Parity::Odd => canonical_ray(&ray),
                    Parity::Even => (canonical_ray(&ray).0, 1.0),
                    Parity::None => (ray, 1.0),
                };
                let mut key = mix64(*seed, 0x44_49_52);
                for c in &rep.coords {
                    key = mix64(key, c.re.to_bits());
                    key = mix64(key, c.im.to_bits());
                }
                let mut rng = ChaCha8Rng::seed_from_u64(key);
                let unit = loop {
                    let coords: Vec<Scalar> = (0..self.algebra.carrier_len())
                        .map(|_| {
                            Scalar::new(2.0 * rng.gen::<f64>() - 1.0, 2.0 * rng.gen::<f64>() - 1.0)
                        })
                        .collect();
                    let raw = Element::new(coords);
                    let n = self.algebra.norm(&raw)?;
                    if n > 1e-3 {
                        break raw.scale_re(1.0 / n);
                    }
                };
                Ok(unit.scale_re(sign))
            }
        }
    }
}

/// Picks the lexicographically larger of `ray` and `-ray` and the sign that
/// recovers `ray` from it. Folding both half-rays onto one representative is
/// what makes seeded directions exactly odd or even.
fn canonical_ray(ray: &Element) -> (Element, f64) {
    let neg = ray.neg();
    for (a, b) in ray.coords.iter().zip(&neg.coords) {
        match a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)) {
            std::cmp::Ordering::Greater => return (ray.clone(), 1.0),
            std::cmp::Ordering::Less => return (neg, -1.0),
            std::cmp::Ordering::Equal => continue,
        }
    }
    (ray.clone(), 1.0)
}

/// Anything residuals and defects can be evaluated on: catalog handles and
/// pointwise-extracted limits alike.
pub trait PointMap {
    fn algebra(&self) -> &AlgebraInstance;
    fn eval(&self, x: &Element) -> Result<Element>;
}

impl PointMap for FunctionHandle {
    fn algebra(&self) -> &AlgebraInstance {
        &self.algebra
    }

    fn eval(&self, x: &Element) -> Result<Element> {
        FunctionHandle::eval(self, x)
    }
}

impl<M: PointMap + ?Sized> PointMap for &M {
    fn algebra(&self) -> &AlgebraInstance {
        (**self).algebra()
    }

    fn eval(&self, x: &Element) -> Result<Element> {
        (**self).eval(x)
    }
}

/// One evaluated grid entry of a defect scan.
#[derive(Clone, Debug, Serialize)]
pub struct DefectRow {
    pub point: Vec<Element>,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
}

/// Worst case of a defect scan, with the full per-point table kept for
/// emission. Ties keep the earliest point in grid order.
#[derive(Clone, Debug, Serialize)]
pub struct DefectReport {
    pub max_defect: f64,
    pub argmax_point: Vec<Element>,
    pub samples_checked: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_ratio: Option<f64>,
    pub rows: Vec<DefectRow>,
}

impl DefectReport {
    pub(crate) fn from_rows(rows: Vec<DefectRow>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyGrid);
        }
        let mut max_defect = f64::NEG_INFINITY;
        let mut argmax = 0usize;
        for (i, row) in rows.iter().enumerate() {
            if row.value > max_defect {
                max_defect = row.value;
                argmax = i;
            }
        }
        let max_ratio = rows
            .iter()
            .filter_map(|r| r.ratio)
            .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))));
        Ok(DefectReport {
            max_defect,
            argmax_point: rows[argmax].point.clone(),
            samples_checked: rows.len(),
            max_ratio,
            rows,
        })
    }
}

/// Evaluates the residual operator at one argument triple.
pub fn residual<M: PointMap + ?Sized>(
    f: &M,
    j: JIndex,
    rho: &RhoParameter,
    x: &Element,
    y: &Element,
    z: &Element,
) -> Result<Element> {
    let a = f.algebra();
    a.check_member(x, "x")?;
    a.check_member(y, "y")?;
    a.check_member(z, "z")?;

    let two_j = j.two_pow();
    let sign = j.sign();
    let jv = j.value() as f64;
    let sum3 = x.add(y).add(z);

    let mut acc = f.eval(&sum3.scale_re(1.0 / 3.0))?.scale_re(j.three_pow());
    acc = acc.add(&f.eval(x)?);
    acc = acc.add(&f.eval(y)?);
    acc = acc.add(&f.eval(z)?.scale_re(sign));
    acc = acc.sub(&f.eval(&x.add(y).halve())?.scale_re(two_j));
    acc = acc.sub(&f.eval(&y.add(z).halve())?.scale_re(two_j));
    acc = acc.sub(&f.eval(&x.add(z).halve())?.scale_re(sign * two_j));

    let mut bracket = f.eval(&sum3)?.scale_re(jv);
    bracket = bracket.add(&f.eval(x)?.scale_re(jv));
    bracket = bracket.sub(&f.eval(&x.add(y))?);
    bracket = bracket.sub(&f.eval(&x.add(z))?);
    bracket = bracket.sub(&f.eval(&y.add(z))?.scale_re(jv - 1.0));

    Ok(acc.sub(&bracket.scale(rho.value())))
}

/// Residual norm over all grid triples, plus the ratio against a control when
/// one is supplied (skipped where the control underflows).
pub fn residual_sup<M: PointMap + ?Sized>(
    f: &M,
    j: JIndex,
    rho: &RhoParameter,
    grid: &SampleGrid,
    control: Option<&ControlFunction>,
) -> Result<DefectReport> {
    let a = f.algebra();
    let triples = grid.triples(a)?;
    if triples.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut rows = Vec::with_capacity(triples.len());
    for (x, y, z) in &triples {
        let value = a.norm(&residual(f, j, rho, x, y, z)?)?;
        let ratio = match control {
            Some(ctl) => {
                let denom = ctl.value(a, x, y, z)?;
                if denom < 1e-300 {
                    None
                } else {
                    Some(value / denom)
                }
            }
            None => None,
        };
        rows.push(DefectRow {
            point: vec![x.clone(), y.clone(), z.clone()],
            value,
            ratio,
        });
    }
    DefectReport::from_rows(rows)
}

/// The substitution identities the convergence argument relies on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpecializationIdentity {
    /// E_1 f(0,0,z) = 3 f(z/3) - f(z) for every f with f(0) = 0.
    ZeroZeroZ,
    /// E_1 f(0,y,-y) = 2 [ f(y) - 2 f(y/2) ] for odd f.
    OddPair,
    /// E_2 f(x,0,-x) = 2 [ f(x) - 4 f(x/2) ] for even f with f(0) = 0.
    EvenPair,
    /// E_1 f(0,0,0) = 2 f(0) for arbitrary f.
    OriginJ1,
    /// E_2 f(0,0,0) = -rho f(0) for arbitrary f.
    OriginJ2,
}

impl fmt::Display for SpecializationIdentity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            SpecializationIdentity::ZeroZeroZ => "zero_zero_z",
            SpecializationIdentity::OddPair => "odd_pair",
            SpecializationIdentity::EvenPair => "even_pair",
            SpecializationIdentity::OriginJ1 => "origin_j1",
            SpecializationIdentity::OriginJ2 => "origin_j2",
        };
        write!(f, "{name}")
    }
}

fn compact_point(e: &Element) -> String {
    let parts: Vec<String> = e
        .coords
        .iter()
        .map(|c| format!("({:.6e},{:.6e})", c.re, c.im))
        .collect();
    parts.join(";")
}

/// Confirms the declared parity against sampled behavior; the first point that
/// contradicts it is reported as the witness.
pub fn verify_declared_parity(f: &FunctionHandle, grid: &SampleGrid, tol: f64) -> Result<()> {
    let sign = match f.parity() {
        Parity::Odd => -1.0,
        Parity::Even => 1.0,
        Parity::None => return Ok(()),
    };
    for x in grid.points(f.algebra())? {
        let fx = f.eval(&x)?;
        let fneg = f.eval(&x.neg())?;
        let diff = f.algebra().norm(&fneg.sub(&fx.scale_re(sign)))?;
        let scale = f.algebra().norm(&fx)?;
        if diff > tol * (1.0 + scale) {
            return Err(Error::ParityViolation {
                declared: f.parity().to_string(),
                witness: compact_point(&x),
            });
        }
    }
    Ok(())
}

fn require_vanishes_at_zero(f: &FunctionHandle) -> Result<()> {
    let zero = f.algebra().zero();
    let at_zero = f.algebra().norm(&f.eval(&zero)?)?;
    if at_zero > 1e-12 {
        return Err(Error::Precondition(format!(
            "handle must vanish at zero; |f(0)| = {at_zero:.3e}"
        )));
    }
    Ok(())
}

/// Measures one substitution identity over the grid. Values are relative
/// violations (the residual of the identity over `1 +` the scale of the
/// handle values involved).
pub fn verify_specialization(
    identity: SpecializationIdentity,
    f: &FunctionHandle,
    rho: &RhoParameter,
    grid: &SampleGrid,
    tol: f64,
) -> Result<DefectReport> {
    use SpecializationIdentity::*;
    let a = f.algebra();
    let zero = a.zero();

    match identity {
        ZeroZeroZ => require_vanishes_at_zero(f)?,
        OddPair => {
            if f.parity() != Parity::Odd {
                return Err(Error::Precondition(format!(
                    "identity needs an odd handle, parity is `{}`",
                    f.parity()
                )));
            }
            verify_declared_parity(f, grid, tol)?;
        }
        EvenPair => {
            if f.parity() != Parity::Even {
                return Err(Error::Precondition(format!(
                    "identity needs an even handle, parity is `{}`",
                    f.parity()
                )));
            }
            require_vanishes_at_zero(f)?;
            verify_declared_parity(f, grid, tol)?;
        }
        OriginJ1 | OriginJ2 => {}
    }

    let mut rows = Vec::new();
    match identity {
        ZeroZeroZ => {
            for z in grid.points(a)? {
                let lhs = residual(f, JIndex::J1, rho, &zero, &zero, &z)?;
                let fz = f.eval(&z)?;
                let rhs = f.eval(&z.scale_re(1.0 / 3.0))?.scale_re(3.0).sub(&fz);
                let value = a.norm(&lhs.sub(&rhs))? / (1.0 + a.norm(&fz)?);
                rows.push(DefectRow {
                    point: vec![z],
                    value,
                    ratio: None,
                });
            }
        }
        OddPair => {
            for y in grid.points(a)? {
                let lhs = residual(f, JIndex::J1, rho, &zero, &y, &y.neg())?;
                let fy = f.eval(&y)?;
                let rhs = fy.sub(&f.eval(&y.halve())?.scale_re(2.0)).scale_re(2.0);
                let value = a.norm(&lhs.sub(&rhs))? / (1.0 + a.norm(&fy)?);
                rows.push(DefectRow {
                    point: vec![y],
                    value,
                    ratio: None,
                });
            }
        }
        EvenPair => {
            for x in grid.points(a)? {
                let lhs = residual(f, JIndex::J2, rho, &x, &zero, &x.neg())?;
                let fx = f.eval(&x)?;
                let rhs = fx.sub(&f.eval(&x.halve())?.scale_re(4.0)).scale_re(2.0);
                let value = a.norm(&lhs.sub(&rhs))? / (1.0 + a.norm(&fx)?);
                rows.push(DefectRow {
                    point: vec![x],
                    value,
                    ratio: None,
                });
            }
        }
        OriginJ1 => {
            let lhs = residual(f, JIndex::J1, rho, &zero, &zero, &zero)?;
            let f0 = f.eval(&zero)?;
            let value = a.norm(&lhs.sub(&f0.scale_re(2.0)))? / (1.0 + a.norm(&f0)?);
            rows.push(DefectRow {
                point: vec![zero.clone()],
                value,
                ratio: None,
            });
        }
        OriginJ2 => {
            let lhs = residual(f, JIndex::J2, rho, &zero, &zero, &zero)?;
            let f0 = f.eval(&zero)?;
            let value = a.norm(&lhs.add(&f0.scale(rho.value())))? / (1.0 + a.norm(&f0)?);
            rows.push(DefectRow {
                point: vec![zero.clone()],
                value,
                ratio: None,
            });
        }
    }
    DefectReport::from_rows(rows)
}

/// Additive defect (j = 1) or quadratic parallelogram defect (j = 2) over
/// sampled argument pairs.
pub fn j_mapping_defect<M: PointMap + ?Sized>(
    f: &M,
    j: JIndex,
    grid: &SampleGrid,
) -> Result<DefectReport> {
    let a = f.algebra();
    let pairs = grid.pairs(a)?;
    if pairs.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut rows = Vec::with_capacity(pairs.len());
    for (x, y) in &pairs {
        let value = match j {
            JIndex::J1 => {
                let d = f
                    .eval(&x.add(y))?
                    .sub(&f.eval(x)?)
                    .sub(&f.eval(y)?);
                a.norm(&d)?
            }
            JIndex::J2 => {
                let d = f
                    .eval(&x.add(y))?
                    .add(&f.eval(&x.sub(y))?)
                    .sub(&f.eval(x)?.scale_re(2.0))
                    .sub(&f.eval(y)?.scale_re(2.0));
                a.norm(&d)?
            }
        };
        rows.push(DefectRow {
            point: vec![x.clone(), y.clone()],
            value,
            ratio: None,
        });
    }
    DefectReport::from_rows(rows)
}

/// Multiplicativity defect `|f(xyz) - f(x)f(y)f(z)|` over sampled triples,
/// both sides under the ternary product.
pub fn hom_residual<M: PointMap + ?Sized>(f: &M, grid: &SampleGrid) -> Result<DefectReport> {
    let a = f.algebra();
    let triples = grid.triples(a)?;
    if triples.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut rows = Vec::with_capacity(triples.len());
    for (x, y, z) in &triples {
        let lhs = f.eval(&a.tproduct(x, y, z)?)?;
        let rhs = a.tproduct(&f.eval(x)?, &f.eval(y)?, &f.eval(z)?)?;
        rows.push(DefectRow {
            point: vec![x.clone(), y.clone(), z.clone()],
            value: a.norm(&lhs.sub(&rhs))?,
            ratio: None,
        });
    }
    DefectReport::from_rows(rows)
}

fn j_power(a: &AlgebraInstance, v: &Element, j: JIndex) -> Result<Element> {
    match j {
        JIndex::J1 => Ok(v.clone()),
        JIndex::J2 => a.bproduct(v, v),
    }
}

/// Leibniz-type defect of `d` relative to `h`: the distance between `d(xyz)`
/// and the three-summand rule with j-th powers of `h` in the passive slots.
pub fn homder_residual<M1, M2>(
    d: &M1,
    h: &M2,
    j: JIndex,
    grid: &SampleGrid,
) -> Result<DefectReport>
where
    M1: PointMap + ?Sized,
    M2: PointMap + ?Sized,
{
    let a = d.algebra();
    if h.algebra() != a {
        return Err(Error::AlgebraMismatch {
            expected: a.to_string(),
            got: h.algebra().to_string(),
        });
    }
    let triples = grid.triples(a)?;
    if triples.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut rows = Vec::with_capacity(triples.len());
    for (x, y, z) in &triples {
        let lhs = d.eval(&a.tproduct(x, y, z)?)?;
        let hx = j_power(a, &h.eval(x)?, j)?;
        let hy = j_power(a, &h.eval(y)?, j)?;
        let hz = j_power(a, &h.eval(z)?, j)?;
        let s1 = a.tproduct(&d.eval(x)?, &hy, &hz)?;
        let s2 = a.tproduct(&hx, &d.eval(y)?, &hz)?;
        let s3 = a.tproduct(&hx, &hy, &d.eval(z)?)?;
        let rhs = s1.add(&s2).add(&s3);
        rows.push(DefectRow {
            point: vec![x.clone(), y.clone(), z.clone()],
            value: a.norm(&lhs.sub(&rhs))?,
            ratio: None,
        });
    }
    DefectReport::from_rows(rows)
}
