//! Exact Gaussian-rational expansion oracle.
//!
//! Evaluates the generalized additive-quadratic residual of a complex
//! polynomial entirely in `BigRational` arithmetic, so every value is exact.
//! The floating-point evaluator in `ternlab` is checked against these values;
//! nothing here depends on that implementation.

use num::complex::Complex;
use num::rational::Ratio;
use num::{BigInt, BigRational, One, ToPrimitive, Zero};

pub type Rat = BigRational;
pub type CRat = Complex<Rat>;

pub fn rat(num: i64, den: i64) -> Rat {
    Ratio::new(BigInt::from(num), BigInt::from(den))
}

pub fn crat(re: Rat, im: Rat) -> CRat {
    Complex::new(re, im)
}

pub fn cint(re: i64, im: i64) -> CRat {
    crat(rat(re, 1), rat(im, 1))
}

/// Exact rational value of a finite `f64` (every finite double is rational).
pub fn rat_from_f64(x: f64) -> Rat {
    Ratio::from_float(x).expect("finite f64 required")
}

pub fn crat_from_f64(re: f64, im: f64) -> CRat {
    crat(rat_from_f64(re), rat_from_f64(im))
}

/// Nearest-double projection, used when comparing against float results.
pub fn to_f64_pair(v: &CRat) -> (f64, f64) {
    (
        v.re.to_f64().expect("rational out of f64 range"),
        v.im.to_f64().expect("rational out of f64 range"),
    )
}

/// Modulus of the difference of two exact complex rationals, as `f64`.
pub fn abs_diff(a: &CRat, b: &CRat) -> f64 {
    let d = a.clone() - b.clone();
    let m2 = d.re.clone() * d.re.clone() + d.im.clone() * d.im.clone();
    m2.to_f64().map(f64::sqrt).unwrap_or(f64::INFINITY)
}

/// Complex polynomial with exact coefficients: the sum of `c_k x^k`.
#[derive(Clone, Debug)]
pub struct RatPoly {
    pub monomials: Vec<(u32, CRat)>,
}

impl RatPoly {
    pub fn new(monomials: Vec<(u32, CRat)>) -> Self {
        RatPoly { monomials }
    }

    pub fn eval(&self, x: &CRat) -> CRat {
        let mut acc = CRat::zero();
        for (deg, coeff) in &self.monomials {
            let mut p = CRat::one();
            for _ in 0..*deg {
                p *= x.clone();
            }
            acc += coeff.clone() * p;
        }
        acc
    }
}

fn int(n: i64) -> CRat {
    cint(n, 0)
}

/// Exact expansion of the additive-quadratic residual operator applied to a
/// polynomial, with index `j` in {1, 2} and complex parameter `rho`.
///
/// Term order mirrors the evaluator under test, but every intermediate value
/// here is an exact rational, so the order is immaterial.
pub fn residual_exact(f: &RatPoly, j: u32, rho: &CRat, x: &CRat, y: &CRat, z: &CRat) -> CRat {
    assert!(j == 1 || j == 2, "index must be 1 or 2");
    let jr = int(j as i64);
    let sign = if j.is_multiple_of(2) { int(1) } else { int(-1) };
    let three_j = int(3i64.pow(j));
    let two_j = int(2i64.pow(j));
    let half = crat(rat(1, 2), rat(0, 1));
    let third = crat(rat(1, 3), rat(0, 1));

    let sum3 = x.clone() + y.clone() + z.clone();
    let mut acc = three_j * f.eval(&(sum3.clone() * third));
    acc += f.eval(x);
    acc += f.eval(y);
    acc += sign.clone() * f.eval(z);
    acc -= two_j.clone() * f.eval(&((x.clone() + y.clone()) * half.clone()));
    acc -= two_j.clone() * f.eval(&((y.clone() + z.clone()) * half.clone()));
    acc -= sign * two_j * f.eval(&((x.clone() + z.clone()) * half));

    let mut bracket = jr.clone() * f.eval(&sum3);
    bracket += jr.clone() * f.eval(x);
    bracket -= f.eval(&(x.clone() + y.clone()));
    bracket -= f.eval(&(x.clone() + z.clone()));
    bracket -= (jr - int(1)) * f.eval(&(y.clone() + z.clone()));

    acc - rho.clone() * bracket
}

/// True when the rational is exactly representable as an `f64` (dyadic with
/// bounded numerator), which keeps float-path comparisons roundoff-free.
pub fn is_exact_f64(r: &Rat) -> bool {
    match r.to_f64() {
        Some(x) if x.is_finite() => &rat_from_f64(x) == r,
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_polynomial_residual_is_twice_first_argument() {
        let f = RatPoly::new(vec![(1, cint(1, 0))]);
        let rho = cint(2, 0);
        let got = residual_exact(&f, 1, &rho, &cint(1, 0), &cint(2, 0), &cint(3, 0));
        assert_eq!(got, cint(2, 0));
    }

    #[test]
    fn square_polynomial_residual_matches_cross_term_form() {
        // E^2 applied to x^2 collapses to -2*rho*(x+y)*(x+z).
        let f = RatPoly::new(vec![(2, cint(1, 0))]);
        let rho = cint(2, 0);
        let got = residual_exact(&f, 2, &rho, &cint(1, 0), &cint(2, 0), &cint(3, 0));
        assert_eq!(got, cint(-48, 0));
        for (x, y, z) in [(5i64, -2i64, 7i64), (1, 1, 1), (0, 4, -3)] {
            let (cx, cy, cz) = (cint(x, 0), cint(y, 0), cint(z, 0));
            let got = residual_exact(&f, 2, &rho, &cx, &cy, &cz);
            let expect = int_mul(&rho, -2) * (cx.clone() + cy.clone()) * (cx + cz);
            assert_eq!(got, expect);
        }
    }

    fn int_mul(v: &CRat, k: i64) -> CRat {
        v.clone() * cint(k, 0)
    }

    #[test]
    fn float_roundtrip_is_exact_for_dyadics() {
        let r = rat_from_f64(0.375);
        assert_eq!(r, rat(3, 8));
        assert!(is_exact_f64(&rat(3, 8)));
        assert!(!is_exact_f64(&rat(1, 3)));
    }
}
