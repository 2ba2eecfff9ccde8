//! Working-precision context and complex arithmetic over MPFR floats.
//!
//! Every numerical value in this crate is an MPFR [`Real`] created through a
//! [`Ctx`], so all intermediates share one mantissa size. Arithmetic between
//! values of equal precision stays at that precision, which is the invariant
//! the rest of the crate relies on. `eps_work` is `2^(1-bits)`.

use rug::float::Special;
use rug::Float;
use std::fmt;

pub type Real = Float;

/// Precision context: the mantissa size threaded through all evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Ctx {
    bits: u32,
}

pub const DEFAULT_BITS: u32 = 256;
pub const MIN_BITS: u32 = 32;

impl Ctx {
    pub fn new(bits: u32) -> Self {
        Ctx {
            bits: bits.max(MIN_BITS),
        }
    }

    pub fn bits(self) -> u32 {
        self.bits
    }

    /// Context with doubled mantissa, for the one-shot precision-exhausted retry.
    pub fn doubled(self) -> Self {
        Ctx::new(self.bits * 2)
    }

    pub fn re(self, v: f64) -> Real {
        Float::with_val(self.bits, v)
    }

    pub fn re_u(self, v: u64) -> Real {
        Float::with_val(self.bits, v)
    }

    pub fn re_i(self, v: i64) -> Real {
        Float::with_val(self.bits, v)
    }

    pub fn zero(self) -> Real {
        Float::with_val(self.bits, 0)
    }

    pub fn one(self) -> Real {
        Float::with_val(self.bits, 1)
    }

    pub fn pi(self) -> Real {
        Float::with_val(self.bits, rug::float::Constant::Pi)
    }

    /// Working epsilon 2^(1-bits).
    pub fn eps(self) -> Real {
        let mut e = self.one();
        e >>= self.bits - 1;
        e
    }

    pub fn eps_f64(self) -> f64 {
        2f64.powi(1 - self.bits.min(2000) as i32)
    }

    pub fn cx(self, re: f64, im: f64) -> CFloat {
        CFloat {
            re: self.re(re),
            im: self.re(im),
        }
    }

    pub fn cx_real(self, re: Real) -> CFloat {
        CFloat {
            im: self.zero(),
            re,
        }
    }

    /// i (the imaginary unit).
    pub fn i(self) -> CFloat {
        self.cx(0.0, 1.0)
    }

    pub fn czero(self) -> CFloat {
        self.cx(0.0, 0.0)
    }

    pub fn parse(self, s: &str) -> Option<Real> {
        Float::parse(s).ok().map(|p| Float::with_val(self.bits, p))
    }

    /// Significant decimal digits carried by this context (for serialization).
    pub fn digits(self) -> usize {
        (self.bits as f64 * std::f64::consts::LOG10_2).ceil() as usize + 2
    }

    pub fn gamma(self, x: &Real) -> Real {
        Float::with_val(self.bits, x.gamma_ref())
    }

    pub fn gamma_f64(self, x: f64) -> Real {
        self.re(x).gamma()
    }

    /// Upper incomplete gamma Γ(a, x).
    pub fn gamma_upper(self, a: &Real, x: &Real) -> Real {
        a.clone().gamma_inc(x)
    }

    /// Euler beta B(a, b) = Γ(a)Γ(b)/Γ(a+b).
    pub fn beta(self, a: &Real, b: &Real) -> Real {
        let gab = self.gamma(&self.re_sum(a, b));
        self.gamma(a) * self.gamma(b) / gab
    }

    fn re_sum(self, a: &Real, b: &Real) -> Real {
        Float::with_val(self.bits, a + b)
    }

    pub fn pow(self, base: &Real, exp: &Real) -> Real {
        use rug::ops::Pow;
        Float::with_val(self.bits, base.pow(exp))
    }

    pub fn pow_f64(self, base: &Real, exp: f64) -> Real {
        self.pow(base, &self.re(exp))
    }
}

/// Complex value with both parts at the context precision.
#[derive(Clone, PartialEq)]
pub struct CFloat {
    pub re: Real,
    pub im: Real,
}

impl CFloat {
    pub fn prec(&self) -> u32 {
        self.re.prec()
    }

    fn p(&self) -> u32 {
        self.re.prec()
    }

    pub fn add(&self, rhs: &CFloat) -> CFloat {
        CFloat {
            re: Float::with_val(self.p(), &self.re + &rhs.re),
            im: Float::with_val(self.p(), &self.im + &rhs.im),
        }
    }

    pub fn sub(&self, rhs: &CFloat) -> CFloat {
        CFloat {
            re: Float::with_val(self.p(), &self.re - &rhs.re),
            im: Float::with_val(self.p(), &self.im - &rhs.im),
        }
    }

    pub fn mul(&self, rhs: &CFloat) -> CFloat {
        let p = self.p();
        let mut re = Float::with_val(p, &self.re * &rhs.re);
        re -= Float::with_val(p, &self.im * &rhs.im);
        let mut im = Float::with_val(p, &self.re * &rhs.im);
        im += Float::with_val(p, &self.im * &rhs.re);
        CFloat { re, im }
    }

    pub fn div(&self, rhs: &CFloat) -> CFloat {
        let p = self.p();
        let mut den = Float::with_val(p, &rhs.re * &rhs.re);
        den += Float::with_val(p, &rhs.im * &rhs.im);
        let mut re = Float::with_val(p, &self.re * &rhs.re);
        re += Float::with_val(p, &self.im * &rhs.im);
        let mut im = Float::with_val(p, &self.im * &rhs.re);
        im -= Float::with_val(p, &self.re * &rhs.im);
        CFloat {
            re: re / &den,
            im: im / &den,
        }
    }

    pub fn add_real(&self, rhs: &Real) -> CFloat {
        CFloat {
            re: Float::with_val(self.p(), &self.re + rhs),
            im: self.im.clone(),
        }
    }

    pub fn sub_real(&self, rhs: &Real) -> CFloat {
        CFloat {
            re: Float::with_val(self.p(), &self.re - rhs),
            im: self.im.clone(),
        }
    }

    pub fn mul_real(&self, rhs: &Real) -> CFloat {
        CFloat {
            re: Float::with_val(self.p(), &self.re * rhs),
            im: Float::with_val(self.p(), &self.im * rhs),
        }
    }

    pub fn div_real(&self, rhs: &Real) -> CFloat {
        CFloat {
            re: Float::with_val(self.p(), &self.re / rhs),
            im: Float::with_val(self.p(), &self.im / rhs),
        }
    }

    pub fn neg(&self) -> CFloat {
        CFloat {
            re: Float::with_val(self.p(), -&self.re),
            im: Float::with_val(self.p(), -&self.im),
        }
    }

    pub fn conj(&self) -> CFloat {
        CFloat {
            re: self.re.clone(),
            im: Float::with_val(self.p(), -&self.im),
        }
    }

    pub fn recip(&self) -> CFloat {
        let p = self.p();
        let one = CFloat {
            re: Float::with_val(p, 1),
            im: Float::with_val(p, 0),
        };
        one.div(self)
    }

    pub fn sqr(&self) -> CFloat {
        self.mul(self)
    }

    pub fn norm_sqr(&self) -> Real {
        let p = self.p();
        let mut n = Float::with_val(p, &self.re * &self.re);
        n += Float::with_val(p, &self.im * &self.im);
        n
    }

    pub fn abs(&self) -> Real {
        self.norm_sqr().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    /// In-place `self += a * b` with a complex and b real, no extra allocation
    /// beyond the incomplete-computation temporaries.
    pub fn add_mul_real(&mut self, a: &CFloat, b: &Real) {
        self.re += Float::with_val(self.re.prec(), &a.re * b);
        self.im += Float::with_val(self.im.prec(), &a.im * b);
    }

    pub fn to_f64_pair(&self) -> (f64, f64) {
        (self.re.to_f64(), self.im.to_f64())
    }
}

impl fmt::Debug for CFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:e}, {:e})", self.re.to_f64(), self.im.to_f64())
    }
}

macro_rules! cfloat_binop {
    ($trait:ident, $method:ident, $inherent:ident) => {
        impl std::ops::$trait<&CFloat> for &CFloat {
            type Output = CFloat;
            fn $method(self, rhs: &CFloat) -> CFloat {
                self.$inherent(rhs)
            }
        }
        impl std::ops::$trait<CFloat> for CFloat {
            type Output = CFloat;
            fn $method(self, rhs: CFloat) -> CFloat {
                CFloat::$inherent(&self, &rhs)
            }
        }
        impl std::ops::$trait<&CFloat> for CFloat {
            type Output = CFloat;
            fn $method(self, rhs: &CFloat) -> CFloat {
                CFloat::$inherent(&self, rhs)
            }
        }
    };
}

cfloat_binop!(Add, add, add);
cfloat_binop!(Sub, sub, sub);
cfloat_binop!(Mul, mul, mul);
cfloat_binop!(Div, div, div);

impl std::ops::Neg for &CFloat {
    type Output = CFloat;
    fn neg(self) -> CFloat {
        CFloat::neg(self)
    }
}

/// Canonical scientific-notation rendering with `sig` significant digits:
/// `-d.ddd...e<exp>`. Deterministic for a given (value, sig) pair.
pub fn format_real(x: &Real, sig: usize) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if *x < 0 { "-inf" } else { "inf" }.to_string();
    }
    if x.is_zero() {
        return "0.0e0".to_string();
    }
    let (neg, digits, exp) = to_digits_exp(x, sig);
    let exp10 = exp.unwrap_or(0) - 1;
    let (head, tail) = digits.split_at(1);
    let sign = if neg { "-" } else { "" };
    if tail.is_empty() {
        format!("{sign}{head}.0e{exp10}")
    } else {
        format!("{sign}{head}.{tail}e{exp10}")
    }
}

fn to_digits_exp(x: &Real, sig: usize) -> (bool, String, Option<i32>) {
    let (s, exp) = x.to_string_radix(10, Some(sig.max(2))).split_exp();
    let neg = s.starts_with('-');
    let digits: String = s.chars().filter(|c| c.is_ascii_digit()).collect();
    (neg, digits, exp)
}

trait SplitExp {
    fn split_exp(&self) -> (String, Option<i32>);
}

impl SplitExp for String {
    fn split_exp(&self) -> (String, Option<i32>) {
        // MPFR renders like "3.333e-1" or "-1.25e4"; recover mantissa digits
        // and a base-10 exponent meaning digits[0] sits at 10^(exp-1).
        if let Some(pos) = self.find(['e', 'E']) {
            let mant = self[..pos].to_string();
            let e: i32 = self[pos + 1..].parse().unwrap_or(0);
            let point = mant.find('.');
            let int_len = match point {
                Some(p) => mant[..p].trim_start_matches('-').len() as i32,
                None => mant.trim_start_matches('-').len() as i32,
            };
            (mant, Some(e + int_len))
        } else {
            let point = self.find('.');
            let int_len = match point {
                Some(p) => self[..p].trim_start_matches('-').len() as i32,
                None => self.trim_start_matches('-').len() as i32,
            };
            (self.clone(), Some(int_len))
        }
    }
}

/// Format for reports at a context's precision.
pub fn format_at(ctx: Ctx, x: &Real) -> String {
    format_real(x, ctx.digits())
}

pub fn real_is_special(x: &Real) -> bool {
    x.is_nan() || x.is_infinite()
}

#[allow(dead_code)]
fn special_of(x: &Real) -> Option<Special> {
    if x.is_nan() {
        Some(Special::Nan)
    } else if x.is_infinite() {
        Some(if *x < 0 {
            Special::NegInfinity
        } else {
            Special::Infinity
        })
    } else {
        None
    }
}
