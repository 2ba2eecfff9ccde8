//! Analytical oracles used as ground truth in tests and verification:
//! classical Laguerre/Jacobi recurrence data, the Barnes-G Hankel product
//! (realized through the telescoping factorial/Gamma product), and the
//! catalogued closed-form divided-difference kernels of the named weight
//! families.

use crate::error::{Error, Result};
use crate::precision::{CFloat, Ctx, Real};
use crate::weights::{Atom, Family, WeightSpec};

/// Exact-formula recurrence data for one degree.
#[derive(Clone, Debug)]
pub struct ClassicalValues {
    pub alpha: Real,
    pub beta: Real,
    pub h: Real,
    /// Sub-leading coefficient p(n) of the monic polynomial.
    pub p1: Real,
}

/// Monic Laguerre data: alpha_n = 2n+lambda+1, beta_n = n(n+lambda),
/// h_n = n! Gamma(n+lambda+1), p(n) = -n(n+lambda).
pub fn laguerre_classical(ctx: Ctx, n: usize, lambda: f64) -> Result<ClassicalValues> {
    if !(lambda > -1.0) {
        return Err(Error::ExponentOutOfRange(format!("lambda = {lambda}")));
    }
    let nf = ctx.re_u(n as u64);
    let lam = ctx.re(lambda);
    let alpha = ctx.re_u(2 * n as u64) + &lam + ctx.one();
    let beta = if n == 0 {
        ctx.zero()
    } else {
        nf.clone() * (nf.clone() + &lam)
    };
    let h = ctx.gamma(&(nf.clone() + ctx.one())) * ctx.gamma(&(nf.clone() + &lam + ctx.one()));
    let p1 = -(nf.clone() * (nf + &lam));
    Ok(ClassicalValues { alpha, beta, h, p1 })
}

/// Monic Jacobi data on [-1,1] for the weight (1-x)^alpha (1+x)^beta.
pub fn jacobi_classical(ctx: Ctx, n: usize, alpha: f64, beta: f64) -> Result<ClassicalValues> {
    if !(alpha > -1.0) || !(beta > -1.0) {
        return Err(Error::ExponentOutOfRange(format!(
            "alpha = {alpha}, beta = {beta}"
        )));
    }
    let a = ctx.re(alpha);
    let b = ctx.re(beta);
    let ab = a.clone() + &b;
    let nf = ctx.re_u(n as u64);
    let two_n_ab = ctx.re_u(2 * n as u64) + &ab;

    let alpha_n = jacobi_alpha_coeff(ctx, n, alpha, beta);
    let beta_n = jacobi_beta_coeff(ctx, n, alpha, beta);

    // p(n) = n(alpha-beta)/(2n+alpha+beta); p(0) = 0.
    let p1 = if n == 0 {
        ctx.zero()
    } else {
        nf.clone() * (a.clone() - &b) / two_n_ab
    };

    // h_n = h_0 prod_{j<=n} beta_j with h_0 = 2^(a+b+1) B(a+1, b+1).
    let mut h = ctx.pow(&ctx.re(2.0), &(ab.clone() + ctx.one()))
        * ctx.beta(&(a.clone() + ctx.one()), &(b.clone() + ctx.one()));
    for j in 1..=n {
        h *= jacobi_beta_coeff(ctx, j, alpha, beta);
    }

    Ok(ClassicalValues {
        alpha: alpha_n,
        beta: beta_n,
        h,
        p1,
    })
}

/// alpha_n for the monic Jacobi recurrence; the n=0 case uses the reduced
/// form (beta-alpha)/(alpha+beta+2) to avoid the 0/0 when alpha+beta = 0.
pub fn jacobi_alpha_coeff(ctx: Ctx, n: usize, alpha: f64, beta: f64) -> Real {
    let a = ctx.re(alpha);
    let b = ctx.re(beta);
    let ab = a.clone() + &b;
    if n == 0 {
        (b - &a) / (ab + ctx.re(2.0))
    } else {
        let two_n_ab = ctx.re_u(2 * n as u64) + &ab;
        let num = b.clone().square() - a.clone().square();
        let den = two_n_ab.clone() * (two_n_ab + ctx.re(2.0));
        num / den
    }
}

/// beta_n for the monic Jacobi recurrence (beta_0 := 0). At n = 1 the factors
/// (n+alpha+beta) and (2n-1+alpha+beta) coincide and are cancelled, removing
/// the 0/0 at alpha+beta = -1.
pub fn jacobi_beta_coeff(ctx: Ctx, n: usize, alpha: f64, beta: f64) -> Real {
    if n == 0 {
        return ctx.zero();
    }
    let a = ctx.re(alpha);
    let b = ctx.re(beta);
    let ab = a.clone() + &b;
    if n == 1 {
        let num = ctx.re(4.0) * (ctx.one() + &a) * (ctx.one() + &b);
        let den = (ab.clone() + ctx.re(2.0)).square() * (ab + ctx.re(3.0));
        return num / den;
    }
    let jf = ctx.re_u(n as u64);
    let two_j_ab = ctx.re_u(2 * n as u64) + &ab;
    let num = ctx.re(4.0) * jf.clone() * (jf.clone() + &a) * (jf.clone() + &b) * (jf.clone() + &ab);
    let den = two_j_ab.clone().square() * (two_j_ab.clone() + ctx.one()) * (two_j_ab - ctx.one());
    num / den
}

/// Hankel determinant D_n for the classical Laguerre weight, via the
/// telescoping product prod_{j<n} j! Gamma(j+lambda+1) (the Barnes-G quotient
/// G(n+1)G(n+lambda+1)/G(lambda+1) realized without a general G evaluator).
pub fn barnes_g_hankel(ctx: Ctx, n: usize, lambda: f64) -> Result<Real> {
    if !(lambda > -1.0) {
        return Err(Error::ExponentOutOfRange(format!("lambda = {lambda}")));
    }
    let lam = ctx.re(lambda);
    let mut d = ctx.one();
    for j in 0..n {
        let jf = ctx.re_u(j as u64);
        d *= ctx.gamma(&(jf.clone() + ctx.one())) * ctx.gamma(&(jf + &lam + ctx.one()));
    }
    Ok(d)
}

/// Coefficient of x^i in the monic Laguerre P_n:
/// (-1)^(n-i) C(n,i) prod_{m=i+1}^{n} (lambda+m).
pub fn laguerre_monic_coefficient(ctx: Ctx, n: usize, i: usize, lambda: f64) -> Real {
    assert!(i <= n);
    let mut c = ctx.one();
    // binomial C(n, i)
    for k in 0..(n - i) {
        c *= ctx.re_u((n - k) as u64);
        c /= ctx.re_u((k + 1) as u64);
    }
    for m in (i + 1)..=n {
        c *= ctx.re(lambda) + ctx.re_u(m as u64);
    }
    if (n - i) % 2 == 1 {
        c = -c;
    }
    c
}

/// Catalogued example families with closed-form divided-difference kernels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NamedFamily {
    ClassicalLaguerre,
    ChenMcKay,
    ChenIts,
    ClassicalJacobi,
    JacobiExp,
    SymExpQuad,
    SymPowerK,
    SymExpInvX2,
    SymExpInvOneMinusX2,
    PollaczekJacobi,
    ShiftedJacobiPow,
}

impl NamedFamily {
    pub fn label(self) -> &'static str {
        match self {
            NamedFamily::ClassicalLaguerre => "classical_laguerre",
            NamedFamily::ChenMcKay => "chen_mckay",
            NamedFamily::ChenIts => "chen_its",
            NamedFamily::ClassicalJacobi => "classical_jacobi",
            NamedFamily::JacobiExp => "jacobi_exp",
            NamedFamily::SymExpQuad => "sym_exp_quad",
            NamedFamily::SymPowerK => "sym_power_k",
            NamedFamily::SymExpInvX2 => "sym_exp_inv_x2",
            NamedFamily::SymExpInvOneMinusX2 => "sym_exp_inv_one_minus_x2",
            NamedFamily::PollaczekJacobi => "pollaczek_jacobi",
            NamedFamily::ShiftedJacobiPow => "shifted_jacobi_pow",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        Some(match s {
            "classical_laguerre" => NamedFamily::ClassicalLaguerre,
            "chen_mckay" => NamedFamily::ChenMcKay,
            "chen_its" => NamedFamily::ChenIts,
            "classical_jacobi" => NamedFamily::ClassicalJacobi,
            "jacobi_exp" => NamedFamily::JacobiExp,
            "sym_exp_quad" => NamedFamily::SymExpQuad,
            "sym_power_k" => NamedFamily::SymPowerK,
            "sym_exp_inv_x2" => NamedFamily::SymExpInvX2,
            "sym_exp_inv_one_minus_x2" => NamedFamily::SymExpInvOneMinusX2,
            "pollaczek_jacobi" => NamedFamily::PollaczekJacobi,
            "shifted_jacobi_pow" => NamedFamily::ShiftedJacobiPow,
            _ => return None,
        })
    }
}

/// Closed-form kernel for a catalogued family, with parameters taken from the
/// matching `WeightSpec`. Serves as oracle for `WeightSpec::kernel_divdiff`.
pub fn named_kernel(
    ctx: Ctx,
    label: NamedFamily,
    w: &WeightSpec,
    z: &CFloat,
    x: &Real,
) -> Result<CFloat> {
    let one = ctx.cx(1.0, 0.0);
    let mismatch = |msg: &str| Err(Error::FamilyMismatch(format!("{}: {msg}", label.label())));
    // parameters are promoted before any arithmetic so the oracle agrees with
    // the divided-difference route at working precision
    let ab_sum = |w: &WeightSpec| -> Real {
        let (a, b) = w.alpha_beta().unwrap_or((0.0, 0.0));
        ctx.re(a) + ctx.re(b)
    };
    match label {
        NamedFamily::ClassicalLaguerre => {
            if w.family() != Family::Laguerre
                || smooth_atom(w, |a| matches!(a, Atom::ExpLinear { c } if *c == 1.0)).is_none()
            {
                return mismatch("expected x^lambda e^{-x}");
            }
            Ok(one)
        }
        NamedFamily::ChenMcKay => {
            let Some(Atom::PowerShift { c, gamma }) =
                smooth_atom(w, |a| matches!(a, Atom::PowerShift { .. }))
            else {
                return mismatch("expected (x+t)^gamma atom");
            };
            if w.family() != Family::Laguerre {
                return mismatch("expected Laguerre family");
            }
            // 1 - gamma t / ((x+t)(z+t))
            let t = ctx.re(*c);
            let num = ctx.re(*gamma) * &t;
            let den = z.add_real(&t).mul_real(&(x.clone() + &t));
            Ok(one.sub(&ctx.cx_real(num).div(&den)))
        }
        NamedFamily::ChenIts => {
            let Some(Atom::ExpInvX { s }) = smooth_atom(w, |a| matches!(a, Atom::ExpInvX { .. }))
            else {
                return mismatch("expected e^{-s/x} atom");
            };
            if w.family() != Family::Laguerre {
                return mismatch("expected Laguerre family");
            }
            // 1 + s/(zx)
            let zx = z.mul_real(x);
            Ok(one.add(&zx.recip().mul_real(&ctx.re(*s))))
        }
        NamedFamily::ClassicalJacobi => {
            if w.family() != Family::Jacobi || !w.atoms().is_empty() {
                return mismatch("expected bare Jacobi weight");
            }
            Ok(ctx.cx_real(ab_sum(w)))
        }
        NamedFamily::JacobiExp => {
            let Some(Atom::ExpLinear { c }) =
                smooth_atom(w, |a| matches!(a, Atom::ExpLinear { .. }))
            else {
                return mismatch("expected e^{-tx} atom");
            };
            if w.family() != Family::Jacobi {
                return mismatch("expected Jacobi family");
            }
            // -t(x+z) + alpha + beta
            let t = ctx.re(*c);
            Ok(z.add_real(x).mul_real(&(-t)).add_real(&ab_sum(w)))
        }
        NamedFamily::SymExpQuad => {
            let Some(Atom::ExpQuad { t }) = smooth_atom(w, |a| matches!(a, Atom::ExpQuad { .. }))
            else {
                return mismatch("expected e^{-tx^2} atom");
            };
            let Some((a, b)) = w.alpha_beta() else {
                return mismatch("expected Jacobi exponents");
            };
            if w.family() != Family::Jacobi || a != b {
                return mismatch("expected symmetric (1-x^2)^alpha weight");
            }
            // -2t(x^2 + zx + z^2 - 1) + 2 alpha
            let poly = z
                .sqr()
                .add(&z.mul_real(x))
                .add_real(&(x.clone().square() - ctx.one()));
            Ok(poly.mul_real(&ctx.re(-2.0 * t)).add_real(&ctx.re(2.0 * a)))
        }
        NamedFamily::SymPowerK => {
            let Some(Atom::PowerOneMinusK2X2 { k2, gamma }) =
                smooth_atom(w, |a| matches!(a, Atom::PowerOneMinusK2X2 { .. }))
            else {
                return mismatch("expected (1-k^2x^2)^gamma atom");
            };
            let Some((a, b)) = w.alpha_beta() else {
                return mismatch("expected Jacobi exponents");
            };
            if w.family() != Family::Jacobi || a != b {
                return mismatch("expected symmetric weight");
            }
            // 2(alpha+gamma) + gamma(1-1/k^2)[1/((z-1/k)(x-1/k)) + 1/((z+1/k)(x+1/k))]
            let inv_k = ctx.re(*k2).sqrt().recip();
            let c0 = ctx.re(2.0) * (ctx.re(a) + ctx.re(*gamma));
            let fac = ctx.re(*gamma) * (ctx.one() - ctx.re(*k2).recip());
            let t1 = z.sub_real(&inv_k).mul_real(&(x.clone() - &inv_k)).recip();
            let t2 = z.add_real(&inv_k).mul_real(&(x.clone() + &inv_k)).recip();
            Ok(t1.add(&t2).mul_real(&fac).add_real(&c0))
        }
        NamedFamily::SymExpInvX2 => {
            let Some(Atom::ExpInvX2 { t }) = smooth_atom(w, |a| matches!(a, Atom::ExpInvX2 { .. }))
            else {
                return mismatch("expected e^{-t/x^2} atom");
            };
            let Some((a, b)) = w.alpha_beta() else {
                return mismatch("expected Jacobi exponents");
            };
            if w.family() != Family::Jacobi || a != b {
                return mismatch("expected symmetric weight");
            }
            // 2a + 2t[ 1/(z x^3) + 1/(z^2 x^2) + (1/z^3 - 1/z)/x ]
            let zi = z.recip();
            let xi = ctx.re(1.0) / x.clone();
            let term1 = zi.mul_real(&(xi.clone() * xi.clone() * xi.clone()));
            let term2 = zi.sqr().mul_real(&(xi.clone() * xi.clone()));
            let term3 = zi.sqr().mul(&zi).sub(&zi).mul_real(&xi);
            let sum = term1.add(&term2).add(&term3);
            Ok(sum.mul_real(&ctx.re(2.0 * t)).add_real(&ctx.re(2.0 * a)))
        }
        NamedFamily::SymExpInvOneMinusX2 => {
            let Some(Atom::ExpInvOneMinusX2 { t }) =
                smooth_atom(w, |a| matches!(a, Atom::ExpInvOneMinusX2 { .. }))
            else {
                return mismatch("expected e^{-t/(1-x^2)} atom");
            };
            let Some((a, b)) = w.alpha_beta() else {
                return mismatch("expected Jacobi exponents");
            };
            if w.family() != Family::Jacobi || a != b {
                return mismatch("expected symmetric weight");
            }
            // 2a + 2t(1+zx)/((1-z^2)(1-x^2))
            let num = z.mul_real(x).add(&one).mul_real(&ctx.re(2.0 * t));
            let den = one
                .sub(&z.sqr())
                .mul_real(&(ctx.one() - x.clone().square()));
            Ok(num.div(&den).add_real(&ctx.re(2.0 * a)))
        }
        NamedFamily::PollaczekJacobi => {
            let Some(Atom::ExpInvX { s }) = smooth_atom(w, |a| matches!(a, Atom::ExpInvX { .. }))
            else {
                return mismatch("expected e^{-t/x} atom");
            };
            if w.family() != Family::ShiftedJacobi {
                return mismatch("expected shifted-Jacobi family");
            }
            // t/(xz) + alpha + beta
            let zx = z.mul_real(x);
            Ok(zx.recip().mul_real(&ctx.re(*s)).add_real(&ab_sum(w)))
        }
        NamedFamily::ShiftedJacobiPow => {
            let Some(Atom::PowerShiftNeg { t, gamma }) =
                smooth_atom(w, |a| matches!(a, Atom::PowerShiftNeg { .. }))
            else {
                return mismatch("expected (x-t)^gamma atom");
            };
            if w.family() != Family::ShiftedJacobi {
                return mismatch("expected shifted-Jacobi family");
            }
            // alpha + beta + gamma + gamma t(1-t)/((z-t)(x-t))
            let c0 = ab_sum(w) + ctx.re(*gamma);
            let num = ctx.re(*gamma) * ctx.re(*t) * (ctx.one() - ctx.re(*t));
            let den = z.sub_real(&ctx.re(*t)).mul_real(&(x.clone() - ctx.re(*t)));
            Ok(ctx.cx_real(num).div(&den).add_real(&c0))
        }
    }
}

fn smooth_atom(w: &WeightSpec, pred: impl Fn(&Atom) -> bool) -> Option<&Atom> {
    w.atoms().iter().find(|a| pred(a))
}
