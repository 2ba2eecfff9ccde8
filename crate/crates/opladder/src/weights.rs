//! Weight families and their deformations.
//!
//! A weight is `endpoint-factor * product(atoms) * step-factor * fh-factor` on
//! the family support: `x^lambda` on `[0, inf)` (Laguerre),
//! `(1-x)^alpha (1+x)^beta` on `[-1, 1]` (Jacobi), or `x^alpha (1-x)^beta` on
//! `[0, 1]` (shifted Jacobi). The potential is `v(x) = -ln w_s(x)` of the
//! *smooth* part only: jump and Fisher-Hartwig factors never contribute to
//! `v'`; they are handled as residue/singular-integral corrections downstream.
//!
//! `v'` and the divided-difference kernels are assembled per atom from exact
//! closed forms (every supported atom has a rational log-derivative), never by
//! numerical differentiation.

use crate::error::{Error, Result};
use crate::precision::{CFloat, Ctx, Real};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Laguerre,
    Jacobi,
    ShiftedJacobi,
}

impl Family {
    pub fn support(self) -> (f64, f64) {
        match self {
            Family::Laguerre => (0.0, f64::INFINITY),
            Family::Jacobi => (-1.0, 1.0),
            Family::ShiftedJacobi => (0.0, 1.0),
        }
    }

    /// Bounded reference box used for z-sampling (the support hull; for the
    /// semi-infinite Laguerre support a fixed representative box is used).
    pub fn hull(self) -> (f64, f64) {
        match self {
            Family::Laguerre => (0.0, 4.0),
            Family::Jacobi => (-1.0, 1.0),
            Family::ShiftedJacobi => (0.0, 1.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Laguerre => "laguerre",
            Family::Jacobi => "jacobi",
            Family::ShiftedJacobi => "shifted_jacobi",
        }
    }
}

/// Endpoint exponents: `lambda` for Laguerre, `(alpha, beta)` otherwise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Exponents {
    Lambda(f64),
    AlphaBeta { alpha: f64, beta: f64 },
}

/// Smooth deformation factors of the weight.
///
/// Per-atom admissibility (enforced in [`WeightSpec::new`]):
/// - `ExpLinear` `e^{-cx}`: any family; on Laguerre requires `c > 0`.
/// - `PowerShift` `(x+c)^gamma`: needs `x + c > 0` on the support, so `c > 0`
///   (Laguerre/shifted) or `c > 1` (Jacobi).
/// - `ExpInvX` `e^{-s/x}`, `s >= 0`: Laguerre/shifted only (the Jacobi support
///   contains 0 where the factor blows up from the left).
/// - `ExpQuad` `e^{-t x^2}`: any family; on Laguerre requires `t >= 0`.
/// - `ExpInvX2` `e^{-t/x^2}`, `t >= 0`: any family (0 is interior for Jacobi;
///   the factor decays to zero there from both sides).
/// - `ExpInvOneMinusX2` `e^{-t/(1-x^2)}`, `t >= 0`: Jacobi only.
/// - `PowerOneMinusK2X2` `(1-k^2 x^2)^gamma`, `0 < k2 < 1`: Jacobi/shifted only
///   (inadmissible on an unbounded support).
/// - `PowerShiftNeg` `(x-t)^gamma` with `t` strictly below the support.
///
/// Laguerre weights additionally require at least one decaying atom
/// (`ExpLinear` with `c > 0` or `ExpQuad` with `t > 0`) so that all moments
/// exist.
#[derive(Clone, Debug, PartialEq)]
pub enum Atom {
    ExpLinear { c: f64 },
    PowerShift { c: f64, gamma: f64 },
    ExpInvX { s: f64 },
    ExpQuad { t: f64 },
    ExpInvX2 { t: f64 },
    ExpInvOneMinusX2 { t: f64 },
    PowerOneMinusK2X2 { k2: f64, gamma: f64 },
    PowerShiftNeg { t: f64, gamma: f64 },
}

impl Atom {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Atom::ExpLinear { .. } => "exp_linear",
            Atom::PowerShift { .. } => "power_shift",
            Atom::ExpInvX { .. } => "exp_inv_x",
            Atom::ExpQuad { .. } => "exp_quad",
            Atom::ExpInvX2 { .. } => "exp_inv_x2",
            Atom::ExpInvOneMinusX2 { .. } => "exp_inv_one_minus_x2",
            Atom::PowerOneMinusK2X2 { .. } => "power_one_minus_k2x2",
            Atom::PowerShiftNeg { .. } => "power_shift_neg",
        }
    }

    /// Real singular points of the atom's log-derivative.
    pub fn singularities(&self) -> Vec<f64> {
        match self {
            Atom::ExpLinear { .. } | Atom::ExpQuad { .. } => vec![],
            Atom::ExpInvX { .. } | Atom::ExpInvX2 { .. } => vec![0.0],
            Atom::ExpInvOneMinusX2 { .. } => vec![-1.0, 1.0],
            Atom::PowerShift { c, .. } => vec![-c],
            Atom::PowerOneMinusK2X2 { k2, .. } => {
                let k = k2.sqrt();
                vec![-1.0 / k, 1.0 / k]
            }
            Atom::PowerShiftNeg { t, .. } => vec![*t],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JumpPoint {
    pub t: f64,
    pub omega: f64,
}

/// Step factor `omega0 + sum_k omega_k theta(x - t_k)`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct JumpSpec {
    pub omega0: f64,
    pub points: Vec<JumpPoint>,
}

/// Fisher-Hartwig factor `|x-t|^gamma (A + B theta(x-t))`, `gamma > 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FhSpec {
    pub t: f64,
    pub gamma: f64,
    pub a: f64,
    pub b: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightSpec {
    family: Family,
    exponents: Exponents,
    atoms: Vec<Atom>,
    jumps: Option<JumpSpec>,
    fh: Option<FhSpec>,
}

impl WeightSpec {
    /// Validating constructor; all type invariants hold on success.
    pub fn new(
        family: Family,
        exponents: Exponents,
        atoms: Vec<Atom>,
        jumps: Option<JumpSpec>,
        fh: Option<FhSpec>,
    ) -> Result<Self> {
        match (family, exponents) {
            (Family::Laguerre, Exponents::Lambda(l)) => {
                if !(l > -1.0) || !l.is_finite() {
                    return Err(Error::ExponentOutOfRange(format!(
                        "lambda = {l}, need > -1"
                    )));
                }
            }
            (Family::Jacobi | Family::ShiftedJacobi, Exponents::AlphaBeta { alpha, beta }) => {
                if !(alpha > -1.0) || !alpha.is_finite() {
                    return Err(Error::ExponentOutOfRange(format!(
                        "alpha = {alpha}, need > -1"
                    )));
                }
                if !(beta > -1.0) || !beta.is_finite() {
                    return Err(Error::ExponentOutOfRange(format!(
                        "beta = {beta}, need > -1"
                    )));
                }
            }
            _ => {
                return Err(Error::Config(
                    "exponent kind does not match family".to_string(),
                ))
            }
        }

        let (lo, hi) = family.support();
        for atom in &atoms {
            validate_atom(family, atom)?;
        }
        if family == Family::Laguerre {
            let decays = atoms.iter().any(|a| {
                matches!(a, Atom::ExpLinear { c } if *c > 0.0)
                    || matches!(a, Atom::ExpQuad { t } if *t > 0.0)
            });
            if !decays {
                return Err(Error::InadmissibleWeight(
                    "Laguerre weight needs a decaying atom (exp_linear c>0 or exp_quad t>0)"
                        .to_string(),
                ));
            }
        }

        if let Some(j) = &jumps {
            let mut prev = f64::NEG_INFINITY;
            let mut partial = j.omega0;
            if partial < 0.0 {
                return Err(Error::NegativeWeight(format!("omega0 = {}", j.omega0)));
            }
            for p in &j.points {
                if !(p.t > prev) {
                    return Err(Error::BadSupportPoint(
                        "jump points must be strictly increasing".to_string(),
                    ));
                }
                if p.t < lo || p.t > hi {
                    return Err(Error::BadSupportPoint(format!(
                        "jump point {} outside support",
                        p.t
                    )));
                }
                partial += p.omega;
                if partial < 0.0 {
                    return Err(Error::NegativeWeight(format!(
                        "partial jump sum through t = {} is {partial}",
                        p.t
                    )));
                }
                prev = p.t;
            }
        }

        if let Some(f) = &fh {
            if !(f.gamma > 0.0) {
                return Err(Error::ExponentOutOfRange(format!(
                    "fh gamma = {}, need > 0",
                    f.gamma
                )));
            }
            if !(f.t > lo) || !(f.t < hi) {
                return Err(Error::BadSupportPoint(format!(
                    "fh point {} not interior to support",
                    f.t
                )));
            }
            if f.a < 0.0 || f.a + f.b < 0.0 {
                return Err(Error::NegativeWeight(format!(
                    "fh side values A = {}, A+B = {}",
                    f.a,
                    f.a + f.b
                )));
            }
            if let Some(j) = &jumps {
                if j.points.iter().any(|p| p.t == f.t) {
                    return Err(Error::BadSupportPoint(
                        "fh point coincides with a jump point".to_string(),
                    ));
                }
            }
        }

        let spec = WeightSpec {
            family,
            exponents,
            atoms,
            jumps,
            fh,
        };
        spec.spot_check_nonnegative()?;
        Ok(spec)
    }

    /// Grid spot check of w(x) >= 0 on the open support.
    fn spot_check_nonnegative(&self) -> Result<()> {
        let ctx = Ctx::new(64);
        let (lo, hi) = self.family.support();
        let hi = if hi.is_finite() { hi } else { 16.0 };
        for i in 1..32 {
            let x = lo + (hi - lo) * (i as f64) / 32.0;
            if self.singular_points().iter().any(|s| (s - x).abs() < 1e-12) {
                continue;
            }
            let wv = self.weight_at(ctx, &ctx.re(x))?;
            if wv < 0 {
                return Err(Error::NegativeWeight(format!("w({x}) < 0")));
            }
        }
        Ok(())
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn exponents(&self) -> Exponents {
        self.exponents
    }

    pub fn lambda(&self) -> Option<f64> {
        match self.exponents {
            Exponents::Lambda(l) => Some(l),
            _ => None,
        }
    }

    pub fn alpha_beta(&self) -> Option<(f64, f64)> {
        match self.exponents {
            Exponents::AlphaBeta { alpha, beta } => Some((alpha, beta)),
            _ => None,
        }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn jumps(&self) -> Option<&JumpSpec> {
        self.jumps.as_ref()
    }

    pub fn fh(&self) -> Option<&FhSpec> {
        self.fh.as_ref()
    }

    pub fn support(&self) -> (f64, f64) {
        self.family.support()
    }

    /// Real points where the smooth weight or `v'` is singular (atom
    /// singularities; support endpoints are not listed).
    pub fn singular_points(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = self.atoms.iter().flat_map(|a| a.singularities()).collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// Pole set for z-admissibility: family prefactor poles, jump points,
    /// the FH point, and atom poles of `v'`.
    pub fn z_poles(&self) -> Vec<f64> {
        let mut pts = match self.family {
            Family::Laguerre => vec![0.0],
            Family::Jacobi => vec![-1.0, 1.0],
            Family::ShiftedJacobi => vec![0.0, 1.0],
        };
        pts.extend(self.singular_points());
        if let Some(j) = &self.jumps {
            pts.extend(j.points.iter().map(|p| p.t));
        }
        if let Some(f) = &self.fh {
            pts.push(f.t);
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// Product of the deformation atoms alone.
    pub(crate) fn atoms_product(&self, ctx: Ctx, x: &Real) -> Real {
        let mut w = ctx.one();
        for atom in &self.atoms {
            w *= atom_value(ctx, atom, x);
        }
        w
    }

    /// Endpoint factors with either side optionally skipped (for quadrature
    /// rules that absorb the corresponding singular factor).
    ///
    /// "Left" is the factor singular at the support infimum: `x^lambda`,
    /// `(1+x)^beta` (Jacobi), or `x^alpha` (shifted). "Right" is the factor at
    /// the supremum: `(1-x)^alpha` (Jacobi) or `(1-x)^beta` (shifted);
    /// Laguerre has none.
    pub(crate) fn endpoint_factor_partial(
        &self,
        ctx: Ctx,
        x: &Real,
        skip_left: bool,
        skip_right: bool,
    ) -> Real {
        let mut w = ctx.one();
        match self.exponents {
            Exponents::Lambda(l) => {
                if !skip_left {
                    w *= ctx.pow_f64(x, l);
                }
            }
            Exponents::AlphaBeta { alpha, beta } => match self.family {
                Family::Jacobi => {
                    if !skip_left {
                        let one_plus = ctx.one() + x;
                        w *= ctx.pow_f64(&one_plus, beta);
                    }
                    if !skip_right {
                        let one_minus = ctx.one() - x;
                        w *= ctx.pow_f64(&one_minus, alpha);
                    }
                }
                _ => {
                    if !skip_left {
                        w *= ctx.pow_f64(x, alpha);
                    }
                    if !skip_right {
                        let one_minus = ctx.one() - x;
                        w *= ctx.pow_f64(&one_minus, beta);
                    }
                }
            },
        }
        w
    }

    /// Exponent of the singular endpoint factor at the support infimum /
    /// supremum.
    pub(crate) fn endpoint_exponents(&self) -> (f64, f64) {
        match self.exponents {
            Exponents::Lambda(l) => (l, 0.0),
            Exponents::AlphaBeta { alpha, beta } => match self.family {
                Family::Jacobi => (beta, alpha),
                _ => (alpha, beta),
            },
        }
    }

    /// Smooth part of the weight: endpoint factor times all atoms
    /// (no step factor, no FH factor).
    pub fn smooth_at(&self, ctx: Ctx, x: &Real) -> Real {
        let mut w = match self.exponents {
            Exponents::Lambda(l) => ctx.pow_f64(x, l),
            Exponents::AlphaBeta { alpha, beta } => match self.family {
                Family::Jacobi => {
                    let one_minus = ctx.one() - x;
                    let one_plus = ctx.one() + x;
                    ctx.pow_f64(&one_minus, alpha) * ctx.pow_f64(&one_plus, beta)
                }
                _ => {
                    let one_minus = ctx.one() - x;
                    ctx.pow_f64(x, alpha) * ctx.pow_f64(&one_minus, beta)
                }
            },
        };
        for atom in &self.atoms {
            w *= atom_value(ctx, atom, x);
        }
        w
    }

    /// Step factor value; at a jump point the right limit is taken.
    /// Accumulated at working precision so every consumer sees the same value.
    pub fn step_at(&self, ctx: Ctx, x: &Real) -> Real {
        match &self.jumps {
            None => ctx.one(),
            Some(j) => {
                let mut v = ctx.re(j.omega0);
                for p in &j.points {
                    if *x >= p.t {
                        v += ctx.re(p.omega);
                    }
                }
                v
            }
        }
    }

    /// FH factor value; at x = t the right limit of the step part is taken.
    pub fn fh_at(&self, ctx: Ctx, x: &Real) -> Real {
        match &self.fh {
            None => ctx.one(),
            Some(f) => {
                let d = (x.clone() - ctx.re(f.t)).abs();
                let side = if *x >= f.t {
                    ctx.re(f.a) + ctx.re(f.b)
                } else {
                    ctx.re(f.a)
                };
                ctx.pow_f64(&d, f.gamma) * side
            }
        }
    }

    /// Full weight w(x); `x` must lie in the open support.
    pub fn weight_at(&self, ctx: Ctx, x: &Real) -> Result<Real> {
        let (lo, hi) = self.family.support();
        let xf = x.to_f64();
        if !(xf > lo) || !(xf < hi) {
            return Err(Error::OutOfSupport(format!("x = {xf}")));
        }
        Ok(self.smooth_at(ctx, x) * self.step_at(ctx, x) * self.fh_at(ctx, x))
    }

    /// v'(z) of the smooth part, by analytic continuation of the per-atom
    /// closed forms (all rational, so no branch cuts arise).
    pub fn vprime_cx(&self, ctx: Ctx, z: &CFloat) -> CFloat {
        let one = ctx.cx(1.0, 0.0);
        let mut v = ctx.czero();
        match self.exponents {
            Exponents::Lambda(l) => {
                // -lambda/z
                v = v.sub(&z.recip().mul_real(&ctx.re(l)));
            }
            Exponents::AlphaBeta { alpha, beta } => match self.family {
                Family::Jacobi => {
                    // alpha/(1-z) - beta/(1+z)
                    let a_term = one.sub(z).recip().mul_real(&ctx.re(alpha));
                    let b_term = one.add(z).recip().mul_real(&ctx.re(beta));
                    v = v.add(&a_term).sub(&b_term);
                }
                _ => {
                    // -alpha/z + beta/(1-z)
                    let a_term = z.recip().mul_real(&ctx.re(alpha));
                    let b_term = one.sub(z).recip().mul_real(&ctx.re(beta));
                    v = v.sub(&a_term).add(&b_term);
                }
            },
        }
        for atom in &self.atoms {
            v = v.add(&atom_vprime(ctx, atom, z));
        }
        v
    }

    /// v'(x) on the real line; errors at atom singular points and at
    /// jump/FH points (where v' of the full weight does not exist).
    pub fn vprime_at(&self, ctx: Ctx, x: &Real) -> Result<Real> {
        let xf = x.to_f64();
        let (lo, hi) = self.family.support();
        if !(xf > lo) || !(xf < hi) {
            return Err(Error::OutOfSupport(format!("x = {xf}")));
        }
        if self.singular_points().contains(&xf) {
            return Err(Error::SingularPoint(format!("x = {xf}")));
        }
        if let Some(j) = &self.jumps {
            if j.points.iter().any(|p| p.t == xf) {
                return Err(Error::SingularPoint(format!("x = {xf} is a jump point")));
            }
        }
        if let Some(f) = &self.fh {
            if f.t == xf {
                return Err(Error::SingularPoint(format!("x = {xf} is the FH point")));
            }
        }
        Ok(self.vprime_cx(ctx, &ctx.cx_real(x.clone())).re)
    }

    /// Family map F(y): `y v'(y)` (Laguerre), `(1-y^2) v'(y)` (Jacobi),
    /// `(y-y^2) v'(y)` (shifted Jacobi).
    pub fn family_f_cx(&self, ctx: Ctx, z: &CFloat) -> CFloat {
        let vp = self.vprime_cx(ctx, z);
        self.family_prefactor_cx(ctx, z).mul(&vp)
    }

    /// The polynomial multiplying v' inside F: y, (1-y^2), or (y-y^2).
    pub fn family_prefactor_cx(&self, ctx: Ctx, z: &CFloat) -> CFloat {
        let one = ctx.cx(1.0, 0.0);
        match self.family {
            Family::Laguerre => z.clone(),
            Family::Jacobi => one.sub(&z.sqr()),
            Family::ShiftedJacobi => z.sub(&z.sqr()),
        }
    }

    pub fn family_f_at(&self, ctx: Ctx, x: &Real) -> Result<Real> {
        let xf = x.to_f64();
        if self.singular_points().contains(&xf) {
            return Err(Error::SingularPoint(format!("x = {xf}")));
        }
        Ok(self.family_f_cx(ctx, &ctx.cx_real(x.clone())).re)
    }

    /// Divided-difference kernel (F(z) - F(x)) / (z - x).
    pub fn kernel_divdiff(&self, ctx: Ctx, z: &CFloat, x: &Real) -> Result<CFloat> {
        self.check_z_off_support(z)?;
        let fx = self.family_f_at(ctx, x)?;
        let fz = self.family_f_cx(ctx, z);
        let num = fz.sub_real(&fx);
        let den = z.sub_real(x);
        Ok(num.div(&den))
    }

    /// Plain divided difference (v'(z) - v'(x)) / (z - x); the form only
    /// valid for strictly positive endpoint exponents.
    pub fn kernel_plain_divdiff(&self, ctx: Ctx, z: &CFloat, x: &Real) -> Result<CFloat> {
        self.check_z_off_support(z)?;
        let vx = self.vprime_cx(ctx, &ctx.cx_real(x.clone()));
        let vz = self.vprime_cx(ctx, z);
        let num = vz.sub(&vx);
        let den = z.sub_real(x);
        Ok(num.div(&den))
    }

    /// Errors when z lies on the closed support (real axis inside [lo, hi]).
    pub fn check_z_off_support(&self, z: &CFloat) -> Result<()> {
        if !z.im.is_zero() {
            return Ok(());
        }
        let zr = z.re.to_f64();
        let (lo, hi) = self.family.support();
        if zr >= lo && zr <= hi {
            return Err(Error::ZOnSupport(format!("z = {zr}")));
        }
        Ok(())
    }
}

fn validate_atom(family: Family, atom: &Atom) -> Result<()> {
    let bad = |msg: String| Err(Error::InadmissibleWeight(msg));
    match (family, atom) {
        (Family::Laguerre, Atom::ExpLinear { c }) if *c <= 0.0 => bad(format!(
            "exp_linear c = {c} must be > 0 on Laguerre support"
        )),
        (Family::Laguerre, Atom::ExpQuad { t }) if *t < 0.0 => {
            bad(format!("exp_quad t = {t} must be >= 0 on Laguerre support"))
        }
        (Family::Jacobi, Atom::PowerShift { c, .. }) if *c <= 1.0 => {
            bad(format!("power_shift c = {c} must be > 1 on [-1,1]"))
        }
        (_, Atom::PowerShift { c, .. }) if *c <= 0.0 => {
            bad(format!("power_shift c = {c} must be > 0"))
        }
        (Family::Jacobi, Atom::ExpInvX { .. }) => {
            bad("exp_inv_x is not admissible on [-1,1] (0 is interior)".to_string())
        }
        (_, Atom::ExpInvX { s }) if *s < 0.0 => bad(format!("exp_inv_x s = {s} must be >= 0")),
        (_, Atom::ExpInvX2 { t }) if *t < 0.0 => bad(format!("exp_inv_x2 t = {t} must be >= 0")),
        (Family::Laguerre | Family::ShiftedJacobi, Atom::ExpInvOneMinusX2 { .. }) => {
            bad("exp_inv_one_minus_x2 is only admissible on [-1,1]".to_string())
        }
        (_, Atom::ExpInvOneMinusX2 { t }) if *t < 0.0 => {
            bad(format!("exp_inv_one_minus_x2 t = {t} must be >= 0"))
        }
        (Family::Laguerre, Atom::PowerOneMinusK2X2 { .. }) => {
            bad("power_one_minus_k2x2 is inadmissible on an unbounded support".to_string())
        }
        (_, Atom::PowerOneMinusK2X2 { k2, .. }) if !(*k2 > 0.0 && *k2 < 1.0) => {
            bad(format!("power_one_minus_k2x2 k2 = {k2} must be in (0,1)"))
        }
        (f, Atom::PowerShiftNeg { t, .. }) if *t >= f.support().0 => bad(format!(
            "power_shift_neg t = {t} must lie strictly below the support"
        )),
        _ => Ok(()),
    }
}

fn atom_value(ctx: Ctx, atom: &Atom, x: &Real) -> Real {
    match atom {
        Atom::ExpLinear { c } => (-(x.clone()) * ctx.re(*c)).exp(),
        Atom::PowerShift { c, gamma } => {
            let base = x.clone() + ctx.re(*c);
            ctx.pow_f64(&base, *gamma)
        }
        Atom::ExpInvX { s } => (-(ctx.re(*s)) / x.clone()).exp(),
        Atom::ExpQuad { t } => (-(x.clone().square()) * ctx.re(*t)).exp(),
        Atom::ExpInvX2 { t } => (-(ctx.re(*t)) / x.clone().square()).exp(),
        Atom::ExpInvOneMinusX2 { t } => {
            let den = ctx.one() - x.clone().square();
            (-(ctx.re(*t)) / den).exp()
        }
        Atom::PowerOneMinusK2X2 { k2, gamma } => {
            let base = ctx.one() - x.clone().square() * ctx.re(*k2);
            ctx.pow_f64(&base, *gamma)
        }
        Atom::PowerShiftNeg { t, gamma } => {
            let base = x.clone() - ctx.re(*t);
            ctx.pow_f64(&base, *gamma)
        }
    }
}

/// Per-atom contribution to v'(z) = -(ln atom)'(z); exact closed forms.
fn atom_vprime(ctx: Ctx, atom: &Atom, z: &CFloat) -> CFloat {
    let one = ctx.cx(1.0, 0.0);
    match atom {
        // v += c z  =>  v' = c
        Atom::ExpLinear { c } => ctx.cx(*c, 0.0),
        // v += -gamma ln(z+c)  =>  v' = -gamma/(z+c)
        Atom::PowerShift { c, gamma } => {
            let d = z.add_real(&ctx.re(*c));
            d.recip().mul_real(&ctx.re(-gamma))
        }
        // v += s/z  =>  v' = -s/z^2
        Atom::ExpInvX { s } => z.sqr().recip().mul_real(&ctx.re(-s)),
        // v += t z^2  =>  v' = 2 t z
        Atom::ExpQuad { t } => z.mul_real(&ctx.re(2.0 * t)),
        // v += t/z^2  =>  v' = -2t/z^3
        Atom::ExpInvX2 { t } => {
            let z3 = z.sqr().mul(z);
            z3.recip().mul_real(&ctx.re(-2.0 * t))
        }
        // v += t/(1-z^2)  =>  v' = 2 t z/(1-z^2)^2
        Atom::ExpInvOneMinusX2 { t } => {
            let den = one.sub(&z.sqr()).sqr();
            z.div(&den).mul_real(&ctx.re(2.0 * t))
        }
        // v += -gamma ln(1-k^2 z^2)  =>  v' = 2 gamma k^2 z/(1-k^2 z^2)
        Atom::PowerOneMinusK2X2 { k2, gamma } => {
            let den = one.sub(&z.sqr().mul_real(&ctx.re(*k2)));
            let coef = ctx.re(2.0) * ctx.re(*gamma) * ctx.re(*k2);
            z.div(&den).mul_real(&coef)
        }
        // v += -gamma ln(z-t)  =>  v' = -gamma/(z-t)
        Atom::PowerShiftNeg { t, gamma } => {
            let d = z.sub_real(&ctx.re(*t));
            d.recip().mul_real(&ctx.re(-gamma))
        }
    }
}

// ---------------------------------------------------------------------------
// JSON schema
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct WeightSpecJson {
    family: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    atoms: Vec<AtomJson>,
    jumps: Option<JumpsJson>,
    fh: Option<FhJson>,
}

#[derive(Serialize, Deserialize)]
struct AtomJson {
    kind: String,
    params: BTreeMap<String, f64>,
}

#[derive(Serialize, Deserialize)]
struct JumpsJson {
    omega0: f64,
    points: Vec<JumpPointJson>,
}

#[derive(Serialize, Deserialize)]
struct JumpPointJson {
    t: f64,
    omega: f64,
}

#[derive(Serialize, Deserialize)]
struct FhJson {
    t: f64,
    gamma: f64,
    #[serde(rename = "A")]
    a: f64,
    #[serde(rename = "B")]
    b: f64,
}

impl From<&WeightSpec> for WeightSpecJson {
    fn from(w: &WeightSpec) -> Self {
        let (lambda, alpha, beta) = match w.exponents {
            Exponents::Lambda(l) => (Some(l), None, None),
            Exponents::AlphaBeta { alpha, beta } => (None, Some(alpha), Some(beta)),
        };
        WeightSpecJson {
            family: w.family.name().to_string(),
            lambda,
            alpha,
            beta,
            atoms: w.atoms.iter().map(atom_to_json).collect(),
            jumps: w.jumps.as_ref().map(|j| JumpsJson {
                omega0: j.omega0,
                points: j
                    .points
                    .iter()
                    .map(|p| JumpPointJson {
                        t: p.t,
                        omega: p.omega,
                    })
                    .collect(),
            }),
            fh: w.fh.as_ref().map(|f| FhJson {
                t: f.t,
                gamma: f.gamma,
                a: f.a,
                b: f.b,
            }),
        }
    }
}

fn atom_to_json(a: &Atom) -> AtomJson {
    let mut params = BTreeMap::new();
    match a {
        Atom::ExpLinear { c } => {
            params.insert("c".into(), *c);
        }
        Atom::PowerShift { c, gamma } => {
            params.insert("c".into(), *c);
            params.insert("gamma".into(), *gamma);
        }
        Atom::ExpInvX { s } => {
            params.insert("s".into(), *s);
        }
        Atom::ExpQuad { t } => {
            params.insert("t".into(), *t);
        }
        Atom::ExpInvX2 { t } => {
            params.insert("t".into(), *t);
        }
        Atom::ExpInvOneMinusX2 { t } => {
            params.insert("t".into(), *t);
        }
        Atom::PowerOneMinusK2X2 { k2, gamma } => {
            params.insert("k2".into(), *k2);
            params.insert("gamma".into(), *gamma);
        }
        Atom::PowerShiftNeg { t, gamma } => {
            params.insert("t".into(), *t);
            params.insert("gamma".into(), *gamma);
        }
    }
    AtomJson {
        kind: a.kind_name().to_string(),
        params,
    }
}

fn atom_from_json(a: &AtomJson) -> Result<Atom> {
    let get = |k: &str| -> Result<f64> {
        a.params
            .get(k)
            .copied()
            .ok_or_else(|| Error::Config(format!("atom {} missing param {k}", a.kind)))
    };
    Ok(match a.kind.as_str() {
        "exp_linear" => Atom::ExpLinear { c: get("c")? },
        "power_shift" => Atom::PowerShift {
            c: get("c")?,
            gamma: get("gamma")?,
        },
        "exp_inv_x" => Atom::ExpInvX { s: get("s")? },
        "exp_quad" => Atom::ExpQuad { t: get("t")? },
        "exp_inv_x2" => Atom::ExpInvX2 { t: get("t")? },
        "exp_inv_one_minus_x2" => Atom::ExpInvOneMinusX2 { t: get("t")? },
        "power_one_minus_k2x2" => Atom::PowerOneMinusK2X2 {
            k2: get("k2")?,
            gamma: get("gamma")?,
        },
        "power_shift_neg" => Atom::PowerShiftNeg {
            t: get("t")?,
            gamma: get("gamma")?,
        },
        other => return Err(Error::Config(format!("unknown atom kind {other}"))),
    })
}

impl TryFrom<WeightSpecJson> for WeightSpec {
    type Error = Error;
    fn try_from(raw: WeightSpecJson) -> Result<Self> {
        let family = match raw.family.as_str() {
            "laguerre" => Family::Laguerre,
            "jacobi" => Family::Jacobi,
            "shifted_jacobi" => Family::ShiftedJacobi,
            other => return Err(Error::Config(format!("unknown family {other}"))),
        };
        let exponents = match family {
            Family::Laguerre => Exponents::Lambda(
                raw.lambda
                    .ok_or_else(|| Error::Config("laguerre weight needs lambda".into()))?,
            ),
            _ => Exponents::AlphaBeta {
                alpha: raw
                    .alpha
                    .ok_or_else(|| Error::Config("jacobi weight needs alpha".into()))?,
                beta: raw
                    .beta
                    .ok_or_else(|| Error::Config("jacobi weight needs beta".into()))?,
            },
        };
        let atoms = raw
            .atoms
            .iter()
            .map(atom_from_json)
            .collect::<Result<Vec<_>>>()?;
        let jumps = raw.jumps.map(|j| JumpSpec {
            omega0: j.omega0,
            points: j
                .points
                .into_iter()
                .map(|p| JumpPoint {
                    t: p.t,
                    omega: p.omega,
                })
                .collect(),
        });
        let fh = raw.fh.map(|f| FhSpec {
            t: f.t,
            gamma: f.gamma,
            a: f.a,
            b: f.b,
        });
        WeightSpec::new(family, exponents, atoms, jumps, fh)
    }
}

impl Serialize for WeightSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        WeightSpecJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for WeightSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = WeightSpecJson::deserialize(d)?;
        raw.try_into()
            .map_err(|e: Error| D::Error::custom(e.to_string()))
    }
}
