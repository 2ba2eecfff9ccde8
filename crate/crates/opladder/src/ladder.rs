//! Ladder-operator coefficients A_n(z), B_n(z) for the three weight
//! families, with jump-residue and Fisher-Hartwig corrections, the residuals
//! of the lowering/raising relations and the compatibility conditions
//! S1/S2/S2', the auxiliary scalars of the named example families, and the
//! t-differential identities.
//!
//! A and B are assembled as
//! `prefactor * [kernel integral + counting term + corrections]` with the
//! family prefactors `1/z`, `1/(1-z^2)`, `1/(z-z^2)` and counting terms
//! `-n` (B, Laguerre), `2n+1` (A) and `nz - p(n)` / `n(z-1) - p(n)` (B) for
//! the Jacobi / shifted-Jacobi families. The counting terms are taken
//! verbatim from the table, never re-derived from integrals. The kernel
//! integral runs against the full weight (steps and FH factor included)
//! while the divided-difference kernel uses the smooth part's potential.

use crate::error::{Error, Result};
use crate::opcore::{self, RecurrenceTable};
use crate::precision::{CFloat, Ctx, Real};
use crate::quadrature::{build_rules, RulePlan, WeightedRules};
use crate::weights::{Atom, Family, WeightSpec};
use std::collections::BTreeMap;

/// Additive breakdown of one ladder coefficient (parts sum to the total).
#[derive(Clone, Debug)]
pub struct LadderParts {
    pub smooth_integral: CFloat,
    pub counting_term: CFloat,
    pub jump_residues: Vec<CFloat>,
    pub fh_term: CFloat,
}

impl LadderParts {
    fn zero(ctx: Ctx) -> Self {
        LadderParts {
            smooth_integral: ctx.czero(),
            counting_term: ctx.czero(),
            jump_residues: vec![],
            fh_term: ctx.czero(),
        }
    }

    pub fn total(&self) -> CFloat {
        let mut t = self.smooth_integral.add(&self.counting_term);
        for j in &self.jump_residues {
            t = t.add(j);
        }
        t.add(&self.fh_term)
    }
}

/// The pair (A_n(z), B_n(z)) with per-term breakdown.
#[derive(Clone, Debug)]
pub struct LadderPair {
    pub n: usize,
    pub z: CFloat,
    pub a: CFloat,
    pub b: CFloat,
    pub a_parts: LadderParts,
    pub b_parts: LadderParts,
}

struct JumpData {
    t: f64,
    /// omega_k times the weight at t_k with the step factor excluded
    /// (smooth part, and the FH factor when present)
    factor: Real,
    /// P_j(t_k) for j = 0..=cap
    pj: Vec<Real>,
}

struct FhData {
    gamma: f64,
    /// flattened singular-rule nodes and combined weights
    /// (|x-t|^(gamma-1) sign(x-t) (A + B theta) absorbed)
    xs: Vec<Real>,
    ws: Vec<Real>,
    pj: Vec<Vec<Real>>,
    /// z-independent integrals (gamma/h_n) int P_n^2 w/(x-t) dx and the
    /// mixed P_n P_{n-1} analogue
    i1_sq: Vec<Real>,
    i1_mix: Vec<Real>,
    /// (x - x^2) at the singular nodes (shifted-Jacobi bracket form)
    poly_factor: Vec<Real>,
}

/// Precomputed node data for one (weight, table) pair; all per-z evaluation
/// goes through [`LadderEngine::at`].
pub struct LadderEngine<'a> {
    pub ctx: Ctx,
    pub w: &'a WeightSpec,
    pub tab: &'a RecurrenceTable,
    pub rules: WeightedRules,
    xs: Vec<Real>,
    ws: Vec<Real>,
    fvals: Vec<Real>,
    vpvals: Vec<Real>,
    pj: Vec<Vec<Real>>,
    jumps: Vec<JumpData>,
    fh: Option<FhData>,
}

impl<'a> LadderEngine<'a> {
    pub fn new(ctx: Ctx, w: &'a WeightSpec, tab: &'a RecurrenceTable, m: usize) -> Result<Self> {
        if w.family() == Family::Jacobi && w.fh().is_some() {
            return Err(Error::Unsupported(
                "Fisher-Hartwig ladder corrections are available for the Laguerre and \
                 shifted-Jacobi families only"
                    .to_string(),
            ));
        }
        let deg_hint = 2 * tab.cap + 8;
        let rules = build_rules(ctx, w, &RulePlan::standard(m, deg_hint))?;
        let (xs, ws) = rules.flat_nodes();
        let fvals: Vec<Real> = xs
            .iter()
            .map(|x| w.family_f_at(ctx, x))
            .collect::<Result<_>>()?;
        let vpvals: Vec<Real> = xs
            .iter()
            .map(|x| w.vprime_at(ctx, x))
            .collect::<Result<_>>()?;
        let pj = opcore::polynomial_node_values(ctx, tab, &xs, tab.cap);

        let mut jumps = Vec::new();
        if let Some(j) = w.jumps() {
            for p in &j.points {
                let t = ctx.re(p.t);
                // everything but the step factor at t_k: smooth part times
                // the FH factor (when present, at its t_k side value)
                let w_smooth = w.smooth_at(ctx, &t) * w.fh_at(ctx, &t);
                let mut pvals = Vec::with_capacity(tab.cap + 1);
                let mut p_prev = ctx.zero();
                let mut p_cur = ctx.one();
                pvals.push(p_cur.clone());
                for jj in 0..tab.cap {
                    let mut next = Real::with_val(ctx.bits(), &t - &tab.alpha[jj]);
                    next *= &p_cur;
                    if jj > 0 {
                        next -= Real::with_val(ctx.bits(), &tab.beta[jj] * &p_prev);
                    }
                    p_prev = std::mem::replace(&mut p_cur, next);
                    pvals.push(p_cur.clone());
                }
                jumps.push(JumpData {
                    t: p.t,
                    factor: ctx.re(p.omega) * w_smooth,
                    pj: pvals,
                });
            }
        }

        let fh = match w.fh() {
            None => None,
            Some(f) => {
                let fh_rules = build_rules(ctx, w, &RulePlan::fh_singular(m, deg_hint))?;
                let (fxs, fws) = fh_rules.flat_nodes();
                let fpj = opcore::polynomial_node_values(ctx, tab, &fxs, tab.cap);
                let mut i1_sq = Vec::with_capacity(tab.cap);
                let mut i1_mix = Vec::with_capacity(tab.cap);
                for n in 0..tab.cap {
                    let mut sq = ctx.zero();
                    let mut mix = ctx.zero();
                    for i in 0..fxs.len() {
                        let pn = &fpj[n][i];
                        let pn2w = Real::with_val(ctx.bits(), pn * pn) * &fws[i];
                        sq += pn2w;
                        if n > 0 {
                            let pm = &fpj[n - 1][i];
                            let mixw = Real::with_val(ctx.bits(), pn * pm) * &fws[i];
                            mix += mixw;
                        }
                    }
                    i1_sq.push(ctx.re(f.gamma) * sq / &tab.h[n]);
                    i1_mix.push(if n > 0 {
                        ctx.re(f.gamma) * mix / &tab.h[n - 1]
                    } else {
                        ctx.zero()
                    });
                }
                let poly_factor: Vec<Real> = fxs
                    .iter()
                    .map(|x| {
                        let x2 = Real::with_val(ctx.bits(), x * x);
                        Real::with_val(ctx.bits(), x - &x2)
                    })
                    .collect();
                Some(FhData {
                    gamma: f.gamma,
                    xs: fxs,
                    ws: fws,
                    pj: fpj,
                    i1_sq,
                    i1_mix,
                    poly_factor,
                })
            }
        };

        Ok(LadderEngine {
            ctx,
            w,
            tab,
            rules,
            xs,
            ws,
            fvals,
            vpvals,
            pj,
            jumps,
            fh,
        })
    }

    pub fn node_count(&self) -> usize {
        self.xs.len()
    }

    fn check_z(&self, z: &CFloat) -> Result<()> {
        self.w.check_z_off_support(z)?;
        if z.im.is_zero() {
            let zr = z.re.to_f64();
            for p in self.w.z_poles() {
                if zr == p {
                    return Err(Error::SingularPoint(format!("z = {zr} is a pole")));
                }
            }
        }
        Ok(())
    }

    /// Evaluate A_0..A_{n_hi} and B_0..B_{n_hi} at one z.
    #[allow(clippy::needless_range_loop)] // index pairs several node arrays
    pub fn at(&self, z: &CFloat, n_hi: usize) -> Result<LadderAt> {
        self.check_z(z)?;
        if n_hi + 1 > self.tab.cap {
            return Err(Error::DegreeOutOfRange(format!(
                "n_hi = {n_hi} needs cap >= {}",
                n_hi + 1
            )));
        }
        let ctx = self.ctx;
        let n_nodes = self.xs.len();

        // divided-difference kernel at the nodes
        let fz = self.w.family_f_cx(ctx, z);
        let mut kernel = Vec::with_capacity(n_nodes);
        for i in 0..n_nodes {
            let den = z.sub_real(&self.xs[i]);
            let num = fz.sub_real(&self.fvals[i]);
            kernel.push(num.div(&den));
        }

        // FH helpers at the singular nodes
        let fh_inv: Option<Vec<CFloat>> = self
            .fh
            .as_ref()
            .map(|f| f.xs.iter().map(|x| z.sub_real(x).recip()).collect());

        let prefactor = self.w.family_prefactor_cx(ctx, z).recip();
        let one = ctx.cx(1.0, 0.0);

        let mut pairs = Vec::with_capacity(n_hi + 1);
        for n in 0..=n_hi {
            // kernel integrals against P_n^2 and P_n P_{n-1}
            let mut i_sq = ctx.czero();
            let mut i_mix = ctx.czero();
            for i in 0..n_nodes {
                let pn = &self.pj[n][i];
                let vsq = Real::with_val(ctx.bits(), pn * pn) * &self.ws[i];
                i_sq.add_mul_real(&kernel[i], &vsq);
                if n > 0 {
                    let vmix = Real::with_val(ctx.bits(), pn * &self.pj[n - 1][i]) * &self.ws[i];
                    i_mix.add_mul_real(&kernel[i], &vmix);
                }
            }
            i_sq = i_sq.div_real(&self.tab.h[n]);
            if n > 0 {
                i_mix = i_mix.div_real(&self.tab.h[n - 1]);
            }

            // FH singular integrals carrying 1/(z-x)
            let (mut fh_i2_sq, mut fh_i2_mix) = (ctx.czero(), ctx.czero());
            if let (Some(f), Some(inv)) = (self.fh.as_ref(), fh_inv.as_ref()) {
                for i in 0..f.xs.len() {
                    let pn = &f.pj[n][i];
                    let base = match self.w.family() {
                        Family::ShiftedJacobi => {
                            Real::with_val(ctx.bits(), &f.ws[i] * &f.poly_factor[i])
                        }
                        _ => f.ws[i].clone(),
                    };
                    let vsq = Real::with_val(ctx.bits(), pn * pn) * &base;
                    fh_i2_sq.add_mul_real(&inv[i], &vsq);
                    if n > 0 {
                        let vmix = Real::with_val(ctx.bits(), pn * &f.pj[n - 1][i]) * &base;
                        fh_i2_mix.add_mul_real(&inv[i], &vmix);
                    }
                }
                let g = ctx.re(f.gamma);
                fh_i2_sq = fh_i2_sq.mul_real(&(g.clone() / &self.tab.h[n]));
                if n > 0 {
                    fh_i2_mix = fh_i2_mix.mul_real(&(g / &self.tab.h[n - 1]));
                }
            }

            let mut a_parts = LadderParts::zero(ctx);
            let mut b_parts = LadderParts::zero(ctx);

            match self.w.family() {
                Family::Laguerre => {
                    a_parts.smooth_integral = prefactor.mul(&i_sq);
                    for jd in &self.jumps {
                        let rnk = Real::with_val(ctx.bits(), &jd.pj[n] * &jd.pj[n]) * &jd.factor
                            / &self.tab.h[n];
                        let pole = z.sub_real(&ctx.re(jd.t)).recip();
                        a_parts
                            .jump_residues
                            .push(pole.sub(&prefactor).mul_real(&rnk));
                    }
                    if let Some(f) = self.fh.as_ref() {
                        a_parts.fh_term = fh_i2_sq.sub(&prefactor.mul_real(&f.i1_sq[n]));
                    }
                    if n > 0 {
                        b_parts.smooth_integral = prefactor.mul(&i_mix);
                        b_parts.counting_term = prefactor.mul_real(&(-ctx.re_u(n as u64)));
                        for jd in &self.jumps {
                            let rnk = Real::with_val(ctx.bits(), &jd.pj[n] * &jd.pj[n - 1])
                                * &jd.factor
                                / &self.tab.h[n - 1];
                            let pole = z.sub_real(&ctx.re(jd.t)).recip();
                            b_parts
                                .jump_residues
                                .push(pole.sub(&prefactor).mul_real(&rnk));
                        }
                        if let Some(f) = self.fh.as_ref() {
                            b_parts.fh_term = fh_i2_mix.sub(&prefactor.mul_real(&f.i1_mix[n]));
                        }
                    }
                }
                Family::Jacobi => {
                    a_parts.smooth_integral = prefactor.mul(&i_sq);
                    a_parts.counting_term = prefactor.mul_real(&ctx.re_u(2 * n as u64 + 1));
                    for jd in &self.jumps {
                        let rnk = Real::with_val(ctx.bits(), &jd.pj[n] * &jd.pj[n]) * &jd.factor
                            / &self.tab.h[n];
                        let t = ctx.re(jd.t);
                        let inside = prefactor.mul(&z.add_real(&t));
                        let pole = z.sub_real(&t).recip();
                        a_parts.jump_residues.push(inside.add(&pole).mul_real(&rnk));
                    }
                    if n > 0 {
                        b_parts.smooth_integral = prefactor.mul(&i_mix);
                        let count = z.mul_real(&ctx.re_u(n as u64)).sub_real(&self.tab.p1[n]);
                        b_parts.counting_term = prefactor.mul(&count);
                        for jd in &self.jumps {
                            let rnk = Real::with_val(ctx.bits(), &jd.pj[n] * &jd.pj[n - 1])
                                * &jd.factor
                                / &self.tab.h[n - 1];
                            let t = ctx.re(jd.t);
                            let inside = prefactor.mul(&z.add_real(&t));
                            let pole = z.sub_real(&t).recip();
                            b_parts.jump_residues.push(inside.add(&pole).mul_real(&rnk));
                        }
                    }
                }
                Family::ShiftedJacobi => {
                    a_parts.smooth_integral = prefactor.mul(&i_sq);
                    a_parts.counting_term = prefactor.mul_real(&ctx.re_u(2 * n as u64 + 1));
                    for jd in &self.jumps {
                        let rnk = Real::with_val(ctx.bits(), &jd.pj[n] * &jd.pj[n]) * &jd.factor
                            / &self.tab.h[n];
                        let t = ctx.re(jd.t);
                        let tt = Real::with_val(ctx.bits(), &t - &t.clone().square());
                        let pole = z.sub_real(&t).recip();
                        a_parts
                            .jump_residues
                            .push(prefactor.mul(&pole).mul_real(&(tt * &rnk)));
                    }
                    if self.fh.is_some() {
                        a_parts.fh_term = prefactor.mul(&fh_i2_sq);
                    }
                    if n > 0 {
                        b_parts.smooth_integral = prefactor.mul(&i_mix);
                        let count = z
                            .sub(&one)
                            .mul_real(&ctx.re_u(n as u64))
                            .sub_real(&self.tab.p1[n]);
                        b_parts.counting_term = prefactor.mul(&count);
                        for jd in &self.jumps {
                            let rnk = Real::with_val(ctx.bits(), &jd.pj[n] * &jd.pj[n - 1])
                                * &jd.factor
                                / &self.tab.h[n - 1];
                            let t = ctx.re(jd.t);
                            let tt = Real::with_val(ctx.bits(), &t - &t.clone().square());
                            let pole = z.sub_real(&t).recip();
                            b_parts
                                .jump_residues
                                .push(prefactor.mul(&pole).mul_real(&(tt * &rnk)));
                        }
                        if self.fh.is_some() {
                            b_parts.fh_term = prefactor.mul(&fh_i2_mix);
                        }
                    }
                }
            }

            let a = a_parts.total();
            let b = b_parts.total();
            pairs.push(LadderPair {
                n,
                z: z.clone(),
                a,
                b,
                a_parts,
                b_parts,
            });
        }

        Ok(LadderAt {
            z: z.clone(),
            vprime_z: self.w.vprime_cx(ctx, z),
            pairs,
        })
    }

    /// A_n and B_n in the strictly-positive-exponent form: plain kernel
    /// `(v'(z)-v'(x))/(z-x)` against the full weight, plus the FH gamma-term
    /// when present. Only equivalent to the production form when the
    /// endpoint exponents are positive; used for the equivalence and
    /// negative-parameter witness checks.
    pub fn alt_pair(&self, z: &CFloat, n: usize) -> Result<(CFloat, CFloat)> {
        self.check_z(z)?;
        if n + 1 > self.tab.cap {
            return Err(Error::DegreeOutOfRange(format!("n = {n}")));
        }
        let ctx = self.ctx;
        let vz = self.w.vprime_cx(ctx, z);
        let mut i_sq = ctx.czero();
        let mut i_mix = ctx.czero();
        for i in 0..self.xs.len() {
            let den = z.sub_real(&self.xs[i]);
            let k = vz.sub_real(&self.vpvals[i]).div(&den);
            let pn = &self.pj[n][i];
            let vsq = Real::with_val(ctx.bits(), pn * pn) * &self.ws[i];
            i_sq.add_mul_real(&k, &vsq);
            if n > 0 {
                let vmix = Real::with_val(ctx.bits(), pn * &self.pj[n - 1][i]) * &self.ws[i];
                i_mix.add_mul_real(&k, &vmix);
            }
        }
        let mut a = i_sq.div_real(&self.tab.h[n]);
        let mut b = if n > 0 {
            i_mix.div_real(&self.tab.h[n - 1])
        } else {
            ctx.czero()
        };
        if let Some(f) = self.fh.as_ref() {
            // gamma/h int P^2 w / ((z-x)(x-t)) dx over the singular rules
            let mut sq = ctx.czero();
            let mut mix = ctx.czero();
            for i in 0..f.xs.len() {
                let inv = z.sub_real(&f.xs[i]).recip();
                let pn = &f.pj[n][i];
                let vsq = Real::with_val(ctx.bits(), pn * pn) * &f.ws[i];
                sq.add_mul_real(&inv, &vsq);
                if n > 0 {
                    let vmix = Real::with_val(ctx.bits(), pn * &f.pj[n - 1][i]) * &f.ws[i];
                    mix.add_mul_real(&inv, &vmix);
                }
            }
            let g = ctx.re(f.gamma);
            a = a.add(&sq.mul_real(&(g.clone() / &self.tab.h[n])));
            if n > 0 {
                b = b.add(&mix.mul_real(&(g / &self.tab.h[n - 1])));
            }
        }
        Ok((a, b))
    }
}

/// A_n and B_n in the strictly-positive-exponent form, evaluated accurately:
/// the endpoint poles of `v'` are handled by endpoint-reduced rules with the
/// family polynomial folded back into the integrand, so the plain-kernel
/// integrals converge spectrally. Requires all endpoint exponents > 0; this
/// is the form the equivalence checks compare against the production form.
pub fn alt_pair_reduced(
    ctx: Ctx,
    w: &WeightSpec,
    tab: &RecurrenceTable,
    m: usize,
    z: &CFloat,
    n: usize,
) -> Result<(CFloat, CFloat)> {
    if n + 1 > tab.cap {
        return Err(Error::DegreeOutOfRange(format!("n = {n}")));
    }
    w.check_z_off_support(z)?;
    let rules = build_rules(ctx, w, &RulePlan::endpoint_reduced(m, 2 * tab.cap + 8))?;
    let (xs, ws) = rules.flat_nodes();
    let pj = opcore::polynomial_node_values(ctx, tab, &xs, n);
    let vz = w.vprime_cx(ctx, z);
    let one = ctx.one();
    let mut i_sq = ctx.czero();
    let mut i_mix = ctx.czero();
    for i in 0..xs.len() {
        let x = &xs[i];
        // fold polynomial restoring the full weight: x, (1-x^2), or x(1-x)
        let fold = match w.family() {
            Family::Laguerre => x.clone(),
            Family::Jacobi => one.clone() - Real::with_val(ctx.bits(), x * x),
            Family::ShiftedJacobi => x.clone() * (one.clone() - x),
        };
        let vx = w.vprime_cx(ctx, &ctx.cx_real(x.clone()));
        let k = vz.sub(&vx).div(&z.sub_real(x)).mul_real(&fold);
        let pn = &pj[n][i];
        let vsq = Real::with_val(ctx.bits(), pn * pn) * &ws[i];
        i_sq.add_mul_real(&k, &vsq);
        if n > 0 {
            let vmix = Real::with_val(ctx.bits(), pn * &pj[n - 1][i]) * &ws[i];
            i_mix.add_mul_real(&k, &vmix);
        }
    }
    let a = i_sq.div_real(&tab.h[n]);
    let b = if n > 0 {
        i_mix.div_real(&tab.h[n - 1])
    } else {
        ctx.czero()
    };
    Ok((a, b))
}

/// One-shot convenience: build an engine and evaluate the pair (A_n, B_n)
/// at a single z. Batch callers should hold a [`LadderEngine`] instead.
pub fn ladder_pair(
    ctx: Ctx,
    w: &WeightSpec,
    tab: &RecurrenceTable,
    m: usize,
    n: usize,
    z: &CFloat,
) -> Result<LadderPair> {
    let engine = LadderEngine::new(ctx, w, tab, m)?;
    let at = engine.at(z, n)?;
    Ok(at.pairs[n].clone())
}

/// Ladder data at one z: pairs for n = 0..=n_hi and v'(z).
pub struct LadderAt {
    pub z: CFloat,
    pub vprime_z: CFloat,
    pub pairs: Vec<LadderPair>,
}

impl LadderAt {
    pub fn a(&self, n: usize) -> &CFloat {
        &self.pairs[n].a
    }

    pub fn b(&self, n: usize) -> &CFloat {
        &self.pairs[n].b
    }

    pub fn n_hi(&self) -> usize {
        self.pairs.len() - 1
    }
}

fn max_mag(ctx: Ctx, terms: &[&CFloat]) -> Real {
    let mut m = ctx.zero();
    for t in terms {
        let a = t.abs();
        if a > m {
            m = a;
        }
    }
    if m.is_zero() {
        ctx.one()
    } else {
        m
    }
}

/// Lowering relation residual
/// `(P_n' + B_n P_n - beta_n A_n P_{n-1}) / max-term-magnitude`.
pub fn lowering_residual(engine: &LadderEngine, at: &LadderAt, n: usize) -> Result<Real> {
    let ctx = engine.ctx;
    let (pn, dpn) = opcore::eval_monic_cx(engine.tab, n, &at.z)?;
    if n == 0 {
        let _ = pn;
        return Ok(dpn.abs());
    }
    let (pm, _) = opcore::eval_monic_cx(engine.tab, n - 1, &at.z)?;
    let bp = at.b(n).mul(&pn);
    let bap = at.a(n).mul(&pm).mul_real(&engine.tab.beta[n]);
    let resid = dpn.add(&bp).sub(&bap);
    let scale = max_mag(ctx, &[&dpn, &bp, &bap]);
    Ok(resid.abs() / scale)
}

/// Raising relation residual
/// `(P_{n-1}' - (B_n + v'(z)) P_{n-1} + A_{n-1} P_n) / max-term-magnitude`.
pub fn raising_residual(engine: &LadderEngine, at: &LadderAt, n: usize) -> Result<Real> {
    if n == 0 {
        return Err(Error::DegreeOutOfRange("raising needs n >= 1".to_string()));
    }
    let ctx = engine.ctx;
    let (pn, _) = opcore::eval_monic_cx(engine.tab, n, &at.z)?;
    let (pm, dpm) = opcore::eval_monic_cx(engine.tab, n - 1, &at.z)?;
    let bv = at.b(n).add(&at.vprime_z).mul(&pm);
    let ap = at.a(n - 1).mul(&pn);
    let resid = dpm.sub(&bv).add(&ap);
    let scale = max_mag(ctx, &[&dpm, &bv, &ap]);
    Ok(resid.abs() / scale)
}

/// Residuals of the compatibility conditions at one n:
/// S1: `B_{n+1} + B_n - (z - alpha_n) A_n + v'(z)`,
/// S2: `1 + (z - alpha_n)(B_{n+1} - B_n) - beta_{n+1} A_{n+1} + beta_n A_{n-1}`,
/// S2': `B_n^2 + v' B_n + sum_{j<n} A_j - beta_n A_n A_{n-1}` (n >= 1),
/// each normalized by its largest term magnitude. S2 needs pairs up to n+1.
pub fn compat_residuals(
    engine: &LadderEngine,
    at: &LadderAt,
    n: usize,
) -> Result<(Real, Real, Option<Real>)> {
    let ctx = engine.ctx;
    if n + 1 > at.n_hi() {
        return Err(Error::DegreeOutOfRange(format!(
            "compat at n = {n} needs pairs up to {}",
            n + 1
        )));
    }
    if n + 1 >= engine.tab.cap {
        return Err(Error::DegreeOutOfRange(format!(
            "compat at n = {n} needs beta_{}",
            n + 1
        )));
    }
    let z_alpha = at.z.sub_real(&engine.tab.alpha[n]);

    let s1_lhs = at.b(n + 1).add(at.b(n));
    let s1_rhs = z_alpha.mul(at.a(n)).sub(&at.vprime_z);
    let s1_scale = max_mag(ctx, &[at.b(n + 1), at.b(n), &s1_rhs, &at.vprime_z]);
    let s1 = s1_lhs.sub(&s1_rhs).abs() / s1_scale;

    let one = ctx.cx(1.0, 0.0);
    let diff = at.b(n + 1).sub(at.b(n));
    let lhs2 = one.add(&z_alpha.mul(&diff));
    let t_hi = at.a(n + 1).mul_real(&engine.tab.beta[n + 1]);
    let t_lo = if n == 0 {
        ctx.czero() // beta_0 A_{-1} = 0
    } else {
        at.a(n - 1).mul_real(&engine.tab.beta[n])
    };
    let rhs2 = t_hi.sub(&t_lo);
    let s2_scale = max_mag(ctx, &[&lhs2, &t_hi, &t_lo, &one]);
    let s2 = lhs2.sub(&rhs2).abs() / s2_scale;

    let s2p = if n >= 1 {
        let b2 = at.b(n).sqr();
        let vb = at.vprime_z.mul(at.b(n));
        let mut asum = ctx.czero();
        for j in 0..n {
            asum = asum.add(at.a(j));
        }
        let rhs = at.a(n).mul(at.a(n - 1)).mul_real(&engine.tab.beta[n]);
        let lhs = b2.add(&vb).add(&asum);
        let scale = max_mag(ctx, &[&b2, &vb, &asum, &rhs]);
        Some(lhs.sub(&rhs).abs() / scale)
    } else {
        None
    };

    Ok((s1, s2, s2p))
}

// ---------------------------------------------------------------------------
// Auxiliary quantities of the example families
// ---------------------------------------------------------------------------

/// Named example families with catalogued auxiliary scalars.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AuxFamily {
    ChenMcKay,
    LaguerreJump,
    LaguerreFh,
    ChenIts,
    JacobiExp,
    JacobiJump,
    SymExpQuad,
    SymPowerK,
    Pollaczek,
    ShiftedPow,
    JsJump,
    JsFh,
}

impl AuxFamily {
    pub fn label(self) -> &'static str {
        match self {
            AuxFamily::ChenMcKay => "chen_mckay",
            AuxFamily::LaguerreJump => "laguerre_jump",
            AuxFamily::LaguerreFh => "laguerre_fh",
            AuxFamily::ChenIts => "chen_its",
            AuxFamily::JacobiExp => "jacobi_exp",
            AuxFamily::JacobiJump => "jacobi_jump",
            AuxFamily::SymExpQuad => "sym_exp_quad",
            AuxFamily::SymPowerK => "sym_power_k",
            AuxFamily::Pollaczek => "pollaczek_jacobi",
            AuxFamily::ShiftedPow => "shifted_jacobi_pow",
            AuxFamily::JsJump => "shifted_jacobi_jump",
            AuxFamily::JsFh => "shifted_jacobi_fh",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        Some(match s {
            "chen_mckay" => AuxFamily::ChenMcKay,
            "laguerre_jump" => AuxFamily::LaguerreJump,
            "laguerre_fh" => AuxFamily::LaguerreFh,
            "chen_its" => AuxFamily::ChenIts,
            "jacobi_exp" => AuxFamily::JacobiExp,
            "jacobi_jump" => AuxFamily::JacobiJump,
            "sym_exp_quad" => AuxFamily::SymExpQuad,
            "sym_power_k" => AuxFamily::SymPowerK,
            "pollaczek_jacobi" => AuxFamily::Pollaczek,
            "shifted_jacobi_pow" => AuxFamily::ShiftedPow,
            "shifted_jacobi_jump" => AuxFamily::JsJump,
            "shifted_jacobi_fh" => AuxFamily::JsFh,
            _ => return None,
        })
    }
}

/// Named map of auxiliary scalars at the weight's current parameters.
#[derive(Clone, Debug, Default)]
pub struct AuxiliaryQuantities {
    pub values: BTreeMap<String, Real>,
}

impl AuxiliaryQuantities {
    pub fn get(&self, key: &str) -> Option<&Real> {
        self.values.get(key)
    }
}

/// Evaluate the family's auxiliary scalars against the engine's table.
/// Jump residues use the smooth weight at t_k (step factor excluded).
pub fn aux_quantities(
    engine: &LadderEngine,
    n: usize,
    fam: AuxFamily,
) -> Result<AuxiliaryQuantities> {
    let ctx = engine.ctx;
    let w = engine.w;
    let tab = engine.tab;
    if n + 1 > tab.cap {
        return Err(Error::DegreeOutOfRange(format!("n = {n}")));
    }
    let mut out = AuxiliaryQuantities::default();
    let mismatch =
        |msg: &str| -> Error { Error::FamilyMismatch(format!("{}: {msg}", fam.label())) };

    // weighted sums (1/h_n) int P_n^2 w g(x) dx and the P_n P_{n-1} analogue
    let weighted = |g: &dyn Fn(&Real) -> Real| -> (Real, Real) {
        let mut sq = ctx.zero();
        let mut mix = ctx.zero();
        for i in 0..engine.xs.len() {
            let gv = g(&engine.xs[i]);
            let pn = &engine.pj[n][i];
            let base = Real::with_val(ctx.bits(), &engine.ws[i] * &gv);
            sq += Real::with_val(ctx.bits(), pn * pn) * &base;
            if n > 0 {
                mix += Real::with_val(ctx.bits(), pn * &engine.pj[n - 1][i]) * &base;
            }
        }
        (
            sq / &tab.h[n],
            if n > 0 {
                mix / &tab.h[n - 1]
            } else {
                ctx.zero()
            },
        )
    };

    match fam {
        AuxFamily::ChenMcKay => {
            let Some(Atom::PowerShift { c, gamma }) = w
                .atoms()
                .iter()
                .find(|a| matches!(a, Atom::PowerShift { .. }))
            else {
                return Err(mismatch("expected (x+t)^gamma atom"));
            };
            let t = ctx.re(*c);
            let g = ctx.re(*gamma);
            let (sq, mix) = weighted(&|x| (x.clone() + &t).recip());
            out.values.insert("R_n".into(), g.clone() * sq);
            out.values.insert("r_n".into(), g * mix);
        }
        AuxFamily::LaguerreJump | AuxFamily::JacobiJump | AuxFamily::JsJump => {
            if engine.jumps.is_empty() {
                return Err(mismatch("expected jump points"));
            }
            for (k, jd) in engine.jumps.iter().enumerate() {
                let rnk =
                    Real::with_val(ctx.bits(), &jd.pj[n] * &jd.pj[n]) * &jd.factor / &tab.h[n];
                out.values.insert(format!("R_n_{}", k + 1), rnk);
                let r = if n > 0 {
                    Real::with_val(ctx.bits(), &jd.pj[n] * &jd.pj[n - 1]) * &jd.factor
                        / &tab.h[n - 1]
                } else {
                    ctx.zero()
                };
                out.values.insert(format!("r_n_{}", k + 1), r);
            }
        }
        AuxFamily::LaguerreFh | AuxFamily::JsFh => {
            let Some(f) = engine.fh.as_ref() else {
                return Err(mismatch("expected an FH factor"));
            };
            let (sq_key, mix_key) = if fam == AuxFamily::JsFh {
                ("u_n", "v_n")
            } else {
                ("R_n", "r_n")
            };
            out.values.insert(sq_key.into(), f.i1_sq[n].clone());
            out.values.insert(mix_key.into(), f.i1_mix[n].clone());
        }
        AuxFamily::ChenIts => {
            if !w.atoms().iter().any(|a| matches!(a, Atom::ExpInvX { .. })) {
                return Err(mismatch("expected e^{-s/x} atom"));
            }
            let (sq, mix) = weighted(&|x| x.clone().recip());
            out.values.insert("R_n".into(), sq);
            out.values.insert("r_n".into(), mix);
        }
        AuxFamily::JacobiExp => {
            let Some(Atom::ExpLinear { c }) = w
                .atoms()
                .iter()
                .find(|a| matches!(a, Atom::ExpLinear { .. }))
            else {
                return Err(mismatch("expected e^{-tx} atom"));
            };
            let Some((al, be)) = w.alpha_beta() else {
                return Err(mismatch("expected Jacobi exponents"));
            };
            let t = ctx.re(*c);
            // R_n = (2n+1+a+b - t alpha_n - t)/2, r_n = (n - t beta_n - p(n))/2
            let rn = (ctx.re_u(2 * n as u64 + 1) + ctx.re(al) + ctx.re(be)
                - t.clone() * &tab.alpha[n]
                - &t)
                / ctx.re(2.0);
            let r = (ctx.re_u(n as u64) - t.clone() * &tab.beta[n] - &tab.p1[n]) / ctx.re(2.0);
            out.values.insert("R_n".into(), rn);
            out.values.insert("r_n".into(), r);
        }
        AuxFamily::SymExpQuad => {
            let Some(Atom::ExpQuad { t }) =
                w.atoms().iter().find(|a| matches!(a, Atom::ExpQuad { .. }))
            else {
                return Err(mismatch("expected e^{-tx^2} atom"));
            };
            let Some((al, _)) = w.alpha_beta() else {
                return Err(mismatch("expected Jacobi exponents"));
            };
            if n + 2 > tab.cap {
                return Err(Error::DegreeOutOfRange(format!("R_n needs beta_{}", n + 1)));
            }
            let t = ctx.re(*t);
            // R_n = 2n+1+2a - 2t(beta_{n+1}+beta_n), r_n = n - 2t beta_n
            let rn = ctx.re_u(2 * n as u64 + 1) + ctx.re(2.0) * ctx.re(al)
                - ctx.re(2.0) * t.clone() * (tab.beta[n + 1].clone() + &tab.beta[n]);
            let r = ctx.re_u(n as u64) - ctx.re(2.0) * t * &tab.beta[n];
            out.values.insert("R_n".into(), rn);
            out.values.insert("r_n".into(), r);
            // q(n,t): coefficient of x^{n-2} in P_n
            if n >= 2 {
                let coeffs = opcore::monic_coefficients(tab, n)?;
                out.values.insert("q_n".into(), coeffs[n - 2].clone());
            }
        }
        AuxFamily::SymPowerK => {
            let Some(Atom::PowerOneMinusK2X2 { k2, gamma }) = w
                .atoms()
                .iter()
                .find(|a| matches!(a, Atom::PowerOneMinusK2X2 { .. }))
            else {
                return Err(mismatch("expected (1-k^2x^2)^gamma atom"));
            };
            let inv_k = ctx.re(*k2).sqrt().recip();
            let g = ctx.re(*gamma);
            let (sq, mix) = weighted(&|x| (x.clone() + &inv_k).recip());
            out.values.insert("R_n_star".into(), g.clone() * sq);
            out.values.insert("r_n_star".into(), g * mix);
        }
        AuxFamily::Pollaczek => {
            let Some(Atom::ExpInvX { s }) =
                w.atoms().iter().find(|a| matches!(a, Atom::ExpInvX { .. }))
            else {
                return Err(mismatch("expected e^{-t/x} atom"));
            };
            let t = ctx.re(*s);
            let (sq, mix) = weighted(&|x| x.clone().recip());
            out.values.insert("R_n_star".into(), t.clone() * sq);
            out.values.insert("r_n_star".into(), t * mix);
        }
        AuxFamily::ShiftedPow => {
            let Some(Atom::PowerShiftNeg { t, gamma }) = w
                .atoms()
                .iter()
                .find(|a| matches!(a, Atom::PowerShiftNeg { .. }))
            else {
                return Err(mismatch("expected (x-t)^gamma atom"));
            };
            let tv = ctx.re(*t);
            let g = ctx.re(*gamma);
            let (sq, mix) = weighted(&|x| (x.clone() - &tv).recip());
            out.values.insert("a_n".into(), g.clone() * sq);
            out.values.insert("b_n".into(), g * mix);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// t-differential identities
// ---------------------------------------------------------------------------

/// Rebuild the weight with the family's deformation parameter set to an
/// absolute value (so the realized f64 parameter is known exactly).
fn with_t_set(w: &WeightSpec, fam: AuxFamily, t_new: f64) -> Result<WeightSpec> {
    let mismatch =
        |msg: &str| -> Error { Error::FamilyMismatch(format!("{}: {msg}", fam.label())) };
    let mut atoms = w.atoms().to_vec();
    let mut fh = w.fh().copied();
    match fam {
        AuxFamily::SymExpQuad => {
            let Some(a) = atoms.iter_mut().find(|a| matches!(a, Atom::ExpQuad { .. })) else {
                return Err(mismatch("expected e^{-tx^2} atom"));
            };
            if let Atom::ExpQuad { t } = a {
                *t = t_new;
            }
        }
        AuxFamily::ShiftedPow => {
            let Some(a) = atoms
                .iter_mut()
                .find(|a| matches!(a, Atom::PowerShiftNeg { .. }))
            else {
                return Err(mismatch("expected (x-t)^gamma atom"));
            };
            if let Atom::PowerShiftNeg { t, .. } = a {
                *t = t_new;
            }
        }
        AuxFamily::JsFh => {
            let Some(f) = fh.as_mut() else {
                return Err(mismatch("expected an FH factor"));
            };
            f.t = t_new;
        }
        _ => {
            return Err(Error::FamilyMismatch(format!(
                "{} carries no supported t-differential identities",
                fam.label()
            )))
        }
    }
    WeightSpec::new(w.family(), w.exponents(), atoms, w.jumps().cloned(), fh)
}

fn current_t(w: &WeightSpec, fam: AuxFamily) -> Result<f64> {
    match fam {
        AuxFamily::SymExpQuad => w
            .atoms()
            .iter()
            .find_map(|a| match a {
                Atom::ExpQuad { t } => Some(*t),
                _ => None,
            })
            .ok_or_else(|| Error::FamilyMismatch("missing e^{-tx^2} atom".into())),
        AuxFamily::ShiftedPow => w
            .atoms()
            .iter()
            .find_map(|a| match a {
                Atom::PowerShiftNeg { t, .. } => Some(*t),
                _ => None,
            })
            .ok_or_else(|| Error::FamilyMismatch("missing (x-t)^gamma atom".into())),
        AuxFamily::JsFh => w
            .fh()
            .map(|f| f.t)
            .ok_or_else(|| Error::FamilyMismatch("missing FH factor".into())),
        _ => Err(Error::FamilyMismatch(format!(
            "{} carries no supported t-differential identities",
            fam.label()
        ))),
    }
}

/// Normalized residuals of the t-differential identities for the family:
/// symmetric e^{-tx^2}: `2t (ln h_n)' = R_n - 2n - 1 - 2alpha` and
/// `2t q(n,t)' = 2t beta_n beta_{n-1}`; shifted (x-t)^gamma:
/// `(ln h_n)' = -a_n`, `p(n,t)' = b_n`; shifted FH: `(ln h_n)' = -u_n`,
/// `p(n,t)' = v_n`. Derivatives are central differences; a step/2
/// disagreement far outside the asymptotic regime raises `StepTooLarge`.
pub fn diff_identity_residuals(
    ctx: Ctx,
    w: &WeightSpec,
    fam: AuxFamily,
    n: usize,
    m: usize,
    step: f64,
) -> Result<BTreeMap<String, Real>> {
    if step <= 0.0 {
        return Err(Error::Config("step must be positive".to_string()));
    }
    let cap = n + 2;
    let t0 = current_t(w, fam)?;

    // center table + aux
    let (tab0, _) = opcore::recurrence_stieltjes(ctx, w, cap, m)?;
    let engine0 = LadderEngine::new(ctx, w, &tab0, m)?;
    let aux = aux_quantities(&engine0, n, fam)?;

    // h_n, p(n) (and q(n)) at four shifted parameters; the realized f64
    // parameter values are kept so the difference quotients divide by the
    // exact parameter spacing (t0 +/- step rounds in f64, and that rounding
    // would otherwise dominate the quotient at small steps)
    let eval_at = |t_new: f64| -> Result<(Real, Real, Option<Real>)> {
        let ws = with_t_set(w, fam, t_new)?;
        let (tab, _) = opcore::recurrence_stieltjes(ctx, &ws, cap, m)?;
        let q = if fam == AuxFamily::SymExpQuad && n >= 2 {
            Some(opcore::monic_coefficients(&tab, n)?[n - 2].clone())
        } else {
            None
        };
        Ok((tab.h[n].clone(), tab.p1[n].clone(), q))
    };
    let tp = t0 + step;
    let tm = t0 - step;
    let tp2 = t0 + step / 2.0;
    let tm2 = t0 - step / 2.0;
    let (h_p, p_p, q_p) = eval_at(tp)?;
    let (h_m, p_m, q_m) = eval_at(tm)?;
    let (h_p2, p_p2, q_p2) = eval_at(tp2)?;
    let (h_m2, p_m2, q_m2) = eval_at(tm2)?;
    let span1 = ctx.re(tp) - ctx.re(tm);
    let span2 = ctx.re(tp2) - ctx.re(tm2);

    let central =
        |fp: &Real, fm: &Real, span: &Real| -> Real { Real::with_val(ctx.bits(), fp - fm) / span };
    let check_step = |d1: &Real, d2: &Real| -> Result<()> {
        // d2 comes from the halved step; the pair differs by ~3/4 of the
        // step bias, so disagreement above ~1e-4 means the quotient cannot
        // support the 1e-8..1e-10 identity tolerances
        let denom = ctx.one() + d2.clone().abs();
        let rel = Real::with_val(ctx.bits(), d1 - d2).abs() / denom;
        if rel > 1e-4f64 {
            return Err(Error::StepTooLarge(format!(
                "central differences disagree by {:e} relative",
                rel.to_f64()
            )));
        }
        Ok(())
    };

    let dlnh_1 = central(&h_p.clone().ln(), &h_m.clone().ln(), &span1);
    let dlnh = central(&h_p2.clone().ln(), &h_m2.clone().ln(), &span2);
    check_step(&dlnh_1, &dlnh)?;
    let dp_1 = central(&p_p, &p_m, &span1);
    let dp = central(&p_p2, &p_m2, &span2);
    check_step(&dp_1, &dp)?;

    let mut out = BTreeMap::new();
    let norm = |num: Real, scale: &Real| -> Real {
        let denom = ctx.one() + scale.clone().abs();
        num.abs() / denom
    };

    match fam {
        AuxFamily::SymExpQuad => {
            let (al, _) = w.alpha_beta().unwrap();
            let rn = aux.get("R_n").unwrap().clone();
            // 2t dlnh = R_n - 2n - 1 - 2 alpha
            let t = ctx.re(t0);
            let rhs = rn - ctx.re_u(2 * n as u64 + 1) - ctx.re(2.0) * ctx.re(al);
            let lhs = ctx.re(2.0) * t.clone() * &dlnh;
            out.insert("dlnh".to_string(), norm(lhs - &rhs, &rhs));
            // 2t dq = 2t beta_n beta_{n-1} (n >= 2)
            if let (Some(qp), Some(qm)) = (&q_p2, &q_m2) {
                let dq = central(qp, qm, &span2);
                if let (Some(qp1), Some(qm1)) = (&q_p, &q_m) {
                    check_step(&central(qp1, qm1, &span1), &dq)?;
                }
                let bb = Real::with_val(ctx.bits(), &tab0.beta[n] * &tab0.beta[n - 1]);
                let rhs = ctx.re(2.0) * t.clone() * &bb;
                let lhs = ctx.re(2.0) * t * dq;
                out.insert("dq".to_string(), norm(lhs - &rhs, &rhs));
            }
        }
        AuxFamily::ShiftedPow => {
            let an = aux.get("a_n").unwrap().clone();
            let bn = aux.get("b_n").unwrap().clone();
            out.insert("dlnh".to_string(), norm(dlnh + &an, &an));
            out.insert("dp".to_string(), norm(dp - &bn, &bn));
        }
        AuxFamily::JsFh => {
            let un = aux.get("u_n").unwrap().clone();
            let vn = aux.get("v_n").unwrap().clone();
            out.insert("dlnh".to_string(), norm(dlnh + &un, &un));
            out.insert("dp".to_string(), norm(dp - &vn, &vn));
        }
        _ => unreachable!("validated by current_t"),
    }
    Ok(out)
}
