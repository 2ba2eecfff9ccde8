//! Riemann-Hilbert objects: the 2x2 matrix Y(z) built from monic polynomials
//! and Cauchy transforms, Y'(z), R(z) = Y'(z) Y(z)^-1, and the residuals of
//! det Y = 1, the Cauchy commutation identity Q_m(z) C(P_n w) = C(Q_m P_n w),
//! the closed-form R-element formulas, the ladder-from-R reconstruction of
//! P_n', and the boundary jump condition (Plemelj smoke check).
//!
//! Y(z) layout:
//! `[[P_n(z), C(P_n w)/(2 pi i)], [-2 pi i P_{n-1}(z)/h_{n-1}, -C(P_{n-1} w)/h_{n-1}]]`
//! with `C(f)(z) = int f(x)/(x-z) dx`. Y'(z) uses the exact P' recurrences
//! and the differentiated Cauchy transform (squared denominator), never
//! finite differences in z. Y^-1 is the unit-determinant adjugate; det Y is
//! still reported from the raw entries.

use crate::error::{Error, Result};
use crate::opcore::{self, RecurrenceTable};
use crate::precision::{CFloat, Ctx, Real};
use crate::quadrature::{build_rules, RulePlan, WeightedRules};
use crate::weights::{Family, WeightSpec};

pub type Mat2 = [[CFloat; 2]; 2];

/// Y, Y', R and the raw determinant at one (n, z).
#[derive(Clone, Debug)]
pub struct RhpFrame {
    pub n: usize,
    pub z: CFloat,
    pub y: Mat2,
    pub yprime: Mat2,
    pub r: Mat2,
    pub dety: CFloat,
}

impl RhpFrame {
    /// |det Y - 1|.
    pub fn dety_residual(&self) -> Real {
        let ctx = Ctx::new(self.dety.prec());
        self.dety.sub(&ctx.cx(1.0, 0.0)).abs()
    }

    /// |R_{1,1} + R_{2,2}| (trace vanishes when det Y = 1).
    pub fn trace_residual(&self) -> Real {
        self.r[0][0].add(&self.r[1][1]).abs()
    }
}

/// Node caches for Cauchy-transform evaluation against one (weight, table).
pub struct RhpEngine<'a> {
    pub ctx: Ctx,
    pub w: &'a WeightSpec,
    pub tab: &'a RecurrenceTable,
    pub rules: WeightedRules,
    xs: Vec<Real>,
    ws: Vec<Real>,
    fvals: Vec<Real>,
    pj: Vec<Vec<Real>>,
    two_pi_i: CFloat,
}

impl<'a> RhpEngine<'a> {
    pub fn new(ctx: Ctx, w: &'a WeightSpec, tab: &'a RecurrenceTable, m: usize) -> Result<Self> {
        let rules = build_rules(ctx, w, &RulePlan::standard(m, 2 * tab.cap + 8))?;
        Self::with_rules(ctx, w, tab, rules)
    }

    pub fn with_rules(
        ctx: Ctx,
        w: &'a WeightSpec,
        tab: &'a RecurrenceTable,
        rules: WeightedRules,
    ) -> Result<Self> {
        let (xs, ws) = rules.flat_nodes();
        let fvals: Vec<Real> = xs
            .iter()
            .map(|x| w.family_f_at(ctx, x))
            .collect::<Result<_>>()?;
        let pj = opcore::polynomial_node_values(ctx, tab, &xs, tab.cap);
        let two_pi_i = CFloat {
            re: ctx.zero(),
            im: ctx.re(2.0) * ctx.pi(),
        };
        Ok(RhpEngine {
            ctx,
            w,
            tab,
            rules,
            xs,
            ws,
            fvals,
            pj,
            two_pi_i,
        })
    }

    fn check_z(&self, z: &CFloat) -> Result<()> {
        self.w.check_z_off_support(z)
    }

    /// Cauchy transform `C(P_k w)(z)` or its z-derivative
    /// `int P_k(x) w(x)/(x-z)^2 dx`.
    pub fn cauchy(&self, k: usize, z: &CFloat, differentiated: bool) -> Result<CFloat> {
        self.check_z(z)?;
        if k > self.tab.cap {
            return Err(Error::DegreeOutOfRange(format!("k = {k}")));
        }
        let ctx = self.ctx;
        let mut acc = ctx.czero();
        for i in 0..self.xs.len() {
            let d = CFloat {
                re: Real::with_val(ctx.bits(), &self.xs[i] - &z.re),
                im: -z.im.clone(),
            };
            let inv = if differentiated {
                d.sqr().recip()
            } else {
                d.recip()
            };
            let v = Real::with_val(ctx.bits(), &self.pj[k][i] * &self.ws[i]);
            acc.add_mul_real(&inv, &v);
        }
        Ok(acc)
    }

    /// Assemble Y, Y', R = Y' adj(Y) and the raw determinant.
    pub fn y_frame(&self, n: usize, z: &CFloat) -> Result<RhpFrame> {
        if n < 1 || n > self.tab.cap {
            return Err(Error::DegreeOutOfRange(format!("n = {n}")));
        }
        self.check_z(z)?;
        let (pn, dpn) = opcore::eval_monic_cx(self.tab, n, z)?;
        let (pm, dpm) = opcore::eval_monic_cx(self.tab, n - 1, z)?;
        let c_n = self.cauchy(n, z, false)?;
        let c_m = self.cauchy(n - 1, z, false)?;
        let dc_n = self.cauchy(n, z, true)?;
        let dc_m = self.cauchy(n - 1, z, true)?;
        let h_m = &self.tab.h[n - 1];

        let y = [
            [pn.clone(), c_n.div(&self.two_pi_i)],
            [
                pm.mul(&self.two_pi_i).div_real(h_m).neg(),
                c_m.div_real(h_m).neg(),
            ],
        ];
        let yprime = [
            [dpn.clone(), dc_n.div(&self.two_pi_i)],
            [
                dpm.mul(&self.two_pi_i).div_real(h_m).neg(),
                dc_m.div_real(h_m).neg(),
            ],
        ];
        let dety = y[0][0].mul(&y[1][1]).sub(&y[0][1].mul(&y[1][0]));
        // R = Y' * adj(Y) with det Y = 1: adj = [[y22, -y12], [-y21, y11]]
        let r = [
            [
                yprime[0][0].mul(&y[1][1]).sub(&yprime[0][1].mul(&y[1][0])),
                yprime[0][1].mul(&y[0][0]).sub(&yprime[0][0].mul(&y[0][1])),
            ],
            [
                yprime[1][0].mul(&y[1][1]).sub(&yprime[1][1].mul(&y[1][0])),
                yprime[1][1].mul(&y[0][0]).sub(&yprime[1][0].mul(&y[0][1])),
            ],
        ];
        Ok(RhpFrame {
            n,
            z: z.clone(),
            y,
            yprime,
            r,
            dety,
        })
    }

    /// Normalized residual of `Q_m(z) C(P_n w) - C(Q_m P_n w)`, with Q_m
    /// either the monic P_m or the monomial x^m. The identity holds for
    /// m <= n; at m = n+1 the monomial witness leaves exactly h_n behind.
    #[allow(clippy::needless_range_loop)] // index pairs several node arrays
    pub fn cauchy_commutes_residual(
        &self,
        m_deg: usize,
        n: usize,
        z: &CFloat,
        monomial: bool,
    ) -> Result<Real> {
        self.check_z(z)?;
        if n > self.tab.cap {
            return Err(Error::DegreeOutOfRange(format!("n = {n}")));
        }
        let ctx = self.ctx;
        // Q_m at z and at the nodes
        let (qz, q_nodes): (CFloat, Vec<Real>) = if monomial {
            let mut qz = ctx.cx(1.0, 0.0);
            for _ in 0..m_deg {
                qz = qz.mul(z);
            }
            let q_nodes = self
                .xs
                .iter()
                .map(|x| {
                    let mut p = ctx.one();
                    for _ in 0..m_deg {
                        p *= x;
                    }
                    p
                })
                .collect();
            (qz, q_nodes)
        } else {
            if m_deg > self.tab.cap {
                return Err(Error::DegreeOutOfRange(format!("m = {m_deg}")));
            }
            let (qz, _) = opcore::eval_monic_cx(self.tab, m_deg, z)?;
            (qz, self.pj[m_deg].clone())
        };

        let lhs = qz.mul(&self.cauchy(n, z, false)?);
        let mut rhs = ctx.czero();
        for i in 0..self.xs.len() {
            let d = CFloat {
                re: Real::with_val(ctx.bits(), &self.xs[i] - &z.re),
                im: -z.im.clone(),
            };
            let v = Real::with_val(ctx.bits(), &q_nodes[i] * &self.pj[n][i]) * &self.ws[i];
            rhs.add_mul_real(&d.recip(), &v);
        }
        let scale = {
            let a = lhs.abs();
            let b = rhs.abs();
            let m = if a > b { a } else { b };
            if m.is_zero() {
                ctx.one()
            } else {
                m
            }
        };
        Ok(lhs.sub(&rhs).abs() / scale)
    }

    /// Element-wise normalized difference between R from the frame and the
    /// family's closed integral formulas (smooth weights only).
    pub fn r_elements_residual(&self, n: usize, z: &CFloat) -> Result<[[Real; 2]; 2]> {
        let frame = self.y_frame(n, z)?;
        self.r_elements_residual_with(&frame)
    }

    /// Same check against an already-computed frame.
    pub fn r_elements_residual_with(&self, frame: &RhpFrame) -> Result<[[Real; 2]; 2]> {
        if self.w.jumps().is_some() || self.w.fh().is_some() {
            return Err(Error::Unsupported(
                "R-element formulas are stated for smooth weights".to_string(),
            ));
        }
        let (n, z) = (frame.n, &frame.z);
        let ctx = self.ctx;
        let h_m = &self.tab.h[n - 1];
        let h_n = &self.tab.h[n];

        // J_ab = int F(x) P_a P_b w /(x-z) dx with F the family map
        let mut j_mix = ctx.czero();
        let mut j_sq = ctx.czero();
        let mut j_sqm = ctx.czero();
        for i in 0..self.xs.len() {
            let d = CFloat {
                re: Real::with_val(ctx.bits(), &self.xs[i] - &z.re),
                im: -z.im.clone(),
            };
            let inv = d.recip();
            let base = Real::with_val(ctx.bits(), &self.fvals[i] * &self.ws[i]);
            let pn = &self.pj[n][i];
            let pm = &self.pj[n - 1][i];
            j_mix.add_mul_real(&inv, &(Real::with_val(ctx.bits(), pn * pm) * &base));
            j_sq.add_mul_real(&inv, &(Real::with_val(ctx.bits(), pn * pn) * &base));
            j_sqm.add_mul_real(&inv, &(Real::with_val(ctx.bits(), pm * pm) * &base));
        }

        let one = ctx.cx(1.0, 0.0);
        let nf = ctx.re_u(n as u64);
        let (r11f, r12f, r21f) = match self.w.family() {
            Family::Laguerre => {
                // R11 = -(1/z)(J_mix/h_{n-1} - n); R12 = -(1/(2 pi i z)) J_sq;
                // R21 = (2 pi i/h_{n-1}^2)(1/z) J_sqm
                let inv_z = z.recip();
                let r11 = inv_z.mul(&j_mix.div_real(h_m).sub_real(&nf)).neg();
                let r12 = inv_z.mul(&j_sq).div(&self.two_pi_i).neg();
                let r21 = inv_z
                    .mul(&j_sqm)
                    .mul(&self.two_pi_i)
                    .div_real(&Real::with_val(ctx.bits(), h_m * h_m));
                (r11, r12, r21)
            }
            Family::Jacobi => {
                // prefactor 1/(z^2-1); counting nz - p(n), (2n+1)h_n, (2n-1)h_{n-1}
                let pf = z.sqr().sub(&one).recip();
                let count = z.mul_real(&nf).sub_real(&self.tab.p1[n]);
                let r11 = pf.mul(&j_mix.div_real(h_m).add(&count));
                let c12 = Real::with_val(ctx.bits(), h_n * &ctx.re_u(2 * n as u64 + 1));
                let r12 = pf.mul(&j_sq.add_real(&c12)).div(&self.two_pi_i);
                let c21 = Real::with_val(ctx.bits(), h_m * &ctx.re_u(2 * n as u64 - 1));
                let r21 = pf
                    .mul(&j_sqm.add_real(&c21))
                    .mul(&self.two_pi_i)
                    .div_real(&Real::with_val(ctx.bits(), h_m * h_m))
                    .neg();
                (r11, r12, r21)
            }
            Family::ShiftedJacobi => {
                // prefactor 1/(z^2-z); counting n(z-1) - p(n)
                let pf = z.sqr().sub(z).recip();
                let count = z.sub(&one).mul_real(&nf).sub_real(&self.tab.p1[n]);
                let r11 = pf.mul(&j_mix.div_real(h_m).add(&count));
                let c12 = Real::with_val(ctx.bits(), h_n * &ctx.re_u(2 * n as u64 + 1));
                let r12 = pf.mul(&j_sq.add_real(&c12)).div(&self.two_pi_i);
                let c21 = Real::with_val(ctx.bits(), h_m * &ctx.re_u(2 * n as u64 - 1));
                let r21 = pf
                    .mul(&j_sqm.add_real(&c21))
                    .mul(&self.two_pi_i)
                    .div_real(&Real::with_val(ctx.bits(), h_m * h_m))
                    .neg();
                (r11, r12, r21)
            }
        };
        let r22f = r11f.neg();

        let formulas = [[r11f, r12f], [r21f, r22f]];
        let mut out: [[Real; 2]; 2] = [[ctx.zero(), ctx.zero()], [ctx.zero(), ctx.zero()]];
        for i in 0..2 {
            for j in 0..2 {
                let a = frame.r[i][j].abs();
                let b = formulas[i][j].abs();
                let mut scale = if a > b { a } else { b };
                if scale.is_zero() {
                    scale = ctx.one();
                }
                out[i][j] = frame.r[i][j].sub(&formulas[i][j]).abs() / scale;
            }
        }
        Ok(out)
    }

    /// Residuals of reconstructing P_n' and P_{n-1}' from R:
    /// `P_n' = R_11 P_n - (2 pi i/h_{n-1}) R_12 P_{n-1}` and
    /// `P_{n-1}' = -(h_{n-1}/(2 pi i)) R_21 P_n + R_22 P_{n-1}`.
    pub fn ladder_from_r_residuals(&self, n: usize, z: &CFloat) -> Result<(Real, Real)> {
        let frame = self.y_frame(n, z)?;
        self.ladder_from_r_residuals_with(&frame)
    }

    /// Same reconstruction against an already-computed frame.
    pub fn ladder_from_r_residuals_with(&self, frame: &RhpFrame) -> Result<(Real, Real)> {
        let (n, z) = (frame.n, &frame.z);
        let ctx = self.ctx;
        let h_m = &self.tab.h[n - 1];
        let (pn, dpn) = opcore::eval_monic_cx(self.tab, n, z)?;
        let (pm, dpm) = opcore::eval_monic_cx(self.tab, n - 1, z)?;

        let t1 = frame.r[0][0].mul(&pn);
        let t2 = frame.r[0][1].mul(&pm).mul(&self.two_pi_i).div_real(h_m);
        let rec_n = t1.sub(&t2);
        let scale_n = {
            let m = dpn.abs();
            if m.is_zero() {
                ctx.one()
            } else {
                m
            }
        };
        let res_n = dpn.sub(&rec_n).abs() / scale_n;

        let t3 = frame.r[1][0]
            .mul(&pn)
            .mul_real(h_m)
            .div(&self.two_pi_i)
            .neg();
        let t4 = frame.r[1][1].mul(&pm);
        let rec_m = t3.add(&t4);
        let scale_m = {
            let m = dpm.abs();
            if m.is_zero() {
                ctx.one()
            } else {
                m
            }
        };
        let res_m = dpm.sub(&rec_m).abs() / scale_m;
        Ok((res_n, res_m))
    }
}

/// Boundary jump smoke check: with Y+ evaluated at x0 + i eps and Y- at
/// x0 - i eps, the second column must satisfy
/// `Y+[i][1] = Y-[i][0] w(x0) + Y-[i][1]` up to O(eps). Uses rules refined
/// dyadically toward x0 so the Cauchy integrals resolve the boundary spike.
pub fn plemelj_residual(
    ctx: Ctx,
    w: &WeightSpec,
    tab: &RecurrenceTable,
    n: usize,
    x0: f64,
    eps: f64,
    m: usize,
) -> Result<Real> {
    let mut plan = RulePlan::standard(m, 2 * tab.cap + 8);
    plan.refine = vec![(x0, eps / 2.0)];
    let rules = build_rules(ctx, w, &plan)?;
    let engine = RhpEngine::with_rules(ctx, w, tab, rules)?;
    let z_plus = ctx.cx(x0, eps);
    let z_minus = ctx.cx(x0, -eps);
    let fp = engine.y_frame(n, &z_plus)?;
    let fm = engine.y_frame(n, &z_minus)?;
    let wx0 = w.weight_at(ctx, &ctx.re(x0))?;

    let mut worst = ctx.zero();
    for i in 0..2 {
        // first column: entire entries, equal across the cut up to
        // O(eps |Y'|); scale by entry + derivative so a zero of P_n at x0
        // cannot inflate the ratio
        let col1 = fp.y[i][0].sub(&fm.y[i][0]).abs();
        let scale1 = ctx.one() + fm.y[i][0].abs() + fm.yprime[i][0].abs();
        let r1 = col1 / scale1;
        if r1 > worst {
            worst = r1;
        }
        let expect = fm.y[i][0].mul_real(&wx0).add(&fm.y[i][1]);
        let scale = {
            let a = fp.y[i][1].abs();
            let b = expect.abs();
            let mm = if a > b { a } else { b };
            if mm.is_zero() {
                ctx.one()
            } else {
                mm
            }
        };
        let r = fp.y[i][1].sub(&expect).abs() / scale;
        if r > worst {
            worst = r;
        }
    }
    Ok(worst)
}
