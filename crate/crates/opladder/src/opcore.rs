//! Moments, recurrence coefficients, norms, Hankel determinants, monic
//! polynomial evaluation, and the Christoffel-Darboux kernel.
//!
//! The production path for recurrence coefficients is the Stieltjes
//! inner-product recursion over the quadrature node values; the
//! moment-determinant route is kept as an independent oracle for small n,
//! where Hankel conditioning is manageable at 256+ bits.

use crate::error::{Error, Result};
use crate::precision::{CFloat, Ctx, Real};
use crate::quadrature::{build_rules, RulePlan, WeightedRules};
use crate::weights::WeightSpec;

/// Power moments `mu[j] = int x^j w(x) dx`.
#[derive(Clone, Debug)]
pub struct MomentVector {
    pub mu: Vec<Real>,
}

/// Monic three-term recurrence data up to a degree cap:
/// `x P_j = P_{j+1} + alpha_j P_j + beta_j P_{j-1}` with `beta_0 := 0`,
/// norms `h_j`, and sub-leading coefficients `p1[j] = p(j)` with
/// `p(n+1) = p(n) - alpha_n`.
#[derive(Clone, Debug)]
pub struct RecurrenceTable {
    pub alpha: Vec<Real>,
    pub beta: Vec<Real>,
    pub h: Vec<Real>,
    pub p1: Vec<Real>,
    pub cap: usize,
    pub bits: u32,
}

impl RecurrenceTable {
    pub fn ctx(&self) -> Ctx {
        Ctx::new(self.bits)
    }

    /// Testing aid: additively perturb beta_j (canary sensitivity checks).
    pub fn perturb_beta(&mut self, j: usize, delta: f64) {
        if j < self.beta.len() {
            let ctx = self.ctx();
            self.beta[j] += ctx.re(delta);
        }
    }
}

/// `mu[j]` for `j = 0..=j_max` against an existing rule set.
pub fn moments(ctx: Ctx, rules: &WeightedRules, j_max: usize) -> Result<MomentVector> {
    let (xs, ws) = rules.flat_nodes();
    let mut mu = Vec::with_capacity(j_max + 1);
    let mut xk: Vec<Real> = vec![ctx.one(); xs.len()];
    for j in 0..=j_max {
        if j > 0 {
            for (p, x) in xk.iter_mut().zip(&xs) {
                *p *= x;
            }
        }
        let mut acc = ctx.zero();
        for (p, w) in xk.iter().zip(&ws) {
            acc += p.clone() * w;
        }
        if !acc.is_finite() {
            return Err(Error::EvaluationFailure(format!("moment {j} non-finite")));
        }
        mu.push(acc);
    }
    Ok(MomentVector { mu })
}

/// Stieltjes inner-product recursion: `alpha_j = <x P_j, P_j>/h_j`,
/// `h_j = <P_j, P_j>`, `beta_j = h_j/h_{j-1}`. On a non-positive `h_j` or
/// `beta_j` the whole computation retries once at doubled mantissa before
/// surfacing `PrecisionExhausted`.
pub fn recurrence_stieltjes(
    ctx: Ctx,
    w: &WeightSpec,
    cap: usize,
    m: usize,
) -> Result<(RecurrenceTable, WeightedRules)> {
    if cap < 1 {
        return Err(Error::DegreeOutOfRange("cap must be >= 1".to_string()));
    }
    if m < 2 * cap + 8 {
        return Err(Error::BadNodeCount(format!(
            "m = {m} < 2*cap+8 = {}",
            2 * cap + 8
        )));
    }
    match stieltjes_once(ctx, w, cap, m) {
        Ok(out) => Ok(out),
        Err(Error::PrecisionExhausted(_)) => stieltjes_once(ctx.doubled(), w, cap, m),
        Err(e) => Err(e),
    }
}

fn stieltjes_once(
    ctx: Ctx,
    w: &WeightSpec,
    cap: usize,
    m: usize,
) -> Result<(RecurrenceTable, WeightedRules)> {
    let rules = build_rules(ctx, w, &RulePlan::standard(m, 2 * cap + 8))?;
    let (xs, ws) = rules.flat_nodes();
    let n_nodes = xs.len();

    let mut p_prev: Vec<Real> = vec![ctx.zero(); n_nodes];
    let mut p_cur: Vec<Real> = vec![ctx.one(); n_nodes];
    let mut alpha = Vec::with_capacity(cap);
    let mut beta = Vec::with_capacity(cap);
    let mut h: Vec<Real> = Vec::with_capacity(cap);

    for j in 0..cap {
        let mut hj = ctx.zero();
        let mut txj = ctx.zero();
        for i in 0..n_nodes {
            let wp2 = Real::with_val(ctx.bits(), &p_cur[i] * &p_cur[i]) * &ws[i];
            txj += Real::with_val(ctx.bits(), &wp2 * &xs[i]);
            hj += wp2;
        }
        if !(hj > 0) || !hj.is_finite() {
            return Err(Error::PrecisionExhausted(format!(
                "h_{j} = {:?} not positive",
                hj.to_f64()
            )));
        }
        let aj = txj / &hj;
        let bj = if j == 0 {
            ctx.zero()
        } else {
            let b = hj.clone() / &h[j - 1];
            if !(b > 0) {
                return Err(Error::PrecisionExhausted(format!("beta_{j} not positive")));
            }
            b
        };
        // advance node values to P_{j+1}
        for i in 0..n_nodes {
            let mut next = Real::with_val(ctx.bits(), &xs[i] - &aj);
            next *= &p_cur[i];
            if j > 0 {
                next -= Real::with_val(ctx.bits(), &bj * &p_prev[i]);
            }
            p_prev[i] = std::mem::replace(&mut p_cur[i], next);
        }
        alpha.push(aj);
        beta.push(bj);
        h.push(hj);
    }

    let mut p1: Vec<Real> = Vec::with_capacity(cap + 1);
    p1.push(ctx.zero());
    for j in 0..cap {
        p1.push(Real::with_val(ctx.bits(), &p1[j] - &alpha[j]));
    }

    Ok((
        RecurrenceTable {
            alpha,
            beta,
            h,
            p1,
            cap,
            bits: ctx.bits(),
        },
        rules,
    ))
}

/// Independent oracle: recurrence data from Hankel determinants of the
/// moments. `h_n = D_{n+1}/D_n`; `p(n)` from the bordered determinant with
/// rows {0..n-2, n}; `alpha_n = p(n) - p(n+1)`. Needs `mu` up to 2*cap.
#[allow(clippy::needless_range_loop)] // n indexes both borders and D_n
pub fn recurrence_moment_oracle(
    ctx: Ctx,
    mv: &MomentVector,
    cap: usize,
) -> Result<RecurrenceTable> {
    if mv.mu.len() < 2 * cap {
        return Err(Error::DegreeOutOfRange(format!(
            "need {} moments, have {}",
            2 * cap,
            mv.mu.len()
        )));
    }
    let mu = &mv.mu;
    // D_n for n = 0..=cap (D_0 := 1)
    let mut d = vec![ctx.one()];
    for n in 1..=cap {
        let m: Vec<Vec<Real>> = (0..n)
            .map(|i| (0..n).map(|j| mu[i + j].clone()).collect())
            .collect();
        d.push(determinant(ctx, m));
    }
    let mut h = Vec::with_capacity(cap);
    for (n, pair) in d.windows(2).enumerate() {
        let hn = Real::with_val(ctx.bits(), &pair[1] / &pair[0]);
        if !(hn > 0) || !hn.is_finite() {
            return Err(Error::PrecisionExhausted(format!(
                "oracle h_{n} not positive"
            )));
        }
        h.push(hn);
    }
    // p(n) = -det(rows 0..n-2 and n, cols 0..n-1)/D_n for n >= 1
    let mut p1 = vec![ctx.zero()];
    for n in 1..=cap {
        let rows: Vec<usize> = (0..n - 1).chain(std::iter::once(n)).collect();
        let m: Vec<Vec<Real>> = rows
            .iter()
            .map(|&i| (0..n).map(|j| mu[i + j].clone()).collect())
            .collect();
        let det = determinant(ctx, m);
        p1.push(-(det / &d[n]));
    }
    let mut alpha = Vec::with_capacity(cap);
    for n in 0..cap {
        alpha.push(Real::with_val(ctx.bits(), &p1[n] - &p1[n + 1]));
    }
    let mut beta = vec![ctx.zero()];
    for n in 1..cap {
        let b = Real::with_val(ctx.bits(), &h[n] / &h[n - 1]);
        if !(b > 0) {
            return Err(Error::PrecisionExhausted(format!(
                "oracle beta_{n} not positive"
            )));
        }
        beta.push(b);
    }
    Ok(RecurrenceTable {
        alpha,
        beta,
        h,
        p1,
        cap,
        bits: ctx.bits(),
    })
}

/// LU determinant with partial pivoting.
#[allow(clippy::needless_range_loop)] // in-place elimination needs split indexing
fn determinant(ctx: Ctx, mut m: Vec<Vec<Real>>) -> Real {
    let n = m.len();
    let mut det = ctx.one();
    for k in 0..n {
        let mut piv = k;
        let mut best = m[k][k].clone().abs();
        for (r, row) in m.iter().enumerate().skip(k + 1) {
            let v = row[k].clone().abs();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best.is_zero() {
            return ctx.zero();
        }
        if piv != k {
            m.swap(piv, k);
            det = -det;
        }
        det *= &m[k][k];
        for r in k + 1..n {
            let f = Real::with_val(ctx.bits(), &m[r][k] / &m[k][k]);
            for c in k + 1..n {
                let sub = Real::with_val(ctx.bits(), &f * &m[k][c]);
                m[r][c] -= sub;
            }
        }
    }
    det
}

/// Monic P_n(x) and P_n'(x) by simultaneous forward recurrence (real x).
pub fn eval_monic(tab: &RecurrenceTable, n: usize, x: &Real) -> Result<(Real, Real)> {
    if n > tab.cap {
        return Err(Error::DegreeOutOfRange(format!(
            "n = {n} > cap = {}",
            tab.cap
        )));
    }
    let ctx = tab.ctx();
    let mut p_prev = ctx.zero();
    let mut p = ctx.one();
    let mut dp_prev = ctx.zero();
    let mut dp = ctx.zero();
    for j in 0..n {
        let xa = Real::with_val(ctx.bits(), x - &tab.alpha[j]);
        let mut p_next = Real::with_val(ctx.bits(), &xa * &p);
        let mut dp_next = p.clone() + xa * &dp;
        if j > 0 {
            p_next -= Real::with_val(ctx.bits(), &tab.beta[j] * &p_prev);
            dp_next -= Real::with_val(ctx.bits(), &tab.beta[j] * &dp_prev);
        }
        p_prev = p;
        p = p_next;
        dp_prev = dp;
        dp = dp_next;
    }
    Ok((p, dp))
}

/// Monic P_n(z) and P_n'(z) at complex z.
pub fn eval_monic_cx(tab: &RecurrenceTable, n: usize, z: &CFloat) -> Result<(CFloat, CFloat)> {
    if n > tab.cap {
        return Err(Error::DegreeOutOfRange(format!(
            "n = {n} > cap = {}",
            tab.cap
        )));
    }
    let ctx = tab.ctx();
    let mut p_prev = ctx.czero();
    let mut p = ctx.cx(1.0, 0.0);
    let mut dp_prev = ctx.czero();
    let mut dp = ctx.czero();
    for j in 0..n {
        let xa = z.sub_real(&tab.alpha[j]);
        let mut p_next = xa.mul(&p);
        let mut dp_next = p.add(&xa.mul(&dp));
        if j > 0 {
            p_next = p_next.sub(&p_prev.mul_real(&tab.beta[j]));
            dp_next = dp_next.sub(&dp_prev.mul_real(&tab.beta[j]));
        }
        p_prev = p;
        p = p_next;
        dp_prev = dp;
        dp = dp_next;
    }
    Ok((p, dp))
}

/// Coefficients of P_n in ascending powers (exact given the table).
pub fn monic_coefficients(tab: &RecurrenceTable, n: usize) -> Result<Vec<Real>> {
    if n > tab.cap {
        return Err(Error::DegreeOutOfRange(format!(
            "n = {n} > cap = {}",
            tab.cap
        )));
    }
    let ctx = tab.ctx();
    let mut prev: Vec<Real> = vec![];
    let mut cur = vec![ctx.one()];
    for j in 0..n {
        let mut next = vec![ctx.zero(); j + 2];
        for (k, c) in cur.iter().enumerate() {
            next[k + 1] += c; // x * P_j
            let t = Real::with_val(ctx.bits(), &tab.alpha[j] * c);
            next[k] -= t;
        }
        if j > 0 {
            for (k, c) in prev.iter().enumerate() {
                next[k] -= Real::with_val(ctx.bits(), &tab.beta[j] * c);
            }
        }
        prev = std::mem::replace(&mut cur, next);
    }
    Ok(cur)
}

/// Hankel determinants D_1..D_cap as prefix products of the norms.
pub fn hankel_dets(tab: &RecurrenceTable) -> Vec<Real> {
    let ctx = tab.ctx();
    let mut out = Vec::with_capacity(tab.cap);
    let mut acc = ctx.one();
    for j in 0..tab.cap {
        acc *= &tab.h[j];
        out.push(acc.clone());
    }
    out
}

/// Christoffel-Darboux kernel, closed two-term form; the x = y limit uses the
/// derivative values.
pub fn cd_kernel(tab: &RecurrenceTable, n: usize, x: &Real, y: &Real) -> Result<Real> {
    if n < 1 || n > tab.cap {
        return Err(Error::DegreeOutOfRange(format!("n = {n}")));
    }
    let ctx = tab.ctx();
    let (pnx, dpnx) = eval_monic(tab, n, x)?;
    let (pmx, dpmx) = eval_monic(tab, n - 1, x)?;
    if x == y {
        let num = dpnx * &pmx - dpmx * &pnx;
        return Ok(num / &tab.h[n - 1]);
    }
    let (pny, _) = eval_monic(tab, n, y)?;
    let (pmy, _) = eval_monic(tab, n - 1, y)?;
    let num = pnx * &pmy - pmx * &pny;
    let den = Real::with_val(ctx.bits(), x - y) * &tab.h[n - 1];
    Ok(num / den)
}

/// Christoffel-Darboux kernel at complex arguments, closed two-term form.
pub fn cd_kernel_cx(tab: &RecurrenceTable, n: usize, x: &CFloat, y: &CFloat) -> Result<CFloat> {
    if n < 1 || n > tab.cap {
        return Err(Error::DegreeOutOfRange(format!("n = {n}")));
    }
    let (pnx, dpnx) = eval_monic_cx(tab, n, x)?;
    let (pmx, dpmx) = eval_monic_cx(tab, n - 1, x)?;
    if x == y {
        let num = dpnx.mul(&pmx).sub(&dpmx.mul(&pnx));
        return Ok(num.div_real(&tab.h[n - 1]));
    }
    let (pny, _) = eval_monic_cx(tab, n, y)?;
    let (pmy, _) = eval_monic_cx(tab, n - 1, y)?;
    let num = pnx.mul(&pmy).sub(&pmx.mul(&pny));
    let den = x.sub(y).mul_real(&tab.h[n - 1]);
    Ok(num.div(&den))
}

/// Christoffel-Darboux kernel, sum form `sum_{j<n} P_j(x)P_j(y)/h_j`.
pub fn cd_kernel_sum(tab: &RecurrenceTable, n: usize, x: &Real, y: &Real) -> Result<Real> {
    if n < 1 || n > tab.cap {
        return Err(Error::DegreeOutOfRange(format!("n = {n}")));
    }
    let ctx = tab.ctx();
    let mut acc = ctx.zero();
    for j in 0..n {
        let (pjx, _) = eval_monic(tab, j, x)?;
        let (pjy, _) = eval_monic(tab, j, y)?;
        acc += pjx * pjy / &tab.h[j];
    }
    Ok(acc)
}

/// Worst normalized orthogonality residual `|<P_i, P_j>| / sqrt(h_i h_j)`
/// over 0 <= i < j <= upto.
pub fn orthogonality_worst(
    ctx: Ctx,
    tab: &RecurrenceTable,
    rules: &WeightedRules,
    upto: usize,
) -> Result<Real> {
    let upto = upto.min(tab.cap - 1);
    let (xs, ws) = rules.flat_nodes();
    let pj = polynomial_node_values(ctx, tab, &xs, upto);
    let mut worst = ctx.zero();
    for i in 0..upto {
        for j in (i + 1)..=upto {
            let mut acc = ctx.zero();
            for k in 0..xs.len() {
                let t = Real::with_val(ctx.bits(), &pj[i][k] * &pj[j][k]);
                acc += t * &ws[k];
            }
            let denom = Real::with_val(ctx.bits(), &tab.h[i] * &tab.h[j]).sqrt();
            let r = (acc / denom).abs();
            if r > worst {
                worst = r;
            }
        }
    }
    Ok(worst)
}

/// P_j at every node for j = 0..=deg (deg <= cap).
pub fn polynomial_node_values(
    ctx: Ctx,
    tab: &RecurrenceTable,
    xs: &[Real],
    deg: usize,
) -> Vec<Vec<Real>> {
    let n_nodes = xs.len();
    let mut out: Vec<Vec<Real>> = Vec::with_capacity(deg + 1);
    out.push(vec![ctx.one(); n_nodes]);
    if deg == 0 {
        return out;
    }
    let mut p_prev: Vec<Real> = vec![ctx.zero(); n_nodes];
    let mut p_cur: Vec<Real> = out[0].clone();
    for j in 0..deg {
        let mut next = Vec::with_capacity(n_nodes);
        for i in 0..n_nodes {
            let mut v = Real::with_val(ctx.bits(), &xs[i] - &tab.alpha[j]);
            v *= &p_cur[i];
            if j > 0 {
                v -= Real::with_val(ctx.bits(), &tab.beta[j] * &p_prev[i]);
            }
            next.push(v);
        }
        p_prev = std::mem::replace(&mut p_cur, next);
        out.push(p_cur.clone());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn moment_examples() {
        let ctx = Ctx::new(256);
        let w = presets::classical_laguerre(0.0).unwrap();
        let rules = build_rules(ctx, &w, &RulePlan::standard(40, 10)).unwrap();
        let mv = moments(ctx, &rules, 3).unwrap();
        assert!((mv.mu[3].clone() - ctx.re(6.0)).abs() < ctx.re(1e-50));

        let leg = presets::classical_jacobi(0.0, 0.0).unwrap();
        let rules = build_rules(ctx, &leg, &RulePlan::standard(24, 10)).unwrap();
        let mv = moments(ctx, &rules, 4).unwrap();
        assert!(mv.mu[1].clone().abs() < ctx.re(1e-70));

        let sj = crate::weights::WeightSpec::new(
            crate::weights::Family::ShiftedJacobi,
            crate::weights::Exponents::AlphaBeta {
                alpha: 0.0,
                beta: 0.0,
            },
            vec![],
            None,
            None,
        )
        .unwrap();
        let rules = build_rules(ctx, &sj, &RulePlan::standard(24, 10)).unwrap();
        let mv = moments(ctx, &rules, 5).unwrap();
        for j in 0..=5usize {
            let expect = ctx.one() / ctx.re_u(j as u64 + 1);
            assert!((mv.mu[j].clone() - expect).abs() < ctx.re(1e-70));
        }
    }

    #[test]
    fn stieltjes_matches_laguerre_closed_forms() {
        let ctx = Ctx::new(256);
        let lambda = 0.5;
        let w = presets::classical_laguerre(lambda).unwrap();
        let (tab, _) = recurrence_stieltjes(ctx, &w, 8, 64).unwrap();
        for n in 0..8 {
            let cv = crate::closedforms::laguerre_classical(ctx, n, lambda).unwrap();
            let da = (tab.alpha[n].clone() - &cv.alpha).abs() / cv.alpha.clone().abs();
            let dh = (tab.h[n].clone() - &cv.h).abs() / cv.h.clone().abs();
            assert!(da < ctx.re(1e-40), "alpha_{n}: {}", da.to_f64());
            assert!(dh < ctx.re(1e-40), "h_{n}: {}", dh.to_f64());
            if n >= 1 {
                let db = (tab.beta[n].clone() - &cv.beta).abs() / cv.beta.clone().abs();
                assert!(db < ctx.re(1e-40), "beta_{n}: {}", db.to_f64());
            }
        }
    }

    #[test]
    fn eval_monic_matches_expansions() {
        let ctx = Ctx::new(256);
        let lambda = 0.3;
        let w = presets::classical_laguerre(lambda).unwrap();
        let (tab, _) = recurrence_stieltjes(ctx, &w, 4, 40).unwrap();
        // P_0 = 1 with zero derivative
        let x = ctx.re(1.7);
        let (p0, dp0) = eval_monic(&tab, 0, &x).unwrap();
        assert_eq!(p0.to_f64(), 1.0);
        assert!(dp0.is_zero());
        // P_1 = x - (lambda+1)
        let (p1, dp1) = eval_monic(&tab, 1, &x).unwrap();
        let expect = x.clone() - (ctx.re(lambda) + ctx.one());
        assert!((p1 - expect).abs() < ctx.re(1e-50));
        assert!((dp1 - ctx.one()).abs() < ctx.re(1e-50));
        // P_2 coefficients against the closed forms
        let coeffs = monic_coefficients(&tab, 2).unwrap();
        for (i, c) in coeffs.iter().enumerate() {
            let expect = crate::closedforms::laguerre_monic_coefficient(ctx, 2, i, lambda);
            assert!((c.clone() - expect).abs() < ctx.re(1e-50));
        }
        assert_eq!(coeffs[2].to_f64(), 1.0); // monic
    }

    #[test]
    fn hankel_examples() {
        let ctx = Ctx::new(256);
        let w = presets::classical_laguerre(0.0).unwrap();
        let (tab, rules) = recurrence_stieltjes(ctx, &w, 4, 40).unwrap();
        let d = hankel_dets(&tab);
        assert!((d[0].clone() - ctx.one()).abs() < ctx.re(1e-60)); // D_1 = mu_0
        assert!((d[2].clone() - ctx.re(4.0)).abs() < ctx.re(1e-55)); // 1*1*4
        let mv = moments(ctx, &rules, 8).unwrap();
        assert!((d[0].clone() - &mv.mu[0]).abs() < ctx.re(1e-60));
    }

    #[test]
    fn moment_oracle_agrees_with_stieltjes() {
        let ctx = Ctx::new(256);
        let w = presets::chen_mckay(-0.5, 1.0, 1.0).unwrap();
        let cap = 6;
        let (tab, rules) = recurrence_stieltjes(ctx, &w, cap, 64).unwrap();
        let mv = moments(ctx, &rules, 2 * cap).unwrap();
        let oracle = recurrence_moment_oracle(ctx, &mv, cap).unwrap();
        for n in 0..cap {
            let da = (tab.alpha[n].clone() - &oracle.alpha[n]).abs()
                / (ctx.one() + tab.alpha[n].clone().abs());
            let dh = (tab.h[n].clone() - &oracle.h[n]).abs() / tab.h[n].clone().abs();
            assert!(da < ctx.re(1e-20), "alpha_{n}: {}", da.to_f64());
            assert!(dh < ctx.re(1e-20), "h_{n}: {}", dh.to_f64());
            let dp =
                (tab.p1[n].clone() - &oracle.p1[n]).abs() / (ctx.one() + tab.p1[n].clone().abs());
            assert!(dp < ctx.re(1e-20), "p({n}): {}", dp.to_f64());
        }
    }

    #[test]
    fn cd_kernel_examples() {
        let ctx = Ctx::new(256);
        let w = presets::classical_laguerre(0.0).unwrap();
        let (tab, _) = recurrence_stieltjes(ctx, &w, 4, 40).unwrap();
        // n = 1: kernel is 1/h_0 for all x, y
        let k = cd_kernel(&tab, 1, &ctx.re(0.4), &ctx.re(2.5)).unwrap();
        assert!((k - ctx.one()).abs() < ctx.re(1e-50));
        // n = 2, x = 0, y = 1: listed value 1
        let k = cd_kernel(&tab, 2, &ctx.re(0.0), &ctx.re(1.0)).unwrap();
        assert!((k - ctx.one()).abs() < ctx.re(1e-45));
        // symmetry and sum-form agreement at a few points
        for (x, y) in [(0.3, 1.9), (2.2, 0.1), (4.0, 4.5)] {
            let k1 = cd_kernel(&tab, 3, &ctx.re(x), &ctx.re(y)).unwrap();
            let k2 = cd_kernel(&tab, 3, &ctx.re(y), &ctx.re(x)).unwrap();
            let ks = cd_kernel_sum(&tab, 3, &ctx.re(x), &ctx.re(y)).unwrap();
            assert!((k1.clone() - k2).abs() < ctx.re(1e-40));
            assert!((k1 - ks).abs() < ctx.re(1e-40));
        }
    }

    #[test]
    fn complex_cd_kernel_agrees_with_real_path() {
        let ctx = Ctx::new(128);
        let w = presets::classical_jacobi(0.2, -0.4).unwrap();
        let (tab, _) = recurrence_stieltjes(ctx, &w, 4, 40).unwrap();
        let (x, y) = (0.3, 1.9);
        let kr = cd_kernel(&tab, 3, &ctx.re(x), &ctx.re(y)).unwrap();
        let kc = cd_kernel_cx(&tab, 3, &ctx.cx(x, 0.0), &ctx.cx(y, 0.0)).unwrap();
        assert!(kc.im.is_zero());
        assert!((kc.re - kr).abs() < ctx.re(1e-30));
        // off-axis symmetry
        let a = ctx.cx(0.3, 1.0);
        let b = ctx.cx(-1.8, 0.4);
        let k1 = cd_kernel_cx(&tab, 3, &a, &b).unwrap();
        let k2 = cd_kernel_cx(&tab, 3, &b, &a).unwrap();
        assert!(k1.sub(&k2).abs() < ctx.re(1e-30));
    }

    #[test]
    fn p1_consistency_is_exact() {
        let ctx = Ctx::new(128);
        let w = presets::classical_jacobi(0.3, -0.7).unwrap();
        let (tab, _) = recurrence_stieltjes(ctx, &w, 6, 40).unwrap();
        for n in 0..6 {
            let expect = Real::with_val(ctx.bits(), &tab.p1[n] - &tab.alpha[n]);
            assert_eq!(tab.p1[n + 1], expect);
        }
    }

    #[test]
    fn orthogonality_residuals_are_tiny() {
        let ctx = Ctx::new(256);
        let w = presets::pollaczek_jacobi(-0.2, -0.2, 0.3).unwrap();
        let (tab, rules) = recurrence_stieltjes(ctx, &w, 8, 64).unwrap();
        let worst = orthogonality_worst(ctx, &tab, &rules, 8).unwrap();
        let bound = ctx.re(1e6) * ctx.eps();
        assert!(worst < bound, "worst = {:e}", worst.to_f64());
    }

    #[test]
    fn oracle_reports_precision_exhausted_at_low_bits() {
        let ctx = Ctx::new(32);
        let w = presets::classical_laguerre(0.0).unwrap();
        let rules = build_rules(ctx, &w, &RulePlan::standard(64, 30)).unwrap();
        let mv = moments(ctx, &rules, 28).unwrap();
        let r = recurrence_moment_oracle(ctx, &mv, 14);
        assert!(matches!(r, Err(Error::PrecisionExhausted(_))), "{r:?}");
    }

    #[test]
    fn leading_coefficient_from_divided_differences() {
        // n-th divided difference of P_n over n+1 points recovers the
        // leading coefficient 1 (independent check of the evaluation path)
        let ctx = Ctx::new(256);
        let w = presets::classical_jacobi(-0.3, -0.3).unwrap();
        let (tab, _) = recurrence_stieltjes(ctx, &w, 5, 40).unwrap();
        let n = 5;
        let pts: Vec<Real> = (0..=n).map(|i| ctx.re(2.0 + 0.37 * i as f64)).collect();
        let mut vals: Vec<Real> = pts
            .iter()
            .map(|x| eval_monic(&tab, n, x).unwrap().0)
            .collect();
        for level in 1..=n {
            for i in 0..=(n - level) {
                let num = Real::with_val(ctx.bits(), &vals[i + 1] - &vals[i]);
                let den = Real::with_val(ctx.bits(), &pts[i + level] - &pts[i]);
                vals[i] = num / den;
            }
        }
        assert!((vals[0].clone() - ctx.one()).abs() < ctx.re(1e-60));
    }
}
