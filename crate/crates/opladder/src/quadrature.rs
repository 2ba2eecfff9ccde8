//! Composite Gauss-Jacobi quadrature with absorbed endpoint singularities.
//!
//! The support is partitioned at every jump point and FH point; each segment
//! carries a Gauss rule for the measure `(hi-x)^a (x-lo)^b dx` so that the
//! singular endpoint factors of the weight (`x^lambda` near 0, `(1-x)^alpha`
//! near 1, `|x-t|^gamma` around an FH point) sit inside the rule. The
//! remaining smooth part of the weight is evaluated at the nodes and folded
//! into the node weights, with the step factor applied per segment as a
//! constant.
//!
//! The Laguerre support is truncated at `X_max` solving
//! `exp(-cX) X^p <= eps_target * 1e-2` (floored at `max(64, 8(deg+lambda+s))`)
//! and reached through a doubling mesh. Atoms with essential decay at a finite
//! point (`e^{-s/x}`, `e^{-t/x^2}`, `e^{-t/(1-x^2)}`) get the same treatment:
//! the domain is cut where the atom underflows the precision target and the
//! mesh is geometrically refined toward the cut.
//!
//! Nodes are seeded by a double-precision bisection eigensolve of the
//! symmetric tridiagonal Jacobi matrix and polished to working precision by
//! Newton iteration on the monic three-term recurrence; weights come from
//! `h_{m-1} / (P_{m-1}(x_i) P_m'(x_i))`.

use crate::closedforms::{jacobi_alpha_coeff, jacobi_beta_coeff};
use crate::error::{Error, Result};
use crate::precision::{CFloat, Ctx, Real};
use crate::weights::{Atom, Family, WeightSpec};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// A Gauss rule on `[lo, hi]` for the measure `(hi-x)^a (x-lo)^b dx`;
/// `weights` include the affine Jacobian and the absorbed singular factor.
#[derive(Clone, Debug)]
pub struct QuadRule {
    pub lo: f64,
    pub hi: f64,
    pub nodes: Vec<Real>,
    pub weights: Vec<Real>,
    /// `(b, a)`: exponents absorbed at `lo` and at `hi`.
    pub absorbed: (f64, f64),
}

/// How singular factors are absorbed into the rules.
///
/// `Standard` absorbs the weight's own endpoint exponents and `|x-t|^gamma`.
/// `FhSingular` absorbs `sign(x-t) |x-t|^(gamma-1)` for integrands carrying
/// an explicit `1/(x-t)`. `EndpointReduced` absorbs `exponent - 1` at the
/// true support endpoints for integrands carrying the potential's endpoint
/// poles (the strictly-positive-exponent ladder forms); the caller folds the
/// family polynomial `x`, `(1-x^2)`, or `x(1-x)` back into the integrand.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RuleMode {
    Standard,
    FhSingular,
    EndpointReduced,
}

/// Parameters for building a rule set.
#[derive(Clone, Debug)]
pub struct RulePlan {
    /// Nodes per segment.
    pub m: usize,
    /// Highest polynomial degree the rules must handle gracefully.
    pub deg_hint: usize,
    /// Laguerre truncation override; 0 selects the automatic bound.
    pub trunc: f64,
    pub mode: RuleMode,
    /// Extra dyadic refinement toward interior points `(x0, min_width)`,
    /// used for boundary-limit (Plemelj) evaluations.
    pub refine: Vec<(f64, f64)>,
}

impl RulePlan {
    pub fn standard(m: usize, deg_hint: usize) -> Self {
        RulePlan {
            m,
            deg_hint,
            trunc: 0.0,
            mode: RuleMode::Standard,
            refine: vec![],
        }
    }

    pub fn fh_singular(m: usize, deg_hint: usize) -> Self {
        RulePlan {
            m,
            deg_hint,
            trunc: 0.0,
            mode: RuleMode::FhSingular,
            refine: vec![],
        }
    }

    pub fn endpoint_reduced(m: usize, deg_hint: usize) -> Self {
        RulePlan {
            m,
            deg_hint,
            trunc: 0.0,
            mode: RuleMode::EndpointReduced,
            refine: vec![],
        }
    }

    pub fn doubled(&self) -> Self {
        let mut p = self.clone();
        p.m *= 2;
        p
    }
}

/// One segment of a weighted rule set: the bare Gauss rule plus combined node
/// weights `rule_weight * residual_weight` (residual = weight factors not
/// absorbed by the rule, including the per-segment step constant).
#[derive(Clone, Debug)]
pub struct Segment {
    pub rule: QuadRule,
    pub weights: Vec<Real>,
}

/// Partition of the support with per-segment absorbed-singularity rules.
#[derive(Clone, Debug)]
pub struct WeightedRules {
    pub segments: Vec<Segment>,
    pub plan: RulePlan,
    bits: u32,
}

impl WeightedRules {
    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn node_count(&self) -> usize {
        self.segments.iter().map(|s| s.rule.nodes.len()).sum()
    }

    /// `sum_i w_i f(x_i)` over all segments: approximates `int f(x) w(x) dx`.
    pub fn integrate(&self, f: impl Fn(&Real) -> Real) -> Result<Real> {
        let ctx = Ctx::new(self.bits);
        let mut acc = ctx.zero();
        for seg in &self.segments {
            for (x, w) in seg.rule.nodes.iter().zip(&seg.weights) {
                let fv = f(x);
                if !fv.is_finite() {
                    return Err(Error::EvaluationFailure(format!(
                        "integrand non-finite at x = {}",
                        x.to_f64()
                    )));
                }
                acc += fv * w;
            }
        }
        Ok(acc)
    }

    /// Complex-integrand variant.
    pub fn integrate_cx(&self, f: impl Fn(&Real) -> CFloat) -> Result<CFloat> {
        let ctx = Ctx::new(self.bits);
        let mut acc = ctx.czero();
        for seg in &self.segments {
            for (x, w) in seg.rule.nodes.iter().zip(&seg.weights) {
                let fv = f(x);
                if !fv.is_finite() {
                    return Err(Error::EvaluationFailure(format!(
                        "integrand non-finite at x = {}",
                        x.to_f64()
                    )));
                }
                acc.add_mul_real(&fv, w);
            }
        }
        Ok(acc)
    }

    /// Flattened (node, combined-weight) pairs in ascending order.
    pub fn flat_nodes(&self) -> (Vec<Real>, Vec<Real>) {
        let mut xs = Vec::with_capacity(self.node_count());
        let mut ws = Vec::with_capacity(self.node_count());
        for seg in &self.segments {
            xs.extend(seg.rule.nodes.iter().cloned());
            ws.extend(seg.weights.iter().cloned());
        }
        (xs, ws)
    }
}

/// Build the partition-of-support rule set for a weight.
pub fn build_rules(ctx: Ctx, w: &WeightSpec, plan: &RulePlan) -> Result<WeightedRules> {
    if plan.m < 2 {
        return Err(Error::BadNodeCount(format!("m = {}", plan.m)));
    }
    if plan.mode == RuleMode::FhSingular && w.fh().is_none() {
        return Err(Error::Unsupported(
            "FH-singular rules need an FH factor in the weight".to_string(),
        ));
    }
    if plan.mode == RuleMode::EndpointReduced {
        let (el, er) = w.endpoint_exponents();
        let (_, sup_hi) = w.support();
        if !(el > 0.0) || (sup_hi.is_finite() && !(er > 0.0)) {
            return Err(Error::ExponentOutOfRange(format!(
                "endpoint-reduced rules need strictly positive exponents, got ({el}, {er})"
            )));
        }
    }
    let segs = plan_segments(ctx, w, plan)?;
    let mut segments = Vec::with_capacity(segs.len());
    for sp in &segs {
        let rule = mapped_rule(ctx, plan.m, sp)?;
        let weights = residual_weights(ctx, w, plan.mode, sp, &rule)?;
        segments.push(Segment { rule, weights });
    }
    Ok(WeightedRules {
        segments,
        plan: plan.clone(),
        bits: ctx.bits(),
    })
}

// ---------------------------------------------------------------------------
// Mesh planning
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
struct SegPlan {
    lo: f64,
    hi: f64,
    exp_lo: f64,
    exp_hi: f64,
    /// Side of the FH point this segment lies on, if an FH factor exists:
    /// false = left of t, true = right of t.
    fh_right_side: Option<bool>,
    /// Whether the FH exponent is absorbed at this segment's lo / hi.
    fh_absorbed_lo: bool,
    fh_absorbed_hi: bool,
}

fn plan_segments(ctx: Ctx, w: &WeightSpec, plan: &RulePlan) -> Result<Vec<SegPlan>> {
    let (sup_lo, sup_hi) = w.support();
    let bits = ctx.bits() as f64;
    // underflow threshold for essential-decay atoms and the Laguerre tail
    let ln_tau = -(bits + 14.0) * std::f64::consts::LN_2;

    let mut left = sup_lo;
    let mut right = sup_hi;
    let mut left_cut = false;
    let mut right_cut = false;
    // removed interval around an interior essential point, with the point
    let mut interior_cut: Option<(f64, f64, f64)> = None;

    for atom in w.atoms() {
        match *atom {
            Atom::ExpInvX { s } if s > 0.0 => {
                let c = s / (-ln_tau);
                if c > left {
                    left = c;
                    left_cut = true;
                }
            }
            Atom::ExpInvX2 { t } if t > 0.0 => {
                let c = (t / (-ln_tau)).sqrt();
                if w.family() == Family::Jacobi {
                    interior_cut = Some((-c, c, 0.0));
                } else if c > left {
                    left = c;
                    left_cut = true;
                }
            }
            Atom::ExpInvOneMinusX2 { t } if t > 0.0 => {
                let d = t / (2.0 * (-ln_tau));
                if 1.0 - d < right {
                    right = 1.0 - d;
                    right_cut = true;
                }
                if -1.0 + d > left {
                    left = -1.0 + d;
                    left_cut = true;
                }
            }
            _ => {}
        }
    }

    if w.family() == Family::Laguerre {
        right = if plan.trunc > 0.0 {
            plan.trunc
        } else {
            laguerre_xmax(w, plan.deg_hint, bits)
        };
        right_cut = true; // truncation, not a singular endpoint
    }
    if !(left < right) {
        return Err(Error::EvaluationFailure(
            "support collapsed after truncation".to_string(),
        ));
    }

    // mandatory breakpoints
    let mut hard: Vec<f64> = vec![left, right];
    if let Some(j) = w.jumps() {
        hard.extend(
            j.points
                .iter()
                .map(|p| p.t)
                .filter(|t| *t > left && *t < right),
        );
    }
    if let Some(f) = w.fh() {
        if f.t > left && f.t < right {
            hard.push(f.t);
        }
    }
    if let Some((a, b, _)) = interior_cut {
        if a > left && b < right {
            hard.push(a);
            hard.push(b);
        } else {
            interior_cut = None;
        }
    }
    hard.sort_by(f64::total_cmp);
    hard.dedup();

    // geometric ladders
    fn ladder(soft: &mut Vec<f64>, origin: f64, start: f64, toward_right: bool, stop: f64) {
        let mut d = (start - origin).abs();
        loop {
            d *= 2.0;
            let x = if toward_right { origin + d } else { origin - d };
            if (toward_right && x >= stop) || (!toward_right && x <= stop) || d > 1e18 {
                break;
            }
            soft.push(x);
        }
    }
    let mut soft: Vec<f64> = Vec::new();
    if w.family() == Family::Laguerre {
        // doubling mesh toward the truncation point
        let base = 1.0f64.max(left * 2.0);
        ladder(&mut soft, 0.0, base / 2.0, true, right);
        if base > left * 4.0 && base / 2.0 > left {
            soft.push(base / 2.0);
        }
    }
    if left_cut {
        // for Laguerre the absolute doubling mesh takes over past x = 1
        let stop = if w.family() == Family::Laguerre {
            right.min(1.0)
        } else {
            right
        };
        ladder(&mut soft, essential_origin_left(w, left), left, true, stop);
    }
    if right_cut && w.family() != Family::Laguerre {
        ladder(
            &mut soft,
            essential_origin_right(w, right),
            right,
            false,
            left,
        );
    }
    if let Some((a, b, p)) = interior_cut {
        ladder(&mut soft, p, a, false, left);
        ladder(&mut soft, p, b, true, right);
    }
    for &(x0, min_w) in &plan.refine {
        if x0 > left && x0 < right {
            hard.push(x0);
            let mut d = min_w.abs().max(1e-300);
            while x0 + d < right {
                soft.push(x0 + d);
                d *= 2.0;
                if d > right - left {
                    break;
                }
            }
            let mut d = min_w.abs().max(1e-300);
            while x0 - d > left {
                soft.push(x0 - d);
                d *= 2.0;
                if d > right - left {
                    break;
                }
            }
        }
    }
    hard.sort_by(f64::total_cmp);
    hard.dedup();

    // merge soft points, dropping any too close to a hard point or each other
    let mut points = hard.clone();
    soft.sort_by(f64::total_cmp);
    soft.dedup();
    for s in soft {
        if s <= left || s >= right {
            continue;
        }
        let near_hard = hard.iter().any(|h| (h - s).abs() < 1e-9 * (1.0 + s.abs()));
        if !near_hard {
            points.push(s);
        }
    }
    points.sort_by(f64::total_cmp);
    points.dedup();

    // assemble segment plans with absorbed exponents
    let (mut exp_left_support, mut exp_right_support) = w.endpoint_exponents();
    if plan.mode == RuleMode::EndpointReduced {
        exp_left_support -= 1.0;
        exp_right_support -= 1.0;
    }
    let fh = w.fh().copied();
    let fh_gamma_absorbed = match plan.mode {
        RuleMode::Standard | RuleMode::EndpointReduced => fh.map(|f| f.gamma),
        RuleMode::FhSingular => fh.map(|f| f.gamma - 1.0),
    };
    let mut out = Vec::with_capacity(points.len() - 1);
    for win in points.windows(2) {
        let (lo, hi) = (win[0], win[1]);
        let mut exp_lo = 0.0;
        let mut exp_hi = 0.0;
        let mut fh_absorbed_lo = false;
        let mut fh_absorbed_hi = false;
        if lo == sup_lo && !left_cut {
            exp_lo = exp_left_support;
        }
        if hi == sup_hi && !right_cut {
            exp_hi = exp_right_support;
        }
        let mut fh_right_side = None;
        if let (Some(f), Some(g)) = (fh, fh_gamma_absorbed) {
            fh_right_side = Some(lo >= f.t);
            if lo == f.t {
                exp_lo = g;
                fh_absorbed_lo = true;
            }
            if hi == f.t {
                exp_hi = g;
                fh_absorbed_hi = true;
            }
        }
        out.push(SegPlan {
            lo,
            hi,
            exp_lo,
            exp_hi,
            fh_right_side,
            fh_absorbed_lo,
            fh_absorbed_hi,
        });
    }
    Ok(out)
}

fn essential_origin_left(w: &WeightSpec, cut: f64) -> f64 {
    // the singular point the left cut approaches
    for atom in w.atoms() {
        match atom {
            Atom::ExpInvX { s } if *s > 0.0 => return 0.0,
            Atom::ExpInvX2 { t } if *t > 0.0 => return 0.0,
            Atom::ExpInvOneMinusX2 { t } if *t > 0.0 => return -1.0,
            _ => {}
        }
    }
    cut
}

fn essential_origin_right(w: &WeightSpec, cut: f64) -> f64 {
    for atom in w.atoms() {
        if matches!(atom, Atom::ExpInvOneMinusX2 { t } if *t > 0.0) {
            return 1.0;
        }
    }
    cut
}

/// Truncation point for the Laguerre support: smallest power of two at or
/// above the floor `max(64, 8(deg + lambda + scale))` making the tail bound
/// `exp(-c1 X - c2 X^2) X^p` fall below `2^-bits * 1e-2`.
fn laguerre_xmax(w: &WeightSpec, deg_hint: usize, bits: f64) -> f64 {
    let lambda = w.lambda().unwrap_or(0.0);
    let mut c1 = 0.0f64;
    let mut c2 = 0.0f64;
    let mut pow_extra = 0.0f64;
    let mut scale = 1.0f64;
    for atom in w.atoms() {
        match *atom {
            Atom::ExpLinear { c } => c1 += c,
            Atom::ExpQuad { t } => c2 += t,
            Atom::PowerShift { c, gamma } => {
                pow_extra += gamma.max(0.0);
                scale = scale.max(c.abs());
            }
            Atom::PowerShiftNeg { t, gamma } => {
                pow_extra += gamma.max(0.0);
                scale = scale.max(t.abs());
            }
            _ => {}
        }
    }
    let p = deg_hint as f64 + lambda.max(0.0) + pow_extra + 1.0;
    let floor = 64f64.max(8.0 * (deg_hint as f64 + lambda + scale));
    let target = -(bits * std::f64::consts::LN_2) - (1e2f64).ln();
    let tail = |x: f64| -c1 * x - c2 * x * x + p * x.ln();
    let mut x = 2f64.powf(floor.log2().ceil());
    while tail(x) > target && x < 1e9 {
        x *= 2.0;
    }
    x
}

// ---------------------------------------------------------------------------
// Gauss-Jacobi reference rules
// ---------------------------------------------------------------------------

type RefRule = (Vec<Real>, Vec<Real>);
/// Keyed by (bits, m, a-bits, b-bits): reference rules are shared globally.
type RuleCache = Mutex<HashMap<(u32, usize, u64, u64), Arc<RefRule>>>;

fn rule_cache() -> &'static RuleCache {
    static CACHE: OnceLock<RuleCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn mapped_rule(ctx: Ctx, m: usize, sp: &SegPlan) -> Result<QuadRule> {
    let (a, b) = (sp.exp_hi, sp.exp_lo);
    let key = (ctx.bits(), m, a.to_bits(), b.to_bits());
    let reference = {
        let cached = rule_cache().lock().unwrap().get(&key).cloned();
        match cached {
            Some(r) => r,
            None => {
                let r = Arc::new(gauss_jacobi_reference(ctx, m, a, b)?);
                rule_cache().lock().unwrap().insert(key, r.clone());
                r
            }
        }
    };
    let (ref_nodes, ref_weights) = reference.as_ref();
    let lo = ctx.re(sp.lo);
    let hi = ctx.re(sp.hi);
    let half = (hi.clone() - &lo) / ctx.re(2.0);
    let mid = (hi.clone() + &lo) / ctx.re(2.0);
    // exponent combined at working precision: compound f64 arithmetic on
    // parameters would round at 53 bits and poison every node weight
    let jac = ctx.pow(&half, &(ctx.re(a) + ctx.re(b) + ctx.one()));
    let nodes: Vec<Real> = ref_nodes
        .iter()
        .map(|u| mid.clone() + half.clone() * u)
        .collect();
    let weights: Vec<Real> = ref_weights.iter().map(|lam| lam.clone() * &jac).collect();
    Ok(QuadRule {
        lo: sp.lo,
        hi: sp.hi,
        nodes,
        weights,
        absorbed: (sp.exp_lo, sp.exp_hi),
    })
}

/// Nodes and weights on [-1, 1] for the measure `(1-u)^a (1+u)^b du`.
pub fn gauss_jacobi_reference(ctx: Ctx, m: usize, a: f64, b: f64) -> Result<RefRule> {
    if !(a > -1.0) || !(b > -1.0) {
        return Err(Error::ExponentOutOfRange(format!(
            "rule exponents a = {a}, b = {b}"
        )));
    }
    if m < 1 {
        return Err(Error::BadNodeCount("m = 0".to_string()));
    }

    // double-precision seeds from the symmetric tridiagonal Jacobi matrix
    let mut diag = Vec::with_capacity(m);
    let mut off = Vec::with_capacity(m.saturating_sub(1));
    for j in 0..m {
        diag.push(jacobi_alpha_f64(j, a, b));
        if j + 1 < m {
            off.push(jacobi_beta_f64(j + 1, a, b).sqrt());
        }
    }
    let seeds = tridiag_eigenvalues(&diag, &off);

    // recurrence coefficients at working precision
    let alphas: Vec<Real> = (0..m).map(|j| jacobi_alpha_coeff(ctx, j, a, b)).collect();
    let betas: Vec<Real> = (0..m).map(|j| jacobi_beta_coeff(ctx, j, a, b)).collect();
    let mu0 = ctx.pow(&ctx.re(2.0), &(ctx.re(a) + ctx.re(b) + ctx.one()))
        * ctx.beta(&(ctx.re(a) + ctx.one()), &(ctx.re(b) + ctx.one()));
    let mut h_last = mu0.clone();
    for beta in betas.iter().take(m).skip(1) {
        h_last *= beta;
    }

    let tol = {
        let mut t = ctx.one();
        t >>= ctx.bits() - 6;
        t
    };
    let mut nodes = Vec::with_capacity(m);
    let mut weights = Vec::with_capacity(m);
    for &seed in &seeds {
        let mut x = ctx.re(seed);
        let mut converged = false;
        for _ in 0..40 {
            let (pm, dpm, _) = monic_eval(ctx, &alphas, &betas, m, &x);
            let dx = pm / &dpm;
            x -= &dx;
            let bound = tol.clone() * (ctx.one() + x.clone().abs());
            if dx.abs() <= bound {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::PrecisionExhausted(format!(
                "Newton polish stalled near node {seed}"
            )));
        }
        let (_, dpm, pm1) = monic_eval(ctx, &alphas, &betas, m, &x);
        let lam = h_last.clone() / (pm1 * dpm);
        if !(lam > 0) || !(x > -1) || !(x < 1) {
            return Err(Error::PrecisionExhausted(format!(
                "invalid Gauss node/weight near {seed}"
            )));
        }
        nodes.push(x);
        weights.push(lam);
    }
    Ok((nodes, weights))
}

/// Evaluate monic P_m, P_m' and P_{m-1} by forward recurrence.
fn monic_eval(ctx: Ctx, alphas: &[Real], betas: &[Real], m: usize, x: &Real) -> (Real, Real, Real) {
    let mut p_prev = ctx.zero();
    let mut p = ctx.one();
    let mut dp_prev = ctx.zero();
    let mut dp = ctx.zero();
    for j in 0..m {
        let xa = x.clone() - &alphas[j];
        let mut p_next = xa.clone() * &p;
        let mut dp_next = p.clone() + xa * &dp;
        if j > 0 {
            p_next -= betas[j].clone() * &p_prev;
            dp_next -= betas[j].clone() * &dp_prev;
        }
        p_prev = p;
        p = p_next;
        dp_prev = dp;
        dp = dp_next;
    }
    (p, dp, p_prev)
}

fn jacobi_alpha_f64(n: usize, a: f64, b: f64) -> f64 {
    if n == 0 {
        (b - a) / (a + b + 2.0)
    } else {
        let nn = 2.0 * n as f64 + a + b;
        (b * b - a * a) / (nn * (nn + 2.0))
    }
}

fn jacobi_beta_f64(n: usize, a: f64, b: f64) -> f64 {
    if n == 1 {
        // cancelled form, removable 0/0 at a+b = -1
        let ab = a + b;
        return 4.0 * (1.0 + a) * (1.0 + b) / ((ab + 2.0) * (ab + 2.0) * (ab + 3.0));
    }
    let nf = n as f64;
    let nn = 2.0 * nf + a + b;
    4.0 * nf * (nf + a) * (nf + b) * (nf + a + b) / (nn * nn * (nn + 1.0) * (nn - 1.0))
}

/// All eigenvalues of a symmetric tridiagonal matrix by Sturm-count bisection.
fn tridiag_eigenvalues(diag: &[f64], off: &[f64]) -> Vec<f64> {
    let m = diag.len();
    if m == 1 {
        return vec![diag[0]];
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..m {
        let r = if i == 0 {
            off[0].abs()
        } else if i == m - 1 {
            off[m - 2].abs()
        } else {
            off[i - 1].abs() + off[i].abs()
        };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    let span = (hi - lo).max(1e-300);
    let count_below = |sigma: f64| -> usize {
        let mut cnt = 0usize;
        let mut q = diag[0] - sigma;
        if q < 0.0 {
            cnt += 1;
        }
        for i in 1..m {
            if q == 0.0 {
                q = 1e-300;
            }
            q = diag[i] - sigma - off[i - 1] * off[i - 1] / q;
            if q < 0.0 {
                cnt += 1;
            }
        }
        cnt
    };
    (0..m)
        .map(|k| {
            let mut a = lo;
            let mut b = hi;
            for _ in 0..60 {
                let mid = 0.5 * (a + b);
                if count_below(mid) <= k {
                    a = mid;
                } else {
                    b = mid;
                }
                if b - a < 1e-15 * span {
                    break;
                }
            }
            0.5 * (a + b)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Residual weights
// ---------------------------------------------------------------------------

fn residual_weights(
    ctx: Ctx,
    w: &WeightSpec,
    mode: RuleMode,
    sp: &SegPlan,
    rule: &QuadRule,
) -> Result<Vec<Real>> {
    let (sup_lo, sup_hi) = w.support();
    // the endpoint factor is absorbed by the rule exactly when the segment
    // touches the true support endpoint (the planner assigned the family
    // exponent there; exponent 0 makes the two conventions coincide)
    let touches_left = sp.lo == sup_lo && !sp.fh_absorbed_lo;
    let touches_right = sp.hi == sup_hi && !sp.fh_absorbed_hi;

    let mid = ctx.re(0.5 * (sp.lo + sp.hi));
    let step = w.step_at(ctx, &mid);

    // fold polynomials for the endpoint-reduced mode: the rule absorbs
    // exponent-1 at touching segments; elsewhere the full endpoint factor is
    // divided down by the linear factor the caller folds into the integrand
    let family = w.family();
    let fold_left = |ctx: Ctx, x: &Real| -> Real {
        match family {
            Family::Jacobi => ctx.one() + x,
            _ => x.clone(),
        }
    };
    let fold_right = |ctx: Ctx, x: &Real| -> Option<Real> {
        match family {
            Family::Laguerre => None,
            _ => Some(ctx.one() - x),
        }
    };

    let fh = w.fh().copied();
    let mut out = Vec::with_capacity(rule.nodes.len());
    for (x, lam) in rule.nodes.iter().zip(&rule.weights) {
        let mut r = w.endpoint_factor_partial(ctx, x, touches_left, touches_right);
        r *= w.atoms_product(ctx, x);
        r *= &step;
        if mode == RuleMode::EndpointReduced {
            if !touches_left {
                r /= fold_left(ctx, x);
            }
            if !touches_right {
                if let Some(fr) = fold_right(ctx, x) {
                    r /= fr;
                }
            }
        }
        if let Some(f) = fh {
            let side = if sp.fh_right_side == Some(true) {
                ctx.re(f.a) + ctx.re(f.b)
            } else {
                ctx.re(f.a)
            };
            let adjacent = sp.fh_absorbed_lo || sp.fh_absorbed_hi;
            match mode {
                RuleMode::Standard | RuleMode::EndpointReduced => {
                    if adjacent {
                        r *= side;
                    } else {
                        let d = (x.clone() - ctx.re(f.t)).abs();
                        r *= ctx.pow_f64(&d, f.gamma) * side;
                    }
                }
                RuleMode::FhSingular => {
                    // integrand carries 1/(x-t): |x-t|^gamma / (x-t)
                    //   = sign(x-t) |x-t|^(gamma-1)
                    let signed_side = if sp.fh_right_side == Some(true) {
                        side
                    } else {
                        -side
                    };
                    if adjacent {
                        r *= signed_side;
                    } else {
                        let d = (x.clone() - ctx.re(f.t)).abs();
                        let g1 = ctx.re(f.gamma) - ctx.one();
                        r *= ctx.pow(&d, &g1) * signed_side;
                    }
                }
            }
        }
        if !r.is_finite() {
            return Err(Error::EvaluationFailure(format!(
                "residual weight non-finite at x = {}",
                x.to_f64()
            )));
        }
        out.push(r * lam);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn gauss_property_against_beta_moments() {
        // integrate x^k (1-x)^a (1+x)^b on [-1,1] for k = 0..5 and compare
        // with the binomial expansion in Beta functions
        let ctx = Ctx::new(256);
        let (a, b) = (-0.5, 0.3);
        let (nodes, weights) = gauss_jacobi_reference(ctx, 12, a, b).unwrap();
        for k in 0..=5usize {
            let mut q = ctx.zero();
            for (x, w) in nodes.iter().zip(&weights) {
                let mut xk = ctx.one();
                for _ in 0..k {
                    xk *= x;
                }
                q += xk * w;
            }
            let expect = beta_moment(ctx, k, a, b);
            let rel = ((q - &expect) / expect).abs();
            assert!(rel < ctx.re(1e-70), "k = {k}, rel = {}", rel.to_f64());
        }
    }

    fn beta_moment(ctx: Ctx, k: usize, a: f64, b: f64) -> Real {
        // int_{-1}^1 x^k (1-x)^a (1+x)^b dx via x = 2u-1
        let mut total = ctx.zero();
        let mut binom = ctx.one();
        for j in 0..=k {
            if j > 0 {
                binom *= ctx.re_u((k - j + 1) as u64);
                binom /= ctx.re_u(j as u64);
            }
            let sign = if (k - j) % 2 == 1 { -1.0 } else { 1.0 };
            let term = binom.clone()
                * ctx.pow_f64(&ctx.re(2.0), j as f64)
                * ctx.re(sign)
                * ctx.beta(
                    &(ctx.re(b) + ctx.re_u(j as u64 + 1)),
                    &(ctx.re(a) + ctx.one()),
                );
            total += term;
        }
        total * ctx.pow(&ctx.re(2.0), &(ctx.re(a) + ctx.re(b) + ctx.one()))
    }

    #[test]
    fn nodes_interior_weights_positive() {
        let ctx = Ctx::new(128);
        let (nodes, weights) = gauss_jacobi_reference(ctx, 37, 1.2, -0.9).unwrap();
        assert_eq!(nodes.len(), 37);
        for win in nodes.windows(2) {
            assert!(win[0] < win[1]);
        }
        assert!(nodes[0] > -1.0 && nodes[36] < 1.0);
        assert!(weights.iter().all(|w| *w > 0));
    }

    #[test]
    fn laguerre_gamma_half_to_thirty_digits() {
        let ctx = Ctx::new(256);
        let w = presets::classical_laguerre(-0.5).unwrap();
        let rules = build_rules(ctx, &w, &RulePlan::standard(40, 8)).unwrap();
        let q = rules.integrate(|_| ctx.one()).unwrap();
        let expect = ctx.gamma_f64(0.5);
        let rel = ((q - &expect) / expect).abs();
        assert!(rel < ctx.re(1e-30), "rel = {}", rel.to_f64());
    }

    #[test]
    fn jacobi_and_shifted_total_mass() {
        let ctx = Ctx::new(256);
        let leg = presets::classical_jacobi(0.0, 0.0).unwrap();
        let rules = build_rules(ctx, &leg, &RulePlan::standard(24, 4)).unwrap();
        let q = rules.integrate(|_| ctx.one()).unwrap();
        assert!((q - ctx.re(2.0)).abs() < ctx.re(1e-70));

        // Beta(1/2, 1/2) = pi
        let sj = WeightSpec::new(
            Family::ShiftedJacobi,
            crate::weights::Exponents::AlphaBeta {
                alpha: -0.5,
                beta: -0.5,
            },
            vec![],
            None,
            None,
        )
        .unwrap();
        let rules = build_rules(ctx, &sj, &RulePlan::standard(24, 4)).unwrap();
        let q = rules.integrate(|_| ctx.one()).unwrap();
        let rel = ((q - ctx.pi()) / ctx.pi()).abs();
        assert!(rel < ctx.re(1e-70), "rel = {}", rel.to_f64());
    }

    #[test]
    fn step_factor_restricts_the_range() {
        // x^0 e^{-x} (theta(x-1) - theta(x-2)), f = 1 -> e^-1 - e^-2
        let ctx = Ctx::new(256);
        let w = presets::laguerre_two_jump(0.0, 1.0, 2.0).unwrap();
        let rules = build_rules(ctx, &w, &RulePlan::standard(48, 8)).unwrap();
        let q = rules.integrate(|_| ctx.one()).unwrap();
        let expect = ctx.re(-1.0).exp() - ctx.re(-2.0).exp();
        let rel = ((q - &expect) / expect).abs();
        assert!(rel < ctx.re(1e-70), "rel = {}", rel.to_f64());
    }

    #[test]
    fn pure_jump_matches_incomplete_gamma() {
        // lambda = -0.5: integral over [t1, t2] of x^-0.5 e^-x equals
        // Gamma(0.5, t1) - Gamma(0.5, t2)
        let ctx = Ctx::new(256);
        let w = presets::laguerre_two_jump(-0.5, 0.5, 2.0).unwrap();
        let rules = build_rules(ctx, &w, &RulePlan::standard(64, 8)).unwrap();
        let q = rules.integrate(|_| ctx.one()).unwrap();
        let half = ctx.re(0.5);
        let expect = ctx.gamma_upper(&half, &ctx.re(0.5)) - ctx.gamma_upper(&half, &ctx.re(2.0));
        let rel = ((q - &expect) / expect).abs();
        let bound = ctx.re(1e3) * ctx.eps();
        assert!(rel < bound, "rel = {}", rel.to_f64());
    }

    #[test]
    fn atom_order_does_not_change_rules() {
        let ctx = Ctx::new(128);
        let w1 = WeightSpec::new(
            Family::Laguerre,
            crate::weights::Exponents::Lambda(0.3),
            vec![
                Atom::ExpLinear { c: 1.0 },
                Atom::PowerShift { c: 2.0, gamma: 0.7 },
            ],
            None,
            None,
        )
        .unwrap();
        let w2 = WeightSpec::new(
            Family::Laguerre,
            crate::weights::Exponents::Lambda(0.3),
            vec![
                Atom::PowerShift { c: 2.0, gamma: 0.7 },
                Atom::ExpLinear { c: 1.0 },
            ],
            None,
            None,
        )
        .unwrap();
        let r1 = build_rules(ctx, &w1, &RulePlan::standard(16, 6)).unwrap();
        let r2 = build_rules(ctx, &w2, &RulePlan::standard(16, 6)).unwrap();
        assert_eq!(r1.segments.len(), r2.segments.len());
        for (s1, s2) in r1.segments.iter().zip(&r2.segments) {
            for (a, b) in s1.weights.iter().zip(&s2.weights) {
                assert!((a.clone() - b).abs() <= ctx.eps() * a.clone().abs());
            }
        }
    }

    #[test]
    fn bad_node_count_rejected() {
        let ctx = Ctx::new(64);
        let w = presets::classical_laguerre(0.0).unwrap();
        assert!(matches!(
            build_rules(ctx, &w, &RulePlan::standard(1, 4)),
            Err(Error::BadNodeCount(_))
        ));
    }

    #[test]
    fn essential_atom_mesh_is_finite_and_accurate() {
        // Pollaczek-Jacobi mass against a crude high-node reference
        let ctx = Ctx::new(192);
        let w = presets::pollaczek_jacobi(-0.2, -0.2, 0.3).unwrap();
        let r1 = build_rules(ctx, &w, &RulePlan::standard(80, 8)).unwrap();
        let r2 = build_rules(ctx, &w, &RulePlan::standard(160, 8)).unwrap();
        let q1 = r1.integrate(|_| ctx.one()).unwrap();
        let q2 = r2.integrate(|_| ctx.one()).unwrap();
        let rel = ((q1 - &q2) / q2).abs();
        assert!(rel < ctx.re(1e-45), "rel = {}", rel.to_f64());
    }
}
