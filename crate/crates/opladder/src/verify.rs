//! Verification campaigns: fan a chosen set of identity checks over
//! (weight, n-range, z-samples), aggregate worst-case residuals against a
//! tolerance policy, and emit machine-readable reports.
//!
//! Reports are deterministic: fixed seed/precision/nodes reproduce
//! bit-identical serialized output (wall time is therefore serialized as 0;
//! actual timing is the caller's concern).

use crate::closedforms::{self, NamedFamily};
use crate::error::{Error, Result};
use crate::ladder::{self, AuxFamily, LadderEngine};
use crate::opcore;
use crate::precision::{format_at, Ctx, Real};
use crate::quadrature::build_rules;
use crate::rhp::{self, RhpEngine};
use crate::weights::{Atom, Family, WeightSpec};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Orthogonality,
    Ladder,
    Compat,
    Rhp,
    Oracle,
    DiffT,
    KernelOracle,
}

impl CheckKind {
    pub fn name(self) -> &'static str {
        match self {
            CheckKind::Orthogonality => "orthogonality",
            CheckKind::Ladder => "ladder",
            CheckKind::Compat => "compat",
            CheckKind::Rhp => "rhp",
            CheckKind::Oracle => "oracle",
            CheckKind::DiffT => "diff_t",
            CheckKind::KernelOracle => "kernel_oracle",
        }
    }

    pub fn all() -> &'static [CheckKind] {
        &[
            CheckKind::Orthogonality,
            CheckKind::Ladder,
            CheckKind::Compat,
            CheckKind::Rhp,
            CheckKind::Oracle,
            CheckKind::DiffT,
            CheckKind::KernelOracle,
        ]
    }

    pub fn from_name(s: &str) -> Option<Self> {
        CheckKind::all().iter().copied().find(|c| c.name() == s)
    }
}

/// One verification run: weight, degree range, z-samples, checks, numerics.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Campaign {
    pub weight: WeightSpec,
    pub n_max: usize,
    pub z_samples: Vec<[f64; 2]>,
    pub checks: Vec<CheckKind>,
    pub precision_bits: u32,
    pub node_count: usize,
    pub seed: u64,
    /// Testing aid: additive perturbation (index, delta) applied to beta
    /// after table construction (canary sensitivity runs).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturb_beta: Option<(usize, f64)>,
}

impl Campaign {
    pub fn new(weight: WeightSpec, n_max: usize) -> Self {
        let z = default_z_samples(&weight, 20, 42);
        Campaign {
            weight,
            n_max,
            z_samples: z,
            checks: CheckKind::all().to_vec(),
            precision_bits: crate::precision::DEFAULT_BITS,
            node_count: 200,
            seed: 42,
            perturb_beta: None,
        }
    }
}

/// Per-check tolerance overrides; unset checks use the policy defaults
/// (identity residuals 1e-15, t-differential checks 1e-10 smooth / 1e-8 FH,
/// orthogonality 1e6*eps_work, kernel oracle 1e3*eps_work, Plemelj smoke
/// 1e-4).
#[derive(Clone, Debug, Default)]
pub struct Tolerances {
    pub overrides: BTreeMap<String, f64>,
}

impl Tolerances {
    pub fn for_check(&self, ctx: Ctx, kind: CheckKind, weight: &WeightSpec) -> f64 {
        if let Some(v) = self.overrides.get(kind.name()) {
            return *v;
        }
        match kind {
            CheckKind::Orthogonality => 1e6 * ctx.eps_f64(),
            CheckKind::Ladder | CheckKind::Compat | CheckKind::Rhp | CheckKind::Oracle => 1e-15,
            CheckKind::DiffT => {
                if weight.fh().is_some() {
                    1e-8
                } else {
                    1e-10
                }
            }
            CheckKind::KernelOracle => 1e3 * ctx.eps_f64(),
        }
    }

    pub fn plemelj(&self) -> f64 {
        *self.overrides.get("plemelj").unwrap_or(&1e-4)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckLocation {
    pub n: usize,
    pub z: [f64; 2],
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub worst: String,
    pub at: CheckLocation,
    pub pass: bool,
    pub tol: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReportMeta {
    pub precision_bits: u32,
    pub nodes: usize,
    pub seed: u64,
    /// Serialized as 0: reports must be byte-identical across runs.
    pub duration_ms: u64,
    /// m vs 2m convergence evidence for the heaviest integral path.
    pub convergence: BTreeMap<String, String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub campaign: Campaign,
    pub results: BTreeMap<String, CheckResult>,
    pub meta: ReportMeta,
}

impl Report {
    pub fn pass(&self) -> bool {
        self.results.values().all(|r| r.pass)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

struct Finding {
    residual: Real,
    ratio: f64,
    n: usize,
    z: [f64; 2],
}

/// (residual, tolerance, n, z) rows collected by a check.
type FindingRow = (Real, f64, usize, [f64; 2]);

fn worst_finding(ctx: Ctx, findings: Vec<FindingRow>) -> Finding {
    let mut best = Finding {
        residual: ctx.zero(),
        ratio: -1.0,
        n: 0,
        z: [0.0, 0.0],
    };
    for (residual, tol, n, z) in findings {
        let ratio = residual.to_f64() / tol;
        if ratio > best.ratio {
            best = Finding {
                residual,
                ratio,
                n,
                z,
            };
        }
    }
    best
}

/// Deterministic admissible z-samples: half complex with |Im| in [0.5, 3]
/// and Re within twice the support hull, half real outside the hull by a
/// margin of at least 0.5, all outside the 0.1-discs around the weight's
/// poles.
pub fn default_z_samples(w: &WeightSpec, count: usize, seed: u64) -> Vec<[f64; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (hull_lo, hull_hi) = w.family().hull();
    let span = hull_hi - hull_lo;
    let center = 0.5 * (hull_lo + hull_hi);
    let poles = w.z_poles();
    let admissible = |re: f64, im: f64| -> bool {
        poles
            .iter()
            .all(|p| ((re - p) * (re - p) + im * im).sqrt() >= 0.1)
    };
    let n_complex = count.div_ceil(2);
    let mut out = Vec::with_capacity(count);
    while out.len() < n_complex {
        let re = center + (rng.gen::<f64>() * 2.0 - 1.0) * span;
        let im_mag = 0.5 + rng.gen::<f64>() * 2.5;
        let im = if rng.gen::<bool>() { im_mag } else { -im_mag };
        if admissible(re, im) {
            out.push([re, im]);
        }
    }
    let (sup_lo, sup_hi) = w.support();
    while out.len() < count {
        let mag = 0.5 + rng.gen::<f64>() * 2.5;
        let re = if sup_hi.is_finite() && rng.gen::<bool>() {
            sup_hi + mag
        } else {
            sup_lo - mag
        };
        if admissible(re, 0.0) {
            out.push([re, 0.0]);
        }
    }
    out
}

/// Run all requested checks; the report serializes deterministically.
pub fn run_campaign(c: &Campaign, tol: &Tolerances) -> Result<Report> {
    let ctx = Ctx::new(c.precision_bits);
    let w = &c.weight;
    let cap = c.n_max + 2;
    let with_context =
        |e: Error, check: &str| -> Error { Error::EvaluationFailure(format!("{check}: {e}")) };

    // z admissibility per campaign invariant
    for z in &c.z_samples {
        let zc = ctx.cx(z[0], z[1]);
        w.check_z_off_support(&zc)?;
        for p in w.z_poles() {
            if ((z[0] - p) * (z[0] - p) + z[1] * z[1]).sqrt() < 0.1 {
                return Err(Error::Config(format!(
                    "z = {z:?} inside the pole-exclusion disc at {p}"
                )));
            }
        }
    }

    let (mut tab, rules) = opcore::recurrence_stieltjes(ctx, w, cap, c.node_count)?;
    if let Some((j, delta)) = c.perturb_beta {
        tab.perturb_beta(j, delta);
    }

    let mut results = BTreeMap::new();
    let mut convergence = BTreeMap::new();

    let need_ladder = c
        .checks
        .iter()
        .any(|k| matches!(k, CheckKind::Ladder | CheckKind::Compat));
    let engine = if need_ladder {
        Some(LadderEngine::new(ctx, w, &tab, c.node_count)?)
    } else {
        None
    };

    for &kind in &c.checks {
        let tol_v = tol.for_check(ctx, kind, w);
        let result = match kind {
            CheckKind::Orthogonality => {
                let worst = opcore::orthogonality_worst(ctx, &tab, &rules, c.n_max)?;
                Finding {
                    ratio: worst.to_f64() / tol_v,
                    residual: worst,
                    n: c.n_max,
                    z: [0.0, 0.0],
                }
            }
            CheckKind::Ladder => {
                let engine = engine.as_ref().unwrap();
                let per_z: Vec<Vec<FindingRow>> = c
                    .z_samples
                    .par_iter()
                    .map(|z| -> Result<_> {
                        let zc = ctx.cx(z[0], z[1]);
                        let at = engine.at(&zc, c.n_max)?;
                        let mut v = Vec::new();
                        for n in 1..=c.n_max {
                            v.push((ladder::lowering_residual(engine, &at, n)?, tol_v, n, *z));
                            v.push((ladder::raising_residual(engine, &at, n)?, tol_v, n, *z));
                        }
                        Ok(v)
                    })
                    .collect::<Result<_>>()
                    .map_err(|e| with_context(e, "ladder"))?;
                worst_finding(ctx, per_z.into_iter().flatten().collect())
            }
            CheckKind::Compat => {
                let engine = engine.as_ref().unwrap();
                let per_z: Vec<Vec<FindingRow>> = c
                    .z_samples
                    .par_iter()
                    .map(|z| -> Result<_> {
                        let zc = ctx.cx(z[0], z[1]);
                        let at = engine.at(&zc, c.n_max)?;
                        let mut v = Vec::new();
                        for n in 0..c.n_max {
                            let (s1, s2, s2p) = ladder::compat_residuals(engine, &at, n)?;
                            v.push((s1, tol_v, n, *z));
                            v.push((s2, tol_v, n, *z));
                            if let Some(s2p) = s2p {
                                v.push((s2p, tol_v, n, *z));
                            }
                        }
                        Ok(v)
                    })
                    .collect::<Result<_>>()
                    .map_err(|e| with_context(e, "compat"))?;
                worst_finding(ctx, per_z.into_iter().flatten().collect())
            }
            CheckKind::Rhp => {
                let rhp_engine = RhpEngine::new(ctx, w, &tab, c.node_count)?;
                let smooth = w.jumps().is_none() && w.fh().is_none();
                let n_hi = c.n_max.min(tab.cap - 1).max(1);
                let per_z: Vec<Vec<FindingRow>> = c
                    .z_samples
                    .par_iter()
                    .map(|z| -> Result<_> {
                        let zc = ctx.cx(z[0], z[1]);
                        let mut v = Vec::new();
                        for n in 1..=n_hi {
                            let frame = rhp_engine.y_frame(n, &zc)?;
                            v.push((frame.dety_residual(), tol_v, n, *z));
                            v.push((frame.trace_residual(), tol_v, n, *z));
                            let cm = rhp_engine.cauchy_commutes_residual(n, n, &zc, false)?;
                            v.push((cm, tol_v, n, *z));
                            let (lr_n, lr_m) = rhp_engine.ladder_from_r_residuals(n, &zc)?;
                            v.push((lr_n, tol_v, n, *z));
                            v.push((lr_m, tol_v, n, *z));
                            if smooth {
                                let rr = rhp_engine.r_elements_residual(n, &zc)?;
                                for row in rr {
                                    for x in row {
                                        v.push((x, tol_v, n, *z));
                                    }
                                }
                            }
                        }
                        Ok(v)
                    })
                    .collect::<Result<_>>()
                    .map_err(|e| with_context(e, "rhp"))?;
                let mut findings: Vec<_> = per_z.into_iter().flatten().collect();
                // boundary-limit smoke check at one interior point
                if let Some(x0) = plemelj_point(w) {
                    let r = rhp::plemelj_residual(
                        ctx,
                        w,
                        &tab,
                        2.min(tab.cap - 1),
                        x0,
                        1e-8,
                        c.node_count,
                    )?;
                    findings.push((r, tol.plemelj(), 2, [x0, 0.0]));
                }
                worst_finding(ctx, findings)
            }
            CheckKind::Oracle => {
                let n_hi = c.n_max.min(8);
                let mv = opcore::moments(ctx, &rules, 2 * (n_hi + 1))
                    .map_err(|e| with_context(e, "oracle"))?;
                let oracle = opcore::recurrence_moment_oracle(ctx, &mv, n_hi + 1)
                    .map_err(|e| with_context(e, "oracle"))?;
                let mut findings = Vec::new();
                for n in 0..=n_hi {
                    let da = (tab.alpha[n].clone() - &oracle.alpha[n]).abs()
                        / (ctx.one() + tab.alpha[n].clone().abs());
                    let dh = (tab.h[n].clone() - &oracle.h[n]).abs() / tab.h[n].clone().abs();
                    let dp = (tab.p1[n].clone() - &oracle.p1[n]).abs()
                        / (ctx.one() + tab.p1[n].clone().abs());
                    findings.push((da, tol_v, n, [0.0, 0.0]));
                    findings.push((dh, tol_v, n, [0.0, 0.0]));
                    findings.push((dp, tol_v, n, [0.0, 0.0]));
                    if n >= 1 {
                        let db = (tab.beta[n].clone() - &oracle.beta[n]).abs()
                            / tab.beta[n].clone().abs();
                        findings.push((db, tol_v, n, [0.0, 0.0]));
                    }
                }
                worst_finding(ctx, findings)
            }
            CheckKind::DiffT => {
                let fam = diff_family(w).ok_or_else(|| {
                    Error::FamilyMismatch("weight carries no t-differential identities".to_string())
                })?;
                let mut findings = Vec::new();
                for n in 1..=c.n_max.min(5) {
                    let res = ladder::diff_identity_residuals(ctx, w, fam, n, c.node_count, 1e-12)
                        .map_err(|e| with_context(e, "diff_t"))?;
                    for (_, v) in res {
                        findings.push((v, tol_v, n, [0.0, 0.0]));
                    }
                }
                worst_finding(ctx, findings)
            }
            CheckKind::KernelOracle => {
                let label = named_family(w).ok_or_else(|| {
                    Error::FamilyMismatch("weight is not a catalogued kernel family".to_string())
                })?;
                let mut rng = ChaCha8Rng::seed_from_u64(c.seed ^ 0x6b65726e);
                let (lo, hi) = w.family().hull();
                let sing = w.singular_points();
                let mut findings = Vec::new();
                let mut tries = 0;
                while findings.len() < 50 && tries < 10_000 {
                    tries += 1;
                    let x = lo + rng.gen::<f64>() * (hi - lo);
                    let re = lo + (rng.gen::<f64>() * 2.0 - 1.0) * (hi - lo);
                    let im = 0.5 + rng.gen::<f64>() * 2.0;
                    if x <= lo || x >= hi {
                        continue;
                    }
                    if sing.iter().any(|s| (s - x).abs() < 1e-3) {
                        continue;
                    }
                    let zc = ctx.cx(re, im);
                    let xv = ctx.re(x);
                    let k1 = w.kernel_divdiff(ctx, &zc, &xv)?;
                    let k2 = closedforms::named_kernel(ctx, label, w, &zc, &xv)?;
                    let scale = {
                        let s = k2.abs();
                        if s.is_zero() {
                            ctx.one()
                        } else {
                            s
                        }
                    };
                    let rel = k1.sub(&k2).abs() / scale;
                    findings.push((rel, tol_v, 0, [re, im]));
                }
                worst_finding(ctx, findings)
            }
        };
        results.insert(
            kind.name().to_string(),
            CheckResult {
                worst: format_at(ctx, &result.residual),
                at: CheckLocation {
                    n: result.n,
                    z: result.z,
                },
                pass: result.ratio <= 1.0,
                tol: format!("{tol_v:e}"),
            },
        );
    }

    // convergence evidence: mass integral at m and 2m
    {
        let rules2 = build_rules(ctx, w, &rules.plan.doubled())?;
        let q1 = rules.integrate(|_| ctx.one())?;
        let q2 = rules2.integrate(|_| ctx.one())?;
        let delta = ((q1 - &q2) / &q2).abs();
        convergence.insert("mass_rel_delta_m_2m".to_string(), format_at(ctx, &delta));
        if need_ladder {
            // ladder integral probe at the doubled node count, first z-sample
            if let Some(z) = c.z_samples.first() {
                let engine2 = LadderEngine::new(ctx, w, &tab, 2 * c.node_count)?;
                let engine1 = engine.as_ref().unwrap();
                let zc = ctx.cx(z[0], z[1]);
                let a1 = engine1.at(&zc, 1)?;
                let a2 = engine2.at(&zc, 1)?;
                let delta = a1.a(1).sub(a2.a(1)).abs();
                convergence.insert("ladder_a1_delta_m_2m".to_string(), format_at(ctx, &delta));
            }
        }
    }

    Ok(Report {
        campaign: c.clone(),
        results,
        meta: ReportMeta {
            precision_bits: c.precision_bits,
            nodes: c.node_count,
            seed: c.seed,
            duration_ms: 0,
            convergence,
        },
    })
}

/// Interior point suitable for the Plemelj smoke check (away from jumps,
/// the FH point and atom singularities).
fn plemelj_point(w: &WeightSpec) -> Option<f64> {
    let (lo, hi) = w.support();
    let candidates: Vec<f64> = if hi.is_finite() {
        vec![
            lo + 0.37 * (hi - lo),
            lo + 0.61 * (hi - lo),
            lo + 0.23 * (hi - lo),
        ]
    } else {
        vec![0.7, 1.3, 2.3]
    };
    let mut avoid = w.z_poles();
    avoid.extend(w.singular_points());
    candidates
        .into_iter()
        .find(|x| avoid.iter().all(|p| (p - x).abs() > 0.05))
}

/// The t-differential family of the weight, when catalogued.
pub fn diff_family(w: &WeightSpec) -> Option<AuxFamily> {
    if w.fh().is_some() && w.family() == Family::ShiftedJacobi {
        return Some(AuxFamily::JsFh);
    }
    if w.family() == Family::Jacobi && w.atoms().iter().any(|a| matches!(a, Atom::ExpQuad { .. })) {
        let (a, b) = w.alpha_beta()?;
        if a == b {
            return Some(AuxFamily::SymExpQuad);
        }
    }
    if w.family() == Family::ShiftedJacobi
        && w.atoms()
            .iter()
            .any(|a| matches!(a, Atom::PowerShiftNeg { .. }))
    {
        return Some(AuxFamily::ShiftedPow);
    }
    None
}

/// The closed-form kernel catalogue entry matching the weight, if any.
pub fn named_family(w: &WeightSpec) -> Option<NamedFamily> {
    let atoms = w.atoms();
    let has = |pred: fn(&Atom) -> bool| atoms.iter().any(pred);
    match w.family() {
        Family::Laguerre => {
            if has(|a| matches!(a, Atom::PowerShift { .. })) {
                Some(NamedFamily::ChenMcKay)
            } else if has(|a| matches!(a, Atom::ExpInvX { .. })) {
                Some(NamedFamily::ChenIts)
            } else if atoms.len() == 1 && matches!(atoms[0], Atom::ExpLinear { c } if c == 1.0) {
                Some(NamedFamily::ClassicalLaguerre)
            } else {
                None
            }
        }
        Family::Jacobi => {
            let (a, b) = w.alpha_beta()?;
            if atoms.is_empty() {
                Some(NamedFamily::ClassicalJacobi)
            } else if has(|a| matches!(a, Atom::ExpLinear { .. })) {
                Some(NamedFamily::JacobiExp)
            } else if a == b && has(|a| matches!(a, Atom::ExpQuad { .. })) {
                Some(NamedFamily::SymExpQuad)
            } else if a == b && has(|a| matches!(a, Atom::PowerOneMinusK2X2 { .. })) {
                Some(NamedFamily::SymPowerK)
            } else if a == b && has(|a| matches!(a, Atom::ExpInvX2 { .. })) {
                Some(NamedFamily::SymExpInvX2)
            } else if a == b && has(|a| matches!(a, Atom::ExpInvOneMinusX2 { .. })) {
                Some(NamedFamily::SymExpInvOneMinusX2)
            } else {
                None
            }
        }
        Family::ShiftedJacobi => {
            if has(|a| matches!(a, Atom::ExpInvX { .. })) {
                Some(NamedFamily::PollaczekJacobi)
            } else if has(|a| matches!(a, Atom::PowerShiftNeg { .. })) {
                Some(NamedFamily::ShiftedJacobiPow)
            } else {
                None
            }
        }
    }
}

/// Canary: perturbing beta_3 by delta must push the worst ladder residual
/// above the detection floor (the suite detects injected errors).
pub fn canary_detects(
    ctx: Ctx,
    w: &WeightSpec,
    n_max: usize,
    m: usize,
    z: (f64, f64),
    delta: f64,
    floor: f64,
) -> Result<bool> {
    let cap = n_max + 2;
    let (mut tab, _) = opcore::recurrence_stieltjes(ctx, w, cap, m)?;
    tab.perturb_beta(3, delta);
    let engine = LadderEngine::new(ctx, w, &tab, m)?;
    let zc = ctx.cx(z.0, z.1);
    let at = engine.at(&zc, n_max)?;
    let mut worst = ctx.zero();
    for n in 1..=n_max {
        let lo = ladder::lowering_residual(&engine, &at, n)?;
        let ra = ladder::raising_residual(&engine, &at, n)?;
        if lo > worst {
            worst = lo;
        }
        if ra > worst {
            worst = ra;
        }
    }
    Ok(worst.to_f64() >= floor)
}
