//! Cross-module invariants at working precision: closed-form kernel oracles
//! for every catalogued family, Stieltjes vs moment-determinant agreement on
//! the whole fixture set, Christoffel-Darboux consistency, partial-fraction
//! structure of the ladder coefficients, conventions at n = 0, and the RHP
//! identities on the non-smooth fixtures.

use opladder::closedforms::{self, NamedFamily};
use opladder::ladder::{self, AuxFamily, LadderEngine};
use opladder::opcore;
use opladder::precision::Ctx;
use opladder::presets;
use opladder::rhp::RhpEngine;
use opladder::verify;
use opladder::weights::WeightSpec;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const BITS: u32 = 256;

fn ctx() -> Ctx {
    Ctx::new(BITS)
}

#[test]
fn kernel_divdiff_matches_named_kernels() {
    // 50 random (z, x) pairs per catalogued family, relative 1e3 * eps_work
    let ctx = ctx();
    let families: Vec<(NamedFamily, WeightSpec)> = vec![
        (
            NamedFamily::ClassicalLaguerre,
            presets::classical_laguerre(-0.5).unwrap(),
        ),
        (
            NamedFamily::ChenMcKay,
            presets::chen_mckay(-0.5, 1.0, 1.0).unwrap(),
        ),
        (NamedFamily::ChenIts, presets::chen_its(-0.5, 0.3).unwrap()),
        (
            NamedFamily::ClassicalJacobi,
            presets::classical_jacobi(0.3, -0.7).unwrap(),
        ),
        (
            NamedFamily::JacobiExp,
            presets::jacobi_exp(0.4, -0.6, 1.0).unwrap(),
        ),
        (
            NamedFamily::SymExpQuad,
            presets::sym_exp_quad(-0.4, 0.5).unwrap(),
        ),
        (
            NamedFamily::SymPowerK,
            presets::sym_power_k(-0.3, 0.25, 0.7).unwrap(),
        ),
        (
            NamedFamily::SymExpInvX2,
            presets::sym_exp_inv_x2(-0.2, 0.4).unwrap(),
        ),
        (
            NamedFamily::SymExpInvOneMinusX2,
            presets::sym_exp_inv_one_minus_x2(-0.2, 0.4).unwrap(),
        ),
        (
            NamedFamily::PollaczekJacobi,
            presets::pollaczek_jacobi(-0.2, -0.2, 0.3).unwrap(),
        ),
        (
            NamedFamily::ShiftedJacobiPow,
            presets::shifted_jacobi_pow(-0.3, -0.3, 1.0, -0.5).unwrap(),
        ),
    ];
    let tol = ctx.re(1e3) * ctx.eps();
    let mut rng = ChaCha8Rng::seed_from_u64(1234);
    for (label, w) in &families {
        let (lo, hi) = w.family().hull();
        let sing = w.singular_points();
        let mut done = 0;
        while done < 50 {
            let x = lo + rng.gen::<f64>() * (hi - lo);
            if x <= lo || x >= hi || sing.iter().any(|s| (s - x).abs() < 1e-2) {
                continue;
            }
            let z = ctx.cx(
                lo + (rng.gen::<f64>() * 2.0 - 1.0) * (hi - lo),
                0.5 + rng.gen::<f64>() * 2.0,
            );
            let xv = ctx.re(x);
            let k1 = w.kernel_divdiff(ctx, &z, &xv).unwrap();
            let k2 = closedforms::named_kernel(ctx, *label, w, &z, &xv).unwrap();
            let scale = {
                let s = k2.abs();
                if s.is_zero() {
                    ctx.one()
                } else {
                    s
                }
            };
            let rel = k1.sub(&k2).abs() / scale;
            assert!(
                rel < tol,
                "{}: rel = {:e} at x = {x}",
                label.label(),
                rel.to_f64()
            );
            done += 1;
        }
    }
}

fn fixture_weights() -> Vec<(&'static str, WeightSpec)> {
    vec![
        (
            "classical_laguerre",
            presets::classical_laguerre(-0.5).unwrap(),
        ),
        ("chen_mckay", presets::chen_mckay(-0.5, 1.0, 1.0).unwrap()),
        ("chen_its", presets::chen_its(-0.5, 0.3).unwrap()),
        (
            "laguerre_two_jump",
            presets::laguerre_two_jump(-0.5, 0.5, 2.0).unwrap(),
        ),
        (
            "laguerre_fh",
            presets::laguerre_fh(-0.5, 1.2, 1.0, 1.0, 0.5).unwrap(),
        ),
        (
            "classical_jacobi",
            presets::classical_jacobi(-0.3, -0.3).unwrap(),
        ),
        ("jacobi_exp", presets::jacobi_exp(0.4, -0.6, 1.0).unwrap()),
        ("sym_exp_quad", presets::sym_exp_quad(-0.4, 0.5).unwrap()),
        (
            "pollaczek_jacobi",
            presets::pollaczek_jacobi(-0.2, -0.2, 0.3).unwrap(),
        ),
        (
            "shifted_jacobi_pow",
            presets::shifted_jacobi_pow(-0.3, -0.3, 1.0, -0.5).unwrap(),
        ),
    ]
}

#[test]
fn stieltjes_agrees_with_moment_oracle_on_all_fixtures() {
    let ctx = ctx();
    for (name, w) in fixture_weights() {
        let (tab, rules) = opcore::recurrence_stieltjes(ctx, &w, 9, 200).unwrap();
        let mv = opcore::moments(ctx, &rules, 18).unwrap();
        let oracle = opcore::recurrence_moment_oracle(ctx, &mv, 9).unwrap();
        for n in 0..=8usize {
            let da = (tab.alpha[n].clone() - &oracle.alpha[n]).abs()
                / (ctx.one() + tab.alpha[n].clone().abs());
            let dh = (tab.h[n].clone() - &oracle.h[n]).abs() / tab.h[n].clone().abs();
            let dp =
                (tab.p1[n].clone() - &oracle.p1[n]).abs() / (ctx.one() + tab.p1[n].clone().abs());
            for (tag, d) in [("alpha", da), ("h", dh), ("p", dp)] {
                assert!(d.to_f64() <= 1e-15, "{name} {tag}_{n}: {:e}", d.to_f64());
            }
            if n >= 1 {
                let db = (tab.beta[n].clone() - &oracle.beta[n]).abs() / tab.beta[n].clone().abs();
                assert!(db.to_f64() <= 1e-15, "{name} beta_{n}: {:e}", db.to_f64());
            }
        }
    }
}

#[test]
fn cd_kernel_sum_equals_closed_form_at_100_points() {
    let ctx = ctx();
    let w = presets::chen_mckay(-0.5, 1.0, 1.0).unwrap();
    let (tab, _) = opcore::recurrence_stieltjes(ctx, &w, 6, 80).unwrap();
    let tol = ctx.re(1e3) * ctx.eps();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..100 {
        let x = rng.gen::<f64>() * 6.0;
        let y = rng.gen::<f64>() * 6.0 + 6.5;
        let xs = ctx.re(x);
        let ys = ctx.re(y);
        let closed = opcore::cd_kernel(&tab, 5, &xs, &ys).unwrap();
        let sum = opcore::cd_kernel_sum(&tab, 5, &xs, &ys).unwrap();
        let scale = ctx.one() + closed.clone().abs();
        let rel = (closed - sum).abs() / scale;
        assert!(rel < tol, "rel = {:e} at ({x}, {y})", rel.to_f64());
    }
}

#[test]
fn classical_jacobi_s2prime_factorization() {
    // (n+2a-p(n))(n-p(n)) = (2n-1+a+b)(2n+1+a+b) beta_n = (n+2b+p(n))(n+p(n))
    let ctx = ctx();
    let tol = ctx.re(1e3) * ctx.eps();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let n = 1 + (rng.gen::<f64>() * 12.0) as usize;
        let a = -0.9 + rng.gen::<f64>() * 2.5;
        let b = -0.9 + rng.gen::<f64>() * 2.5;
        let cv = closedforms::jacobi_classical(ctx, n, a, b).unwrap();
        let nf = ctx.re_u(n as u64);
        let av = ctx.re(a);
        let bv = ctx.re(b);
        let lhs1 = (nf.clone() + ctx.re(2.0) * &av - &cv.p1) * (nf.clone() - &cv.p1);
        let mid = (ctx.re_u(2 * n as u64 - 1) + &av + &bv)
            * (ctx.re_u(2 * n as u64 + 1) + &av + &bv)
            * &cv.beta;
        let lhs2 = (nf.clone() + ctx.re(2.0) * &bv + &cv.p1) * (nf.clone() + &cv.p1);
        let scale = ctx.one() + mid.clone().abs();
        assert!(
            ((lhs1 - &mid) / &scale).abs() < tol,
            "pbt identity at n={n}, a={a}, b={b}"
        );
        assert!(
            ((lhs2 - &mid) / &scale).abs() < tol,
            "p identity at n={n}, a={a}, b={b}"
        );
    }
}

#[test]
fn ladder_partial_fraction_structure() {
    let ctx = ctx();
    // classical Laguerre: z A_n(z) constant over z
    let w = presets::classical_laguerre(-0.5).unwrap();
    let (tab, _) = opcore::recurrence_stieltjes(ctx, &w, 5, 80).unwrap();
    let eng = LadderEngine::new(ctx, &w, &tab, 80).unwrap();
    let zs = [
        (2.0, 1.0),
        (-3.0, 0.0),
        (0.5, 2.0),
        (-1.0, -1.5),
        (4.0, 4.0),
    ];
    let mut vals = vec![];
    for (re, im) in zs {
        let zc = ctx.cx(re, im);
        let at = eng.at(&zc, 3).unwrap();
        vals.push(zc.mul(at.a(3)));
    }
    for v in &vals[1..] {
        let d = v.sub(&vals[0]).abs();
        assert!(d < ctx.re(1e-40), "z A_n not constant: {:e}", d.to_f64());
    }

    // classical Jacobi: (1-z^2) A_n(z) constant over z
    let w = presets::classical_jacobi(-0.3, -0.3).unwrap();
    let (tab, _) = opcore::recurrence_stieltjes(ctx, &w, 5, 80).unwrap();
    let eng = LadderEngine::new(ctx, &w, &tab, 80).unwrap();
    let mut vals = vec![];
    for (re, im) in zs {
        let zc = ctx.cx(re, im);
        let at = eng.at(&zc, 3).unwrap();
        let one = ctx.cx(1.0, 0.0);
        vals.push(one.sub(&zc.sqr()).mul(at.a(3)));
    }
    for v in &vals[1..] {
        let d = v.sub(&vals[0]).abs();
        assert!(
            d < ctx.re(1e-40),
            "(1-z^2) A_n not constant: {:e}",
            d.to_f64()
        );
    }

    // ChenMcKay: A_n - (1-R_n)/z - R_n/(z+t) = 0
    let w = presets::chen_mckay(-0.5, 1.0, 1.0).unwrap();
    let (tab, _) = opcore::recurrence_stieltjes(ctx, &w, 5, 80).unwrap();
    let eng = LadderEngine::new(ctx, &w, &tab, 80).unwrap();
    let zc = ctx.cx(1.5, 1.5);
    let at = eng.at(&zc, 3).unwrap();
    let aux = ladder::aux_quantities(&eng, 3, AuxFamily::ChenMcKay).unwrap();
    let rn = aux.get("R_n").unwrap();
    let rest = at
        .a(3)
        .sub(&zc.recip().mul_real(&(ctx.one() - rn.clone())))
        .sub(&zc.add_real(&ctx.re(1.0)).recip().mul_real(rn));
    assert!(rest.abs() < ctx.re(1e-40));
}

#[test]
fn conventions_at_n_zero() {
    let ctx = ctx();
    let w = presets::classical_jacobi(-0.3, -0.3).unwrap();
    let (tab, _) = opcore::recurrence_stieltjes(ctx, &w, 4, 60).unwrap();
    let eng = LadderEngine::new(ctx, &w, &tab, 60).unwrap();
    let at = eng.at(&ctx.cx(0.2, 1.7), 2).unwrap();
    // B_0 := 0 and the n = 0 lowering relation degenerates to P_0' = 0
    assert!(at.b(0).is_zero());
    let lo = ladder::lowering_residual(&eng, &at, 0).unwrap();
    assert!(lo.is_zero());
    // S1 at n = 0 under the B_0 convention
    let (s1, s2, s2p) = ladder::compat_residuals(&eng, &at, 0).unwrap();
    assert!(s1 < ctx.re(1e-40), "s1: {:e}", s1.to_f64());
    assert!(s2 < ctx.re(1e-40), "s2: {:e}", s2.to_f64());
    assert!(s2p.is_none());
}

#[test]
fn zero_jump_weight_has_zero_residue() {
    let ctx = ctx();
    let w = presets::laguerre_jumps(-0.5, 1.0, &[(1.0, 0.0), (2.0, 0.5)]).unwrap();
    let (tab, _) = opcore::recurrence_stieltjes(ctx, &w, 4, 60).unwrap();
    let eng = LadderEngine::new(ctx, &w, &tab, 60).unwrap();
    let aux = ladder::aux_quantities(&eng, 2, AuxFamily::LaguerreJump).unwrap();
    assert!(aux.get("R_n_1").unwrap().is_zero());
    assert!(!aux.get("R_n_2").unwrap().is_zero());
}

#[test]
fn rhp_identities_hold_for_jump_and_fh_fixtures() {
    // det Y = 1, trace R = 0, commutation, and the ladder-from-R
    // reconstruction are weight-agnostic; exercise them on the non-smooth
    // fixtures (the closed R-element formulas stay smooth-only)
    let ctx = ctx();
    for w in [
        presets::laguerre_two_jump(-0.5, 0.5, 2.0).unwrap(),
        presets::laguerre_fh(-0.5, 1.2, 1.0, 1.0, 0.5).unwrap(),
    ] {
        let (tab, _) = opcore::recurrence_stieltjes(ctx, &w, 10, 200).unwrap();
        let eng = RhpEngine::new(ctx, &w, &tab, 200).unwrap();
        for z in verify::default_z_samples(&w, 10, 42) {
            let zc = ctx.cx(z[0], z[1]);
            for n in [1usize, 4, 8] {
                let frame = eng.y_frame(n, &zc).unwrap();
                assert!(frame.dety_residual().to_f64() <= 1e-15);
                assert!(frame.trace_residual().to_f64() <= 1e-15);
                let cm = eng.cauchy_commutes_residual(n, n, &zc, false).unwrap();
                assert!(cm.to_f64() <= 1e-15);
                let (a, b) = eng.ladder_from_r_residuals_with(&frame).unwrap();
                assert!(a.to_f64() <= 1e-15 && b.to_f64() <= 1e-15);
            }
        }
    }
}

#[test]
fn sym_diff_identity_vanishes_at_t_zero() {
    // both sides of the 2t d/dt ln h identity carry the 2t factor
    let ctx = Ctx::new(192);
    let w = presets::sym_exp_quad(0.5, 0.0).unwrap();
    let res =
        ladder::diff_identity_residuals(ctx, &w, AuxFamily::SymExpQuad, 2, 48, 1e-10).unwrap();
    let dlnh = res.get("dlnh").unwrap();
    assert!(dlnh < &ctx.re(1e-20), "dlnh: {:e}", dlnh.to_f64());
}

#[test]
fn sym_power_k_partial_fractions() {
    // A_n = (2(n+a+g)+1 - (2/k) R*)/(1-z^2) - (2/k) R*/(z^2 - 1/k^2)
    // B_n = z(n + 2 r*)/(1-z^2) + 2 z r*/(z^2 - 1/k^2)
    let ctx = ctx();
    let (alpha, k2, gamma) = (-0.3, 0.25, 0.7);
    let w = presets::sym_power_k(alpha, k2, gamma).unwrap();
    let (tab, _) = opcore::recurrence_stieltjes(ctx, &w, 5, 80).unwrap();
    let eng = LadderEngine::new(ctx, &w, &tab, 80).unwrap();
    let zc = ctx.cx(0.4, 1.1);
    let n = 3;
    let at = eng.at(&zc, n).unwrap();
    let aux = ladder::aux_quantities(&eng, n, AuxFamily::SymPowerK).unwrap();
    let rn = aux.get("R_n_star").unwrap();
    let r = aux.get("r_n_star").unwrap();
    let one = ctx.cx(1.0, 0.0);
    let inv_k = ctx.re(k2).sqrt().recip();
    let two_over_k = ctx.re(2.0) * &inv_k;
    let pf1 = one.sub(&zc.sqr()).recip();
    let pf2 = zc.sqr().sub_real(&real_sq(&inv_k)).recip();
    let c = ctx.re(2.0) * (ctx.re_u(n as u64) + ctx.re(alpha) + ctx.re(gamma)) + ctx.one()
        - two_over_k.clone() * rn;
    let ea = pf1.mul_real(&c).add(&pf2.mul_real(&(-(two_over_k * rn))));
    let da = at.a(n).sub(&ea).abs();
    assert!(da < ctx.re(1e-38), "A: {:e}", da.to_f64());
    let cb = ctx.re_u(n as u64) + ctx.re(2.0) * r;
    let eb = pf1
        .mul(&zc)
        .mul_real(&cb)
        .add(&pf2.mul(&zc).mul_real(&(ctx.re(2.0) * r)));
    let db = at.b(n).sub(&eb).abs();
    assert!(db < ctx.re(1e-38), "B: {:e}", db.to_f64());
}

fn real_sq(x: &opladder::Real) -> opladder::Real {
    x.clone().square()
}

#[test]
fn jump_and_fh_corrections_superpose() {
    // a weight carrying both a step factor and an FH factor: the ladder
    // relations must still close, with both correction families active
    let ctx = ctx();
    let w = WeightSpec::new(
        opladder::Family::Laguerre,
        opladder::Exponents::Lambda(-0.5),
        vec![opladder::Atom::ExpLinear { c: 1.0 }],
        Some(opladder::JumpSpec {
            omega0: 1.0,
            points: vec![opladder::JumpPoint {
                t: 0.5,
                omega: 0.75,
            }],
        }),
        Some(opladder::FhSpec {
            t: 2.0,
            gamma: 1.2,
            a: 1.0,
            b: 0.5,
        }),
    )
    .unwrap();
    let (tab, _) = opcore::recurrence_stieltjes(ctx, &w, 6, 200).unwrap();
    let eng = LadderEngine::new(ctx, &w, &tab, 200).unwrap();
    for z in [(1.2, 1.3), (-2.0, 0.0), (3.1, -0.9)] {
        let zc = ctx.cx(z.0, z.1);
        let at = eng.at(&zc, 5).unwrap();
        for n in 1..=4usize {
            let lo = ladder::lowering_residual(&eng, &at, n).unwrap();
            let ra = ladder::raising_residual(&eng, &at, n).unwrap();
            assert!(
                lo.to_f64() <= 1e-15 && ra.to_f64() <= 1e-15,
                "n={n} z={z:?}: lowering {:e}, raising {:e}",
                lo.to_f64(),
                ra.to_f64()
            );
            let (s1, s2, s2p) = ladder::compat_residuals(&eng, &at, n).unwrap();
            assert!(s1.to_f64() <= 1e-15 && s2.to_f64() <= 1e-15);
            assert!(s2p.unwrap().to_f64() <= 1e-15);
        }
    }
}

#[test]
fn jacobi_gap_weight_partial_fractions() {
    // (1-x^2)^alpha restricted outside (-a, a): A_n and B_n collapse to
    //   A_n = (2n+2a+1+2a R*)/(1-z^2) + 2a R*/(z^2-a^2),
    //   B_n = z(n+2r*)/(1-z^2) + 2z r*/(z^2-a^2)
    // with R*_{n,1} = -R*_{n,2} and r*_{n,1} = r*_{n,2} by parity
    let ctx = ctx();
    let (alpha, a) = (-0.3, 0.4);
    let w = presets::jacobi_gap(alpha, a).unwrap();
    let (tab, _) = opcore::recurrence_stieltjes(ctx, &w, 6, 200).unwrap();
    let eng = LadderEngine::new(ctx, &w, &tab, 200).unwrap();
    let zc = ctx.cx(0.3, 1.4);
    let n = 3;
    let at = eng.at(&zc, n + 1).unwrap();
    let aux = ladder::aux_quantities(&eng, n, AuxFamily::JacobiJump).unwrap();
    let r1 = aux.get("R_n_1").unwrap();
    let r2 = aux.get("R_n_2").unwrap();
    let s1 = aux.get("r_n_1").unwrap();
    let s2 = aux.get("r_n_2").unwrap();
    assert!((r1.clone() + r2).abs() < ctx.re(1e-60), "R parity");
    assert!((s1.clone() - s2).abs() < ctx.re(1e-60), "r parity");

    let one = ctx.cx(1.0, 0.0);
    let pf1 = one.sub(&zc.sqr()).recip();
    let pf2 = zc.sqr().sub_real(&ctx.re(a).square()).recip();
    let c = ctx.re_u(2 * n as u64 + 1) + ctx.re(2.0) * ctx.re(alpha) + ctx.re(2.0) * ctx.re(a) * r2;
    let ea = pf1
        .mul_real(&c)
        .add(&pf2.mul_real(&(ctx.re(2.0) * ctx.re(a) * r2)));
    let da = at.a(n).sub(&ea).abs();
    assert!(da < ctx.re(1e-40), "A: {:e}", da.to_f64());
    let cb = ctx.re_u(n as u64) + ctx.re(2.0) * s2;
    let eb = pf1
        .mul(&zc)
        .mul_real(&cb)
        .add(&pf2.mul(&zc).mul_real(&(ctx.re(2.0) * s2)));
    let db = at.b(n).sub(&eb).abs();
    assert!(db < ctx.re(1e-40), "B: {:e}", db.to_f64());

    // and the relations close
    let lo = ladder::lowering_residual(&eng, &at, n).unwrap();
    let ra = ladder::raising_residual(&eng, &at, n).unwrap();
    assert!(lo.to_f64() <= 1e-15 && ra.to_f64() <= 1e-15);
}

#[test]
fn shifted_jacobi_one_jump_partial_fractions() {
    // x^alpha (1-x)^beta with one jump:
    //   A_n = (2n+1+a+b+(t-1)R)/z + (2n+1+a+b+tR)/(1-z) + R/(z-t)
    //   B_n = (-n-p(n)+(t-1)r)/z + (-p(n)+tr)/(1-z) + r/(z-t)
    let ctx = ctx();
    let (alpha, beta, t1, om) = (-0.4, -0.2, 0.3, 0.8);
    let w = presets::shifted_jacobi_jump(alpha, beta, 1.0, t1, om).unwrap();
    let (tab, _) = opcore::recurrence_stieltjes(ctx, &w, 6, 200).unwrap();
    let eng = LadderEngine::new(ctx, &w, &tab, 200).unwrap();
    let zc = ctx.cx(-0.7, 1.1);
    let n = 3;
    let at = eng.at(&zc, n + 1).unwrap();
    let aux = ladder::aux_quantities(&eng, n, AuxFamily::JsJump).unwrap();
    let r = aux.get("R_n_1").unwrap();
    let rr = aux.get("r_n_1").unwrap();
    let one = ctx.cx(1.0, 0.0);
    let kappa = ctx.re_u(2 * n as u64 + 1) + ctx.re(alpha) + ctx.re(beta);
    let ea = zc
        .recip()
        .mul_real(&(kappa.clone() + (ctx.re(t1) - ctx.one()) * r))
        .add(&one.sub(&zc).recip().mul_real(&(kappa + ctx.re(t1) * r)))
        .add(&zc.sub_real(&ctx.re(t1)).recip().mul_real(r));
    let da = at.a(n).sub(&ea).abs();
    assert!(da < ctx.re(1e-40), "A: {:e}", da.to_f64());
    let eb = zc
        .recip()
        .mul_real(&(-ctx.re_u(n as u64) - &tab.p1[n] + (ctx.re(t1) - ctx.one()) * rr))
        .add(
            &one.sub(&zc)
                .recip()
                .mul_real(&(ctx.re(t1) * rr - &tab.p1[n])),
        )
        .add(&zc.sub_real(&ctx.re(t1)).recip().mul_real(rr));
    let db = at.b(n).sub(&eb).abs();
    assert!(db < ctx.re(1e-40), "B: {:e}", db.to_f64());

    let lo = ladder::lowering_residual(&eng, &at, n).unwrap();
    let ra = ladder::raising_residual(&eng, &at, n).unwrap();
    assert!(lo.to_f64() <= 1e-15 && ra.to_f64() <= 1e-15);
}

#[test]
fn essential_decay_families_close_the_ladder() {
    // e^{-t/x^2} (interior cut at 0) and e^{-t/(1-x^2)} (cuts at +/-1):
    // the geometric meshes toward the cuts must carry the ladder integrals
    let ctx = ctx();
    for w in [
        presets::sym_exp_inv_x2(-0.2, 0.4).unwrap(),
        presets::sym_exp_inv_one_minus_x2(-0.2, 0.4).unwrap(),
    ] {
        let (tab, _) = opcore::recurrence_stieltjes(ctx, &w, 6, 200).unwrap();
        let eng = LadderEngine::new(ctx, &w, &tab, 200).unwrap();
        for z in [(0.4, 1.2), (-2.1, 0.0)] {
            let zc = ctx.cx(z.0, z.1);
            let at = eng.at(&zc, 5).unwrap();
            for n in 1..=4usize {
                let lo = ladder::lowering_residual(&eng, &at, n).unwrap();
                let ra = ladder::raising_residual(&eng, &at, n).unwrap();
                assert!(
                    lo.to_f64() <= 1e-15 && ra.to_f64() <= 1e-15,
                    "{:?} n={n} z={z:?}: lowering {:e}, raising {:e}",
                    w.atoms()[0],
                    lo.to_f64(),
                    ra.to_f64()
                );
                let (s1, s2, s2p) = ladder::compat_residuals(&eng, &at, n).unwrap();
                assert!(s1.to_f64() <= 1e-15 && s2.to_f64() <= 1e-15);
                assert!(s2p.unwrap().to_f64() <= 1e-15);
            }
        }
    }
}
