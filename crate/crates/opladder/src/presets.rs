//! Named weight constructors for the catalogued example families.

use crate::error::Result;
use crate::weights::{Atom, Exponents, Family, FhSpec, JumpPoint, JumpSpec, WeightSpec};

/// x^lambda e^{-x} on [0, inf).
pub fn classical_laguerre(lambda: f64) -> Result<WeightSpec> {
    WeightSpec::new(
        Family::Laguerre,
        Exponents::Lambda(lambda),
        vec![Atom::ExpLinear { c: 1.0 }],
        None,
        None,
    )
}

/// x^lambda e^{-x} (x+t)^gamma on [0, inf).
pub fn chen_mckay(lambda: f64, gamma: f64, t: f64) -> Result<WeightSpec> {
    WeightSpec::new(
        Family::Laguerre,
        Exponents::Lambda(lambda),
        vec![Atom::ExpLinear { c: 1.0 }, Atom::PowerShift { c: t, gamma }],
        None,
        None,
    )
}

/// x^lambda e^{-x - s/x} on [0, inf).
pub fn chen_its(lambda: f64, s: f64) -> Result<WeightSpec> {
    WeightSpec::new(
        Family::Laguerre,
        Exponents::Lambda(lambda),
        vec![Atom::ExpLinear { c: 1.0 }, Atom::ExpInvX { s }],
        None,
        None,
    )
}

/// x^lambda e^{-x} (theta(x-t1) - theta(x-t2)): weight restricted to [t1, t2].
pub fn laguerre_two_jump(lambda: f64, t1: f64, t2: f64) -> Result<WeightSpec> {
    WeightSpec::new(
        Family::Laguerre,
        Exponents::Lambda(lambda),
        vec![Atom::ExpLinear { c: 1.0 }],
        Some(JumpSpec {
            omega0: 0.0,
            points: vec![
                JumpPoint { t: t1, omega: 1.0 },
                JumpPoint { t: t2, omega: -1.0 },
            ],
        }),
        None,
    )
}

/// General Laguerre jump weight x^lambda e^{-x} (omega0 + sum omega_k theta).
pub fn laguerre_jumps(lambda: f64, omega0: f64, points: &[(f64, f64)]) -> Result<WeightSpec> {
    WeightSpec::new(
        Family::Laguerre,
        Exponents::Lambda(lambda),
        vec![Atom::ExpLinear { c: 1.0 }],
        Some(JumpSpec {
            omega0,
            points: points
                .iter()
                .map(|&(t, omega)| JumpPoint { t, omega })
                .collect(),
        }),
        None,
    )
}

/// x^lambda e^{-x} |x-t|^gamma (A + B theta(x-t)) on [0, inf).
pub fn laguerre_fh(lambda: f64, gamma: f64, t: f64, a: f64, b: f64) -> Result<WeightSpec> {
    WeightSpec::new(
        Family::Laguerre,
        Exponents::Lambda(lambda),
        vec![Atom::ExpLinear { c: 1.0 }],
        None,
        Some(FhSpec { t, gamma, a, b }),
    )
}

/// (1-x)^alpha (1+x)^beta on [-1, 1].
pub fn classical_jacobi(alpha: f64, beta: f64) -> Result<WeightSpec> {
    WeightSpec::new(
        Family::Jacobi,
        Exponents::AlphaBeta { alpha, beta },
        vec![],
        None,
        None,
    )
}

/// (1-x)^alpha (1+x)^beta e^{-tx} on [-1, 1].
pub fn jacobi_exp(alpha: f64, beta: f64, t: f64) -> Result<WeightSpec> {
    WeightSpec::new(
        Family::Jacobi,
        Exponents::AlphaBeta { alpha, beta },
        vec![Atom::ExpLinear { c: t }],
        None,
        None,
    )
}

/// Symmetric (1-x^2)^alpha e^{-t x^2} on [-1, 1].
pub fn sym_exp_quad(alpha: f64, t: f64) -> Result<WeightSpec> {
    WeightSpec::new(
        Family::Jacobi,
        Exponents::AlphaBeta { alpha, beta: alpha },
        vec![Atom::ExpQuad { t }],
        None,
        None,
    )
}

/// Symmetric (1-x^2)^alpha (1-k^2 x^2)^gamma on [-1, 1].
pub fn sym_power_k(alpha: f64, k2: f64, gamma: f64) -> Result<WeightSpec> {
    WeightSpec::new(
        Family::Jacobi,
        Exponents::AlphaBeta { alpha, beta: alpha },
        vec![Atom::PowerOneMinusK2X2 { k2, gamma }],
        None,
        None,
    )
}

/// Symmetric (1-x^2)^alpha e^{-t/x^2} on [-1, 1].
pub fn sym_exp_inv_x2(alpha: f64, t: f64) -> Result<WeightSpec> {
    WeightSpec::new(
        Family::Jacobi,
        Exponents::AlphaBeta { alpha, beta: alpha },
        vec![Atom::ExpInvX2 { t }],
        None,
        None,
    )
}

/// Symmetric (1-x^2)^alpha e^{-t/(1-x^2)} on [-1, 1].
pub fn sym_exp_inv_one_minus_x2(alpha: f64, t: f64) -> Result<WeightSpec> {
    WeightSpec::new(
        Family::Jacobi,
        Exponents::AlphaBeta { alpha, beta: alpha },
        vec![Atom::ExpInvOneMinusX2 { t }],
        None,
        None,
    )
}

/// Pollaczek-Jacobi x^alpha (1-x)^beta e^{-t/x} on [0, 1].
pub fn pollaczek_jacobi(alpha: f64, beta: f64, t: f64) -> Result<WeightSpec> {
    WeightSpec::new(
        Family::ShiftedJacobi,
        Exponents::AlphaBeta { alpha, beta },
        vec![Atom::ExpInvX { s: t }],
        None,
        None,
    )
}

/// x^alpha (1-x)^beta (x-t)^gamma on [0, 1], t < 0.
pub fn shifted_jacobi_pow(alpha: f64, beta: f64, gamma: f64, t: f64) -> Result<WeightSpec> {
    WeightSpec::new(
        Family::ShiftedJacobi,
        Exponents::AlphaBeta { alpha, beta },
        vec![Atom::PowerShiftNeg { t, gamma }],
        None,
        None,
    )
}

/// x^alpha (1-x)^beta with one jump at t1 on [0, 1].
pub fn shifted_jacobi_jump(
    alpha: f64,
    beta: f64,
    omega0: f64,
    t1: f64,
    omega1: f64,
) -> Result<WeightSpec> {
    WeightSpec::new(
        Family::ShiftedJacobi,
        Exponents::AlphaBeta { alpha, beta },
        vec![],
        Some(JumpSpec {
            omega0,
            points: vec![JumpPoint {
                t: t1,
                omega: omega1,
            }],
        }),
        None,
    )
}

/// x^alpha (1-x)^beta |x-t|^gamma (A + B theta(x-t)) on [0, 1].
pub fn shifted_jacobi_fh(
    alpha: f64,
    beta: f64,
    gamma: f64,
    t: f64,
    a: f64,
    b: f64,
) -> Result<WeightSpec> {
    WeightSpec::new(
        Family::ShiftedJacobi,
        Exponents::AlphaBeta { alpha, beta },
        vec![],
        None,
        Some(FhSpec { t, gamma, a, b }),
    )
}

/// (1-x^2)^alpha with jumps at -a and a (gap-probability weight).
pub fn jacobi_gap(alpha: f64, a: f64) -> Result<WeightSpec> {
    WeightSpec::new(
        Family::Jacobi,
        Exponents::AlphaBeta { alpha, beta: alpha },
        vec![],
        Some(JumpSpec {
            omega0: 1.0,
            points: vec![
                JumpPoint { t: -a, omega: -1.0 },
                JumpPoint { t: a, omega: 1.0 },
            ],
        }),
        None,
    )
}
