//! Compactification of the control direction and the polynomial measure LP.
//!
//! The control `u ∈ ℝ ∪ {±∞}` is written `u = z / w` with `(z, w)` on the
//! slice `z^s + w^s = 1, w >= 0`. Multiplying the occupation measure by `w^r`
//! clears every denominator, which turns the Lagrangian into
//! `l̃(t, x, z, w) = w^r l(t, x, z / w)` and the Liouville operator into
//! `v_t w^r + v_x z w^(r-1)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measure_lp::{LinearFunctionalRow, MeasureLp, Relation, SupportSet};
use crate::poly::{Monomial, PolyError, Polynomial, Var};
use crate::problem::{
    boundary_difference, liouville_label, test_exponents, ControlSign, OcpProblem, Violation, ViolationKind,
    MASS_ROW,
};

/// Points with `|z^s + w^s - 1|` above this are not on the slice.
pub const SLICE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ExtendedReal {
    Finite(f64),
    PosInfinity,
    NegInfinity,
}

impl From<f64> for ExtendedReal {
    fn from(v: f64) -> Self {
        if v == f64::INFINITY {
            ExtendedReal::PosInfinity
        } else if v == f64::NEG_INFINITY {
            ExtendedReal::NegInfinity
        } else {
            ExtendedReal::Finite(v)
        }
    }
}

impl ExtendedReal {
    pub fn to_f64(self) -> f64 {
        match self {
            ExtendedReal::Finite(v) => v,
            ExtendedReal::PosInfinity => f64::INFINITY,
            ExtendedReal::NegInfinity => f64::NEG_INFINITY,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HomogenizeError {
    #[error("1 + u^s = {value} is not positive for u = {u}, s = {s}")]
    Domain { u: f64, s: u32, value: f64 },
    #[error("exponent s must be at least 1")]
    ZeroExponent,
    #[error("({z}, {w}) is not on the slice z^{s} + w^{s} = 1, w >= 0")]
    NotOnSlice { z: f64, w: f64, s: u32 },
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("free control with odd r = {r} or s = {s} needs the split construction")]
    OddFreeControl { r: u32, s: u32 },
    #[error("the split construction needs a free control")]
    SplitNeedsFreeControl,
    #[error("invalid problem: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", "))]
    InvalidProblem(Vec<Violation>),
}

/// `u ↦ (u, 1) / (1 + u^s)^(1/s)`, with `±∞ ↦ (±1, 0)`.
pub fn map_control(u: ExtendedReal, s: u32) -> Result<(f64, f64), HomogenizeError> {
    if s == 0 {
        return Err(HomogenizeError::ZeroExponent);
    }
    let u = match u {
        ExtendedReal::PosInfinity => return Ok((1.0, 0.0)),
        ExtendedReal::NegInfinity => return Ok((-1.0, 0.0)),
        ExtendedReal::Finite(u) => u,
    };
    let si = s as i32;
    if u.abs() <= 1.0 {
        let value = 1.0 + u.powi(si);
        if value <= 0.0 {
            return Err(HomogenizeError::Domain { u, s, value });
        }
        let w = value.powf(-1.0 / f64::from(s));
        return Ok((u * w, w));
    }
    if s % 2 == 1 && u < 0.0 {
        return Err(HomogenizeError::Domain { u, s, value: 1.0 + u.powi(si) });
    }
    // Factor |u| out so that large controls do not overflow.
    let inv = 1.0 / u.abs();
    let root = (1.0 + inv.powi(si)).powf(1.0 / f64::from(s));
    Ok((u.signum() / root, inv / root))
}

/// Inverse of [`map_control`]: `(z, w) ↦ z / w`, `(±1, 0) ↦ ±∞`.
pub fn unmap_control(z: f64, w: f64, s: u32) -> Result<ExtendedReal, HomogenizeError> {
    let si = s as i32;
    if s == 0 || w < -SLICE_TOL || (z.powi(si) + w.powi(si) - 1.0).abs() > SLICE_TOL {
        return Err(HomogenizeError::NotOnSlice { z, w, s });
    }
    if w <= 0.0 {
        return Ok(if z > 0.0 { ExtendedReal::PosInfinity } else { ExtendedReal::NegInfinity });
    }
    Ok(ExtendedReal::Finite(z / w))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomogenizedLagrangian {
    pub ltilde: Polynomial,
    pub r: u32,
}

/// `l̃(t, x, z, w) = w^r l(t, x, z / w)`.
pub fn homogenize_lagrangian(l: &Polynomial, r: u32) -> Result<HomogenizedLagrangian, HomogenizeError> {
    let ltilde = l.substitute_ratio(Var::U, Var::Z, Var::W, r)?;
    Ok(HomogenizedLagrangian { ltilde, r })
}

/// Test-function degree used at relaxation order `order`: every Liouville
/// coefficient then has degree at most `2 * order`.
pub fn default_test_degree(order: u32, r: u32) -> u32 {
    (2 * order).saturating_sub(r.max(1))
}

/// Liouville coefficient of `v = t^α x^β`:
/// `α t^(α-1) x^β w^r + β t^α x^(β-1) z w^(r-1)`.
pub fn liouville_coefficient(alpha: u32, beta: u32, r: u32) -> Polynomial {
    let v = Polynomial::term(Monomial::from_pairs(&[(Var::T, alpha), (Var::X, beta)]), 1.0);
    let dt = v.differentiate(Var::T).mul_monomial(&Monomial::var_pow(Var::W, r));
    let dx = v
        .differentiate(Var::X)
        .mul_monomial(&Monomial::from_pairs(&[(Var::Z, 1), (Var::W, r - 1)]));
    &dt + &dx
}

fn base_support(p: &OcpProblem) -> SupportSet {
    let t = Polynomial::var(Var::T);
    let x = Polynomial::var(Var::X);
    let time_box = &(&t - &Polynomial::constant(p.a)) * &(&Polynomial::constant(p.b) - &t);
    let state_box = &(&x - &Polynomial::constant(p.x_lo)) * &(&Polynomial::constant(p.x_hi) - &x);
    SupportSet::new(vec![Var::T, Var::X, Var::Z, Var::W])
        .with_inequality(time_box)
        .with_inequality(state_box)
        .with_inequality(Polynomial::var(Var::W))
}

/// Support piece for controls of sign `orientation` (`None` = both signs,
/// only sensible for even `s`).
fn piece_support(p: &OcpProblem, orientation: Option<f64>) -> SupportSet {
    let sigma = orientation.unwrap_or(1.0);
    let zs = Polynomial::var(Var::Z).scale(sigma).pow(p.s);
    let ws = Polynomial::var(Var::W).pow(p.s);
    let mut support = base_support(p).with_equality(&(&zs + &ws) - &Polynomial::one());
    if let Some(sigma) = orientation {
        support = support.with_inequality(Polynomial::var(Var::Z).scale(sigma));
    }
    support
}

fn liouville_rows(p: &OcpProblem, test_degree: u32, measures: &[usize]) -> Vec<LinearFunctionalRow> {
    test_exponents(test_degree)
        .into_iter()
        .map(|(alpha, beta)| {
            let coeff = liouville_coefficient(alpha, beta, p.r);
            let rhs = boundary_difference(alpha, beta, (p.a, p.x_a), (p.b, p.x_b));
            measures.iter().fold(
                LinearFunctionalRow::new(liouville_label(alpha, beta), Relation::Eq, rhs),
                |row, &i| row.with_term(i, coeff.clone()),
            )
        })
        .collect()
}

fn check_structure(p: &OcpProblem) -> Result<(), HomogenizeError> {
    let blocking: Vec<Violation> = p
        .validate()
        .into_iter()
        .filter(|v| !matches!(v.kind, ViolationKind::OddRFreeControl | ViolationKind::OddSFreeControl))
        .collect();
    if blocking.is_empty() {
        Ok(())
    } else {
        Err(HomogenizeError::InvalidProblem(blocking))
    }
}

/// Single-measure polynomial LP: minimize `⟨l̃, ν⟩` subject to the Liouville
/// rows for every test monomial of degree `1..=test_degree` and the mass row
/// `⟨(σz)^r, ν⟩ <= C`, where `σ = -1` for nonpositive controls.
pub fn build_polynomial_lp(p: &OcpProblem, test_degree: u32) -> Result<MeasureLp, HomogenizeError> {
    check_structure(p)?;
    let orientation = p.control_sign.orientation();
    if orientation.is_none() && (p.r % 2 == 1 || p.s % 2 == 1) {
        return Err(HomogenizeError::OddFreeControl { r: p.r, s: p.s });
    }
    let ltilde = homogenize_lagrangian(&p.lagrangian, p.r)?.ltilde;
    let sigma = orientation.unwrap_or(1.0);
    let mut rows = liouville_rows(p, test_degree, &[0]);
    rows.push(
        LinearFunctionalRow::new(MASS_ROW, Relation::Le, p.moment_bound)
            .with_term(0, Polynomial::var(Var::Z).scale(sigma).pow(p.r)),
    );
    Ok(MeasureLp { measures: vec![piece_support(p, orientation)], objective: vec![(0, ltilde)], rows })
}

/// Two-measure LP for a free control: `ν⁺` carries `z >= 0`, `ν⁻` carries
/// `z <= 0`. Rows and objective add the contributions of both pieces and
/// the mass row reads `⟨z^r, ν⁺⟩ + ⟨(-z)^r, ν⁻⟩ <= C`.
pub fn build_polynomial_lp_split(p: &OcpProblem, test_degree: u32) -> Result<MeasureLp, HomogenizeError> {
    check_structure(p)?;
    if p.control_sign != ControlSign::Free {
        return Err(HomogenizeError::SplitNeedsFreeControl);
    }
    let ltilde = homogenize_lagrangian(&p.lagrangian, p.r)?.ltilde;
    let rows = liouville_rows(p, test_degree, &[0, 1]);
    let mass = LinearFunctionalRow::new(MASS_ROW, Relation::Le, p.moment_bound)
        .with_term(0, Polynomial::var(Var::Z).pow(p.r))
        .with_term(1, Polynomial::var(Var::Z).scale(-1.0).pow(p.r));
    Ok(MeasureLp {
        measures: vec![piece_support(p, Some(1.0)), piece_support(p, Some(-1.0))],
        objective: vec![(0, ltilde.clone()), (1, ltilde)],
        rows: rows.into_iter().chain(std::iter::once(mass)).collect(),
    })
}

/// Picks the single-measure builder when it applies and the split otherwise.
pub fn build_lp_auto(p: &OcpProblem, test_degree: u32) -> Result<MeasureLp, HomogenizeError> {
    match build_polynomial_lp(p, test_degree) {
        Err(HomogenizeError::OddFreeControl { .. }) => build_polynomial_lp_split(p, test_degree),
        other => other,
    }
}
