//! Scalar optimal control instances with unbounded control `u = dx/dt`,
//! their validation, the built-in examples and the TOML problem file.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measure_lp::{LinearFunctionalRow, MeasureLp, Relation, SupportSet};
use crate::poly::{p, Monomial, Polynomial, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControlSign {
    Free,
    Nonnegative,
    Nonpositive,
}

impl ControlSign {
    /// `+1` for `u >= 0`, `-1` for `u <= 0`, `None` when unrestricted.
    pub fn orientation(self) -> Option<f64> {
        match self {
            ControlSign::Free => None,
            ControlSign::Nonnegative => Some(1.0),
            ControlSign::Nonpositive => Some(-1.0),
        }
    }
}

/// `inf ∫_a^b l(t, x, u) dt` subject to `x(a) = x_a`, `x(b) = x_b`,
/// `x(t) ∈ [x_lo, x_hi]`, `dx/dt = u`, with `∫ |u|^r dt <= moment_bound`
/// along some minimizing sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcpProblem {
    pub a: f64,
    pub b: f64,
    pub x_a: f64,
    pub x_b: f64,
    pub x_lo: f64,
    pub x_hi: f64,
    pub lagrangian: Polynomial,
    pub r: u32,
    pub s: u32,
    pub moment_bound: f64,
    pub control_sign: ControlSign,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    NonFinite,
    IntervalDegenerate,
    BoxDegenerate,
    BoundaryOutsideBox,
    ForeignVariable,
    ZeroExponent,
    RBelowDegree,
    OddRFreeControl,
    OddSFreeControl,
    NonPositiveMomentBound,
}

impl ViolationKind {
    pub fn code(self) -> &'static str {
        match self {
            ViolationKind::NonFinite => "non-finite",
            ViolationKind::IntervalDegenerate => "interval-degenerate",
            ViolationKind::BoxDegenerate => "box-degenerate",
            ViolationKind::BoundaryOutsideBox => "boundary-outside-box",
            ViolationKind::ForeignVariable => "foreign-variable",
            ViolationKind::ZeroExponent => "zero-exponent",
            ViolationKind::RBelowDegree => "r-below-degree",
            ViolationKind::OddRFreeControl => "odd-r-free-control",
            ViolationKind::OddSFreeControl => "odd-s-free-control",
            ViolationKind::NonPositiveMomentBound => "nonpositive-moment-bound",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: &'static str,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.kind.code(), self.field)
    }
}

impl OcpProblem {
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut push = |field, kind| out.push(Violation { field, kind });
        let reals = [
            ("a", self.a),
            ("b", self.b),
            ("x_a", self.x_a),
            ("x_b", self.x_b),
            ("x_lo", self.x_lo),
            ("x_hi", self.x_hi),
            ("C", self.moment_bound),
        ];
        for (field, v) in reals {
            if !v.is_finite() {
                push(field, ViolationKind::NonFinite);
            }
        }
        if self.lagrangian.terms().any(|(_, c)| !c.is_finite()) {
            push("lagrangian", ViolationKind::NonFinite);
        }
        if !(self.a < self.b) {
            push("a,b", ViolationKind::IntervalDegenerate);
        }
        if !(self.x_lo < self.x_hi) {
            push("x_lo,x_hi", ViolationKind::BoxDegenerate);
        }
        let inside = |x: f64| self.x_lo <= x && x <= self.x_hi;
        if !inside(self.x_a) {
            push("x_a", ViolationKind::BoundaryOutsideBox);
        }
        if !inside(self.x_b) {
            push("x_b", ViolationKind::BoundaryOutsideBox);
        }
        if !self.lagrangian.uses_only(&[Var::T, Var::X, Var::U]) {
            push("lagrangian", ViolationKind::ForeignVariable);
        }
        if self.r == 0 {
            push("r", ViolationKind::ZeroExponent);
        }
        if self.s == 0 {
            push("s", ViolationKind::ZeroExponent);
        }
        if self.r < self.lagrangian.degree_in(Var::U).max(1) {
            push("r", ViolationKind::RBelowDegree);
        }
        if self.control_sign == ControlSign::Free {
            if self.r % 2 == 1 {
                push("r", ViolationKind::OddRFreeControl);
            }
            if self.s % 2 == 1 {
                push("s", ViolationKind::OddSFreeControl);
            }
        }
        if !(self.moment_bound > 0.0) {
            push("C", ViolationKind::NonPositiveMomentBound);
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }
}

/// `r = max(1, deg_u l)`.
pub fn natural_exponent(lagrangian: &Polynomial) -> u32 {
    lagrangian.degree_in(Var::U).max(1)
}

/// Moment bound from a coercivity certificate: if `l >= c2 |u|^r` whenever
/// `|u| >= c1`, and `k` bounds the optimal value from above, then
/// `(b - a) c1^r + k / c2` bounds `∫ |u|^r` along minimizing sequences.
pub fn moment_bound_from_coercivity(a: f64, b: f64, r: u32, c1: f64, c2: f64, k: f64) -> f64 {
    (b - a) * c1.powi(r as i32) + k / c2
}

/// `∫_0^1 (t - x^3)^2 u dt`, `x(0) = 0`, `x(1) = 1`, `u >= 0`, `x ∈ [-1, 1]`.
pub fn lavrentiev_modified() -> OcpProblem {
    OcpProblem {
        a: 0.0,
        b: 1.0,
        x_a: 0.0,
        x_b: 1.0,
        x_lo: -1.0,
        x_hi: 1.0,
        lagrangian: p("(t - x^3)^2*u"),
        r: 1,
        s: 1,
        moment_bound: 5.0,
        control_sign: ControlSign::Nonnegative,
    }
}

/// A measure LP that does not come out of the generic homogenization
/// template.
#[derive(Debug, Clone, PartialEq)]
pub struct RawMeasureLpProblem {
    pub label: String,
    pub lp: MeasureLp,
    pub test_degree: u32,
}

/// Mass bound of the brachistochrone LP: cost of the straight line `x = t`.
pub const BRACHISTOCHRONE_MASS_BOUND: f64 = 2.0 * std::f64::consts::SQRT_2;

/// Brachistochrone LP with only the degree-one test functions.
pub fn brachistochrone_measure_lp() -> RawMeasureLpProblem {
    brachistochrone_measure_lp_with(1)
}

/// Brachistochrone `∫_0^1 sqrt((1 + u^2) / x) dt` after `y = sqrt(x)`,
/// homogenization onto the circle `z^2 + w^2 = 1, w >= 0` and the change
/// of measure `dν = dμ / (w y)`.
///
/// The `y` coordinate lives in the `x` slot of the variable universe. The
/// Liouville row for `v = t^α y^β` integrates `v_t w y + v_y z / 2`.
///
/// The boxes on `t` and `y` are written as four affine inequalities rather
/// than two quadratics; at low orders the affine form gives weaker
/// localizing constraints and reproduces the published bounds
/// 2.0000 / 2.5578 / 2.5819 at orders 1 / 2 / 3.
pub fn brachistochrone_measure_lp_with(test_degree: u32) -> RawMeasureLpProblem {
    let support = SupportSet::new(vec![Var::T, Var::X, Var::Z, Var::W])
        .with_inequality(p("t"))
        .with_inequality(p("1 - t"))
        .with_inequality(p("x"))
        .with_inequality(p("1 - x"))
        .with_inequality(p("w"))
        .with_equality(p("z^2 + w^2 - 1"));
    let flux_t = p("w*x");
    let flux_x = p("0.5*z");
    let mut rows = Vec::new();
    for (alpha, beta) in test_exponents(test_degree) {
        let v = Polynomial::term(Monomial::from_pairs(&[(Var::T, alpha), (Var::X, beta)]), 1.0);
        let coeff = &(&v.differentiate(Var::T) * &flux_t) + &(&v.differentiate(Var::X) * &flux_x);
        let rhs = boundary_difference(alpha, beta, (0.0, 0.0), (1.0, 1.0));
        rows.push(LinearFunctionalRow::new(liouville_label(alpha, beta), Relation::Eq, rhs).with_term(0, coeff));
    }
    rows.push(
        LinearFunctionalRow::new(MASS_ROW, Relation::Le, BRACHISTOCHRONE_MASS_BOUND).with_term(0, Polynomial::one()),
    );
    RawMeasureLpProblem {
        label: "brachistochrone".into(),
        lp: MeasureLp { measures: vec![support], objective: vec![(0, Polynomial::one())], rows },
        test_degree,
    }
}

pub const MASS_ROW: &str = "mass";

pub fn liouville_label(alpha: u32, beta: u32) -> String {
    format!("liouville t^{alpha} x^{beta}")
}

/// Exponents `(α, β)` with `1 <= α + β <= degree`, graded with `t` first.
pub fn test_exponents(degree: u32) -> Vec<(u32, u32)> {
    (1..=degree)
        .flat_map(|k| (0..=k).rev().map(move |alpha| (alpha, k - alpha)))
        .collect()
}

/// `v(end) - v(start)` for `v = t^α x^β`.
pub fn boundary_difference(alpha: u32, beta: u32, start: (f64, f64), end: (f64, f64)) -> f64 {
    let v = |(t, x): (f64, f64)| t.powi(alpha as i32) * x.powi(beta as i32);
    v(end) - v(start)
}

#[derive(Debug, Error, PartialEq)]
#[error("unknown problem label '{0}'")]
pub struct UnknownLabel(pub String);

/// Reference optimal values of the built-in problems.
pub fn known_optimal_value(label: &str) -> Result<f64, UnknownLabel> {
    match label {
        "lavrentiev" => Ok(0.0),
        "brachistochrone" => Ok(2.5819),
        other => Err(UnknownLabel(other.to_string())),
    }
}

/// A problem file describes either a built-in or a full [`OcpProblem`].
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    Ocp(OcpProblem),
    Brachistochrone,
}

impl ProblemSpec {
    pub fn builtin(name: &str) -> Result<ProblemSpec, UnknownLabel> {
        match name {
            "lavrentiev" => Ok(ProblemSpec::Ocp(lavrentiev_modified())),
            "brachistochrone" => Ok(ProblemSpec::Brachistochrone),
            other => Err(UnknownLabel(other.to_string())),
        }
    }

    pub fn label(&self) -> String {
        match self {
            ProblemSpec::Ocp(ocp) if *ocp == lavrentiev_modified() => "lavrentiev".into(),
            ProblemSpec::Ocp(_) => "custom".into(),
            ProblemSpec::Brachistochrone => "brachistochrone".into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed problem file: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("missing key '{0}'")]
    MissingKey(&'static str),
    #[error("invalid lagrangian: {0}")]
    Lagrangian(#[from] crate::poly::PolyError),
    #[error(transparent)]
    UnknownBuiltin(#[from] UnknownLabel),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemFile {
    builtin: Option<String>,
    a: Option<f64>,
    b: Option<f64>,
    x_a: Option<f64>,
    x_b: Option<f64>,
    x_lo: Option<f64>,
    x_hi: Option<f64>,
    lagrangian: Option<String>,
    r: Option<u32>,
    s: Option<u32>,
    #[serde(rename = "C")]
    moment_bound: Option<f64>,
    control_sign: Option<ControlSign>,
}

/// Parses a problem document such as
///
/// ```toml
/// a = 0.0
/// b = 1.0
/// x_a = 0.0
/// x_b = 1.0
/// x_lo = -1.0
/// x_hi = 1.0
/// lagrangian = "(t - x^3)^2 * u"
/// r = 1
/// s = 1
/// C = 5.0
/// control_sign = "nonnegative"
/// ```
///
/// or `builtin = "lavrentiev"`. `r` defaults to `max(1, deg_u l)`, `s` to `r`
/// and `control_sign` to `free`.
pub fn parse_problem(text: &str) -> Result<ProblemSpec, ConfigError> {
    let file: ProblemFile = toml::from_str(text)?;
    if let Some(name) = file.builtin {
        return Ok(ProblemSpec::builtin(&name)?);
    }
    let lagrangian: Polynomial = file.lagrangian.ok_or(ConfigError::MissingKey("lagrangian"))?.parse()?;
    let r = file.r.unwrap_or_else(|| natural_exponent(&lagrangian));
    Ok(ProblemSpec::Ocp(OcpProblem {
        a: file.a.ok_or(ConfigError::MissingKey("a"))?,
        b: file.b.ok_or(ConfigError::MissingKey("b"))?,
        x_a: file.x_a.ok_or(ConfigError::MissingKey("x_a"))?,
        x_b: file.x_b.ok_or(ConfigError::MissingKey("x_b"))?,
        x_lo: file.x_lo.ok_or(ConfigError::MissingKey("x_lo"))?,
        x_hi: file.x_hi.ok_or(ConfigError::MissingKey("x_hi"))?,
        lagrangian,
        r,
        s: file.s.unwrap_or(r),
        moment_bound: file.moment_bound.ok_or(ConfigError::MissingKey("C"))?,
        control_sign: file.control_sign.unwrap_or(ControlSign::Free),
    }))
}

pub fn load_problem(path: &Path) -> Result<ProblemSpec, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
    parse_problem(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(p: &OcpProblem) -> Vec<&'static str> {
        p.validate().iter().map(|v| v.kind.code()).collect()
    }

    #[test]
    fn lavrentiev_is_valid() {
        let l = lavrentiev_modified();
        assert_eq!(l.moment_bound, 5.0);
        assert_eq!(l.r, 1);
        assert!(l.validate().is_empty());
        assert_eq!(l.validate(), l.validate());
    }

    #[test]
    fn degenerate_interval() {
        let mut l = lavrentiev_modified();
        l.b = l.a;
        assert_eq!(kinds(&l), ["interval-degenerate"]);
    }

    #[test]
    fn odd_r_with_free_control() {
        let mut l = lavrentiev_modified();
        l.control_sign = ControlSign::Free;
        l.s = 2;
        assert_eq!(kinds(&l), ["odd-r-free-control"]);
        l.s = 1;
        assert_eq!(kinds(&l), ["odd-r-free-control", "odd-s-free-control"]);
    }

    #[test]
    fn r_below_degree_and_bound() {
        let mut l = lavrentiev_modified();
        l.lagrangian = p("u^4 + x");
        l.r = 2;
        l.moment_bound = 0.0;
        assert_eq!(kinds(&l), ["r-below-degree", "nonpositive-moment-bound"]);
        l.lagrangian = p("z*u");
        l.r = 1;
        l.moment_bound = 1.0;
        assert_eq!(kinds(&l), ["foreign-variable"]);
    }

    #[test]
    fn known_values() {
        assert_eq!(known_optimal_value("lavrentiev"), Ok(0.0));
        assert_eq!(known_optimal_value("brachistochrone"), Ok(2.5819));
        assert!(known_optimal_value("catenary").is_err());
    }

    #[test]
    fn coercivity_bound() {
        assert_eq!(moment_bound_from_coercivity(0.0, 2.0, 2, 3.0, 0.5, 1.0), 20.0);
    }

    #[test]
    fn brachistochrone_lp_shape() {
        let raw = brachistochrone_measure_lp();
        assert!((BRACHISTOCHRONE_MASS_BOUND - 2.828427).abs() < 1e-6);
        assert!(raw.lp.measures[0].equalities.contains(&p("z^2 + w^2 - 1")));
        let row_t = raw.lp.row(&liouville_label(1, 0)).unwrap();
        assert_eq!(row_t.terms, vec![(0, p("w*x"))]);
        assert_eq!(row_t.rhs, 1.0);
        assert_eq!(raw.lp.row(&liouville_label(0, 1)).unwrap().terms, vec![(0, p("0.5*z"))]);
        assert!(raw.lp.row(&liouville_label(0, 0)).is_none());
        assert_eq!(raw.lp.rows.len(), 3);
        assert!(raw.lp.validate().is_empty());
        assert_eq!(raw.lp.max_constraint_degree(), 2);
    }

    #[test]
    fn test_exponent_order() {
        assert_eq!(test_exponents(2), vec![(1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]);
        assert_eq!(test_exponents(7).len(), 35);
    }

    #[test]
    fn parse_problem_file() {
        let text = r#"
            a = 0.0
            b = 1.0
            x_a = 0.0
            x_b = 1.0
            x_lo = -1.0
            x_hi = 1.0
            lagrangian = "(t - x^3)^2 * u"
            r = 1
            s = 1
            C = 5.0
            control_sign = "nonnegative"
        "#;
        assert_eq!(parse_problem(text).unwrap(), ProblemSpec::Ocp(lavrentiev_modified()));
        assert_eq!(parse_problem("builtin = \"brachistochrone\"").unwrap(), ProblemSpec::Brachistochrone);
        assert!(matches!(parse_problem("builtin = \"x\""), Err(ConfigError::UnknownBuiltin(_))));
        assert!(matches!(parse_problem("a = 1.0"), Err(ConfigError::MissingKey("lagrangian"))));
        let defaults = parse_problem(
            "a=0.0\nb=1.0\nx_a=0.0\nx_b=0.0\nx_lo=-1.0\nx_hi=1.0\nlagrangian=\"u^2 + x\"\nC=2.0",
        )
        .unwrap();
        let ProblemSpec::Ocp(ocp) = defaults else { panic!() };
        assert_eq!((ocp.r, ocp.s, ocp.control_sign), (2, 2, ControlSign::Free));
    }
}
