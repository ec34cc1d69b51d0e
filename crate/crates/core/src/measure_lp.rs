//! Linear programs over positive measures with semialgebraic supports.
//!
//! A [`MeasureLp`] lists the measures (each with its own [`SupportSet`]),
//! a linear objective and linear rows, every one of them expressed as
//! integrals of polynomials against the measures.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::poly::{Monomial, Polynomial, Var};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportSet {
    /// Active variables of the measure, in universe order.
    pub variables: Vec<Var>,
    /// Each `g` means `g >= 0` on the support.
    pub inequalities: Vec<Polynomial>,
    /// Each `h` means `h == 0` on the support.
    pub equalities: Vec<Polynomial>,
}

impl SupportSet {
    pub fn new(mut variables: Vec<Var>) -> Self {
        variables.sort();
        variables.dedup();
        SupportSet { variables, inequalities: Vec::new(), equalities: Vec::new() }
    }

    pub fn with_inequality(mut self, g: Polynomial) -> Self {
        self.inequalities.push(g);
        self
    }

    pub fn with_equality(mut self, h: Polynomial) -> Self {
        self.equalities.push(h);
        self
    }

    /// Interval `[lo, hi]` encoded by a univariate quadratic inequality
    /// `-k (v - lo)(v - hi) >= 0` with `k > 0`, if present.
    pub fn box_of(&self, v: Var) -> Option<(f64, f64)> {
        self.inequalities
            .iter()
            .find_map(|g| quadratic_box(g, v))
            .or_else(|| self.linear_box(v))
    }

    /// `lo <= v <= hi` from a pair of affine inequalities in `v` alone.
    fn linear_box(&self, v: Var) -> Option<(f64, f64)> {
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for g in &self.inequalities {
            if !g.uses_only(&[v]) || g.total_degree() != 1 {
                continue;
            }
            let slope = g.coefficient(&Monomial::var(v));
            let root = -g.coefficient(&Monomial::ONE) / slope;
            if slope > 0.0 {
                lo = lo.max(root);
            } else {
                hi = hi.min(root);
            }
        }
        (lo.is_finite() && hi.is_finite() && lo < hi).then_some((lo, hi))
    }

    /// Syntactic boundedness check for `v`: either a two-sided box, or a
    /// sphere-like equality in which `v` appears as a sign-definite pure power.
    pub fn is_bounded(&self, v: Var) -> bool {
        self.box_of(v).is_some()
            || self.equalities.iter().any(|h| self.sphere_sign(h, v).is_some())
            || self.inequalities.iter().any(|g| self.sphere_sign(g, v) == Some(-1.0))
    }

    /// `h = sum_i c_i v_i^{k_i} + c_0` where every `c_i v_i^{k_i}` has the same
    /// sign on the support (even power, or odd power of a sign-constrained
    /// variable) and that sign is opposite to `c_0`. Returns the common sign:
    /// `h = 0` bounds `v` for either sign, `h >= 0` only for a negative one.
    fn sphere_sign(&self, h: &Polynomial, v: Var) -> Option<f64> {
        if h.degree_in(v) == 0 {
            return None;
        }
        let mut sign = 0.0;
        let mut constant = 0.0;
        for (m, &c) in h.terms() {
            if *m == Monomial::ONE {
                constant = c;
                continue;
            }
            let vars: Vec<Var> = Var::ALL.into_iter().filter(|u| m.exp(*u) > 0).collect();
            if vars.len() != 1 {
                return None;
            }
            let var = vars[0];
            let k = m.exp(var);
            let term_sign = if k % 2 == 0 {
                c.signum()
            } else {
                {
                    let s = self.sign_of(var)?;
                    c.signum() * s
                }
            };
            if sign == 0.0 {
                sign = term_sign;
            } else if sign != term_sign {
                return None;
            }
        }
        (sign != 0.0 && constant * sign < 0.0).then_some(sign)
    }

    /// Sign forced on `v` by a single-term linear inequality `c * v >= 0`.
    fn sign_of(&self, v: Var) -> Option<f64> {
        self.inequalities.iter().find_map(|g| {
            let mut it = g.terms();
            match (it.next(), it.next()) {
                (Some((m, &c)), None) if *m == Monomial::var(v) => Some(c.signum()),
                _ => None,
            }
        })
    }
}

fn quadratic_box(g: &Polynomial, v: Var) -> Option<(f64, f64)> {
    if !g.uses_only(&[v]) || g.degree_in(v) != 2 {
        return None;
    }
    let a = g.coefficient(&Monomial::var_pow(v, 2));
    let b = g.coefficient(&Monomial::var(v));
    let c = g.coefficient(&Monomial::ONE);
    if a >= 0.0 {
        return None;
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let r1 = (-b + sq) / (2.0 * a);
    let r2 = (-b - sq) / (2.0 * a);
    Some((r1.min(r2), r1.max(r2)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    Eq,
    Le,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Eq => "=",
            Relation::Le => "≤",
        })
    }
}

/// `sum_k <poly_k, nu_{measure_k}>  (= | <=)  rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFunctionalRow {
    pub label: String,
    pub terms: Vec<(usize, Polynomial)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl LinearFunctionalRow {
    pub fn new(label: impl Into<String>, relation: Relation, rhs: f64) -> Self {
        LinearFunctionalRow { label: label.into(), terms: Vec::new(), relation, rhs }
    }

    pub fn with_term(mut self, measure: usize, poly: Polynomial) -> Self {
        self.terms.push((measure, poly));
        self
    }

    /// Left-hand side evaluated with a moment functional per measure.
    pub fn lhs_with<F: Fn(usize, &Polynomial) -> f64>(&self, functional: F) -> f64 {
        self.terms.iter().map(|(i, q)| functional(*i, q)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureLp {
    pub measures: Vec<SupportSet>,
    pub objective: Vec<(usize, Polynomial)>,
    pub rows: Vec<LinearFunctionalRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpViolation {
    NoRows,
    NoMeasures,
    BadMeasureIndex { context: String, index: usize },
    ForeignVariable { context: String, measure: usize },
    UnboundedVariable { measure: usize, var: Var },
}

impl fmt::Display for LpViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LpViolation::NoRows => f.write_str("no-rows"),
            LpViolation::NoMeasures => f.write_str("no-measures"),
            LpViolation::BadMeasureIndex { context, index } => {
                write!(f, "bad-measure-index {index} in {context}")
            }
            LpViolation::ForeignVariable { context, measure } => {
                write!(f, "foreign-variable in {context} (measure {measure})")
            }
            LpViolation::UnboundedVariable { measure, var } => {
                write!(f, "unbounded-variable {var} (measure {measure})")
            }
        }
    }
}

impl MeasureLp {
    pub fn validate(&self) -> Vec<LpViolation> {
        let mut out = Vec::new();
        if self.measures.is_empty() {
            out.push(LpViolation::NoMeasures);
        }
        if self.rows.is_empty() {
            out.push(LpViolation::NoRows);
        }
        let mut check = |context: String, index: usize, poly: &Polynomial| match self.measures.get(index) {
            None => out.push(LpViolation::BadMeasureIndex { context, index }),
            Some(s) if !poly.uses_only(&s.variables) => {
                out.push(LpViolation::ForeignVariable { context, measure: index })
            }
            Some(_) => {}
        };
        for (i, q) in &self.objective {
            check("objective".into(), *i, q);
        }
        for row in &self.rows {
            for (i, q) in &row.terms {
                check(format!("row {}", row.label), *i, q);
            }
        }
        for (i, s) in self.measures.iter().enumerate() {
            for g in s.inequalities.iter().chain(&s.equalities) {
                check(format!("support of measure {i}"), i, g);
            }
        }
        for (i, s) in self.measures.iter().enumerate() {
            for &v in &s.variables {
                if !s.is_bounded(v) {
                    out.push(LpViolation::UnboundedVariable { measure: i, var: v });
                }
            }
        }
        out
    }

    /// Maximum total degree over objective, rows and support descriptions.
    pub fn max_constraint_degree(&self) -> u32 {
        let objective = self.objective.iter().map(|(_, q)| q.total_degree());
        let rows = self.rows.iter().flat_map(|r| r.terms.iter().map(|(_, q)| q.total_degree()));
        let supports = self
            .measures
            .iter()
            .flat_map(|s| s.inequalities.iter().chain(&s.equalities).map(Polynomial::total_degree));
        objective.chain(rows).chain(supports).max().unwrap_or(0)
    }

    pub fn row(&self, label: &str) -> Option<&LinearFunctionalRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    /// Applies an affine change `v = center + half_width * v'` to every
    /// polynomial touching `v` in measure `measure`.
    pub fn rescale_variable(&mut self, measure: usize, v: Var, center: f64, half_width: f64) {
        let repl = &Polynomial::constant(center) + &Polynomial::var(v).scale(half_width);
        let apply = |q: &mut Polynomial| {
            if q.degree_in(v) > 0 {
                *q = q.substitute(v, &repl);
            }
        };
        for (i, q) in self.objective.iter_mut() {
            if *i == measure {
                apply(q);
            }
        }
        for row in self.rows.iter_mut() {
            for (i, q) in row.terms.iter_mut() {
                if *i == measure {
                    apply(q);
                }
            }
        }
        let s = &mut self.measures[measure];
        for g in s.inequalities.iter_mut().chain(s.equalities.iter_mut()) {
            apply(g);
            let scale = g.max_abs_coefficient();
            if scale > 0.0 {
                *g = g.scale(1.0 / scale);
            }
        }
    }
}

impl fmt::Display for MeasureLp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.measures.iter().enumerate() {
            let vars: Vec<&str> = s.variables.iter().map(|v| v.name()).collect();
            write!(f, "measure ν_{i} over ({})", vars.join(", "))?;
            for g in &s.inequalities {
                write!(f, "; {g} ≥ 0")?;
            }
            for h in &s.equalities {
                write!(f, "; {h} = 0")?;
            }
            writeln!(f)?;
        }
        writeln!(f, "minimize {}", format_terms(&self.objective))?;
        for row in &self.rows {
            writeln!(f, "{} {} {}    [{}]", format_terms(&row.terms), row.relation, row.rhs, row.label)?;
        }
        Ok(())
    }
}

fn format_terms(terms: &[(usize, Polynomial)]) -> String {
    if terms.is_empty() {
        return "0".into();
    }
    terms
        .iter()
        .map(|(i, q)| format!("⟨{q}, ν_{i}⟩"))
        .collect::<Vec<_>>()
        .join(" + ")
}
