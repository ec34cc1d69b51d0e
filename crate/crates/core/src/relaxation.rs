//! Order-`d` moment relaxation of a [`MeasureLp`].
//!
//! Every measure gets a pseudo-moment vector indexed by the monomials of its
//! active variables up to degree `2d`. Positivity of the measure becomes a
//! PSD moment matrix, each support inequality `g >= 0` a PSD localizing
//! matrix, each support equality `h = 0` a family of affine rows
//! `L(h m) = 0`, and every LP row a single affine row.
//!
//! Box-constrained variables are mapped affinely onto `[-1, 1]` before
//! assembly. Solutions are reported in the original coordinates.

use std::collections::HashMap;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measure_lp::{LpViolation, MeasureLp, Relation};
use crate::poly::{Monomial, Polynomial, Var};
use crate::sdp::{to_standard_form, SdpBackend, SdpError, SolveStatus, SolverSettings};

/// Relative singular-value cutoff used for the flatness test.
pub const FLATNESS_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum RelaxationError {
    #[error("relaxation order {order} is below the minimum order {min_order}")]
    OrderTooSmall { order: u32, min_order: u32 },
    #[error("invalid measure LP: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", "))]
    InvalidLp(Vec<LpViolation>),
    #[error("monomial {monomial} of measure {measure} exceeds the moment truncation")]
    OutsideTruncation { measure: usize, monomial: Monomial },
    #[error(transparent)]
    Sdp(#[from] SdpError),
}

/// Graded-lex positions of the monomials in `variables` up to `max_degree`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentIndex {
    pub variables: Vec<Var>,
    pub max_degree: u32,
    monomials: Vec<Monomial>,
    position: HashMap<Monomial, usize>,
}

impl MomentIndex {
    pub fn new(variables: &[Var], max_degree: u32) -> Self {
        let monomials = Monomial::enumerate(variables, max_degree);
        let position = monomials.iter().enumerate().map(|(k, m)| (*m, k)).collect();
        MomentIndex { variables: variables.to_vec(), max_degree, monomials, position }
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    pub fn position(&self, m: &Monomial) -> Option<usize> {
        self.position.get(m).copied()
    }

    /// Monomials of degree `<= degree`; a prefix of [`Self::monomials`].
    pub fn basis(&self, degree: u32) -> &[Monomial] {
        let end = self.monomials.partition_point(|m| m.degree() <= degree);
        &self.monomials[..end]
    }
}

/// Sparse linear form over the global pseudo-moment vector.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearForm {
    pub terms: Vec<(usize, f64)>,
}

impl LinearForm {
    pub fn eval(&self, y: &[f64]) -> f64 {
        self.terms.iter().map(|&(k, c)| c * y[k]).sum()
    }

    fn add_scaled(&mut self, other: &LinearForm, k: f64) {
        self.terms.extend(other.terms.iter().map(|&(v, c)| (v, c * k)));
        self.normalize();
    }

    fn normalize(&mut self) {
        self.terms.sort_by_key(|&(v, _)| v);
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(self.terms.len());
        for &(v, c) in &self.terms {
            match out.last_mut() {
                Some((last, acc)) if *last == v => *acc += c,
                _ => out.push((v, c)),
            }
        }
        out.retain(|&(_, c)| c != 0.0);
        self.terms = out;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsdBlock {
    pub measure: usize,
    pub label: String,
    pub basis: Vec<Monomial>,
    /// Upper triangle, row-major: `(0,0), (0,1), …, (0,n-1), (1,1), …`.
    entries: Vec<LinearForm>,
}

impl PsdBlock {
    pub fn side(&self) -> usize {
        self.basis.len()
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        let (i, j) = (i.min(j), i.max(j));
        let n = self.side();
        i * n - i * (i + 1) / 2 + j
    }

    pub fn entry(&self, i: usize, j: usize) -> &LinearForm {
        &self.entries[self.slot(i, j)]
    }

    pub fn evaluate(&self, y: &[f64]) -> DMatrix<f64> {
        let n = self.side();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = self.entry(i, j).eval(y);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AffineRow {
    pub label: String,
    pub form: LinearForm,
    pub relation: Relation,
    pub rhs: f64,
}

impl AffineRow {
    /// Violation of the row at `y`: `|a·y − b|` for equalities,
    /// `max(0, a·y − b)` for inequalities.
    pub fn residual(&self, y: &[f64]) -> f64 {
        let gap = self.form.eval(y) - self.rhs;
        match self.relation {
            Relation::Eq => gap.abs(),
            Relation::Le => gap.max(0.0),
        }
    }
}

/// `v = center + half_width * v'` applied before assembly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineScaling {
    pub var: Var,
    pub center: f64,
    pub half_width: f64,
}

#[derive(Debug, Clone)]
pub struct MomentRelaxation {
    pub order: u32,
    pub indices: Vec<MomentIndex>,
    pub offsets: Vec<usize>,
    pub psd_blocks: Vec<PsdBlock>,
    pub affine_rows: Vec<AffineRow>,
    pub objective: LinearForm,
    /// Per measure, the changes of variables applied to the LP.
    pub scalings: Vec<Vec<AffineScaling>>,
    /// Per measure, the variables of the LP before any elimination.
    pub original_variables: Vec<Vec<Var>>,
    /// Per measure, eliminated variables (in order) and their replacements.
    pub eliminations: Vec<Vec<(Var, Polynomial)>>,
    /// The LP in the coordinates the relaxation was assembled in.
    pub scaled_lp: MeasureLp,
}

/// `ceil(max_constraint_degree / 2)`, and at least 1.
pub fn min_order(lp: &MeasureLp) -> u32 {
    lp.max_constraint_degree().div_ceil(2).max(1)
}

/// Optional reformulations applied before assembly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AssemblyOptions {
    /// Substitute away one variable per affine support equality (e.g.
    /// `w = 1 - z` on the slice `z + w = 1`). The relaxation is equivalent,
    /// with fewer moments and smaller PSD blocks.
    pub eliminate_affine_equalities: bool,
}

/// Assembles the order-`d` relaxation of `lp`.
pub fn assemble_sdp(lp: &MeasureLp, d: u32) -> Result<MomentRelaxation, RelaxationError> {
    assemble_sdp_with(lp, d, AssemblyOptions::default())
}

/// Picks the last variable of an affine equality and solves for it.
fn affine_elimination(h: &Polynomial, vars: &[Var]) -> Option<(Var, Polynomial)> {
    if h.total_degree() != 1 {
        return None;
    }
    let v = *vars.iter().rev().find(|v| h.coefficient(&Monomial::var(**v)) != 0.0)?;
    let c = h.coefficient(&Monomial::var(v));
    let rest = &h.clone() - &Polynomial::term(Monomial::var(v), c);
    Some((v, rest.scale(-1.0 / c)))
}

/// A nonnegative constant constraint `c >= 0`.
fn is_trivial(g: &Polynomial) -> bool {
    g.total_degree() == 0 && g.coefficient(&Monomial::ONE) >= 0.0
}

fn eliminate(lp: &mut MeasureLp, measure: usize, v: Var, repl: &Polynomial) {
    let sub = |q: &Polynomial| q.substitute(v, repl);
    let support = &mut lp.measures[measure];
    support.variables.retain(|u| *u != v);
    support.inequalities = support.inequalities.iter().map(sub).filter(|g| !is_trivial(g)).collect();
    support.equalities = support.equalities.iter().map(sub).filter(|h| !h.is_zero()).collect();
    for row in &mut lp.rows {
        for (i, q) in &mut row.terms {
            if *i == measure {
                *q = sub(q);
            }
        }
    }
    for (i, q) in &mut lp.objective {
        if *i == measure {
            *q = sub(q);
        }
    }
}

pub fn assemble_sdp_with(lp: &MeasureLp, d: u32, options: AssemblyOptions) -> Result<MomentRelaxation, RelaxationError> {
    let violations = lp.validate();
    if !violations.is_empty() {
        return Err(RelaxationError::InvalidLp(violations));
    }
    let min = min_order(lp);
    if d < min {
        return Err(RelaxationError::OrderTooSmall { order: d, min_order: min });
    }

    let mut scaled = lp.clone();
    let mut scalings = Vec::with_capacity(lp.measures.len());
    for (i, support) in lp.measures.iter().enumerate() {
        let mut list = Vec::new();
        for &v in &support.variables {
            if let Some((lo, hi)) = support.box_of(v) {
                let (center, half_width) = (0.5 * (lo + hi), 0.5 * (hi - lo));
                if center != 0.0 || half_width != 1.0 {
                    scaled.rescale_variable(i, v, center, half_width);
                    list.push(AffineScaling { var: v, center, half_width });
                }
            }
        }
        scalings.push(list);
    }

    let original_variables: Vec<Vec<Var>> = scaled.measures.iter().map(|s| s.variables.clone()).collect();
    let mut eliminations = vec![Vec::new(); scaled.measures.len()];
    if options.eliminate_affine_equalities {
        for (i, elim) in eliminations.iter_mut().enumerate() {
            while let Some((v, repl)) = scaled.measures[i]
                .equalities
                .iter()
                .find_map(|h| affine_elimination(h, &scaled.measures[i].variables))
            {
                eliminate(&mut scaled, i, v, &repl);
                elim.push((v, repl));
            }
        }
    }

    let indices: Vec<MomentIndex> = scaled.measures.iter().map(|s| MomentIndex::new(&s.variables, 2 * d)).collect();
    let mut offsets = Vec::with_capacity(indices.len());
    let mut total = 0;
    for idx in &indices {
        offsets.push(total);
        total += idx.len();
    }

    let functional = |measure: usize, q: &Polynomial| -> Result<LinearForm, RelaxationError> {
        let idx = &indices[measure];
        let mut form = LinearForm::default();
        for (m, &c) in q.terms() {
            let k = idx
                .position(m)
                .ok_or(RelaxationError::OutsideTruncation { measure, monomial: *m })?;
            form.terms.push((offsets[measure] + k, c));
        }
        form.normalize();
        Ok(form)
    };

    let mut psd_blocks = Vec::new();
    let mut affine_rows = Vec::new();
    for (i, support) in scaled.measures.iter().enumerate() {
        psd_blocks.push(localizing_block(i, "moment".into(), &indices[i], d, &Polynomial::one(), &functional)?);
        for (k, g) in support.inequalities.iter().enumerate() {
            if is_trivial(g) {
                continue;
            }
            let k_deg = d - g.total_degree().div_ceil(2);
            psd_blocks.push(localizing_block(i, format!("localizing[{k}] {g}"), &indices[i], k_deg, g, &functional)?);
        }
        for (k, h) in support.equalities.iter().enumerate() {
            let k_deg = d - h.total_degree().div_ceil(2);
            for m in indices[i].basis(2 * k_deg) {
                affine_rows.push(AffineRow {
                    label: format!("equality[{k}] ν_{i} {m}"),
                    form: functional(i, &h.mul_monomial(m))?,
                    relation: Relation::Eq,
                    rhs: 0.0,
                });
            }
        }
    }
    for row in &scaled.rows {
        let mut form = LinearForm::default();
        for (i, q) in &row.terms {
            form.add_scaled(&functional(*i, q)?, 1.0);
        }
        affine_rows.push(AffineRow { label: row.label.clone(), form, relation: row.relation, rhs: row.rhs });
    }
    let mut objective = LinearForm::default();
    for (i, q) in &scaled.objective {
        objective.add_scaled(&functional(*i, q)?, 1.0);
    }

    Ok(MomentRelaxation {
        order: d,
        indices,
        offsets,
        psd_blocks,
        affine_rows,
        objective,
        scalings,
        original_variables,
        eliminations,
        scaled_lp: scaled,
    })
}

fn localizing_block<F>(
    measure: usize,
    label: String,
    index: &MomentIndex,
    degree: u32,
    g: &Polynomial,
    functional: &F,
) -> Result<PsdBlock, RelaxationError>
where
    F: Fn(usize, &Polynomial) -> Result<LinearForm, RelaxationError>,
{
    let basis = index.basis(degree).to_vec();
    let n = basis.len();
    let mut entries = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            entries.push(functional(measure, &g.mul_monomial(&basis[i].mul(&basis[j])))?);
        }
    }
    Ok(PsdBlock { measure, label, basis, entries })
}

/// Pseudo-moments of one measure, keyed by monomial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureMoments {
    pub variables: Vec<Var>,
    pub monomials: Vec<Monomial>,
    pub values: Vec<f64>,
}

impl MeasureMoments {
    pub fn get(&self, m: &Monomial) -> Option<f64> {
        self.monomials.iter().position(|k| k == m).map(|k| self.values[k])
    }

    /// Mass `y_0`.
    pub fn mass(&self) -> f64 {
        self.get(&Monomial::ONE).unwrap_or(0.0)
    }

    /// `L(q)`; `None` if `q` has a monomial outside the truncation.
    pub fn integrate(&self, q: &Polynomial) -> Option<f64> {
        let lookup: HashMap<&Monomial, f64> = self.monomials.iter().zip(self.values.iter().copied()).collect();
        q.terms().map(|(m, c)| lookup.get(m).map(|v| c * v)).sum()
    }
}

impl MomentRelaxation {
    pub fn num_moment_vars(&self) -> usize {
        self.indices.iter().map(MomentIndex::len).sum()
    }

    pub fn measure_slice<'a>(&self, measure: usize, y: &'a [f64]) -> &'a [f64] {
        let start = self.offsets[measure];
        &y[start..start + self.indices[measure].len()]
    }

    /// Converts solver pseudo-moments back to the LP's original coordinates.
    pub fn original_moments(&self, y: &[f64]) -> Vec<MeasureMoments> {
        self.indices
            .iter()
            .enumerate()
            .map(|(i, idx)| {
                let local = self.measure_slice(i, y);
                let monomials = Monomial::enumerate(&self.original_variables[i], 2 * self.order);
                let values = monomials
                    .iter()
                    .map(|m| {
                        let mut q = Polynomial::term(*m, 1.0);
                        for s in &self.scalings[i] {
                            // v = c + h v'  <=>  v' = (v - c) / h, so the original
                            // monomial in v becomes a polynomial in v'.
                            let repl = &Polynomial::constant(s.center) + &Polynomial::var(s.var).scale(s.half_width);
                            q = q.substitute(s.var, &repl);
                        }
                        for (v, repl) in &self.eliminations[i] {
                            q = q.substitute(*v, repl);
                        }
                        q.terms()
                            .map(|(mm, c)| c * idx.position(mm).map_or(0.0, |k| local[k]))
                            .sum()
                    })
                    .collect();
                MeasureMoments { variables: self.original_variables[i].clone(), monomials, values }
            })
            .collect()
    }

    pub fn row_residual_inf(&self, y: &[f64]) -> f64 {
        self.affine_rows.iter().map(|r| r.residual(y)).fold(0.0, f64::max)
    }

    pub fn psd_min_eig(&self, y: &[f64]) -> f64 {
        self.psd_blocks
            .iter()
            .map(|b| min_eigenvalue(b.evaluate(y)))
            .fold(f64::INFINITY, f64::min)
    }

    /// Standard form, backend call and post-processing.
    pub fn solve(&self, backend: &dyn SdpBackend, settings: &SolverSettings) -> Result<SolveReport, RelaxationError> {
        let form = to_standard_form(self);
        let sol = backend.solve(&form, settings)?;
        let y = &sol.x[..self.num_moment_vars()];
        let flat = self.indices.iter().enumerate().all(|(i, idx)| {
            flatness_check(idx, self.measure_slice(i, y), self.order, FLATNESS_TOL)
        });
        Ok(SolveReport {
            order: self.order,
            lower_bound: self.objective.eval(y),
            status: sol.status,
            row_residual_inf: self.row_residual_inf(y),
            psd_min_eig: self.psd_min_eig(y),
            flat,
            iterations: sol.iterations,
            moments: self.original_moments(y),
        })
    }
}

pub fn min_eigenvalue(m: DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    SymmetricEigen::new(m).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

fn moment_matrix(index: &MomentIndex, moments: &[f64], degree: u32) -> DMatrix<f64> {
    let basis = index.basis(degree);
    let n = basis.len();
    DMatrix::from_fn(n, n, |i, j| {
        index.position(&basis[i].mul(&basis[j])).map_or(0.0, |k| moments[k])
    })
}

fn numerical_rank(m: DMatrix<f64>, cutoff: f64) -> usize {
    m.singular_values().iter().filter(|&&s| s > cutoff).count()
}

/// Rank of `M_d` equals rank of `M_(d-1)`, counting singular values above
/// `tol * σ_max(M_d)`.
pub fn flatness_check(index: &MomentIndex, moments: &[f64], d: u32, tol: f64) -> bool {
    if d == 0 || 2 * d > index.max_degree {
        return false;
    }
    let full = moment_matrix(index, moments, d);
    let sigma_max = full.singular_values().iter().copied().fold(0.0, f64::max);
    if sigma_max == 0.0 {
        return true;
    }
    let cutoff = tol * sigma_max;
    numerical_rank(full, cutoff) == numerical_rank(moment_matrix(index, moments, d - 1), cutoff)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub order: u32,
    /// Relaxation value; a lower bound on the LP value when `status` succeeded.
    pub lower_bound: f64,
    pub status: SolveStatus,
    pub row_residual_inf: f64,
    pub psd_min_eig: f64,
    pub flat: bool,
    pub iterations: u32,
    pub moments: Vec<MeasureMoments>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homogenize::build_polynomial_lp;
    use crate::measure_lp::{LinearFunctionalRow, SupportSet};
    use crate::poly::p;
    use crate::problem::{brachistochrone_measure_lp, lavrentiev_modified};

    fn toy_lp() -> MeasureLp {
        MeasureLp {
            measures: vec![SupportSet::new(vec![Var::T]).with_inequality(p("t*(1 - t)"))],
            objective: vec![(0, p("-t"))],
            rows: vec![LinearFunctionalRow::new("mass", Relation::Eq, 1.0).with_term(0, p("1"))],
        }
    }

    #[test]
    fn univariate_structure() {
        // Keep the original coordinates by using the box [-1, 1].
        let lp = MeasureLp {
            measures: vec![SupportSet::new(vec![Var::T]).with_inequality(p("1 - t^2"))],
            ..toy_lp()
        };
        let rel = assemble_sdp(&lp, 1).unwrap();
        let m = &rel.psd_blocks[0];
        assert_eq!(m.side(), 2);
        assert_eq!(m.entry(0, 0).terms, vec![(0, 1.0)]);
        assert_eq!(m.entry(0, 1).terms, vec![(1, 1.0)]);
        assert_eq!(m.entry(1, 1).terms, vec![(2, 1.0)]);
        let loc = &rel.psd_blocks[1];
        assert_eq!(loc.side(), 1);
        assert_eq!(loc.entry(0, 0).terms, vec![(0, 1.0), (2, -1.0)]);
    }

    #[test]
    fn unit_interval_is_rescaled() {
        let rel = assemble_sdp(&toy_lp(), 1).unwrap();
        assert_eq!(rel.scalings[0], vec![AffineScaling { var: Var::T, center: 0.5, half_width: 0.5 }]);
        // t(1 - t) becomes (1 - t'^2)/4, normalized to 1 - t'^2.
        assert_eq!(rel.psd_blocks[1].entry(0, 0).terms, vec![(0, 1.0), (2, -1.0)]);
    }

    #[test]
    fn sphere_equality_rows() {
        let lp = MeasureLp {
            measures: vec![SupportSet::new(vec![Var::Z, Var::W])
                .with_inequality(p("w"))
                .with_equality(p("z^2 + w^2 - 1"))],
            objective: vec![(0, p("z"))],
            rows: vec![LinearFunctionalRow::new("mass", Relation::Eq, 1.0).with_term(0, p("1"))],
        };
        let rel = assemble_sdp(&lp, 1).unwrap();
        let eq: Vec<&AffineRow> = rel.affine_rows.iter().filter(|r| r.label.starts_with("equality")).collect();
        assert_eq!(eq.len(), 1);
        let idx = &rel.indices[0];
        let pos = |s: &str| idx.position(p(s).terms().next().unwrap().0).unwrap();
        let mut expected = vec![(pos("z^2"), 1.0), (pos("w^2"), 1.0), (pos("1"), -1.0)];
        expected.sort_by_key(|e| e.0);
        assert_eq!(eq[0].form.terms, expected);
    }

    #[test]
    fn order_checks() {
        let lav = build_polynomial_lp(&lavrentiev_modified(), 7).unwrap();
        assert_eq!(min_order(&lav), 4);
        assert!(matches!(assemble_sdp(&lav, 3), Err(RelaxationError::OrderTooSmall { order: 3, min_order: 4 })));
        let rel = assemble_sdp(&lav, 4).unwrap();
        assert_eq!(rel.psd_blocks[0].side(), 70);
        assert_eq!(rel.num_moment_vars(), 495);
        assert_eq!(min_order(&brachistochrone_measure_lp().lp), 1);
        assert_eq!(min_order(&toy_lp()), 1);
        assert!(matches!(assemble_sdp(&toy_lp(), 0), Err(RelaxationError::OrderTooSmall { .. })));
    }

    #[test]
    fn affine_elimination_shrinks_lavrentiev() {
        let lav = build_polynomial_lp(&lavrentiev_modified(), 7).unwrap();
        let opts = AssemblyOptions { eliminate_affine_equalities: true };
        let rel = assemble_sdp_with(&lav, 4, opts).unwrap();
        assert_eq!(rel.eliminations[0].len(), 1);
        assert_eq!(rel.eliminations[0][0].0, Var::W);
        assert_eq!(rel.eliminations[0][0].1, p("1 - z"));
        assert_eq!(rel.indices[0].variables, vec![Var::T, Var::X, Var::Z]);
        assert_eq!(rel.psd_blocks[0].side(), 35);
        assert!(rel.affine_rows.iter().all(|r| !r.label.starts_with("equality")));
        // Moments are still reported over (t, x, z, w).
        let y = vec![0.0; rel.num_moment_vars()];
        assert_eq!(rel.original_moments(&y)[0].monomials.len(), 495);
    }

    #[test]
    fn elimination_preserves_moments_of_a_point() {
        let lav = build_polynomial_lp(&lavrentiev_modified(), 7).unwrap();
        let rel = assemble_sdp_with(&lav, 4, AssemblyOptions { eliminate_affine_equalities: true }).unwrap();
        // A Dirac at t = 0.3, x = -0.2, z = 0.25, w = 0.75 in original coordinates.
        let point = |t: f64| [2.0 * t - 1.0, -0.2, 0.0, 0.25, 0.0];
        let y: Vec<f64> = rel.indices[0].monomials().iter().map(|m| m.eval_dense(&point(0.3))).collect();
        let orig = &rel.original_moments(&y)[0];
        for (m, v) in orig.monomials.iter().zip(&orig.values) {
            let expected = m.eval_dense(&[0.3, -0.2, 0.0, 0.25, 0.75]);
            assert!((v - expected).abs() < 1e-12, "{m}: {v} vs {expected}");
        }
    }

    #[test]
    fn localizing_sides() {
        let lav = build_polynomial_lp(&lavrentiev_modified(), 7).unwrap();
        let rel = assemble_sdp(&lav, 4).unwrap();
        // Box constraints have degree 2, sign constraints degree 1: all reduce to degree-3 bases.
        for block in &rel.psd_blocks[1..] {
            assert_eq!(block.side(), 35, "{}", block.label);
        }
    }

    fn dirac_moments(index: &MomentIndex, atoms: &[([f64; 5], f64)]) -> Vec<f64> {
        index
            .monomials()
            .iter()
            .map(|m| atoms.iter().map(|(pt, wt)| wt * m.eval_dense(pt)).sum())
            .collect()
    }

    #[test]
    fn flatness_of_atomic_measures() {
        let vars = [Var::T, Var::X, Var::Z, Var::W];
        let idx = MomentIndex::new(&vars, 6);
        let single = dirac_moments(&idx, &[([0.0, 0.0, 0.0, 0.0, 1.0], 1.0)]);
        for d in 1..=3 {
            assert!(flatness_check(&idx, &single, d, FLATNESS_TOL));
        }
        let two = dirac_moments(
            &idx,
            &[([0.2, -0.5, 0.0, 0.6, 0.8], 0.7), ([0.9, 0.3, 0.0, -0.8, 0.6], 1.3)],
        );
        assert!(flatness_check(&idx, &two, 2, FLATNESS_TOL));
        assert!(flatness_check(&idx, &two, 3, FLATNESS_TOL));
        let rank = numerical_rank(moment_matrix(&idx, &two, 2), 1e-9);
        assert_eq!(rank, 2);
    }

    #[test]
    fn perturbed_moments_are_not_flat() {
        use rand::{Rng, SeedableRng};
        let idx = MomentIndex::new(&[Var::T, Var::X], 4);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut hits = 0;
        for _ in 0..20 {
            let atom = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), 0.0, 0.0, 0.0];
            let mut y = dirac_moments(&idx, &[(atom, 1.0)]);
            for v in y.iter_mut().skip(1) {
                *v += rng.gen_range(-0.05..0.05);
            }
            if !flatness_check(&idx, &y, 2, FLATNESS_TOL) {
                hits += 1;
            }
        }
        assert!(hits >= 18, "{hits}");
    }

    #[test]
    fn original_moments_undo_scaling() {
        let rel = assemble_sdp(&toy_lp(), 2).unwrap();
        // Scaled moments of a Dirac at t' = 0.4, i.e. t = 0.7.
        let y: Vec<f64> = rel.indices[0].monomials().iter().map(|m| 0.4f64.powi(m.degree() as i32)).collect();
        let orig = rel.original_moments(&y);
        for (m, v) in orig[0].monomials.iter().zip(&orig[0].values) {
            assert!((v - 0.7f64.powi(m.degree() as i32)).abs() < 1e-14);
        }
    }
}
