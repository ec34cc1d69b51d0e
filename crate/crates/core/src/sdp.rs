//! Solver-facing standard form of a relaxation, the backend contract, an
//! in-process Clarabel backend and SDPA sparse (`.dat-s`) export/import.
//!
//! The standard form is
//!
//! ```text
//! minimize    cᵀy
//! subject to  Σ_i y_i A_i^(k) − C^(k) ⪰ 0      for every PSD block k
//!             aⱼᵀy = bⱼ                          for every equality j
//! ```
//!
//! which is exactly SDPA's `Σ F_i y_i − F_0 ⪰ 0` orientation, with the
//! pseudo-moments (followed by slacks) as the SDPA `y` vector.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measure_lp::Relation;
use crate::relaxation::MomentRelaxation;

/// Upper-triangular entry (`row <= col`, zero-based) of a symmetric matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymEntry {
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

impl SymEntry {
    pub fn new(row: usize, col: usize, value: f64) -> Self {
        SymEntry { row: row.min(col), col: row.max(col), value }
    }
}

/// `Σ_i y_i A_i − C ⪰ 0` on a `size × size` block.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PsdConstraint {
    pub size: usize,
    pub constant: Vec<SymEntry>,
    pub coefficients: Vec<(usize, Vec<SymEntry>)>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EqualityConstraint {
    pub coefficients: Vec<(usize, f64)>,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SdpStandardForm {
    pub num_vars: usize,
    /// The trailing `num_slacks` variables are slacks of `≤` rows.
    pub num_slacks: usize,
    pub objective: Vec<f64>,
    pub psd: Vec<PsdConstraint>,
    pub equalities: Vec<EqualityConstraint>,
}

fn canonical_entries(entries: &[SymEntry]) -> Vec<SymEntry> {
    let mut merged: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for e in entries {
        *merged.entry((e.row.min(e.col), e.row.max(e.col))).or_insert(0.0) += e.value;
    }
    merged
        .into_iter()
        .filter(|(_, v)| *v != 0.0)
        .map(|((row, col), value)| SymEntry { row, col, value })
        .collect()
}

impl SdpStandardForm {
    /// Sorted, merged, zero-free copy; two forms describing the same problem
    /// have equal canonical forms.
    pub fn canonical(&self) -> SdpStandardForm {
        let psd = self
            .psd
            .iter()
            .map(|block| {
                let mut by_var: BTreeMap<usize, Vec<SymEntry>> = BTreeMap::new();
                for (var, entries) in &block.coefficients {
                    by_var.entry(*var).or_default().extend_from_slice(entries);
                }
                PsdConstraint {
                    size: block.size,
                    constant: canonical_entries(&block.constant),
                    coefficients: by_var
                        .into_iter()
                        .map(|(v, e)| (v, canonical_entries(&e)))
                        .filter(|(_, e)| !e.is_empty())
                        .collect(),
                }
            })
            .collect();
        let equalities = self
            .equalities
            .iter()
            .map(|eq| {
                let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
                for (v, c) in &eq.coefficients {
                    *merged.entry(*v).or_insert(0.0) += c;
                }
                EqualityConstraint {
                    coefficients: merged.into_iter().filter(|(_, c)| *c != 0.0).collect(),
                    rhs: eq.rhs,
                }
            })
            .collect();
        SdpStandardForm {
            num_vars: self.num_vars,
            num_slacks: self.num_slacks,
            objective: self.objective.clone(),
            psd,
            equalities,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.num_vars == 0 || (self.psd.is_empty() && self.equalities.is_empty())
    }

    pub fn objective_value(&self, y: &[f64]) -> f64 {
        self.objective.iter().zip(y).map(|(c, v)| c * v).sum()
    }

    /// Checks symmetry-index bounds and variable indices.
    pub fn check_dimensions(&self) -> Result<(), String> {
        if self.objective.len() != self.num_vars {
            return Err(format!("objective has {} entries for {} variables", self.objective.len(), self.num_vars));
        }
        if self.num_slacks > self.num_vars {
            return Err("more slacks than variables".into());
        }
        for (k, block) in self.psd.iter().enumerate() {
            let entries = block.constant.iter().chain(block.coefficients.iter().flat_map(|(_, e)| e.iter()));
            for e in entries {
                if e.row > e.col || e.col >= block.size {
                    return Err(format!("block {k}: entry ({}, {}) outside the upper triangle", e.row, e.col));
                }
            }
            if let Some((v, _)) = block.coefficients.iter().find(|(v, _)| *v >= self.num_vars) {
                return Err(format!("block {k}: variable {v} out of range"));
            }
        }
        for (j, eq) in self.equalities.iter().enumerate() {
            if let Some((v, _)) = eq.coefficients.iter().find(|(v, _)| *v >= self.num_vars) {
                return Err(format!("equality {j}: variable {v} out of range"));
            }
        }
        Ok(())
    }
}

/// Flattens a relaxation: pseudo-moments first (measure order, then graded
/// lex), then one nonnegative slack per `≤` row held in a `1 × 1` block.
pub fn to_standard_form(rel: &MomentRelaxation) -> SdpStandardForm {
    let num_moments = rel.num_moment_vars();
    let num_slacks = rel.affine_rows.iter().filter(|r| r.relation == Relation::Le).count();
    let num_vars = num_moments + num_slacks;
    let mut objective = vec![0.0; num_vars];
    for &(v, c) in &rel.objective.terms {
        objective[v] += c;
    }
    let mut psd = Vec::with_capacity(rel.psd_blocks.len() + num_slacks);
    for block in &rel.psd_blocks {
        let mut by_var: BTreeMap<usize, Vec<SymEntry>> = BTreeMap::new();
        let side = block.side();
        for i in 0..side {
            for j in i..side {
                for &(v, c) in &block.entry(i, j).terms {
                    by_var.entry(v).or_default().push(SymEntry { row: i, col: j, value: c });
                }
            }
        }
        psd.push(PsdConstraint { size: side, constant: Vec::new(), coefficients: by_var.into_iter().collect() });
    }
    let mut equalities = Vec::with_capacity(rel.affine_rows.len());
    let mut slack = num_moments;
    for row in &rel.affine_rows {
        let mut coefficients = row.form.terms.clone();
        if row.relation == Relation::Le {
            coefficients.push((slack, 1.0));
            psd.push(PsdConstraint {
                size: 1,
                constant: Vec::new(),
                coefficients: vec![(slack, vec![SymEntry { row: 0, col: 0, value: 1.0 }])],
            });
            slack += 1;
        }
        equalities.push(EqualityConstraint { coefficients, rhs: row.rhs });
    }
    SdpStandardForm { num_vars, num_slacks, objective, psd, equalities }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    NearOptimal,
    Infeasible,
    Unbounded,
    NumericalError,
}

impl SolveStatus {
    pub fn is_success(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::NearOptimal)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::NearOptimal => "near_optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::NumericalError => "numerical_error",
        }
    }
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub max_iter: u32,
    pub tol_feas: f64,
    pub tol_gap_abs: f64,
    pub tol_gap_rel: f64,
    pub verbose: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings { max_iter: 200, tol_feas: 1e-8, tol_gap_abs: 1e-8, tol_gap_rel: 1e-8, verbose: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub status: SolveStatus,
    pub iterations: u32,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

#[derive(Debug, Error)]
pub enum SdpError {
    #[error("no SDP backend is registered")]
    NoBackend,
    #[error("backend '{backend}' not registered")]
    UnknownBackend { backend: String },
    #[error("solver failure: {0}")]
    SolverFailure(String),
    #[error("malformed standard form: {0}")]
    Malformed(String),
}

/// A synchronous conic solver: one call, no callbacks.
pub trait SdpBackend: Send + Sync {
    fn name(&self) -> &str;
    fn solve(&self, form: &SdpStandardForm, settings: &SolverSettings) -> Result<BackendSolution, SdpError>;
}

/// In-process interior-point backend built on Clarabel.
#[derive(Debug, Default, Clone, Copy)]
pub struct ClarabelBackend;

/// Position of `(row, col)`, `row <= col`, in the column-major upper
/// triangle used by Clarabel's PSD cone.
fn triangle_index(row: usize, col: usize) -> usize {
    col * (col + 1) / 2 + row
}

impl SdpBackend for ClarabelBackend {
    fn name(&self) -> &str {
        "clarabel"
    }

    fn solve(&self, form: &SdpStandardForm, settings: &SolverSettings) -> Result<BackendSolution, SdpError> {
        form.check_dimensions().map_err(SdpError::Malformed)?;
        let n = form.num_vars;
        let (mut rows, mut cols, mut vals) = (Vec::new(), Vec::new(), Vec::new());
        let mut rhs = Vec::new();
        let mut cones = Vec::new();

        if !form.equalities.is_empty() {
            for eq in &form.equalities {
                let r = rhs.len();
                for &(v, c) in &eq.coefficients {
                    rows.push(r);
                    cols.push(v);
                    vals.push(c);
                }
                rhs.push(eq.rhs);
            }
            cones.push(SupportedConeT::ZeroConeT(form.equalities.len()));
        }
        // Slack s = Σ y_i svec(A_i) − svec(C) must lie in the cone, i.e.
        // A = −svec(A_i), b = −svec(C).
        let sqrt2 = std::f64::consts::SQRT_2;
        for block in &form.psd {
            let base = rhs.len();
            let dim = block.size * (block.size + 1) / 2;
            rhs.extend(std::iter::repeat_n(0.0, dim));
            let scale = |e: &SymEntry| if e.row == e.col { e.value } else { e.value * sqrt2 };
            for e in &block.constant {
                rhs[base + triangle_index(e.row, e.col)] -= scale(e);
            }
            for (v, entries) in &block.coefficients {
                for e in entries {
                    rows.push(base + triangle_index(e.row, e.col));
                    cols.push(*v);
                    vals.push(-scale(e));
                }
            }
            cones.push(if block.size == 1 {
                SupportedConeT::NonnegativeConeT(1)
            } else {
                SupportedConeT::PSDTriangleConeT(block.size)
            });
        }

        let a = CscMatrix::new_from_triplets(rhs.len(), n, rows, cols, vals);
        let p = CscMatrix::zeros((n, n));
        let clarabel_settings = DefaultSettingsBuilder::default()
            .verbose(settings.verbose)
            .max_iter(settings.max_iter)
            .tol_feas(settings.tol_feas)
            .tol_gap_abs(settings.tol_gap_abs)
            .tol_gap_rel(settings.tol_gap_rel)
            .direct_solve_method("faer".into())
            // Moment relaxations with optima on the cone boundary stall
            // early with dynamic regularization on.
            .dynamic_regularization_enable(false)
            .build()
            .map_err(|e| SdpError::SolverFailure(e.to_string()))?;
        let mut solver = DefaultSolver::new(&p, &form.objective, &a, &rhs, &cones, clarabel_settings)
            .map_err(|e| SdpError::SolverFailure(format!("{e:?}")))?;
        solver.solve();
        let sol = &solver.solution;
        let status = match sol.status {
            SolverStatus::Solved => SolveStatus::Optimal,
            SolverStatus::AlmostSolved => SolveStatus::NearOptimal,
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => SolveStatus::Infeasible,
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => SolveStatus::Unbounded,
            _ => SolveStatus::NumericalError,
        };
        Ok(BackendSolution {
            x: sol.x.clone(),
            objective: form.objective_value(&sol.x),
            status,
            iterations: sol.iterations,
            primal_residual: sol.r_prim,
            dual_residual: sol.r_dual,
        })
    }
}

/// Ordered collection of backends; the first one is used unless a name is
/// requested.
pub struct BackendRegistry {
    backends: Vec<Box<dyn SdpBackend>>,
}

impl Default for BackendRegistry {
    fn default() -> Self {
        BackendRegistry { backends: vec![Box::new(ClarabelBackend)] }
    }
}

impl BackendRegistry {
    pub fn empty() -> Self {
        BackendRegistry { backends: Vec::new() }
    }

    pub fn register(&mut self, backend: Box<dyn SdpBackend>) {
        self.backends.push(backend);
    }

    pub fn names(&self) -> Vec<&str> {
        self.backends.iter().map(|b| b.name()).collect()
    }

    pub fn get(&self, name: Option<&str>) -> Result<&dyn SdpBackend, SdpError> {
        match name {
            None => self.backends.first().map(|b| b.as_ref()).ok_or(SdpError::NoBackend),
            Some(n) => self
                .backends
                .iter()
                .find(|b| b.name() == n)
                .map(|b| b.as_ref())
                .ok_or_else(|| SdpError::UnknownBackend { backend: n.to_string() }),
        }
    }

    pub fn solve(&self, form: &SdpStandardForm, settings: &SolverSettings) -> Result<BackendSolution, SdpError> {
        self.get(None)?.solve(form, settings)
    }
}

/// Solves with the default registry.
pub fn solve(form: &SdpStandardForm, settings: &SolverSettings) -> Result<BackendSolution, SdpError> {
    BackendRegistry::default().solve(form, settings)
}

#[derive(Debug, Error)]
pub enum SdpaError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("refusing to export a form without constraints")]
    EmptyForm,
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

const EQUALITY_TAG: &str = "equality-block";
const VARIABLES_TAG: &str = "variables";

/// Writes the form in SDPA sparse format.
///
/// Layout: leading `"`-comment lines carrying the variable mapping, then the
/// number of variables `m`, the number of blocks, the block sizes, the
/// objective `c`, and one `matno blkno i j value` line per nonzero upper
/// triangular entry (`matno = 0` is `F_0`). PSD blocks keep their order.
/// Equalities, if any, go to one trailing diagonal block (negative size)
/// holding `aᵀy − b` at position `2j − 1` and `−(aᵀy − b)` at `2j`.
pub fn export_sdpa<W: Write>(form: &SdpStandardForm, sink: &mut W) -> Result<(), SdpaError> {
    if form.is_empty() {
        return Err(SdpaError::EmptyForm);
    }
    form.check_dimensions().map_err(|msg| SdpaError::Parse { line: 0, msg })?;
    let k = form.psd.len();
    let neq = form.equalities.len();
    let nblocks = k + usize::from(neq > 0);

    writeln!(sink, "\"SDPA sparse export: minimize c'y s.t. sum_i y_i F_i - F_0 psd")?;
    writeln!(
        sink,
        "\"{VARIABLES_TAG} {} slacks {} (y = pseudo-moments by measure then graded lex, then slacks)",
        form.num_vars, form.num_slacks
    )?;
    if neq > 0 {
        writeln!(sink, "\"{EQUALITY_TAG} {} {} (entries 2j-1, 2j hold +(a_j'y - b_j), -(a_j'y - b_j))", k + 1, neq)?;
    }
    writeln!(sink, "{}", form.num_vars)?;
    writeln!(sink, "{nblocks}")?;
    let mut sizes: Vec<String> = form.psd.iter().map(|b| b.size.to_string()).collect();
    if neq > 0 {
        sizes.push(format!("-{}", 2 * neq));
    }
    writeln!(sink, "{}", sizes.join(" "))?;
    let c: Vec<String> = form.objective.iter().map(|v| format!("{v}")).collect();
    writeln!(sink, "{}", c.join(" "))?;

    // matno -> list of (block, i, j, value), 1-based.
    let mut mats: BTreeMap<usize, Vec<(usize, usize, usize, f64)>> = BTreeMap::new();
    for (b, block) in form.canonical().psd.iter().enumerate() {
        for e in &block.constant {
            mats.entry(0).or_default().push((b + 1, e.row + 1, e.col + 1, e.value));
        }
        for (v, entries) in &block.coefficients {
            for e in entries {
                mats.entry(v + 1).or_default().push((b + 1, e.row + 1, e.col + 1, e.value));
            }
        }
    }
    for (j, eq) in form.canonical().equalities.iter().enumerate() {
        let (pos, neg) = (2 * j + 1, 2 * j + 2);
        if eq.rhs != 0.0 {
            mats.entry(0).or_default().push((k + 1, pos, pos, eq.rhs));
            mats.entry(0).or_default().push((k + 1, neg, neg, -eq.rhs));
        }
        for &(v, c) in &eq.coefficients {
            mats.entry(v + 1).or_default().push((k + 1, pos, pos, c));
            mats.entry(v + 1).or_default().push((k + 1, neg, neg, -c));
        }
    }
    for (matno, mut entries) in mats {
        entries.sort_by_key(|a| (a.0, a.1, a.2));
        for (blk, i, j, v) in entries {
            writeln!(sink, "{matno} {blk} {i} {j} {v}")?;
        }
    }
    Ok(())
}

pub fn export_sdpa_string(form: &SdpStandardForm) -> Result<String, SdpaError> {
    let mut buf = Vec::new();
    export_sdpa(form, &mut buf)?;
    Ok(String::from_utf8(buf).expect("SDPA output is ASCII"))
}

/// Reads a file produced by [`export_sdpa`] back into a standard form.
pub fn parse_sdpa<R: BufRead>(reader: R) -> Result<SdpStandardForm, SdpaError> {
    let mut num_slacks = 0;
    let mut eq_block: Option<usize> = None;
    let mut header: Vec<(usize, String)> = Vec::new();
    let mut entries: Vec<(usize, String)> = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('"').or_else(|| trimmed.strip_prefix('*')) {
            if header.is_empty() {
                let words: Vec<&str> = comment.split_whitespace().collect();
                match words.as_slice() {
                    [VARIABLES_TAG, _, "slacks", s, ..] => num_slacks = parse_num(s, lineno)?,
                    [EQUALITY_TAG, b, ..] => eq_block = Some(parse_num(b, lineno)?),
                    _ => {}
                }
            }
            continue;
        }
        let cleaned: String = trimmed.chars().map(|c| if "{}(),".contains(c) { ' ' } else { c }).collect();
        if header.len() < 4 {
            header.push((lineno, cleaned));
        } else {
            entries.push((lineno, cleaned));
        }
    }
    if header.len() < 4 {
        return Err(SdpaError::Parse { line: 0, msg: "truncated header".into() });
    }
    let (l1, ref first) = header[0];
    let num_vars: usize = parse_num(first.split_whitespace().next().unwrap_or(""), l1)?;
    let (l2, ref second) = header[1];
    let nblocks: usize = parse_num(second.split_whitespace().next().unwrap_or(""), l2)?;
    let (l3, ref third) = header[2];
    let sizes: Vec<i64> = third
        .split_whitespace()
        .map(|s| parse_num(s, l3))
        .collect::<Result<_, _>>()?;
    if sizes.len() != nblocks {
        return Err(SdpaError::Parse { line: l3, msg: format!("expected {nblocks} block sizes") });
    }
    let (l4, ref fourth) = header[3];
    let objective: Vec<f64> = fourth
        .split_whitespace()
        .map(|s| parse_num(s, l4))
        .collect::<Result<_, _>>()?;
    if objective.len() != num_vars {
        return Err(SdpaError::Parse { line: l4, msg: format!("expected {num_vars} objective entries") });
    }

    let mut psd: Vec<PsdConstraint> = Vec::new();
    let mut block_slot: Vec<Option<usize>> = Vec::with_capacity(nblocks);
    for (b, &size) in sizes.iter().enumerate() {
        if Some(b + 1) == eq_block {
            block_slot.push(None);
        } else {
            block_slot.push(Some(psd.len()));
            psd.push(PsdConstraint { size: size.unsigned_abs() as usize, ..Default::default() });
        }
    }
    let neq = eq_block.map(|b| sizes.get(b - 1).map_or(0, |s| s.unsigned_abs() as usize / 2)).unwrap_or(0);
    let mut equalities = vec![EqualityConstraint::default(); neq];
    let mut coeffs: Vec<BTreeMap<usize, Vec<SymEntry>>> = vec![BTreeMap::new(); psd.len()];

    for (lineno, text) in entries {
        let f: Vec<&str> = text.split_whitespace().collect();
        if f.len() != 5 {
            return Err(SdpaError::Parse { line: lineno, msg: "expected 'matno blkno i j value'".into() });
        }
        let matno: usize = parse_num(f[0], lineno)?;
        let blk: usize = parse_num(f[1], lineno)?;
        let i: usize = parse_num(f[2], lineno)?;
        let j: usize = parse_num(f[3], lineno)?;
        let value: f64 = parse_num(f[4], lineno)?;
        if blk == 0 || blk > nblocks || i == 0 || j == 0 || matno > num_vars {
            return Err(SdpaError::Parse { line: lineno, msg: "index out of range".into() });
        }
        match block_slot[blk - 1] {
            Some(slot) => {
                let e = SymEntry::new(i - 1, j - 1, value);
                if matno == 0 {
                    psd[slot].constant.push(e);
                } else {
                    coeffs[slot].entry(matno - 1).or_default().push(e);
                }
            }
            None => {
                if i != j {
                    return Err(SdpaError::Parse { line: lineno, msg: "off-diagonal entry in diagonal block".into() });
                }
                // Only the positive copy of each pair is needed.
                if i.is_multiple_of(2) {
                    continue;
                }
                let eq = &mut equalities[(i - 1) / 2];
                if matno == 0 {
                    eq.rhs = value;
                } else {
                    eq.coefficients.push((matno - 1, value));
                }
            }
        }
    }
    for (block, by_var) in psd.iter_mut().zip(coeffs) {
        block.coefficients = by_var.into_iter().collect();
    }
    Ok(SdpStandardForm { num_vars, num_slacks, objective, psd, equalities }.canonical())
}

fn parse_num<T: std::str::FromStr>(s: &str, line: usize) -> Result<T, SdpaError> {
    s.parse().map_err(|_| SdpaError::Parse { line, msg: format!("bad number '{s}'") })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn toy_1x1() -> SdpStandardForm {
        SdpStandardForm {
            num_vars: 1,
            num_slacks: 0,
            objective: vec![1.0],
            psd: vec![PsdConstraint {
                size: 1,
                constant: vec![SymEntry::new(0, 0, 1.0)],
                coefficients: vec![(0, vec![SymEntry::new(0, 0, 1.0)])],
            }],
            equalities: vec![],
        }
    }

    /// min −y₁ over moments of a measure on [0, 1] with y₀ = 1:
    /// M₁ = [[y₀, y₁], [y₁, y₂]] ⪰ 0 and the localizing scalar y₁ − y₂ ⪰ 0.
    fn univariate_toy() -> SdpStandardForm {
        SdpStandardForm {
            num_vars: 3,
            num_slacks: 0,
            objective: vec![0.0, -1.0, 0.0],
            psd: vec![
                PsdConstraint {
                    size: 2,
                    constant: vec![],
                    coefficients: vec![
                        (0, vec![SymEntry::new(0, 0, 1.0)]),
                        (1, vec![SymEntry::new(0, 1, 1.0)]),
                        (2, vec![SymEntry::new(1, 1, 1.0)]),
                    ],
                },
                PsdConstraint {
                    size: 1,
                    constant: vec![],
                    coefficients: vec![(1, vec![SymEntry::new(0, 0, 1.0)]), (2, vec![SymEntry::new(0, 0, -1.0)])],
                },
            ],
            equalities: vec![EqualityConstraint { coefficients: vec![(0, 1.0)], rhs: 1.0 }],
        }
    }

    #[test]
    fn solves_scalar_toy() {
        let sol = solve(&toy_1x1(), &SolverSettings::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.x[0] - 1.0).abs() < 1e-7);
    }

    #[test]
    fn solves_univariate_moment_toy() {
        let sol = solve(&univariate_toy(), &SolverSettings::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.objective + 1.0).abs() < 1e-7, "{}", sol.objective);
    }

    #[test]
    fn detects_infeasibility() {
        let mut form = toy_1x1();
        form.equalities = vec![
            EqualityConstraint { coefficients: vec![(0, 1.0)], rhs: 1.0 },
            EqualityConstraint { coefficients: vec![(0, 1.0)], rhs: 2.0 },
        ];
        let sol = solve(&form, &SolverSettings::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
    }

    #[test]
    fn empty_registry() {
        assert!(matches!(BackendRegistry::empty().solve(&toy_1x1(), &SolverSettings::default()), Err(SdpError::NoBackend)));
        assert_eq!(BackendRegistry::default().names(), ["clarabel"]);
        assert!(matches!(BackendRegistry::default().get(Some("mosek")), Err(SdpError::UnknownBackend { .. })));
    }

    #[test]
    fn toy_export_layout() {
        let text = export_sdpa_string(&toy_1x1()).unwrap();
        let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('"')).collect();
        assert_eq!(body, ["1", "1", "1", "1", "0 1 1 1 1", "1 1 1 1 1"]);
    }

    #[test]
    fn rejects_empty_form() {
        let form = SdpStandardForm { num_vars: 1, objective: vec![0.0], ..Default::default() };
        assert!(matches!(export_sdpa_string(&form), Err(SdpaError::EmptyForm)));
        assert!(matches!(export_sdpa_string(&SdpStandardForm::default()), Err(SdpaError::EmptyForm)));
    }

    #[test]
    fn round_trip_with_equalities() {
        let form = univariate_toy();
        let text = export_sdpa_string(&form).unwrap();
        assert!(text.contains("\n2 1 -2\n"));
        let back = parse_sdpa(text.as_bytes()).unwrap();
        assert_eq!(back, form.canonical());
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(parse_sdpa("1\n1\n".as_bytes()), Err(SdpaError::Parse { .. })));
        assert!(matches!(parse_sdpa("1\n1\n1\n1\n0 1 1 1\n".as_bytes()), Err(SdpaError::Parse { .. })));
        assert!(matches!(parse_sdpa("1\n1\n1 2\n1\n".as_bytes()), Err(SdpaError::Parse { .. })));
    }
}
