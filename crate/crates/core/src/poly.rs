//! Sparse multivariate polynomials over the fixed variable universe
//! `(t, x, u, z, w)`.
//!
//! Coefficients are `f64`, exponents are exact. Terms are kept in a
//! `BTreeMap` keyed by [`Monomial`], whose ordering is graded lexicographic
//! with `t > x > u > z > w`; iteration therefore walks from the constant
//! term upwards in degree.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Coefficients below this magnitude are dropped after every operation.
pub const ZERO_THRESHOLD: f64 = 1e-14;

/// Number of variables in the universe.
pub const NVARS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Var {
    T,
    X,
    U,
    Z,
    W,
}

impl Var {
    pub const ALL: [Var; NVARS] = [Var::T, Var::X, Var::U, Var::Z, Var::W];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Var::T => "t",
            Var::X => "x",
            Var::U => "u",
            Var::Z => "z",
            Var::W => "w",
        }
    }

    pub fn from_name(name: &str) -> Option<Var> {
        Var::ALL.into_iter().find(|v| v.name() == name)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyError {
    #[error("clearing power {clear} is below the degree {degree} of the substituted variable")]
    ClearTooSmall { degree: u32, clear: u32 },
    #[error("variable {0} has no assigned value")]
    MissingAssignment(Var),
    #[error("cannot substitute {var} by a ratio involving itself")]
    SelfSubstitution { var: Var },
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
}

/// Exponent vector, one slot per variable of [`Var::ALL`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Monomial(pub [u32; NVARS]);

impl Monomial {
    pub const ONE: Monomial = Monomial([0; NVARS]);

    pub fn var(v: Var) -> Monomial {
        Self::var_pow(v, 1)
    }

    pub fn var_pow(v: Var, k: u32) -> Monomial {
        let mut e = [0; NVARS];
        e[v.index()] = k;
        Monomial(e)
    }

    pub fn from_pairs(pairs: &[(Var, u32)]) -> Monomial {
        let mut e = [0; NVARS];
        for &(v, k) in pairs {
            e[v.index()] += k;
        }
        Monomial(e)
    }

    #[inline]
    pub fn exp(&self, v: Var) -> u32 {
        self.0[v.index()]
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut e = self.0;
        for (a, b) in e.iter_mut().zip(other.0.iter()) {
            *a += b;
        }
        Monomial(e)
    }

    pub fn with_exp(&self, v: Var, k: u32) -> Monomial {
        let mut e = self.0;
        e[v.index()] = k;
        Monomial(e)
    }

    /// True iff every variable with a nonzero exponent is in `vars`.
    pub fn uses_only(&self, vars: &[Var]) -> bool {
        Var::ALL
            .iter()
            .all(|v| self.exp(*v) == 0 || vars.contains(v))
    }

    /// Evaluates the monomial on a dense point indexed by [`Var::index`].
    #[inline]
    pub fn eval_dense(&self, point: &[f64; NVARS]) -> f64 {
        let mut acc = 1.0;
        for (k, &e) in self.0.iter().enumerate() {
            if e > 0 {
                acc *= point[k].powi(e as i32);
            }
        }
        acc
    }

    /// All monomials in `vars` with total degree at most `max_degree`,
    /// in ascending graded lexicographic order.
    pub fn enumerate(vars: &[Var], max_degree: u32) -> Vec<Monomial> {
        fn rec(vars: &[Var], budget: u32, cur: Monomial, out: &mut Vec<Monomial>) {
            match vars.split_first() {
                None => out.push(cur),
                Some((&v, rest)) => {
                    for k in 0..=budget {
                        rec(rest, budget - k, cur.with_exp(v, k), out);
                    }
                }
            }
        }
        let mut out = Vec::new();
        rec(vars, max_degree, Monomial::ONE, &mut out);
        out.sort();
        out
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for v in Var::ALL {
            let e = self.exp(v);
            if e == 0 {
                continue;
            }
            if !first {
                f.write_str("*")?;
            }
            first = false;
            if e == 1 {
                write!(f, "{v}")?;
            } else {
                write!(f, "{v}^{e}")?;
            }
        }
        if first {
            f.write_str("1")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct Polynomial {
    terms: BTreeMap<Monomial, f64>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    pub fn constant(c: f64) -> Self {
        Self::term(Monomial::ONE, c)
    }

    pub fn var(v: Var) -> Self {
        Self::term(Monomial::var(v), 1.0)
    }

    pub fn term(m: Monomial, c: f64) -> Self {
        let mut p = Self::zero();
        p.add_term(m, c);
        p
    }

    pub fn from_terms<I: IntoIterator<Item = (Monomial, f64)>>(terms: I) -> Self {
        let mut p = Self::zero();
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    /// Adds `c * m` in place, dropping the term if it cancels.
    pub fn add_term(&mut self, m: Monomial, c: f64) {
        let entry = self.terms.entry(m).or_insert(0.0);
        *entry += c;
        if entry.abs() < ZERO_THRESHOLD {
            self.terms.remove(&m);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &f64)> + '_ {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, m: &Monomial) -> f64 {
        self.terms.get(m).copied().unwrap_or(0.0)
    }

    /// Total degree; the zero polynomial has degree 0.
    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn degree_in(&self, v: Var) -> u32 {
        self.terms.keys().map(|m| m.exp(v)).max().unwrap_or(0)
    }

    pub fn variables(&self) -> Vec<Var> {
        Var::ALL
            .into_iter()
            .filter(|&v| self.degree_in(v) > 0)
            .collect()
    }

    pub fn uses_only(&self, vars: &[Var]) -> bool {
        self.terms.keys().all(|m| m.uses_only(vars))
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::from_terms(self.terms.iter().map(|(m, c)| (*m, c * k)))
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(*m, *c);
        }
        out
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(*m, -c);
        }
        out
    }

    pub fn negate(&self) -> Polynomial {
        self.scale(-1.0)
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    pub fn mul_monomial(&self, m: &Monomial) -> Polynomial {
        Self::from_terms(self.terms.iter().map(|(k, c)| (k.mul(m), *c)))
    }

    pub fn pow(&self, k: u32) -> Polynomial {
        let mut acc = Polynomial::one();
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = Polynomial::mul(&acc, &base);
            }
            k >>= 1;
            if k > 0 {
                base = Polynomial::mul(&base, &base);
            }
        }
        acc
    }

    /// Formal partial derivative with respect to `v`.
    pub fn differentiate(&self, v: Var) -> Polynomial {
        Self::from_terms(self.terms.iter().filter_map(|(m, c)| {
            let e = m.exp(v);
            (e > 0).then(|| (m.with_exp(v, e - 1), c * f64::from(e)))
        }))
    }

    /// Returns `den^clear * p` with `var` replaced by `num / den`.
    ///
    /// The result stays polynomial as long as `clear` is at least the degree
    /// of `p` in `var`.
    pub fn substitute_ratio(
        &self,
        var: Var,
        num: Var,
        den: Var,
        clear: u32,
    ) -> Result<Polynomial, PolyError> {
        if num == var || den == var {
            return Err(PolyError::SelfSubstitution { var });
        }
        let degree = self.degree_in(var);
        if clear < degree {
            return Err(PolyError::ClearTooSmall { degree, clear });
        }
        Ok(Self::from_terms(self.terms.iter().map(|(m, c)| {
            let e = m.exp(var);
            let mut out = m.with_exp(var, 0);
            out.0[num.index()] += e;
            out.0[den.index()] += clear - e;
            (out, *c)
        })))
    }

    /// Replaces `var` by an arbitrary polynomial.
    pub fn substitute(&self, var: Var, replacement: &Polynomial) -> Polynomial {
        let degree = self.degree_in(var) as usize;
        let mut powers = Vec::with_capacity(degree + 1);
        powers.push(Polynomial::one());
        for k in 1..=degree {
            let next = Polynomial::mul(&powers[k - 1], replacement);
            powers.push(next);
        }
        let mut out = Polynomial::zero();
        for (m, c) in &self.terms {
            let e = m.exp(var) as usize;
            let rest = m.with_exp(var, 0);
            for (pm, pc) in &powers[e].terms {
                out.add_term(pm.mul(&rest), c * pc);
            }
        }
        out
    }

    /// Evaluates at a point given as `(variable, value)` pairs.
    pub fn evaluate(&self, point: &[(Var, f64)]) -> Result<f64, PolyError> {
        let mut dense = [f64::NAN; NVARS];
        for &(v, val) in point {
            dense[v.index()] = val;
        }
        for v in self.variables() {
            if dense[v.index()].is_nan() {
                return Err(PolyError::MissingAssignment(v));
            }
        }
        for slot in dense.iter_mut() {
            if slot.is_nan() {
                *slot = 0.0;
            }
        }
        Ok(self.eval_dense(&dense))
    }

    /// Evaluates on a dense point indexed by [`Var::index`]; unused slots are ignored.
    pub fn eval_dense(&self, point: &[f64; NVARS]) -> f64 {
        self.terms.iter().map(|(m, c)| c * m.eval_dense(point)).sum()
    }

    /// Largest coefficient magnitude; 0 for the zero polynomial.
    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms.values().fold(0.0, |acc, c| acc.max(c.abs()))
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        Polynomial::add(self, rhs)
    }
}

impl Add for Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: Polynomial) -> Polynomial {
        Polynomial::add(&self, &rhs)
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        Polynomial::sub(self, rhs)
    }
}

impl Sub for Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: Polynomial) -> Polynomial {
        Polynomial::sub(&self, &rhs)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        Polynomial::mul(self, rhs)
    }
}

impl Mul for Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: Polynomial) -> Polynomial {
        Polynomial::mul(&self, &rhs)
    }
}

impl Mul<f64> for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: f64) -> Polynomial {
        self.scale(rhs)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.negate()
    }
}

impl Neg for Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.negate()
    }
}

impl From<Var> for Polynomial {
    fn from(v: Var) -> Self {
        Polynomial::var(v)
    }
}

impl From<f64> for Polynomial {
    fn from(c: f64) -> Self {
        Polynomial::constant(c)
    }
}

impl fmt::Display for Polynomial {
    /// Highest-degree terms first, e.g. `x^6 - 2*t*x^3 + t^2`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (k, (m, &c)) in self.terms.iter().rev().enumerate() {
            let (neg, mag) = (c < 0.0, c.abs());
            match (k, neg) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            if *m == Monomial::ONE {
                write!(f, "{mag}")?;
            } else if mag == 1.0 {
                write!(f, "{m}")?;
            } else {
                write!(f, "{mag}*{m}")?;
            }
        }
        Ok(())
    }
}

impl From<Polynomial> for String {
    fn from(p: Polynomial) -> String {
        p.to_string()
    }
}

impl TryFrom<String> for Polynomial {
    type Error = PolyError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl FromStr for Polynomial {
    type Err = PolyError;

    /// Parses `+ - * ^`, parentheses, decimal numbers and the variable names
    /// `t x u z w`. Powers must be non-negative integers.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parser = Parser { src: s.as_bytes(), pos: 0 };
        let p = parser.expr()?;
        parser.skip_ws();
        if parser.pos != parser.src.len() {
            return Err(parser.error("unexpected trailing input"));
        }
        Ok(p)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> PolyError {
        PolyError::Parse { pos: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Polynomial, PolyError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    acc = &acc + &self.unary()?;
                }
                Some(b'-') => {
                    self.pos += 1;
                    acc = &acc - &self.unary()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Polynomial, PolyError> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(-self.unary()?)
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.product(),
        }
    }

    fn product(&mut self) -> Result<Polynomial, PolyError> {
        let mut acc = self.power()?;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            let rhs = match self.peek() {
                Some(b'-') | Some(b'+') => self.unary()?,
                _ => self.power()?,
            };
            acc = &acc * &rhs;
        }
        Ok(acc)
    }

    fn power(&mut self) -> Result<Polynomial, PolyError> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if start == self.pos {
                return Err(self.error("expected a non-negative integer exponent"));
            }
            let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default();
            let k: u32 = text.parse().map_err(|_| self.error("exponent out of range"))?;
            return Ok(base.pow(k));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Polynomial, PolyError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.error("expected ')'"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default();
                Var::from_name(name).map(Polynomial::var).ok_or_else(|| PolyError::Parse {
                    pos: start,
                    msg: format!("unknown variable '{name}'"),
                })
            }
            Some(_) => Err(self.error("unexpected character")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Polynomial, PolyError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            while p.pos < p.src.len() && (p.src[p.pos].is_ascii_digit() || p.src[p.pos] == b'.') {
                p.pos += 1;
            }
        };
        digits(self);
        if self.pos < self.src.len() && matches!(self.src[self.pos], b'e' | b'E') {
            self.pos += 1;
            if self.pos < self.src.len() && matches!(self.src[self.pos], b'+' | b'-') {
                self.pos += 1;
            }
            digits(self);
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default();
        text.parse::<f64>()
            .map(Polynomial::constant)
            .map_err(|_| PolyError::Parse { pos: start, msg: format!("bad number '{text}'") })
    }
}

/// Shorthand used throughout the builders and tests.
pub fn p(s: &str) -> Polynomial {
    s.parse().unwrap_or_else(|e| panic!("invalid polynomial literal {s:?}: {e}"))
}
