//! Sparse multivariate polynomials in the species coordinates.
//!
//! Fitness functions, drift fields and their Lie brackets are all kept in
//! this form, so Jacobians and brackets are exact.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{PdmpError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coeff: f64,
    pub exps: Vec<u32>,
}

/// A polynomial in `nvars` variables. Terms are kept sorted by exponent
/// vector with no duplicate monomials and no zero coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    nvars: usize,
    terms: Vec<Term>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Self { nvars, terms: Vec::new() }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        Self::monomial(nvars, vec![0; nvars], c)
    }

    /// The coordinate function `x_i` (0-based).
    pub fn var(nvars: usize, i: usize) -> Self {
        let mut exps = vec![0; nvars];
        exps[i] = 1;
        Self::monomial(nvars, exps, 1.0)
    }

    pub fn monomial(nvars: usize, exps: Vec<u32>, coeff: f64) -> Self {
        assert_eq!(exps.len(), nvars, "exponent vector length");
        let terms = if coeff == 0.0 { Vec::new() } else { vec![Term { coeff, exps }] };
        Self { nvars, terms }
    }

    /// Affine polynomial `c0 + sum_j lin[j] x_j`.
    pub fn affine(c0: f64, lin: &[f64]) -> Self {
        let n = lin.len();
        let mut map = BTreeMap::new();
        map.insert(vec![0; n], c0);
        for (j, &c) in lin.iter().enumerate() {
            let mut e = vec![0; n];
            e[j] = 1;
            map.insert(e, c);
        }
        Self::from_map(n, map)
    }

    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Vec<u32>, f64)>) -> Self {
        let mut map: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for (e, c) in terms {
            assert_eq!(e.len(), nvars, "exponent vector length");
            *map.entry(e).or_insert(0.0) += c;
        }
        Self::from_map(nvars, map)
    }

    fn from_map(nvars: usize, map: BTreeMap<Vec<u32>, f64>) -> Self {
        let terms = map.into_iter().filter(|(_, c)| *c != 0.0).map(|(exps, coeff)| Term { coeff, exps }).collect();
        Self { nvars, terms }
    }

    fn to_map(&self) -> BTreeMap<Vec<u32>, f64> {
        self.terms.iter().map(|t| (t.exps.clone(), t.coeff)).collect()
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|t| t.exps.iter().sum::<u32>()).max().unwrap_or(0)
    }

    /// Coefficient of the monomial with the given exponents (0 if absent).
    pub fn coeff(&self, exps: &[u32]) -> f64 {
        self.terms.binary_search_by(|t| t.exps.as_slice().cmp(exps)).map(|i| self.terms[i].coeff).unwrap_or(0.0)
    }

    pub fn constant_term(&self) -> f64 {
        self.coeff(&vec![0; self.nvars])
    }

    /// Coefficient of `x_j` in the linear part.
    pub fn linear_coeff(&self, j: usize) -> f64 {
        let mut e = vec![0; self.nvars];
        e[j] = 1;
        self.coeff(&e)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert!(x.len() >= self.nvars);
        let mut acc = 0.0;
        for t in &self.terms {
            let mut v = t.coeff;
            for (xi, &e) in x.iter().zip(&t.exps) {
                match e {
                    0 => {}
                    1 => v *= xi,
                    2 => v *= xi * xi,
                    _ => v *= xi.powi(e as i32),
                }
            }
            acc += v;
        }
        acc
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_map(self.nvars, self.terms.iter().map(|t| (t.exps.clone(), t.coeff * s)).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.nvars, other.nvars);
        let mut map = self.to_map();
        for t in &other.terms {
            *map.entry(t.exps.clone()).or_insert(0.0) += t.coeff;
        }
        Self::from_map(self.nvars, map)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.nvars, other.nvars);
        let mut map: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for a in &self.terms {
            for b in &other.terms {
                let e: Vec<u32> = a.exps.iter().zip(&b.exps).map(|(x, y)| x + y).collect();
                *map.entry(e).or_insert(0.0) += a.coeff * b.coeff;
            }
        }
        Self::from_map(self.nvars, map)
    }

    /// Partial derivative with respect to `x_i`.
    pub fn derivative(&self, i: usize) -> Self {
        Self::from_map(
            self.nvars,
            self.terms
                .iter()
                .filter(|t| t.exps[i] > 0)
                .map(|t| {
                    let mut e = t.exps.clone();
                    e[i] -= 1;
                    (e, t.coeff * t.exps[i] as f64)
                })
                .collect(),
        )
    }

    /// Sets every variable not in `keep` to zero and renumbers the kept ones
    /// in the order given.
    pub fn project(&self, keep: &[usize]) -> Self {
        let map = self
            .terms
            .iter()
            .filter(|t| t.exps.iter().enumerate().all(|(j, &e)| e == 0 || keep.contains(&j)))
            .map(|t| (keep.iter().map(|&j| t.exps[j]).collect(), t.coeff))
            .fold(BTreeMap::new(), |mut m, (e, c): (Vec<u32>, f64)| {
                *m.entry(e).or_insert(0.0) += c;
                m
            });
        Self::from_map(keep.len(), map)
    }

    /// Relabels variables: variable `j` of `self` becomes variable `perm[j]`
    /// of the result, which has `nvars` variables.
    pub fn embed(&self, nvars: usize, perm: &[usize]) -> Self {
        Self::from_map(
            nvars,
            self.terms
                .iter()
                .map(|t| {
                    let mut e = vec![0; nvars];
                    for (j, &p) in perm.iter().enumerate() {
                        e[p] = t.exps[j];
                    }
                    (e, t.coeff)
                })
                .collect(),
        )
    }

    /// Parses a monomial such as `1`, `x2`, `x1^2*x3` (1-based variable names).
    pub fn parse_monomial(nvars: usize, s: &str) -> Result<Vec<u32>> {
        let mut exps = vec![0u32; nvars];
        let s = s.trim();
        if s == "1" {
            return Ok(exps);
        }
        for factor in s.split('*') {
            let factor = factor.trim();
            let (var, pow) = match factor.split_once('^') {
                Some((v, p)) => (
                    v.trim(),
                    p.trim()
                        .parse::<u32>()
                        .map_err(|_| PdmpError::InvalidModel(format!("bad exponent in monomial `{s}`")))?,
                ),
                None => (factor, 1),
            };
            let idx = var
                .strip_prefix('x')
                .and_then(|d| d.parse::<usize>().ok())
                .filter(|&i| i >= 1 && i <= nvars)
                .ok_or_else(|| PdmpError::InvalidModel(format!("bad variable `{var}` in monomial `{s}`")))?;
            exps[idx - 1] += pow;
        }
        Ok(exps)
    }

    pub fn format_monomial(exps: &[u32]) -> String {
        let parts: Vec<String> = exps
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > 0)
            .map(|(j, &e)| if e == 1 { format!("x{}", j + 1) } else { format!("x{}^{}", j + 1, e) })
            .collect();
        if parts.is_empty() {
            "1".to_string()
        } else {
            parts.join("*")
        }
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{}*{}", t.coeff, Self::format_monomial(&t.exps))?;
        }
        Ok(())
    }
}

/// A polynomial vector field on R^n.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyField {
    pub comps: Vec<Polynomial>,
}

impl PolyField {
    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.comps.iter().map(|p| p.eval(x)).collect()
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { comps: self.comps.iter().zip(&other.comps).map(|(a, b)| a.sub(b)).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(Polynomial::is_zero)
    }

    /// Jacobian entries `D[i][j] = d comp_i / d x_j`.
    pub fn jacobian(&self) -> Vec<Vec<Polynomial>> {
        let n = self.dim();
        self.comps.iter().map(|p| (0..n).map(|j| p.derivative(j)).collect()).collect()
    }

    /// Lie bracket `[self, w] = Dw self - Dself w`.
    pub fn bracket(&self, w: &Self) -> Self {
        let n = self.dim();
        let dv = self.jacobian();
        let dw = w.jacobian();
        let comps = (0..n)
            .map(|i| {
                let mut acc = Polynomial::zero(n);
                for j in 0..n {
                    acc = acc.add(&dw[i][j].mul(&self.comps[j]));
                    acc = acc.sub(&dv[i][j].mul(&w.comps[j]));
                }
                acc
            })
            .collect();
        Self { comps }
    }
}
