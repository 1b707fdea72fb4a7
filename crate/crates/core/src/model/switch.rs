use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{PdmpError, Result};
use crate::poly::Polynomial;

/// One off-diagonal switching intensity `q_kl(x)`.
#[derive(Clone, Serialize, Deserialize)]
pub enum RateFn {
    Constant(f64),
    /// `clamp(poly(x), lo, hi)`; e.g. `1 + min(x1, 1)` is `clamp(1 + x1, 1, 2)`.
    Clamped {
        poly: Polynomial,
        lo: f64,
        hi: f64,
    },
    /// Arbitrary bounded continuous intensity. Not serializable.
    #[serde(skip)]
    Custom(Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>),
}

impl RateFn {
    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            RateFn::Constant(c) => *c,
            RateFn::Clamped { poly, lo, hi } => poly.eval(x).clamp(*lo, *hi),
            RateFn::Custom(f) => f(x),
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            RateFn::Constant(c) => Some(*c),
            _ => None,
        }
    }

    /// Restricts to the coordinates in `keep` (others set to zero).
    pub fn project(&self, n: usize, keep: &[usize]) -> RateFn {
        match self {
            RateFn::Constant(c) => RateFn::Constant(*c),
            RateFn::Clamped { poly, lo, hi } => RateFn::Clamped { poly: poly.project(keep), lo: *lo, hi: *hi },
            RateFn::Custom(f) => {
                let f = Arc::clone(f);
                let keep = keep.to_vec();
                RateFn::Custom(Arc::new(move |y: &[f64]| {
                    let mut x = vec![0.0; n];
                    for (i, &j) in keep.iter().enumerate() {
                        x[j] = y[i];
                    }
                    f(&x)
                }))
            }
        }
    }
}

impl fmt::Debug for RateFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RateFn::Constant(c) => write!(f, "Constant({c})"),
            RateFn::Clamped { poly, lo, hi } => write!(f, "Clamped({poly}, {lo}, {hi})"),
            RateFn::Custom(_) => write!(f, "Custom(<fn>)"),
        }
    }
}

impl PartialEq for RateFn {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (RateFn::Constant(a), RateFn::Constant(b)) => a == b,
            (RateFn::Clamped { poly: p, lo: a, hi: b }, RateFn::Clamped { poly: q, lo: c, hi: d }) => {
                p == q && a == c && b == d
            }
            (RateFn::Custom(a), RateFn::Custom(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SwitchKind {
    /// Exponential holding times sampled directly.
    ConstantMatrix,
    /// Holding times sampled by thinning against `rate_bound`.
    StateDependent,
}

/// Switching intensities of the environment process.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwitchLaw {
    kind: SwitchKind,
    /// `entries[k][l]` for `k != l`; diagonal entries are ignored.
    entries: Vec<Vec<RateFn>>,
    rate_bound: Option<f64>,
    rate_floor: f64,
}

impl SwitchLaw {
    /// Constant rates from the off-diagonal part of `q` (diagonal ignored).
    pub fn constant(q: Vec<Vec<f64>>) -> Result<Self> {
        let n0 = q.len();
        if n0 == 0 || q.iter().any(|r| r.len() != n0) {
            return Err(PdmpError::InvalidModel("rate matrix must be square and non-empty".into()));
        }
        let mut floor = f64::INFINITY;
        for (k, row) in q.iter().enumerate() {
            for (l, &v) in row.iter().enumerate() {
                if k == l {
                    continue;
                }
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(PdmpError::InvalidModel(format!(
                        "rate q{}{} = {v} must be finite and nonnegative",
                        k + 1,
                        l + 1
                    )));
                }
                if v > 0.0 {
                    floor = floor.min(v);
                }
            }
        }
        let entries = q
            .into_iter()
            .enumerate()
            .map(|(k, row)| {
                row.into_iter().enumerate().map(|(l, v)| RateFn::Constant(if k == l { 0.0 } else { v })).collect()
            })
            .collect();
        Ok(Self {
            kind: SwitchKind::ConstantMatrix,
            entries,
            rate_bound: None,
            rate_floor: if floor.is_finite() { floor } else { 0.0 },
        })
    }

    pub fn two_state(q12: f64, q21: f64) -> Result<Self> {
        Self::constant(vec![vec![0.0, q12], vec![q21, 0.0]])
    }

    /// State-dependent rates sampled by thinning; `rate_bound` must dominate
    /// every row's total off-diagonal rate.
    pub fn state_dependent(entries: Vec<Vec<RateFn>>, rate_bound: f64, rate_floor: f64) -> Result<Self> {
        let n0 = entries.len();
        if n0 == 0 || entries.iter().any(|r| r.len() != n0) {
            return Err(PdmpError::InvalidModel("rate table must be square and non-empty".into()));
        }
        if !(rate_bound > 0.0) || !rate_bound.is_finite() {
            return Err(PdmpError::InvalidModel(format!("rate_bound must be positive, got {rate_bound}")));
        }
        for (k, row) in entries.iter().enumerate() {
            for (l, r) in row.iter().enumerate() {
                if k != l {
                    if let Some(c) = r.as_constant() {
                        if !(c >= 0.0) {
                            return Err(PdmpError::InvalidModel(format!("rate q{}{} = {c} is negative", k + 1, l + 1)));
                        }
                    }
                }
            }
        }
        Ok(Self { kind: SwitchKind::StateDependent, entries, rate_bound: Some(rate_bound), rate_floor })
    }

    pub fn n0(&self) -> usize {
        self.entries.len()
    }

    pub fn kind(&self) -> SwitchKind {
        self.kind
    }

    pub fn rate_bound(&self) -> Option<f64> {
        self.rate_bound
    }

    pub fn rate_floor(&self) -> f64 {
        self.rate_floor
    }

    pub fn entries(&self) -> &[Vec<RateFn>] {
        &self.entries
    }

    /// The constant generator, if every entry is constant.
    pub fn constant_matrix(&self) -> Option<Vec<Vec<f64>>> {
        let mut q = vec![vec![0.0; self.n0()]; self.n0()];
        for k in 0..self.n0() {
            for l in 0..self.n0() {
                if k != l {
                    q[k][l] = self.entries[k][l].as_constant()?;
                }
            }
            q[k][k] = -(0..self.n0()).filter(|&l| l != k).map(|l| q[k][l]).sum::<f64>();
        }
        Some(q)
    }

    /// Off-diagonal rate `q_kl(x)`; errors if negative.
    #[inline]
    pub fn rate(&self, x: &[f64], k: usize, l: usize) -> Result<f64> {
        let v = self.entries[k][l].eval(x);
        if v < 0.0 || v.is_nan() {
            return Err(PdmpError::InvalidModel(format!(
                "switch rate q{}{}(x) = {v} is negative at x = {x:?}",
                k + 1,
                l + 1
            )));
        }
        Ok(v)
    }

    /// Total rate of leaving `k` at `x`.
    pub fn exit_rate(&self, x: &[f64], k: usize) -> Result<f64> {
        let mut s = 0.0;
        for l in 0..self.n0() {
            if l != k {
                s += self.rate(x, k, l)?;
            }
        }
        Ok(s)
    }

    /// Rate-permuted copy: environment `k` of the result is environment
    /// `perm[k]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n0 = self.n0();
        let entries = (0..n0).map(|k| (0..n0).map(|l| self.entries[perm[k]][perm[l]].clone()).collect()).collect();
        Self { entries, ..self.clone() }
    }

    pub(crate) fn project(&self, n: usize, keep: &[usize]) -> Self {
        Self {
            entries: self.entries.iter().map(|row| row.iter().map(|r| r.project(n, keep)).collect()).collect(),
            ..self.clone()
        }
    }
}
