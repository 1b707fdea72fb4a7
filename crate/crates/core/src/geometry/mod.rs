//! Lie brackets of the environment drift fields and the bracket span
//! test, plus closed-form determinants for the two-species families.

use serde::{Deserialize, Serialize};

use crate::error::{PdmpError, Result};
use crate::model::{param_key, FamilyTag, ModelSpec};
use crate::poly::PolyField;

/// Relative rank tolerance.
pub const RANK_TOL: f64 = 1e-9;
pub const DEFAULT_DEPTH: usize = 3;

/// Second argument of a bracket.
#[derive(Clone, Debug)]
pub enum FieldRef {
    Env(usize),
    Field(PolyField),
}

fn check_point(model: &ModelSpec, x: &[f64]) -> Result<()> {
    if x.len() != model.n() {
        return Err(PdmpError::DimensionMismatch { expected: model.n(), got: x.len() });
    }
    Ok(())
}

fn env_field(model: &ModelSpec, k: usize) -> Result<PolyField> {
    if k >= model.n0() {
        return Err(PdmpError::EnvOutOfRange { k, n0: model.n0() });
    }
    Ok(model.fields()[k].drift_field())
}

/// `[G^k, W](x)` with `[V, W] = DW V - DV W`, evaluated exactly from the
/// polynomial Jacobians.
pub fn lie_bracket(model: &ModelSpec, k: usize, l: &FieldRef, x: &[f64]) -> Result<Vec<f64>> {
    check_point(model, x)?;
    let v = env_field(model, k)?;
    let w = match l {
        FieldRef::Env(l) => env_field(model, *l)?,
        FieldRef::Field(w) => {
            if w.dim() != model.n() {
                return Err(PdmpError::DimensionMismatch { expected: model.n(), got: w.dim() });
            }
            w.clone()
        }
    };
    Ok(v.bracket(&w).eval(x))
}

/// `[V, W](x)` by central differences with step `1e-6 (1 + |x|)`.
pub fn lie_bracket_fd(v: &dyn Fn(&[f64]) -> Vec<f64>, w: &dyn Fn(&[f64]) -> Vec<f64>, x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h = 1e-6 * (1.0 + x.iter().map(|a| a * a).sum::<f64>().sqrt());
    let (vx, wx) = (v(x), w(x));
    let mut out = vec![0.0; n];
    let mut xp = x.to_vec();
    for j in 0..n {
        xp[j] = x[j] + h;
        let (vp, wp) = (v(&xp), w(&xp));
        xp[j] = x[j] - h;
        let (vm, wm) = (v(&xp), w(&xp));
        xp[j] = x[j];
        for i in 0..n {
            let dw = (wp[i] - wm[i]) / (2.0 * h);
            let dv = (vp[i] - vm[i]) / (2.0 * h);
            out[i] += dw * vx[j] - dv * wx[j];
        }
    }
    out
}

/// Vectors generated at a point by differences of drift fields and their
/// iterated brackets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BracketBasis {
    pub point: Vec<f64>,
    /// Bracket depth reached; less than requested if full rank came early.
    pub depth: usize,
    pub vectors: Vec<Vec<f64>>,
    /// Expression of each vector, e.g. `[G1,G1-G2]`.
    pub labels: Vec<String>,
    pub rank: usize,
    pub tolerance: f64,
    /// Closed-form determinant where the family has one.
    pub det: Option<f64>,
}

impl BracketBasis {
    pub fn full_rank(&self) -> bool {
        self.rank == self.point.len()
    }
}

/// Numerical rank by Gram-Schmidt with column pivoting. Columns whose
/// residual falls below `rel * max norm` are treated as dependent.
pub fn numerical_rank(vectors: &[Vec<f64>], rel: f64) -> (usize, f64) {
    let max_norm = vectors.iter().map(|v| norm(v)).fold(0.0, f64::max);
    let tol = rel * max_norm;
    if max_norm == 0.0 {
        return (0, tol);
    }
    let mut cols: Vec<Vec<f64>> = vectors.to_vec();
    let dim = vectors[0].len();
    let mut rank = 0;
    while rank < dim && !cols.is_empty() {
        let (best, nb) =
            cols.iter().enumerate().map(|(i, c)| (i, norm(c))).fold((0, -1.0), |a, b| if b.1 > a.1 { b } else { a });
        if nb <= tol {
            break;
        }
        let q: Vec<f64> = cols.swap_remove(best).iter().map(|v| v / nb).collect();
        for c in cols.iter_mut() {
            let d: f64 = c.iter().zip(&q).map(|(a, b)| a * b).sum();
            for (ci, qi) in c.iter_mut().zip(&q) {
                *ci -= d * qi;
            }
        }
        rank += 1;
    }
    (rank, tol)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Rank of the span of `G^i - G^j` and brackets `[G^i, V]` iterated up to
/// `depth` times, at `x`. Stops early once the span is full.
pub fn bracket_span_rank(model: &ModelSpec, x: &[f64], depth: usize) -> Result<BracketBasis> {
    check_point(model, x)?;
    let n = model.n();
    let fields = model.drift_fields();
    let mut polys: Vec<PolyField> = Vec::new();
    let mut labels = Vec::new();
    for i in 0..model.n0() {
        for j in i + 1..model.n0() {
            polys.push(fields[i].sub(&fields[j]));
            labels.push(format!("G{}-G{}", i + 1, j + 1));
        }
    }
    let mut vectors: Vec<Vec<f64>> = polys.iter().map(|p| p.eval(x)).collect();
    let (mut rank, mut tol) = numerical_rank(&vectors, RANK_TOL);
    let mut frontier: Vec<usize> = (0..polys.len()).collect();
    let mut reached = 0;
    while rank < n && reached < depth && !frontier.is_empty() {
        reached += 1;
        let mut next = Vec::new();
        for &f in &frontier {
            for (i, g) in fields.iter().enumerate() {
                let b = g.bracket(&polys[f]);
                if b.is_zero() {
                    continue;
                }
                labels.push(format!("[G{},{}]", i + 1, labels[f]));
                vectors.push(b.eval(x));
                polys.push(b);
                next.push(polys.len() - 1);
            }
        }
        frontier = next;
        (rank, tol) = numerical_rank(&vectors, RANK_TOL);
    }
    let det = if model.n() == 2 && model.n0() == 2 {
        match model.family() {
            FamilyTag::PredPrey => PredPreyCoefs::from_model(model).ok().map(|c| pp_det_m(&c, x)),
            // Absent when the environments were relabeled.
            FamilyTag::Expl2D => Expl2dCoefs::from_model(model).ok().map(|c| expl2d_det_m(&c, x)),
            _ => None,
        }
    } else {
        None
    };
    Ok(BracketBasis { point: x.to_vec(), depth: reached, vectors, labels, rank, tolerance: tol, det })
}

/// `det [V1 - V2, [V1, V1 - V2]]` at `x` for a two-species,
/// two-environment model.
pub fn direct_det(model: &ModelSpec, x: &[f64]) -> Result<f64> {
    if model.n() != 2 || model.n0() != 2 {
        return Err(PdmpError::Unsupported("the determinant test needs two species and two environments".into()));
    }
    check_point(model, x)?;
    let f = model.drift_fields();
    let w = f[0].sub(&f[1]);
    let (c1, c2) = (w.eval(x), f[0].bracket(&w).eval(x));
    Ok(c1[0] * c2[1] - c1[1] * c2[0])
}

/// Predator-prey coefficients; index 0 is environment 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredPreyCoefs {
    pub a1: [f64; 2],
    pub b1: [f64; 2],
    pub c1: [f64; 2],
    pub a2: [f64; 2],
    pub b2: [f64; 2],
    pub c2: [f64; 2],
}

fn family_param(model: &ModelSpec, name: &str, i: usize, k: usize) -> Result<f64> {
    let key = param_key(name, i, k);
    model.param(&key).ok_or_else(|| PdmpError::InvalidModel(format!("missing parameter `{key}`")))
}

fn pair(model: &ModelSpec, name: &str, i: usize) -> Result<[f64; 2]> {
    Ok([family_param(model, name, i, 1)?, family_param(model, name, i, 2)?])
}

impl PredPreyCoefs {
    pub fn from_model(model: &ModelSpec) -> Result<Self> {
        if model.family() != FamilyTag::PredPrey || model.n0() != 2 {
            return Err(PdmpError::Unsupported("not a two-environment predator-prey model".into()));
        }
        Ok(Self {
            a1: pair(model, "a", 1)?,
            b1: pair(model, "b", 1)?,
            c1: pair(model, "c", 1)?,
            a2: pair(model, "a", 2)?,
            b2: pair(model, "b", 2)?,
            c2: pair(model, "c", 2)?,
        })
    }

    /// `(D, E)` at `x`; both depend on `x` through the per-capita rates.
    pub fn d_e(&self, x: &[f64]) -> (f64, f64) {
        let Self { a1, b1, c1, a2, b2, c2 } = self;
        let p = |k: usize| a1[k] - b1[k] * x[0] - c1[k] * x[1];
        let q = |k: usize| -a2[k] - b2[k] * x[1] + c2[k] * x[0];
        let (p1, p2, q1, q2) = (p(0), p(1), q(0), q(1));
        let d = -c2[1] * ((p1 - p2 / 2.0).powi(2) + ((b1[0] / c2[1]) * (q2 - q1) * p2 - (p2 / 2.0).powi(2)))
            - c2[0] * ((p2 - p1 / 2.0).powi(2) + ((b1[1] / c2[0]) * (q1 - q2) * p1 - (p1 / 2.0).powi(2)));
        let e = -c1[1] * ((q1 - q2 / 2.0).powi(2) + ((b2[0] / c1[1]) * (p1 - p2) * q2 - (q2 / 2.0).powi(2)))
            - c1[0] * ((q2 - q1 / 2.0).powi(2) + ((b2[1] / c1[0]) * (p2 - p1) * q1 - (q1 / 2.0).powi(2)));
        (d, e)
    }
}

/// `D x1^2 x2 + E x1 x2^2`.
pub fn pp_det_m(c: &PredPreyCoefs, x: &[f64]) -> f64 {
    let (d, e) = c.d_e(x);
    d * x[0] * x[0] * x[1] + e * x[0] * x[1] * x[1]
}

/// Coefficients of the two-environment model with linear growth in
/// environment 1 and competition in environment 2.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Expl2dCoefs {
    pub a1: [f64; 2],
    pub a2: [f64; 2],
    pub b1: f64,
    pub c1: f64,
    pub b2: f64,
    pub c2: f64,
}

impl Expl2dCoefs {
    pub fn from_model(model: &ModelSpec) -> Result<Self> {
        if model.family() != FamilyTag::Expl2D || model.n0() != 2 {
            return Err(PdmpError::Unsupported("not a two-environment expl2d model".into()));
        }
        Ok(Self {
            a1: pair(model, "a", 1)?,
            a2: pair(model, "a", 2)?,
            b1: family_param(model, "b", 1, 2)?,
            c1: family_param(model, "c", 1, 2)?,
            b2: family_param(model, "b", 2, 2)?,
            c2: family_param(model, "c", 2, 2)?,
        })
    }

    /// `(A1, A2, B)`.
    pub fn coefficients(&self) -> (f64, f64, f64) {
        let Self { a1, a2, b1, c1, b2, c2 } = self;
        let big_a1 = (a1[0] - a1[1]) * a2[0] * b2 - a2[0] * c1 * (a2[0] - a2[1]);
        let big_a2 = (a1[0] - a1[1]) * a1[0] * c2 - a1[0] * b1 * (a2[0] - a2[1]);
        let big_b = (a2[0] - a1[0]) * b1 * b2 + (a1[0] - a2[0]) * c1 * c2;
        (big_a1, big_a2, big_b)
    }
}

/// `B x1^2 x2^2 + A1 x1 x2^2 + A2 x1^2 x2`.
pub fn expl2d_det_m(c: &Expl2dCoefs, x: &[f64]) -> f64 {
    let (a1, a2, b) = c.coefficients();
    let (x1, x2) = (x[0], x[1]);
    b * x1 * x1 * x2 * x2 + a1 * x1 * x2 * x2 + a2 * x1 * x1 * x2
}
