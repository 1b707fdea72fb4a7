//! Closed-form and semi-analytic objects: stationary switching laws,
//! one-dimensional invariant densities, interior means from linear solves
//! and invasion rates against boundary measures.

mod density;
pub mod quad;
mod stationary;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{PdmpError, Result};
use crate::measure::{time_average_se, Estimate};
use crate::model::{ModelSpec, SubspaceIndex, SwitchKind};
use crate::simulate::{simulate, SimConfig, Trajectory};

pub use density::{
    density_1d_logistic, density_for_face, density_lv_boundary, integrate_density, ClosedFormDensity, DensityKind,
    DensityParams,
};
pub use stationary::{stationary_residual, stationary_switch};

/// How an ergodic measure on a face is represented.
#[derive(Clone, Debug)]
pub enum Representation {
    /// `delta_x (x) nu`; `x` is a full state vector.
    PointMass { x: Vec<f64>, nu: Vec<f64> },
    /// One positive species `species` with a closed-form density.
    Density { species: usize, density: ClosedFormDensity },
    /// Means of the face's species, in the face's order.
    Means { means: Vec<f64> },
    /// A trajectory of the model restricted to the face. Its coordinates are
    /// the face's species in increasing order.
    MonteCarlo { trajectory: Arc<Trajectory>, burn_in: f64 },
}

impl Representation {
    pub fn method(&self) -> Method {
        match self {
            Representation::PointMass { .. } => Method::PointMass,
            Representation::Density { .. } => Method::Density,
            Representation::Means { .. } => Method::Means,
            Representation::MonteCarlo { .. } => Method::MonteCarlo,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    PointMass,
    Density,
    Means,
    MonteCarlo,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::PointMass => "point_mass",
            Method::Density => "density",
            Method::Means => "means",
            Method::MonteCarlo => "monte_carlo",
        }
    }
}

/// An ergodic measure supported on the interior of face `face`.
#[derive(Clone, Debug)]
pub struct BoundaryMeasureRep {
    pub face: SubspaceIndex,
    pub repr: Representation,
}

/// Settings for Monte Carlo fallbacks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloConfig {
    pub t_max: f64,
    pub burn_in: f64,
    pub seed: u64,
    /// Initial value of every species on the face.
    pub x0: f64,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self { t_max: 2e4, burn_in: 2e3, seed: 1, x0: 1.0 }
    }
}

fn constant_nu(model: &ModelSpec) -> Result<Vec<f64>> {
    match model.switch().constant_matrix() {
        Some(q) => stationary_switch(&q),
        None => Err(PdmpError::Unsupported("switching rates depend on the state".into())),
    }
}

fn face_in(model: &ModelSpec, face: &SubspaceIndex) -> Result<()> {
    match face.members().last() {
        Some(&m) if m >= model.n() => Err(PdmpError::DimensionMismatch { expected: model.n(), got: m + 1 }),
        _ => Ok(()),
    }
}

/// Solves `A m = lambda0` for the means of a face with competitive
/// convention `f_i = lambda0_i - (A m)_i` on average.
pub fn solve_means(a: &[Vec<f64>], lambda0: &[f64]) -> Result<Vec<f64>> {
    let d = lambda0.len();
    if a.len() != d || a.iter().any(|r| r.len() != d) {
        return Err(PdmpError::DimensionMismatch { expected: d, got: a.len() });
    }
    if d == 0 {
        return Ok(Vec::new());
    }
    let m = DMatrix::from_fn(d, d, |i, j| a[i][j]);
    let scale: f64 = (0..d).map(|i| m.row(i).norm()).product();
    let lu = m.lu();
    if scale == 0.0 || lu.determinant().abs() <= 1e-12 * scale {
        return Err(PdmpError::SingularInteraction);
    }
    let sol = lu.solve(&DVector::from_column_slice(lambda0)).ok_or(PdmpError::SingularInteraction)?;
    let out: Vec<f64> = sol.iter().copied().collect();
    if let Some((i, v)) = out.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
        return Err(PdmpError::InfeasibleMeans(format!("mean of species {} would be {v}", i + 1)));
    }
    Ok(out)
}

/// Mean of each species of `face` under the interior measure of that face,
/// for models whose interactions do not switch.
pub fn interior_means(model: &ModelSpec, face: &SubspaceIndex) -> Result<Vec<f64>> {
    face_in(model, face)?;
    let (intercepts, inter) = model
        .constant_interactions()
        .ok_or_else(|| PdmpError::Unsupported("interactions switch with the environment".into()))?;
    let nu = constant_nu(model)?;
    let idx = face.members();
    let lambda0: Vec<f64> = idx.iter().map(|&i| (0..nu.len()).map(|k| nu[k] * intercepts[k][i]).sum()).collect();
    let a: Vec<Vec<f64>> = idx.iter().map(|&i| idx.iter().map(|&j| -inter[i][j]).collect()).collect();
    solve_means(&a, &lambda0)
}

/// Per-capita growth rate of species `j` averaged against the measure.
/// Exact methods report a zero standard error.
pub fn boundary_lambda(model: &ModelSpec, rep: &BoundaryMeasureRep, j: usize) -> Result<Estimate> {
    face_in(model, &rep.face)?;
    if j >= model.n() {
        return Err(PdmpError::DimensionMismatch { expected: model.n(), got: j + 1 });
    }
    let exact = |value| Ok(Estimate { value, se: 0.0 });
    let mut f = vec![0.0; model.n()];
    match &rep.repr {
        Representation::PointMass { x, nu } => {
            if x.len() != model.n() || nu.len() != model.n0() {
                return Err(PdmpError::DimensionMismatch { expected: model.n(), got: x.len() });
            }
            let mut acc = 0.0;
            for (k, &w) in nu.iter().enumerate() {
                model.fitness_into(x, k, &mut f);
                acc += w * f[j];
            }
            exact(acc)
        }
        Representation::Density { species, density } => {
            if model.n0() != 2 || rep.face.members() != [*species] {
                return Err(PdmpError::DimensionMismatch { expected: 1, got: rep.face.len() });
            }
            let f = std::cell::RefCell::new(f);
            let x_cell = std::cell::RefCell::new(vec![0.0; model.n()]);
            let g = |s: f64, k: usize| {
                let mut x = x_cell.borrow_mut();
                x[*species] = s;
                let mut f = f.borrow_mut();
                model.fitness_into(&x, k, &mut f);
                f[j]
            };
            exact(integrate_density(density, &g)?)
        }
        Representation::Means { means } => {
            if means.len() != rep.face.len() {
                return Err(PdmpError::DimensionMismatch { expected: rep.face.len(), got: means.len() });
            }
            let (intercepts, inter) = model
                .constant_interactions()
                .ok_or_else(|| PdmpError::Unsupported("interactions switch with the environment".into()))?;
            let nu = constant_nu(model)?;
            let base: f64 = (0..nu.len()).map(|k| nu[k] * intercepts[k][j]).sum();
            let lin: f64 = rep.face.members().iter().zip(means).map(|(&i, m)| inter[j][i] * m).sum();
            exact(base + lin)
        }
        Representation::MonteCarlo { trajectory, burn_in } => {
            if trajectory.n != rep.face.len() {
                return Err(PdmpError::DimensionMismatch { expected: rep.face.len(), got: trajectory.n });
            }
            let idx = rep.face.members();
            let cell = std::cell::RefCell::new((vec![0.0; model.n()], f));
            time_average_se(trajectory, *burn_in, |y, k| {
                let mut c = cell.borrow_mut();
                let (x, f) = &mut *c;
                for (&i, &v) in idx.iter().zip(y) {
                    x[i] = v;
                }
                model.fitness_into(x, k, f);
                f[j]
            })
        }
    }
}

/// Affine coefficients `(a[k], b[k])` of `f_s(x e_s, k) = a[k] - b[k] x`.
fn axis_affine(model: &ModelSpec, s: usize) -> Option<(Vec<f64>, Vec<f64>)> {
    let keep = SubspaceIndex::new([model.labels()[s]]);
    let face = model.restrict(&keep).ok()?;
    let mut a = Vec::new();
    let mut b = Vec::new();
    for f in face.fields() {
        let p = &f.fitness[0];
        if p.degree() > 1 {
            return None;
        }
        a.push(p.constant_term());
        b.push(-p.linear_coeff(0));
    }
    Some((a, b))
}

/// Best available representation of the interior measure of `face`,
/// assuming it exists: a point mass at the origin, a closed-form density on
/// a species axis, means under constant interactions, and otherwise a
/// trajectory of the restricted model.
pub fn represent_face(model: &ModelSpec, face: &SubspaceIndex, mc: &MonteCarloConfig) -> Result<BoundaryMeasureRep> {
    face_in(model, face)?;
    let rep = |repr| Ok(BoundaryMeasureRep { face: face.clone(), repr });
    if face.is_empty() {
        let x = vec![0.0; model.n()];
        let nu = stationary_switch(&model.rate_matrix(&x)?)?;
        return rep(Representation::PointMass { x, nu });
    }
    let constant = model.switch().kind() == SwitchKind::ConstantMatrix;
    if face.len() == 1 && constant && model.n0() == 2 {
        let s = face.members()[0];
        if let Some((a, b)) = axis_affine(model, s) {
            let q = model.switch().constant_matrix().unwrap_or_default();
            let nu = stationary_switch(&q)?;
            let lambda0 = nu[0] * a[0] + nu[1] * a[1];
            if lambda0 <= 0.0 {
                return Err(PdmpError::NoInteriorMeasure(format!(
                    "species {} has growth rate {lambda0} at the origin",
                    s + 1
                )));
            }
            if let Some(d) = density_for_face([a[0], a[1]], [b[0], b[1]], q[0][1], q[1][0]) {
                let d = d?;
                if let Some(p) = d.point() {
                    let mut x = vec![0.0; model.n()];
                    x[s] = p;
                    return rep(Representation::PointMass { x, nu: vec![d.masses.0, d.masses.1] });
                }
                return rep(Representation::Density { species: s, density: d });
            }
        }
    }
    if constant && model.constant_interactions().is_some() {
        return rep(Representation::Means { means: interior_means(model, face)? });
    }
    let labels = SubspaceIndex::new(face.members().iter().map(|&c| model.labels()[c]));
    let sub = model.restrict(&labels)?;
    let cfg = SimConfig::new(mc.t_max, mc.seed);
    let traj = simulate(&sub, &vec![mc.x0; face.len()], 0, &cfg)?;
    rep(Representation::MonteCarlo { trajectory: Arc::new(traj), burn_in: mc.burn_in })
}

#[cfg(test)]
mod tests;
