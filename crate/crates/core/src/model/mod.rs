//! Kolmogorov PDMP models: `dx_i/dt = x_i f_i(x, k)` with a switching
//! environment `k` driven by rates `q_kl(x)`.
//!
//! Species and environments are 0-based in the API. File formats and
//! printed labels are 1-based.

mod families;
mod gauge;
mod switch;
pub(crate) mod validate;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{PdmpError, Result};
use crate::poly::{PolyField, Polynomial};

pub use families::{param_key, FamilyParams};
pub use gauge::{GaugeFunction, GaugeKind};
pub use switch::{RateFn, SwitchKind, SwitchLaw};
pub use validate::{validate, CheckStatus, DissipationShell, ValidationReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FamilyTag {
    LV2Comp,
    PredPrey,
    Single1D,
    Expl2D,
    LV3Comp,
    FoodChain,
    Custom,
}

impl FamilyTag {
    pub fn name(self) -> &'static str {
        match self {
            FamilyTag::LV2Comp => "lv2comp",
            FamilyTag::PredPrey => "predprey",
            FamilyTag::Single1D => "single1d",
            FamilyTag::Expl2D => "expl2d",
            FamilyTag::LV3Comp => "lv3comp",
            FamilyTag::FoodChain => "foodchain",
            FamilyTag::Custom => "custom",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Some(match s.to_ascii_lowercase().as_str() {
            "lv2comp" => FamilyTag::LV2Comp,
            "predprey" => FamilyTag::PredPrey,
            "single1d" => FamilyTag::Single1D,
            "expl2d" => FamilyTag::Expl2D,
            "lv3comp" => FamilyTag::LV3Comp,
            "foodchain" => FamilyTag::FoodChain,
            "custom" => FamilyTag::Custom,
            _ => return None,
        })
    }
}

impl fmt::Display for FamilyTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Set of species kept positive; the others are held at zero.
///
/// Members are stored sorted and refer to species labels (0-based).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SubspaceIndex(Vec<usize>);

impl SubspaceIndex {
    pub fn new(members: impl IntoIterator<Item = usize>) -> Self {
        let mut v: Vec<usize> = members.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Self(v)
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn full(n: usize) -> Self {
        Self((0..n).collect())
    }

    /// Builds from 1-based labels.
    pub fn from_one_based(members: &[usize]) -> Result<Self> {
        if members.contains(&0) {
            return Err(PdmpError::InvalidConfig("species labels are 1-based".into()));
        }
        Ok(Self::new(members.iter().map(|m| m - 1)))
    }

    pub fn members(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn complement(&self, n: usize) -> Vec<usize> {
        (0..n).filter(|i| !self.contains(*i)).collect()
    }

    pub fn intersect(&self, other: &Self) -> Self {
        Self(self.0.iter().copied().filter(|i| other.contains(*i)).collect())
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.0.iter().all(|i| other.contains(*i))
    }

    /// Every subset of `{0..n}`, ordered by size then lexicographically.
    pub fn all_subsets(n: usize) -> Vec<Self> {
        let mut out: Vec<Self> =
            (0u64..(1u64 << n)).map(|mask| Self((0..n).filter(|i| mask & (1 << i) != 0).collect())).collect();
        out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.0.cmp(&b.0)));
        out
    }
}

impl fmt::Display for SubspaceIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (j, i) in self.0.iter().enumerate() {
            if j > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        write!(f, "}}")
    }
}

/// Fitness functions `f_i(., k)` of one environment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentField {
    pub fitness: Vec<Polynomial>,
}

impl EnvironmentField {
    /// `f_i(x) = a_i + sum_j m_ij x_j`.
    pub fn affine(intercepts: &[f64], interactions: &[Vec<f64>]) -> Self {
        Self { fitness: intercepts.iter().zip(interactions).map(|(&a, row)| Polynomial::affine(a, row)).collect() }
    }

    /// The drift `G_i = x_i f_i` as a polynomial field.
    pub fn drift_field(&self) -> PolyField {
        let n = self.fitness.len();
        PolyField { comps: self.fitness.iter().enumerate().map(|(i, f)| Polynomial::var(n, i).mul(f)).collect() }
    }
}

/// Complete description of a model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    n: usize,
    n0: usize,
    fields: Vec<EnvironmentField>,
    switch: SwitchLaw,
    gauge: Option<GaugeFunction>,
    family: FamilyTag,
    params: BTreeMap<String, f64>,
    /// Original species label of each coordinate (identity unless restricted).
    labels: Vec<usize>,
    /// Faces to consider when classifying a custom model.
    lattice: Option<Vec<SubspaceIndex>>,
}

impl ModelSpec {
    /// A custom polynomial model. `fields[k].fitness[i]` is `f_i(., k)`.
    pub fn custom(fields: Vec<EnvironmentField>, switch: SwitchLaw) -> Result<Self> {
        let n0 = fields.len();
        let n = fields.first().map_or(0, |f| f.fitness.len());
        let spec = Self {
            n,
            n0,
            fields,
            switch,
            gauge: None,
            family: FamilyTag::Custom,
            params: BTreeMap::new(),
            labels: (0..n).collect(),
            lattice: None,
        };
        spec.check_shape()?;
        Ok(spec)
    }

    fn check_shape(&self) -> Result<()> {
        if self.n0 == 0 {
            return Err(PdmpError::InvalidModel("at least one environment is required".into()));
        }
        if self.switch.n0() != self.n0 {
            return Err(PdmpError::DimensionMismatch { expected: self.n0, got: self.switch.n0() });
        }
        for f in &self.fields {
            if f.fitness.len() != self.n {
                return Err(PdmpError::DimensionMismatch { expected: self.n, got: f.fitness.len() });
            }
            for p in &f.fitness {
                if p.nvars() != self.n {
                    return Err(PdmpError::DimensionMismatch { expected: self.n, got: p.nvars() });
                }
                if self.family == FamilyTag::Custom && p.degree() > 3 {
                    return Err(PdmpError::InvalidModel("custom fitness polynomials are limited to degree 3".into()));
                }
                if p.terms().iter().any(|t| !t.coeff.is_finite()) {
                    return Err(PdmpError::InvalidModel("non-finite fitness coefficient".into()));
                }
            }
        }
        if let Some(g) = &self.gauge {
            if g.n0() != self.n0 {
                return Err(PdmpError::DimensionMismatch { expected: self.n0, got: g.n0() });
            }
        }
        Ok(())
    }

    pub fn with_gauge(mut self, gauge: Option<GaugeFunction>) -> Result<Self> {
        self.gauge = gauge;
        self.check_shape()?;
        Ok(self)
    }

    pub fn with_lattice(mut self, lattice: Option<Vec<SubspaceIndex>>) -> Result<Self> {
        if let Some(l) = &lattice {
            if l.iter().any(|s| s.members().iter().any(|&i| i >= self.n)) {
                return Err(PdmpError::InvalidModel("lattice subspace refers to a missing species".into()));
            }
        }
        self.lattice = lattice;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n0(&self) -> usize {
        self.n0
    }

    pub fn fields(&self) -> &[EnvironmentField] {
        &self.fields
    }

    pub fn switch(&self) -> &SwitchLaw {
        &self.switch
    }

    pub fn gauge(&self) -> Option<&GaugeFunction> {
        self.gauge.as_ref()
    }

    pub fn family(&self) -> FamilyTag {
        self.family
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn param(&self, key: &str) -> Option<f64> {
        self.params.get(key).copied()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn lattice(&self) -> Option<&[SubspaceIndex]> {
        self.lattice.as_deref()
    }

    fn check_point(&self, x: &[f64], k: usize) -> Result<()> {
        if k >= self.n0 {
            return Err(PdmpError::EnvOutOfRange { k: k + 1, n0: self.n0 });
        }
        if x.len() != self.n {
            return Err(PdmpError::DimensionMismatch { expected: self.n, got: x.len() });
        }
        if let Some((index, &value)) = x.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
            return Err(PdmpError::NegativeState { index: index + 1, value });
        }
        Ok(())
    }

    /// `(f_1(x,k), ..., f_n(x,k))`.
    pub fn fitness(&self, x: &[f64], k: usize) -> Result<Vec<f64>> {
        self.check_point(x, k)?;
        let mut out = vec![0.0; self.n];
        self.fitness_into(x, k, &mut out);
        Ok(out)
    }

    /// Unchecked fitness evaluation for hot loops. `x` may be any real vector.
    #[inline]
    pub fn fitness_into(&self, x: &[f64], k: usize, out: &mut [f64]) {
        for (o, p) in out.iter_mut().zip(&self.fields[k].fitness) {
            *o = p.eval(x);
        }
    }

    /// `(x_1 f_1(x,k), ..., x_n f_n(x,k))`.
    pub fn drift(&self, x: &[f64], k: usize) -> Result<Vec<f64>> {
        let mut f = self.fitness(x, k)?;
        for (fi, xi) in f.iter_mut().zip(x) {
            *fi *= xi;
        }
        Ok(f)
    }

    /// Full generator matrix `Q(x)` with `q_kk = -sum_{l != k} q_kl`.
    pub fn rate_matrix(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        if x.len() != self.n {
            return Err(PdmpError::DimensionMismatch { expected: self.n, got: x.len() });
        }
        let mut q = vec![vec![0.0; self.n0]; self.n0];
        for k in 0..self.n0 {
            let mut s = 0.0;
            for l in 0..self.n0 {
                if l != k {
                    q[k][l] = self.switch.rate(x, k, l)?;
                    s += q[k][l];
                }
            }
            q[k][k] = -s;
        }
        Ok(q)
    }

    /// The model on the face where only species in `keep` (by label) are
    /// positive. Labels absent from the model are ignored, so restricting
    /// twice equals restricting once to the intersection. Restricting to
    /// every species returns the model unchanged.
    pub fn restrict(&self, keep: &SubspaceIndex) -> Result<Self> {
        let coords: Vec<usize> = (0..self.n).filter(|&j| keep.contains(self.labels[j])).collect();
        if coords.len() == self.n {
            return Ok(self.clone());
        }
        let fields = self
            .fields
            .iter()
            .map(|f| EnvironmentField { fitness: coords.iter().map(|&i| f.fitness[i].project(&coords)).collect() })
            .collect();
        Ok(Self {
            n: coords.len(),
            n0: self.n0,
            fields,
            switch: self.switch.project(self.n, &coords),
            gauge: self.gauge.as_ref().map(|g| g.project(&coords)),
            family: FamilyTag::Custom,
            params: BTreeMap::new(),
            labels: coords.iter().map(|&j| self.labels[j]).collect(),
            lattice: None,
        })
    }

    /// Relabels environments: environment `k` of the result is environment
    /// `perm[k]` of `self`.
    pub fn permute_envs(&self, perm: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.n0];
        if perm.len() != self.n0 || perm.iter().any(|&p| p >= self.n0 || std::mem::replace(&mut seen[p], true)) {
            return Err(PdmpError::InvalidConfig("environment permutation is invalid".into()));
        }
        let mut params = BTreeMap::new();
        for (key, &v) in &self.params {
            let new_key = match key.rsplit_once('_') {
                Some((base, env)) => match env.parse::<usize>() {
                    Ok(e) if e >= 1 && e <= self.n0 => {
                        let k = perm.iter().position(|&p| p == e - 1).unwrap();
                        format!("{base}_{}", k + 1)
                    }
                    _ => key.clone(),
                },
                None => key.clone(),
            };
            params.insert(new_key, v);
        }
        Ok(Self {
            fields: perm.iter().map(|&p| self.fields[p].clone()).collect(),
            switch: self.switch.permuted(perm),
            gauge: self.gauge.as_ref().map(|g| g.permuted(perm)),
            params,
            ..self.clone()
        })
    }

    /// Drift fields `G^k` as polynomials.
    pub fn drift_fields(&self) -> Vec<PolyField> {
        self.fields.iter().map(EnvironmentField::drift_field).collect()
    }

    /// If every fitness is affine with the same linear part in every
    /// environment, returns `(intercepts[k][i], interactions[i][j])` with
    /// `f_i(x,k) = intercepts[k][i] + sum_j interactions[i][j] x_j`.
    pub fn constant_interactions(&self) -> Option<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
        let n = self.n;
        let mut inter: Option<Vec<Vec<f64>>> = None;
        let mut intercepts = Vec::with_capacity(self.n0);
        for f in &self.fields {
            if f.fitness.iter().any(|p| p.degree() > 1) {
                return None;
            }
            let m: Vec<Vec<f64>> = f.fitness.iter().map(|p| (0..n).map(|j| p.linear_coeff(j)).collect()).collect();
            match &inter {
                None => inter = Some(m),
                Some(prev) if *prev == m => {}
                Some(_) => return None,
            }
            intercepts.push(f.fitness.iter().map(Polynomial::constant_term).collect());
        }
        Some((intercepts, inter.unwrap_or_default()))
    }

    /// Hex SHA-256 of the canonical JSON form. Custom rate closures are
    /// hashed by their debug placeholder.
    pub fn fingerprint(&self) -> String {
        let text = serde_json::to_string(self).unwrap_or_else(|_| format!("{self:?}"));
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
