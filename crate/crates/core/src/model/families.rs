//! Built-in model families and their parameter tables.
//!
//! Parameter keys: `a1_2` is `a_1(2)` (species 1, environment 2). Food
//! chains use `a10_1` for the intercept `a_10(1)` and `a21` for the
//! constant interaction `a_21`.

use std::collections::BTreeMap;

use super::{EnvironmentField, FamilyTag, GaugeFunction, ModelSpec, SwitchLaw};
use crate::error::{PdmpError, Result};

/// `name{species}_{env}` with 1-based indices.
pub fn param_key(name: &str, species: usize, env: usize) -> String {
    format!("{name}{species}_{env}")
}

/// Named parameters for a built-in family, checked on `build`.
#[derive(Clone, Debug, PartialEq)]
pub struct FamilyParams {
    pub family: FamilyTag,
    pub n: usize,
    pub n0: usize,
    pub values: BTreeMap<String, f64>,
}

impl FamilyParams {
    pub fn new(family: FamilyTag, n: usize, n0: usize) -> Self {
        Self { family, n, n0, values: BTreeMap::new() }
    }

    /// Sets `name_i(k)` (1-based).
    pub fn set(mut self, name: &str, species: usize, env: usize, v: f64) -> Self {
        self.values.insert(param_key(name, species, env), v);
        self
    }

    /// Sets `name_i(k)` for every environment from a slice.
    pub fn per_env(mut self, name: &str, species: usize, vals: &[f64]) -> Self {
        for (k, &v) in vals.iter().enumerate() {
            self.values.insert(param_key(name, species, k + 1), v);
        }
        self
    }

    pub fn set_raw(mut self, key: &str, v: f64) -> Self {
        self.values.insert(key.to_string(), v);
        self
    }

    fn expected_n(&self) -> Option<usize> {
        match self.family {
            FamilyTag::LV2Comp | FamilyTag::PredPrey | FamilyTag::Expl2D => Some(2),
            FamilyTag::Single1D => Some(1),
            FamilyTag::LV3Comp => Some(3),
            FamilyTag::FoodChain | FamilyTag::Custom => None,
        }
    }

    /// Builds the model and attaches the family's default gauge.
    pub fn build(&self, switch: SwitchLaw) -> Result<ModelSpec> {
        if let Some(n) = self.expected_n() {
            if self.n != n {
                return Err(PdmpError::InvalidModel(format!(
                    "family {} has {} species, got n = {}",
                    self.family, n, self.n
                )));
            }
        }
        if self.n0 != switch.n0() {
            return Err(PdmpError::DimensionMismatch { expected: self.n0, got: switch.n0() });
        }
        if self.n0 == 0 {
            return Err(PdmpError::InvalidModel("at least one environment is required".into()));
        }
        let mut used = Lookup { params: &self.values, used: Vec::new() };
        let (fields, gauge) = match self.family {
            FamilyTag::LV2Comp => lv2(&mut used, self.n0, Sign::Competition, Positivity::Competitive)?,
            FamilyTag::PredPrey => lv2(&mut used, self.n0, Sign::PredPrey, Positivity::AllPositive)?,
            FamilyTag::Single1D => single1d(&mut used, self.n0)?,
            FamilyTag::Expl2D => expl2d(&mut used, self.n0)?,
            FamilyTag::LV3Comp => lv3(&mut used, self.n0)?,
            FamilyTag::FoodChain => food_chain(&mut used, self.n, self.n0)?,
            FamilyTag::Custom => {
                return Err(PdmpError::InvalidModel("custom models are built from polynomial tables".into()))
            }
        };
        if let Some(k) = self.values.keys().find(|k| !used.used.contains(k)) {
            return Err(PdmpError::InvalidModel(format!("unknown parameter `{k}` for family {}", self.family)));
        }
        let mut spec = ModelSpec::custom(fields, switch)?;
        spec.family = self.family;
        spec.params = self.values.clone();
        spec.with_gauge(Some(gauge))
    }
}

struct Lookup<'a> {
    params: &'a BTreeMap<String, f64>,
    used: Vec<String>,
}

impl Lookup<'_> {
    fn get(&mut self, key: &str) -> Option<f64> {
        let v = self.params.get(key).copied();
        if v.is_some() {
            self.used.push(key.to_string());
        }
        v
    }

    fn req(&mut self, key: &str) -> Result<f64> {
        let v = self.get(key).ok_or_else(|| PdmpError::InvalidModel(format!("missing parameter `{key}`")))?;
        if !v.is_finite() {
            return Err(PdmpError::InvalidModel(format!("parameter `{key}` = {v} is not finite")));
        }
        Ok(v)
    }

    fn positive(&mut self, key: &str) -> Result<f64> {
        let v = self.req(key)?;
        if v <= 0.0 {
            return Err(PdmpError::InvalidModel(format!("parameter `{key}` = {v} must be positive")));
        }
        Ok(v)
    }

    fn nonneg(&mut self, key: &str) -> Result<f64> {
        let v = self.req(key)?;
        if v < 0.0 {
            return Err(PdmpError::InvalidModel(format!("parameter `{key}` = {v} must be nonnegative")));
        }
        Ok(v)
    }

    fn nonneg_or_zero(&mut self, key: &str) -> Result<f64> {
        if self.params.contains_key(key) {
            self.nonneg(key)
        } else {
            Ok(0.0)
        }
    }
}

#[derive(Clone, Copy)]
enum Sign {
    Competition,
    PredPrey,
}

#[derive(Clone, Copy)]
enum Positivity {
    Competitive,
    AllPositive,
}

fn lv2(p: &mut Lookup, n0: usize, sign: Sign, pos: Positivity) -> Result<(Vec<EnvironmentField>, GaugeFunction)> {
    let mut fields = Vec::new();
    let mut weights = Vec::new();
    for k in 1..=n0 {
        let (a1, a2) = (p.positive(&param_key("a", 1, k))?, p.positive(&param_key("a", 2, k))?);
        let mut coef = |name: &str, i: usize| match pos {
            Positivity::Competitive => p.nonneg(&param_key(name, i, k)),
            Positivity::AllPositive => p.positive(&param_key(name, i, k)),
        };
        let (b1, b2, c1, c2) = (coef("b", 1)?, coef("b", 2)?, coef("c", 1)?, coef("c", 2)?);
        match sign {
            Sign::Competition => {
                fields.push(EnvironmentField::affine(&[a1, a2], &[vec![-b1, -c1], vec![-c2, -b2]]));
                weights.push(vec![1.0, 1.0]);
            }
            Sign::PredPrey => {
                fields.push(EnvironmentField::affine(&[a1, -a2], &[vec![-b1, -c1], vec![c2, -b2]]));
                weights.push(vec![c2, c1]);
            }
        }
    }
    let gauge = match sign {
        Sign::Competition => GaugeFunction::linear(vec![1.0; n0], 2),
        Sign::PredPrey => GaugeFunction::weighted(vec![1.0; n0], weights),
    };
    Ok((fields, gauge))
}

fn sqrt_gauge(n0: usize) -> GaugeFunction {
    GaugeFunction::sqrt_sum((0..n0).map(|k| if k == 0 { 1.0 } else { 0.5 }).collect())
}

fn single1d(p: &mut Lookup, n0: usize) -> Result<(Vec<EnvironmentField>, GaugeFunction)> {
    let mut fields = Vec::new();
    for k in 1..=n0 {
        let a = p.req(&param_key("a", 1, k))?;
        let b = p.nonneg_or_zero(&param_key("b", 1, k))?;
        fields.push(EnvironmentField::affine(&[a], &[vec![-b]]));
    }
    Ok((fields, sqrt_gauge(n0)))
}

fn expl2d(p: &mut Lookup, n0: usize) -> Result<(Vec<EnvironmentField>, GaugeFunction)> {
    if n0 < 2 {
        return Err(PdmpError::InvalidModel("expl2d needs at least two environments".into()));
    }
    let mut fields = Vec::new();
    let a11 = p.positive(&param_key("a", 1, 1))?;
    let a21 = p.positive(&param_key("a", 2, 1))?;
    fields.push(EnvironmentField::affine(&[a11, a21], &[vec![0.0, 0.0], vec![0.0, 0.0]]));
    for k in 2..=n0 {
        let a1 = p.req(&param_key("a", 1, k))?;
        let a2 = p.req(&param_key("a", 2, k))?;
        let b1 = p.positive(&param_key("b", 1, k))?;
        let b2 = p.positive(&param_key("b", 2, k))?;
        let c1 = p.nonneg(&param_key("c", 1, k))?;
        let c2 = p.nonneg(&param_key("c", 2, k))?;
        fields.push(EnvironmentField::affine(&[a1, a2], &[vec![-b1, -c1], vec![-c2, -b2]]));
    }
    Ok((fields, sqrt_gauge(n0)))
}

fn lv3(p: &mut Lookup, n0: usize) -> Result<(Vec<EnvironmentField>, GaugeFunction)> {
    let mut fields = Vec::new();
    for k in 1..=n0 {
        let mut a = [0.0; 3];
        let mut m = vec![vec![0.0; 3]; 3];
        for i in 0..3 {
            a[i] = p.positive(&param_key("a", i + 1, k))?;
            // b on itself, c on the next species, d on the previous one.
            m[i][i] = -p.positive(&param_key("b", i + 1, k))?;
            m[i][(i + 1) % 3] = -p.positive(&param_key("c", i + 1, k))?;
            m[i][(i + 2) % 3] = -p.positive(&param_key("d", i + 1, k))?;
        }
        fields.push(EnvironmentField::affine(&a, &m));
    }
    Ok((fields, GaugeFunction::linear(vec![1.0; n0], 3)))
}

fn food_chain(p: &mut Lookup, n: usize, n0: usize) -> Result<(Vec<EnvironmentField>, GaugeFunction)> {
    if !(2..=9).contains(&n) {
        return Err(PdmpError::InvalidModel(format!("food chains need 2 to 9 species, got {n}")));
    }
    let inter = |p: &mut Lookup, i: usize, j: usize| -> Result<f64> {
        let key = format!("a{i}{j}");
        if i == j {
            p.positive(&key)
        } else {
            p.nonneg(&key)
        }
    };
    let mut m = vec![vec![0.0; n]; n];
    for i in 1..=n {
        m[i - 1][i - 1] = -inter(p, i, i)?;
        if i > 1 {
            m[i - 1][i - 2] = inter(p, i, i - 1)?;
        }
        if i < n {
            m[i - 1][i] = -inter(p, i, i + 1)?;
        }
    }
    let mut fields = Vec::new();
    for k in 1..=n0 {
        let mut a = vec![0.0; n];
        a[0] = p.positive(&format!("a10_{k}"))?;
        for (i, ai) in a.iter_mut().enumerate().skip(1) {
            *ai = -p.nonneg(&format!("a{}0_{k}", i + 1))?;
        }
        fields.push(EnvironmentField::affine(&a, &m));
    }
    // Weights cancelling the predation cross terms in sum_i w_i x_i f_i.
    let mut w = vec![1.0; n];
    for i in 1..n {
        let up = -m[i - 1][i];
        let down = m[i][i - 1];
        w[i] = if up > 0.0 && down > 0.0 { w[i - 1] * up / down } else { 1.0 };
    }
    Ok((fields, GaugeFunction::weighted(vec![1.0; n0], vec![w; n0])))
}

impl ModelSpec {
    /// Builds a built-in family from a flat parameter table.
    pub fn from_family(family: FamilyTag, n: usize, params: BTreeMap<String, f64>, switch: SwitchLaw) -> Result<Self> {
        FamilyParams { family, n, n0: switch.n0(), values: params }.build(switch)
    }

    /// `f(x,k) = a[k] - b[k] x` with constant two-state rates.
    pub fn single1d(a: &[f64], b: &[f64], q12: f64, q21: f64) -> Result<Self> {
        FamilyParams::new(FamilyTag::Single1D, 1, a.len())
            .per_env("a", 1, a)
            .per_env("b", 1, b)
            .build(SwitchLaw::two_state(q12, q21)?)
    }
}
