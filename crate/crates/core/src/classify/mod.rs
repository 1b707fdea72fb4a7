//! Invasion-rate tables over the faces of the orthant, min-max persistence
//! weights and the resulting long-run verdict.

use serde::{Deserialize, Serialize};

use crate::analytic::{boundary_lambda, represent_face, Method, MonteCarloConfig};
use crate::error::{PdmpError, Result};
use crate::geometry::{bracket_span_rank, DEFAULT_DEPTH};
use crate::model::{FamilyTag, ModelSpec, SubspaceIndex};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifyConfig {
    pub mc: MonteCarloConfig,
    /// Monte Carlo signs count as resolved beyond this many standard errors.
    pub sign_se: f64,
    /// Monte Carlo horizons tried, doubling each time, before a sign is
    /// declared unresolved.
    pub mc_rounds: usize,
    /// Exact rates with magnitude below this are treated as zero.
    pub exact_tol: f64,
    pub bracket_depth: usize,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self {
            mc: MonteCarloConfig::default(),
            sign_se: 3.0,
            mc_rounds: 3,
            exact_tol: 1e-9,
            bracket_depth: DEFAULT_DEPTH,
        }
    }
}

/// One candidate ergodic measure supported on the interior of `face`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub face: SubspaceIndex,
    pub exists: bool,
    pub method: Option<Method>,
    /// `lambda_j` for every species `j`; empty when the measure is absent.
    pub lambdas: Vec<f64>,
    pub se: Vec<f64>,
    /// Species outside the face whose rate has no resolved sign.
    pub unresolved: Vec<usize>,
    pub note: Option<String>,
}

impl TableRow {
    fn absent(face: SubspaceIndex, note: String) -> Self {
        Self {
            face,
            exists: false,
            method: None,
            lambdas: Vec::new(),
            se: Vec::new(),
            unresolved: Vec::new(),
            note: Some(note),
        }
    }

    /// Sign of `lambda_j`, `None` when unresolved.
    pub fn sign(&self, j: usize) -> Option<f64> {
        (!self.unresolved.contains(&j)).then(|| self.lambdas[j].signum())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvasionTable {
    pub n: usize,
    pub rows: Vec<TableRow>,
}

impl InvasionTable {
    pub fn existing(&self) -> impl Iterator<Item = &TableRow> {
        self.rows.iter().filter(|r| r.exists)
    }

    pub fn row(&self, face: &SubspaceIndex) -> Option<&TableRow> {
        self.rows.iter().find(|r| &r.face == face)
    }
}

fn faces(model: &ModelSpec) -> Result<Vec<SubspaceIndex>> {
    let n = model.n();
    let mut out: Vec<SubspaceIndex> = match model.lattice() {
        Some(l) => l.to_vec(),
        None if model.family() == FamilyTag::Custom => {
            return Err(PdmpError::InvalidConfig("custom models must declare the faces to classify".into()))
        }
        None => SubspaceIndex::all_subsets(n),
    };
    out.retain(|f| f.len() < n);
    if !out.iter().any(SubspaceIndex::is_empty) {
        out.push(SubspaceIndex::empty());
    }
    out.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
    out.dedup();
    Ok(out)
}

fn measure_row(model: &ModelSpec, face: &SubspaceIndex, cfg: &ClassifyConfig) -> Result<TableRow> {
    let n = model.n();
    let mut mc = cfg.mc.clone();
    for round in 0..cfg.mc_rounds.max(1) {
        let rep = match represent_face(model, face, &mc) {
            Ok(r) => r,
            Err(e @ (PdmpError::NoInteriorMeasure(_) | PdmpError::InfeasibleMeans(_))) => {
                return Ok(TableRow::absent(face.clone(), e.to_string()))
            }
            Err(e) => return Err(e),
        };
        let method = rep.repr.method();
        let mut lambdas = Vec::with_capacity(n);
        let mut se = Vec::with_capacity(n);
        for j in 0..n {
            let e = boundary_lambda(model, &rep, j)?;
            lambdas.push(e.value);
            se.push(e.se);
        }
        let unresolved: Vec<usize> = (0..n)
            .filter(|&j| !face.contains(j))
            .filter(|&j| {
                let band = if method == Method::MonteCarlo { cfg.sign_se * se[j] } else { cfg.exact_tol };
                lambdas[j].abs() <= band
            })
            .collect();
        let last = method != Method::MonteCarlo || round + 1 == cfg.mc_rounds.max(1);
        if unresolved.is_empty() || last {
            let note = (method == Method::MonteCarlo).then(|| format!("t_max = {}", mc.t_max));
            return Ok(TableRow {
                face: face.clone(),
                exists: true,
                method: Some(method),
                lambdas,
                se,
                unresolved,
                note,
            });
        }
        mc.t_max *= 2.0;
        mc.burn_in *= 2.0;
    }
    unreachable!("the last round always returns")
}

/// Rates of every existing boundary measure, built bottom-up. A face
/// carries an interior measure when the measures on its own boundary can
/// be invaded jointly, that is when min-max weights restricted to the face
/// exist.
pub fn invasion_table(model: &ModelSpec, cfg: &ClassifyConfig) -> Result<InvasionTable> {
    let mut rows: Vec<TableRow> = Vec::new();
    for face in faces(model)? {
        let below: Vec<Vec<f64>> = rows
            .iter()
            .filter(|r| r.exists && r.face.is_subset(&face) && r.face != face)
            .map(|r| face.members().iter().map(|&i| r.lambdas[i]).collect())
            .collect();
        if !face.is_empty() && minmax_matrix(&below, face.len()).is_none() {
            rows.push(TableRow::absent(face, "boundary measures of the face are not invadable".into()));
            continue;
        }
        rows.push(measure_row(model, &face, cfg)?);
    }
    Ok(InvasionTable { n: model.n(), rows })
}

/// Weights `p` on the simplex and margin `rho = min_rows sum_i p_i lambda_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub p: Vec<f64>,
    pub rho: f64,
}

fn margin(rows: &[Vec<f64>], p: &[f64]) -> f64 {
    rows.iter().map(|r| r.iter().zip(p).map(|(a, b)| a * b).sum::<f64>()).fold(f64::INFINITY, f64::min)
}

fn compositions(n: usize, m: usize, f: &mut dyn FnMut(&[usize])) {
    fn rec(parts: &mut Vec<usize>, left: usize, n: usize, f: &mut dyn FnMut(&[usize])) {
        if parts.len() + 1 == n {
            parts.push(left);
            f(parts);
            parts.pop();
            return;
        }
        let room = left - (n - parts.len() - 1);
        for v in 1..=room {
            parts.push(v);
            rec(parts, left - v, n, f);
            parts.pop();
        }
    }
    rec(&mut Vec::with_capacity(n), m, n, f);
}

/// Grid search over strictly positive weights followed by pairwise
/// transfer refinement. `rows[r][i]` is `lambda_i` of measure `r`.
fn minmax_matrix(rows: &[Vec<f64>], n: usize) -> Option<Weights> {
    if n == 0 {
        return None;
    }
    if rows.is_empty() {
        return Some(Weights { p: vec![1.0 / n as f64; n], rho: f64::INFINITY });
    }
    let m = if n <= 3 { 200 } else { 24.max(n) };
    let mut best = (f64::NEG_INFINITY, vec![1.0 / n as f64; n]);
    let mut p = vec![0.0; n];
    compositions(n, m, &mut |parts| {
        for (pi, &c) in p.iter_mut().zip(parts) {
            *pi = c as f64 / m as f64;
        }
        let v = margin(rows, &p);
        if v > best.0 {
            best = (v, p.clone());
        }
    });
    let (mut rho, mut p) = best;
    let mut step = 1.0 / m as f64;
    while step > 1e-9 && n > 1 {
        let mut improved = false;
        for i in 0..n {
            for j in 0..n {
                if i == j || p[j] - step <= 0.0 {
                    continue;
                }
                let mut q = p.clone();
                q[i] += step;
                q[j] -= step;
                let v = margin(rows, &q);
                if v > rho {
                    (rho, p) = (v, q);
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (rho > 0.0).then_some(Weights { p, rho })
}

/// Positive weights making every existing boundary measure invadable on
/// average, if they exist.
pub fn minmax_weights(table: &InvasionTable) -> Option<Weights> {
    let rows: Vec<Vec<f64>> = table.existing().map(|r| r.lambdas.clone()).collect();
    minmax_matrix(&rows, table.n)
}

/// Face attracting nearby trajectories from outside while being persistent
/// within.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Attractor {
    pub face: SubspaceIndex,
    /// `"one"` or `"positive"`.
    pub probability: String,
    /// `(species, lambda)` for the species outside the face; each decays at
    /// this exponential rate.
    pub exterior_rates: Vec<(usize, f64)>,
    pub local_attraction: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "attractors")]
pub enum Outcome {
    PersistAll,
    ExtinctionTo(Vec<Attractor>),
    Inconclusive,
}

impl Outcome {
    pub fn label(&self) -> String {
        match self {
            Outcome::PersistAll => "PersistAll".into(),
            Outcome::ExtinctionTo(a) => {
                let faces: Vec<String> = a.iter().map(|a| a.face.to_string()).collect();
                format!("ExtinctionTo({})", faces.join(","))
            }
            Outcome::Inconclusive => "Inconclusive".into(),
        }
    }
}

/// Point where the bracket span is full.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BracketCertificate {
    pub point: Vec<f64>,
    pub rank: usize,
    pub depth: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub outcome: Outcome,
    pub weights: Option<Weights>,
    /// Set when the interior measure is unique and attracting in total
    /// variation, given accessibility of the certified point.
    pub bracket: Option<BracketCertificate>,
    pub qualifiers: Vec<String>,
    /// `(face, species)` entries whose sign could not be resolved.
    pub unresolved: Vec<(SubspaceIndex, usize)>,
}

/// Table and verdict, as written to JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub fingerprint: String,
    pub table: InvasionTable,
    pub verdict: Verdict,
}

fn certify_brackets(model: &ModelSpec, depth: usize) -> Result<Option<BracketCertificate>> {
    if model.n0() < 2 {
        return Ok(None);
    }
    for s in [1.0, 0.5, 2.0, 0.25, 4.0, 8.0, 0.1, 20.0] {
        let x: Vec<f64> = (0..model.n()).map(|i| s * (1.0 + 0.1 * i as f64)).collect();
        let b = bracket_span_rank(model, &x, depth)?;
        if b.full_rank() {
            return Ok(Some(BracketCertificate { point: x, rank: b.rank, depth: b.depth }));
        }
    }
    Ok(None)
}

/// Derives the verdict from a table.
pub fn verdict(model: &ModelSpec, table: &InvasionTable, cfg: &ClassifyConfig) -> Result<Verdict> {
    let n = table.n;
    let unresolved: Vec<(SubspaceIndex, usize)> =
        table.existing().flat_map(|r| r.unresolved.iter().map(move |&j| (r.face.clone(), j))).collect();
    let mut qualifiers = Vec::new();
    if let Some(w) = minmax_weights(table) {
        if unresolved.is_empty() {
            let bracket = certify_brackets(model, cfg.bracket_depth)?;
            if bracket.is_some() {
                qualifiers.push("unique interior invariant measure, assuming the certified point is accessible".into());
            }
            return Ok(Verdict { outcome: Outcome::PersistAll, weights: Some(w), bracket, qualifiers, unresolved });
        }
    }
    let exterior = |r: &TableRow| -> Vec<usize> { (0..n).filter(|&j| !r.face.contains(j)).collect() };
    let attractors: Vec<&TableRow> =
        table.existing().filter(|r| exterior(r).iter().all(|&j| r.sign(j) == Some(-1.0))).collect();
    let faces: Vec<&SubspaceIndex> = attractors.iter().map(|r| &r.face).collect();
    let rest: Vec<Vec<f64>> =
        table.existing().filter(|r| !faces.iter().any(|f| r.face.is_subset(f))).map(|r| r.lambdas.clone()).collect();
    let rest_unresolved =
        table.existing().filter(|r| !faces.iter().any(|f| r.face.is_subset(f))).any(|r| !r.unresolved.is_empty());
    let repelled = rest.is_empty() || minmax_matrix(&rest, n).is_some();
    if attractors.is_empty() || !repelled || rest_unresolved {
        if !unresolved.is_empty() {
            qualifiers.push("some invasion rates have unresolved signs".into());
        }
        return Ok(Verdict { outcome: Outcome::Inconclusive, weights: None, bracket: None, qualifiers, unresolved });
    }
    let probability = if attractors.len() == 1 { "one" } else { "positive" };
    if attractors.len() > 1 {
        qualifiers.push("each attractor is reached with positive probability when its face is accessible; the probabilities sum to one".into());
    }
    let outcome = Outcome::ExtinctionTo(
        attractors
            .iter()
            .map(|r| Attractor {
                face: r.face.clone(),
                probability: probability.into(),
                exterior_rates: exterior(r).into_iter().map(|j| (j, r.lambdas[j])).collect(),
                local_attraction: true,
            })
            .collect(),
    );
    Ok(Verdict { outcome, weights: None, bracket: None, qualifiers, unresolved })
}

pub fn classify(model: &ModelSpec, cfg: &ClassifyConfig) -> Result<Classification> {
    let table = invasion_table(model, cfg)?;
    let verdict = verdict(model, &table, cfg)?;
    Ok(Classification { fingerprint: model.fingerprint(), table, verdict })
}

#[cfg(test)]
mod tests;
