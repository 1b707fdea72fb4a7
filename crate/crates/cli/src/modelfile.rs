//! Reading and writing model files.
//!
//! The grammar is documented in the README. Parsing goes through a plain
//! `toml::Table` so unknown keys can be rejected with their line number.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::Path;

use pdmp::model::{FamilyTag, GaugeKind, RateFn, SwitchKind};
use pdmp::poly::Polynomial;
use pdmp::{EnvironmentField, FamilyParams, GaugeFunction, ModelSpec, PdmpError, SubspaceIndex, SwitchLaw};
use toml::{Table, Value};

/// A problem in a model file, located by section/key and line when possible.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFileError {
    pub line: Option<usize>,
    pub key: String,
    pub message: String,
}

impl fmt::Display for ModelFileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.key.is_empty()) {
            (Some(l), false) => write!(f, "line {l}, `{}`: {}", self.key, self.message),
            (Some(l), true) => write!(f, "line {l}: {}", self.message),
            (None, false) => write!(f, "`{}`: {}", self.key, self.message),
            (None, true) => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ModelFileError {}

type Res<T> = std::result::Result<T, ModelFileError>;

pub fn parse_model_file(path: &Path) -> Res<ModelSpec> {
    let src = std::fs::read_to_string(path).map_err(|e| ModelFileError {
        line: None,
        key: path.display().to_string(),
        message: format!("cannot read model file: {e}"),
    })?;
    parse_model_str(&src)
}

struct Ctx<'a> {
    src: &'a str,
}

impl Ctx<'_> {
    fn err(&self, section: &str, key: &str, message: impl Into<String>) -> ModelFileError {
        let full = if key.is_empty() { section.to_string() } else { format!("{section}.{key}") };
        ModelFileError { line: locate(self.src, section, key), key: full, message: message.into() }
    }

    fn model_err(&self, section: &str, e: PdmpError) -> ModelFileError {
        // Messages that name a parameter in backticks are located on that key.
        let msg = e.to_string();
        if let Some(name) = msg.split('`').nth(1) {
            for (s, k) in [("params".to_string(), name.to_string())].into_iter().chain(env_alias(name)) {
                if let Some(line) = locate(self.src, &s, &k) {
                    return ModelFileError { line: Some(line), key: format!("{s}.{k}"), message: msg };
                }
            }
        }
        self.err(section, "", msg)
    }
}

/// `a1_2` is written `"a.1"` in `[env.2]`.
fn env_alias(key: &str) -> Option<(String, String)> {
    let (head, env) = key.rsplit_once('_')?;
    let split = head.find(|c: char| c.is_ascii_digit())?;
    Some((format!("env.{env}"), format!("{}.{}", &head[..split], &head[split..])))
}

/// First line declaring `key` inside `[section]` (or the header itself).
fn locate(src: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (no, line) in src.lines().enumerate() {
        let t = line.trim();
        if t.starts_with('[') {
            current = t.trim_matches(|c| c == '[' || c == ']').replace(['"', ' '], "");
            if current == section && key.is_empty() {
                return Some(no + 1);
            }
            continue;
        }
        if current != section || key.is_empty() {
            continue;
        }
        let Some((lhs, _)) = t.split_once('=') else {
            continue;
        };
        if lhs.trim().trim_matches('"') == key {
            return Some(no + 1);
        }
    }
    None
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Float(f) => Some(*f),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

fn as_index(v: &Value) -> Option<usize> {
    match v {
        Value::Integer(i) if *i >= 1 => Some(*i as usize),
        _ => None,
    }
}

fn table<'t>(ctx: &Ctx, doc: &'t Table, name: &str) -> Res<Option<&'t Table>> {
    match doc.get(name) {
        None => Ok(None),
        Some(Value::Table(t)) => Ok(Some(t)),
        Some(_) => Err(ctx.err(name, "", "expected a table")),
    }
}

fn check_keys(ctx: &Ctx, section: &str, t: &Table, allowed: &[&str]) -> Res<()> {
    match t.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(ctx.err(section, k, format!("unknown key (expected one of {})", allowed.join(", ")))),
        None => Ok(()),
    }
}

fn number(ctx: &Ctx, section: &str, t: &Table, key: &str) -> Res<Option<f64>> {
    match t.get(key) {
        None => Ok(None),
        Some(v) => as_f64(v).map(Some).ok_or_else(|| ctx.err(section, key, "expected a number")),
    }
}

fn number_list(ctx: &Ctx, section: &str, key: &str, v: &Value) -> Res<Vec<f64>> {
    let arr = v.as_array().ok_or_else(|| ctx.err(section, key, "expected an array of numbers"))?;
    arr.iter().map(|x| as_f64(x).ok_or_else(|| ctx.err(section, key, "expected an array of numbers"))).collect()
}

fn matrix(ctx: &Ctx, section: &str, key: &str, v: &Value) -> Res<Vec<Vec<f64>>> {
    let arr = v.as_array().ok_or_else(|| ctx.err(section, key, "expected an array of rows"))?;
    arr.iter().map(|row| number_list(ctx, section, key, row)).collect()
}

fn polynomial(ctx: &Ctx, section: &str, key: &str, n: usize, v: &Value) -> Res<Polynomial> {
    let bad = || ctx.err(section, key, "expected a list of [monomial, coefficient] pairs");
    let arr = v.as_array().ok_or_else(bad)?;
    let mut terms = Vec::new();
    for pair in arr {
        let p = pair.as_array().filter(|p| p.len() == 2).ok_or_else(bad)?;
        let mono = p[0].as_str().ok_or_else(bad)?;
        let c = as_f64(&p[1]).ok_or_else(bad)?;
        let exps = Polynomial::parse_monomial(n, mono).map_err(|e| ctx.err(section, key, e.to_string()))?;
        terms.push((exps, c));
    }
    Ok(Polynomial::from_terms(n, terms))
}

struct Header {
    family: FamilyTag,
    n: Option<usize>,
    n0: Option<usize>,
    lattice: Option<Vec<SubspaceIndex>>,
}

fn parse_header(ctx: &Ctx, doc: &Table) -> Res<Header> {
    let t = table(ctx, doc, "model")?.ok_or_else(|| ctx.err("model", "", "missing [model] section"))?;
    check_keys(ctx, "model", t, &["family", "n", "n0", "lattice"])?;
    let name = t
        .get("family")
        .ok_or_else(|| ctx.err("model", "", "missing key `family`"))?
        .as_str()
        .ok_or_else(|| ctx.err("model", "family", "expected a string"))?;
    let family = FamilyTag::from_name(name).ok_or_else(|| {
        ctx.err(
            "model",
            "family",
            format!("unknown family `{name}` (lv2comp, predprey, single1d, expl2d, lv3comp, foodchain, custom)"),
        )
    })?;
    let count = |key: &str| -> Res<Option<usize>> {
        t.get(key).map(|v| as_index(v).ok_or_else(|| ctx.err("model", key, "expected a positive integer"))).transpose()
    };
    let lattice = match t.get("lattice") {
        None => None,
        Some(v) => {
            let bad = || ctx.err("model", "lattice", "expected a list of species lists (1-based)");
            let faces = v.as_array().ok_or_else(bad)?;
            let mut out = Vec::new();
            for f in faces {
                let members = f.as_array().ok_or_else(bad)?;
                let idx: Vec<usize> = members.iter().map(|m| as_index(m).ok_or_else(bad)).collect::<Res<_>>()?;
                out.push(SubspaceIndex::from_one_based(&idx).map_err(|e| ctx.err("model", "lattice", e.to_string()))?);
            }
            Some(out)
        }
    };
    Ok(Header { family, n: count("n")?, n0: count("n0")?, lattice })
}

fn family_species(family: FamilyTag) -> Option<usize> {
    match family {
        FamilyTag::LV2Comp | FamilyTag::PredPrey | FamilyTag::Expl2D => Some(2),
        FamilyTag::Single1D => Some(1),
        FamilyTag::LV3Comp => Some(3),
        FamilyTag::FoodChain | FamilyTag::Custom => None,
    }
}

/// `[env.k]` tables keyed by their 1-based environment index.
fn env_tables<'t>(ctx: &Ctx, doc: &'t Table) -> Res<BTreeMap<usize, &'t Table>> {
    let mut out = BTreeMap::new();
    if let Some(env) = table(ctx, doc, "env")? {
        for (k, v) in env {
            let idx = k.parse::<usize>().ok().filter(|&i| i >= 1).ok_or_else(|| {
                ctx.err(&format!("env.{k}"), "", "environment sections are named [env.1], [env.2], ...")
            })?;
            let t = v.as_table().ok_or_else(|| ctx.err(&format!("env.{k}"), "", "expected a table"))?;
            out.insert(idx, t);
        }
    }
    Ok(out)
}

/// Splits `"a.12"` into `("a", 12)`.
fn split_env_key(key: &str) -> Option<(&str, usize)> {
    let (name, i) = key.split_once('.')?;
    let i = i.parse::<usize>().ok()?;
    (!name.is_empty() && name.chars().all(|c| c.is_ascii_alphabetic())).then_some((name, i))
}

fn custom_species(ctx: &Ctx, envs: &BTreeMap<usize, &Table>) -> Res<usize> {
    let mut n = 0;
    for (k, t) in envs {
        for key in t.keys() {
            match split_env_key(key) {
                Some(("poly", i)) if i >= 1 => n = n.max(i),
                _ => return Err(ctx.err(&format!("env.{k}"), key, "custom models use `poly.i` keys")),
            }
        }
    }
    if n == 0 {
        return Err(ctx.err("env", "", "custom models need `poly.i` entries in [env.k] sections"));
    }
    Ok(n)
}

fn custom_fields(ctx: &Ctx, envs: &BTreeMap<usize, &Table>, n: usize, n0: usize) -> Res<Vec<EnvironmentField>> {
    let mut fields = Vec::new();
    for k in 1..=n0 {
        let section = format!("env.{k}");
        let t = envs.get(&k).ok_or_else(|| ctx.err(&section, "", format!("missing [{section}] section")))?;
        let mut fitness = vec![Polynomial::zero(n); n];
        for (key, v) in t.iter() {
            let i = split_env_key(key)
                .map(|(_, i)| i)
                .filter(|&i| i <= n)
                .ok_or_else(|| ctx.err(&section, key, format!("species index out of range (n = {n})")))?;
            fitness[i - 1] = polynomial(ctx, &section, key, n, v)?;
        }
        fields.push(EnvironmentField { fitness });
    }
    Ok(fields)
}

fn family_params(ctx: &Ctx, doc: &Table, envs: &BTreeMap<usize, &Table>) -> Res<BTreeMap<String, f64>> {
    let mut values = BTreeMap::new();
    if let Some(t) = table(ctx, doc, "params")? {
        for (key, v) in t {
            let x = as_f64(v).ok_or_else(|| ctx.err("params", key, "expected a number"))?;
            values.insert(key.clone(), x);
        }
    }
    for (k, t) in envs {
        let section = format!("env.{k}");
        for (key, v) in t.iter() {
            let (name, i) = split_env_key(key)
                .filter(|(name, _)| *name != "poly")
                .ok_or_else(|| ctx.err(&section, key, "expected a coefficient key such as \"a.1\""))?;
            let x = as_f64(v).ok_or_else(|| ctx.err(&section, key, "expected a number"))?;
            let flat = format!("{name}{i}_{k}");
            if values.insert(flat.clone(), x).is_some() {
                return Err(ctx.err(&section, key, format!("`{flat}` is also set in [params]")));
            }
        }
    }
    Ok(values)
}

fn parse_gauge(ctx: &Ctx, doc: &Table, n: usize, n0: usize) -> Res<Option<Option<GaugeFunction>>> {
    const S: &str = "gauge";
    let Some(t) = table(ctx, doc, S)? else {
        return Ok(None);
    };
    check_keys(ctx, S, t, &["kind", "scale", "weights"])?;
    let kind = t
        .get("kind")
        .ok_or_else(|| ctx.err(S, "", "missing key `kind`"))?
        .as_str()
        .ok_or_else(|| ctx.err(S, "kind", "expected a string"))?;
    let scale = match t.get("scale") {
        Some(v) => number_list(ctx, S, "scale", v)?,
        None => vec![1.0; n0],
    };
    if scale.len() != n0 || scale.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
        return Err(ctx.err(S, "scale", format!("expected {n0} positive numbers")));
    }
    if kind != "weighted" && t.contains_key("weights") {
        return Err(ctx.err(S, "weights", "only used with kind = \"weighted\""));
    }
    let g = match kind {
        "none" => return Ok(Some(None)),
        "linear" => GaugeFunction::linear(scale, n),
        "sqrt" => GaugeFunction::sqrt_sum(scale),
        "weighted" => {
            let w = t.get("weights").ok_or_else(|| ctx.err(S, "", "missing key `weights`"))?;
            let w = matrix(ctx, S, "weights", w)?;
            if w.len() != n0 || w.iter().any(|r| r.len() != n) {
                return Err(ctx.err(S, "weights", format!("expected {n0} rows of {n} weights")));
            }
            GaugeFunction::weighted(scale, w)
        }
        other => {
            return Err(ctx.err(S, "kind", format!("unknown gauge kind `{other}` (linear, weighted, sqrt, none)")))
        }
    };
    Ok(Some(Some(g)))
}

fn parse_switch(ctx: &Ctx, doc: &Table, n: usize, n0_hint: Option<usize>) -> Res<SwitchLaw> {
    const S: &str = "switch";
    let t = table(ctx, doc, S)?.ok_or_else(|| ctx.err(S, "", "missing [switch] section"))?;
    check_keys(ctx, S, t, &["q12", "q21", "rows", "rate", "rate_bound", "rate_floor"])?;
    let forms = [t.contains_key("q12") || t.contains_key("q21"), t.contains_key("rows"), t.contains_key("rate")];
    if forms.iter().filter(|f| **f).count() != 1 {
        return Err(ctx.err(S, "", "give exactly one of q12/q21, rows or [[switch.rate]] entries"));
    }
    if forms[2] {
        return parse_state_dependent(ctx, t, n, n0_hint);
    }
    for k in ["rate_bound", "rate_floor"] {
        if t.contains_key(k) {
            return Err(ctx.err(S, k, "only used with [[switch.rate]] entries"));
        }
    }
    if forms[1] {
        let rows = matrix(ctx, S, "rows", &t["rows"])?;
        let n0 = rows.len();
        if n0 == 0 || rows.iter().any(|r| r.len() != n0) {
            return Err(ctx.err(S, "rows", "rate matrix must be square and non-empty"));
        }
        for (k, row) in rows.iter().enumerate() {
            for (l, &v) in row.iter().enumerate() {
                if k != l && !(v >= 0.0 && v.is_finite()) {
                    return Err(ctx.err(
                        S,
                        "rows",
                        format!("rate q{}{} = {v} must be finite and nonnegative", k + 1, l + 1),
                    ));
                }
            }
            let sum: f64 = row.iter().sum();
            let scale = row.iter().map(|v| v.abs()).fold(1.0, f64::max);
            if sum.abs() > 1e-9 * scale {
                return Err(ctx.err(S, "rows", format!("row {} sums to {sum}, not 0", k + 1)));
            }
        }
        return SwitchLaw::constant(rows).map_err(|e| ctx.err(S, "rows", e.to_string()));
    }
    let mut q = [0.0; 2];
    for (slot, key) in q.iter_mut().zip(["q12", "q21"]) {
        let v = number(ctx, S, t, key)?.ok_or_else(|| ctx.err(S, "", format!("missing key `{key}`")))?;
        if !(v >= 0.0 && v.is_finite()) {
            return Err(ctx.err(S, key, format!("rate {v} must be finite and nonnegative")));
        }
        *slot = v;
    }
    SwitchLaw::two_state(q[0], q[1]).map_err(|e| ctx.err(S, "", e.to_string()))
}

fn parse_state_dependent(ctx: &Ctx, t: &Table, n: usize, n0_hint: Option<usize>) -> Res<SwitchLaw> {
    const S: &str = "switch.rate";
    let bad = || ctx.err("switch", "rate", "expected [[switch.rate]] tables");
    let entries = t["rate"].as_array().ok_or_else(bad)?;
    let mut parsed = Vec::new();
    for e in entries {
        let e = e.as_table().ok_or_else(bad)?;
        check_keys(ctx, S, e, &["from", "to", "rate", "poly", "lo", "hi"])?;
        let idx = |key: &str| -> Res<usize> {
            e.get(key).and_then(as_index).ok_or_else(|| ctx.err(S, key, "expected a 1-based environment index"))
        };
        let (from, to) = (idx("from")?, idx("to")?);
        if from == to {
            return Err(ctx.err(S, "to", "diagonal entries are implied"));
        }
        let rate = match (e.get("rate"), e.get("poly")) {
            (Some(v), None) => {
                if e.contains_key("lo") || e.contains_key("hi") {
                    return Err(ctx.err(S, "lo", "`lo`/`hi` only apply to `poly` entries"));
                }
                let c = as_f64(v).ok_or_else(|| ctx.err(S, "rate", "expected a number"))?;
                if !(c >= 0.0 && c.is_finite()) {
                    return Err(ctx.err(S, "rate", format!("rate {c} must be finite and nonnegative")));
                }
                RateFn::Constant(c)
            }
            (None, Some(v)) => {
                let poly = polynomial(ctx, S, "poly", n, v)?;
                let lo = number(ctx, S, e, "lo")?.unwrap_or(0.0);
                let hi = number(ctx, S, e, "hi")?.unwrap_or(f64::INFINITY);
                if !(lo >= 0.0 && hi >= lo) {
                    return Err(ctx.err(S, "lo", format!("need 0 <= lo <= hi, got lo = {lo}, hi = {hi}")));
                }
                RateFn::Clamped { poly, lo, hi }
            }
            _ => return Err(ctx.err(S, "", "give exactly one of `rate` or `poly`")),
        };
        parsed.push((from - 1, to - 1, rate));
    }
    let n0 = parsed.iter().map(|(k, l, _)| k.max(l) + 1).max().unwrap_or(0).max(n0_hint.unwrap_or(0));
    let mut table = vec![vec![RateFn::Constant(0.0); n0]; n0];
    for (from, to, rate) in parsed {
        table[from][to] = rate;
    }
    let bound = number(ctx, "switch", t, "rate_bound")?
        .ok_or_else(|| ctx.err("switch", "", "state-dependent switching needs `rate_bound`"))?;
    let floor = number(ctx, "switch", t, "rate_floor")?.unwrap_or(0.0);
    SwitchLaw::state_dependent(table, bound, floor).map_err(|e| ctx.err("switch", "rate_bound", e.to_string()))
}

pub fn parse_model_str(src: &str) -> Res<ModelSpec> {
    let doc: Table = src.parse().map_err(|e: toml::de::Error| ModelFileError {
        line: e.span().map(|s| src[..s.start.min(src.len())].matches('\n').count() + 1),
        key: String::new(),
        message: e.message().to_string(),
    })?;
    let ctx = Ctx { src };
    if let Some(k) = doc.keys().find(|k| !["model", "params", "env", "switch", "gauge"].contains(&k.as_str())) {
        return Err(ctx.err("", k, "unknown top-level key (sections are model, params, env, switch, gauge)"));
    }
    let header = parse_header(&ctx, &doc)?;
    let envs = env_tables(&ctx, &doc)?;
    let n = match (header.family, header.n) {
        (FamilyTag::Custom, Some(n)) => n,
        (FamilyTag::Custom, None) => custom_species(&ctx, &envs)?,
        (FamilyTag::FoodChain, None) => return Err(ctx.err("model", "", "food chains need `n`")),
        (f, n) => n.or(family_species(f)).unwrap_or(0),
    };
    let switch = parse_switch(&ctx, &doc, n, header.n0)?;
    let n0 = switch.n0();
    if header.n0.is_some_and(|h| h != n0) {
        return Err(ctx.err("model", "n0", format!("[switch] describes {n0} environments")));
    }
    if let Some(k) = envs.keys().find(|&&k| k > n0) {
        return Err(ctx.err(&format!("env.{k}"), "", format!("model has {n0} environments")));
    }
    let model = if header.family == FamilyTag::Custom {
        if doc.contains_key("params") {
            return Err(ctx.err("params", "", "custom models take polynomials in [env.k], not [params]"));
        }
        let fields = custom_fields(&ctx, &envs, n, n0)?;
        ModelSpec::custom(fields, switch).map_err(|e| ctx.model_err("env", e))?
    } else {
        let values = family_params(&ctx, &doc, &envs)?;
        FamilyParams { family: header.family, n, n0, values }.build(switch).map_err(|e| ctx.model_err("model", e))?
    };
    let model = match parse_gauge(&ctx, &doc, n, n0)? {
        Some(g) => model.with_gauge(g).map_err(|e| ctx.model_err("gauge", e))?,
        None => model,
    };
    model.with_lattice(header.lattice).map_err(|e| ctx.err("model", "lattice", e.to_string()))
}

fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:?}")
    }
}

fn num_list(xs: &[f64]) -> String {
    format!("[{}]", xs.iter().map(|&x| num(x)).collect::<Vec<_>>().join(", "))
}

fn poly_list(p: &Polynomial) -> String {
    let terms: Vec<String> =
        p.terms().iter().map(|t| format!("[\"{}\", {}]", Polynomial::format_monomial(&t.exps), num(t.coeff))).collect();
    format!("[{}]", terms.join(", "))
}

/// Writes `model` in the model-file grammar; parsing the result gives back
/// an identical model.
pub fn serialize_model(model: &ModelSpec) -> String {
    let mut s = String::new();
    let family = model.family();
    let _ = writeln!(s, "[model]\nfamily = \"{}\"\nn = {}\nn0 = {}", family.name(), model.n(), model.n0());
    if let Some(lattice) = model.lattice() {
        let faces: Vec<String> = lattice
            .iter()
            .map(|f| format!("[{}]", f.members().iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(", ")))
            .collect();
        let _ = writeln!(s, "lattice = [{}]", faces.join(", "));
    }
    if family == FamilyTag::Custom {
        for (k, field) in model.fields().iter().enumerate() {
            let _ = writeln!(s, "\n[env.{}]", k + 1);
            for (i, p) in field.fitness.iter().enumerate() {
                let _ = writeln!(s, "\"poly.{}\" = {}", i + 1, poly_list(p));
            }
        }
    } else {
        s.push_str("\n[params]\n");
        for (key, v) in model.params() {
            let _ = writeln!(s, "{key} = {}", num(*v));
        }
    }
    s.push_str("\n[switch]\n");
    let sw = model.switch();
    match (sw.kind(), sw.constant_matrix()) {
        (SwitchKind::ConstantMatrix, Some(q)) if q.len() == 2 => {
            let _ = writeln!(s, "q12 = {}\nq21 = {}", num(q[0][1]), num(q[1][0]));
        }
        (SwitchKind::ConstantMatrix, Some(q)) => {
            let rows: Vec<String> = q.iter().map(|r| num_list(r)).collect();
            let _ = writeln!(s, "rows = [{}]", rows.join(", "));
        }
        _ => {
            let _ = writeln!(s, "rate_bound = {}", num(sw.rate_bound().unwrap_or(f64::INFINITY)));
            let _ = writeln!(s, "rate_floor = {}", num(sw.rate_floor()));
            for (k, row) in sw.entries().iter().enumerate() {
                for (l, r) in row.iter().enumerate() {
                    if k == l {
                        continue;
                    }
                    let _ = writeln!(s, "\n[[switch.rate]]\nfrom = {}\nto = {}", k + 1, l + 1);
                    match r {
                        RateFn::Constant(c) => {
                            let _ = writeln!(s, "rate = {}", num(*c));
                        }
                        RateFn::Clamped { poly, lo, hi } => {
                            let _ = writeln!(s, "poly = {}\nlo = {}\nhi = {}", poly_list(poly), num(*lo), num(*hi));
                        }
                        RateFn::Custom(_) => {
                            let _ = writeln!(s, "# closure-valued rate cannot be written; replaced by 0\nrate = 0.0");
                        }
                    }
                }
            }
        }
    }
    s.push_str("\n[gauge]\n");
    match model.gauge().map(|g| &g.kind) {
        None => s.push_str("kind = \"none\"\n"),
        Some(GaugeKind::SqrtSum { scale }) => {
            let _ = writeln!(s, "kind = \"sqrt\"\nscale = {}", num_list(scale));
        }
        Some(GaugeKind::Linear { scale, weights }) => {
            let rows: Vec<String> = weights.iter().map(|r| num_list(r)).collect();
            let _ = writeln!(s, "kind = \"weighted\"\nscale = {}\nweights = [{}]", num_list(scale), rows.join(", "));
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn locate_finds_quoted_keys() {
        let src = "[model]\nfamily = \"x\"\n\n[env.2]\n\"a.1\" = 3\n";
        assert_eq!(locate(src, "env.2", "a.1"), Some(5));
        assert_eq!(locate(src, "model", "family"), Some(2));
        assert_eq!(locate(src, "env.2", ""), Some(4));
        assert_eq!(locate(src, "model", "n"), None);
    }

    #[test]
    fn env_alias_splits_species_and_env() {
        assert_eq!(env_alias("a1_2"), Some(("env.2".into(), "a.1".into())));
        assert_eq!(env_alias("a10_3"), Some(("env.3".into(), "a.10".into())));
        assert_eq!(env_alias("a21"), None);
    }

    #[test]
    fn number_formatting_reparses() {
        for x in [0.1, 1.0, -2.5e-12, 1e300, 3.0e16, f64::INFINITY] {
            let v: Table = format!("x = {}", num(x)).parse().unwrap();
            assert_eq!(as_f64(&v["x"]), Some(x));
        }
    }
}
