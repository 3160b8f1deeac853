use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use smithwilson::finite::fit_finite_convergence;
use smithwilson::fit::{fit_exact, fit_weighted};
use smithwilson::liquidity::LiquidityMode;
use smithwilson::marketio::{self, curve_table, exact_set, parse_instruments, weighted_set, CurveTable, MarketInstrument};
use smithwilson::{CurveConfig64, FitDiagnostics64, FitMode, FittedCurve64};

use crate::failure::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Classic,
    Weighted,
    Finite,
}

impl Method {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "classic" => Some(Method::Classic),
            "weighted" => Some(Method::Weighted),
            "finite" => Some(Method::Finite),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Classic => "classic",
            Method::Weighted => "weighted",
            Method::Finite => "finite",
        }
    }
}

/// Everything that determines one fitted curve.
#[derive(Debug, Clone)]
pub struct Model {
    pub method: Method,
    pub alpha: f64,
    pub f_inf: f64,
    pub t2: Option<f64>,
    /// Liquidity scale `C`; only the weighted method reads it.
    pub scale: f64,
    pub exclude: Vec<String>,
}

impl Model {
    pub fn validate(&self) -> Result<(), Failure> {
        match (self.method, self.t2) {
            (Method::Finite, None) => Err(Failure::validation("--method finite needs --t2")),
            (Method::Classic | Method::Weighted, Some(_)) => Err(Failure::validation(format!(
                "--t2 only applies to --method finite, not {}",
                self.method.as_str()
            ))),
            _ => Ok(()),
        }?;
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Failure::validation(format!("C must be positive, got {}", self.scale)));
        }
        Ok(())
    }

    fn config(&self) -> Result<CurveConfig64, Failure> {
        Ok(CurveConfig64::new(self.alpha, self.f_inf, self.t2)?)
    }
}

/// Mesh bounds; unset fields take the defaults `0`, `max(T2, 60)`, `0.25`.
#[derive(Debug, Clone, Copy, Default)]
pub struct MeshSpec {
    pub start: Option<f64>,
    pub end: Option<f64>,
    pub step: Option<f64>,
}

impl MeshSpec {
    pub fn terms(&self, t2: Option<f64>) -> Result<Vec<f64>, Failure> {
        let end = self.end.unwrap_or_else(|| t2.unwrap_or(0.0).max(60.0));
        Ok(marketio::mesh(self.start.unwrap_or(0.0), end, self.step.unwrap_or(0.25))?)
    }
}

/// The instruments file and the directory its schedule files live in.
pub struct Input {
    text: String,
    base: PathBuf,
}

impl Input {
    pub fn read(path: &Path) -> Result<Self, Failure> {
        let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Self { text, base })
    }

    fn instruments(&self, scale: f64) -> Result<Vec<MarketInstrument>, Failure> {
        Ok(parse_instruments(&self.text, scale, |name| fs::read_to_string(self.base.join(name)))?)
    }
}

pub struct Outcome {
    pub curve: FittedCurve64,
    pub diagnostics: Value,
}

impl Outcome {
    pub fn table(&self, mesh: &MeshSpec, t2: Option<f64>) -> Result<CurveTable, Failure> {
        Ok(curve_table(&self.curve, &mesh.terms(t2)?)?)
    }
}

pub fn fit(input: &Input, model: &Model) -> Result<Outcome, Failure> {
    model.validate()?;
    let config = model.config()?;
    let mut items = input.instruments(model.scale)?;
    for id in &model.exclude {
        if !items.iter().any(|m| &m.row.id == id) {
            return Err(Failure::validation(format!("--exclude names unknown instrument '{id}'")));
        }
    }
    items.retain(|m| !model.exclude.contains(&m.row.id));
    if items.is_empty() {
        return Err(Failure::validation("no instruments left to fit"));
    }

    let (curve, diag) = match model.method {
        Method::Classic => {
            let (c, d) = fit_exact(&exact_set(&items), &config)?;
            (c, Some(d))
        }
        Method::Weighted => {
            let (c, d) = fit_weighted(&weighted_set(&items), &config)?;
            (c, Some(d))
        }
        Method::Finite => (fit_finite_convergence(&exact_set(&items), &config)?, None),
    };
    let diagnostics = diagnostics(model, &items, &curve, diag.as_ref())?;
    Ok(Outcome { curve, diagnostics })
}

fn diagnostics(
    model: &Model,
    items: &[MarketInstrument],
    curve: &FittedCurve64,
    diag: Option<&FitDiagnostics64>,
) -> Result<Value, Failure> {
    let mut max_error: f64 = 0.0;
    let instruments: Vec<Value> = items
        .iter()
        .map(|m| {
            let (mode, weight) = match (model.method, m.liquidity, m.instrument.mode()) {
                (Method::Weighted, LiquidityMode::Excluded, _) => ("excluded", None),
                (Method::Weighted, _, FitMode::Weighted(w)) => ("weighted", Some(w)),
                _ => ("exact", None),
            };
            let model_price = m.instrument.model_price(curve);
            let error = model_price - m.instrument.price();
            if mode == "exact" {
                max_error = max_error.max(error.abs());
            }
            json!({
                "id": m.row.id,
                "kind": m.row.kind.as_str(),
                "mode": mode,
                "weight": weight,
                "price": m.instrument.price(),
                "model_price": model_price,
                "error": error,
            })
        })
        .collect();

    let mut out = json!({
        "method": model.method.as_str(),
        "alpha": model.alpha,
        "f_inf": model.f_inf,
        "t2": model.t2,
        "C": if model.method == Method::Weighted { Some(model.scale) } else { None },
        "excluded_by_flag": model.exclude,
        "instruments": instruments,
        "max_exact_repricing_error": max_error,
    });
    match diag {
        Some(d) => {
            out["energy"] = json!(d.energy);
            out["penalty"] = json!(d.penalty);
            out["kkt_residual"] = json!(d.kkt_residual);
            out["stationarity_residual"] = json!(d.stationarity_residual);
            out["constraint_residual"] = json!(d.constraint_residual);
            out["condition_estimate"] = json!(d.condition_estimate);
        }
        None => {
            let t2 = model.t2.expect("finite model has t2");
            let fwd = curve.forward_instantaneous(t2)?;
            out["energy"] = Value::Null;
            out["penalty"] = json!(0.0);
            out["kkt_residual"] = json!(max_error);
            out["forward_at_t2"] = json!(fwd);
            out["forward_at_t2_minus_f_inf"] = json!(fwd - model.f_inf);
        }
    }
    Ok(out)
}

/// Writes `contents` to `path`, creating parent directories.
pub fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Failure::io(path, e))
}

pub fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

/// A `compare` variant: `label:method[:key=value,...]`.
#[derive(Debug, Clone)]
pub struct Variant {
    pub label: String,
    pub model: Model,
    pub mesh: MeshSpec,
}

/// Parses a variant spec on top of the shared defaults. Keys: `alpha`,
/// `ufr_annual`, `ufr_continuous`, `t2`, `C`, `exclude` (repeatable),
/// `mesh_end`, `mesh_step`.
pub fn parse_variant(spec: &str, base: &Model, mesh: MeshSpec) -> Result<Variant, Failure> {
    let bad = |msg: String| Failure::validation(format!("variant '{spec}': {msg}"));
    let mut parts = spec.splitn(3, ':');
    let label = parts.next().unwrap_or("").trim();
    if label.is_empty() || label.contains(',') {
        return Err(bad("needs a non-empty label without commas".into()));
    }
    let method = parts.next().unwrap_or("").trim();
    let method = Method::parse(method).ok_or_else(|| bad(format!("unknown method '{method}'")))?;
    let mut model = Model {
        method,
        t2: None,
        exclude: base.exclude.clone(),
        ..base.clone()
    };
    let mut mesh = mesh;
    for kv in parts.next().into_iter().flat_map(|s| s.split(',')).filter(|s| !s.trim().is_empty()) {
        let (k, v) = kv.split_once('=').ok_or_else(|| bad(format!("expected key=value, got '{kv}'")))?;
        let (k, v) = (k.trim(), v.trim());
        let num = || v.parse::<f64>().map_err(|_| bad(format!("malformed number '{v}' for {k}")));
        match k {
            "alpha" => model.alpha = num()?,
            "ufr_annual" => model.f_inf = smithwilson::curve::ufr_from_annual(num()?),
            "ufr_continuous" => model.f_inf = num()?,
            "t2" => model.t2 = Some(num()?),
            "C" => model.scale = num()?,
            "exclude" => model.exclude.push(v.to_string()),
            "mesh_end" => mesh.end = Some(num()?),
            "mesh_step" => mesh.step = Some(num()?),
            _ => return Err(bad(format!("unknown key '{k}'"))),
        }
    }
    if method == Method::Finite && model.t2.is_none() {
        model.t2 = base.t2;
    }
    Ok(Variant {
        label: label.to_string(),
        model,
        mesh,
    })
}
