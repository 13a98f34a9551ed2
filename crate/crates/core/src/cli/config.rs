//! Run configuration: `{"model": {...}, "grid": {...}, "tolerance": {...}, "command_args": {...}}`.

use std::sync::Arc;

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::halfplane::GridSpec;
use crate::linalg::CMatrix;
use crate::livsic::CharFunction;
use crate::models::sturm_liouville::{DEFAULT_ODE_STEPS, DEFAULT_QUAD_PANELS};
use crate::models::{
    AtomicMeasure, AtomicMeasureModel, Coefficient, DirectCharModel, DiskAutomorphism, FreeHalfLineModel,
    KernelModel, PaleyWienerModel, SturmLiouvilleModel, ToeplitzSlitModel,
};

/// Invalid configuration, located by a JSON pointer.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("schema error at {pointer}: {message}")]
pub struct SchemaError {
    pub pointer: String,
    pub message: String,
}

impl SchemaError {
    pub fn new(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        SchemaError {
            pointer: pointer.into(),
            message: message.into(),
        }
    }
}

/// A strictly positive finite number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64")]
pub struct Positive(pub f64);

impl TryFrom<f64> for Positive {
    type Error = String;

    fn try_from(x: f64) -> Result<Self, String> {
        if x.is_finite() && x > 0.0 {
            Ok(Positive(x))
        } else {
            Err(format!("expected a positive finite number, got {x}"))
        }
    }
}

/// A complex number written as `x` or `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum CNum {
    Real(f64),
    Pair([f64; 2]),
}

impl CNum {
    pub fn value(self) -> Complex64 {
        match self {
            CNum::Real(x) => Complex64::new(x, 0.0),
            CNum::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

pub type MatrixSpec = Vec<Vec<CNum>>;

fn matrix(spec: &MatrixSpec, pointer: &str) -> Result<CMatrix, SchemaError> {
    let rows: Vec<Vec<Complex64>> = spec.iter().map(|r| r.iter().map(|c| c.value()).collect()).collect();
    CMatrix::from_rows(&rows).map_err(|e| SchemaError::new(pointer, e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum CoefficientSpec {
    Constant(f64),
    Polynomial(Vec<f64>),
}

impl CoefficientSpec {
    fn build(&self) -> Coefficient {
        match self {
            CoefficientSpec::Constant(c) => Coefficient::Constant(*c),
            CoefficientSpec::Polynomial(cs) => Coefficient::Polynomial(cs.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PaleyWienerSpec {
    pub half_length: Positive,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreeHalfLineSpec {}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SturmLiouvilleSpec {
    pub interval: [f64; 2],
    #[serde(default)]
    pub p: Option<CoefficientSpec>,
    #[serde(default)]
    pub q: Option<CoefficientSpec>,
    /// Base point of the fundamental system; the midpoint by default.
    #[serde(default)]
    pub x0: Option<f64>,
    #[serde(default)]
    pub ode_steps: Option<usize>,
    #[serde(default)]
    pub quad_panels: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutomorphismSpec {
    #[serde(default)]
    pub theta: f64,
    #[serde(default = "zero")]
    pub alpha: CNum,
}

fn zero() -> CNum {
    CNum::Real(0.0)
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToeplitzSpec {
    pub a: Positive,
    #[serde(default)]
    pub automorphism: Option<AutomorphismSpec>,
    #[serde(default)]
    pub squared: bool,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomicSpec {
    /// `[location, weight matrix]` pairs.
    pub atoms: Vec<(f64, MatrixSpec)>,
}

/// Either `coefficients` of `sum_k M_k b^k`, or `left * V[source] * right`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirectSpec {
    #[serde(default)]
    pub coefficients: Option<Vec<MatrixSpec>>,
    #[serde(default)]
    pub source: Option<Value>,
    #[serde(default)]
    pub left: Option<MatrixSpec>,
    #[serde(default)]
    pub right: Option<MatrixSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    PaleyWiener(PaleyWienerSpec),
    FreeHalfLine(FreeHalfLineSpec),
    SturmLiouville(SturmLiouvilleSpec),
    ToeplitzSlit(ToeplitzSpec),
    Atomic(AtomicSpec),
    Direct(DirectSpec, Option<Box<ModelSpec>>),
}

pub const MODEL_TYPES: [&str; 6] = [
    "paley_wiener",
    "free_half_line",
    "sturm_liouville",
    "toeplitz_slit",
    "atomic",
    "direct",
];

fn pointer_of(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => out.push_str(&format!("/{}", key.replace('~', "~0").replace('/', "~1"))),
            Segment::Enum { variant } => out.push_str(&format!("/{variant}")),
            Segment::Unknown => {}
        }
    }
    out
}

/// Deserializes `value` and reports failures relative to `base`.
fn typed<T: DeserializeOwned>(value: &Value, base: &str) -> Result<T, SchemaError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let pointer = format!("{base}{}", pointer_of(e.path()));
        SchemaError::new(pointer, e.inner().to_string())
    })
}

impl ModelSpec {
    pub fn parse(value: &Value, base: &str) -> Result<Self, SchemaError> {
        let obj = value
            .as_object()
            .ok_or_else(|| SchemaError::new(base, "model must be an object"))?;
        let kind = obj
            .get("type")
            .and_then(Value::as_str)
            .ok_or_else(|| SchemaError::new(format!("{base}/type"), "missing model type"))?;
        let mut rest = obj.clone();
        rest.remove("type");
        let rest = Value::Object(rest);
        Ok(match kind {
            "paley_wiener" => ModelSpec::PaleyWiener(typed(&rest, base)?),
            "free_half_line" => ModelSpec::FreeHalfLine(typed(&rest, base)?),
            "sturm_liouville" => ModelSpec::SturmLiouville(typed(&rest, base)?),
            "toeplitz_slit" => ModelSpec::ToeplitzSlit(typed(&rest, base)?),
            "atomic" => ModelSpec::Atomic(typed(&rest, base)?),
            "direct" => {
                let spec: DirectSpec = typed(&rest, base)?;
                let source = match &spec.source {
                    Some(v) => Some(Box::new(ModelSpec::parse(v, &format!("{base}/source"))?)),
                    None => None,
                };
                ModelSpec::Direct(spec, source)
            }
            other => {
                return Err(SchemaError::new(
                    format!("{base}/type"),
                    format!("unknown model type `{other}`, expected one of {}", MODEL_TYPES.join(", ")),
                ))
            }
        })
    }

    pub fn is_ode(&self) -> bool {
        match self {
            ModelSpec::SturmLiouville(_) => true,
            ModelSpec::Direct(_, Some(src)) => src.is_ode(),
            _ => false,
        }
    }

    /// Builds the model; construction errors are reported against `base`.
    pub fn build(&self, base: &str) -> Result<Arc<dyn KernelModel>, SchemaError> {
        let invalid = |field: &str, e: crate::Error| SchemaError::new(format!("{base}{field}"), e.to_string());
        Ok(match self {
            ModelSpec::PaleyWiener(s) => {
                Arc::new(PaleyWienerModel::new(s.half_length.0).map_err(|e| invalid("/half_length", e))?)
            }
            ModelSpec::FreeHalfLine(_) => Arc::new(FreeHalfLineModel),
            ModelSpec::SturmLiouville(s) => {
                let [a, b] = s.interval;
                let p = s.p.as_ref().map_or(Coefficient::Constant(1.0), CoefficientSpec::build);
                let q = s.q.as_ref().map_or(Coefficient::Constant(0.0), CoefficientSpec::build);
                let m = SturmLiouvilleModel::new(
                    (a, b),
                    p,
                    q,
                    s.x0.unwrap_or(0.5 * (a + b)),
                    s.ode_steps.unwrap_or(DEFAULT_ODE_STEPS),
                    s.quad_panels.unwrap_or(DEFAULT_QUAD_PANELS),
                )
                .map_err(|e| invalid("", e))?;
                Arc::new(m)
            }
            ModelSpec::ToeplitzSlit(s) => {
                let mut m = ToeplitzSlitModel::new(s.a.0).map_err(|e| invalid("/a", e))?;
                if let Some(aut) = &s.automorphism {
                    let phi = DiskAutomorphism::new(aut.theta, aut.alpha.value()).map_err(|e| invalid("/automorphism", e))?;
                    m = m.with_automorphism(phi);
                }
                if s.squared {
                    m = m.squared();
                }
                Arc::new(m)
            }
            ModelSpec::Atomic(s) => {
                let atoms = s
                    .atoms
                    .iter()
                    .enumerate()
                    .map(|(k, (x, w))| Ok((*x, matrix(w, &format!("{base}/atoms/{k}/1"))?)))
                    .collect::<Result<Vec<_>, SchemaError>>()?;
                Arc::new(AtomicMeasureModel::new(
                    AtomicMeasure::new(atoms).map_err(|e| invalid("/atoms", e))?,
                ))
            }
            ModelSpec::Direct(s, source) => match (&s.coefficients, source) {
                (Some(cs), None) => {
                    let ms = cs
                        .iter()
                        .enumerate()
                        .map(|(k, m)| matrix(m, &format!("{base}/coefficients/{k}")))
                        .collect::<Result<Vec<_>, _>>()?;
                    Arc::new(DirectCharModel::polynomial(ms).map_err(|e| invalid("/coefficients", e))?)
                }
                (None, Some(src)) => {
                    let inner = src.build(&format!("{base}/source"))?;
                    let n = inner.dim();
                    let c = CharFunction::build(inner).map_err(|e| invalid("/source", e))?;
                    let side = |m: &Option<MatrixSpec>, name: &str| match m {
                        Some(m) => matrix(m, &format!("{base}/{name}")),
                        None => Ok(CMatrix::identity(n)),
                    };
                    let (l, r) = (side(&s.left, "left")?, side(&s.right, "right")?);
                    Arc::new(DirectCharModel::transform(l, c, r).map_err(|e| invalid("", e))?)
                }
                _ => {
                    return Err(SchemaError::new(
                        base,
                        "direct model needs exactly one of `coefficients` or `source`",
                    ))
                }
            },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Relative residual bound for kernel identities.
    #[serde(default)]
    pub residual: Option<Positive>,
    /// Residual bound for equivalence certificates.
    #[serde(default)]
    pub equivalence: Option<Positive>,
    /// Allowed negative part of normalized Gram eigenvalues.
    #[serde(default)]
    pub gram: Option<Positive>,
}

pub const CLOSED_FORM_TOLERANCE: f64 = 1e-8;
pub const ODE_TOLERANCE: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommandArgs {
    /// `[lambda, z]` pairs for `eval-kernel`.
    #[serde(default)]
    pub pairs: Option<Vec<[CNum; 2]>>,
    /// Evaluation points for `charfn`.
    #[serde(default)]
    pub points: Option<Vec<CNum>>,
    /// Real sample abscissae for `boundary` and `clark`.
    #[serde(default)]
    pub x: Option<crate::halfplane::XSpec>,
    /// Distance from the real axis for boundary values.
    #[serde(default)]
    pub epsilon: Option<Positive>,
    /// Clark parameter `A` (unitary); the identity by default.
    #[serde(default)]
    pub clark_parameter: Option<MatrixSpec>,
    /// Half-width of the integration window for `extreme`.
    #[serde(default)]
    pub half_width: Option<Positive>,
    #[serde(default)]
    pub panels: Option<usize>,
    #[serde(default)]
    pub ladder: Option<Vec<Positive>>,
    /// Unit direction for `angular`.
    #[serde(default)]
    pub direction: Option<Vec<CNum>>,
    #[serde(default)]
    pub depth: Option<u32>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: Value,
    #[serde(default)]
    grid: Option<GridSpec>,
    #[serde(default)]
    tolerance: Tolerances,
    #[serde(default)]
    command_args: CommandArgs,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub grid: Option<GridSpec>,
    pub tolerance: Tolerances,
    pub command_args: CommandArgs,
    /// The document as given, echoed into reports.
    pub raw: Value,
}

impl RunConfig {
    pub fn residual_tolerance(&self) -> f64 {
        self.tolerance.residual.map(|t| t.0).unwrap_or(if self.model.is_ode() {
            ODE_TOLERANCE
        } else {
            CLOSED_FORM_TOLERANCE
        })
    }

    pub fn equivalence_tolerance(&self) -> f64 {
        self.tolerance.equivalence.map_or(CLOSED_FORM_TOLERANCE, |t| t.0)
    }

    pub fn gram_tolerance(&self) -> f64 {
        self.tolerance.gram.map_or(CLOSED_FORM_TOLERANCE, |t| t.0)
    }

    pub fn build_model(&self) -> Result<Arc<dyn KernelModel>, SchemaError> {
        self.model.build("/model")
    }
}

pub fn parse_config_value(raw: Value) -> Result<RunConfig, SchemaError> {
    if !raw.is_object() {
        return Err(SchemaError::new("", "configuration must be a JSON object"));
    }
    let cfg: RawConfig = typed(&raw, "")?;
    if let Some(panels) = cfg.command_args.panels {
        if panels == 0 {
            return Err(SchemaError::new("/command_args/panels", "panels must be positive"));
        }
    }
    let model = ModelSpec::parse(&cfg.model, "/model")?;
    Ok(RunConfig {
        model,
        grid: cfg.grid,
        tolerance: cfg.tolerance,
        command_args: cfg.command_args,
        raw,
    })
}

pub fn parse_config_str(text: &str) -> Result<RunConfig, SchemaError> {
    let raw: Value = serde_json::from_str(text)
        .map_err(|e| SchemaError::new("", format!("invalid JSON (line {}, column {}): {e}", e.line(), e.column())))?;
    parse_config_value(raw)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_documented_examples() {
        let cfg = parse_config_str(r#"{"model":{"type":"paley_wiener","half_length":3.141592653589793}}"#).unwrap();
        assert!(matches!(cfg.model, ModelSpec::PaleyWiener(_)));
        assert_eq!(cfg.residual_tolerance(), 1e-8);

        let cfg = parse_config_str(r#"{"model":{"type":"atomic","atoms":[[-1,[[1]]],[0,[[2]]],[2,[[1]]]]}}"#).unwrap();
        let m = cfg.build_model().unwrap();
        assert_eq!(m.dim(), 1);
        assert_eq!(m.name(), "atomic(3 atoms, n=1)");
    }

    #[test]
    fn negative_half_length_points_at_the_field() {
        let err = parse_config_str(r#"{"model":{"type":"paley_wiener","half_length":-1}}"#).unwrap_err();
        assert_eq!(err.pointer, "/model/half_length");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = parse_config_str(r#"{"model":{"type":"free_half_line","extra":1}}"#).unwrap_err();
        assert!(err.pointer.starts_with("/model"), "{err}");
        let err = parse_config_str(r#"{"model":{"type":"free_half_line"},"grids":{}}"#).unwrap_err();
        assert!(err.message.contains("grids"), "{err}");
        let err = parse_config_str(r#"{"model":{"type":"free_half_line"},"tolerance":{"residual":0}}"#).unwrap_err();
        assert_eq!(err.pointer, "/tolerance/residual");
        let err = parse_config_str(r#"{"model":{"type":"nope"}}"#).unwrap_err();
        assert_eq!(err.pointer, "/model/type");
    }

    #[test]
    fn complex_entries_and_nested_sources() {
        let cfg = parse_config_str(
            r#"{"model":{"type":"direct","source":{"type":"paley_wiener","half_length":1},
                "left":[[[0,1]]],"right":[[1]]}}"#,
        )
        .unwrap();
        let m = cfg.build_model().unwrap();
        assert!(m.name().contains("paley_wiener"));
        let err = parse_config_str(r#"{"model":{"type":"direct","source":{"type":"paley_wiener","half_length":"x"}}}"#)
            .unwrap_err();
        assert_eq!(err.pointer, "/model/source/half_length");
    }

    #[test]
    fn ode_models_get_the_looser_default() {
        let cfg = parse_config_str(r#"{"model":{"type":"sturm_liouville","interval":[0,3.14159]}}"#).unwrap();
        assert_eq!(cfg.residual_tolerance(), 1e-5);
    }
}
