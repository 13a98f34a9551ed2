use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::dbr::{
    angular_derivative_probe, boundary_modulus, extreme_test, multiplier_residuals, AngularVerdict, ExtremeVerdict,
    EXTREME_LADDER,
};
use crate::halfplane::{make_grid, PointGrid, Region, XSpec, I};
use crate::herglotz::{
    atom_fit, atom_locate, atomic_herglotz_kernel, default_sample_pairs, real_part_min_eigenvalue, reflection_defect,
    w_multiplier_residual, HerglotzFunction, FIT_RESIDUAL_LIMIT,
};
use crate::linalg::CMatrix;
use crate::livsic::{
    contractivity, equivalence_test, factorization_residual, involution_defect, CharFunction, EquivalenceStatus,
    PairResidual,
};
use crate::models::{kernel_eval, validate_model, KernelModel};
use crate::report::{complex_json, matrix_json, Check, Table, VerificationReport};

use super::config::{RunConfig, SchemaError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    EvalKernel,
    Charfn,
    Verify,
    Equiv,
    Clark,
    Boundary,
    Extreme,
    Angular,
}

pub const COMMANDS: [&str; 8] = [
    "eval-kernel",
    "charfn",
    "verify",
    "equiv",
    "clark",
    "boundary",
    "extreme",
    "angular",
];

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "eval-kernel" => Command::EvalKernel,
            "charfn" => Command::Charfn,
            "verify" => Command::Verify,
            "equiv" => Command::Equiv,
            "clark" => Command::Clark,
            "boundary" => Command::Boundary,
            "extreme" => Command::Extreme,
            "angular" => Command::Angular,
            _ => return Err(format!("unknown command `{s}`, expected one of {}", COMMANDS.join(", "))),
        })
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let i = match self {
            Command::EvalKernel => 0,
            Command::Charfn => 1,
            Command::Verify => 2,
            Command::Equiv => 3,
            Command::Clark => 4,
            Command::Boundary => 5,
            Command::Extreme => 6,
            Command::Angular => 7,
        };
        f.write_str(COMMANDS[i])
    }
}

impl Command {
    /// Table written by `--csv`, if the command produces one.
    pub fn csv_table(self) -> Option<&'static str> {
        match self {
            Command::Boundary => Some("boundary_modulus"),
            Command::Angular => Some("julia_quotient"),
            Command::Extreme => Some("ladder"),
            Command::Charfn => Some("sigma_max"),
            Command::Clark => Some("omega_trace"),
            _ => None,
        }
    }

    pub fn needs_second_config(self) -> bool {
        self == Command::Equiv
    }
}

fn to_json<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).unwrap_or(Value::Null)
}

/// Records `f`'s checks, or a failed check named `name` if it errors.
fn guarded(report: &mut VerificationReport, name: &str, f: impl FnOnce(&mut VerificationReport) -> crate::Result<()>) {
    if let Err(e) = f(report) {
        log::info!("{name} failed: {e}");
        report.push(Check::failed(name, e.to_string()));
    }
}

fn residual_check(name: &str, r: &PairResidual, tol: f64) -> Check {
    let mut detail = format!("{} pairs, {} skipped", r.pairs, r.skipped);
    if let Some((l, z)) = r.worst {
        detail.push_str(&format!("; worst at lambda = {l}, z = {z}"));
    }
    Check::at_most(name, r.max, tol).with_detail(detail)
}

fn grid_for(cfg: &RunConfig, models: &[&Arc<dyn KernelModel>]) -> crate::Result<PointGrid> {
    let mut spec = cfg.grid.clone().unwrap_or_default();
    for m in models {
        spec = spec.with_exclusions(&m.grid_exclusions());
    }
    make_grid(&spec)
}

fn boundary_xs(cfg: &RunConfig) -> crate::Result<Vec<f64>> {
    if let Some(x) = &cfg.command_args.x {
        return x.values();
    }
    match &cfg.grid {
        Some(g) if g.region == Region::Boundary => g.x.values(),
        _ => XSpec::Linspace {
            start: -3.0,
            stop: 3.0,
            count: 61,
        }
        .values(),
    }
}

/// Runs `command`. Configuration problems are returned as errors; numerical
/// failures become failed checks in the report.
pub fn execute(command: Command, cfg: &RunConfig, second: Option<&RunConfig>) -> Result<VerificationReport, SchemaError> {
    let start = Instant::now();
    let model = cfg.build_model()?;
    let mut report = VerificationReport::new(command.to_string());
    report.config = match second {
        Some(s) => json!([cfg.raw, s.raw]),
        None => cfg.raw.clone(),
    };
    for note in model.notes() {
        report.note(note);
    }
    log::info!("{command} on {}", model.name());

    match command {
        Command::EvalKernel => eval_kernel(&mut report, cfg, &model),
        Command::Charfn => charfn(&mut report, cfg, &model),
        Command::Verify => verify(&mut report, cfg, &model),
        Command::Equiv => {
            let second = second.ok_or_else(|| SchemaError::new("", "equiv needs a second configuration"))?;
            let other = second.model.build("/model")?;
            equiv(&mut report, cfg, &model, &other);
        }
        Command::Clark => clark(&mut report, cfg, &model)?,
        Command::Boundary => boundary(&mut report, cfg, &model),
        Command::Extreme => extreme(&mut report, cfg, &model),
        Command::Angular => angular(&mut report, cfg, &model),
    }
    report.wall_time = start.elapsed().as_secs_f64();
    Ok(report)
}

fn char_function(report: &mut VerificationReport, model: &Arc<dyn KernelModel>) -> Option<CharFunction> {
    match CharFunction::build(model.clone()) {
        Ok(c) => Some(c),
        Err(e) => {
            report.push(Check::failed("normalization", e.to_string()));
            None
        }
    }
}

fn eval_kernel(report: &mut VerificationReport, cfg: &RunConfig, model: &Arc<dyn KernelModel>) {
    let pairs: Vec<(Complex64, Complex64)> = match &cfg.command_args.pairs {
        Some(ps) => ps.iter().map(|[l, z]| (l.value(), z.value())).collect(),
        None => vec![(I, I), (-I, -I), (I, -I), (2.0 * I, Complex64::new(1.0, 1.0))],
    };
    let mut values = Vec::new();
    let mut symmetry: f64 = 0.0;
    guarded(report, "evaluation", |_| {
        for &(l, z) in &pairs {
            let k = kernel_eval(model.as_ref(), l, z)?;
            let kt = kernel_eval(model.as_ref(), z, l)?;
            symmetry = symmetry.max((k.adjoint() - kt).frobenius_norm() / k.frobenius_norm().max(1.0));
            values.push(json!({"lambda": complex_json(l), "z": complex_json(z), "K": matrix_json(&k)}));
        }
        Ok(())
    });
    report.certificates.insert("kernel_values".into(), Value::Array(values));
    if report.passed() {
        report.push(Check::at_most("hermitian_symmetry", symmetry, cfg.residual_tolerance()));
    }
}

fn charfn(report: &mut VerificationReport, cfg: &RunConfig, model: &Arc<dyn KernelModel>) {
    let Some(c) = char_function(report, model) else { return };
    let points: Vec<Complex64> = match &cfg.command_args.points {
        Some(ps) => ps.iter().map(|p| p.value()).collect(),
        None => match grid_for(cfg, &[model]) {
            Ok(g) => g.points,
            Err(e) => {
                report.push(Check::failed("grid", e.to_string()));
                return;
            }
        },
    };
    let mut table = Table::new(&["x", "y", "sigma_max"]);
    let mut values = Vec::new();
    let (mut max_upper, mut min_lower) = (0.0f64, f64::INFINITY);
    guarded(report, "evaluation", |report| {
        for &z in &points {
            match c.eval(z) {
                Ok(v) => {
                    let s = v.operator_norm();
                    if z.im > 0.0 {
                        max_upper = max_upper.max(s);
                    } else {
                        min_lower = min_lower.min(s);
                    }
                    table.rows.push(vec![z.re, z.im, s]);
                    values.push(json!({"z": complex_json(z), "V": matrix_json(&v), "sigma_max": s}));
                }
                Err(e) if e.is_pole() => report.note(format!("V has a pole near {z}; point skipped")),
                Err(e) => return Err(e),
            }
        }
        Ok(())
    });
    report.certificates.insert("values".into(), Value::Array(values));
    report.tables.insert("sigma_max".into(), table);
    if points.iter().any(|z| z.im > 0.0) {
        report.push(Check::below("contractive_upper", max_upper, 1.0));
    }
    if points.iter().any(|z| z.im < 0.0) {
        report.push(Check::above("expansive_lower", min_lower, 1.0));
    }
}

fn verify(report: &mut VerificationReport, cfg: &RunConfig, model: &Arc<dyn KernelModel>) {
    let tol = cfg.residual_tolerance();
    let grid = match grid_for(cfg, &[model]) {
        Ok(g) => g,
        Err(e) => {
            report.push(Check::failed("grid", e.to_string()));
            return;
        }
    };
    report.certificates.insert("grid_points".into(), json!(grid.len()));
    guarded(report, "validate_model", |report| {
        report.extend(validate_model(model.as_ref(), &grid, cfg.gram_tolerance())?);
        Ok(())
    });
    let Some(c) = char_function(report, model) else { return };

    guarded(report, "factorization_residual", |report| {
        let r = factorization_residual(&c, &grid)?;
        report.push(residual_check("factorization_residual", &r, tol));
        Ok(())
    });
    guarded(report, "involution_defect", |report| {
        let d = involution_defect(&c, &grid)?;
        let detail = format!("{} points, {} at poles", d.evaluated, d.skipped.len());
        report.push(Check::at_most("involution_defect", d.max, tol).with_detail(detail));
        Ok(())
    });
    guarded(report, "contractivity", |report| {
        let k = contractivity(&c, &grid)?;
        if grid.points.iter().any(|z| z.im > 0.0) {
            report.push(Check::below("contractive_upper", k.max_upper, 1.0));
        }
        if grid.points.iter().any(|z| z.im < 0.0) {
            report.push(
                Check::above("expansive_lower", k.min_lower, 1.0)
                    .with_detail(format!("{} points at poles skipped", k.skipped.len())),
            );
        }
        Ok(())
    });

    let h = HerglotzFunction::identity(c.clone());
    guarded(report, "herglotz", |report| {
        report.push(Check::at_least(
            "omega_real_part_min_eigenvalue",
            real_part_min_eigenvalue(&h, &grid)?,
            -tol,
        ));
        report.push(Check::at_most("omega_reflection_defect", reflection_defect(&h, &grid)?, tol));
        let r = w_multiplier_residual(&h, &grid)?;
        report.push(residual_check("w_multiplier_residual", &r, tol));
        Ok(())
    });

    let upper = grid.upper();
    guarded(report, "multipliers", |report| {
        let m = multiplier_residuals(&c, &upper)?;
        report.push(residual_check("u_multiplier_residual", &m.u, tol));
        report.push(residual_check("q_multiplier_residual", &m.q, tol));
        report.push(Check::at_most("uq_minus_w", m.uq_minus_w, tol));
        Ok(())
    });
    report.note("the multiplier Q is taken as (I - iV)/2, which is the inverse of I + Omega for Omega = (I + iV)(I - iV)^{-1}; the form (I - V)/2 does not satisfy the identity");
}

fn equiv(report: &mut VerificationReport, cfg: &RunConfig, m1: &Arc<dyn KernelModel>, m2: &Arc<dyn KernelModel>) {
    let grid = match grid_for(cfg, &[m1, m2]) {
        Ok(g) => g,
        Err(e) => {
            report.push(Check::failed("grid", e.to_string()));
            return;
        }
    };
    let (Some(c1), Some(c2)) = (char_function(report, m1), char_function(report, m2)) else {
        return;
    };
    let tol = cfg.equivalence_tolerance();
    guarded(report, "equivalence", |report| {
        let res = equivalence_test(&c1, &c2, &grid, tol)?;
        report.certificates.insert("equivalence".into(), to_json(&res));
        let detail = match (&res.status, &res.witness) {
            (EquivalenceStatus::NotEquivalent, Some(w)) => {
                format!("not_equivalent: singular values differ by {:.3e} at z = {}", w.gap, w.point)
            }
            (status, _) => format!("{}", to_json(status).as_str().unwrap_or("")),
        };
        report.push(Check::flag(
            "equivalent",
            res.status == EquivalenceStatus::EquivalentWithCertificate,
            detail,
        ));
        if res.status == EquivalenceStatus::EquivalentWithCertificate {
            report.push(Check::at_most("certificate_residual", res.residual, tol));
            report.push(Check::at_most("certificate_unitarity_defect", res.unitarity_defect, 1e-8));
        }
        Ok(())
    });
}

fn clark(report: &mut VerificationReport, cfg: &RunConfig, model: &Arc<dyn KernelModel>) -> Result<(), SchemaError> {
    let tol = cfg.residual_tolerance();
    let a = match &cfg.command_args.clark_parameter {
        Some(m) => {
            let rows: Vec<Vec<Complex64>> = m.iter().map(|r| r.iter().map(|c| c.value()).collect()).collect();
            CMatrix::from_rows(&rows).map_err(|e| SchemaError::new("/command_args/clark_parameter", e.to_string()))?
        }
        None => CMatrix::identity(model.dim()),
    };
    let Some(c) = char_function(report, model) else { return Ok(()) };
    let h = HerglotzFunction::new(c, a).map_err(|e| SchemaError::new("/command_args/clark_parameter", e.to_string()))?;
    let xs = match &cfg.command_args.x {
        Some(x) => x.values().map_err(|e| SchemaError::new("/command_args/x", e.to_string()))?,
        None => (0..=600).map(|k| -3.0 + 0.01 * k as f64).collect(),
    };
    let eps0 = cfg.command_args.epsilon.map_or(1e-3, |e| e.0);
    match grid_for(cfg, &[model]) {
        Ok(grid) => guarded(report, "herglotz", |report| {
            report.push(Check::at_least(
                "omega_real_part_min_eigenvalue",
                real_part_min_eigenvalue(&h, &grid)?,
                -tol,
            ));
            report.push(Check::at_most("omega_reflection_defect", reflection_defect(&h, &grid)?, tol));
            Ok(())
        }),
        Err(e) => report.push(Check::failed("grid", e.to_string())),
    }
    guarded(report, "atoms", |report| {
        let mut trace = Table::new(&["x", "re_trace_omega"]);
        for &x in &xs {
            trace.rows.push(vec![x, h.omega(Complex64::new(x, eps0))?.hermitian_part().trace().re]);
        }
        report.tables.insert("omega_trace".into(), trace);
        let found = atom_locate(&h, &xs, eps0)?;
        if found.is_empty() {
            report.note("no atoms stand out on the sampled window");
            return Ok(());
        }
        let pairs = default_sample_pairs();
        let fit = atom_fit(&h, &found, &pairs)?;
        let atoms: Vec<Value> = fit
            .measure
            .atoms
            .iter()
            .map(|(x, w)| json!({"location": x, "weight": matrix_json(w)}))
            .collect();
        report.certificates.insert("atoms".into(), Value::Array(atoms));
        report.push(Check::at_most("atom_fit_residual", fit.residual, FIT_RESIDUAL_LIMIT));
        let mut synth: f64 = 0.0;
        for &(l, z) in &pairs {
            let k = h.kernel(l, z)?;
            let s = atomic_herglotz_kernel(&fit.measure, l, z);
            synth = synth.max((k - s).frobenius_norm() / k.frobenius_norm().max(f64::MIN_POSITIVE));
        }
        report.certificates.insert("resynthesis_residual".into(), json!(synth));
        Ok(())
    });
    Ok(())
}

fn boundary(report: &mut VerificationReport, cfg: &RunConfig, model: &Arc<dyn KernelModel>) {
    let Some(c) = char_function(report, model) else { return };
    let eps = cfg.command_args.epsilon.map_or(1e-4, |e| e.0);
    guarded(report, "boundary_modulus", |report| {
        let xs = boundary_xs(cfg)?;
        let values = boundary_modulus(&c, &xs, eps)?;
        let mut table = Table::new(&["x", "sigma_max"]);
        table.rows = xs.iter().zip(&values).map(|(&x, &s)| vec![x, s]).collect();
        report.tables.insert("boundary_modulus".into(), table);
        let max = values.iter().copied().fold(0.0, f64::max);
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        report.push(Check::at_most("max_sigma", max, 1.0 + 1e-10).with_detail(format!("min sigma_max {min:.6e}, epsilon {eps:e}")));
        Ok(())
    });
}

fn extreme(report: &mut VerificationReport, cfg: &RunConfig, model: &Arc<dyn KernelModel>) {
    let Some(c) = char_function(report, model) else { return };
    let args = &cfg.command_args;
    let r = args.half_width.map_or(3.0, |x| x.0);
    let ladder: Vec<f64> = args
        .ladder
        .as_ref()
        .map_or(EXTREME_LADDER.to_vec(), |l| l.iter().map(|x| x.0).collect());
    let panels = args.panels.unwrap_or((1000.0 * r).ceil() as usize);
    guarded(report, "extreme_test", |report| {
        let res = extreme_test(&c, r, &ladder, panels)?;
        let mut table = Table::new(&["epsilon", "integral"]);
        table.rows = res.ladder.iter().zip(&res.integrals).map(|(&e, &i)| vec![e, i]).collect();
        report.tables.insert("ladder".into(), table);
        report.certificates.insert("extreme".into(), to_json(&res));
        let name = to_json(&res.verdict).as_str().unwrap_or("").to_string();
        report.push(Check::flag("classified", res.verdict != ExtremeVerdict::Indeterminate, name));
        Ok(())
    });
}

fn angular(report: &mut VerificationReport, cfg: &RunConfig, model: &Arc<dyn KernelModel>) {
    let Some(c) = char_function(report, model) else { return };
    let args = &cfg.command_args;
    let k: Vec<Complex64> = match &args.direction {
        Some(d) => d.iter().map(|x| x.value()).collect(),
        None => (0..c.n()).map(|j| Complex64::new(if j == 0 { 1.0 } else { 0.0 }, 0.0)).collect(),
    };
    let depth = args.depth.unwrap_or(12);
    guarded(report, "angular_derivative", |report| {
        let res = angular_derivative_probe(&c, &k, depth)?;
        let mut table = Table::new(&["r", "quotient"]);
        table.rows = res.quotients.iter().map(|&(r, j)| vec![r, j]).collect();
        report.tables.insert("julia_quotient".into(), table);
        if let Some(t) = &res.truncated {
            report.note(format!("radial sequence stopped early: {t}"));
        }
        report.certificates.insert("angular".into(), to_json(&res));
        let detail = match res.verdict {
            AngularVerdict::Divergent => "divergent".to_string(),
            AngularVerdict::Finite { limit } => format!("finite, limit {limit:.12e}"),
            AngularVerdict::Inconclusive => "inconclusive".to_string(),
        };
        report.push(Check::flag("classified", res.verdict != AngularVerdict::Inconclusive, detail));
        Ok(())
    });
}
