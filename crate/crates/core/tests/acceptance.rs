//! Acceptance criteria 1-8. Prints one `[PASS]` / `[FAIL]` line per
//! criterion and exits non-zero if any fails.

mod common;

use std::f64::consts::PI;
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use charfn::dbr::{
    angular_derivative_probe, boundary_modulus, extreme_test, multiplier_residuals, AngularVerdict, ExtremeVerdict,
    EXTREME_LADDER,
};
use charfn::halfplane::{make_grid, GridSpec, PointGrid};
use charfn::herglotz::{
    atom_fit, atom_locate, atomic_herglotz_kernel, default_sample_pairs, real_part_min_eigenvalue,
    w_multiplier_residual, HerglotzFunction,
};
use charfn::livsic::{contractivity, equivalence_test, factorization_residual, involution_defect, EquivalenceStatus};
use charfn::models::{
    pair_scale, AtomicMeasureModel, DirectCharModel, DiskAutomorphism, FreeHalfLineModel, KernelModel,
    PaleyWienerModel, SturmLiouvilleModel, ToeplitzSlitModel,
};
use charfn::{CMatrix, CharFunction};
use common::{c, free_half_line_v, free_sturm_liouville_kernel, paley_wiener_quadrature, upper_points, I};
use num_complex::Complex64;

/// Outcome of one sub-check: description and whether it held.
struct Outcome {
    lines: Vec<(bool, String)>,
}

impl Outcome {
    fn new() -> Self {
        Outcome { lines: Vec::new() }
    }

    fn check(&mut self, ok: bool, msg: impl Into<String>) {
        self.lines.push((ok, msg.into()));
    }

    fn run(&mut self, label: &str, f: impl FnOnce(&mut Self) -> charfn::Result<()>) {
        if let Err(e) = f(self) {
            self.check(false, format!("{label}: error {e}"));
        }
    }

    fn passed(&self) -> bool {
        self.lines.iter().all(|(ok, _)| *ok)
    }
}

fn arc<M: KernelModel + 'static>(m: M) -> Arc<dyn KernelModel> {
    Arc::new(m)
}

fn three_atoms() -> AtomicMeasureModel {
    AtomicMeasureModel::scalar(&[(-1.0, 1.0), (0.0, 2.0), (2.0, 1.0)]).unwrap()
}

fn sl_free() -> SturmLiouvilleModel {
    SturmLiouvilleModel::free((0.0, PI), PI / 2.0).unwrap()
}

fn closed_form_models() -> Vec<Arc<dyn KernelModel>> {
    vec![
        arc(PaleyWienerModel::new(PI).unwrap()),
        arc(FreeHalfLineModel),
        arc(ToeplitzSlitModel::new(0.5).unwrap()),
        arc(three_atoms()),
    ]
}

fn all_models() -> Vec<Arc<dyn KernelModel>> {
    let mut v = closed_form_models();
    v.push(arc(ToeplitzSlitModel::new(0.5).unwrap().squared()));
    v.push(arc(sl_free()));
    v.push(arc(DirectCharModel::polynomial(vec![CMatrix::scalar(c(0.5, 0.0))]).unwrap()));
    v
}

fn default_grid(model: &dyn KernelModel) -> PointGrid {
    make_grid(&GridSpec::default().with_exclusions(&model.grid_exclusions())).unwrap()
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

fn criterion_1(o: &mut Outcome) {
    let mut cases: Vec<(Arc<dyn KernelModel>, f64)> = closed_form_models().into_iter().map(|m| (m, 1e-8)).collect();
    cases.push((arc(sl_free()), 1e-5));
    for (model, tol) in cases {
        let name = model.name();
        o.run(&name, |o| {
            let grid = default_grid(model.as_ref());
            let r = factorization_residual(&CharFunction::build(model)?, &grid)?;
            o.check(r.max <= tol, format!("{name}: max residual {:.3e} <= {tol:e} over {} pairs", r.max, r.pairs));
            Ok(())
        });
    }
}

fn criterion_2(o: &mut Outcome) {
    o.run("free half-line anchors", |o| {
        let model = FreeHalfLineModel;
        let k = model.kernel(I, I)?[(0, 0)];
        let err = (k - 1.0 / 2f64.sqrt()).norm();
        o.check(err <= 1e-10, format!("free_half_line K_i(i) - 1/sqrt(2) = {err:.3e}"));
        let f = CharFunction::from_model(model)?;
        let mut worst: f64 = 0.0;
        for z in upper_points(20, 2) {
            worst = worst.max((f.eval(z)?[(0, 0)] - free_half_line_v(z)).norm());
        }
        o.check(worst <= 1e-8, format!("free_half_line V vs closed form at 20 points: {worst:.3e}"));
        let xs = linspace(-3.0, -0.5, 26);
        let m = boundary_modulus(&f, &xs, 1e-4)?;
        let dev = m.iter().map(|s| (1.0 - s).abs()).fold(0.0, f64::max);
        o.check(dev <= 1e-3, format!("free_half_line |1 - sigma_max| on [-3, -0.5]: {dev:.3e}"));
        Ok(())
    });
    o.run("toeplitz boundary", |o| {
        let f = CharFunction::from_model(ToeplitzSlitModel::new(0.5)?)?;
        let edge = 3f64.sqrt();
        let xs = linspace(-edge + 1e-2, edge - 1e-2, 35);
        let m = boundary_modulus(&f, &xs, 1e-4)?;
        let dev = m.iter().map(|s| (1.0 - s).abs()).fold(0.0, f64::max);
        o.check(dev <= 1e-3, format!("toeplitz_slit(a=1/2) |1 - sigma_max| on (-sqrt 3, sqrt 3): {dev:.3e}"));
        Ok(())
    });
}

fn criterion_3(o: &mut Outcome) {
    for model in all_models() {
        let name = model.name();
        o.run(&name, |o| {
            let grid = default_grid(model.as_ref());
            let f = CharFunction::build(model)?;
            let k = contractivity(&f, &grid)?;
            let d = involution_defect(&f, &grid)?;
            o.check(
                k.max_upper < 1.0 && k.min_lower > 1.0 && d.max <= 1e-8,
                format!(
                    "{name}: max ||V|| upper {:.6}, min ||V|| lower {:.6} ({} poles skipped), involution {:.3e}",
                    k.max_upper,
                    k.min_lower,
                    k.skipped.len(),
                    d.max
                ),
            );
            Ok(())
        });
    }
}

fn unitary_2x2() -> CMatrix {
    let (t, p) = (0.6f64, 0.9f64);
    CMatrix::from_rows(&[
        vec![c(t.cos(), 0.0), -Complex64::from_polar(t.sin(), -p)],
        vec![Complex64::from_polar(t.sin(), p), c(t.cos(), 0.0)],
    ])
    .unwrap()
}

fn criterion_4(o: &mut Outcome) {
    let grid = make_grid(&GridSpec::upper()).unwrap();
    let positive = |o: &mut Outcome, label: &str, a: CharFunction, b: CharFunction| {
        o.run(label, |o| {
            let r = equivalence_test(&a, &b, &grid, 1e-8)?;
            o.check(
                r.status == EquivalenceStatus::EquivalentWithCertificate && r.residual <= 1e-8 && r.unitarity_defect <= 1e-8,
                format!(
                    "{label}: {:?}, residual {:.3e}, unitarity defect {:.3e}",
                    r.status, r.residual, r.unitarity_defect
                ),
            );
            Ok(())
        });
    };
    let pw = CharFunction::from_model(PaleyWienerModel::new(PI).unwrap()).unwrap();
    positive(o, "identical model", pw.clone(), pw.clone());

    let phase = CMatrix::scalar(Complex64::from_polar(1.0, 0.8));
    let scaled = CharFunction::from_model(DirectCharModel::transform(phase, pw.clone(), CMatrix::identity(1)).unwrap()).unwrap();
    positive(o, "phase-scaled scalar", pw.clone(), scaled);

    let m1 = CMatrix::from_rows(&[vec![c(0.5, 0.0), c(0.1, 0.05)], vec![c(-0.05, 0.1), c(0.2, 0.0)]]).unwrap();
    let m2 = CMatrix::from_rows(&[vec![c(0.0, 0.1), c(0.05, 0.0)], vec![c(0.1, 0.0), c(-0.2, 0.1)]]).unwrap();
    let base = CharFunction::from_model(DirectCharModel::polynomial(vec![m1, m2]).unwrap()).unwrap();
    let u = unitary_2x2();
    let conj = CharFunction::from_model(DirectCharModel::transform(u, base.clone(), u.adjoint()).unwrap()).unwrap();
    positive(o, "2x2 unitarily conjugated direct model", base, conj);

    let toeplitz = CharFunction::from_model(ToeplitzSlitModel::new(0.5).unwrap()).unwrap();
    let phi = DiskAutomorphism::new(0.7, c(0.3, 0.2)).unwrap();
    let moved = CharFunction::from_model(ToeplitzSlitModel::new(0.5).unwrap().with_automorphism(phi)).unwrap();
    positive(o, "toeplitz_slit with disk automorphism", toeplitz, moved);

    o.run("negative control", |o| {
        let half = CharFunction::from_model(PaleyWienerModel::new(PI / 2.0)?)?;
        let r = equivalence_test(&pw, &half, &grid, 1e-8)?;
        let gap = r.witness.as_ref().map_or(0.0, |w| w.gap);
        o.check(
            r.status == EquivalenceStatus::NotEquivalent && gap > 1e-3,
            format!("paley_wiener(pi) vs paley_wiener(pi/2): {:?}, witness gap {gap:.3e}", r.status),
        );
        Ok(())
    });
}

fn criterion_5(o: &mut Outcome) {
    for model in all_models() {
        let name = model.name();
        o.run(&name, |o| {
            let grid = default_grid(model.as_ref());
            let h = HerglotzFunction::identity(CharFunction::build(model)?);
            let m = real_part_min_eigenvalue(&h, &grid)?;
            o.check(m >= -1e-8, format!("{name}: min eigenvalue of Re Omega {m:.3e}"));
            Ok(())
        });
    }
    for model in closed_form_models() {
        let name = model.name();
        o.run(&name, |o| {
            let grid = default_grid(model.as_ref());
            let h = HerglotzFunction::identity(CharFunction::build(model)?);
            let r = w_multiplier_residual(&h, &grid)?;
            o.check(r.max <= 1e-8, format!("{name}: W-multiplier residual {:.3e}", r.max));
            Ok(())
        });
    }
    o.run("3-atom round trip", |o| {
        let source = CharFunction::from_model(three_atoms())?;
        let h = HerglotzFunction::identity(source.clone());
        let xs = linspace(-3.0, 3.0, 601);
        let found = atom_locate(&h, &xs, 1e-3)?;
        let located = found.len() == 3 && found.iter().zip([-1.0, 0.0, 2.0]).all(|(g, w)| (g - w).abs() <= 1e-3);
        o.check(located, format!("located atoms {found:?}"));
        if !located {
            return Ok(());
        }
        let fit = atom_fit(&h, &found, &default_sample_pairs())?;
        let grid = make_grid(&GridSpec::upper())?;
        let mut worst: f64 = 0.0;
        for &l in &grid.points {
            for &z in &grid.points {
                let kv = h.kernel(l, z)?;
                let s = atomic_herglotz_kernel(&fit.measure, l, z);
                let scale = pair_scale(&h.kernel(l, l)?, &h.kernel(z, z)?);
                worst = worst.max((kv - s).frobenius_norm() / scale);
            }
        }
        o.check(worst <= 1e-6, format!("re-synthesized K^V on the upper grid: {worst:.3e}"));
        let refit = CharFunction::from_model(AtomicMeasureModel::new(fit.measure.clone()))?;
        let r = equivalence_test(&source, &refit, &grid, 1e-8)?;
        o.check(
            r.status == EquivalenceStatus::EquivalentWithCertificate,
            format!("fitted measure vs source V: {:?}, residual {:.3e}", r.status, r.residual),
        );
        Ok(())
    });
}

fn criterion_6(o: &mut Outcome) {
    for model in closed_form_models() {
        let name = model.name();
        o.run(&name, |o| {
            let grid = default_grid(model.as_ref()).upper();
            let r = multiplier_residuals(&CharFunction::build(model)?, &grid)?;
            o.check(
                r.u.max <= 1e-8 && r.q.max <= 1e-8,
                format!("{name}: U residual {:.3e}, Q residual {:.3e}", r.u.max, r.q.max),
            );
            Ok(())
        });
    }
    let extreme_cases: Vec<(Arc<dyn KernelModel>, ExtremeVerdict)> = vec![
        (arc(PaleyWienerModel::new(PI).unwrap()), ExtremeVerdict::Extreme),
        (arc(FreeHalfLineModel), ExtremeVerdict::Extreme),
        (arc(ToeplitzSlitModel::new(0.5).unwrap()), ExtremeVerdict::Extreme),
        (
            arc(DirectCharModel::polynomial(vec![CMatrix::scalar(c(0.5, 0.0))]).unwrap()),
            ExtremeVerdict::NonExtreme,
        ),
    ];
    for (model, want) in extreme_cases {
        let name = model.name();
        o.run(&name, |o| {
            let r = extreme_test(&CharFunction::build(model)?, 3.0, &EXTREME_LADDER, 3000)?;
            o.check(
                r.verdict == want,
                format!(
                    "{name}: extreme_test {:?} (integrals {:?}, near-unimodular mass {:.3})",
                    r.verdict, r.integrals, r.near_unimodular_mass
                ),
            );
            Ok(())
        });
    }
    for model in [arc(PaleyWienerModel::new(PI).unwrap()), arc(FreeHalfLineModel)] {
        let name = model.name();
        o.run(&name, |o| {
            let r = angular_derivative_probe(&CharFunction::build(model)?, &[c(1.0, 0.0)], 12)?;
            let last = r.quotients.last().map_or(f64::NAN, |q| q.1);
            o.check(
                r.verdict == AngularVerdict::Divergent,
                format!("{name}: angular probe {:?}, last quotient {last:.3e}", r.verdict),
            );
            Ok(())
        });
    }
    o.run("disk identity", |o| {
        let f = CharFunction::from_model(DirectCharModel::polynomial(vec![CMatrix::identity(1)])?)?;
        let r = angular_derivative_probe(&f, &[c(1.0, 0.0)], 12)?;
        let ok = matches!(r.verdict, AngularVerdict::Finite { limit } if (limit - 1.0).abs() <= 1e-6);
        o.check(ok, format!("disk identity: angular probe {:?}", r.verdict));
        Ok(())
    });
}

fn criterion_7(o: &mut Outcome) {
    o.run("sturm-liouville oracle", |o| {
        let model = sl_free();
        let grid = default_grid(&model);
        let mut worst: f64 = 0.0;
        for &l in &grid.points {
            for &z in &grid.points {
                let k = model.kernel(l, z)?;
                let oracle = free_sturm_liouville_kernel((0.0, PI), PI / 2.0, l, z);
                let scale = pair_scale(&model.kernel(l, l)?, &model.kernel(z, z)?);
                for j in 0..2 {
                    for m in 0..2 {
                        worst = worst.max((k[(j, m)] - oracle[(j, m)]).norm() / scale);
                    }
                }
            }
        }
        o.check(
            worst <= 1e-5,
            format!("sturm_liouville ODE kernel vs cos/sin quadrature, {} points: {worst:.3e}", grid.len()),
        );
        Ok(())
    });
    o.run("paley-wiener oracle", |o| {
        let model = PaleyWienerModel::new(PI)?;
        let pts = upper_points(40, 7);
        let mut worst: f64 = 0.0;
        for (k, pair) in pts.chunks(2).enumerate() {
            // alternate half-planes for the second argument
            let (l, z) = if k % 2 == 0 { (pair[0], pair[1]) } else { (pair[0], pair[1].conj()) };
            let got = model.kernel(l, z)?[(0, 0)];
            let want = paley_wiener_quadrature(PI, l, z);
            worst = worst.max((got - want).norm() / want.norm());
        }
        o.check(worst <= 1e-8, format!("paley_wiener closed form vs quadrature at 20 pairs: {worst:.3e}"));
        Ok(())
    });
}

fn run_verify(config: &str) -> (Option<i32>, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_charfn"))
        .args(["verify", config])
        .output()
        .expect("run charfn");
    (out.status.code(), String::from_utf8_lossy(&out.stdout).into_owned())
}

fn without_timing(report: &str) -> String {
    report
        .lines()
        .filter(|l| !l.trim_start().starts_with("\"wall_time\""))
        .collect::<Vec<_>>()
        .join("\n")
}

fn criterion_8(o: &mut Outcome) {
    let dir = std::env::temp_dir().join(format!("charfn-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let configs = [
        ("paley_wiener", r#"{"model":{"type":"paley_wiener","half_length":3.141592653589793}}"#),
        ("free_half_line", r#"{"model":{"type":"free_half_line"}}"#),
        ("toeplitz_slit", r#"{"model":{"type":"toeplitz_slit","a":0.5}}"#),
        ("atomic", r#"{"model":{"type":"atomic","atoms":[[-1,[[1]]],[0,[[2]]],[2,[[1]]]]}}"#),
        ("sturm_liouville", r#"{"model":{"type":"sturm_liouville","interval":[0,3.141592653589793]}}"#),
    ];
    for (name, text) in configs {
        let path = dir.join(format!("{name}.json"));
        std::fs::write(&path, text).unwrap();
        let path = path.to_str().unwrap();
        let (code1, a) = run_verify(path);
        let (code2, b) = run_verify(path);
        let same = without_timing(&a) == without_timing(&b);
        o.check(
            same && code1 == code2 && code1 == Some(0) && a.contains("\"wall_time\""),
            format!("verify {name}: exit codes {code1:?}/{code2:?}, reports identical modulo timing: {same}"),
        );
    }
    let _ = std::fs::remove_dir_all(&dir);
}

fn main() {
    let criteria: [(&str, fn(&mut Outcome)); 8] = [
        ("factorization identity", criterion_1),
        ("closed-form anchors", criterion_2),
        ("contractivity, expansivity and involution", criterion_3),
        ("unitary equivalence controls", criterion_4),
        ("Herglotz suite", criterion_5),
        ("deBranges-Rovnyak suite", criterion_6),
        ("oracle equivalence", criterion_7),
        ("determinism of verify reports", criterion_8),
    ];
    let mut failed = Vec::new();
    for (k, (title, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut o = Outcome::new();
        f(&mut o);
        let tag = if o.passed() { "PASS" } else { "FAIL" };
        println!("[{tag}] {} {title} ({:.1} s)", k + 1, start.elapsed().as_secs_f64());
        for (ok, line) in &o.lines {
            println!("       {} {line}", if *ok { "ok  " } else { "FAIL" });
        }
        if !o.passed() {
            failed.push(k + 1);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 8 criteria passed");
    } else {
        println!("acceptance: criteria {failed:?} failed");
        std::process::exit(1);
    }
}
