mod common;

use std::f64::consts::PI;

use charfn::linalg::gram_psd_check;
use charfn::models::{
    AtomicMeasureModel, DirectCharModel, FreeHalfLineModel, KernelModel, PaleyWienerModel, SturmLiouvilleModel,
    ToeplitzSlitModel,
};
use charfn::CMatrix;
use common::{c, gauss_legendre, upper_points, I};

fn builtin() -> Vec<Box<dyn KernelModel>> {
    vec![
        Box::new(PaleyWienerModel::new(PI).unwrap()),
        Box::new(FreeHalfLineModel),
        Box::new(ToeplitzSlitModel::new(0.5).unwrap()),
        Box::new(ToeplitzSlitModel::new(0.5).unwrap().squared()),
        Box::new(AtomicMeasureModel::scalar(&[(-1.0, 1.0), (0.0, 2.0), (2.0, 1.0)]).unwrap()),
        Box::new(SturmLiouvilleModel::free((0.0, PI), PI / 2.0).unwrap()),
        Box::new(DirectCharModel::polynomial(vec![CMatrix::scalar(c(0.5, 0.0))]).unwrap()),
    ]
}

#[test]
fn six_point_gram_is_positive_for_each_model() {
    for (seed, model) in builtin().iter().enumerate() {
        let pts = upper_points(6, 100 + seed as u64);
        let v = gram_psd_check(&pts, |l, z| model.kernel(l, z), 1e-8).unwrap();
        assert!(v.passed, "{}: min eigenvalue {:e}, norm {:e}", model.name(), v.min_eigenvalue, v.norm);
    }
}

#[test]
fn paley_wiener_gram_at_i_matches_quadrature() {
    let model = PaleyWienerModel::new(PI).unwrap();
    let oracle = gauss_legendre(|t| c((2.0 * t).exp(), 0.0), -PI, PI, 200);
    let v = gram_psd_check(&[I], |l, z| model.kernel(l, z), 1e-12).unwrap();
    assert!(v.passed);
    assert!((v.min_eigenvalue - oracle.re).abs() <= 1e-10 * oracle.re);
}
