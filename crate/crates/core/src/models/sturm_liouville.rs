use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::halfplane::Exclusion;
use crate::linalg::CMatrix;
use crate::quadrature::{simpson_nodes, simpson_weights};

use super::KernelModel;

pub const DEFAULT_ODE_STEPS: usize = 4096;
pub const DEFAULT_QUAD_PANELS: usize = 512;
const RICHARDSON_TOL: f64 = 1e-6;

#[derive(Clone)]
pub enum Coefficient {
    Constant(f64),
    /// Coefficients in increasing degree.
    Polynomial(Vec<f64>),
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl Coefficient {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Coefficient::Constant(c) => *c,
            Coefficient::Polynomial(cs) => cs.iter().rev().fold(0.0, |acc, &c| acc * x + c),
            Coefficient::Custom(f) => f(x),
        }
    }
}

impl fmt::Debug for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Constant(c) => write!(f, "Constant({c})"),
            Coefficient::Polynomial(cs) => write!(f, "Polynomial({cs:?})"),
            Coefficient::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// Solutions `u_z`, `v_z` sampled at the quadrature nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct SlSolution {
    pub nodes: Vec<f64>,
    pub u: Vec<Complex64>,
    pub v: Vec<Complex64>,
}

/// Regular Sturm-Liouville operator `-(p f')' + q f` on `[a, b]`.
///
/// The kernel is the 2x2 Gram matrix of the solutions `u_z`, `v_z` fixed by
/// `(u, p u')(x0) = (1, 0)` and `(v, p v')(x0) = (0, 1)`:
/// `K_lambda(z)[j][k] = int gamma_j(x; z) gamma_k(x; conj(lambda)) dx`
/// with `gamma = (u, v)`.
pub struct SturmLiouvilleModel {
    a: f64,
    b: f64,
    p: Coefficient,
    q: Coefficient,
    x0: f64,
    ode_steps: usize,
    quad_panels: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    cache: RwLock<HashMap<(u64, u64), Arc<SlSolution>>>,
}

impl fmt::Debug for SturmLiouvilleModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SturmLiouvilleModel")
            .field("a", &self.a)
            .field("b", &self.b)
            .field("p", &self.p)
            .field("q", &self.q)
            .field("x0", &self.x0)
            .field("ode_steps", &self.ode_steps)
            .field("quad_panels", &self.quad_panels)
            .finish()
    }
}

impl SturmLiouvilleModel {
    pub fn new(
        interval: (f64, f64),
        p: Coefficient,
        q: Coefficient,
        x0: f64,
        ode_steps: usize,
        quad_panels: usize,
    ) -> Result<Self> {
        let (a, b) = interval;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidInput(format!("interval [{a}, {b}] must be finite with a < b")));
        }
        if !(a < x0 && x0 < b) {
            return Err(Error::InvalidInput(format!("base point {x0} must lie inside ({a}, {b})")));
        }
        if ode_steps == 0 || quad_panels == 0 {
            return Err(Error::InvalidInput("ode_steps and quad_panels must be positive".into()));
        }
        let nodes = simpson_nodes(a, b, quad_panels);
        for &x in &nodes {
            let (pv, qv) = (p.eval(x), q.eval(x));
            if !(pv.is_finite() && pv > 0.0) {
                return Err(Error::InvalidInput(format!("p must be positive and finite, p({x}) = {pv}")));
            }
            if !qv.is_finite() {
                return Err(Error::InvalidInput(format!("q must be finite, q({x}) = {qv}")));
            }
        }
        let weights = simpson_weights(a, b, quad_panels);
        Ok(SturmLiouvilleModel {
            a,
            b,
            p,
            q,
            x0,
            ode_steps,
            quad_panels,
            nodes,
            weights,
            cache: RwLock::new(HashMap::new()),
        })
    }

    /// `p = 1`, `q = 0` with default resolution.
    pub fn free(interval: (f64, f64), x0: f64) -> Result<Self> {
        Self::new(
            interval,
            Coefficient::Constant(1.0),
            Coefficient::Constant(0.0),
            x0,
            DEFAULT_ODE_STEPS,
            DEFAULT_QUAD_PANELS,
        )
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Solutions at `z`, memoized. Fails with [`Error::StepCountTooSmall`]
    /// when doubling the step count moves the solution by more than `1e-6`
    /// relative.
    pub fn sl_solve(&self, z: Complex64) -> Result<Arc<SlSolution>> {
        let key = (z.re.to_bits(), z.im.to_bits());
        if let Some(hit) = self.cache.read().expect("solution cache poisoned").get(&key) {
            return Ok(hit.clone());
        }
        let coarse = self.integrate(z, self.ode_steps);
        let fine = self.integrate(z, 2 * self.ode_steps);
        let scale = coarse
            .u
            .iter()
            .chain(coarse.v.iter())
            .fold(0.0_f64, |m, c| m.max(c.norm()));
        let deviation = coarse
            .u
            .iter()
            .zip(fine.u.iter())
            .chain(coarse.v.iter().zip(fine.v.iter()))
            .fold(0.0_f64, |m, (x, y)| m.max((x - y).norm()))
            / scale.max(f64::MIN_POSITIVE);
        if !(deviation <= RICHARDSON_TOL) {
            if !deviation.is_finite() || !scale.is_finite() {
                return Err(Error::NonFinite { point: z });
            }
            return Err(Error::StepCountTooSmall { deviation });
        }
        let solution = Arc::new(coarse);
        self.cache
            .write()
            .expect("solution cache poisoned")
            .insert(key, solution.clone());
        Ok(solution)
    }

    fn rhs(&self, x: f64, z: Complex64, y: [Complex64; 2]) -> [Complex64; 2] {
        [y[1] / self.p.eval(x), (self.q.eval(x) - z) * y[0]]
    }

    fn rk4(&self, z: Complex64, mut x: f64, mut y: [Complex64; 2], to: f64, steps: usize) -> [Complex64; 2] {
        let h = (to - x) / steps as f64;
        for _ in 0..steps {
            let k1 = self.rhs(x, z, y);
            let k2 = self.rhs(x + 0.5 * h, z, [y[0] + k1[0] * (0.5 * h), y[1] + k1[1] * (0.5 * h)]);
            let k3 = self.rhs(x + 0.5 * h, z, [y[0] + k2[0] * (0.5 * h), y[1] + k2[1] * (0.5 * h)]);
            let k4 = self.rhs(x + h, z, [y[0] + k3[0] * h, y[1] + k3[1] * h]);
            for i in 0..2 {
                y[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0);
            }
            x += h;
        }
        y
    }

    /// Integrates from `x0` to both ends, stopping at every node. `steps` is
    /// the nominal RK4 step count per direction.
    fn integrate(&self, z: Complex64, steps: usize) -> SlSolution {
        let n = self.nodes.len();
        let mut u = vec![Complex64::new(0.0, 0.0); n];
        let mut v = vec![Complex64::new(0.0, 0.0); n];
        let first_right = self.nodes.partition_point(|&x| x < self.x0);
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        for (init, out) in [([one, zero], &mut u), ([zero, one], &mut v)] {
            let h_right = (self.b - self.x0) / steps as f64;
            let mut x = self.x0;
            let mut y = init;
            for k in first_right..n {
                let to = self.nodes[k];
                let m = ((to - x) / h_right).round().max(1.0) as usize;
                if to > x {
                    y = self.rk4(z, x, y, to, m);
                }
                x = to;
                out[k] = y[0];
            }
            let h_left = (self.x0 - self.a) / steps as f64;
            let mut x = self.x0;
            let mut y = init;
            for k in (0..first_right).rev() {
                let to = self.nodes[k];
                let m = ((x - to) / h_left).round().max(1.0) as usize;
                y = self.rk4(z, x, y, to, m);
                x = to;
                out[k] = y[0];
            }
        }
        SlSolution {
            nodes: self.nodes.clone(),
            u,
            v,
        }
    }
}

impl KernelModel for SturmLiouvilleModel {
    fn name(&self) -> String {
        format!(
            "sturm_liouville([{}, {}], x0={}, ode_steps={}, quad_panels={})",
            self.a, self.b, self.x0, self.ode_steps, self.quad_panels
        )
    }

    fn dim(&self) -> usize {
        2
    }

    fn kernel(&self, lambda: Complex64, z: Complex64) -> Result<CMatrix> {
        let sz = self.sl_solve(z)?;
        let sl = self.sl_solve(lambda.conj())?;
        let gz = [&sz.u, &sz.v];
        let gl = [&sl.u, &sl.v];
        let mut k = CMatrix::zeros(2);
        for j in 0..2 {
            for m in 0..2 {
                k[(j, m)] = self
                    .weights
                    .iter()
                    .zip(gz[j].iter().zip(gl[m].iter()))
                    .map(|(&w, (a, b))| a * b * w)
                    .sum();
            }
        }
        Ok(k)
    }

    fn singular_set(&self) -> Vec<Exclusion> {
        Vec::new()
    }

    fn boundary_evaluable(&self) -> bool {
        true
    }
}
