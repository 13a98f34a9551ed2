//! Möbius transport between the upper half-plane and the unit disk, and the
//! sampling grids used by the verification suites.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Radius of the zone removed around declared singular points and slits.
pub const EXCLUSION_RADIUS: f64 = 1e-3;

/// `b(z) = (z - i)/(z + i)`.
pub fn blaschke_b(z: Complex64) -> Result<Complex64> {
    let den = z + I;
    if den.norm() == 0.0 {
        return Err(Error::PoleAtMinusI);
    }
    let w = (z - I) / den;
    if !w.is_finite() {
        return Err(Error::PoleAtMinusI);
    }
    Ok(w)
}

/// `b^{-1}(w) = i(1 + w)/(1 - w)`.
pub fn blaschke_b_inverse(w: Complex64) -> Result<Complex64> {
    let den = Complex64::new(1.0, 0.0) - w;
    if den.norm() == 0.0 {
        return Err(Error::PoleAtOne);
    }
    let z = I * (1.0 + w) / den;
    if !z.is_finite() {
        return Err(Error::PoleAtOne);
    }
    Ok(z)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Upper,
    Lower,
    Both,
    Boundary,
}

/// Abscissae of a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum XSpec {
    Values(Vec<f64>),
    /// `start, start + step, ...` up to and including `stop` (within rounding).
    Range { start: f64, stop: f64, step: f64 },
    /// `count` equispaced points with both endpoints included.
    Linspace { start: f64, stop: f64, count: usize },
}

impl XSpec {
    pub fn values(&self) -> Result<Vec<f64>> {
        match *self {
            XSpec::Values(ref v) => Ok(v.clone()),
            XSpec::Range { start, stop, step } => {
                if !(step > 0.0) || !start.is_finite() || !stop.is_finite() {
                    return Err(Error::InvalidInput("range needs finite bounds and step > 0".into()));
                }
                let count = ((stop - start) / step + 1e-9).floor();
                if count < 0.0 {
                    return Ok(Vec::new());
                }
                Ok((0..=count as usize).map(|k| start + step * k as f64).collect())
            }
            XSpec::Linspace { start, stop, count } => {
                if !start.is_finite() || !stop.is_finite() {
                    return Err(Error::InvalidInput("linspace needs finite bounds".into()));
                }
                Ok(match count {
                    0 => Vec::new(),
                    1 => vec![start],
                    _ => {
                        let h = (stop - start) / (count - 1) as f64;
                        (0..count)
                            .map(|k| if k == count - 1 { stop } else { start + h * k as f64 })
                            .collect()
                    }
                })
            }
        }
    }
}

/// Zone removed from a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Exclusion {
    Point(Complex64),
    /// Real segment `[lo, hi]`; infinite ends allowed.
    Interval { lo: f64, hi: f64 },
}

impl Exclusion {
    pub fn distance(&self, z: Complex64) -> f64 {
        match *self {
            Exclusion::Point(p) => (z - p).norm(),
            Exclusion::Interval { lo, hi } => {
                let x = z.re.clamp(lo, hi);
                (z - Complex64::new(x, 0.0)).norm()
            }
        }
    }

    pub fn contains(&self, z: Complex64) -> bool {
        self.distance(z) < EXCLUSION_RADIUS
    }
}

pub fn excluded(exclusions: &[Exclusion], z: Complex64) -> bool {
    exclusions.iter().any(|e| e.contains(z))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub region: Region,
    pub x: XSpec,
    /// Distances from the real axis; ignored for boundary grids.
    #[serde(default = "default_y")]
    pub y: Vec<f64>,
    #[serde(default)]
    pub exclusions: Vec<Exclusion>,
    #[serde(default)]
    pub label: Option<String>,
}

fn default_y() -> Vec<f64> {
    vec![0.01, 0.1, 1.0, 10.0]
}

impl Default for GridSpec {
    /// The standard verification grid: 64 points in both half-planes.
    fn default() -> Self {
        GridSpec {
            region: Region::Both,
            x: XSpec::Values(vec![-3.0, -2.0, -1.0, -0.5, 0.5, 1.0, 2.0, 3.0]),
            y: default_y(),
            exclusions: Vec::new(),
            label: None,
        }
    }
}

impl GridSpec {
    pub fn upper() -> Self {
        GridSpec {
            region: Region::Upper,
            ..GridSpec::default()
        }
    }

    pub fn lower() -> Self {
        GridSpec {
            region: Region::Lower,
            ..GridSpec::default()
        }
    }

    pub fn boundary(x: XSpec) -> Self {
        GridSpec {
            region: Region::Boundary,
            x,
            y: Vec::new(),
            exclusions: Vec::new(),
            label: None,
        }
    }

    pub fn with_exclusions(mut self, extra: &[Exclusion]) -> Self {
        self.exclusions.extend_from_slice(extra);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointGrid {
    pub points: Vec<Complex64>,
    pub label: String,
    pub boundary: bool,
}

impl PointGrid {
    pub fn new(points: Vec<Complex64>, label: impl Into<String>) -> Self {
        let boundary = points.iter().any(|p| p.im == 0.0);
        PointGrid {
            points,
            label: label.into(),
            boundary,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn upper(&self) -> PointGrid {
        self.filtered(|z| z.im > 0.0, "upper")
    }

    pub fn lower(&self) -> PointGrid {
        self.filtered(|z| z.im < 0.0, "lower")
    }

    fn filtered(&self, keep: impl Fn(Complex64) -> bool, suffix: &str) -> PointGrid {
        PointGrid {
            points: self.points.iter().copied().filter(|&z| keep(z)).collect(),
            label: format!("{}/{}", self.label, suffix),
            boundary: self.boundary,
        }
    }

    pub fn reals(&self) -> Vec<f64> {
        self.points.iter().map(|z| z.re).collect()
    }
}

pub fn make_grid(spec: &GridSpec) -> Result<PointGrid> {
    let xs = spec.x.values()?;
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("grid abscissae must be finite".into()));
    }
    let mut points = Vec::new();
    let mut push = |z: Complex64| {
        if !excluded(&spec.exclusions, z) {
            points.push(z);
        }
    };
    if spec.region == Region::Boundary {
        for &x in &xs {
            push(Complex64::new(x, 0.0));
        }
    } else {
        if spec.y.iter().any(|y| !(y.is_finite() && *y > 0.0)) {
            return Err(Error::InvalidInput("grid heights must be finite and positive".into()));
        }
        let upper = matches!(spec.region, Region::Upper | Region::Both);
        let lower = matches!(spec.region, Region::Lower | Region::Both);
        for &y in &spec.y {
            for &x in &xs {
                if upper {
                    push(Complex64::new(x, y));
                }
            }
        }
        for &y in &spec.y {
            for &x in &xs {
                if lower {
                    push(Complex64::new(x, -y));
                }
            }
        }
    }
    if points.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let label = spec.label.clone().unwrap_or_else(|| {
        format!("{:?}", spec.region).to_lowercase()
    });
    Ok(PointGrid {
        points,
        label,
        boundary: spec.region == Region::Boundary,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadialTarget {
    /// Vertical approach to a real point.
    HalfPlane(f64),
    /// Radial approach to `1` in the unit disk.
    DiskOne,
}

/// `x0 + i 2^{-m}` or `1 - 2^{-m}` for `m = 1..=depth`.
pub fn radial_sequence(target: RadialTarget, depth: u32) -> Vec<Complex64> {
    (1..=depth)
        .map(|m| {
            let t = 0.5_f64.powi(m as i32);
            match target {
                RadialTarget::HalfPlane(x0) => Complex64::new(x0, t),
                RadialTarget::DiskOne => Complex64::new(1.0 - t, 0.0),
            }
        })
        .collect()
}
