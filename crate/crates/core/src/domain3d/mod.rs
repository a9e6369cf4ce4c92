//! Convex domains in R³: exit distances, the boundary-driven field
//! R(y) = ∫ n f(n) e^{-A₂ s(y,n)} dn and its divergence, and the
//! nonlocal equation for w = e^ϑ on a lattice.

mod lattice;

pub use lattice::{solve_w, LatticeSpec, VolumeField};

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{positive, Error, Result};
use crate::exec::Exec;
use crate::quad::Rule;
use crate::Vec3;

pub type SdfFn = Arc<dyn Fn(&Vec3) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum ConvexDomain {
    Ball { center: Vec3, radius: f64 },
    Box { min: Vec3, max: Vec3 },
    /// Signed distance (negative inside) of a convex set inside `bbox`.
    Implicit { sdf: SdfFn, bbox_min: Vec3, bbox_max: Vec3 },
}

impl std::fmt::Debug for ConvexDomain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConvexDomain::Ball { center, radius } => write!(f, "Ball({center:?}, {radius})"),
            ConvexDomain::Box { min, max } => write!(f, "Box({min:?}, {max:?})"),
            ConvexDomain::Implicit { bbox_min, bbox_max, .. } => write!(f, "Implicit(bbox {bbox_min:?}..{bbox_max:?})"),
        }
    }
}

const BISECTION_STEPS: usize = 60;

impl ConvexDomain {
    pub fn ball(center: Vec3, radius: f64) -> Result<Self> {
        Ok(ConvexDomain::Ball { center, radius: positive("radius", radius)? })
    }

    pub fn unit_ball() -> Self {
        ConvexDomain::Ball { center: Vec3::zeros(), radius: 1.0 }
    }

    pub fn cuboid(min: Vec3, max: Vec3) -> Result<Self> {
        if (0..3).any(|k| !(min[k] < max[k])) {
            return Err(Error::InvalidParameter { name: "box", reason: format!("need min < max, got {min:?} {max:?}") });
        }
        Ok(ConvexDomain::Box { min, max })
    }

    pub fn implicit(sdf: SdfFn, bbox_min: Vec3, bbox_max: Vec3) -> Result<Self> {
        if (0..3).any(|k| !(bbox_min[k] < bbox_max[k])) {
            return Err(Error::InvalidParameter { name: "bbox", reason: "need min < max".into() });
        }
        Ok(ConvexDomain::Implicit { sdf, bbox_min, bbox_max })
    }

    pub fn translated(&self, shift: &Vec3) -> Self {
        match self {
            ConvexDomain::Ball { center, radius } => ConvexDomain::Ball { center: center + shift, radius: *radius },
            ConvexDomain::Box { min, max } => ConvexDomain::Box { min: min + shift, max: max + shift },
            ConvexDomain::Implicit { sdf, bbox_min, bbox_max } => {
                let (sdf, s) = (sdf.clone(), *shift);
                ConvexDomain::Implicit { sdf: Arc::new(move |y| sdf(&(y - s))), bbox_min: bbox_min + shift, bbox_max: bbox_max + shift }
            }
        }
    }

    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        match self {
            ConvexDomain::Ball { center, radius } => (center.add_scalar(-radius), center.add_scalar(*radius)),
            ConvexDomain::Box { min, max } => (*min, *max),
            ConvexDomain::Implicit { bbox_min, bbox_max, .. } => (*bbox_min, *bbox_max),
        }
    }

    /// Negative inside, zero on the boundary.
    pub fn signed_distance(&self, y: &Vec3) -> f64 {
        match self {
            ConvexDomain::Ball { center, radius } => (y - center).norm() - radius,
            ConvexDomain::Box { min, max } => {
                let c = 0.5 * (min + max);
                let half = 0.5 * (max - min);
                let q = (y - c).abs() - half;
                let outside = q.map(|v| v.max(0.0)).norm();
                outside + q.max().min(0.0)
            }
            ConvexDomain::Implicit { sdf, .. } => sdf(y),
        }
    }

    pub fn contains(&self, y: &Vec3) -> bool {
        self.signed_distance(y) < 0.0
    }

    /// Distance from an interior point to the boundary.
    pub fn boundary_distance(&self, y: &Vec3) -> f64 {
        (-self.signed_distance(y)).max(0.0)
    }

    fn require_interior(&self, y: &Vec3) -> Result<()> {
        if self.contains(y) {
            Ok(())
        } else {
            Err(Error::NotInterior { point: [y.x, y.y, y.z] })
        }
    }

    /// s > 0 with y - s n on the boundary.
    pub fn exit_distance(&self, y: &Vec3, n: &Vec3) -> Result<f64> {
        self.require_interior(y)?;
        Ok(self.exit_distance_unchecked(y, n))
    }

    pub(crate) fn exit_distance_unchecked(&self, y: &Vec3, n: &Vec3) -> f64 {
        match self {
            ConvexDomain::Ball { center, radius } => {
                // |d - s n|² = R², positive root
                let d = y - center;
                let b = d.dot(n);
                b + (b * b - d.norm_squared() + radius * radius).max(0.0).sqrt()
            }
            ConvexDomain::Box { min, max } => (0..3)
                .filter(|&k| n[k] != 0.0)
                .map(|k| if n[k] > 0.0 { (y[k] - min[k]) / n[k] } else { (y[k] - max[k]) / n[k] })
                .fold(f64::INFINITY, f64::min),
            ConvexDomain::Implicit { sdf, bbox_min, bbox_max } => {
                let (mut lo, mut hi) = (0.0, (bbox_max - bbox_min).norm());
                for _ in 0..BISECTION_STEPS {
                    let mid = 0.5 * (lo + hi);
                    if sdf(&(y - mid * n)) < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
        }
    }
}

/// Quadrature on the unit sphere: Gauss-Legendre in n₁ = cos(polar angle
/// from the x axis), split at n₁ = 0, times the trapezoid rule in azimuth.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereGrid {
    pub nodes: Vec<Vec3>,
    pub weights: Vec<f64>,
}

impl SphereGrid {
    /// `n_polar` nodes on each hemisphere, `n_azimuth` azimuthal nodes.
    pub fn product(n_polar: usize, n_azimuth: usize) -> Result<Self> {
        if n_polar < 2 || n_azimuth < 4 || 2 * n_polar * n_azimuth < 26 {
            return Err(Error::InvalidParameter {
                name: "sphere grid",
                reason: format!("too coarse: {n_polar} x {n_azimuth}"),
            });
        }
        let mut nodes = Vec::with_capacity(2 * n_polar * n_azimuth);
        let mut weights = Vec::with_capacity(nodes.capacity());
        let dphi = 2.0 * PI / n_azimuth as f64;
        for half in [Rule::gauss_legendre(n_polar, -1.0, 0.0), Rule::gauss_legendre(n_polar, 0.0, 1.0)] {
            for (&mu, &w) in half.nodes.iter().zip(&half.weights) {
                let st = (1.0 - mu * mu).sqrt();
                for k in 0..n_azimuth {
                    let phi = (k as f64 + 0.5) * dphi;
                    nodes.push(Vec3::new(mu, st * phi.cos(), st * phi.sin()));
                    weights.push(w * dphi);
                }
            }
        }
        Ok(SphereGrid { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn tabulate(&self, f: impl Fn(&Vec3) -> f64) -> Vec<f64> {
        self.nodes.iter().map(f).collect()
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }
}

impl Default for SphereGrid {
    fn default() -> Self {
        SphereGrid::product(24, 48).expect("valid default")
    }
}

fn check_profile(f: &[f64], sphere: &SphereGrid) -> Result<()> {
    if f.len() != sphere.len() {
        return Err(Error::InvalidParameter { name: "f", reason: format!("{} values for {} nodes", f.len(), sphere.len()) });
    }
    Ok(())
}

/// R(y) = Σ_k w_k n_k f_k e^{-A₂ s(y, n_k)}.
pub fn vector_r(domain: &ConvexDomain, f: &[f64], a2: f64, y: &Vec3, sphere: &SphereGrid) -> Result<Vec3> {
    check_profile(f, sphere)?;
    domain.require_interior(y)?;
    Ok(vector_r_unchecked(domain, f, a2, y, sphere))
}

fn vector_r_unchecked(domain: &ConvexDomain, f: &[f64], a2: f64, y: &Vec3, sphere: &SphereGrid) -> Vec3 {
    let mut r = Vec3::zeros();
    for ((n, &w), &fk) in sphere.nodes.iter().zip(&sphere.weights).zip(f) {
        if fk != 0.0 {
            r += n * (w * fk * (-a2 * domain.exit_distance_unchecked(y, n)).exp());
        }
    }
    r
}

/// Richardson-extrapolated divergence and its error bar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivEstimate {
    pub value: f64,
    pub error_bar: f64,
}

fn central_div(domain: &ConvexDomain, f: &[f64], a2: f64, y: &Vec3, sphere: &SphereGrid, h: f64) -> f64 {
    (0..3)
        .map(|k| {
            let mut e = Vec3::zeros();
            e[k] = h;
            (vector_r_unchecked(domain, f, a2, &(y + e), sphere)[k] - vector_r_unchecked(domain, f, a2, &(y - e), sphere)[k]) / (2.0 * h)
        })
        .sum()
}

/// Central differences of R at steps h and h/2, combined as (4D(h/2) - D(h))/3.
pub fn div_r(domain: &ConvexDomain, f: &[f64], a2: f64, y: &Vec3, sphere: &SphereGrid, h: f64) -> Result<DivEstimate> {
    check_profile(f, sphere)?;
    positive("h", h)?;
    domain.require_interior(y)?;
    let distance = domain.boundary_distance(y);
    if distance <= h {
        return Err(Error::TooCloseToBoundary { point: [y.x, y.y, y.z], h, distance });
    }
    let d1 = central_div(domain, f, a2, y, sphere, h);
    let d2 = central_div(domain, f, a2, y, sphere, 0.5 * h);
    Ok(DivEstimate { value: (4.0 * d2 - d1) / 3.0, error_bar: (d1 - d2).abs() / 3.0 })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Verdict {
    ExistsPossible,
    Nonexistent { point: Vec3, value: f64 },
    /// The largest |div R| is within its own error bar of `tol`.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonexistenceReport {
    pub a2: f64,
    pub tol: f64,
    /// (sample point, div R estimate)
    pub rows: Vec<(Vec3, DivEstimate)>,
    pub verdict: Verdict,
    /// Some samples are below `tol` and others above it.
    pub mixed: bool,
}

/// Evaluate div R at every sample and decide whether it can vanish.
pub fn nonexistence_check(
    domain: &ConvexDomain,
    f: &[f64],
    a2: f64,
    samples: &[Vec3],
    tol: f64,
    sphere: &SphereGrid,
    h: f64,
    exec: Exec,
) -> Result<NonexistenceReport> {
    positive("A2", a2)?;
    positive("tol", tol)?;
    let vals = exec.map(samples.len(), |i| div_r(domain, f, a2, &samples[i], sphere, h));
    let mut rows = Vec::with_capacity(samples.len());
    for (y, v) in samples.iter().zip(vals) {
        rows.push((*y, v?));
    }
    let worst = rows.iter().max_by(|a, b| a.1.value.abs().total_cmp(&b.1.value.abs()));
    let above = rows.iter().filter(|r| r.1.value.abs() >= tol).count();
    let verdict = match worst {
        None => Verdict::ExistsPossible,
        Some((p, d)) => {
            if (d.value.abs() - tol).abs() <= d.error_bar {
                Verdict::Inconclusive
            } else if d.value.abs() < tol {
                Verdict::ExistsPossible
            } else {
                Verdict::Nonexistent { point: *p, value: d.value }
            }
        }
    };
    Ok(NonexistenceReport { a2, tol, mixed: above > 0 && above < rows.len(), rows, verdict })
}
