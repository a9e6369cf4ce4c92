//! Lattice solve of w(y) = ∫_Ω e^{-|y-η|}/(4π|y-η|²) w(η) dη - (1/4π) div R(y).
//!
//! w is piecewise constant on the cells of a box lattice over the bounding
//! box; clipped cells carry their subsampled volume fraction. The volume
//! integral is a discrete convolution with cell-integrated kernel weights,
//! applied through a zero-padded 3-D FFT.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{div_r, ConvexDomain, SphereGrid};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::quad::Rule;
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeSpec {
    /// Cells per axis over the bounding box.
    pub cells: [usize; 3],
    /// Subsamples per axis for volume fractions (2 gives 8 points).
    pub subsamples: usize,
    pub tol: f64,
    pub max_iter: usize,
    /// Divergence step as a fraction of the smallest cell side.
    pub fd_fraction: f64,
    /// Replace each lattice row mass by the exact ∫_Ω K(y - η) dη from
    /// exit distances, i.e. discretize ∫K(w(η) - w(y)) and add w(y)·mass.
    pub mass_correction: bool,
}

impl LatticeSpec {
    pub fn cubic(n: usize) -> Self {
        LatticeSpec { cells: [n; 3], subsamples: 2, tol: 1e-12, max_iter: 2000, fd_fraction: 0.25, mass_correction: true }
    }

    /// Near-cubic cells with at most `n_max` cells along the longest side.
    pub fn for_domain(domain: &ConvexDomain, n_max: usize) -> Self {
        let (lo, hi) = domain.bounding_box();
        let ext = hi - lo;
        let h = ext.max() / n_max as f64;
        let cells = [0, 1, 2].map(|k| ((ext[k] / h).round() as usize).max(1));
        LatticeSpec { cells, ..Self::cubic(n_max) }
    }

    fn validate(&self) -> Result<()> {
        if self.cells.iter().any(|&c| c < 2) || self.subsamples == 0 {
            return Err(Error::InvalidParameter { name: "lattice", reason: format!("{self:?}") });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VolumeField {
    /// Sample points (cell centre, or centroid of the inside part for
    /// cells whose centre lies outside).
    pub points: Vec<Vec3>,
    pub values: Vec<f64>,
    /// Lattice index of each sample.
    pub index: Vec<[usize; 3]>,
    pub volume_fraction: Vec<f64>,
    /// -(1/4π) div R at each sample.
    pub source: Vec<f64>,
    /// Lattice quadrature of ∫_Ω K(y - η) dη at each sample.
    pub kernel_mass: Vec<f64>,
    /// (1/4π)∫(1 - e^{-s(y,n)}) dn on the sphere grid at each sample.
    pub exact_mass: Vec<f64>,
    pub picard_iterations: usize,
    /// Largest ratio of successive update norms.
    pub picard_ratio: f64,
    pub cell: Vec3,
}

impl VolumeField {
    pub fn max_kernel_mass(&self) -> f64 {
        self.kernel_mass.iter().copied().fold(0.0, f64::max)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn kernel(r: &Vec3) -> f64 {
    let d2 = r.norm_squared();
    (-d2.sqrt()).exp() / (4.0 * PI * d2)
}

fn gauss_box(lo: &Vec3, hi: &Vec3, rule: &Rule) -> f64 {
    let mut s = 0.0;
    let span = hi - lo;
    for (&a, &wa) in rule.nodes.iter().zip(&rule.weights) {
        for (&b, &wb) in rule.nodes.iter().zip(&rule.weights) {
            for (&c, &wc) in rule.nodes.iter().zip(&rule.weights) {
                let p = Vec3::new(lo.x + a * span.x, lo.y + b * span.y, lo.z + c * span.z);
                s += wa * wb * wc * kernel(&p);
            }
        }
    }
    s * span.x * span.y * span.z
}

struct BoxRules {
    fine: Rule,
    coarse: Rule,
}

/// ∫ over [lo, hi] (not containing the origin) of the kernel, splitting
/// boxes that are large relative to their distance from the origin.
fn box_integral(lo: Vec3, hi: Vec3, rules: &BoxRules, depth: usize) -> f64 {
    let nearest = Vec3::from_fn(|k, _| 0.0_f64.clamp(lo[k], hi[k]));
    let dist = nearest.norm();
    let span = hi - lo;
    let side = span.max();
    if side > dist && depth < 16 {
        let k = span.imax();
        let mid = 0.5 * (lo[k] + hi[k]);
        let (mut hi1, mut lo2) = (hi, lo);
        hi1[k] = mid;
        lo2[k] = mid;
        return box_integral(lo, hi1, rules, depth + 1) + box_integral(lo2, hi, rules, depth + 1);
    }
    let rule = if dist >= 4.0 * side { &rules.coarse } else { &rules.fine };
    gauss_box(&lo, &hi, rule)
}

/// ∫ over the cell centred at the origin, (1/4π)∫(1 - e^{-ρ(n)}) dn, done
/// face by face: for the face at distance a the solid angle element is
/// a/r³ du dv.
fn self_cell_integral(cell: &Vec3) -> f64 {
    let rule = Rule::gauss_legendre(24, 0.0, 1.0);
    let mut total = 0.0;
    for k in 0..3 {
        let a = 0.5 * cell[k];
        let (bu, bv) = (0.5 * cell[(k + 1) % 3], 0.5 * cell[(k + 2) % 3]);
        let mut s = 0.0;
        for (&su, &wu) in rule.nodes.iter().zip(&rule.weights) {
            for (&sv, &wv) in rule.nodes.iter().zip(&rule.weights) {
                let (u, v) = (su * bu, sv * bv);
                let r = (a * a + u * u + v * v).sqrt();
                s += wu * wv * (-(-r).exp_m1()) * a / (r * r * r);
            }
        }
        // one quadrant of the face, four quadrants, two opposite faces
        total += 8.0 * s * bu * bv;
    }
    total / (4.0 * PI)
}

struct Fft3 {
    dims: [usize; 3],
    fwd: [Arc<dyn Fft<f64>>; 3],
    inv: [Arc<dyn Fft<f64>>; 3],
}

impl Fft3 {
    fn new(dims: [usize; 3]) -> Self {
        let mut p = FftPlanner::new();
        Fft3 {
            dims,
            fwd: dims.map(|d| p.plan_fft_forward(d)),
            inv: dims.map(|d| p.plan_fft_inverse(d)),
        }
    }

    fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.dims[1] + j) * self.dims[2] + k
    }

    fn transform(&self, buf: &mut [Complex64], inverse: bool, exec: Exec) {
        let plans = if inverse { &self.inv } else { &self.fwd };
        let [n0, n1, n2] = self.dims;
        // axis 2 is contiguous
        let rows: Vec<Vec<Complex64>> = exec.map(n0 * n1, |r| {
            let mut line = buf[r * n2..(r + 1) * n2].to_vec();
            plans[2].process(&mut line);
            line
        });
        for (r, line) in rows.into_iter().enumerate() {
            buf[r * n2..(r + 1) * n2].copy_from_slice(&line);
        }
        let cols: Vec<Vec<Complex64>> = exec.map(n0 * n2, |c| {
            let (i, k) = (c / n2, c % n2);
            let mut line: Vec<Complex64> = (0..n1).map(|j| buf[self.idx(i, j, k)]).collect();
            plans[1].process(&mut line);
            line
        });
        for (c, line) in cols.into_iter().enumerate() {
            let (i, k) = (c / n2, c % n2);
            for (j, v) in line.into_iter().enumerate() {
                buf[self.idx(i, j, k)] = v;
            }
        }
        let deep: Vec<Vec<Complex64>> = exec.map(n1 * n2, |c| {
            let (j, k) = (c / n2, c % n2);
            let mut line: Vec<Complex64> = (0..n0).map(|i| buf[self.idx(i, j, k)]).collect();
            plans[0].process(&mut line);
            line
        });
        for (c, line) in deep.into_iter().enumerate() {
            let (j, k) = (c / n2, c % n2);
            for (i, v) in line.into_iter().enumerate() {
                buf[self.idx(i, j, k)] = v;
            }
        }
    }
}

/// The convolution operator u ↦ Σ_j W(i - j) u_j on the lattice.
struct Convolution {
    n: [usize; 3],
    fft: Fft3,
    kernel_hat: Vec<Complex64>,
}

impl Convolution {
    fn new(n: [usize; 3], cell: &Vec3, exec: Exec) -> Self {
        let pad = n.map(|c| 2 * c);
        let rules = BoxRules { fine: Rule::gauss_legendre(6, 0.0, 1.0), coarse: Rule::gauss_legendre(3, 0.0, 1.0) };
        // W depends on |o| per axis; compute one octant
        let octant = exec.map(n[0] * n[1] * n[2], |f| {
            let o = [f / (n[1] * n[2]), (f / n[2]) % n[1], f % n[2]];
            if o == [0, 0, 0] {
                return self_cell_integral(cell);
            }
            let c = Vec3::from_fn(|k, _| o[k] as f64 * cell[k]);
            box_integral(c - 0.5 * cell, c + 0.5 * cell, &rules, 0)
        });
        let fft = Fft3::new(pad);
        let mut buf = vec![Complex64::new(0.0, 0.0); pad.iter().product()];
        for a in 0..n[0] {
            for b in 0..n[1] {
                for c in 0..n[2] {
                    let w = octant[(a * n[1] + b) * n[2] + c];
                    for sa in signs(a) {
                        for sb in signs(b) {
                            for sc in signs(c) {
                                let i = wrap(sa * a as isize, pad[0]);
                                let j = wrap(sb * b as isize, pad[1]);
                                let k = wrap(sc * c as isize, pad[2]);
                                buf[fft.idx(i, j, k)] = Complex64::new(w, 0.0);
                            }
                        }
                    }
                }
            }
        }
        fft.transform(&mut buf, false, exec);
        Convolution { n, fft, kernel_hat: buf }
    }

    /// Apply to a field given on the unpadded lattice (row-major).
    fn apply(&self, u: &[f64], exec: Exec) -> Vec<f64> {
        let [n0, n1, n2] = self.n;
        let mut buf = vec![Complex64::new(0.0, 0.0); self.kernel_hat.len()];
        for i in 0..n0 {
            for j in 0..n1 {
                for k in 0..n2 {
                    buf[self.fft.idx(i, j, k)] = Complex64::new(u[(i * n1 + j) * n2 + k], 0.0);
                }
            }
        }
        self.fft.transform(&mut buf, false, exec);
        for (b, kh) in buf.iter_mut().zip(&self.kernel_hat) {
            *b *= kh;
        }
        self.fft.transform(&mut buf, true, exec);
        let scale = 1.0 / buf.len() as f64;
        let mut out = vec![0.0; n0 * n1 * n2];
        for i in 0..n0 {
            for j in 0..n1 {
                for k in 0..n2 {
                    out[(i * n1 + j) * n2 + k] = buf[self.fft.idx(i, j, k)].re * scale;
                }
            }
        }
        out
    }
}

fn signs(a: usize) -> Vec<isize> {
    if a == 0 {
        vec![1]
    } else {
        vec![1, -1]
    }
}

fn wrap(i: isize, p: usize) -> usize {
    i.rem_euclid(p as isize) as usize
}

struct Cell {
    index: [usize; 3],
    point: Vec3,
    fraction: f64,
}

fn clip_cells(domain: &ConvexDomain, spec: &LatticeSpec, lo: &Vec3, cell: &Vec3, exec: Exec) -> Vec<Cell> {
    let n = spec.cells;
    let s = spec.subsamples;
    let found = exec.map(n[0] * n[1] * n[2], |f| {
        let index = [f / (n[1] * n[2]), (f / n[2]) % n[1], f % n[2]];
        let centre = Vec3::from_fn(|k, _| lo[k] + (index[k] as f64 + 0.5) * cell[k]);
        let mut inside = 0usize;
        let mut sum = Vec3::zeros();
        for a in 0..s {
            for b in 0..s {
                for c in 0..s {
                    let off = Vec3::new(a as f64, b as f64, c as f64).add_scalar(0.5) / s as f64 - Vec3::repeat(0.5);
                    let p = centre + off.component_mul(cell);
                    if domain.contains(&p) {
                        inside += 1;
                        sum += p;
                    }
                }
            }
        }
        let centre_in = domain.contains(&centre);
        if inside == 0 && !centre_in {
            return None;
        }
        let fraction = (inside.max(1)) as f64 / (s * s * s) as f64;
        let point = if centre_in { centre } else { sum / inside as f64 };
        Some(Cell { index, point, fraction })
    });
    found.into_iter().flatten().collect()
}

/// Solve for w with A₂ = 1 (absorption length normalized to one).
pub fn solve_w(domain: &ConvexDomain, f: &[f64], spec: &LatticeSpec, sphere: &SphereGrid, exec: Exec) -> Result<VolumeField> {
    spec.validate()?;
    if f.iter().any(|v| *v < 0.0) {
        return Err(Error::InvalidParameter { name: "f", reason: "must be nonnegative".into() });
    }
    let (lo, hi) = domain.bounding_box();
    let n = spec.cells;
    let cell = Vec3::from_fn(|k, _| (hi[k] - lo[k]) / n[k] as f64);
    let cells = clip_cells(domain, spec, &lo, &cell, exec);
    let flat = |ix: &[usize; 3]| (ix[0] * n[1] + ix[1]) * n[2] + ix[2];

    let h0 = spec.fd_fraction * cell.min();
    let source: Vec<f64> = {
        let vals = exec.map(cells.len(), |c| {
            let p = &cells[c].point;
            let h = h0.min(0.45 * domain.boundary_distance(p));
            div_r(domain, f, 1.0, p, sphere, h).map(|d| -d.value / (4.0 * PI))
        });
        vals.into_iter().collect::<Result<_>>()?
    };

    let conv = Convolution::new(n, &cell, exec);
    let total = n.iter().product();
    let scatter = |vals: &dyn Fn(usize) -> f64| {
        let mut u = vec![0.0; total];
        for (c, cl) in cells.iter().enumerate() {
            u[flat(&cl.index)] = cl.fraction * vals(c);
        }
        u
    };
    let gather = |u: &[f64]| -> Vec<f64> { cells.iter().map(|cl| u[flat(&cl.index)]).collect() };

    let kernel_mass = gather(&conv.apply(&scatter(&|_| 1.0), exec));
    let exact_mass = exec.map(cells.len(), |c| {
        let p = &cells[c].point;
        let vals = sphere.tabulate(|n| -(-domain.exit_distance_unchecked(p, n)).exp_m1());
        sphere.integrate(&vals) / (4.0 * PI)
    });
    let diag: Vec<f64> = if spec.mass_correction {
        exact_mass.iter().zip(&kernel_mass).map(|(e, k)| e - k).collect()
    } else {
        vec![0.0; cells.len()]
    };

    let scale = source.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut w = source.clone();
    let mut iterations = 0;
    let mut ratio: f64 = 0.0;
    if scale > 0.0 {
        let mut prev = f64::NAN;
        loop {
            iterations += 1;
            let kw = gather(&conv.apply(&scatter(&|c| w[c]), exec));
            let next: Vec<f64> = (0..w.len()).map(|c| kw[c] + diag[c] * w[c] + source[c]).collect();
            let delta = next.iter().zip(&w).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
            if prev.is_finite() && prev > 1e-9 * scale {
                ratio = ratio.max(delta / prev);
            }
            w = next;
            if delta <= spec.tol * scale {
                break;
            }
            if iterations >= spec.max_iter {
                return Err(Error::NotConverged { iterations, last_update: delta });
            }
            prev = delta;
        }
        if let Some((c, &v)) = w.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            let p = cells[c].point;
            return Err(Error::NonPositiveW { value: v, location: format!("({}, {}, {})", p.x, p.y, p.z) });
        }
    }

    Ok(VolumeField {
        points: cells.iter().map(|c| c.point).collect(),
        values: w,
        index: cells.iter().map(|c| c.index).collect(),
        volume_fraction: cells.iter().map(|c| c.fraction).collect(),
        source,
        kernel_mass,
        exact_mass,
        picard_iterations: iterations,
        picard_ratio: ratio,
        cell,
    })
}
