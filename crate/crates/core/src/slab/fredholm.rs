//! Second-kind Fredholm problems with kernel K(x) = ½E₁(|x|) on [0, L].
//!
//! Unknowns are nodal values of a piecewise-linear function; every integral
//! against an E_n kernel is done by product integration (exact moments of
//! E_n over each cell), which absorbs the logarithmic singularity of E₁.

use nalgebra::{DMatrix, DVector};

use super::{cell_coeffs, AngleGrid, BoundaryProfile, RadiationField, SlabGrid};
use crate::error::{Error, Result};
use crate::physics::{pseudo_planck, PhysConsts};
use crate::quad::Rule;
use crate::special::{e1, expn};

use std::f64::consts::PI;

/// K(x) = ½∫₀^{π/2} tanψ e^{-|x|/cosψ} dψ = ½E₁(|x|).
pub fn fredholm_kernel_k(x: f64) -> Result<f64> {
    if x == 0.0 || !x.is_finite() {
        return Err(Error::SingularPoint);
    }
    Ok(0.5 * e1(x.abs()))
}

/// ∫_{lo}^{hi} E_n(t) dt and ∫_{lo}^{hi} t E_n(t) dt.
fn en_moments(n: u32, lo: f64, hi: f64) -> (f64, f64) {
    let i0 = expn(n + 1, lo) - expn(n + 1, hi);
    let i1 = (lo * expn(n + 1, lo) + expn(n + 2, lo)) - (hi * expn(n + 1, hi) + expn(n + 2, hi));
    (i0, i1)
}

/// Weights (w_lo, w_hi) of ∫_{lo}^{hi} E_n(t) φ(t) dt for the linear φ that
/// is 1 at `lo` and 0 at `hi` (first) or the reverse (second).
fn hat_weights(n: u32, lo: f64, hi: f64, gl: &Rule) -> (f64, f64) {
    let h = hi - lo;
    if lo > 2.0 * h {
        // smooth over the cell: Gauss is more accurate than moment differences
        let (mut a, mut b) = (0.0, 0.0);
        for (&s, &w) in gl.nodes.iter().zip(&gl.weights) {
            let t = lo + s * h;
            let v = w * h * expn(n, t);
            a += v * (1.0 - s);
            b += v * s;
        }
        return (a, b);
    }
    let (i0, i1) = en_moments(n, lo, hi);
    ((hi * i0 - i1) / h, (i1 - lo * i0) / h)
}

/// Matrix M with (M f)_i = ∫₀^L k(y_i - ξ) f(ξ) dξ for piecewise-linear f,
/// where k(t) = c_right E_n(|t|) for ξ > y_i and c_left E_n(|t|) for ξ < y_i.
fn product_matrix(grid: &SlabGrid, n: u32, c_left: f64, c_right: f64) -> DMatrix<f64> {
    let m = grid.len();
    let gl = Rule::gauss_legendre(6, 0.0, 1.0);
    let mut mat = DMatrix::zeros(m, m);
    for i in 0..m {
        let x = grid.y[i];
        for j in 0..m - 1 {
            let (a, b) = (grid.y[j], grid.y[j + 1]);
            if a >= x {
                // t = ξ - x grows with ξ: node j sits at t = lo
                let (wa, wb) = hat_weights(n, a - x, b - x, &gl);
                mat[(i, j)] += c_right * wa;
                mat[(i, j + 1)] += c_right * wb;
            } else {
                // t = x - ξ: node j+1 sits at t = lo
                let (wb, wa) = hat_weights(n, x - b, x - a, &gl);
                mat[(i, j)] += c_left * wa;
                mat[(i, j + 1)] += c_left * wb;
            }
        }
    }
    mat
}

/// Discretized K on one grid, with the norm used for the contraction test.
#[derive(Debug, Clone)]
pub struct NystromOperator {
    pub grid: SlabGrid,
    pub matrix: DMatrix<f64>,
}

impl NystromOperator {
    pub fn new(grid: &SlabGrid) -> Self {
        NystromOperator { grid: grid.clone(), matrix: product_matrix(grid, 1, 0.5, 0.5) }
    }

    /// max_i Σ_j W_ij, the discrete sup_x ∫₀^L K(x - ξ) dξ.
    pub fn sup_row_sum(&self) -> f64 {
        self.matrix.row_iter().map(|r| r.sum()).fold(0.0, f64::max)
    }

    /// Exact ∫₀^L K(x - ξ) dξ = 1 - ½(E₂(x) + E₂(L - x)).
    pub fn exact_row_mass(&self, x: f64) -> f64 {
        1.0 - 0.5 * (expn(2, x) + expn(2, self.grid.l - x))
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        (&self.matrix * DVector::from_column_slice(f)).iter().copied().collect()
    }

    fn check_contraction(&self) -> Result<f64> {
        let norm = self.sup_row_sum();
        if !(norm < 1.0) {
            return Err(Error::NonContraction { norm });
        }
        Ok(norm)
    }

    /// Dense LU solve of (I - W) u = g.
    pub fn solve_direct(&self, g: &[f64]) -> Result<Vec<f64>> {
        let m = self.grid.len();
        let a = DMatrix::identity(m, m) - &self.matrix;
        a.lu()
            .solve(&DVector::from_column_slice(g))
            .map(|v| v.iter().copied().collect())
            .ok_or_else(|| Error::LinearSolve("I - K is singular".into()))
    }

    /// Picard iteration u ← W u + g from u = g. Returns the iterate, the
    /// iteration count and the largest observed update ratio.
    pub fn solve_picard(&self, g: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, usize, f64)> {
        let scale = g.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let mut u = g.to_vec();
        if scale == 0.0 {
            return Ok((u, 0, 0.0));
        }
        let mut prev_delta = f64::NAN;
        let mut ratio: f64 = 0.0;
        for it in 1..=max_iter {
            let ku = self.apply(&u);
            let next: Vec<f64> = ku.iter().zip(g).map(|(a, b)| a + b).collect();
            let delta = next.iter().zip(&u).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
            if prev_delta.is_finite() && prev_delta > 1e-10 * scale {
                ratio = ratio.max(delta / prev_delta);
            }
            u = next;
            if delta <= tol * scale {
                return Ok((u, it, ratio));
            }
            prev_delta = delta;
        }
        Err(Error::NotConverged { iterations: max_iter, last_update: prev_delta })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FredholmOptions {
    /// Background temperature entering α₀ = (2ε₀/T₀)(1 + G₀).
    pub t0: f64,
    /// Prescribed ∫ζ; `None` gives C₀ = 0.
    pub mass: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FredholmOptions {
    fn default() -> Self {
        FredholmOptions { t0: 2.0, mass: None, tol: 1e-14, max_iter: 100_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LteSolution {
    pub y: Vec<f64>,
    pub theta: Vec<f64>,
    pub zeta: Vec<f64>,
    pub c0: f64,
    /// Constant value of ∫₀^{π/2} sinψ cosψ h dψ (the flux over 2π).
    pub i0: f64,
    /// Reconstructed flux J(y)/2π at the nodes.
    pub flux: Vec<f64>,
    pub alpha0: f64,
    pub sup_kernel_mass: f64,
    pub picard_theta: Vec<f64>,
    pub picard_iterations: usize,
    pub picard_ratio: f64,
    /// max |θ_direct - θ_picard|
    pub method_gap: f64,
    /// max over nodes of |θ - Kθ - g|
    pub node_residual: f64,
    /// same at cell midpoints (discretization error)
    pub midpoint_residual: f64,
    /// one-sided differences of ζ + θ at y = 0 and y = L
    pub neumann_residual: (f64, f64),
    pub mass_residual: f64,
}

/// (K f)(x) at an arbitrary x by product integration against the
/// piecewise-linear interpolant of f.
fn apply_at(grid: &SlabGrid, f: &[f64], x: f64) -> f64 {
    let gl = Rule::gauss_legendre(6, 0.0, 1.0);
    let mut s = 0.0;
    for j in 0..grid.len() - 1 {
        let (a, b) = (grid.y[j], grid.y[j + 1]);
        if a >= x {
            let (wa, wb) = hat_weights(1, a - x, b - x, &gl);
            s += 0.5 * (wa * f[j] + wb * f[j + 1]);
        } else if b <= x {
            let (wb, wa) = hat_weights(1, x - b, x - a, &gl);
            s += 0.5 * (wa * f[j] + wb * f[j + 1]);
        } else {
            let fx = f[j] + (x - a) / (b - a) * (f[j + 1] - f[j]);
            let (wa, wx) = hat_weights(1, 0.0, x - a, &gl);
            let (wx2, wb) = hat_weights(1, 0.0, b - x, &gl);
            s += 0.5 * (wx * f[j] + wa * fx + wx2 * fx + wb * f[j + 1]);
        }
    }
    s
}

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Linearized LTE steady state driven by incoming radiation `j0` at y = 0
/// (unit absorption length).
pub fn solve_lte_fredholm(j0: &BoundaryProfile, grid: &SlabGrid, consts: &PhysConsts, opts: &FredholmOptions) -> Result<LteSolution> {
    j0.validate()?;
    crate::error::positive("T0", opts.t0)?;
    let alpha0 = 2.0 * consts.epsilon0 / opts.t0 * (1.0 + pseudo_planck(opts.t0, consts));
    let op = NystromOperator::new(grid);
    let sup_kernel_mass = op.check_contraction()?;

    // -½Φ'(x) = (1/2α₀) ∫₀¹ j0(μ) e^{-x/μ} dμ
    let forcing = |x: f64| j0.exp_moment(0, x) / (2.0 * alpha0);
    let g: Vec<f64> = grid.y.iter().map(|&x| forcing(x)).collect();

    let theta = op.solve_direct(&g)?;
    let (picard_theta, picard_iterations, picard_ratio) = op.solve_picard(&g, opts.tol, opts.max_iter)?;
    let method_gap = max_abs(theta.iter().zip(&picard_theta).map(|(a, b)| a - b));

    let k_theta = op.apply(&theta);
    let node_residual = max_abs((0..grid.len()).map(|i| theta[i] - k_theta[i] - g[i]));
    let midpoint_residual = max_abs(grid.y.windows(2).map(|w| {
        let x = 0.5 * (w[0] + w[1]);
        grid.interpolate(&theta, x) - apply_at(grid, &theta, x) - forcing(x)
    }));

    // J/2π = ∫μ j0 e^{-y/μ} + α₀[∫₀^y θE₂(y-ξ) - ∫_y^L θE₂(ξ-y)]
    let flux_op = product_matrix(grid, 2, 1.0, -1.0);
    let ft = &flux_op * DVector::from_column_slice(&theta);
    let flux: Vec<f64> = grid.y.iter().enumerate().map(|(i, &y)| j0.exp_moment(1, y) + alpha0 * ft[i]).collect();
    let i0 = flux.iter().sum::<f64>() / flux.len() as f64;

    let int_theta = grid.integrate(&theta);
    let c0 = match opts.mass {
        Some(m) => (m + int_theta) / grid.l,
        None => 0.0,
    };
    let zeta: Vec<f64> = theta.iter().map(|t| c0 - t).collect();
    let sum: Vec<f64> = zeta.iter().zip(&theta).map(|(a, b)| a + b).collect();
    let n = grid.len();
    let neumann_residual = (
        (sum[1] - sum[0]) / (grid.y[1] - grid.y[0]),
        (sum[n - 1] - sum[n - 2]) / (grid.y[n - 1] - grid.y[n - 2]),
    );
    let mass_target = opts.mass.unwrap_or(-int_theta);
    let mass_residual = (grid.integrate(&zeta) - mass_target).abs();

    Ok(LteSolution {
        y: grid.y.clone(),
        theta,
        zeta,
        c0,
        i0,
        flux,
        alpha0,
        sup_kernel_mass,
        picard_theta,
        picard_iterations,
        picard_ratio,
        method_gap,
        node_residual,
        midpoint_residual,
        neumann_residual,
        mass_residual,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpLimitSolution {
    pub y: Vec<f64>,
    /// w = e^ϑ at the nodes.
    pub w: Vec<f64>,
    /// Constant flux ∫_{S²} nH dn.
    pub j0: f64,
    /// ∫_{S²} nH dn at each node, angular integrals done exactly.
    pub flux: Vec<f64>,
    /// ∫_{S²} (H - w) dn at each node, angular integrals done exactly.
    pub energy_residual: Vec<f64>,
    pub h: RadiationField,
    pub sup_kernel_mass: f64,
    pub picard_iterations: usize,
    pub picard_ratio: f64,
    pub method_gap: f64,
}

/// Exponential-temperature limit with b₁ = 1: solve
/// w = Kw - ½S′ with S(y) = ∫₀¹ μ a₊(μ) e^{-y/μ} dμ, then rebuild H.
pub fn solve_exp_limit(a_plus: &BoundaryProfile, grid: &SlabGrid, angles: &AngleGrid, opts: &FredholmOptions) -> Result<ExpLimitSolution> {
    a_plus.validate()?;
    let op = NystromOperator::new(grid);
    let sup_kernel_mass = op.check_contraction()?;
    let g: Vec<f64> = grid.y.iter().map(|&y| 0.5 * a_plus.exp_moment(0, y)).collect();
    let w = op.solve_direct(&g)?;
    let (wp, picard_iterations, picard_ratio) = op.solve_picard(&g, opts.tol, opts.max_iter)?;
    let method_gap = max_abs(w.iter().zip(&wp).map(|(a, b)| a - b));

    if !a_plus.is_zero() {
        if let Some((i, &v)) = w.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Err(Error::NonPositiveW { value: v, location: format!("y = {}", grid.y[i]) });
        }
    }

    // H along characteristics: μ dH/dy = w - H
    let n = grid.len();
    let mut h = RadiationField::zeros(grid, angles);
    for (j, &mu) in angles.mu.iter().enumerate() {
        h.plus[0][j] = a_plus.eval(mu);
        for i in 0..n - 1 {
            let (e, a, b) = cell_coeffs(1.0, grid.y[i + 1] - grid.y[i], mu);
            h.plus[i + 1][j] = h.plus[i][j] * e + a * w[i] + b * w[i + 1];
        }
        for i in (0..n - 1).rev() {
            let (e, a, b) = cell_coeffs(1.0, grid.y[i + 1] - grid.y[i], mu);
            h.minus[i][j] = h.minus[i + 1][j] * e + a * w[i + 1] + b * w[i];
        }
    }

    let flux_op = product_matrix(grid, 2, 1.0, -1.0);
    let fw = &flux_op * DVector::from_column_slice(&w);
    let flux: Vec<f64> = grid.y.iter().enumerate().map(|(i, &y)| 2.0 * PI * (a_plus.exp_moment(1, y) + fw[i])).collect();
    let j0 = flux.iter().sum::<f64>() / flux.len() as f64;

    // ∫H dn = 2π[∫a₊e^{-y/μ}dμ + ∫E₁(|y-z|)w dz] = 4π(g + Kw)
    let kw = op.apply(&w);
    let energy_residual = (0..n).map(|i| 4.0 * PI * (g[i] + kw[i] - w[i])).collect();

    Ok(ExpLimitSolution {
        y: grid.y.clone(),
        w,
        j0,
        flux,
        energy_residual,
        h,
        sup_kernel_mass,
        picard_iterations,
        picard_ratio,
        method_gap,
    })
}
