//! Plane-parallel radiative transfer on [0, L].
//!
//! Directions are indexed by μ = cosψ ∈ (0, 1]; every field stores a `plus`
//! half (travelling towards +y, fed at y = 0) and a `minus` half (fed at
//! y = L). Sweeps integrate μ dG/dy = S(y) - κ(y) G along characteristics
//! with a source that is linear between nodes, so constant-coefficient
//! problems are solved exactly.

mod fredholm;

pub use fredholm::{
    fredholm_kernel_k, solve_exp_limit, solve_lte_fredholm, ExpLimitSolution, FredholmOptions, LteSolution, NystromOperator,
};

use std::f64::consts::PI;

use crate::error::{positive, Error, Result};
use crate::physics::{boltzmann_ratio, pseudo_planck, PhysConsts};
use crate::quad::Rule;
use crate::special::expn;

#[derive(Debug, Clone, PartialEq)]
pub struct SlabGrid {
    pub l: f64,
    pub y: Vec<f64>,
}

impl SlabGrid {
    pub fn uniform(l: f64, n_y: usize) -> Result<Self> {
        let l = Self::check(l, n_y)?;
        let h = l / (n_y - 1) as f64;
        let mut y: Vec<f64> = (0..n_y).map(|i| i as f64 * h).collect();
        y[n_y - 1] = l;
        Ok(SlabGrid { l, y })
    }

    /// Nodes y = L(1 - cos πs)/2 on uniform s, clustered at both walls.
    pub fn graded(l: f64, n_y: usize) -> Result<Self> {
        let l = Self::check(l, n_y)?;
        let mut y: Vec<f64> = (0..n_y).map(|i| 0.5 * l * (1.0 - (PI * i as f64 / (n_y - 1) as f64).cos())).collect();
        y[0] = 0.0;
        y[n_y - 1] = l;
        Ok(SlabGrid { l, y })
    }

    fn check(l: f64, n_y: usize) -> Result<f64> {
        if n_y < 16 {
            return Err(Error::InvalidParameter { name: "n_y", reason: format!("need >= 16, got {n_y}") });
        }
        positive("L", l)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Trapezoid integral of a nodal field (exact for piecewise-linear data).
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.y.windows(2).zip(f.windows(2)).map(|(y, v)| 0.5 * (y[1] - y[0]) * (v[0] + v[1])).sum()
    }

    /// Piecewise-linear interpolation of a nodal field.
    pub fn interpolate(&self, f: &[f64], x: f64) -> f64 {
        let k = self.y.partition_point(|&yi| yi <= x).clamp(1, self.len() - 1);
        let (y0, y1) = (self.y[k - 1], self.y[k]);
        let t = (x - y0) / (y1 - y0);
        f[k - 1] + t * (f[k] - f[k - 1])
    }

    /// The same grid read from the opposite wall.
    pub fn mirrored(&self) -> SlabGrid {
        SlabGrid { l: self.l, y: self.y.iter().rev().map(|y| self.l - y).collect() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AngleGrid {
    pub mu: Vec<f64>,
    pub weights: Vec<f64>,
}

impl AngleGrid {
    pub fn gauss_legendre(n_mu: usize) -> Result<Self> {
        if n_mu < 16 {
            return Err(Error::InvalidParameter { name: "n_mu", reason: format!("need >= 16, got {n_mu}") });
        }
        let r = Rule::gauss_legendre(n_mu, 0.0, 1.0);
        Ok(AngleGrid { mu: r.nodes, weights: r.weights })
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }
}

/// Incoming intensity as a function of μ ∈ (0, 1].
#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryProfile {
    Zero,
    Constant(f64),
    /// Pseudo-Planck value at temperature `t` for level spacing `epsilon0`.
    Planck { t: f64, epsilon0: f64 },
    /// Σ c_k μ^k.
    Polynomial(Vec<f64>),
    /// Piecewise linear through (mu, values), held constant outside.
    Tabulated { mu: Vec<f64>, values: Vec<f64> },
}

impl BoundaryProfile {
    pub fn planck(t: f64, consts: &PhysConsts) -> Self {
        BoundaryProfile::Planck { t, epsilon0: consts.epsilon0 }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            BoundaryProfile::Planck { t, epsilon0 } => {
                positive("T", *t)?;
                positive("epsilon0", *epsilon0)?;
            }
            BoundaryProfile::Tabulated { mu, values } => {
                if mu.is_empty() || mu.len() != values.len() {
                    return Err(Error::InvalidParameter { name: "profile", reason: "mu/values length mismatch".into() });
                }
                if mu.windows(2).any(|w| !(w[0] < w[1])) || mu[0] <= 0.0 || mu[mu.len() - 1] > 1.0 {
                    return Err(Error::InvalidParameter { name: "profile", reason: "mu must increase within (0, 1]".into() });
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        match self {
            BoundaryProfile::Zero => true,
            BoundaryProfile::Constant(c) => *c == 0.0,
            BoundaryProfile::Planck { .. } => false,
            BoundaryProfile::Polynomial(c) => c.iter().all(|&v| v == 0.0),
            BoundaryProfile::Tabulated { values, .. } => values.iter().all(|&v| v == 0.0),
        }
    }

    pub fn eval(&self, mu: f64) -> f64 {
        match self {
            BoundaryProfile::Zero => 0.0,
            BoundaryProfile::Constant(c) => *c,
            BoundaryProfile::Planck { t, epsilon0 } => planck_value(*t, *epsilon0),
            BoundaryProfile::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &ck| acc * mu + ck),
            BoundaryProfile::Tabulated { mu: m, values } => {
                if mu <= m[0] {
                    return values[0];
                }
                let k = m.partition_point(|&x| x < mu);
                if k >= m.len() {
                    return values[m.len() - 1];
                }
                let t = (mu - m[k - 1]) / (m[k] - m[k - 1]);
                values[k - 1] + t * (values[k] - values[k - 1])
            }
        }
    }

    /// Multiply by a constant.
    pub fn scaled(&self, s: f64) -> BoundaryProfile {
        match self {
            BoundaryProfile::Zero => BoundaryProfile::Zero,
            BoundaryProfile::Constant(c) => BoundaryProfile::Constant(s * c),
            BoundaryProfile::Planck { t, epsilon0 } => BoundaryProfile::Constant(s * planck_value(*t, *epsilon0)),
            BoundaryProfile::Polynomial(c) => BoundaryProfile::Polynomial(c.iter().map(|v| s * v).collect()),
            BoundaryProfile::Tabulated { mu, values } => {
                BoundaryProfile::Tabulated { mu: mu.clone(), values: values.iter().map(|v| s * v).collect() }
            }
        }
    }

    /// Rescale so that 2π∫₀¹ a(μ) dμ = 1. Fails for a zero profile.
    pub fn normalized(&self) -> Result<BoundaryProfile> {
        let total = 2.0 * PI * self.exp_moment(0, 0.0);
        if !(total > 0.0) {
            return Err(Error::InvalidParameter { name: "profile", reason: format!("cannot normalize, 2π∫a = {total}") });
        }
        Ok(self.scaled(1.0 / total))
    }

    /// ∫₀¹ μ^k a(μ) e^{-x/μ} dμ, in closed form through E_n.
    pub fn exp_moment(&self, k: u32, x: f64) -> f64 {
        match self {
            BoundaryProfile::Zero => 0.0,
            BoundaryProfile::Constant(c) => c * expn(k + 2, x),
            BoundaryProfile::Planck { t, epsilon0 } => planck_value(*t, *epsilon0) * expn(k + 2, x),
            BoundaryProfile::Polynomial(c) => c.iter().enumerate().map(|(m, &cm)| cm * expn(k + m as u32 + 2, x)).sum(),
            BoundaryProfile::Tabulated { mu, values } => {
                // ∫₀^b μ^m e^{-x/μ} dμ = b^{m+1} E_{m+2}(x/b)
                let prim = |m: u32, b: f64| if b <= 0.0 { 0.0 } else { b.powi(m as i32 + 1) * expn(m + 2, x / b) };
                let mut pts: Vec<(f64, f64)> = vec![(0.0, values[0])];
                pts.extend(mu.iter().copied().zip(values.iter().copied()));
                pts.push((1.0, values[values.len() - 1]));
                pts.windows(2)
                    .filter(|w| w[1].0 > w[0].0)
                    .map(|w| {
                        let ((a, va), (b, vb)) = (w[0], w[1]);
                        let slope = (vb - va) / (b - a);
                        let p0 = va - slope * a;
                        p0 * (prim(k, b) - prim(k, a)) + slope * (prim(k + 1, b) - prim(k + 1, a))
                    })
                    .sum()
            }
        }
    }
}

fn planck_value(t: f64, epsilon0: f64) -> f64 {
    1.0 / (2.0 * epsilon0 / t).exp_m1()
}

/// Incoming data on both walls; `minus` is indexed by |μ|.
#[derive(Debug, Clone, PartialEq)]
pub struct SlabBoundary {
    pub plus: BoundaryProfile,
    pub minus: BoundaryProfile,
}

impl SlabBoundary {
    pub fn one_sided(plus: BoundaryProfile) -> Self {
        SlabBoundary { plus, minus: BoundaryProfile::Zero }
    }

    pub fn symmetric(p: BoundaryProfile) -> Self {
        SlabBoundary { plus: p.clone(), minus: p }
    }

    pub fn zero() -> Self {
        Self::symmetric(BoundaryProfile::Zero)
    }

    pub fn mirrored(&self) -> Self {
        SlabBoundary { plus: self.minus.clone(), minus: self.plus.clone() }
    }

    pub fn scaled(&self, s: f64) -> Self {
        SlabBoundary { plus: self.plus.scaled(s), minus: self.minus.scaled(s) }
    }
}

/// Intensity on the slab grid for ±μ_j.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiationField {
    pub y: Vec<f64>,
    pub mu: Vec<f64>,
    pub weights: Vec<f64>,
    /// plus[i][j] = G(y_i, +μ_j)
    pub plus: Vec<Vec<f64>>,
    /// minus[i][j] = G(y_i, -μ_j)
    pub minus: Vec<Vec<f64>>,
}

impl RadiationField {
    pub fn zeros(grid: &SlabGrid, angles: &AngleGrid) -> Self {
        let row = vec![0.0; angles.len()];
        RadiationField {
            y: grid.y.clone(),
            mu: angles.mu.clone(),
            weights: angles.weights.clone(),
            plus: vec![row.clone(); grid.len()],
            minus: vec![row; grid.len()],
        }
    }

    /// J(y_i) = 2π Σ w_j μ_j (G⁺ - G⁻).
    pub fn flux(&self) -> Vec<f64> {
        self.plus
            .iter()
            .zip(&self.minus)
            .map(|(p, m)| 2.0 * PI * (0..self.mu.len()).map(|j| self.weights[j] * self.mu[j] * (p[j] - m[j])).sum::<f64>())
            .collect()
    }

    /// ∫_{S²} G dn = 2π Σ w_j (G⁺ + G⁻).
    pub fn angular_integral(&self) -> Vec<f64> {
        self.plus
            .iter()
            .zip(&self.minus)
            .map(|(p, m)| 2.0 * PI * (0..self.mu.len()).map(|j| self.weights[j] * (p[j] + m[j])).sum::<f64>())
            .collect()
    }

    pub fn min_value(&self) -> f64 {
        self.plus.iter().chain(&self.minus).flatten().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.plus.iter().chain(&self.minus).flatten().fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub fn flux(g: &RadiationField) -> Vec<f64> {
    g.flux()
}

/// (e^{-τ}, upstream weight, downstream weight) for one cell of length
/// `d` with constant absorption κ and linear source, direction cosine μ.
pub(crate) fn cell_coeffs(kappa: f64, d: f64, mu: f64) -> (f64, f64, f64) {
    let s = d / mu;
    let tau = kappa * s;
    if tau == 0.0 {
        return (1.0, 0.5 * s, 0.5 * s);
    }
    let e = (-tau).exp();
    let g1 = -(-tau).exp_m1() / tau;
    // (1 - e^{-τ}(1 + τ)) / τ²
    let g2 = if tau < 1e-2 {
        0.5 - tau / 3.0 + tau * tau / 8.0 - tau.powi(3) / 30.0 + tau.powi(4) / 144.0
    } else {
        (-(-tau).exp_m1() - tau * e) / (tau * tau)
    };
    (e, s * g2, s * (g1 - g2))
}

/// Solve μ dG/dy = S - κG (both signs of μ) with piecewise-linear S and
/// cell-averaged κ.
pub(crate) fn sweep(grid: &SlabGrid, angles: &AngleGrid, kappa: &[f64], source: &[f64], boundary: &SlabBoundary) -> RadiationField {
    let n = grid.len();
    let mut field = RadiationField::zeros(grid, angles);
    for (j, &mu) in angles.mu.iter().enumerate() {
        field.plus[0][j] = boundary.plus.eval(mu);
        for i in 0..n - 1 {
            let k = 0.5 * (kappa[i] + kappa[i + 1]);
            let (e, a, b) = cell_coeffs(k, grid.y[i + 1] - grid.y[i], mu);
            field.plus[i + 1][j] = field.plus[i][j] * e + a * source[i] + b * source[i + 1];
        }
        field.minus[n - 1][j] = boundary.minus.eval(mu);
        for i in (0..n - 1).rev() {
            let k = 0.5 * (kappa[i] + kappa[i + 1]);
            let (e, a, b) = cell_coeffs(k, grid.y[i + 1] - grid.y[i], mu);
            field.minus[i][j] = field.minus[i + 1][j] * e + a * source[i + 1] + b * source[i];
        }
    }
    field
}

/// Radiation in a slab of gas with density ρ(y) ≥ 0 and temperature T(y):
/// absorption ε₀ρ(1 - x), emission ε₀ρx, x = e^{-2ε₀/T}.
pub fn transport_solve(
    rho: &[f64],
    t: &[f64],
    boundary: &SlabBoundary,
    consts: &PhysConsts,
    grid: &SlabGrid,
    angles: &AngleGrid,
) -> Result<RadiationField> {
    if rho.len() != grid.len() || t.len() != grid.len() {
        return Err(Error::InvalidParameter { name: "fields", reason: "length differs from grid".into() });
    }
    boundary.plus.validate()?;
    boundary.minus.validate()?;
    if let Some(&r) = rho.iter().find(|r| !(**r >= 0.0)) {
        return Err(Error::InvalidParameter { name: "rho", reason: format!("must be >= 0, got {r}") });
    }
    for &ti in t {
        positive("T", ti)?;
    }
    let x: Vec<f64> = t.iter().map(|&ti| boltzmann_ratio(ti, consts)).collect();
    let kappa: Vec<f64> = rho.iter().zip(&x).map(|(r, x)| consts.epsilon0 * r * (1.0 - x)).collect();
    let source: Vec<f64> = rho.iter().zip(&x).map(|(r, x)| consts.epsilon0 * r * x).collect();
    Ok(sweep(grid, angles, &kappa, &source, boundary))
}

/// G₀ for a constant state: the value Planck boundaries must carry.
pub fn planck_intensity(t: f64, consts: &PhysConsts) -> f64 {
    pseudo_planck(t, consts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_coeffs_small_tau_branch_is_continuous() {
        let (_, a1, b1) = cell_coeffs(1.0, 0.009_999_999, 1.0);
        let (_, a2, b2) = cell_coeffs(1.0, 0.010_000_001, 1.0);
        assert!((a1 - a2).abs() < 1e-9 && (b1 - b2).abs() < 1e-9);
    }

    #[test]
    fn tabulated_moment_matches_constant() {
        let tab = BoundaryProfile::Tabulated { mu: vec![0.2, 0.7], values: vec![2.0, 2.0] };
        let c = BoundaryProfile::Constant(2.0);
        for x in [0.0, 0.3, 2.0] {
            assert!((tab.exp_moment(1, x) - c.exp_moment(1, x)).abs() < 1e-13);
        }
    }
}
