//! Linearized stationary three-level gas in a slab.
//!
//! Perturbations: ρ_j = ρ₀x^{j-1}(1 + σ_j), T = T₀(1 + ξ), G = G_p(1 + h)
//! with x = e^{-2ε/T₀}. With a = σ₂ - σ₁ and b = σ₃ - σ₂ the radiation
//! obeys n·∇h = ερ₀(γ₁a + γ₂x b) - κh, κ = ερ₀(γ₁ + γ₂x)(1 - x), and at
//! every node
//!
//! ```text
//! 4πG_p(γ₁a + xγ₂b)       = x(γ₁ + γ₂x) ∫h dn
//! σ₁ + xσ₂ + x²σ₃         = C₀ - (1 + x + x²) ξ
//! P₁₂a + P₂₃x²b           = (2ε/T₀)(P₁₂ + P₂₃x²) ξ
//! ```

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use crate::error::{positive, Error, Result};
use crate::exec::Exec;
use crate::physics::{pseudo_planck, PhysConsts};
use crate::slab::{sweep, AngleGrid, RadiationField, SlabBoundary, SlabGrid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreeLevelParams {
    pub gamma1: f64,
    pub gamma2: f64,
    pub eps: f64,
    pub t0: f64,
    pub rho0: f64,
    pub p12: f64,
    pub p23: f64,
}

impl Default for ThreeLevelParams {
    fn default() -> Self {
        ThreeLevelParams { gamma1: 0.7, gamma2: 0.3, eps: 1.0, t0: 2.0, rho0: 1.0, p12: 1.0, p23: 1.0 }
    }
}

impl ThreeLevelParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("eps", self.eps), ("T0", self.t0), ("rho0", self.rho0), ("P12", self.p12), ("P23", self.p23)] {
            positive(name, v)?;
        }
        if !(self.gamma1 >= 0.0 && self.gamma2 >= 0.0) || (self.gamma1 + self.gamma2 - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter {
                name: "gamma",
                reason: format!("need γ1, γ2 >= 0 with γ1 + γ2 = 1, got {} + {}", self.gamma1, self.gamma2),
            });
        }
        Ok(())
    }

    /// e^{-2ε/T₀}
    pub fn x(&self) -> f64 {
        (-2.0 * self.eps / self.t0).exp()
    }

    pub fn gp(&self) -> f64 {
        pseudo_planck(self.t0, &PhysConsts { epsilon0: self.eps, ..PhysConsts::default() })
    }

    pub fn kappa(&self) -> f64 {
        let x = self.x();
        self.eps * self.rho0 * (self.gamma1 + self.gamma2 * x) * (1.0 - x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Background {
    pub rho1: f64,
    pub rho2: f64,
    pub rho3: f64,
    pub t0: f64,
    pub gp: f64,
}

impl Background {
    /// γ₁(ρ₂(1+G) - ρ₁G) + γ₂(ρ₃(1+G) - ρ₂G), zero at the background.
    pub fn radiative_imbalance(&self, p: &ThreeLevelParams) -> f64 {
        let g = self.gp;
        p.gamma1 * (self.rho2 * (1.0 + g) - self.rho1 * g) + p.gamma2 * (self.rho3 * (1.0 + g) - self.rho2 * g)
    }
}

pub fn constant_state(params: &ThreeLevelParams) -> Result<Background> {
    params.validate()?;
    let x = params.x();
    Ok(Background { rho1: params.rho0, rho2: params.rho0 * x, rho3: params.rho0 * x * x, t0: params.t0, gp: params.gp() })
}

/// Radiation perturbation for given σ fields.
pub fn radiation_solve_3p(
    sigma: [&[f64]; 3],
    params: &ThreeLevelParams,
    boundary: &SlabBoundary,
    grid: &SlabGrid,
    angles: &AngleGrid,
) -> Result<RadiationField> {
    params.validate()?;
    if sigma.iter().any(|s| s.len() != grid.len()) {
        return Err(Error::InvalidParameter { name: "sigma", reason: "length differs from grid".into() });
    }
    let model = NodeModel::three_level(params, &vec![0.0; grid.len()], 0.0);
    let source: Vec<f64> = (0..grid.len()).map(|i| model.s.dot(&Vector3::new(sigma[0][i], sigma[1][i], sigma[2][i]))).collect();
    Ok(sweep(grid, angles, &vec![model.kappa; grid.len()], &source, boundary))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum C0Spec {
    Value(f64),
    /// C₀ from the total mass m₀ and ∫ξ.
    FromMass { m0: f64 },
}

/// Per-node linear model: A u = r0 + c ∫h dn, S = s·u.
struct NodeModel {
    a: Matrix3<f64>,
    c: Vector3<f64>,
    r0: Vec<Vector3<f64>>,
    s: Vector3<f64>,
    kappa: f64,
}

impl NodeModel {
    fn three_level(p: &ThreeLevelParams, xi: &[f64], c0: f64) -> Self {
        let x = p.x();
        let gp = p.gp();
        let (g1, g2) = (p.gamma1, p.gamma2);
        let a = Matrix3::new(
            -4.0 * PI * gp * g1,
            4.0 * PI * gp * (g1 - x * g2),
            4.0 * PI * gp * x * g2,
            1.0,
            x,
            x * x,
            -p.p12,
            p.p12 - p.p23 * x * x,
            p.p23 * x * x,
        );
        let k3 = 2.0 * p.eps / p.t0 * (p.p12 + p.p23 * x * x);
        let r0 = xi.iter().map(|&z| Vector3::new(0.0, c0 - (1.0 + x + x * x) * z, k3 * z)).collect();
        let er = p.eps * p.rho0;
        NodeModel {
            a,
            c: Vector3::new(x * (g1 + g2 * x), 0.0, 0.0),
            r0,
            s: Vector3::new(-er * g1, er * (g1 - x * g2), er * x * g2),
            kappa: p.kappa(),
        }
    }

    /// Two levels, unknowns (σ₁, σ₂, ξ).
    fn two_level(p: &ThreeLevelParams, n: usize, c0: f64) -> Self {
        let x = p.x();
        let gp = p.gp();
        let a = Matrix3::new(-4.0 * PI * gp, 4.0 * PI * gp, 0.0, 1.0, x, 1.0 + x, -1.0, 1.0, -2.0 * p.eps / p.t0);
        let er = p.eps * p.rho0;
        NodeModel {
            a,
            c: Vector3::new(x, 0.0, 0.0),
            r0: vec![Vector3::new(0.0, c0, 0.0); n],
            s: Vector3::new(-er, er, 0.0),
            kappa: er * (1.0 - x),
        }
    }

    fn check(&self, y: &[f64]) -> Result<nalgebra::LU<f64, nalgebra::U3, nalgebra::U3>> {
        let det = self.a.determinant();
        let scale: f64 = self.a.row_iter().map(|r| r.norm()).product();
        if !(det.abs() > 1e-12 * scale) {
            let coefficients = [0, 1, 2].map(|i| [0, 1, 2].map(|j| self.a[(i, j)]));
            return Err(Error::SingularSystem { y: y[0], det, coefficients });
        }
        Ok(self.a.lu())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThreeLevelSolution {
    pub y: Vec<f64>,
    pub sigma1: Vec<f64>,
    pub sigma2: Vec<f64>,
    pub sigma3: Vec<f64>,
    pub xi: Vec<f64>,
    pub h: RadiationField,
    pub c0: f64,
    /// Fixed-point path, for comparison with the assembled solution.
    pub picard: [Vec<f64>; 3],
    pub picard_iterations: usize,
    /// max over fields and nodes of |assembled - fixed point|
    pub method_gap: f64,
    /// max |σ₁ + xσ₂ + x²σ₃ - C₀ + (1+x+x²)ξ|
    pub eq2_residual: f64,
    /// max |4πS - κ∫h dn| (the discrete radiative balance)
    pub balance_residual: f64,
}

struct RawSolution {
    u: [Vec<f64>; 3],
    h: RadiationField,
    picard: [Vec<f64>; 3],
    picard_iterations: usize,
    method_gap: f64,
    balance_residual: f64,
}

const PICARD_TOL: f64 = 1e-13;
const PICARD_MAX: usize = 100_000;

fn solve_model(model: &NodeModel, boundary: &SlabBoundary, grid: &SlabGrid, angles: &AngleGrid, exec: Exec) -> Result<RawSolution> {
    let n = grid.len();
    let lu = model.check(&grid.y)?;
    let kappa = vec![model.kappa; n];
    let zero = vec![0.0; n];
    let b_field = sweep(grid, angles, &kappa, &zero, boundary).angular_integral();
    let none = SlabBoundary::zero();

    // ∫h = M S + B, built column by column
    let cols = exec.map(n, |j| {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        sweep(grid, angles, &kappa, &e, &none).angular_integral()
    });
    let mut big = DMatrix::zeros(3 * n, 3 * n);
    let mut rhs = DVector::zeros(3 * n);
    for i in 0..n {
        for r in 0..3 {
            for q in 0..3 {
                big[(3 * i + r, 3 * i + q)] += model.a[(r, q)];
            }
            rhs[3 * i + r] = model.r0[i][r] + model.c[r] * b_field[i];
            if model.c[r] != 0.0 {
                for (j, col) in cols.iter().enumerate() {
                    for q in 0..3 {
                        big[(3 * i + r, 3 * j + q)] -= model.c[r] * col[i] * model.s[q];
                    }
                }
            }
        }
    }
    let sol = big.lu().solve(&rhs).ok_or_else(|| Error::LinearSolve("assembled node system is singular".into()))?;
    let u: [Vec<f64>; 3] = [0, 1, 2].map(|q| (0..n).map(|i| sol[3 * i + q]).collect());

    // fixed point: σ → S → h → node solves
    let node_solve = |ih: &[f64]| -> [Vec<f64>; 3] {
        let vals: Vec<Vector3<f64>> = (0..n).map(|i| lu.solve(&(model.r0[i] + model.c * ih[i])).expect("checked nonsingular")).collect();
        [0, 1, 2].map(|q| vals.iter().map(|v| v[q]).collect())
    };
    let source_of = |u: &[Vec<f64>; 3]| -> Vec<f64> { (0..n).map(|i| model.s.dot(&Vector3::new(u[0][i], u[1][i], u[2][i]))).collect() };
    let mut p = node_solve(&b_field);
    let scale = u.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let mut iterations = 0;
    loop {
        iterations += 1;
        let ih = sweep(grid, angles, &kappa, &source_of(&p), boundary).angular_integral();
        let next = node_solve(&ih);
        let delta = next.iter().zip(&p).flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs())).fold(0.0, f64::max);
        p = next;
        if delta <= PICARD_TOL * scale {
            break;
        }
        if iterations >= PICARD_MAX {
            return Err(Error::NotConverged { iterations, last_update: delta });
        }
    }
    let method_gap = u.iter().zip(&p).flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs())).fold(0.0, f64::max);

    let s = source_of(&u);
    let h = sweep(grid, angles, &kappa, &s, boundary);
    let ih = h.angular_integral();
    let balance_residual = (0..n).map(|i| (4.0 * PI * s[i] - model.kappa * ih[i]).abs()).fold(0.0, f64::max);
    Ok(RawSolution { u, h, picard: p, picard_iterations: iterations, method_gap, balance_residual })
}

/// Solve for (σ₁, σ₂, σ₃) given ξ, the incoming h and C₀.
pub fn solve_three_level(
    xi: &[f64],
    boundary: &SlabBoundary,
    params: &ThreeLevelParams,
    grid: &SlabGrid,
    angles: &AngleGrid,
    c0: C0Spec,
    exec: Exec,
) -> Result<ThreeLevelSolution> {
    params.validate()?;
    if xi.len() != grid.len() {
        return Err(Error::InvalidParameter { name: "xi", reason: "length differs from grid".into() });
    }
    let x = params.x();
    let q = 1.0 + x + x * x;
    let c0 = match c0 {
        C0Spec::Value(v) => v,
        C0Spec::FromMass { m0 } => (q * grid.integrate(xi) + m0 - params.rho0 * grid.l * q) / grid.l,
    };
    let model = NodeModel::three_level(params, xi, c0);
    let raw = solve_model(&model, boundary, grid, angles, exec)?;
    let [s1, s2, s3] = raw.u;
    let eq2_residual = (0..grid.len()).map(|i| (s1[i] + x * s2[i] + x * x * s3[i] - c0 + q * xi[i]).abs()).fold(0.0, f64::max);
    Ok(ThreeLevelSolution {
        y: grid.y.clone(),
        sigma1: s1,
        sigma2: s2,
        sigma3: s3,
        xi: xi.to_vec(),
        h: raw.h,
        c0,
        picard: raw.picard,
        picard_iterations: raw.picard_iterations,
        method_gap: raw.method_gap,
        eq2_residual,
        balance_residual: raw.balance_residual,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoLevelSolution {
    pub y: Vec<f64>,
    pub sigma1: Vec<f64>,
    pub sigma2: Vec<f64>,
    /// With level 3 gone, ξ is no longer free data but an unknown.
    pub xi: Vec<f64>,
    pub h: RadiationField,
    pub method_gap: f64,
    pub balance_residual: f64,
}

impl TwoLevelSolution {
    /// max |σ₂ - σ₁ - (2ε/T₀)ξ|: zero when the populations keep the
    /// Boltzmann ratio at the perturbed temperature.
    pub fn boltzmann_defect(&self, params: &ThreeLevelParams) -> f64 {
        let k = 2.0 * params.eps / params.t0;
        (0..self.y.len()).map(|i| (self.sigma2[i] - self.sigma1[i] - k * self.xi[i]).abs()).fold(0.0, f64::max)
    }
}

/// γ₂ = 0 with level 3 dropped: (σ₁, σ₂, ξ) from the radiative balance,
/// the pressure relation and the single collisional balance.
pub fn solve_two_level(
    boundary: &SlabBoundary,
    params: &ThreeLevelParams,
    grid: &SlabGrid,
    angles: &AngleGrid,
    c0: f64,
    exec: Exec,
) -> Result<TwoLevelSolution> {
    let p = ThreeLevelParams { gamma1: 1.0, gamma2: 0.0, ..*params };
    p.validate()?;
    let model = NodeModel::two_level(&p, grid.len(), c0);
    let raw = solve_model(&model, boundary, grid, angles, exec)?;
    let [s1, s2, xi] = raw.u;
    Ok(TwoLevelSolution {
        y: grid.y.clone(),
        sigma1: s1,
        sigma2: s2,
        xi,
        h: raw.h,
        method_gap: raw.method_gap,
        balance_residual: raw.balance_residual,
    })
}

/// Largest pairwise |σ_i - σ_j| over the nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LteDeviation {
    pub value: f64,
    pub node: usize,
    pub y: f64,
    /// Level indices (1-based) of the pair.
    pub pair: (usize, usize),
}

pub fn lte_deviation(sol: &ThreeLevelSolution) -> LteDeviation {
    let mut best = LteDeviation { value: 0.0, node: 0, y: sol.y.first().copied().unwrap_or(0.0), pair: (1, 2) };
    for i in 0..sol.y.len() {
        let s = [sol.sigma1[i], sol.sigma2[i], sol.sigma3[i]];
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            let d = (s[a] - s[b]).abs();
            if d > best.value {
                best = LteDeviation { value: d, node: i, y: sol.y[i], pair: (a + 1, b + 1) };
            }
        }
    }
    best
}
