//! Gauss-Legendre rules mapped to arbitrary intervals.

use gauss_quad::legendre::GaussLegendre;

/// Nodes and weights of an n-point rule on [a, b], nodes ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Rule {
        let n = n.max(2);
        let gl = GaussLegendre::new(n).expect("degree >= 2");
        let mut pairs: Vec<(f64, f64)> = gl.as_node_weight_pairs().to_vec();
        pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        Rule {
            nodes: pairs.iter().map(|&(x, _)| mid + half * x).collect(),
            weights: pairs.iter().map(|&(_, w)| half * w).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Composite rule: `pieces` equal panels on [a, b], n points each.
pub fn composite(n: usize, pieces: usize, a: f64, b: f64) -> Rule {
    let h = (b - a) / pieces as f64;
    let mut nodes = Vec::with_capacity(n * pieces);
    let mut weights = Vec::with_capacity(n * pieces);
    for p in 0..pieces {
        let r = Rule::gauss_legendre(n, a + p as f64 * h, a + (p + 1) as f64 * h);
        nodes.extend(r.nodes);
        weights.extend(r.weights);
    }
    Rule { nodes, weights }
}
