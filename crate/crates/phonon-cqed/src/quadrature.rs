//! Gauss–Legendre rules mapped onto finite intervals.

use std::collections::HashMap;
use std::num::NonZeroUsize;
use std::sync::{Arc, Mutex, OnceLock};

use gauss_quad::GaussLegendre;

type Reference = Arc<Vec<(f64, f64)>>;

fn reference_rule(n: usize) -> Reference {
    static CACHE: OnceLock<Mutex<HashMap<usize, Reference>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().unwrap_or_else(|e| e.into_inner());
    map.entry(n)
        .or_insert_with(|| {
            let degree = NonZeroUsize::new(n).expect("quadrature order must be positive");
            let mut pairs = GaussLegendre::new(degree).as_node_weight_pairs().to_vec();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            Arc::new(pairs)
        })
        .clone()
}

/// Nodes and weights of a quadrature rule on an interval.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// `n`-point Gauss–Legendre rule on `[a, b]`, nodes ascending.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Rule {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let pairs = reference_rule(n);
    Rule {
        nodes: pairs.iter().map(|&(x, _)| mid + half * x).collect(),
        weights: pairs.iter().map(|&(_, w)| half * w).collect(),
    }
}

/// Composite rule: `panels` equal panels on `[a, b]`, each with an
/// `order`-point Gauss–Legendre rule.
pub fn composite(a: f64, b: f64, panels: usize, order: usize) -> Rule {
    let width = (b - a) / panels as f64;
    let pairs = reference_rule(order);
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    for k in 0..panels {
        let mid = a + (k as f64 + 0.5) * width;
        for &(x, w) in pairs.iter() {
            nodes.push(mid + 0.5 * width * x);
            weights.push(0.5 * width * w);
        }
    }
    Rule { nodes, weights }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exactness() {
        let r = gauss_legendre(10, 0.0, 2.0);
        let v = r.integrate(|x| x.powi(19));
        assert!((v - 2f64.powi(20) / 20.0).abs() < 1e-9);
        assert!(r.nodes.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn composite_matches_single() {
        let c = composite(0.0, 3.0, 7, 8);
        let v = c.integrate(|x| (-x).exp() * x.sin());
        let exact = 0.5 * (1.0 - (-3.0f64).exp() * (3f64.sin() + 3f64.cos()));
        assert!((v - exact).abs() < 1e-13);
    }
}
