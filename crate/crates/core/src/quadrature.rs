//! Gauss-Legendre rules (nodes from `gauss-quad`, cached per order) and
//! composite integration helpers.

use gauss_quad::GaussLegendre;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Nodes and weights on `[-1, 1]`, sorted by node.
#[derive(Clone, Debug)]
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

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        self.nodes.iter().zip(&self.weights).map(move |(&x, &w)| (c + h * x, h * w))
    }
}

/// Cached Gauss-Legendre rule with `m >= 2` nodes.
pub fn gauss_legendre(m: usize) -> Arc<Rule> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Rule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(r) = cache.lock().expect("rule cache").get(&m) {
        return r.clone();
    }
    let gl = GaussLegendre::new(m.max(2)).expect("order at least 2");
    let mut pairs: Vec<(f64, f64)> = gl.as_node_weight_pairs().to_vec();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let rule = Arc::new(Rule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    });
    cache.lock().expect("rule cache").insert(m, rule.clone());
    rule
}

/// Composite Gauss-Legendre over `[a, b]` with `panels` equal panels.
pub fn composite<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, panels: usize, m: usize) -> f64 {
    let rule = gauss_legendre(m);
    let h = (b - a) / panels as f64;
    let mut acc = crate::real::RSum::default();
    for p in 0..panels {
        let lo = a + h * p as f64;
        let mut s = 0.0;
        for (x, w) in rule.mapped(lo, lo + h) {
            s += w * f(x);
        }
        acc.add(s);
    }
    acc.value()
}
