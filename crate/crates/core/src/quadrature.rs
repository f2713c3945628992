//! Gaussian quadrature rules via the Golub-Welsch eigenvalue method.
//!
//! Rule construction costs an O(n^3) eigensolve, so rules are memoized by
//! (family, order) behind a process-wide cache; callers get cheap clones of
//! shared immutable snapshots.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use nalgebra::DMatrix;

/// Nodes and weights of an n-point rule.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Family {
    Legendre,
    HermitePhysicists,
    HermiteProbabilists,
}

type RuleCache = RwLock<HashMap<(Family, usize), Arc<Rule>>>;

fn cache() -> &'static RuleCache {
    static CACHE: OnceLock<RuleCache> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

fn cached(family: Family, n: usize, build: impl FnOnce() -> Rule) -> Arc<Rule> {
    if let Some(rule) = cache().read().unwrap().get(&(family, n)) {
        return rule.clone();
    }
    let rule = Arc::new(build());
    cache()
        .write()
        .unwrap()
        .entry((family, n))
        .or_insert(rule)
        .clone()
}

/// Golub-Welsch: nodes are eigenvalues of the symmetric tridiagonal Jacobi
/// matrix with off-diagonal `offdiag`, weights are `mu0` times the squared
/// first eigenvector components.
fn golub_welsch(offdiag: &[f64], mu0: f64) -> Rule {
    let n = offdiag.len() + 1;
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for (k, &b) in offdiag.iter().enumerate() {
        jacobi[(k, k + 1)] = b;
        jacobi[(k + 1, k)] = b;
    }
    let eig = jacobi.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Rule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}

/// Gauss-Legendre on [-1, 1].
pub fn gauss_legendre(n: usize) -> Arc<Rule> {
    assert!(n >= 1);
    cached(Family::Legendre, n, || {
        let offdiag: Vec<f64> = (1..n)
            .map(|k| {
                let k = k as f64;
                k / (4.0 * k * k - 1.0).sqrt()
            })
            .collect();
        golub_welsch(&offdiag, 2.0)
    })
}

/// Gauss-Legendre mapped to [a, b].
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> Rule {
    let base = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    Rule {
        nodes: base.nodes.iter().map(|&t| mid + half * t).collect(),
        weights: base.weights.iter().map(|&w| w * half).collect(),
    }
}

/// Gauss-Hermite for the physicists' weight e^{-x^2}.
///
/// Nodes come from the Jacobi eigenvalues polished by two Newton steps on
/// the normalized Hermite function; weights use the Christoffel identity
/// w_i = e^{-x_i^2} / sum_{k<n} psi_k(x_i)^2. Eigenvector-based weights are
/// only absolutely accurate, which is useless at extreme nodes where the
/// true weights are ~1e-160; the Christoffel form is relatively accurate
/// everywhere.
pub fn gauss_hermite_physicists(n: usize) -> Arc<Rule> {
    assert!(n >= 1);
    cached(Family::HermitePhysicists, n, || {
        let offdiag: Vec<f64> = (1..n).map(|k| (k as f64 / 2.0).sqrt()).collect();
        let eig = golub_welsch(&offdiag, std::f64::consts::PI.sqrt());
        let mut nodes = eig.nodes;
        let mut weights = vec![0.0; n];
        for i in 0..n {
            for _ in 0..2 {
                let t = crate::hermite::hermite_table(nodes[i], n).expect("finite node");
                let (f, df) = (t.values[n], t.derivs[n]);
                if df != 0.0 {
                    nodes[i] -= f / df;
                }
            }
            let t = crate::hermite::hermite_table(nodes[i], n - 1).expect("finite node");
            let denom: f64 = t.values.iter().map(|v| v * v).sum();
            weights[i] = (-nodes[i] * nodes[i]).exp() / denom;
        }
        Rule { nodes, weights }
    })
}

/// Gauss-Hermite for the probabilists' weight e^{-x^2/2} (integrates against
/// the unnormalized Gaussian; divide weights by sqrt(2*pi) for expectations).
/// Obtained from the physicists' rule by the substitution x -> x/sqrt(2).
pub fn gauss_hermite_probabilists(n: usize) -> Arc<Rule> {
    assert!(n >= 1);
    cached(Family::HermiteProbabilists, n, || {
        let phys = gauss_hermite_physicists(n);
        Rule {
            nodes: phys
                .nodes
                .iter()
                .map(|&x| x * std::f64::consts::SQRT_2)
                .collect(),
            weights: phys
                .weights
                .iter()
                .map(|&w| w * std::f64::consts::SQRT_2)
                .collect(),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        let rule = gauss_legendre(8);
        // degree 15 exact: int_{-1}^{1} x^14 dx = 2/15
        let val: f64 = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(&x, &w)| w * x.powi(14))
            .sum();
        assert!((val - 2.0 / 15.0).abs() < 1e-14);
    }

    #[test]
    fn legendre_on_interval() {
        let rule = gauss_legendre_on(16, 0.0, 2.0);
        let val: f64 = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(&x, &w)| w * x * x)
            .sum();
        assert!((val - 8.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn hermite_physicists_moments() {
        let rule = gauss_hermite_physicists(20);
        let m0: f64 = rule.weights.iter().sum();
        let m2: f64 = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(&x, &w)| w * x * x)
            .sum();
        let sqrt_pi = std::f64::consts::PI.sqrt();
        assert!((m0 - sqrt_pi).abs() < 1e-13);
        assert!((m2 - sqrt_pi / 2.0).abs() < 1e-13);
    }

    #[test]
    fn hermite_probabilists_fourth_moment() {
        let rule = gauss_hermite_probabilists(20);
        let norm = (2.0 * std::f64::consts::PI).sqrt();
        let m4: f64 = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(&x, &w)| w * x.powi(4))
            .sum::<f64>()
            / norm;
        assert!((m4 - 3.0).abs() < 1e-12);
    }
}
