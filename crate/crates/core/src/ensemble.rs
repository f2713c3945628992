//! The eigenspace V_N: multi-index enumeration, Gaussian random
//! eigenfunctions, and efficient evaluation of realizations on points and
//! grids.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::sync::{Arc, OnceLock, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermite::{hermite_table, HermiteTable};
use crate::params::ModelParams;
use crate::rng;

/// Default cap on the eigenspace dimension.
pub const DEFAULT_CAPACITY: u64 = 10_000_000;

/// All multi-indices alpha with |alpha| = N in dimension d, lexicographically
/// sorted. The size is binomial(N + d - 1, d - 1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiIndexSet {
    dim: usize,
    level: u32,
    indices: Vec<Vec<usize>>,
}

/// binomial(n, k) without overflow for the sizes we allow.
fn binomial_u128(n: u64, k: u64) -> u128 {
    let k = k.min(n - k.min(n));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Complete enumeration of {alpha : |alpha| = N} in lexicographic order.
pub fn enumerate_level(dim: usize, level: u32) -> Result<MultiIndexSet> {
    enumerate_level_capped(dim, level, DEFAULT_CAPACITY)
}

type LevelCache = RwLock<HashMap<(usize, u32), Arc<MultiIndexSet>>>;

/// Memoized enumeration for hot paths (kernel jets call this per point).
pub fn enumerate_level_cached(dim: usize, level: u32) -> Result<Arc<MultiIndexSet>> {
    static CACHE: OnceLock<LevelCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| RwLock::new(HashMap::new()));
    if let Some(set) = cache.read().unwrap().get(&(dim, level)) {
        return Ok(set.clone());
    }
    let set = Arc::new(enumerate_level(dim, level)?);
    Ok(cache
        .write()
        .unwrap()
        .entry((dim, level))
        .or_insert(set)
        .clone())
}

pub fn enumerate_level_capped(dim: usize, level: u32, cap: u64) -> Result<MultiIndexSet> {
    if dim < 1 {
        return Err(Error::Domain("dimension must be >= 1".into()));
    }
    let n = level as u64;
    let size = binomial_u128(n + dim as u64 - 1, dim as u64 - 1);
    if size > cap as u128 {
        return Err(Error::Capacity {
            requested: size,
            cap,
        });
    }
    let mut indices = Vec::with_capacity(size as usize);
    let mut current = vec![0usize; dim];
    fill(&mut indices, &mut current, 0, level as usize);
    debug_assert_eq!(indices.len() as u128, size);
    Ok(MultiIndexSet {
        dim,
        level,
        indices,
    })
}

fn fill(out: &mut Vec<Vec<usize>>, current: &mut Vec<usize>, slot: usize, remaining: usize) {
    if slot + 1 == current.len() {
        current[slot] = remaining;
        out.push(current.clone());
        return;
    }
    for a in 0..=remaining {
        current[slot] = a;
        fill(out, current, slot + 1, remaining - a);
    }
}

impl MultiIndexSet {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[Vec<usize>] {
        &self.indices
    }
}

/// One realization Phi_N = sum_alpha a_alpha phi_{alpha,h}, with coefficients
/// aligned to the lexicographic enumeration of the level.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RandomEigenfunction {
    pub params: ModelParams,
    pub seed: u64,
    pub coeffs: Vec<f64>,
}

/// Draw i.i.d. standard normal coefficients from the counter-based generator
/// keyed by (seed, coefficient position). Order-independent, reproducible.
pub fn sample_eigenfunction(params: &ModelParams, seed: u64) -> Result<RandomEigenfunction> {
    let set = enumerate_level_cached(params.dim(), params.level())?;
    let coeffs = (0..set.len())
        .map(|i| rng::standard_normal(seed, i as u64))
        .collect();
    Ok(RandomEigenfunction {
        params: *params,
        seed,
        coeffs,
    })
}

impl RandomEigenfunction {
    /// Per-axis Hermite tables for one point, shared by value and gradient.
    fn tables_at(&self, x: &[f64]) -> Result<Vec<HermiteTable>> {
        let sqrt_h = self.params.h().sqrt();
        x.iter()
            .map(|&xi| {
                if !xi.is_finite() {
                    return Err(Error::Domain(format!("non-finite coordinate {xi}")));
                }
                hermite_table(xi / sqrt_h, self.params.level() as usize)
            })
            .collect()
    }

    /// Value of the realization at `x`. Cost O(dim V_N * d) after the per-axis
    /// tables (cost O(N) each) are built.
    pub fn value_at(&self, x: &[f64], set: &MultiIndexSet) -> Result<f64> {
        let tables = self.tables_at(x)?;
        let scale = self.params.h().powf(-(self.params.dim() as f64) / 4.0);
        let mut sum = 0.0;
        for (a, alpha) in self.coeffs.iter().zip(set.indices()) {
            let mut prod = 1.0;
            for (j, &aj) in alpha.iter().enumerate() {
                prod *= tables[j].values[aj];
            }
            sum += a * prod;
        }
        Ok(scale * sum)
    }

    /// Value and gradient at `x`.
    pub fn value_grad_at(&self, x: &[f64], set: &MultiIndexSet) -> Result<(f64, Vec<f64>)> {
        let d = self.params.dim();
        let tables = self.tables_at(x)?;
        let scale = self.params.h().powf(-(d as f64) / 4.0);
        let inv_sqrt_h = 1.0 / self.params.h().sqrt();
        let mut sum = 0.0;
        let mut grad = vec![0.0; d];
        for (a, alpha) in self.coeffs.iter().zip(set.indices()) {
            let mut prod = 1.0;
            for (j, &aj) in alpha.iter().enumerate() {
                prod *= tables[j].values[aj];
            }
            sum += a * prod;
            for j in 0..d {
                let aj = alpha[j];
                let mut dprod = tables[j].derivs[aj] * inv_sqrt_h;
                for (l, &al) in alpha.iter().enumerate() {
                    if l != j {
                        dprod *= tables[l].values[al];
                    }
                }
                grad[j] += a * dprod;
            }
        }
        for g in &mut grad {
            *g *= scale;
        }
        Ok((scale * sum, grad))
    }
}

/// Uniform 2D lattice spec used for grid evaluation and nodal extraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec2 {
    pub origin: [f64; 2],
    pub spacing: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec2 {
    pub fn coord(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + i as f64 * self.spacing,
            self.origin[1] + j as f64 * self.spacing,
        ]
    }
}

/// Sampled field values on a `GridSpec2` lattice, row-major in i (x index).
#[derive(Debug, Clone)]
pub struct FieldGrid2 {
    pub spec: GridSpec2,
    pub values: Vec<f64>,
}

impl FieldGrid2 {
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.spec.ny + j]
    }

    pub fn from_fn(spec: GridSpec2, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(spec.nx * spec.ny);
        for i in 0..spec.nx {
            for j in 0..spec.ny {
                let [x, y] = spec.coord(i, j);
                values.push(f(x, y));
            }
        }
        Self { spec, values }
    }
}

/// Evaluate a d=2 realization on a lattice.
///
/// Per-axis psi tables are precomputed over all grid coordinates, which turns
/// each point into an O(N) dot product instead of an O(dim V_N * N) resum.
pub fn evaluate_on_grid(field: &RandomEigenfunction, spec: &GridSpec2) -> Result<FieldGrid2> {
    if field.params.dim() != 2 {
        return Err(Error::Domain(format!(
            "grid evaluation is d=2 only, got d={}",
            field.params.dim()
        )));
    }
    let n = field.params.level() as usize;
    let sqrt_h = field.params.h().sqrt();
    let scale = 1.0 / sqrt_h; // h^{-d/4} with d=2

    let x_tabs: Vec<Vec<f64>> = (0..spec.nx)
        .map(|i| {
            let u = (spec.origin[0] + i as f64 * spec.spacing) / sqrt_h;
            Ok(hermite_table(u, n)?.values)
        })
        .collect::<Result<_>>()?;
    // Coefficient-weighted complement axis: row j holds a_(k,N-k) psi_{N-k}(y_j).
    let y_tabs: Vec<Vec<f64>> = (0..spec.ny)
        .map(|j| {
            let u = (spec.origin[1] + j as f64 * spec.spacing) / sqrt_h;
            let t = hermite_table(u, n)?;
            Ok((0..=n).map(|k| field.coeffs[k] * t.values[n - k]).collect())
        })
        .collect::<Result<_>>()?;

    let mut values = Vec::with_capacity(spec.nx * spec.ny);
    for xt in &x_tabs {
        for yt in &y_tabs {
            let mut s = 0.0;
            for k in 0..=n {
                s += xt[k] * yt[k];
            }
            values.push(scale * s);
        }
    }
    Ok(FieldGrid2 {
        spec: *spec,
        values,
    })
}

/// Binary coefficient dump: little-endian u64 triple (d, N, seed) followed by
/// the coefficients as little-endian f64.
pub fn write_coefficients<W: Write>(f: &RandomEigenfunction, mut w: W) -> std::io::Result<()> {
    w.write_all(&(f.params.dim() as u64).to_le_bytes())?;
    w.write_all(&(f.params.level() as u64).to_le_bytes())?;
    w.write_all(&f.seed.to_le_bytes())?;
    for c in &f.coeffs {
        w.write_all(&c.to_le_bytes())?;
    }
    Ok(())
}

/// Read a coefficient dump written by [`write_coefficients`]. The energy is
/// not stored in the dump, so the caller supplies it.
pub fn read_coefficients<R: Read>(mut r: R, energy: f64) -> Result<RandomEigenfunction> {
    let mut buf8 = [0u8; 8];
    let mut read_u64 = |r: &mut R| -> Result<u64> {
        r.read_exact(&mut buf8)
            .map_err(|e| Error::Domain(format!("truncated coefficient dump: {e}")))?;
        Ok(u64::from_le_bytes(buf8))
    };
    let dim = read_u64(&mut r)? as usize;
    let level = read_u64(&mut r)? as u32;
    let seed = read_u64(&mut r)?;
    let params = ModelParams::new(dim, energy, level)?;
    let set = enumerate_level(dim, level)?;
    let mut coeffs = Vec::with_capacity(set.len());
    let mut cbuf = [0u8; 8];
    for _ in 0..set.len() {
        r.read_exact(&mut cbuf)
            .map_err(|e| Error::Domain(format!("truncated coefficient dump: {e}")))?;
        coeffs.push(f64::from_le_bytes(cbuf));
    }
    Ok(RandomEigenfunction {
        params,
        seed,
        coeffs,
    })
}
