//! The spectral projector kernel Pi_{h,E}(x,y) onto the eigenspace V_N,
//! computed two independent ways: exact eigenfunction sums (with the full
//! derivative jet on the diagonal) and trapezoid quadrature of the Mehler
//! propagator along a contour shifted into the lower half-plane. The two
//! routes cross-validate each other.

use nalgebra::DMatrix;
use num_complex::Complex64;
use statrs::function::gamma::ln_gamma;

use crate::ensemble::enumerate_level_cached;
use crate::error::{Error, Result};
use crate::hermite::hermite_table;
use crate::numeric::KahanSum;
use crate::params::ModelParams;

/// Cramer's bound: |psi_k(u)| <= 1.086435 * pi^{-1/4} for all k, u.
const PSI_SUP: f64 = 0.8160490902;

/// Pi(x,x), its gradient in the first slot, and the mixed second derivative
/// matrix on the diagonal. This is exactly the data the Kac-Rice covariance
/// needs at one point.
#[derive(Debug, Clone)]
pub struct KernelJet {
    pub x: Vec<f64>,
    pub pi: f64,
    pub grad: Vec<f64>,
    /// hess[(j,k)] = d_{x_j} d_{y_k} Pi(x,y) |_{y=x}
    pub hess: DMatrix<f64>,
}

/// Exact diagonal jet by term-by-term differentiation of the eigenfunction
/// sum, accumulated with compensated summation.
pub fn kernel_jet_exact(params: &ModelParams, x: &[f64]) -> Result<KernelJet> {
    let d = params.dim();
    if x.len() != d {
        return Err(Error::Domain(format!(
            "point dimension {} does not match d={}",
            x.len(),
            d
        )));
    }
    let set = enumerate_level_cached(d, params.level())?;
    let sqrt_h = params.h().sqrt();
    let tables: Vec<_> = x
        .iter()
        .map(|&xi| {
            if !xi.is_finite() {
                return Err(Error::Domain(format!("non-finite coordinate {xi}")));
            }
            hermite_table(xi / sqrt_h, params.level() as usize)
        })
        .collect::<Result<_>>()?;

    let mut pi_acc = KahanSum::new();
    let mut grad_acc = vec![KahanSum::new(); d];
    let mut hess_acc = vec![KahanSum::new(); d * d];
    let mut g = vec![0.0; d];
    for alpha in set.indices() {
        let mut f = 1.0;
        for (j, &aj) in alpha.iter().enumerate() {
            f *= tables[j].values[aj];
        }
        for j in 0..d {
            let mut dj = tables[j].derivs[alpha[j]] / sqrt_h;
            for (l, &al) in alpha.iter().enumerate() {
                if l != j {
                    dj *= tables[l].values[al];
                }
            }
            g[j] = dj;
        }
        pi_acc.add(f * f);
        for j in 0..d {
            grad_acc[j].add(g[j] * f);
            for k in j..d {
                hess_acc[j * d + k].add(g[j] * g[k]);
            }
        }
    }

    let scale = params.h().powf(-(d as f64) / 2.0); // two factors of h^{-d/4}
    let mut hess = DMatrix::zeros(d, d);
    for j in 0..d {
        for k in j..d {
            let v = hess_acc[j * d + k].value() * scale;
            hess[(j, k)] = v;
            hess[(k, j)] = v;
        }
    }
    Ok(KernelJet {
        x: x.to_vec(),
        pi: pi_acc.value() * scale,
        grad: grad_acc.iter().map(|a| a.value() * scale).collect(),
        hess,
    })
}

/// Exact off-diagonal kernel value, symmetric in (x, y).
pub fn kernel_offdiag_exact(params: &ModelParams, x: &[f64], y: &[f64]) -> Result<f64> {
    let d = params.dim();
    if x.len() != d || y.len() != d {
        return Err(Error::Domain("point dimension mismatch".into()));
    }
    let set = enumerate_level_cached(d, params.level())?;
    let sqrt_h = params.h().sqrt();
    let tab = |p: &[f64]| -> Result<Vec<_>> {
        p.iter()
            .map(|&c| hermite_table(c / sqrt_h, params.level() as usize))
            .collect()
    };
    let tx = tab(x)?;
    let ty = tab(y)?;
    let mut acc = KahanSum::new();
    for alpha in set.indices() {
        let mut term = 1.0;
        for (j, &aj) in alpha.iter().enumerate() {
            term *= tx[j].values[aj] * ty[j].values[aj];
        }
        acc.add(term);
    }
    Ok(acc.value() * params.h().powf(-(d as f64) / 2.0))
}

/// Contour and resolution for the Mehler quadrature. The integral itself is
/// independent of `epsilon`; `nodes` controls aliasing and `tolerance` is the
/// absolute accuracy the alias bound must meet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MehlerQuadratureSpec {
    pub epsilon: f64,
    pub nodes: usize,
    pub tolerance: f64,
}

impl MehlerQuadratureSpec {
    /// Level spacing in the t-Fourier variable is 1, so e^{-eps*offset} decay
    /// with eps = 1 and 16N nodes crushes every alias for desk-scale N.
    pub fn default_for(params: &ModelParams) -> Self {
        Self {
            epsilon: 1.0,
            nodes: 256.max(16 * params.level() as usize),
            tolerance: 1e-10 * params.h().powf(-(params.dim() as f64) / 2.0),
        }
    }

    /// Point-adapted contour. The relative roundoff of the trapezoid sum is
    /// set by the peak integrand magnitude, which a fixed shift handles
    /// badly: near the origin small eps is needed (the level-0 mode carries
    /// e^{eps E/h}), while deep in the forbidden region the peak is smallest
    /// at the saddle shift. Minimizing the t = 0 magnitude over eps picks
    /// both regimes automatically; aliasing keeps eps*nodes >= 45.
    pub fn tuned_for(params: &ModelParams, x: &[f64], y: &[f64]) -> Self {
        let base = Self::default_for(params);
        let nu = params.energy_over_h();
        let h = params.h();
        let d = params.dim() as f64;
        let x2y2: f64 =
            0.5 * (x.iter().map(|v| v * v).sum::<f64>() + y.iter().map(|v| v * v).sum::<f64>());
        let xy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
        // log-magnitude of the integrand at t = 0 on the shifted contour
        let peak = |eps: f64| -> f64 {
            let euclidean_action = x2y2 * eps.cosh() / eps.sinh() - xy / eps.sinh();
            eps * nu - euclidean_action / h - 0.5 * d * eps.sinh().ln()
        };
        let lo = (45.0 / base.nodes as f64).min(1.0);
        let hi = (650.0 / nu).min(4.0).max(lo * (1.0 + 1e-9));
        // golden-section minimization; the peak is smooth and unimodal
        let phi = (5.0f64.sqrt() - 1.0) / 2.0;
        let (mut a, mut b) = (lo, hi);
        let mut c = b - phi * (b - a);
        let mut dd = a + phi * (b - a);
        let (mut fc, mut fd) = (peak(c), peak(dd));
        for _ in 0..60 {
            if fc < fd {
                b = dd;
                dd = c;
                fd = fc;
                c = b - phi * (b - a);
                fc = peak(c);
            } else {
                a = c;
                c = dd;
                fc = fd;
                dd = a + phi * (b - a);
                fd = peak(dd);
            }
        }
        Self {
            epsilon: 0.5 * (a + b),
            ..base
        }
    }
}

/// Result of the contour quadrature with its accuracy diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct MehlerKernel {
    pub value: f64,
    /// |imaginary part| / |value|; should sit at roundoff level.
    pub imag_residual: f64,
    /// Rigorous bound on the aliasing error of the trapezoid rule.
    pub alias_bound: f64,
    /// Estimated roundoff floor eps_mach * sum |integrand| / M. Cancellation
    /// along the contour (deep forbidden points, eps far from the saddle)
    /// shows up here rather than in the alias bound.
    pub roundoff_floor: f64,
}

fn ln_level_dim(level: f64, d: usize) -> f64 {
    // ln binomial(level + d - 1, d - 1)
    ln_gamma(level + d as f64) - ln_gamma(level + 1.0) - ln_gamma(d as f64)
}

/// Rigorous alias bound: the M-node trapezoid rule returns the target Fourier
/// mode plus modes offset by multiples of M; the offset-m mode is bounded by
/// e^{-eps m} dim(V_{N+m}) sup|phi|^2, summed over m = jM by a term-by-term
/// sum with a geometric tail.
fn alias_bound(params: &ModelParams, spec: &MehlerQuadratureSpec) -> f64 {
    let d = params.dim();
    let n = params.level() as f64;
    let m = spec.nodes as f64;
    let ln_unit = -(d as f64) / 2.0 * params.h().ln() + 2.0 * d as f64 * PSI_SUP.ln();
    let mut total = 0.0;
    // Levels below N: alias weight grows like e^{+eps j M}, only for jM <= N.
    let mut j = 1.0;
    while j * m <= n {
        total += (ln_unit + ln_level_dim(n - j * m, d) + spec.epsilon * j * m).exp();
        j += 1.0;
    }
    // Levels above N: geometrically suppressed.
    let mut prev = f64::INFINITY;
    let mut j = 1.0;
    loop {
        let term = (ln_unit + ln_level_dim(n + j * m, d) - spec.epsilon * j * m).exp();
        if term == 0.0 || j > 256.0 {
            total += term;
            break;
        }
        let ratio = term / prev;
        if ratio < 0.5 && term < 1e-6 * total.max(f64::MIN_POSITIVE) {
            // ratio is decreasing in j, so the tail is dominated geometrically
            total += term / (1.0 - ratio);
            break;
        }
        total += term;
        prev = term;
        j += 1.0;
    }
    total
}

/// Trapezoid quadrature of Pi_{h,E}(x,y) = int_{-pi}^{pi} U_h(t - i eps, x, y)
/// e^{(i/h)(t - i eps) E} dt / 2pi on the shifted contour.
///
/// The branch of (i sin(t - i eps))^{d/2} for odd d is the continuous
/// continuation from t = 0, where i sin(-i eps) = sinh(eps) > 0; on the open
/// interval (-pi, pi) that is exactly the principal argument, and the nodes
/// are offset by half a step so none lands on the seam at t = +-pi.
pub fn kernel_mehler_quadrature(
    params: &ModelParams,
    x: &[f64],
    y: &[f64],
    spec: &MehlerQuadratureSpec,
) -> Result<MehlerKernel> {
    let d = params.dim();
    if x.len() != d || y.len() != d {
        return Err(Error::Domain("point dimension mismatch".into()));
    }
    if spec.epsilon.is_nan() || spec.epsilon <= 0.0 {
        return Err(Error::Domain(format!(
            "contour shift epsilon must be > 0, got {}",
            spec.epsilon
        )));
    }
    if spec.nodes < 4 {
        return Err(Error::Domain(format!(
            "node count must be >= 4, got {}",
            spec.nodes
        )));
    }
    // e^{+eps E/h} enters through the |alpha| = 0 alias mode; refuse contours
    // that would overflow before damping sets in.
    if spec.epsilon * params.energy_over_h() > 700.0 {
        return Err(Error::Range(format!(
            "epsilon * E/h = {:.1} overflows double range; lower epsilon",
            spec.epsilon * params.energy_over_h()
        )));
    }

    let bound = alias_bound(params, spec);
    if bound.is_nan() || bound > spec.tolerance {
        return Err(Error::Accuracy {
            message: "trapezoid alias bound exceeds requested tolerance; increase nodes".into(),
            bound,
            tolerance: spec.tolerance,
        });
    }

    let nu = params.energy_over_h();
    let h = params.h();
    let half_d = d as f64 / 2.0;
    let ln_2pi_h = (2.0 * std::f64::consts::PI * h).ln();
    let x2y2: f64 =
        0.5 * (x.iter().map(|v| v * v).sum::<f64>() + y.iter().map(|v| v * v).sum::<f64>());
    let xy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();

    let m = spec.nodes;
    let step = 2.0 * std::f64::consts::PI / m as f64;
    let mut re = KahanSum::new();
    let mut im = KahanSum::new();
    let mut mag = KahanSum::new();
    for j in 0..m {
        let t = -std::f64::consts::PI + (j as f64 + 0.5) * step;
        let z = Complex64::new(t, -spec.epsilon);
        let sin_z = z.sin();
        let w = Complex64::i() * sin_z;
        let log_w = Complex64::new(w.norm().ln(), w.arg());
        let phase = Complex64::new(x2y2, 0.0) * z.cos() / sin_z - Complex64::new(xy, 0.0) / sin_z;
        let exponent =
            -half_d * (log_w + ln_2pi_h) + Complex64::i() * phase / h + Complex64::i() * z * nu;
        if exponent.re > 709.0 {
            return Err(Error::Range(format!(
                "integrand magnitude exp({:.1}) overflows at t={t:.3}; lower epsilon",
                exponent.re
            )));
        }
        let g = exponent.exp();
        re.add(g.re);
        im.add(g.im);
        mag.add(g.norm());
    }
    let value = re.value() / m as f64;
    let imag = im.value() / m as f64;
    let floor = 4.0 * f64::EPSILON * mag.value() / m as f64;
    Ok(MehlerKernel {
        value,
        imag_residual: imag.abs() / value.abs().max(f64::MIN_POSITIVE),
        alias_bound: bound,
        roundoff_floor: floor,
    })
}
