//! Kac-Rice machinery: the normalized gradient-covariance matrix Omega, the
//! Gaussian norm mean, the exact expected nodal density F_N(x), and its
//! integral over balls.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::asymptotics;
use crate::error::{Error, Result};
use crate::numeric::pairwise_sum;
use crate::params::ModelParams;
use crate::projector::{kernel_jet_exact, KernelJet};
use crate::quadrature::gauss_legendre;
use crate::rng;

/// Pi(x,x) below this is numerically meaningless for Omega in doubles.
pub const DEGENERATE_PI_THRESHOLD: f64 = 1e-280;

/// Eigenvalues of Omega may dip below zero by at most this fraction of the
/// matrix norm before we refuse; within it they are clipped to zero.
pub const PSD_CLIP_TOLERANCE: f64 = 1e-10;

/// Relative eigenvalue threshold for the rank split inside the norm mean.
const RANK_TOLERANCE: f64 = 1e-12;

/// Omega_x: the covariance of the normalized gradient conditioned on a zero,
/// i.e. the mixed log-derivative of the kernel on the diagonal.
#[derive(Debug, Clone)]
pub struct OmegaMatrix {
    pub x: Vec<f64>,
    pub omega: DMatrix<f64>,
    pub kernel_pi: f64,
    /// Magnitude of the most negative eigenvalue removed by PSD clipping.
    pub clip_delta: f64,
}

/// Omega = (Pi * hess - grad grad^T) / Pi^2, symmetrized and eigen-clipped.
pub fn omega_matrix(jet: &KernelJet) -> Result<OmegaMatrix> {
    let d = jet.x.len();
    if jet.pi.is_nan() || jet.pi <= DEGENERATE_PI_THRESHOLD {
        return Err(Error::DegenerateKernel {
            pi: jet.pi,
            threshold: DEGENERATE_PI_THRESHOLD,
        });
    }
    let mut omega = DMatrix::zeros(d, d);
    for j in 0..d {
        for k in 0..d {
            omega[(j, k)] =
                (jet.pi * jet.hess[(j, k)] - jet.grad[j] * jet.grad[k]) / (jet.pi * jet.pi);
        }
    }
    // enforce exact symmetry before the eigen solve
    let omega = 0.5 * (&omega + omega.transpose());
    let norm = omega.norm();
    let eig = omega.clone().symmetric_eigen();
    let min_eig = eig
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if min_eig < -PSD_CLIP_TOLERANCE * norm {
        return Err(Error::Domain(format!(
            "omega eigenvalue {min_eig:.3e} below PSD tolerance {:.3e}",
            -PSD_CLIP_TOLERANCE * norm
        )));
    }
    let clip_delta = (-min_eig).max(0.0);
    let clipped = if min_eig < 0.0 {
        let mut vals = eig.eigenvalues.clone();
        vals.iter_mut().for_each(|v| *v = v.max(0.0));
        &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose()
    } else {
        omega
    };
    Ok(OmegaMatrix {
        x: jet.x.clone(),
        omega: clipped,
        kernel_pi: jet.pi,
        clip_delta,
    })
}

/// E ||cov^{1/2} xi|| for standard Gaussian xi, with the stderr populated
/// only by the Monte-Carlo estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormMean {
    pub value: f64,
    pub stderr: Option<f64>,
}

/// Mean of the chi distribution with k degrees of freedom.
fn chi_mean(k: usize) -> f64 {
    std::f64::consts::SQRT_2 * gamma((k as f64 + 1.0) / 2.0) / gamma(k as f64 / 2.0)
}

fn psd_eigenvalues(cov: &DMatrix<f64>) -> Result<Vec<f64>> {
    let d = cov.nrows();
    if cov.ncols() != d {
        return Err(Error::Domain("covariance must be square".into()));
    }
    let norm = cov.norm();
    for j in 0..d {
        for k in 0..d {
            if (cov[(j, k)] - cov[(k, j)]).abs() > 1e-10 * norm.max(f64::MIN_POSITIVE) {
                return Err(Error::Domain("covariance must be symmetric".into()));
            }
        }
    }
    let eig = cov.clone().symmetric_eigen();
    let mut lams = Vec::with_capacity(d);
    for &v in eig.eigenvalues.iter() {
        if v < -PSD_CLIP_TOLERANCE * norm {
            return Err(Error::Domain(format!(
                "covariance eigenvalue {v:.3e} is negative beyond tolerance"
            )));
        }
        lams.push(v.max(0.0));
    }
    Ok(lams)
}

/// E ||cov^{1/2} xi||, xi ~ N(0, I_d).
///
/// Spectra that are isotropic on their positive eigenspace (which covers the
/// isotropic case and both leading-order Omega shapes) take the exact chi-mean
/// path. General spectra integrate the smooth scalar representation
///
///   E||eta|| = pi^{-1/2} int_0^{pi/2} (1 - prod_i (1 + 2 lam_i tan^2 v)^{-1/2}) / sin^2 v dv
///
/// by Gauss-Legendre with node doubling until two refinements agree. The
/// integrand is evaluated with log1p/expm1 so no cancellation occurs near
/// v = 0; accuracy is ~1e-14 relative for eigenvalue ratios up to ~1e6.
pub fn gaussian_norm_mean(cov: &DMatrix<f64>) -> Result<NormMean> {
    let lams = psd_eigenvalues(cov)?;
    let lam_max = lams.iter().cloned().fold(0.0f64, f64::max);
    if lam_max == 0.0 {
        return Ok(NormMean {
            value: 0.0,
            stderr: None,
        });
    }
    let positive: Vec<f64> = lams
        .iter()
        .cloned()
        .filter(|&v| v > RANK_TOLERANCE * lam_max)
        .collect();
    let lam_min_pos = positive.iter().cloned().fold(f64::INFINITY, f64::min);
    if (lam_max - lam_min_pos) <= 1e-12 * lam_max {
        let mean = pairwise_sum(&positive) / positive.len() as f64;
        return Ok(NormMean {
            value: mean.sqrt() * chi_mean(positive.len()),
            stderr: None,
        });
    }

    // Normalize by the top eigenvalue so the integrand is O(1); otherwise
    // the v -> 0 plateau at sum(lam) dwarfs the O(sqrt(lam_max)) integral
    // and quadrature roundoff never meets the convergence tolerance.
    let scaled: Vec<f64> = positive.iter().map(|&v| v / lam_max).collect();
    let integrate = |n: usize| -> f64 {
        let rule = gauss_legendre(n);
        let mut acc = 0.0;
        for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
            let v = (t + 1.0) * std::f64::consts::FRAC_PI_4;
            let tan2 = v.tan().powi(2);
            let mut log_prod = 0.0;
            for &lam in &scaled {
                log_prod += (2.0 * lam * tan2).ln_1p();
            }
            let g = -(-0.5 * log_prod).exp_m1();
            acc += w * std::f64::consts::FRAC_PI_4 * g / v.sin().powi(2);
        }
        acc / std::f64::consts::PI.sqrt()
    };
    let mut n = 64;
    let mut prev = integrate(n);
    loop {
        n *= 2;
        let next = integrate(n);
        if (next - prev).abs() <= 1e-13 * next.abs() || n >= 1024 {
            return Ok(NormMean {
                value: lam_max.sqrt() * next,
                stderr: None,
            });
        }
        prev = next;
    }
}

/// Tensor Gauss-Hermite estimator (order `order` per axis). Retained as an
/// independent cross-check of [`gaussian_norm_mean`]; the kink of the norm at
/// the origin limits it to a few digits, so it is not the primary path.
pub fn gaussian_norm_mean_gh_tensor(cov: &DMatrix<f64>, order: usize) -> Result<f64> {
    let lams = psd_eigenvalues(cov)?;
    let d = lams.len();
    if d > 3 {
        return Err(Error::Domain(
            "tensor Gauss-Hermite estimator supports d <= 3".into(),
        ));
    }
    let rule = crate::quadrature::gauss_hermite_probabilists(order);
    let norm = (2.0 * std::f64::consts::PI).sqrt().powi(d as i32);
    let mut idx = vec![0usize; d];
    let mut total = 0.0;
    loop {
        let mut w = 1.0;
        let mut q = 0.0;
        for (axis, &i) in idx.iter().enumerate() {
            w *= rule.weights[i];
            let z = rule.nodes[i];
            q += lams[axis] * z * z;
        }
        total += w * q.sqrt();
        // odometer increment
        let mut axis = 0;
        loop {
            if axis == d {
                return Ok(total / norm);
            }
            idx[axis] += 1;
            if idx[axis] < rule.nodes.len() {
                break;
            }
            idx[axis] = 0;
            axis += 1;
        }
    }
}

/// Counter-based Monte-Carlo estimator with reported standard error.
/// Cross-check estimator for any dimension.
pub fn gaussian_norm_mean_mc(cov: &DMatrix<f64>, samples: usize, seed: u64) -> Result<NormMean> {
    let lams = psd_eigenvalues(cov)?;
    let d = lams.len();
    let values: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut q = 0.0;
            for (axis, &lam) in lams.iter().enumerate() {
                let z = rng::standard_normal(seed, (i * d + axis) as u64);
                q += lam * z * z;
            }
            q.sqrt()
        })
        .collect();
    let mean = pairwise_sum(&values) / samples as f64;
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&sq) / (samples as f64 - 1.0);
    Ok(NormMean {
        value: mean,
        stderr: Some((var / samples as f64).sqrt()),
    })
}

/// Exact expected nodal density F_N(x) = (2pi)^{-1/2} E ||Omega_x^{1/2} xi||.
pub fn density(params: &ModelParams, x: &[f64]) -> Result<f64> {
    let jet = kernel_jet_exact(params, x)?;
    let om = omega_matrix(&jet)?;
    Ok(gaussian_norm_mean(&om.omega)?.value / (2.0 * std::f64::consts::PI).sqrt())
}

/// A ball B(center, radius).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if radius.is_nan() || radius <= 0.0 {
            return Err(Error::Domain(format!(
                "ball radius must be > 0, got {radius}"
            )));
        }
        Ok(Self { center, radius })
    }

    fn center_norm(&self) -> f64 {
        self.center.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

/// Integral of the density over a ball, with a refinement-based error estimate.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BallIntegral {
    pub value: f64,
    pub error_estimate: f64,
}

/// Check the exclusion zones: integration refuses balls touching the origin
/// neighborhood or the caustic band where the density is anomalous.
fn check_exclusions(params: &ModelParams, ball: &Ball) -> Result<()> {
    let r0 = asymptotics::origin_exclusion_radius(params);
    let cmin = (ball.center_norm() - ball.radius).max(0.0);
    let cmax = ball.center_norm() + ball.radius;
    if cmin < r0 {
        return Err(Error::Domain(format!(
            "ball intersects the origin exclusion disk |x| < {r0:.4}"
        )));
    }
    let band = asymptotics::caustic_band_halfwidth(params);
    let twoe = 2.0 * params.energy();
    let (lo, hi) = (cmin * cmin, cmax * cmax);
    if lo <= twoe + band && hi >= twoe - band {
        return Err(Error::Domain(format!(
            "ball intersects the caustic band | |x|^2 - 2E | < {band:.4}"
        )));
    }
    Ok(())
}

/// Tensor Gauss-Legendre over a disk clipped to an axis-aligned rectangle:
/// x = cx + R sin(theta) removes the chord-length square-root singularity,
/// then each chord (clipped to the rectangle) is integrated in y.
fn integrate_disk_clipped(
    f: &(dyn Fn(f64, f64) -> Result<f64> + Sync),
    ball: &Ball,
    rect: Option<[f64; 4]>, // [x0, x1, y0, y1]
    order: usize,
) -> Result<f64> {
    let (cx, cy, rr) = (ball.center[0], ball.center[1], ball.radius);
    let [rx0, rx1, ry0, ry1] = rect.unwrap_or([cx - rr, cx + rr, cy - rr, cy + rr]);
    let x0 = rx0.max(cx - rr);
    let x1 = rx1.min(cx + rr);
    if x0 >= x1 {
        return Ok(0.0);
    }
    let th0 = ((x0 - cx) / rr).clamp(-1.0, 1.0).asin();
    let th1 = ((x1 - cx) / rr).clamp(-1.0, 1.0).asin();
    let base = gauss_legendre(order);
    let th_mid = 0.5 * (th0 + th1);
    let th_half = 0.5 * (th1 - th0);
    let contributions: Result<Vec<f64>> = base
        .nodes
        .par_iter()
        .zip(base.weights.par_iter())
        .map(|(&tn, &tw)| {
            let theta = th_mid + th_half * tn;
            let w_theta = tw * th_half * rr * theta.cos();
            let x = cx + rr * theta.sin();
            let half_chord = rr * theta.cos();
            let y0 = ry0.max(cy - half_chord);
            let y1 = ry1.min(cy + half_chord);
            if y0 >= y1 {
                return Ok(0.0);
            }
            let y_mid = 0.5 * (y0 + y1);
            let y_half = 0.5 * (y1 - y0);
            let mut acc = 0.0;
            for (&yn, &yw) in base.nodes.iter().zip(&base.weights) {
                acc += yw * y_half * f(x, y_mid + y_half * yn)?;
            }
            Ok(w_theta * acc)
        })
        .collect();
    Ok(pairwise_sum(&contributions?))
}

/// The four quadrant rectangles around the ball center. The full-ball
/// integral is defined as the sum over these pieces, so decompositions along
/// the center axes are additive by construction.
fn quadrants(ball: &Ball) -> [[f64; 4]; 4] {
    let (cx, cy, r) = (ball.center[0], ball.center[1], ball.radius);
    [
        [cx - r, cx, cy - r, cy],
        [cx, cx + r, cy - r, cy],
        [cx - r, cx, cy, cy + r],
        [cx, cx + r, cy, cy + r],
    ]
}

/// Integrate an arbitrary smooth integrand over a ball (d=2), used for both
/// the exact density and the closed-form leading densities.
pub fn integrate_over_ball(
    f: &(dyn Fn(f64, f64) -> Result<f64> + Sync),
    ball: &Ball,
    order: usize,
) -> Result<BallIntegral> {
    let run = |n: usize| -> Result<f64> {
        let mut total = 0.0;
        for rect in quadrants(ball) {
            total += integrate_disk_clipped(f, ball, Some(rect), n)?;
        }
        Ok(total)
    };
    let coarse = run(order)?;
    let fine = run(2 * order)?;
    Ok(BallIntegral {
        value: fine,
        error_estimate: (fine - coarse).abs(),
    })
}

/// Integral of the exact Kac-Rice density over a ball (d = 2 only).
///
/// d = 1 is rejected: the one-dimensional eigenspace is rank one, Omega
/// vanishes identically and the expected measure is the deterministic Weyl
/// count handled by the nodal module.
pub fn density_integral_ball(
    params: &ModelParams,
    ball: &Ball,
    quad_order: usize,
) -> Result<BallIntegral> {
    if params.dim() == 1 {
        return Err(Error::Domain(
            "d=1 expected measure is the deterministic zero count; Kac-Rice degenerates".into(),
        ));
    }
    if params.dim() != 2 || ball.center.len() != 2 {
        return Err(Error::Domain(format!(
            "ball integration supports d=2 only, got d={}",
            params.dim()
        )));
    }
    check_exclusions(params, ball)?;
    let f = move |x: f64, y: f64| density(params, &[x, y]);
    integrate_over_ball(&f, ball, quad_order)
}

/// Same clipped integral over ball-intersect-rectangle; quadrature piece used
/// by additivity checks and region decompositions.
pub fn density_integral_ball_clipped(
    params: &ModelParams,
    ball: &Ball,
    rect: [f64; 4],
    quad_order: usize,
) -> Result<f64> {
    if params.dim() != 2 {
        return Err(Error::Domain("clipped ball integration is d=2 only".into()));
    }
    check_exclusions(params, ball)?;
    let f = move |x: f64, y: f64| density(params, &[x, y]);
    integrate_disk_clipped(&f, ball, Some(rect), quad_order)
}
