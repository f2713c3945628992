//! Measurement of actual nodal sets: deterministic zero counting in d=1,
//! marching-squares nodal length in balls for d=2, and Monte-Carlo estimates
//! of the expected nodal measure with comparison reports against the exact
//! Kac-Rice integral and the closed-form asymptotics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{self, RegionTag};
use crate::ensemble::{evaluate_on_grid, sample_eigenfunction, FieldGrid2, GridSpec2};
use crate::error::{Error, Result};
use crate::hermite::hermite_table;
use crate::kacrice::{density_integral_ball, integrate_over_ball, Ball};
use crate::numeric::pairwise_sum;
use crate::params::ModelParams;
use crate::rng;

/// Default grid spacing for d=2 Monte-Carlo, as a fraction of h.
pub const DEFAULT_SPACING_FACTOR: f64 = 6.0;

/// Monte-Carlo mean and standard error of nodal measure in a ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodalEstimate {
    pub ball: Ball,
    pub n_samples: usize,
    pub mean: f64,
    pub stderr: f64,
    pub grid_spacing: f64,
    pub base_seed: u64,
}

/// Count zeros of the deterministic d=1 eigenfunction phi_N on an interval.
///
/// Sign changes on a sampling grid are each refined by bisection to width
/// 1e-12; Hermite zeros are simple, so the count is exact once the spacing
/// resolves a quarter of the minimal local wavelength.
pub fn count_zeros_1d(
    params: &ModelParams,
    interval: (f64, f64),
    resolution: usize,
) -> Result<usize> {
    if params.dim() != 1 {
        return Err(Error::Domain(format!(
            "count_zeros_1d requires d=1, got d={}",
            params.dim()
        )));
    }
    let (a, b) = interval;
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::Domain(format!("bad interval [{a}, {b}]")));
    }
    if resolution < 2 {
        return Err(Error::Domain("resolution must be >= 2".into()));
    }
    let spacing = (b - a) / (resolution - 1) as f64;
    let max_spacing = (std::f64::consts::PI * params.h() / 8.0)
        .min(std::f64::consts::PI * params.h() / (2.0 * params.momentum_max()));
    if spacing > max_spacing {
        return Err(Error::Accuracy {
            message: "sample spacing too coarse to separate zeros".into(),
            bound: spacing,
            tolerance: max_spacing,
        });
    }

    let n = params.level() as usize;
    let sqrt_h = params.h().sqrt();
    let psi_n = |x: f64| hermite_table(x / sqrt_h, n).map(|t| t.values[n]);

    let mut values = Vec::with_capacity(resolution);
    for i in 0..resolution {
        values.push(psi_n(a + i as f64 * spacing)?);
    }
    let mut count = 0usize;
    for i in 0..resolution - 1 {
        let (va, vb) = (values[i], values[i + 1]);
        if va == 0.0 {
            count += 1;
            continue;
        }
        if va * vb < 0.0 {
            // bisect to width 1e-12
            let (mut lo, mut hi) = (a + i as f64 * spacing, a + (i + 1) as f64 * spacing);
            let mut flo = va;
            while hi - lo > 1e-12 {
                let mid = 0.5 * (lo + hi);
                let fm = psi_n(mid)?;
                if fm == 0.0 {
                    break;
                }
                if flo * fm < 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            count += 1;
        }
    }
    if values[resolution - 1] == 0.0 {
        count += 1;
    }
    Ok(count)
}

#[inline]
fn positive(v: f64) -> bool {
    v >= 0.0
}

/// Linear-interpolation zero crossing on the edge from `pa` (value a) to
/// `pb` (value b). Written as a |b|/|a| weighted average, which is exactly
/// symmetric under swapping the endpoints, so lattice symmetries of the
/// field map to bitwise-identical crossing coordinates.
#[inline]
fn crossing_point(pa: [f64; 2], a: f64, pb: [f64; 2], b: f64) -> [f64; 2] {
    let (wa, wb) = (b.abs(), a.abs());
    let denom = wa + wb;
    [
        (wa * pa[0] + wb * pb[0]) / denom,
        (wa * pa[1] + wb * pb[1]) / denom,
    ]
}

/// Clip segment [p, q] to the disk |z - c| <= r and return the retained length.
fn clipped_length(p: [f64; 2], q: [f64; 2], c: [f64; 2], r: f64) -> f64 {
    let d = [q[0] - p[0], q[1] - p[1]];
    let m = [p[0] - c[0], p[1] - c[1]];
    let aa = d[0] * d[0] + d[1] * d[1];
    if aa == 0.0 {
        return 0.0;
    }
    let bb = m[0] * d[0] + m[1] * d[1];
    let cc = m[0] * m[0] + m[1] * m[1] - r * r;
    let disc = bb * bb - aa * cc;
    if disc <= 0.0 {
        return 0.0; // entirely outside (or tangent)
    }
    let sq = disc.sqrt();
    let t0 = ((-bb - sq) / aa).max(0.0);
    let t1 = ((-bb + sq) / aa).min(1.0);
    if t1 <= t0 {
        return 0.0;
    }
    (t1 - t0) * aa.sqrt()
}

/// Total length of the linear-interpolation isocontour of `grid` inside
/// `ball` (marching squares; the ambiguous saddle is resolved by the sign of
/// the cell-center average).
pub fn nodal_length_2d(grid: &FieldGrid2, ball: &Ball) -> Result<f64> {
    let spec = grid.spec;
    if ball.center.len() != 2 {
        return Err(Error::Domain("nodal_length_2d needs a 2D ball".into()));
    }
    let (cx, cy, r) = (ball.center[0], ball.center[1], ball.radius);
    let step = spec.spacing;
    let x_max = spec.origin[0] + (spec.nx - 1) as f64 * step;
    let y_max = spec.origin[1] + (spec.ny - 1) as f64 * step;
    let margin = 2.0 * step;
    if cx - r < spec.origin[0] + margin
        || cx + r > x_max - margin
        || cy - r < spec.origin[1] + margin
        || cy + r > y_max - margin
    {
        return Err(Error::Domain(
            "grid does not cover the ball with a margin of 2 cells".into(),
        ));
    }
    if grid.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("grid contains non-finite values".into()));
    }

    let mut lengths = Vec::new();
    let reach = r + step * std::f64::consts::SQRT_2;
    for i in 0..spec.nx - 1 {
        let x0 = spec.origin[0] + i as f64 * step;
        if x0 + step < cx - reach || x0 > cx + reach {
            continue;
        }
        for j in 0..spec.ny - 1 {
            let y0 = spec.origin[1] + j as f64 * step;
            if y0 + step < cy - reach || y0 > cy + reach {
                continue;
            }
            let x1 = x0 + step;
            let y1 = y0 + step;
            let v00 = grid.at(i, j);
            let v10 = grid.at(i + 1, j);
            let v11 = grid.at(i + 1, j + 1);
            let v01 = grid.at(i, j + 1);
            let code = (positive(v00) as u8)
                | (positive(v10) as u8) << 1
                | (positive(v11) as u8) << 2
                | (positive(v01) as u8) << 3;
            if code == 0 || code == 0b1111 {
                continue;
            }
            let bottom = || crossing_point([x0, y0], v00, [x1, y0], v10);
            let right = || crossing_point([x1, y0], v10, [x1, y1], v11);
            let top = || crossing_point([x0, y1], v01, [x1, y1], v11);
            let left = || crossing_point([x0, y0], v00, [x0, y1], v01);
            let mut add = |p: [f64; 2], q: [f64; 2]| {
                let len = clipped_length(p, q, [cx, cy], r);
                if len > 0.0 {
                    lengths.push(len);
                }
            };
            match code {
                0b0001 | 0b1110 => add(bottom(), left()),
                0b0010 | 0b1101 => add(bottom(), right()),
                0b0100 | 0b1011 => add(right(), top()),
                0b1000 | 0b0111 => add(top(), left()),
                0b0011 | 0b1100 => add(left(), right()),
                0b0110 | 0b1001 => add(bottom(), top()),
                0b0101 | 0b1010 => {
                    // saddle: center average decides which corners connect;
                    // diagonal grouping keeps the sum rotation-invariant
                    let center = 0.25 * ((v00 + v11) + (v10 + v01));
                    let center_joins_v00 = positive(center) == positive(v00);
                    if center_joins_v00 {
                        add(bottom(), right());
                        add(top(), left());
                    } else {
                        add(bottom(), left());
                        add(right(), top());
                    }
                }
                _ => unreachable!(),
            }
        }
    }
    // summing in sorted order makes the result independent of the scan
    // direction, so lattice rotations reproduce bitwise-identical totals
    lengths.sort_by(f64::total_cmp);
    Ok(pairwise_sum(&lengths))
}

/// Monte-Carlo estimate of the expected nodal measure in a ball (d = 2).
/// Sample i is seeded by (base_seed, i); aggregation is a deterministic
/// pairwise sum over the sample index, so thread count never changes bits.
pub fn mc_expected_measure(
    params: &ModelParams,
    ball: &Ball,
    n_samples: usize,
    base_seed: u64,
    grid_spacing: f64,
) -> Result<NodalEstimate> {
    if params.dim() != 2 {
        return Err(Error::Domain(format!(
            "mc_expected_measure requires d=2, got d={}",
            params.dim()
        )));
    }
    if n_samples == 0 {
        return Err(Error::Domain("need at least one sample".into()));
    }
    if grid_spacing.is_nan() || grid_spacing <= 0.0 || grid_spacing > params.h() / 5.0 {
        return Err(Error::Accuracy {
            message: "grid spacing too coarse for nodal extraction".into(),
            bound: grid_spacing,
            tolerance: params.h() / 5.0,
        });
    }
    let spec = grid_covering(ball, grid_spacing);
    let lengths: Result<Vec<f64>> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let seed = rng::derive_key(base_seed, i as u64);
            let field = sample_eigenfunction(params, seed)?;
            let grid = evaluate_on_grid(&field, &spec)?;
            nodal_length_2d(&grid, ball)
        })
        .collect();
    let lengths = lengths?;
    let mean = pairwise_sum(&lengths) / n_samples as f64;
    let stderr = if n_samples > 1 {
        let sq: Vec<f64> = lengths.iter().map(|v| (v - mean) * (v - mean)).collect();
        (pairwise_sum(&sq) / (n_samples as f64 - 1.0) / n_samples as f64).sqrt()
    } else {
        0.0
    };
    Ok(NodalEstimate {
        ball: ball.clone(),
        n_samples,
        mean,
        stderr,
        grid_spacing,
        base_seed,
    })
}

/// Lattice covering the ball with a 3-cell margin on every side.
fn grid_covering(ball: &Ball, spacing: f64) -> GridSpec2 {
    let half = ball.radius + 3.0 * spacing;
    let n = (2.0 * half / spacing).ceil() as usize + 1;
    GridSpec2 {
        origin: [ball.center[0] - half, ball.center[1] - half],
        spacing,
        nx: n,
        ny: n,
    }
}

/// Side-by-side comparison of Monte-Carlo, exact Kac-Rice and leading-order
/// asymptotics over one ball.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub params: ModelParams,
    pub ball: Ball,
    pub region: RegionTag,
    pub mc: NodalEstimate,
    pub kacrice_exact: f64,
    pub kacrice_error_estimate: f64,
    pub asymptotic: f64,
    pub z_score: f64,
    /// ((mc - exact)/exact, (exact - asymptotic)/exact)
    pub relative_gaps: (f64, f64),
}

/// d=1 requests route to the deterministic zero count.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Report {
    OneDim {
        params: ModelParams,
        interval: (f64, f64),
        zero_count: usize,
        weyl_count: f64,
    },
    TwoDim(Box<ComparisonReport>),
}

/// Bundle Monte-Carlo measurement, the exact Kac-Rice integral and the
/// region-appropriate leading-order integral into one report; d=1 requests
/// are routed to the zero count over the allowed hull.
pub fn compare_report(
    params: &ModelParams,
    ball: &Ball,
    n_samples: usize,
    base_seed: u64,
    grid_spacing: Option<f64>,
) -> Result<Report> {
    if params.dim() == 1 {
        let hull = params.momentum_max() + 1.0;
        let interval = (-hull, hull);
        let spacing_bound = std::f64::consts::PI * params.h() / 8.0;
        let resolution = (2.0 * hull / spacing_bound).ceil() as usize + 2;
        let zero_count = count_zeros_1d(params, interval, resolution)?;
        return Ok(Report::OneDim {
            params: *params,
            interval,
            zero_count,
            weyl_count: params.energy_over_h(),
        });
    }
    let spacing = grid_spacing.unwrap_or(params.h() / DEFAULT_SPACING_FACTOR);
    let exact = density_integral_ball(params, ball, 32)?;
    let region = asymptotics::classify_region(params, &ball.center);
    let leading = |x: f64, y: f64| -> Result<f64> {
        match region {
            RegionTag::Allowed => asymptotics::density_allowed_leading(params, &[x, y]),
            RegionTag::Forbidden => asymptotics::density_forbidden_leading(params, &[x, y]),
            other => Err(Error::Domain(format!(
                "no leading-order density in the {other} region"
            ))),
        }
    };
    let asymptotic = integrate_over_ball(&leading, ball, 32)?.value;
    let mc = mc_expected_measure(params, ball, n_samples, base_seed, spacing)?;
    let z_score = (mc.mean - exact.value) / mc.stderr;
    Ok(Report::TwoDim(Box::new(ComparisonReport {
        params: *params,
        ball: ball.clone(),
        region,
        relative_gaps: (
            (mc.mean - exact.value) / exact.value,
            (exact.value - asymptotic) / exact.value,
        ),
        mc,
        kacrice_exact: exact.value,
        kacrice_error_estimate: exact.error_estimate,
        asymptotic,
        z_score,
    })))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ground_state_has_no_zeros() {
        let p = ModelParams::new(1, 1.0, 0).unwrap();
        assert_eq!(count_zeros_1d(&p, (-3.0, 3.0), 4001).unwrap(), 0);
    }

    #[test]
    fn hermite_zero_count_is_exact() {
        // H_N has exactly N real zeros, all inside the allowed region.
        let p = ModelParams::new(1, 1.0, 20).unwrap();
        let resolution = 8001;
        assert_eq!(count_zeros_1d(&p, (-3.0, 3.0), resolution).unwrap(), 20);
        // strictly forbidden interval: no zeros
        assert_eq!(count_zeros_1d(&p, (1.5, 3.0), 4001).unwrap(), 0);
    }

    #[test]
    fn zero_count_rejects_bad_requests() {
        let p2 = ModelParams::new(2, 1.0, 10).unwrap();
        assert!(matches!(
            count_zeros_1d(&p2, (-1.0, 1.0), 100).unwrap_err(),
            Error::Domain(_)
        ));
        let p = ModelParams::new(1, 1.0, 50).unwrap();
        assert!(matches!(
            count_zeros_1d(&p, (-3.0, 3.0), 10).unwrap_err(),
            Error::Accuracy { .. }
        ));
    }

    fn linear_grid(offset: f64) -> FieldGrid2 {
        let spec = GridSpec2 {
            origin: [-1.0 + offset, -1.0],
            spacing: 0.04,
            nx: 51,
            ny: 51,
        };
        FieldGrid2::from_fn(spec, |x, _| x)
    }

    #[test]
    fn linear_field_length_is_diameter() {
        // nodal line of f = x through the center of B(r, 0): length 2r,
        // whether or not the lattice is aligned with the line
        for offset in [0.0, 0.013, -0.007] {
            let grid = linear_grid(offset);
            let ball = Ball::new(vec![0.0, 0.0], 0.6).unwrap();
            let len = nodal_length_2d(&grid, &ball).unwrap();
            assert_relative_eq!(len, 1.2, max_relative = 1e-12);
        }
    }

    #[test]
    fn circle_field_length_matches_circumference() {
        let rho = 0.5f64;
        let spacing = rho / 200.0;
        let spec = GridSpec2 {
            origin: [-0.9, -0.9],
            spacing,
            nx: (1.8 / spacing) as usize + 2,
            ny: (1.8 / spacing) as usize + 2,
        };
        let grid = FieldGrid2::from_fn(spec, |x, y| x * x + y * y - rho * rho);
        let ball = Ball::new(vec![0.0, 0.0], 0.8).unwrap();
        let len = nodal_length_2d(&grid, &ball).unwrap();
        assert_relative_eq!(len, 2.0 * std::f64::consts::PI * rho, max_relative = 1e-3);
    }

    #[test]
    fn length_converges_under_refinement() {
        // halving the spacing changes a smooth random field's length < 0.5%
        let p = ModelParams::new(2, 1.0, 12).unwrap();
        let ball = Ball::new(vec![0.55, 0.0], 0.3).unwrap();
        let f = sample_eigenfunction(&p, 4242).unwrap();
        let mut lens = Vec::new();
        for spacing in [p.h() / 6.0, p.h() / 12.0] {
            let spec = grid_covering(&ball, spacing);
            let grid = evaluate_on_grid(&f, &spec).unwrap();
            lens.push(nodal_length_2d(&grid, &ball).unwrap());
        }
        assert!(
            (lens[1] / lens[0] - 1.0).abs() < 0.005,
            "refinement moved length by {}",
            (lens[1] / lens[0] - 1.0).abs()
        );
    }

    #[test]
    fn coverage_margin_enforced() {
        let grid = linear_grid(0.0);
        let ball = Ball::new(vec![0.0, 0.0], 0.99).unwrap();
        assert!(matches!(
            nodal_length_2d(&grid, &ball).unwrap_err(),
            Error::Domain(_)
        ));
    }

    #[test]
    fn quarter_turn_leaves_length_invariant() {
        // rotate grid values and the (centered) ball by 90 degrees; the grid
        // must be symmetric about the ball center for the lattice rotation
        // to be a rotation about that center
        let p = ModelParams::new(2, 1.0, 10).unwrap();
        let ball = Ball::new(vec![0.0, 0.0], 0.4).unwrap();
        let spacing = p.h() / 6.0;
        let half_cells = ((ball.radius + 3.0 * spacing) / spacing).ceil() as usize;
        let n = 2 * half_cells + 1;
        let spec = GridSpec2 {
            origin: [
                -(half_cells as f64) * spacing,
                -(half_cells as f64) * spacing,
            ],
            spacing,
            nx: n,
            ny: n,
        };
        let f = sample_eigenfunction(&p, 7).unwrap();
        let grid = evaluate_on_grid(&f, &spec).unwrap();
        // (x, y) -> (-y, x): values'(i, j) = values(j, n-1-i)
        let mut rotated = grid.clone();
        for i in 0..n {
            for j in 0..n {
                rotated.values[i * n + j] = grid.at(j, n - 1 - i);
            }
        }
        let a = nodal_length_2d(&grid, &ball).unwrap();
        let b = nodal_length_2d(&rotated, &ball).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mc_single_sample_deterministic() {
        let p = ModelParams::new(2, 1.0, 8).unwrap();
        let ball = Ball::new(vec![0.7, 0.0], 0.2).unwrap();
        let a = mc_expected_measure(&p, &ball, 1, 99, p.h() / 6.0).unwrap();
        let b = mc_expected_measure(&p, &ball, 1, 99, p.h() / 6.0).unwrap();
        assert_eq!(a.mean, b.mean);
        assert_eq!(a.stderr, 0.0);
    }

    #[test]
    fn mc_spacing_guard() {
        let p = ModelParams::new(2, 1.0, 8).unwrap();
        let ball = Ball::new(vec![0.7, 0.0], 0.2).unwrap();
        assert!(matches!(
            mc_expected_measure(&p, &ball, 1, 0, p.h()).unwrap_err(),
            Error::Accuracy { .. }
        ));
    }

    #[test]
    fn report_roundtrips_through_json() {
        let p = ModelParams::new(2, 1.0, 20).unwrap();
        let ball = Ball::new(vec![0.7, 0.0], 0.15).unwrap();
        let report = compare_report(&p, &ball, 8, 5, None).unwrap();
        let json = serde_json::to_string(&report).unwrap();
        let back: Report = serde_json::from_str(&json).unwrap();
        match (&report, &back) {
            (Report::TwoDim(a), Report::TwoDim(b)) => {
                assert_eq!(a.kacrice_exact, b.kacrice_exact);
                assert_eq!(a.mc.mean, b.mc.mean);
                assert_eq!(a.z_score, b.z_score);
            }
            _ => panic!("expected 2D reports"),
        }
    }

    #[test]
    fn report_routes_d1_to_zero_count() {
        let p = ModelParams::new(1, 1.0, 20).unwrap();
        let ball = Ball::new(vec![0.5], 0.1).unwrap();
        match compare_report(&p, &ball, 10, 0, None).unwrap() {
            Report::OneDim {
                zero_count,
                weyl_count,
                ..
            } => {
                assert_eq!(zero_count, 20);
                assert_eq!(weyl_count, 20.5);
            }
            _ => panic!("expected 1D routing"),
        }
    }
}
