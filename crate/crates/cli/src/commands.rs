//! Implementations of the CLI subcommands on top of nodal-core.

use serde_json::json;

use nodal_core::asymptotics::{self, RegionTag};
use nodal_core::ensemble;
use nodal_core::error::{Error, Result};
use nodal_core::kacrice::{self, Ball};
use nodal_core::nodal;
use nodal_core::projector::{self, MehlerQuadratureSpec};
use nodal_core::ModelParams;

use crate::config::{parse_levels, parse_points, parse_radii, ResolvedConfig};
use crate::output::{Cell, Output, Table};

fn leading_density(params: &ModelParams, x: &[f64]) -> Option<f64> {
    match asymptotics::classify_region(params, x) {
        RegionTag::Allowed => asymptotics::density_allowed_leading(params, x).ok(),
        RegionTag::Forbidden => asymptotics::density_forbidden_leading(params, x).ok(),
        _ => None,
    }
}

/// `density`: sweep radii or evaluate explicit points; columns
/// (x, region, F_exact, F_leading, ratio).
pub fn cmd_density(config: &ResolvedConfig) -> Result<Output> {
    let params = config.params()?;
    if params.dim() == 1 {
        return Err(Error::Domain(
            "d=1 has a deterministic zero count instead of a Kac-Rice density; use `compare`"
                .into(),
        ));
    }
    let mut targets: Vec<(f64, Vec<f64>, bool)> = Vec::new(); // (label radius, point, strict)
    if let Some(spec) = &config.radii {
        for r in parse_radii(spec)? {
            let mut x = vec![0.0; params.dim()];
            x[0] = r;
            targets.push((r, x, false));
        }
    }
    if let Some(spec) = &config.points {
        for p in parse_points(spec, params.dim())? {
            let r = p.iter().map(|c| c * c).sum::<f64>().sqrt();
            targets.push((r, p, true));
        }
    }
    if targets.is_empty() {
        return Err(Error::Domain(
            "density needs --radii start:end:step or --points".into(),
        ));
    }
    let mut rows = Vec::new();
    for (r, x, strict) in targets {
        let region = asymptotics::classify_region(&params, &x);
        if strict && matches!(region, RegionTag::Origin | RegionTag::CausticBand) {
            return Err(Error::Domain(format!(
                "requested point |x| = {r:.4} lies in the excluded {region} region"
            )));
        }
        let f_exact = kacrice::density(&params, &x)?;
        let lead = leading_density(&params, &x);
        rows.push(vec![
            Cell::Float(r),
            Cell::Text(region.to_string()),
            Cell::Float(f_exact),
            lead.map_or(Cell::Empty, Cell::Float),
            lead.map_or(Cell::Empty, |l| Cell::Float(f_exact / l)),
        ]);
    }
    Ok(Output::Table(Table {
        columns: vec!["x", "region", "F_exact", "F_leading", "ratio"],
        rows,
    }))
}

/// `kernel`: diagonal jets at --points and/or off-diagonal values at --pairs,
/// by both methods, with the cross-method residual on the kernel scale.
pub fn cmd_kernel(config: &ResolvedConfig) -> Result<Output> {
    let params = config.params()?;
    let mut rows = Vec::new();
    let mut any = false;
    if let Some(spec) = &config.points {
        any = true;
        for x in parse_points(spec, params.dim())? {
            let jet = projector::kernel_jet_exact(&params, &x)?;
            let tuned = MehlerQuadratureSpec::tuned_for(&params, &x, &x);
            let mq = projector::kernel_mehler_quadrature(&params, &x, &x, &tuned)?;
            let residual = (jet.pi - mq.value).abs() / jet.pi.max(f64::MIN_POSITIVE);
            rows.push(vec![
                Cell::Text(fmt_point(&x)),
                Cell::Text(fmt_point(&x)),
                Cell::Float(jet.pi),
                Cell::Float(mq.value),
                Cell::Float(residual),
                Cell::Float(mq.alias_bound),
                Cell::Float(mq.roundoff_floor),
                Cell::Float(mq.imag_residual),
            ]);
        }
    }
    if let Some(spec) = &config.pairs {
        any = true;
        let flat = parse_points(spec, 2 * params.dim())?;
        for xy in flat {
            let (x, y) = xy.split_at(params.dim());
            let exact = projector::kernel_offdiag_exact(&params, x, y)?;
            let tuned = MehlerQuadratureSpec::tuned_for(&params, x, y);
            let mq = projector::kernel_mehler_quadrature(&params, x, y, &tuned)?;
            let scale = (projector::kernel_offdiag_exact(&params, x, x)?
                * projector::kernel_offdiag_exact(&params, y, y)?)
            .sqrt();
            rows.push(vec![
                Cell::Text(fmt_point(x)),
                Cell::Text(fmt_point(y)),
                Cell::Float(exact),
                Cell::Float(mq.value),
                Cell::Float((exact - mq.value).abs() / scale.max(f64::MIN_POSITIVE)),
                Cell::Float(mq.alias_bound),
                Cell::Float(mq.roundoff_floor),
                Cell::Float(mq.imag_residual),
            ]);
        }
    }
    if !any {
        return Err(Error::Domain(
            "kernel needs --points (diagonal) or --pairs x...,y... (off-diagonal)".into(),
        ));
    }
    Ok(Output::Table(Table {
        columns: vec![
            "x",
            "y",
            "exact",
            "mehler",
            "residual",
            "alias_bound",
            "roundoff_floor",
            "imag_residual",
        ],
        rows,
    }))
}

fn fmt_point(x: &[f64]) -> String {
    x.iter()
        .map(|c| format!("{c}"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// `sample`: draw one realization (or reload a dump), optionally write the
/// coefficient dump and a grid evaluation for plotting.
pub fn cmd_sample(config: &ResolvedConfig) -> Result<Output> {
    let params = config.params()?;
    let field = match &config.from_coeffs {
        Some(path) => {
            let file = std::fs::File::open(path)
                .map_err(|e| Error::Domain(format!("cannot open {path}: {e}")))?;
            ensemble::read_coefficients(std::io::BufReader::new(file), config.energy)?
        }
        None => ensemble::sample_eigenfunction(&params, config.seed)?,
    };
    if let Some(path) = &config.out_coeffs {
        let file = std::fs::File::create(path)
            .map_err(|e| Error::Domain(format!("cannot create {path}: {e}")))?;
        ensemble::write_coefficients(&field, std::io::BufWriter::new(file))
            .map_err(|e| Error::Domain(format!("write {path}: {e}")))?;
    }
    if let Some(n) = config.grid {
        if params.dim() != 2 {
            return Err(Error::Domain("grid evaluation is d=2 only".into()));
        }
        if n < 2 {
            return Err(Error::Domain(
                "grid needs at least 2 points per axis".into(),
            ));
        }
        let extent = config.extent;
        let spec = ensemble::GridSpec2 {
            origin: [-extent, -extent],
            spacing: 2.0 * extent / (n - 1) as f64,
            nx: n,
            ny: n,
        };
        let grid = ensemble::evaluate_on_grid(&field, &spec)?;
        let mut rows = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let [x, y] = spec.coord(i, j);
                rows.push(vec![
                    Cell::Float(x),
                    Cell::Float(y),
                    Cell::Float(grid.at(i, j)),
                ]);
            }
        }
        return Ok(Output::Table(Table {
            columns: vec!["x", "y", "value"],
            rows,
        }));
    }
    Ok(Output::Json(json!({
        "d": field.params.dim(),
        "N": field.params.level(),
        "E": field.params.energy(),
        "h": field.params.h(),
        "seed": field.seed,
        "coefficients": field.coeffs.len(),
    })))
}

fn ball_from_config(config: &ResolvedConfig, params: &ModelParams) -> Result<Ball> {
    let center = match &config.center {
        Some(spec) => {
            let pts = parse_points(spec, params.dim())?;
            if pts.len() != 1 {
                return Err(Error::Domain("expected exactly one ball center".into()));
            }
            pts.into_iter().next().unwrap()
        }
        None => {
            let mut c = vec![0.0; params.dim()];
            c[0] = 0.8 * params.energy().sqrt();
            c
        }
    };
    Ball::new(center, config.radius)
}

/// `mc`: Monte-Carlo vs Kac-Rice vs asymptotics over one ball, as JSON.
pub fn cmd_mc(config: &ResolvedConfig) -> Result<Output> {
    let params = config.params()?;
    let ball = ball_from_config(config, &params)?;
    let report = nodal::compare_report(
        &params,
        &ball,
        config.samples,
        config.seed,
        Some(config.grid_spacing),
    )?;
    Ok(Output::Json(serde_json::to_value(&report).map_err(
        |e| Error::Domain(format!("serialize report: {e}")),
    )?))
}

/// `compare`: the two-ball summary (one allowed, one forbidden ball) used to
/// contrast the h^{-1} and h^{-1/2} regimes; d=1 routes to the zero count.
pub fn cmd_compare(config: &ResolvedConfig) -> Result<Output> {
    let params = config.params()?;
    if params.dim() == 1 {
        let report = nodal::compare_report(&params, &Ball::new(vec![0.0], 1.0)?, 0, 0, None)?;
        return Ok(Output::Json(
            serde_json::to_value(&report)
                .map_err(|e| Error::Domain(format!("serialize report: {e}")))?,
        ));
    }
    let s = params.energy().sqrt();
    let mk = |r0: f64, rad: f64| -> Result<Ball> {
        let mut c = vec![0.0; params.dim()];
        c[0] = r0 * s;
        Ball::new(c, rad * s)
    };
    let allowed = nodal::compare_report(
        &params,
        &mk(0.8, 0.3)?,
        config.samples,
        config.seed,
        Some(config.grid_spacing),
    )?;
    let forbidden = nodal::compare_report(
        &params,
        &mk(1.75, 0.12)?,
        config.samples,
        config.seed,
        Some(config.grid_spacing),
    )?;
    Ok(Output::Json(json!({
        "allowed": allowed,
        "forbidden": forbidden,
    })))
}

/// `sweep`: exact density across levels at fixed radii with the fitted
/// h-exponent per radius.
pub fn cmd_sweep(config: &ResolvedConfig) -> Result<Output> {
    let d = config.d;
    if d == 1 {
        return Err(Error::Domain("sweep requires d >= 2".into()));
    }
    let levels = parse_levels(config.levels.as_deref().unwrap_or("20,30,40,50,60,70,80"))?;
    if levels.len() < 2 {
        return Err(Error::Domain("sweep needs at least two levels".into()));
    }
    let radii: Vec<f64> = match &config.radii {
        Some(spec) if spec.contains(':') => parse_radii(spec)?,
        Some(spec) => spec
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Domain(format!("bad radius {s:?}: {e}")))
            })
            .collect::<Result<_>>()?,
        None => vec![0.6, 1.8],
    };
    let mut rows = Vec::new();
    for &r in &radii {
        let mut pts = Vec::new();
        for &n in &levels {
            let params = ModelParams::new(d, config.energy, n)?;
            let mut x = vec![0.0; d];
            x[0] = r;
            let f = kacrice::density(&params, &x)?;
            pts.push((params, f));
        }
        // least-squares slope of ln F against ln h
        let m = pts.len() as f64;
        let sx: f64 = pts.iter().map(|(p, _)| p.h().ln()).sum();
        let sy: f64 = pts.iter().map(|(_, f)| f.ln()).sum();
        let sxx: f64 = pts.iter().map(|(p, _)| p.h().ln().powi(2)).sum();
        let sxy: f64 = pts.iter().map(|(p, f)| p.h().ln() * f.ln()).sum();
        let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
        for ((params, f), &n) in pts.iter().zip(&levels) {
            let mut x = vec![0.0; d];
            x[0] = r;
            let region = asymptotics::classify_region(params, &x);
            let lead = leading_density(params, &x);
            rows.push(vec![
                Cell::Float(r),
                Cell::Text(region.to_string()),
                Cell::Int(n as i64),
                Cell::Float(params.h()),
                Cell::Float(*f),
                lead.map_or(Cell::Empty, Cell::Float),
                lead.map_or(Cell::Empty, |l| Cell::Float(*f / l)),
                Cell::Float(slope),
            ]);
        }
    }
    Ok(Output::Table(Table {
        columns: vec![
            "radius",
            "region",
            "N",
            "h",
            "F_exact",
            "F_leading",
            "ratio",
            "fitted_exponent",
        ],
        rows,
    }))
}
