//! Command-line front end: density tables, kernel cross-validation, sample
//! dumps, Monte-Carlo comparisons and multi-level sweeps.
//!
//! Exit codes: 0 success, 2 domain error, 3 accuracy error, 4 capacity error.

use clap::{Args, Parser, Subcommand};

use nodal_cli::commands;
use nodal_cli::config::{ConfigFile, ResolvedConfig};
use nodal_cli::output::{render, write_rendered};

#[derive(Parser)]
#[command(
    name = "nodal",
    version,
    about = "Expected nodal sets of random eigenfunctions of the isotropic oscillator",
    after_help = "Column order is fixed per command; CSV carries '# nodal <version>' and\n\
                  '# config-hash' provenance headers. density: x,region,F_exact,F_leading,ratio.\n\
                  kernel: x,y,exact,mehler,residual,alias_bound,roundoff_floor,imag_residual.\n\
                  sweep: radius,region,N,h,F_exact,F_leading,ratio,fitted_exponent."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand; values override the config file.
#[derive(Args, Default)]
struct Common {
    /// Dimension d >= 1
    #[arg(long = "d")]
    d: Option<usize>,
    /// Energy E > 0
    #[arg(long = "E")]
    energy: Option<f64>,
    /// Level N >= 0 (h = E/(N + d/2))
    #[arg(long = "N")]
    level: Option<u32>,
    /// Base seed for all random draws
    #[arg(long)]
    seed: Option<u64>,
    /// Monte-Carlo sample count
    #[arg(long)]
    samples: Option<usize>,
    /// Lattice spacing for nodal extraction (default h/6)
    #[arg(long = "grid-spacing")]
    grid_spacing: Option<f64>,
    /// Output file (stdout if omitted)
    #[arg(long)]
    out: Option<String>,
    /// Output format: csv or json
    #[arg(long)]
    format: Option<String>,
    /// TOML config file; command-line flags override its values
    #[arg(long)]
    config: Option<String>,
}

#[derive(Args, Default)]
struct DensityArgs {
    #[command(flatten)]
    common: Common,
    /// Radius sweep start:end:step (inclusive)
    #[arg(long)]
    radii: Option<String>,
    /// Explicit points "x0,x1;y0,y1;..." (rejected in excluded regions)
    #[arg(long)]
    points: Option<String>,
}

#[derive(Args, Default)]
struct KernelArgs {
    #[command(flatten)]
    common: Common,
    /// Diagonal jet points "x0,x1;..."
    #[arg(long)]
    points: Option<String>,
    /// Off-diagonal pairs "x0,x1,y0,y1;..."
    #[arg(long)]
    pairs: Option<String>,
}

#[derive(Args, Default)]
struct SampleArgs {
    #[command(flatten)]
    common: Common,
    /// Write the little-endian coefficient dump here
    #[arg(long = "out-coeffs")]
    out_coeffs: Option<String>,
    /// Load coefficients from a dump instead of sampling
    #[arg(long = "from-coeffs")]
    from_coeffs: Option<String>,
    /// Evaluate on an n-by-n grid and emit x,y,value rows
    #[arg(long)]
    grid: Option<usize>,
    /// Half-width of the evaluation grid (default 2.0)
    #[arg(long)]
    extent: Option<f64>,
}

#[derive(Args, Default)]
struct McArgs {
    #[command(flatten)]
    common: Common,
    /// Ball center "x0,x1" (default 0.8*sqrt(E) on the first axis)
    #[arg(long)]
    center: Option<String>,
    /// Ball radius (default 0.3)
    #[arg(long)]
    radius: Option<f64>,
    /// Quadrature order for the exact integral
    #[arg(long = "quad-order")]
    quad_order: Option<usize>,
}

#[derive(Args, Default)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated levels, e.g. 20,40,80
    #[arg(long)]
    levels: Option<String>,
    /// Radii as comma list or start:end:step
    #[arg(long)]
    radii: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Exact Kac-Rice density against the closed-form leading order
    Density(DensityArgs),
    /// Projector kernel by exact sums and Mehler contour quadrature
    Kernel(KernelArgs),
    /// Sample a random eigenfunction; dump coefficients / grid values
    Sample(SampleArgs),
    /// Monte-Carlo nodal measure vs exact Kac-Rice over one ball
    Mc(McArgs),
    /// Density scaling across levels with fitted h-exponents
    Sweep(SweepArgs),
    /// Two-ball (allowed + forbidden) comparison report; d=1 zero count
    Compare(McArgs),
}

fn to_config_file(common: &Common) -> ConfigFile {
    ConfigFile {
        d: common.d,
        energy: common.energy,
        level: common.level,
        seed: common.seed,
        samples: common.samples,
        grid_spacing: common.grid_spacing,
        format: common.format.clone(),
        out: common.out.clone(),
        ..Default::default()
    }
}

fn run() -> Result<(), nodal_core::Error> {
    let cli = Cli::parse();
    let (name, common, mut overrides): (&str, &Common, ConfigFile) = match &cli.command {
        Command::Density(a) => {
            let mut o = to_config_file(&a.common);
            o.radii = a.radii.clone();
            o.points = a.points.clone();
            ("density", &a.common, o)
        }
        Command::Kernel(a) => {
            let mut o = to_config_file(&a.common);
            o.points = a.points.clone();
            o.pairs = a.pairs.clone();
            ("kernel", &a.common, o)
        }
        Command::Sample(a) => {
            let mut o = to_config_file(&a.common);
            o.out_coeffs = a.out_coeffs.clone();
            o.from_coeffs = a.from_coeffs.clone();
            o.grid = a.grid;
            o.extent = a.extent;
            ("sample", &a.common, o)
        }
        Command::Mc(a) => {
            let mut o = to_config_file(&a.common);
            o.center = a.center.clone();
            o.radius = a.radius;
            o.quad_order = a.quad_order;
            ("mc", &a.common, o)
        }
        Command::Sweep(a) => {
            let mut o = to_config_file(&a.common);
            o.levels = a.levels.clone();
            o.radii = a.radii.clone();
            ("sweep", &a.common, o)
        }
        Command::Compare(a) => {
            let mut o = to_config_file(&a.common);
            o.center = a.center.clone();
            o.radius = a.radius;
            o.quad_order = a.quad_order;
            ("compare", &a.common, o)
        }
    };
    if let Some(path) = &common.config {
        let file = ConfigFile::load(path)?;
        overrides = file.merged_with(&overrides);
    }
    let config = ResolvedConfig::resolve(name, &overrides)?;
    let output = match &cli.command {
        Command::Density(_) => commands::cmd_density(&config)?,
        Command::Kernel(_) => commands::cmd_kernel(&config)?,
        Command::Sample(_) => commands::cmd_sample(&config)?,
        Command::Mc(_) => commands::cmd_mc(&config)?,
        Command::Sweep(_) => commands::cmd_sweep(&config)?,
        Command::Compare(_) => commands::cmd_compare(&config)?,
    };
    write_rendered(&render(&output, &config), &config.out)
}

fn main() {
    if let Err(err) = run() {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
