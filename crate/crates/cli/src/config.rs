//! Experiment configuration: strict TOML on disk, CLI flags override file
//! values, and every run resolves to a fully explicit config whose hash is
//! embedded in output headers for provenance.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use nodal_core::error::{Error, Result};

/// On-disk / command-line configuration. Every field is optional here;
/// unknown keys are rejected so silent typos cannot corrupt an experiment.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub d: Option<usize>,
    #[serde(rename = "E")]
    pub energy: Option<f64>,
    #[serde(rename = "N")]
    pub level: Option<u32>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub grid_spacing: Option<f64>,
    pub format: Option<String>,
    pub out: Option<String>,
    pub radii: Option<String>,
    pub points: Option<String>,
    pub pairs: Option<String>,
    pub levels: Option<String>,
    pub center: Option<String>,
    pub radius: Option<f64>,
    pub quad_order: Option<usize>,
    pub grid: Option<usize>,
    pub extent: Option<f64>,
    pub out_coeffs: Option<String>,
    pub from_coeffs: Option<String>,
}

impl ConfigFile {
    pub fn load(path: &str) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Domain(format!("cannot read config {path}: {e}")))?;
        toml::from_str(&text).map_err(|e| Error::Domain(format!("bad config {path}: {e}")))
    }

    /// Fields set in `overrides` (the CLI) win over the file.
    pub fn merged_with(&self, overrides: &ConfigFile) -> ConfigFile {
        macro_rules! pick {
            ($field:ident) => {
                overrides.$field.clone().or_else(|| self.$field.clone())
            };
        }
        ConfigFile {
            d: pick!(d),
            energy: pick!(energy),
            level: pick!(level),
            seed: pick!(seed),
            samples: pick!(samples),
            grid_spacing: pick!(grid_spacing),
            format: pick!(format),
            out: pick!(out),
            radii: pick!(radii),
            points: pick!(points),
            pairs: pick!(pairs),
            levels: pick!(levels),
            center: pick!(center),
            radius: pick!(radius),
            quad_order: pick!(quad_order),
            grid: pick!(grid),
            extent: pick!(extent),
            out_coeffs: pick!(out_coeffs),
            from_coeffs: pick!(from_coeffs),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Fully explicit configuration: what actually ran. Serializes to TOML
/// losslessly; the hash of that serialization is the provenance tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolvedConfig {
    pub command: String,
    pub d: usize,
    #[serde(rename = "E")]
    pub energy: f64,
    #[serde(rename = "N")]
    pub level: u32,
    pub seed: u64,
    pub samples: usize,
    pub grid_spacing: f64,
    pub format: OutputFormat,
    pub out: Option<String>,
    pub radii: Option<String>,
    pub points: Option<String>,
    pub pairs: Option<String>,
    pub levels: Option<String>,
    pub center: Option<String>,
    pub radius: f64,
    pub quad_order: usize,
    pub grid: Option<usize>,
    pub extent: f64,
    pub out_coeffs: Option<String>,
    pub from_coeffs: Option<String>,
}

impl ResolvedConfig {
    pub fn resolve(command: &str, merged: &ConfigFile) -> Result<Self> {
        let d = merged.d.unwrap_or(2);
        let energy = merged.energy.unwrap_or(1.0);
        let level = merged.level.unwrap_or(20);
        let params = nodal_core::ModelParams::new(d, energy, level)?;
        let format = match merged.format.as_deref() {
            None | Some("csv") => OutputFormat::Csv,
            Some("json") => OutputFormat::Json,
            Some(other) => {
                return Err(Error::Domain(format!(
                    "unknown format {other:?}; expected csv or json"
                )))
            }
        };
        Ok(Self {
            command: command.to_string(),
            d,
            energy,
            level,
            seed: merged.seed.unwrap_or(1),
            samples: merged.samples.unwrap_or(2000),
            grid_spacing: merged
                .grid_spacing
                .unwrap_or(params.h() / nodal_core::nodal::DEFAULT_SPACING_FACTOR),
            format,
            out: merged.out.clone(),
            radii: merged.radii.clone(),
            points: merged.points.clone(),
            pairs: merged.pairs.clone(),
            levels: merged.levels.clone(),
            center: merged.center.clone(),
            radius: merged.radius.unwrap_or(0.3),
            quad_order: merged.quad_order.unwrap_or(32),
            grid: merged.grid,
            extent: merged.extent.unwrap_or(2.0),
            out_coeffs: merged.out_coeffs.clone(),
            from_coeffs: merged.from_coeffs.clone(),
        })
    }

    pub fn params(&self) -> Result<nodal_core::ModelParams> {
        nodal_core::ModelParams::new(self.d, self.energy, self.level)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("resolved config serializes")
    }

    /// First 16 hex characters of the SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// Parse "start:end:step" into an inclusive sweep.
pub fn parse_radii(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Domain(format!(
            "radii spec {spec:?} must be start:end:step"
        )));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|s| {
            s.parse::<f64>()
                .map_err(|e| Error::Domain(format!("bad number {s:?} in radii spec: {e}")))
        })
        .collect::<Result<_>>()?;
    let (start, end, step) = (nums[0], nums[1], nums[2]);
    if !(step > 0.0 && end >= start) {
        return Err(Error::Domain(format!("bad radii sweep {spec:?}")));
    }
    let count = ((end - start) / step + 0.5).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

/// Parse "x0,x1;y0,y1;..." into points of dimension `d`.
pub fn parse_points(spec: &str, d: usize) -> Result<Vec<Vec<f64>>> {
    spec.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|chunk| {
            let coords: Vec<f64> = chunk
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Domain(format!("bad coordinate {s:?}: {e}")))
                })
                .collect::<Result<_>>()?;
            if coords.len() != d {
                return Err(Error::Domain(format!(
                    "point {chunk:?} has {} coordinates, expected {d}",
                    coords.len()
                )));
            }
            Ok(coords)
        })
        .collect()
}

/// Parse "20,40,80" into levels.
pub fn parse_levels(spec: &str) -> Result<Vec<u32>> {
    spec.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<u32>()
                .map_err(|e| Error::Domain(format!("bad level {s:?}: {e}")))
        })
        .collect()
}
