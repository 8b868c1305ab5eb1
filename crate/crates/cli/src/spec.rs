//! Flag and config-file parsing: the map mini-language, windows, grids, and
//! the merged experiment configuration.

use std::path::Path;

use num_complex::Complex64;
use serde::Deserialize;

use dreadlock::{EntireMap, MapConfig, Window};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numeric(String),
    Io(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric failure: {m}"),
            CliError::Io(m) => write!(f, "io error: {m}"),
        }
    }
}

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

impl From<dreadlock::Error> for CliError {
    fn from(e: dreadlock::Error) -> Self {
        match e {
            dreadlock::Error::Parse(m) => CliError::Usage(m),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// `exp:<re>[,<im>]` or `cos:<a_re>,<a_im>,<b_re>,<b_im>`.
pub fn parse_map_spec(s: &str) -> Result<MapConfig, CliError> {
    let (family, rest) = s
        .split_once(':')
        .ok_or_else(|| usage(format!("map spec '{s}' needs '<family>:<params>'")))?;
    let nums: Vec<f64> = rest
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| usage(format!("bad numeric parameters in map spec '{s}'")))?;
    let params = match (family, nums.len()) {
        ("exp" | "exponential", 1) => vec![[nums[0], 0.0]],
        ("exp" | "exponential", 2) => vec![[nums[0], nums[1]]],
        ("cos" | "cosine", 4) => vec![[nums[0], nums[1]], [nums[2], nums[3]]],
        _ => {
            return Err(usage(format!(
                "map spec '{s}': expected exp:<re>[,<im>] or cos:<a_re>,<a_im>,<b_re>,<b_im>"
            )))
        }
    };
    Ok(MapConfig {
        family: family.to_string(),
        params,
        disc_radius: None,
        cut_angle: None,
        normalize_samples: None,
    })
}

/// `re[,im]`.
pub fn parse_complex(s: &str) -> Result<Complex64, CliError> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || usage(format!("bad complex value '{s}', expected re[,im]"));
    match parts.as_slice() {
        [re] => Ok(Complex64::new(re.parse().map_err(|_| bad())?, 0.0)),
        [re, im] => Ok(Complex64::new(
            re.parse().map_err(|_| bad())?,
            im.parse().map_err(|_| bad())?,
        )),
        _ => Err(bad()),
    }
}

/// `re_min,re_max,im_min,im_max`.
pub fn parse_window(s: &str) -> Result<Window, CliError> {
    let nums: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| usage(format!("bad window '{s}'")))?;
    if nums.len() != 4 {
        return Err(usage(format!(
            "window '{s}' needs four numbers re_min,re_max,im_min,im_max"
        )));
    }
    Window::new(nums[0], nums[1], nums[2], nums[3])
        .map_err(|e| usage(format!("window '{s}': {e}")))
}

/// `NxM`.
pub fn parse_grid(s: &str) -> Result<(usize, usize), CliError> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| usage(format!("grid '{s}' needs the form NxM")))?;
    let nx = a.trim().parse().map_err(|_| usage(format!("bad grid '{s}'")))?;
    let ny = b.trim().parse().map_err(|_| usage(format!("bad grid '{s}'")))?;
    if nx == 0 || ny == 0 {
        return Err(usage(format!("grid '{s}' must be positive")));
    }
    Ok((nx, ny))
}

/// Map description in a config file: either the mini-language string or the
/// structured form.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum MapField {
    Spec(String),
    Full(MapConfig),
}

/// Flat experiment configuration; any field may be supplied by file, and
/// command-line flags override.
#[derive(Debug, Clone, Default, Deserialize)]
pub struct FileConfig {
    pub map: Option<MapField>,
    pub addresses: Option<Vec<String>>,
    pub base: Option<String>,
    pub tol: Option<f64>,
    pub n_max: Option<usize>,
    pub period: Option<usize>,
    pub k_bound: Option<i64>,
    pub window: Option<String>,
    pub grid: Option<String>,
    pub match_tol: Option<f64>,
    pub epsilon: Option<f64>,
    pub n0_max: Option<usize>,
    pub uniform_window: Option<usize>,
    pub n_pull: Option<usize>,
    pub samples_per_unit: Option<usize>,
    pub width: Option<usize>,
    pub height: Option<usize>,
    pub max_iter: Option<usize>,
    pub escape_radius: Option<f64>,
    pub disc_radius: Option<f64>,
    pub cut_angle: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)?;
        // both TOML and JSON are accepted regardless of extension
        if let Ok(cfg) = toml::from_str::<FileConfig>(&text) {
            return Ok(cfg);
        }
        serde_json::from_str::<FileConfig>(&text)
            .map_err(|e| usage(format!("config {path:?} is neither valid TOML nor JSON: {e}")))
    }
}

/// Build the map from flag + config, applying radius/cut overrides and the
/// sampled normalization when no explicit radius is given.
pub fn resolve_map(
    flag: Option<&str>,
    cfg: &FileConfig,
    radius_flag: Option<f64>,
    cut_flag: Option<f64>,
) -> Result<EntireMap, CliError> {
    let mut map_cfg = match (flag, &cfg.map) {
        (Some(s), _) => parse_map_spec(s)?,
        (None, Some(MapField::Spec(s))) => parse_map_spec(s)?,
        (None, Some(MapField::Full(mc))) => mc.clone(),
        (None, None) => return Err(usage("no map given; use --map or a config file")),
    };
    if let Some(r) = radius_flag.or(cfg.disc_radius) {
        map_cfg.disc_radius = Some(r);
    }
    if let Some(c) = cut_flag.or(cfg.cut_angle) {
        map_cfg.cut_angle = Some(c);
    }
    Ok(map_cfg.build()?)
}
