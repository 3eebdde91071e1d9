//! Text parameter file shared by the modeling and FWI applications.
//!
//! The format is one `key = value` pair per line. Blank lines and lines
//! starting with `#`, `//` or `[` are ignored, and a trailing `//` comment is
//! stripped from a value. Keys not recognised here are reported as warnings.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

/// Default checkpoint memory budget: 1 GiB.
pub const DEFAULT_MEM_BUDGET_BYTES: u64 = 1 << 30;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("missing mandatory key(s): {}", .0.join(", "))]
    MissingKeys(Vec<&'static str>),
    #[error("line {line}: cannot parse `{value}` for key `{key}`")]
    InvalidValue {
        key: String,
        value: String,
        line: usize,
    },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { key: String, line: usize },
    #[error("line {line}: expected `key = value`")]
    Malformed { line: usize },
}

/// Box constraint type handed to the optimizer (`lbfgsb` key).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundMode {
    #[default]
    Unbounded,
    Lower,
    LowerUpper,
    Upper,
}

impl BoundMode {
    pub fn code(self) -> u8 {
        match self {
            BoundMode::Unbounded => 0,
            BoundMode::Lower => 1,
            BoundMode::LowerUpper => 2,
            BoundMode::Upper => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            0 => BoundMode::Unbounded,
            1 => BoundMode::Lower,
            2 => BoundMode::LowerUpper,
            3 => BoundMode::Upper,
            _ => return None,
        })
    }

    pub fn has_lower(self) -> bool {
        matches!(self, BoundMode::Lower | BoundMode::LowerUpper)
    }

    pub fn has_upper(self) -> bool {
        matches!(self, BoundMode::Upper | BoundMode::LowerUpper)
    }
}

/// Gradient smoothing filter (`gradient_preconditioning_mode` key).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Preconditioning {
    #[default]
    None,
    Bessel,
    Laplace,
}

impl Preconditioning {
    pub fn code(self) -> u8 {
        match self {
            Preconditioning::None => 0,
            Preconditioning::Bessel => 1,
            Preconditioning::Laplace => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            0 => Preconditioning::None,
            1 => Preconditioning::Bessel,
            2 => Preconditioning::Laplace,
            _ => return None,
        })
    }
}

/// Absorbing boundary formulation (`boundary_type` key).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundaryKind {
    #[default]
    Damping,
    Cpml,
}

impl fmt::Display for BoundaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundaryKind::Damping => "damping",
            BoundaryKind::Cpml => "cpml",
        })
    }
}

impl FromStr for BoundaryKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "damping" => Ok(BoundaryKind::Damping),
            "cpml" => Ok(BoundaryKind::Cpml),
            _ => Err(()),
        }
    }
}

/// Parameters for modeling and FWI runs.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
    pub ox: f64,
    pub oy: f64,
    pub oz: f64,
    /// Absorbing boundary thickness in points.
    pub border: usize,
    pub ns: usize,
    pub dt: f64,
    pub fpeak: f64,
    pub amplitude: f64,
    pub n_src: usize,
    pub proj_dir: PathBuf,
    pub vel: String,
    pub density: Option<String>,
    /// Stencil half-width; 4 gives the eighth-order Laplacian.
    pub stencil: usize,
    pub boundary: BoundaryKind,
    pub lbfgsb: BoundMode,
    pub lbfgsb_lower_bound: Option<f64>,
    pub lbfgsb_upper_bound: Option<f64>,
    pub n_iter: usize,
    pub max_viter: usize,
    pub gradient_preconditioning_mode: Preconditioning,
    pub bessel_filter_lx: f64,
    pub bessel_filter_ly: f64,
    pub bessel_filter_lz: f64,
    /// Number of top z-planes zeroed in the gradient.
    pub zeroes_nplanes_gradient: usize,
    pub check_mem: f64,
    pub chk_verb: bool,
    pub ws_flag: bool,
    pub mem_budget_bytes: u64,
    pub ft_config: Option<String>,
    pub fwi_config: Option<String>,
}

/// A parsed configuration together with non-fatal diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Parsed {
    pub config: Config,
    pub warnings: Vec<String>,
}

const MANDATORY: [&str; 17] = [
    "nx", "ny", "nz", "dx", "dy", "dz", "border", "ox", "oy", "oz", "ns", "dt", "fpeak",
    "amplitude", "n_src", "proj_dir", "vel",
];

const OPTIONAL: [&str; 19] = [
    "density",
    "stencil",
    "boundary_type",
    "lbfgsb",
    "lbfgsb_lower_bound",
    "lbfgsb_upper_bound",
    "n_iter",
    "max_viter",
    "gradient_preconditioning_mode",
    "bessel_filter_lx",
    "bessel_filter_ly",
    "bessel_filter_lz",
    "zeroes_nplanes_gradient",
    "check_mem",
    "chk_verb",
    "ws_flag",
    "mem_budget_bytes",
    "ft_config",
    "fwi_config",
];

struct Entries<'a> {
    map: HashMap<&'a str, (&'a str, usize)>,
}

impl<'a> Entries<'a> {
    fn raw(&self, key: &str) -> Option<(&'a str, usize)> {
        self.map.get(key).copied()
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some((value, line)) => value.parse::<T>().map(Some).map_err(|_| {
                ConfigError::InvalidValue {
                    key: key.to_string(),
                    value: value.to_string(),
                    line,
                }
            }),
        }
    }

    fn required<T: FromStr>(&self, key: &str) -> Result<T, ConfigError> {
        // presence is checked up front
        Ok(self.get(key)?.expect("mandatory key checked"))
    }

    fn flag(&self, key: &str) -> Result<Option<bool>, ConfigError> {
        match self.get::<u8>(key)? {
            None => Ok(None),
            Some(0) => Ok(Some(false)),
            Some(1) => Ok(Some(true)),
            Some(_) => Err(self.invalid(key)),
        }
    }

    fn invalid(&self, key: &str) -> ConfigError {
        let (value, line) = self.raw(key).unwrap_or(("", 0));
        ConfigError::InvalidValue {
            key: key.to_string(),
            value: value.to_string(),
            line,
        }
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find("//") {
        Some(pos) => &line[..pos],
        None => line,
    }
}

/// Parses parameter-file text, filling defaults for unset optional keys.
pub fn parse_config(text: &str) -> Result<Parsed, ConfigError> {
    let mut map: HashMap<&str, (&str, usize)> = HashMap::new();
    let mut warnings = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with('[') {
            continue;
        }
        let line = strip_comment(trimmed).trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or(ConfigError::Malformed { line: line_no })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.contains('=') {
            return Err(ConfigError::Malformed { line: line_no });
        }
        if map.insert(key, (value, line_no)).is_some() {
            return Err(ConfigError::DuplicateKey {
                key: key.to_string(),
                line: line_no,
            });
        }
        if !MANDATORY.contains(&key) && !OPTIONAL.contains(&key) {
            warnings.push(format!("line {line_no}: unknown key `{key}` ignored"));
        }
    }

    let missing: Vec<&'static str> = MANDATORY
        .iter()
        .copied()
        .filter(|k| !map.contains_key(k))
        .collect();
    if !missing.is_empty() {
        return Err(ConfigError::MissingKeys(missing));
    }

    let e = Entries { map };
    let dx: f64 = e.required("dx")?;
    let dy: f64 = e.required("dy")?;
    let dz: f64 = e.required("dz")?;

    let lbfgsb = match e.get::<u8>("lbfgsb")? {
        None => BoundMode::default(),
        Some(code) => BoundMode::from_code(code).ok_or_else(|| e.invalid("lbfgsb"))?,
    };
    let gradient_preconditioning_mode = match e.get::<u8>("gradient_preconditioning_mode")? {
        None => Preconditioning::default(),
        Some(code) => Preconditioning::from_code(code)
            .ok_or_else(|| e.invalid("gradient_preconditioning_mode"))?,
    };
    let boundary = match e.raw("boundary_type") {
        None => BoundaryKind::default(),
        Some((v, _)) => v.parse().map_err(|_| e.invalid("boundary_type"))?,
    };

    let ft_config: Option<String> = e.get("ft_config")?;
    let fwi_config: Option<String> = e.get("fwi_config")?;
    for (key, present) in [("ft_config", ft_config.is_some()), ("fwi_config", fwi_config.is_some())] {
        if present {
            warnings.push(format!("`{key}` is stored but fault tolerance is not supported"));
        }
    }

    let config = Config {
        nx: e.required("nx")?,
        ny: e.required("ny")?,
        nz: e.required("nz")?,
        dx,
        dy,
        dz,
        ox: e.required("ox")?,
        oy: e.required("oy")?,
        oz: e.required("oz")?,
        border: e.required("border")?,
        ns: e.required("ns")?,
        dt: e.required("dt")?,
        fpeak: e.required("fpeak")?,
        amplitude: e.required("amplitude")?,
        n_src: e.required("n_src")?,
        proj_dir: PathBuf::from(e.required::<String>("proj_dir")?),
        vel: e.required("vel")?,
        density: e.get("density")?,
        stencil: e.get("stencil")?.unwrap_or(4),
        boundary,
        lbfgsb,
        lbfgsb_lower_bound: e.get("lbfgsb_lower_bound")?,
        lbfgsb_upper_bound: e.get("lbfgsb_upper_bound")?,
        n_iter: e.get("n_iter")?.unwrap_or(999),
        max_viter: e.get("max_viter")?.unwrap_or(100),
        gradient_preconditioning_mode,
        bessel_filter_lx: e.get("bessel_filter_lx")?.unwrap_or(2.0 * dx),
        bessel_filter_ly: e.get("bessel_filter_ly")?.unwrap_or(2.0 * dy),
        bessel_filter_lz: e.get("bessel_filter_lz")?.unwrap_or(2.0 * dz),
        zeroes_nplanes_gradient: e.get("zeroes_nplanes_gradient")?.unwrap_or(0),
        check_mem: e.get("check_mem")?.unwrap_or(0.8),
        chk_verb: e.flag("chk_verb")?.unwrap_or(false),
        ws_flag: e.flag("ws_flag")?.unwrap_or(false),
        mem_budget_bytes: e.get("mem_budget_bytes")?.unwrap_or(DEFAULT_MEM_BUDGET_BYTES),
        ft_config,
        fwi_config,
    };
    Ok(Parsed { config, warnings })
}

/// Reads and parses a parameter file.
pub fn load_config(path: &Path) -> crate::Result<Parsed> {
    let text = std::fs::read_to_string(path).map_err(|err| crate::Error::io(path, err))?;
    Ok(parse_config(&text)?)
}

/// Constraint violations found by [`Config::validate`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.violations.join("; "))
    }
}

impl Config {
    pub fn validate(&self) -> ValidationReport {
        let mut v = Vec::new();
        if !(1..=8).contains(&self.stencil) {
            v.push(format!("stencil must be in 1..=8, got {}", self.stencil));
        }
        let min_points = 2 * self.stencil + 1;
        for (name, n) in [("nx", self.nx), ("ny", self.ny), ("nz", self.nz)] {
            if n < min_points {
                v.push(format!("{name} must be at least 2*stencil+1 = {min_points}, got {n}"));
            }
        }
        for (name, d) in [("dx", self.dx), ("dy", self.dy), ("dz", self.dz)] {
            if !(d > 0.0 && d.is_finite()) {
                v.push(format!("{name} must be positive, got {d}"));
            }
        }
        for (name, o) in [("ox", self.ox), ("oy", self.oy), ("oz", self.oz)] {
            if !o.is_finite() {
                v.push(format!("{name} must be finite"));
            }
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            v.push(format!("dt must be positive, got {}", self.dt));
        }
        if self.ns < 1 {
            v.push("ns must be at least 1".to_string());
        }
        if self.n_src < 1 {
            v.push("n_src must be at least 1".to_string());
        }
        if !(self.fpeak > 0.0 && self.fpeak.is_finite()) {
            v.push(format!("fpeak must be positive, got {}", self.fpeak));
        }
        if !self.amplitude.is_finite() {
            v.push("amplitude must be finite".to_string());
        }
        if self.lbfgsb.has_lower() && self.lbfgsb_lower_bound.is_none() {
            v.push("lower bound required: lbfgsb_lower_bound must be set".to_string());
        }
        if self.lbfgsb.has_upper() && self.lbfgsb_upper_bound.is_none() {
            v.push("upper bound required: lbfgsb_upper_bound must be set".to_string());
        }
        if let (BoundMode::LowerUpper, Some(lo), Some(hi)) =
            (self.lbfgsb, self.lbfgsb_lower_bound, self.lbfgsb_upper_bound)
        {
            if lo >= hi {
                v.push(format!("lbfgsb_lower_bound ({lo}) must be below lbfgsb_upper_bound ({hi})"));
            }
        }
        if !(self.check_mem > 0.0 && self.check_mem <= 1.0) {
            v.push(format!("check_mem must lie in (0,1], got {}", self.check_mem));
        }
        for (name, l) in [
            ("bessel_filter_lx", self.bessel_filter_lx),
            ("bessel_filter_ly", self.bessel_filter_ly),
            ("bessel_filter_lz", self.bessel_filter_lz),
        ] {
            if !(l >= 0.0 && l.is_finite()) {
                v.push(format!("{name} must be nonnegative, got {l}"));
            }
        }
        if self.zeroes_nplanes_gradient > self.nz {
            v.push(format!(
                "zeroes_nplanes_gradient ({}) exceeds nz ({})",
                self.zeroes_nplanes_gradient, self.nz
            ));
        }
        if self.mem_budget_bytes == 0 {
            v.push("mem_budget_bytes must be positive".to_string());
        }
        ValidationReport { violations: v }
    }

    /// Serializes every field back to parameter-file text.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: &dyn fmt::Display| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("nx", &self.nx);
        put("ny", &self.ny);
        put("nz", &self.nz);
        put("dx", &self.dx);
        put("dy", &self.dy);
        put("dz", &self.dz);
        put("ox", &self.ox);
        put("oy", &self.oy);
        put("oz", &self.oz);
        put("border", &self.border);
        put("ns", &self.ns);
        put("dt", &self.dt);
        put("fpeak", &self.fpeak);
        put("amplitude", &self.amplitude);
        put("n_src", &self.n_src);
        put("proj_dir", &self.proj_dir.display());
        put("vel", &self.vel);
        if let Some(d) = &self.density {
            put("density", d);
        }
        put("stencil", &self.stencil);
        put("boundary_type", &self.boundary);
        put("lbfgsb", &self.lbfgsb.code());
        if let Some(lo) = self.lbfgsb_lower_bound {
            put("lbfgsb_lower_bound", &lo);
        }
        if let Some(hi) = self.lbfgsb_upper_bound {
            put("lbfgsb_upper_bound", &hi);
        }
        put("n_iter", &self.n_iter);
        put("max_viter", &self.max_viter);
        put("gradient_preconditioning_mode", &self.gradient_preconditioning_mode.code());
        put("bessel_filter_lx", &self.bessel_filter_lx);
        put("bessel_filter_ly", &self.bessel_filter_ly);
        put("bessel_filter_lz", &self.bessel_filter_lz);
        put("zeroes_nplanes_gradient", &self.zeroes_nplanes_gradient);
        put("check_mem", &self.check_mem);
        put("chk_verb", &u8::from(self.chk_verb));
        put("ws_flag", &u8::from(self.ws_flag));
        put("mem_budget_bytes", &self.mem_budget_bytes);
        if let Some(p) = &self.ft_config {
            put("ft_config", p);
        }
        if let Some(p) = &self.fwi_config {
            put("fwi_config", p);
        }
        s
    }

    /// Resolves a file name against `proj_dir`.
    pub fn project_path(&self, name: &str) -> PathBuf {
        self.proj_dir.join(name)
    }
}
