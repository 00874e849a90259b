//! Plain-text `key = value` run configuration. Unknown keys are rejected;
//! command-line `--set key=value` overrides win over the file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use torevac::boundary_data::Conductivity;
use torevac::geometry::{Circle, ClosedCurve, Point};

use crate::CliError;

const KNOWN_KEYS: &[&str] = &[
    "geometry.center_r",
    "geometry.center_z",
    "geometry.rho_outer",
    "geometry.rho_inner",
    "sigma",
    "mesh.h",
    "mesh.file",
    "neumann.convention",
    "opt.criterion",
    "opt.c",
    "opt.eps_rel",
    "opt.max_iters",
    "opt.t0",
    "opt.beta",
    "opt.smooth_every",
    "opt.remesh_min_angle",
    "opt.remesh_edge_ratio",
    "opt.initial",
    "opt.snapshot_every",
    "bep.degree",
    "bep.i1",
    "bep.i2",
    "bep.bound",
    "bep.points",
    "bep.quad_points",
    "synth.truth",
    "synth.u0",
    "synth.c",
    "synth.samples",
    "synth.noise",
    "synth.seed",
    "recover.c1",
    "limiter",
    "paths.measurements",
    "paths.out",
];

#[derive(Debug, Clone, Default)]
pub struct Config {
    map: BTreeMap<String, String>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = Config::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!(
                    "line {}: expected 'key = value', got '{line}'",
                    idx + 1
                ))
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        if !KNOWN_KEYS.contains(&key) {
            return Err(CliError::Config(format!("unknown configuration key '{key}'")));
        }
        self.map.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn apply_set_flags(&mut self, sets: &[String]) -> Result<(), CliError> {
        for s in sets {
            let (key, value) = s
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("--set needs key=value, got '{s}'")))?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|s| s.as_str())
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, CliError> {
        match self.get(key) {
            None => Ok(default),
            Some(raw) => raw
                .parse()
                .map_err(|_| CliError::Config(format!("{key}: cannot parse number '{raw}'"))),
        }
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize, CliError> {
        match self.get(key) {
            None => Ok(default),
            Some(raw) => raw
                .parse()
                .map_err(|_| CliError::Config(format!("{key}: cannot parse integer '{raw}'"))),
        }
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64, CliError> {
        match self.get(key) {
            None => Ok(default),
            Some(raw) => raw
                .parse()
                .map_err(|_| CliError::Config(format!("{key}: cannot parse integer '{raw}'"))),
        }
    }

    pub fn path(&self, key: &str) -> Result<PathBuf, CliError> {
        self.get(key)
            .map(PathBuf::from)
            .ok_or_else(|| CliError::Config(format!("missing required key '{key}'")))
    }

    pub fn out_dir(&self) -> PathBuf {
        self.get("paths.out").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn wall(&self) -> Result<Circle, CliError> {
        let cx = self.f64_or("geometry.center_r", 2.42)?;
        let cy = self.f64_or("geometry.center_z", 0.0)?;
        let rho = self.f64_or("geometry.rho_outer", 0.92)?;
        if rho <= 0.0 {
            return Err(CliError::Config(format!(
                "geometry.rho_outer must be positive, got {rho}"
            )));
        }
        Ok(Circle::new(Point::new(cx, cy), rho))
    }

    pub fn sigma(&self) -> Result<Conductivity, CliError> {
        let wall = self.wall()?;
        match self.get("sigma").unwrap_or("inverse_r") {
            "inverse_r" => {
                let r_min = wall.center.x - wall.radius;
                let r_max = wall.center.x + wall.radius;
                if r_min <= 0.0 {
                    return Err(CliError::Config(format!(
                        "sigma = inverse_r needs the wall to stay at r > 0 (r_min = {r_min})"
                    )));
                }
                Ok(Conductivity::inverse_r(r_min, r_max))
            }
            spec => match spec.strip_prefix("const:") {
                Some(v) => {
                    let value: f64 = v.parse().map_err(|_| {
                        CliError::Config(format!("sigma: cannot parse constant '{v}'"))
                    })?;
                    if value <= 0.0 {
                        return Err(CliError::Config(format!(
                            "sigma constant must be positive, got {value}"
                        )));
                    }
                    Ok(Conductivity::constant(value))
                }
                None => Err(CliError::Config(format!(
                    "sigma: expected 'inverse_r' or 'const:<v>', got '{spec}'"
                ))),
            },
        }
    }

    /// Curve specification: `circle:<r>`, `star:<r0>:<amp>:<k>` (both
    /// centered on the wall axis) or `file:<path>`.
    pub fn curve(&self, key: &str, default: Option<&str>) -> Result<ClosedCurve, CliError> {
        let spec = match (self.get(key), default) {
            (Some(s), _) => s.to_string(),
            (None, Some(d)) => d.to_string(),
            (None, None) => return Err(CliError::Config(format!("missing required key '{key}'"))),
        };
        let wall = self.wall()?;
        let n = 160;
        if let Some(r) = spec.strip_prefix("circle:") {
            let r: f64 = r
                .parse()
                .map_err(|_| CliError::Config(format!("{key}: bad radius in '{spec}'")))?;
            return ClosedCurve::circle(Circle::new(wall.center, r), n)
                .map_err(|e| CliError::Config(format!("{key}: {e}")));
        }
        if let Some(rest) = spec.strip_prefix("star:") {
            let parts: Vec<&str> = rest.split(':').collect();
            if parts.len() != 3 {
                return Err(CliError::Config(format!(
                    "{key}: expected star:<r0>:<amp>:<k>, got '{spec}'"
                )));
            }
            let r0: f64 = parts[0]
                .parse()
                .map_err(|_| CliError::Config(format!("{key}: bad r0 in '{spec}'")))?;
            let amp: f64 = parts[1]
                .parse()
                .map_err(|_| CliError::Config(format!("{key}: bad amplitude in '{spec}'")))?;
            let k: u32 = parts[2]
                .parse()
                .map_err(|_| CliError::Config(format!("{key}: bad lobe count in '{spec}'")))?;
            return ClosedCurve::star(wall.center, r0, amp, k, n)
                .map_err(|e| CliError::Config(format!("{key}: {e}")));
        }
        if let Some(path) = spec.strip_prefix("file:") {
            return torevac::report::load_curve(Path::new(path)).map_err(CliError::from);
        }
        Err(CliError::Config(format!(
            "{key}: expected circle:<r>, star:<r0>:<amp>:<k> or file:<path>, got '{spec}'"
        )))
    }
}
