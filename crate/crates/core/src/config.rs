//! Flat `key = value` configuration files.

use std::collections::BTreeMap;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::initial::InitialField;
use crate::solver::{Coupling, SimConfig};

/// Documentation of one configuration key.
#[derive(Debug, Clone, Copy)]
pub struct KeySpec {
    pub name: &'static str,
    pub units: &'static str,
    pub default: &'static str,
    pub help: &'static str,
}

pub const KEYS: &[KeySpec] = &[
    KeySpec { name: "n", units: "-", default: "128", help: "grid points per side (power of two, >= 16)" },
    KeySpec { name: "box_len", units: "length", default: "1.0", help: "side length L of the periodic box" },
    KeySpec { name: "dealias", units: "-", default: "0.6666666666666666", help: "retained fraction of modes per direction" },
    KeySpec { name: "nu", units: "length^2/time", default: "0.001", help: "kinematic viscosity" },
    KeySpec { name: "disc_radius", units: "length", default: "0", help: "disc radius r (0 disables the body)" },
    KeySpec { name: "rho", units: "-", default: "1", help: "body density relative to the fluid (must be 1)" },
    KeySpec { name: "eta_penal", units: "time", default: "auto", help: "penalization time scale; auto = 1e-3 L / max|u0|" },
    KeySpec { name: "dt", units: "time", default: "auto", help: "time step; auto = min(0.5 eta, 0.4 dx / max|u0|)" },
    KeySpec { name: "t_end", units: "time", default: "auto", help: "horizon; auto = 1 / [(1 + |u0|^4)(1 + |u0|_H1^2)^2]" },
    KeySpec { name: "mask_width", units: "length", default: "auto", help: "half-width of the indicator ramp; auto = 2 cells" },
    KeySpec {
        name: "ic",
        units: "-",
        default: "zero",
        help: "initial field: zero | uniform(ux, uy) | taylor_green[(A)] | lamb_oseen(G, core, cx, cy) | rigidified(<field>, R)",
    },
    KeySpec { name: "h0", units: "length", default: "0, 0", help: "initial disc centre (also the tracer start)" },
    KeySpec { name: "hdot0", units: "length/time", default: "auto", help: "initial disc velocity; auto = fluid velocity at h0" },
    KeySpec { name: "coupling", units: "-", default: "rk2", help: "body update: rk2 | semi_implicit" },
    KeySpec { name: "snapshot_stride", units: "steps", default: "0", help: "write an FDS1 snapshot every this many steps (0 = never)" },
    KeySpec { name: "radii", units: "length", default: "", help: "comma-separated decreasing disc radii for sweeps" },
    KeySpec { name: "exclusion_s", units: "length", default: "auto", help: "radius s of the excluded region; auto = 2 max(radii)" },
    KeySpec { name: "samples", units: "-", default: "40", help: "number of time samples for the velocity error integral" },
    KeySpec { name: "control_runs", units: "-", default: "true", help: "run a halved-eta control per radius to estimate the floor" },
    KeySpec { name: "report_path", units: "path", default: "report", help: "output prefix for study reports, relative to the output directory" },
];

pub fn key_spec(name: &str) -> Option<&'static KeySpec> {
    KEYS.iter().find(|k| k.name == name)
}

/// Parsed configuration: explicitly set values over documented defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigMap {
    values: BTreeMap<String, String>,
}

impl ConfigMap {
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            let k = k.trim();
            if map.values.contains_key(k) {
                return Err(Error::Config(format!("line {}: duplicate key `{k}`", lineno + 1)));
            }
            map.set(k, v.trim())?;
        }
        Ok(map)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if key_spec(key).is_none() {
            return Err(Error::UnknownKey(key.to_string()));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Apply a `key=value` override.
    pub fn apply_override(&mut self, kv: &str) -> Result<()> {
        let (k, v) = kv.split_once('=').ok_or_else(|| Error::Config(format!("override `{kv}` is not key=value")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn get(&self, key: &str) -> &str {
        match self.values.get(key) {
            Some(v) => v,
            None => key_spec(key).map(|k| k.default).unwrap_or(""),
        }
    }

    /// All keys with effective values, one `key = value` per line, sorted.
    pub fn canonical(&self) -> String {
        let mut names: Vec<&str> = KEYS.iter().map(|k| k.name).collect();
        names.sort_unstable();
        names.iter().map(|k| format!("{k} = {}\n", self.get(k))).collect()
    }

    /// SHA-256 of the canonical form, hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        parse_f64(key, self.get(key))
    }

    pub fn auto_f64(&self, key: &str) -> Result<Option<f64>> {
        match self.get(key) {
            "auto" => Ok(None),
            v => parse_f64(key, v).map(Some),
        }
    }

    pub fn pair(&self, key: &str) -> Result<[f64; 2]> {
        let v = parse_list(key, self.get(key))?;
        if v.len() != 2 {
            return Err(Error::Config(format!("`{key}` needs two values")));
        }
        Ok([v[0], v[1]])
    }

    pub fn list(&self, key: &str) -> Result<Vec<f64>> {
        parse_list(key, self.get(key))
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        self.get(key).parse().map_err(|_| Error::Config(format!("`{key}` must be a non-negative integer, got `{}`", self.get(key))))
    }

    pub fn bool(&self, key: &str) -> Result<bool> {
        match self.get(key) {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            v => Err(Error::Config(format!("`{key}` must be true or false, got `{v}`"))),
        }
    }

    pub fn sim_config(&self) -> Result<SimConfig> {
        let grid = GridSpec::with_dealias(self.usize("n")?, self.f64("box_len")?, self.f64("dealias")?)?;
        let coupling = match self.get("coupling") {
            "rk2" => Coupling::Rk2,
            "semi_implicit" => Coupling::SemiImplicit,
            v => return Err(Error::Config(format!("`coupling` must be rk2 or semi_implicit, got `{v}`"))),
        };
        let hdot0 = match self.get("hdot0") {
            "auto" => None,
            _ => Some(self.pair("hdot0")?),
        };
        Ok(SimConfig {
            grid,
            nu: self.f64("nu")?,
            disc_radius: self.f64("disc_radius")?,
            rho: self.f64("rho")?,
            eta_penal: self.auto_f64("eta_penal")?,
            dt: self.auto_f64("dt")?,
            t_end: self.auto_f64("t_end")?,
            mask_width: self.auto_f64("mask_width")?,
            ic: InitialField::parse(self.get("ic"))?,
            h0: self.pair("h0")?,
            hdot0,
            coupling,
            snapshot_stride: self.usize("snapshot_stride")?,
        })
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.trim().parse::<f64>().map_err(|_| Error::Config(format!("`{key}` must be a number, got `{v}`")))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|s| parse_f64(key, s)).collect()
}
