//! Run configuration: a flat key=value format with problem presets.
//!
//! A config file consists of `key = value` lines (# comments allowed);
//! the `problem` key selects a preset whose defaults the remaining keys
//! override. The same overrides are accepted on the command line via
//! `--set key=value`.

use anyhow::{anyhow, bail, Context, Result};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Problem {
    Relaxation,
    Riemann,
    Landau,
    ChuRiemann,
    ChuLandau,
}

impl Problem {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "relaxation" => Problem::Relaxation,
            "riemann" => Problem::Riemann,
            "landau" => Problem::Landau,
            "chu-riemann" => Problem::ChuRiemann,
            "chu-landau" => Problem::ChuLandau,
            other => bail!("unknown problem '{other}'"),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Problem::Relaxation => "relaxation",
            Problem::Riemann => "riemann",
            Problem::Landau => "landau",
            Problem::ChuRiemann => "chu-riemann",
            Problem::ChuLandau => "chu-landau",
        }
    }

    pub fn is_chu(&self) -> bool {
        matches!(self, Problem::ChuRiemann | Problem::ChuLandau)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    Full,
    Sparse,
    Mixed,
    Adaptive,
}

impl GridKind {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "full" => GridKind::Full,
            "sparse" => GridKind::Sparse,
            "mixed" => GridKind::Mixed,
            "adaptive" => GridKind::Adaptive,
            other => bail!("unknown grid kind '{other}'"),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            GridKind::Full => "full",
            GridKind::Sparse => "sparse",
            GridKind::Mixed => "mixed",
            GridKind::Adaptive => "adaptive",
        }
    }
}

/// Complete description of one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub problem: Problem,
    pub grid: GridKind,
    pub level_x: usize,
    pub level_v: usize,
    /// Adaptive refinement caps (defaults to the run levels).
    pub cap_x: usize,
    pub cap_v: usize,
    pub k: usize,
    pub nu: f64,
    /// Time step; 0 selects the preset's derived value.
    pub dt: f64,
    pub t_final: f64,
    pub tau: f64,
    pub mu: f64,
    pub gmres_tol: f64,
    pub gmres_restart: usize,
    pub gmres_maxiter: usize,
    pub gmres_precond: bool,
    pub output_dir: String,
    /// Snapshot cadence in steps (0 = final state only).
    pub snapshot_every: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub v_min: f64,
    pub v_max: f64,
    /// Riemann discontinuity location.
    pub s_initial: f64,
    /// Landau perturbation amplitude.
    pub perturbation: f64,
}

impl RunConfig {
    /// Preset defaults for a problem.
    pub fn preset(problem: Problem) -> RunConfig {
        let base = RunConfig {
            problem,
            grid: GridKind::Full,
            level_x: 4,
            level_v: 3,
            cap_x: 4,
            cap_v: 3,
            k: 2,
            nu: 1.0,
            dt: 0.0,
            t_final: 0.0,
            tau: 1e-4,
            mu: 0.1,
            gmres_tol: 1e-8,
            gmres_restart: 100,
            gmres_maxiter: 100_000,
            gmres_precond: false,
            output_dir: "out".into(),
            snapshot_every: 0,
            x_min: 0.0,
            x_max: 0.0,
            v_min: -6.0,
            v_max: 6.0,
            s_initial: 0.0,
            perturbation: 0.0,
        };
        match problem {
            Problem::Relaxation => RunConfig {
                nu: 1e3,
                dt: 5e-4,
                t_final: 0.02,
                v_min: -8.0,
                v_max: 12.0,
                level_v: 3,
                cap_v: 3,
                ..base
            },
            Problem::Riemann => RunConfig {
                nu: 1.0,
                dt: 2.3419e-4,
                t_final: 0.04918,
                x_min: -0.6,
                x_max: 0.6,
                s_initial: 0.3,
                level_x: 5,
                level_v: 4,
                cap_x: 5,
                cap_v: 4,
                ..base
            },
            Problem::Landau => RunConfig {
                nu: 1e-2,
                t_final: 50.0,
                x_min: -2.0 * std::f64::consts::PI,
                x_max: 2.0 * std::f64::consts::PI,
                perturbation: 1e-4,
                level_x: 4,
                level_v: 4,
                cap_x: 4,
                cap_v: 4,
                gmres_tol: 1e-14,
                ..base
            },
            Problem::ChuRiemann => RunConfig {
                nu: 1e3,
                dt: 2e-4,
                t_final: 0.05,
                x_min: -0.25,
                x_max: 0.25,
                s_initial: 9.0 / 64.0,
                level_x: 6,
                level_v: 5,
                cap_x: 6,
                cap_v: 5,
                ..base
            },
            Problem::ChuLandau => RunConfig {
                nu: 1e-2,
                t_final: 50.0,
                x_min: -2.0 * std::f64::consts::PI,
                x_max: 2.0 * std::f64::consts::PI,
                perturbation: 1e-4,
                level_x: 5,
                level_v: 6,
                cap_x: 5,
                cap_v: 6,
                gmres_tol: 1e-12,
                ..base
            },
        }
    }

    /// The time step, deriving the CFL-based Landau value when unset:
    /// `dt = (0.75 / (5 v_max)) dx`.
    pub fn effective_dt(&self) -> f64 {
        if self.dt > 0.0 {
            self.dt
        } else {
            let dx = (self.x_max - self.x_min) / (1usize << self.level_x) as f64;
            0.75 / (5.0 * self.v_max.abs()) * dx
        }
    }

    /// Apply one `key=value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let parse_f = || -> Result<f64> {
            value.parse::<f64>().with_context(|| format!("bad float for {key}: '{value}'"))
        };
        let parse_u = || -> Result<usize> {
            value.parse::<usize>().with_context(|| format!("bad integer for {key}: '{value}'"))
        };
        let parse_b = || -> Result<bool> {
            value.parse::<bool>().with_context(|| format!("bad bool for {key}: '{value}'"))
        };
        match key {
            "problem" => bail!("'problem' must be set before other keys and cannot be overridden"),
            "grid" => self.grid = GridKind::parse(value)?,
            "level.x" => self.level_x = parse_u()?,
            "level.v" => self.level_v = parse_u()?,
            "cap.x" => self.cap_x = parse_u()?,
            "cap.v" => self.cap_v = parse_u()?,
            "k" => self.k = parse_u()?,
            "nu" => self.nu = parse_f()?,
            "dt" => self.dt = parse_f()?,
            "t.final" => self.t_final = parse_f()?,
            "tau" => self.tau = parse_f()?,
            "mu" => self.mu = parse_f()?,
            "gmres.tol" => self.gmres_tol = parse_f()?,
            "gmres.restart" => self.gmres_restart = parse_u()?,
            "gmres.maxiter" => self.gmres_maxiter = parse_u()?,
            "gmres.precond" => self.gmres_precond = parse_b()?,
            "output.dir" => self.output_dir = value.to_string(),
            "snapshot.every" => self.snapshot_every = parse_u()?,
            "x.min" => self.x_min = parse_f()?,
            "x.max" => self.x_max = parse_f()?,
            "v.min" => self.v_min = parse_f()?,
            "v.max" => self.v_max = parse_f()?,
            "s.initial" => self.s_initial = parse_f()?,
            "perturbation" => self.perturbation = parse_f()?,
            other => bail!("unknown configuration key '{other}'"),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.k > 3 {
            bail!("polynomial degree k={} unsupported (0..=3)", self.k);
        }
        if self.t_final <= 0.0 {
            bail!("t.final must be positive");
        }
        if self.effective_dt() <= 0.0 {
            bail!("dt must be positive");
        }
        if self.grid == GridKind::Adaptive && !(self.tau > 0.0 && self.mu > 0.0 && self.mu < 1.0) {
            bail!("adaptive runs need tau > 0 and 0 < mu < 1");
        }
        if self.problem != Problem::Relaxation && self.x_max <= self.x_min {
            bail!("empty spatial domain");
        }
        if self.v_max <= self.v_min {
            bail!("empty velocity domain");
        }
        if self.cap_x < self.level_x || self.cap_v < self.level_v {
            bail!("caps must not be below the run levels");
        }
        Ok(())
    }

    /// Serialize every key (used for the run manifest; parseable by
    /// [`RunConfig::from_text`] modulo the problem line).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut kv: BTreeMap<&str, String> = BTreeMap::new();
        kv.insert("grid", self.grid.name().into());
        kv.insert("level.x", self.level_x.to_string());
        kv.insert("level.v", self.level_v.to_string());
        kv.insert("cap.x", self.cap_x.to_string());
        kv.insert("cap.v", self.cap_v.to_string());
        kv.insert("k", self.k.to_string());
        kv.insert("nu", format!("{:.17e}", self.nu));
        kv.insert("dt", format!("{:.17e}", self.effective_dt()));
        kv.insert("t.final", format!("{:.17e}", self.t_final));
        kv.insert("tau", format!("{:.17e}", self.tau));
        kv.insert("mu", format!("{:.17e}", self.mu));
        kv.insert("gmres.tol", format!("{:.17e}", self.gmres_tol));
        kv.insert("gmres.restart", self.gmres_restart.to_string());
        kv.insert("gmres.maxiter", self.gmres_maxiter.to_string());
        kv.insert("gmres.precond", self.gmres_precond.to_string());
        kv.insert("snapshot.every", self.snapshot_every.to_string());
        kv.insert("x.min", format!("{:.17e}", self.x_min));
        kv.insert("x.max", format!("{:.17e}", self.x_max));
        kv.insert("v.min", format!("{:.17e}", self.v_min));
        kv.insert("v.max", format!("{:.17e}", self.v_max));
        kv.insert("s.initial", format!("{:.17e}", self.s_initial));
        kv.insert("perturbation", format!("{:.17e}", self.perturbation));
        out.push_str(&format!("problem = {}\n", self.problem.name()));
        for (k, v) in kv {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }

    /// Parse a config text: the `problem` line selects the preset, the
    /// remaining lines override it.
    pub fn from_text(text: &str) -> Result<RunConfig> {
        let mut problem = None;
        let mut overrides = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key = value", lineno + 1))?;
            let (key, value) = (key.trim(), value.trim());
            if key == "problem" {
                if problem.is_some() {
                    bail!("line {}: duplicate problem key", lineno + 1);
                }
                problem = Some(Problem::parse(value)?);
            } else {
                overrides.push((key.to_string(), value.to_string()));
            }
        }
        let problem = problem.ok_or_else(|| anyhow!("config must set 'problem'"))?;
        let mut cfg = RunConfig::preset(problem);
        for (k, v) in overrides {
            cfg.set(&k, &v)?;
        }
        // keep caps at least at the run levels unless set explicitly
        cfg.cap_x = cfg.cap_x.max(cfg.level_x);
        cfg.cap_v = cfg.cap_v.max(cfg.level_v);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::from_text(&text)
    }
}
