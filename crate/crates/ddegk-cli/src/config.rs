//! Layered `key = value` configuration: built-in defaults, then an optional
//! file, then `--set` overrides. The resolved map is what the manifest echoes.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use ddegk::cases::{self, Case, InitSource};
use ddegk::dde::{settle_and_snip, DdeModel, HopfOptions, Nonlinearity, SettleOptions};
use ddegk::hjb::{Boundary, GridSpec};
use ddegk::pmp::PmpOptions;
use ddegk::{Exec, HistorySegment};

use crate::Failure;

const DEFAULTS: &[(&str, &str)] = &[
    ("case", "wright6"),
    ("cost.T", "4"),
    ("cost.mu", "0.5"),
    ("dde.h", "auto"),
    ("diagnose.m_ref", "auto"),
    ("diagnose.n", "6"),
    ("diagnose.ns", "2,6,12"),
    ("diagnose.stride", "10"),
    ("exec", "parallel"),
    ("history.source", "printed"),
    ("history.value", "0"),
    ("hjb.boundary", "second-order"),
    ("hjb.dt", "auto"),
    ("hjb.h", "auto"),
    ("hjb.hi", "auto"),
    ("hjb.lo", "auto"),
    ("hjb.nu", "auto"),
    ("hjb.ode_step", "0.01"),
    ("hjb.stride", "auto"),
    ("hopf.init", "0.05"),
    ("hopf.steps_per_tau", "200"),
    ("hopf.t_total", "1000"),
    ("hopf.taus", "1.4,1.5,1.58,1.7,2"),
    ("model.a", "0"),
    ("model.b", "-1"),
    ("model.c", "0"),
    ("model.f", "wright"),
    ("model.q", "0,-1,0,0,0,0"),
    ("model.tau", "1.58"),
    ("pmp.max_newton", "40"),
    ("pmp.mesh", "200"),
    ("pmp.mu_start", "5"),
    ("pmp.tol", "1e-8"),
    ("reduce.n", "6"),
    ("reduce.project", "false"),
    ("settle.init", "0.05"),
    ("settle.max_time", "5000"),
    ("settle.tol", "1e-6"),
    ("simulate.control", "none"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    map: BTreeMap<String, String>,
}

fn config_err(msg: impl Into<String>) -> Failure {
    Failure::Config(msg.into())
}

/// Lines of `key = value`; blank lines and `#` comments are skipped.
fn parse_lines(text: &str, origin: &str) -> Result<Vec<(String, String)>, Failure> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(config_err(format!(
                "{origin}:{}: expected key = value",
                i + 1
            )));
        };
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

impl Config {
    pub fn defaults() -> Self {
        Self {
            map: DEFAULTS
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), Failure> {
        // `out` is recorded but never validated as a numeric key.
        if key != "out" && !self.map.contains_key(key) {
            return Err(config_err(format!("unknown key '{key}'")));
        }
        self.map.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn merge_file(&mut self, path: &Path) -> Result<(), Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
        for (k, v) in parse_lines(&text, &path.display().to_string())? {
            self.set(&k, &v)?;
        }
        Ok(())
    }

    pub fn merge_override(&mut self, kv: &str) -> Result<(), Failure> {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| config_err(format!("--set expects key=value, got '{kv}'")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn raw(&self, key: &str) -> &str {
        self.map.get(key).map(String::as_str).unwrap_or("")
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T, Failure> {
        self.raw(key)
            .parse()
            .map_err(|_| config_err(format!("{key} = '{}' is not valid", self.raw(key))))
    }

    pub fn float(&self, key: &str) -> Result<f64, Failure> {
        let v: f64 = self.get(key)?;
        if !v.is_finite() {
            return Err(config_err(format!("{key} must be finite")));
        }
        Ok(v)
    }

    pub fn floats(&self, key: &str) -> Result<Vec<f64>, Failure> {
        self.raw(key)
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| config_err(format!("{key}: '{s}' is not a finite number")))
            })
            .collect()
    }

    fn pair(&self, key: &str) -> Result<[f64; 2], Failure> {
        match self.floats(key)?.as_slice() {
            [a] => Ok([*a, *a]),
            [a, b] => Ok([*a, *b]),
            _ => Err(config_err(format!("{key} takes one or two values"))),
        }
    }

    pub fn case(&self) -> Result<Case, Failure> {
        self.raw("case").parse().map_err(Failure::Config)
    }

    pub fn exec(&self) -> Result<Exec, Failure> {
        self.raw("exec").parse().map_err(Failure::Config)
    }

    pub fn mu(&self) -> Result<f64, Failure> {
        self.float("cost.mu")
    }

    pub fn horizon(&self) -> Result<f64, Failure> {
        self.float("cost.T")
    }

    pub fn model(&self) -> Result<DdeModel, Failure> {
        let f = match self.raw("model.f") {
            "wright" => Nonlinearity::wright(),
            "linear" => Nonlinearity::zero(),
            "quadratic" => {
                let q = self.floats("model.q")?;
                let q: [f64; 6] = q
                    .try_into()
                    .map_err(|_| config_err("model.q needs six coefficients"))?;
                Nonlinearity::Quadratic(q)
            }
            other => return Err(config_err(format!("unknown nonlinearity '{other}'"))),
        };
        Ok(DdeModel::new(
            self.float("model.a")?,
            self.float("model.b")?,
            self.float("model.c")?,
            self.float("model.tau")?,
            f,
        )?)
    }

    pub fn history(&self, model: &DdeModel) -> Result<HistorySegment, Failure> {
        let tau = model.tau;
        Ok(match self.raw("history.source") {
            "printed" => cases::initial_history(InitSource::Printed, tau, self.horizon()?)?,
            "zero" => HistorySegment::constant(tau, 0.0)?,
            "constant" => HistorySegment::constant(tau, self.float("history.value")?)?,
            "snippet" => {
                let opts = SettleOptions {
                    init_value: self.float("settle.init")?,
                    max_time: self.float("settle.max_time")?,
                    tol: self.float("settle.tol")?,
                    ..SettleOptions::default()
                };
                settle_and_snip(model, self.horizon()?, self.float("dde.h")?, &opts)?.history
            }
            other => return Err(config_err(format!("unknown history source '{other}'"))),
        })
    }

    pub fn pmp(&self) -> Result<PmpOptions, Failure> {
        Ok(PmpOptions {
            mesh: self.get("pmp.mesh")?,
            tol: self.float("pmp.tol")?,
            max_newton: self.get("pmp.max_newton")?,
            mu_start: self.float("pmp.mu_start")?,
        })
    }

    pub fn hopf(&self) -> Result<HopfOptions, Failure> {
        Ok(HopfOptions {
            steps_per_tau: self.get("hopf.steps_per_tau")?,
            t_total: self.float("hopf.t_total")?,
            init_value: self.float("hopf.init")?,
        })
    }

    /// `dde.h = auto` becomes tau / 200.
    pub fn resolve_step(&mut self) -> Result<(), Failure> {
        if self.raw("dde.h") == "auto" {
            let h = cases::dde_step(self.float("model.tau")?);
            self.map.insert("dde.h".into(), format!("{h}"));
        }
        Ok(())
    }

    /// Replaces every `auto` grid key by the case default, so the manifest
    /// records concrete values.
    pub fn resolve_grid(&mut self) -> Result<(), Failure> {
        let keys = [
            "hjb.lo",
            "hjb.hi",
            "hjb.h",
            "hjb.dt",
            "hjb.nu",
            "hjb.stride",
        ];
        if keys.iter().all(|k| self.raw(k) != "auto") {
            return Ok(());
        }
        let g = cases::default_grid(self.case()?).map_err(|e| config_err(e.to_string()))?;
        let fill = [
            format!("{},{}", g.lo[0], g.lo[1]),
            format!("{},{}", g.hi[0], g.hi[1]),
            format!("{},{}", g.h[0], g.h[1]),
            format!("{}", g.dt),
            format!("{},{}", g.nu[0], g.nu[1]),
            format!("{}", g.stride),
        ];
        for (k, v) in keys.iter().zip(fill) {
            if self.raw(k) == "auto" {
                self.map.insert(k.to_string(), v);
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<GridSpec, Failure> {
        let boundary: Boundary = self.raw("hjb.boundary").parse().map_err(Failure::Config)?;
        Ok(GridSpec::new(
            self.pair("hjb.lo")?,
            self.pair("hjb.hi")?,
            self.pair("hjb.h")?,
            self.float("hjb.dt")?,
            self.horizon()?,
            self.pair("hjb.nu")?,
            self.get("hjb.stride")?,
        )?
        .with_boundary(boundary))
    }

    /// Sorted `key = value` lines.
    pub fn manifest(&self) -> String {
        self.map
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}
