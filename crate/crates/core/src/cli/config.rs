//! Run configuration: line-based `key = value` entries grouped under `[section]` headers.
//!
//! ```text
//! # comment
//! [run]
//! scenario = composite-linear
//! [grid]
//! h = 0.015625
//! ```
//!
//! Every key has a default; unknown sections and keys are rejected.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::fields::{CoefficientSet, ScalarField};
use crate::geometry::DomainSpec;
use crate::nashmoser::{NashMoserConfig, NonlinearProblem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    EllipticOnly,
    HyperbolicOnly,
    CompositeLinear,
    Counterexample,
    NashMoser,
    VerificationSuite,
}

impl Scenario {
    pub const ALL: [Scenario; 6] = [
        Scenario::EllipticOnly,
        Scenario::HyperbolicOnly,
        Scenario::CompositeLinear,
        Scenario::Counterexample,
        Scenario::NashMoser,
        Scenario::VerificationSuite,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::EllipticOnly => "elliptic-only",
            Scenario::HyperbolicOnly => "hyperbolic-only",
            Scenario::CompositeLinear => "composite-linear",
            Scenario::Counterexample => "counterexample",
            Scenario::NashMoser => "nash-moser",
            Scenario::VerificationSuite => "verification-suite",
        }
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scenario `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    TricomiCross,
    Reversed,
    Custom,
}

/// Source of f and the boundary data.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DataKind {
    /// f = L u* for a built-in exact solution u*.
    Manufactured,
    Zero,
    /// f and the Dirichlet data given as formulas.
    Expression,
}

/// Built-in exact solutions, by id.
pub const MANUFACTURED: [(&str, &str); 3] = [
    ("poly_exp", "(x^2 - y^2) * exp(x*y)"),
    ("saddle", "x^2 - y^2"),
    ("cubic", "x^3 - 3*x*y^2 + y^3"),
];

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub out: PathBuf,
    pub seed: u64,

    pub h: f64,
    pub radius_inner: f64,
    pub radius_outer: f64,

    pub preset: Preset,
    pub k: Option<String>,
    pub gamma1: Option<String>,
    pub gamma2: Option<String>,
    pub a: String,
    pub b1: String,
    pub b2: String,
    pub c: String,

    pub data: DataKind,
    pub manufactured: String,
    pub f: String,
    pub dirichlet: String,

    pub delta_schedule: Vec<f64>,
    pub epsilon_schedule: Vec<f64>,
    pub cfl: f64,
    pub glue_constant: f64,
    pub compat_m: usize,
    pub enforce_compat: bool,
    /// Relative L2 error bound checked when the data are manufactured.
    pub error_bound: f64,

    pub nm: NashMoserConfig,
    pub nm_psi: String,
    pub nm_psi_lower: f64,
    /// Assert ||F(w_last)|| <= decay_bound ||F(w_0)||.
    pub nm_decay_bound: f64,

    /// Every key as it was finally resolved, for the report.
    pub echo: BTreeMap<String, String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let opts = crate::composite::CompositeOptions::default();
        let nm = NashMoserConfig { eps: 0.05, ..Default::default() };
        let mut c = RunConfig {
            scenario: Scenario::CompositeLinear,
            out: PathBuf::from("out"),
            seed: 7,
            h: opts.h,
            radius_inner: 1.0,
            radius_outer: std::f64::consts::SQRT_2,
            preset: Preset::TricomiCross,
            k: None,
            gamma1: None,
            gamma2: None,
            a: "1".into(),
            b1: "0".into(),
            b2: "0".into(),
            c: "0".into(),
            data: DataKind::Manufactured,
            manufactured: "poly_exp".into(),
            f: "0".into(),
            dirichlet: "0".into(),
            delta_schedule: opts.delta_schedule,
            epsilon_schedule: opts.epsilon_schedule,
            cfl: opts.cfl,
            glue_constant: opts.glue_constant,
            compat_m: opts.compat_m,
            enforce_compat: opts.enforce_compat,
            error_bound: 0.01,
            nm,
            nm_psi: "1".into(),
            nm_psi_lower: 1.0,
            nm_decay_bound: 0.1,
            echo: BTreeMap::new(),
        };
        c.refresh_echo();
        c
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>().map_err(|_| Error::Config(format!("`{key}`: expected a number, got `{v}`")))
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.parse::<usize>().map_err(|_| Error::Config(format!("`{key}`: expected a non-negative integer, got `{v}`")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("`{key}`: expected true or false, got `{v}`"))),
    }
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(|t| parse_f64(key, t.trim())).collect()
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(", ")
}

fn check_expr(key: &str, v: &str) -> Result<String> {
    Expr::parse(v).map_err(|e| Error::Expr(format!("`{key}`: {e}")))?;
    Ok(v.to_string())
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut c = RunConfig::default();
        let mut section = String::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                if !["run", "grid", "coefficients", "data", "solver", "nashmoser"].contains(&section.as_str()) {
                    return Err(Error::Config(format!("line {}: unknown section [{section}]", n + 1)));
                }
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
            if section.is_empty() {
                return Err(Error::Config(format!("line {}: entry outside a section", n + 1)));
            }
            c.set(&section, key.trim(), value.trim())?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Sets `section.key`; used by the parser and by command-line overrides.
    pub fn set(&mut self, section: &str, key: &str, v: &str) -> Result<()> {
        let full = format!("{section}.{key}");
        let k = full.as_str();
        match k {
            "run.scenario" => self.scenario = v.parse()?,
            "run.out" => self.out = PathBuf::from(v),
            "run.seed" => self.seed = v.parse().map_err(|_| Error::Config(format!("`{k}`: expected an integer")))?,
            "grid.h" => self.h = parse_f64(k, v)?,
            "grid.radius_inner" => self.radius_inner = parse_f64(k, v)?,
            "grid.radius_outer" => self.radius_outer = parse_f64(k, v)?,
            "coefficients.preset" => {
                self.preset = match v {
                    "tricomi_cross" => Preset::TricomiCross,
                    "reversed" => Preset::Reversed,
                    "custom" => Preset::Custom,
                    _ => return Err(Error::Config(format!("`{k}`: unknown preset `{v}`"))),
                }
            }
            "coefficients.k" => self.k = Some(check_expr(k, v)?),
            "coefficients.gamma1" => self.gamma1 = Some(check_expr(k, v)?),
            "coefficients.gamma2" => self.gamma2 = Some(check_expr(k, v)?),
            "coefficients.a" => self.a = check_expr(k, v)?,
            "coefficients.b1" => self.b1 = check_expr(k, v)?,
            "coefficients.b2" => self.b2 = check_expr(k, v)?,
            "coefficients.c" => self.c = check_expr(k, v)?,
            "data.kind" => {
                self.data = match v {
                    "manufactured" => DataKind::Manufactured,
                    "zero" => DataKind::Zero,
                    "expression" => DataKind::Expression,
                    _ => return Err(Error::Config(format!("`{k}`: unknown data kind `{v}`"))),
                }
            }
            "data.manufactured" => {
                if !MANUFACTURED.iter().any(|(id, _)| *id == v) {
                    return Err(Error::Config(format!("`{k}`: unknown manufactured solution `{v}`")));
                }
                self.manufactured = v.into();
            }
            "data.f" => self.f = check_expr(k, v)?,
            "data.dirichlet" => self.dirichlet = check_expr(k, v)?,
            "solver.delta_schedule" => self.delta_schedule = parse_list(k, v)?,
            "solver.epsilon_schedule" => self.epsilon_schedule = parse_list(k, v)?,
            "solver.cfl" => self.cfl = parse_f64(k, v)?,
            "solver.glue_constant" => self.glue_constant = parse_f64(k, v)?,
            "solver.compat_m" => self.compat_m = parse_usize(k, v)?,
            "solver.enforce_compat" => self.enforce_compat = parse_bool(k, v)?,
            "solver.error_bound" => self.error_bound = parse_f64(k, v)?,
            "nashmoser.eps" => self.nm.eps = parse_f64(k, v)?,
            "nashmoser.s0" => self.nm.s0 = parse_usize(k, v)?,
            "nashmoser.theta0" => self.nm.theta0 = parse_f64(k, v)?,
            "nashmoser.theta_growth" => self.nm.theta_growth = parse_f64(k, v)?,
            "nashmoser.max_levels" => self.nm.max_levels = parse_usize(k, v)?,
            "nashmoser.target" => self.nm.target = parse_f64(k, v)?,
            "nashmoser.max_halvings" => self.nm.max_halvings = parse_usize(k, v)?,
            "nashmoser.solve_radius" => self.nm.solve_radius = parse_f64(k, v)?,
            "nashmoser.norm_radius" => self.nm.norm_radius = parse_f64(k, v)?,
            "nashmoser.taper_inner" => self.nm.taper_inner = parse_f64(k, v)?,
            "nashmoser.psi" => self.nm_psi = check_expr(k, v)?,
            "nashmoser.psi_lower" => self.nm_psi_lower = parse_f64(k, v)?,
            "nashmoser.decay_bound" => self.nm_decay_bound = parse_f64(k, v)?,
            _ => return Err(Error::Config(format!("unknown key `{key}` in [{section}]"))),
        }
        self.refresh_echo();
        Ok(())
    }

    /// Cross-field checks.
    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h < self.radius_inner) {
            return Err(Error::Config(format!("grid.h must lie in (0, radius_inner), got {}", self.h)));
        }
        if self.preset == Preset::Custom && self.k.is_none() {
            return Err(Error::Config("preset = custom needs coefficients.k".into()));
        }
        if self.preset != Preset::Custom && (self.k.is_some() || self.gamma1.is_some() || self.gamma2.is_some()) {
            return Err(Error::Config("coefficients.k, gamma1 and gamma2 are only read with preset = custom".into()));
        }
        if !(self.cfl > 0.0) {
            return Err(Error::Config("solver.cfl must be positive".into()));
        }
        Ok(())
    }

    fn refresh_echo(&mut self) {
        let mut e = BTreeMap::new();
        let opt = |v: &Option<String>| v.clone().unwrap_or_default();
        e.insert("run.scenario".into(), self.scenario.name().into());
        e.insert("run.seed".into(), self.seed.to_string());
        e.insert("grid.h".into(), format!("{:e}", self.h));
        e.insert("grid.radius_inner".into(), format!("{:e}", self.radius_inner));
        e.insert("grid.radius_outer".into(), format!("{:e}", self.radius_outer));
        e.insert("coefficients.preset".into(), serde_json::to_value(self.preset).map(|v| v.as_str().unwrap_or("").to_string()).unwrap_or_default());
        e.insert("coefficients.k".into(), opt(&self.k));
        e.insert("coefficients.gamma1".into(), opt(&self.gamma1));
        e.insert("coefficients.gamma2".into(), opt(&self.gamma2));
        e.insert("coefficients.a".into(), self.a.clone());
        e.insert("coefficients.b1".into(), self.b1.clone());
        e.insert("coefficients.b2".into(), self.b2.clone());
        e.insert("coefficients.c".into(), self.c.clone());
        e.insert("data.kind".into(), serde_json::to_value(&self.data).map(|v| v.as_str().unwrap_or("").to_string()).unwrap_or_default());
        e.insert("data.manufactured".into(), self.manufactured.clone());
        e.insert("data.f".into(), self.f.clone());
        e.insert("data.dirichlet".into(), self.dirichlet.clone());
        e.insert("solver.delta_schedule".into(), fmt_list(&self.delta_schedule));
        e.insert("solver.epsilon_schedule".into(), fmt_list(&self.epsilon_schedule));
        e.insert("solver.cfl".into(), format!("{:e}", self.cfl));
        e.insert("solver.glue_constant".into(), format!("{:e}", self.glue_constant));
        e.insert("solver.compat_m".into(), self.compat_m.to_string());
        e.insert("solver.enforce_compat".into(), self.enforce_compat.to_string());
        e.insert("solver.error_bound".into(), format!("{:e}", self.error_bound));
        e.insert("nashmoser.eps".into(), format!("{:e}", self.nm.eps));
        e.insert("nashmoser.s0".into(), self.nm.s0.to_string());
        e.insert("nashmoser.theta0".into(), format!("{:e}", self.nm.theta0));
        e.insert("nashmoser.theta_growth".into(), format!("{:e}", self.nm.theta_growth));
        e.insert("nashmoser.max_levels".into(), self.nm.max_levels.to_string());
        e.insert("nashmoser.target".into(), format!("{:e}", self.nm.target));
        e.insert("nashmoser.max_halvings".into(), self.nm.max_halvings.to_string());
        e.insert("nashmoser.solve_radius".into(), format!("{:e}", self.nm.solve_radius));
        e.insert("nashmoser.norm_radius".into(), format!("{:e}", self.nm.norm_radius));
        e.insert("nashmoser.taper_inner".into(), format!("{:e}", self.nm.taper_inner));
        e.insert("nashmoser.psi".into(), self.nm_psi.clone());
        e.insert("nashmoser.psi_lower".into(), format!("{:e}", self.nm_psi_lower));
        e.insert("nashmoser.decay_bound".into(), format!("{:e}", self.nm_decay_bound));
        self.echo = e;
    }

    pub fn domain(&self) -> Result<DomainSpec> {
        let mut spec = DomainSpec::diagonals(self.radius_inner, self.radius_outer);
        if self.preset == Preset::Custom {
            if let Some(g) = &self.gamma1 {
                spec.gamma1 = Expr::parse(g)?;
            }
            if let Some(g) = &self.gamma2 {
                spec.gamma2 = Expr::parse(g)?;
            }
        }
        Ok(spec)
    }

    /// Operator coefficients without f.
    pub fn operator(&self) -> Result<CoefficientSet> {
        let mut c = match self.preset {
            Preset::TricomiCross => CoefficientSet::tricomi_cross(),
            Preset::Reversed => CoefficientSet::reversed(),
            Preset::Custom => CoefficientSet::principal(ScalarField::parse(self.k.as_deref().unwrap_or("0"))?),
        };
        c.a = ScalarField::parse(&self.a)?;
        c.b1 = ScalarField::parse(&self.b1)?;
        c.b2 = ScalarField::parse(&self.b2)?;
        c.c = ScalarField::parse(&self.c)?;
        Ok(c)
    }

    /// Exact solution for manufactured data.
    pub fn exact(&self) -> Result<Option<Expr>> {
        if self.data != DataKind::Manufactured {
            return Ok(None);
        }
        let src = MANUFACTURED.iter().find(|(id, _)| *id == self.manufactured).map(|p| p.1).unwrap_or(MANUFACTURED[0].1);
        Ok(Some(Expr::parse(src)?))
    }

    /// Coefficients with f, and the Dirichlet data.
    pub fn problem(&self) -> Result<(CoefficientSet, ScalarField)> {
        let op = self.operator()?;
        Ok(match self.data {
            DataKind::Zero => (op, ScalarField::zero()),
            DataKind::Expression => (op.with_f(ScalarField::parse(&self.f)?), ScalarField::parse(&self.dirichlet)?),
            DataKind::Manufactured => {
                let u = self.exact()?.expect("manufactured data");
                let m = crate::fields::manufacture_linear(&u, &op)?;
                (op.with_f(m.f), ScalarField::from(m.g))
            }
        })
    }

    pub fn composite_options(&self) -> crate::composite::CompositeOptions {
        crate::composite::CompositeOptions {
            h: self.h,
            delta_schedule: self.delta_schedule.clone(),
            epsilon_schedule: self.epsilon_schedule.clone(),
            cfl: self.cfl,
            compat_m: self.compat_m,
            enforce_compat: self.enforce_compat,
            glue_constant: self.glue_constant,
            ..Default::default()
        }
    }

    pub fn nonlinear(&self) -> Result<NonlinearProblem> {
        let k = match self.preset {
            Preset::Custom => Expr::parse(self.k.as_deref().unwrap_or("0"))?,
            Preset::Reversed => Expr::y().powi(2) - Expr::x().powi(2),
            Preset::TricomiCross => Expr::x().powi(2) - Expr::y().powi(2),
        };
        Ok(NonlinearProblem::new(k, Expr::parse(&self.nm_psi)?, self.nm_psi_lower))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = RunConfig::parse("[run]\nscenario = nash-moser\n[grid]\nh = 0.03125 # coarse\n").unwrap();
        assert_eq!(c.scenario, Scenario::NashMoser);
        assert_eq!(c.h, 0.03125);
        assert_eq!(c.echo["grid.h"], "3.125e-2");
    }

    #[test]
    fn unknown_key_rejected() {
        let e = RunConfig::parse("[grid]\nhh = 0.1\n").unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let e = RunConfig::parse("[gird]\n").unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn bad_expression_rejected() {
        let e = RunConfig::parse("[data]\nkind = expression\nf = sin(x\n").unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn custom_needs_k() {
        assert!(RunConfig::parse("[coefficients]\npreset = custom\n").is_err());
        let c = RunConfig::parse("[coefficients]\npreset = custom\nk = 4*x^2 - y^2\ngamma1 = -2*x\ngamma2 = 2*x\n");
        // the zero set of k is y = +-2x
        assert!(c.is_ok());
    }
}
