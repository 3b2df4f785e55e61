//! The JSON run configuration and its translation into solver inputs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use radlog_core::threshold::{DEFAULT_NODES_PER_UNIT, DEFAULT_SCHEDULE};
use radlog_core::{AbsorptionTerm, CheckGrid, EigenOptions, Potential, SolveOptions};
use serde::{Deserialize, Serialize};

use crate::UsageError;

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dimension: usize,
    pub potential: PotentialSpec,
    pub absorption: AbsorptionSpec,
    #[serde(default = "default_nodes_per_unit")]
    pub nodes_per_unit: usize,
    /// Ball radius for `eig`; defaults to the last schedule radius.
    pub radius: Option<f64>,
    /// Expanding-ball radii for `solve` and `sweep`.
    #[serde(default)]
    pub schedule: Vec<f64>,
    /// Radii for `curve`.
    #[serde(default = "default_curve_schedule")]
    pub curve_schedule: Vec<f64>,
    pub lambda: Option<f64>,
    #[serde(default)]
    pub lambda_grid: Vec<f64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub check_grid: Option<CheckGridSpec>,
    #[serde(default)]
    pub seed: u64,
}

fn default_nodes_per_unit() -> usize {
    DEFAULT_NODES_PER_UNIT
}

fn default_curve_schedule() -> Vec<f64> {
    DEFAULT_SCHEDULE.to_vec()
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct PotentialSpec {
    #[serde(flatten)]
    pub family: PotentialFamilySpec,
    /// Constants `(A, α)` with `V⁺ <= A r^{-2-α}`, when known.
    pub decay_bound: Option<DecayBoundSpec>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PotentialFamilySpec {
    RationalDecay {
        a: f64,
        p: f64,
        b: f64,
        q: f64,
    },
    GaussianBump {
        c: f64,
    },
    Constant {
        value: f64,
    },
    /// Two-column `r,V` CSV; relative paths resolve against the config file.
    Tabulated {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DecayBoundSpec {
    pub amplitude: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum AbsorptionSpec {
    Power { p: f64 },
    Saturating,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CheckGridSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub tol: f64,
    pub tol_fix: f64,
    pub tol_res: f64,
    pub extinction_tol: f64,
    pub tol_stage: f64,
    pub max_iter: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        let s = SolveOptions::default();
        Self {
            tol: s.eigen.tol,
            tol_fix: s.tol_fix,
            tol_res: s.tol_res,
            extinction_tol: s.extinction_tol,
            tol_stage: s.tol_stage,
            max_iter: s.max_iter,
        }
    }
}

/// Environment variables that override the tolerances in the config.
pub const ENV_OVERRIDES: [&str; 5] = [
    "RADLOG_TOL",
    "RADLOG_TOL_FIX",
    "RADLOG_TOL_RES",
    "RADLOG_EXTINCTION_TOL",
    "RADLOG_TOL_STAGE",
];

/// A parsed config together with everything that went into it.
pub struct LoadedConfig {
    pub config: RunConfig,
    pub path: PathBuf,
    pub raw: Vec<u8>,
    /// Contents of auxiliary input files (tables), by path.
    pub aux_inputs: Vec<(PathBuf, Vec<u8>)>,
    pub env_overrides: BTreeMap<String, String>,
    potential: Potential,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read(path).map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
        let mut config: RunConfig = serde_json::from_slice(&raw)
            .map_err(|e| UsageError(format!("malformed config {}: {e}", path.display())))?;
        let env_overrides = apply_env(&mut config.tolerances)?;
        config.check()?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let mut aux_inputs = Vec::new();
        let potential = build_potential(&config.potential, base, &mut aux_inputs)?;
        Ok(Self {
            config,
            path: path.to_path_buf(),
            raw,
            aux_inputs,
            env_overrides,
            potential,
        })
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn absorption(&self) -> AbsorptionTerm {
        match self.config.absorption {
            AbsorptionSpec::Power { p } => AbsorptionTerm::power(p),
            AbsorptionSpec::Saturating => AbsorptionTerm::saturating(),
        }
    }

    pub fn eigen_options(&self) -> EigenOptions {
        EigenOptions::with_tol(self.config.tolerances.tol)
    }

    pub fn solve_options(&self) -> SolveOptions {
        let t = self.config.tolerances;
        SolveOptions {
            tol_fix: t.tol_fix,
            tol_res: t.tol_res,
            extinction_tol: t.extinction_tol,
            tol_stage: t.tol_stage,
            max_iter: t.max_iter,
            nodes_per_unit: self.config.nodes_per_unit,
            eigen: self.eigen_options(),
        }
    }

    pub fn check_grid(&self) -> CheckGrid {
        self.config
            .check_grid
            .map_or_else(CheckGrid::default, |g| CheckGrid::new(g.min, g.max, g.count))
    }

    pub fn lambda(&self) -> Result<f64> {
        self.config
            .lambda
            .ok_or_else(|| UsageError("this command needs \"lambda\" in the config".into()).into())
    }

    pub fn schedule(&self) -> Result<&[f64]> {
        if self.config.schedule.is_empty() {
            return Err(UsageError("this command needs a nonempty \"schedule\"".into()).into());
        }
        Ok(&self.config.schedule)
    }

    pub fn ball_radius(&self) -> Result<f64> {
        self.config
            .radius
            .or_else(|| self.config.schedule.last().copied())
            .ok_or_else(|| UsageError("set \"radius\" or \"schedule\" in the config".into()).into())
    }
}

fn apply_env(t: &mut Tolerances) -> Result<BTreeMap<String, String>> {
    let mut seen = BTreeMap::new();
    for name in ENV_OVERRIDES {
        let Ok(raw) = std::env::var(name) else { continue };
        let value: f64 = raw
            .trim()
            .parse()
            .map_err(|_| UsageError(format!("{name}={raw:?} is not a number")))?;
        let slot = match name {
            "RADLOG_TOL" => &mut t.tol,
            "RADLOG_TOL_FIX" => &mut t.tol_fix,
            "RADLOG_TOL_RES" => &mut t.tol_res,
            "RADLOG_EXTINCTION_TOL" => &mut t.extinction_tol,
            _ => &mut t.tol_stage,
        };
        *slot = value;
        seen.insert(name.to_string(), raw);
    }
    Ok(seen)
}

fn increasing(xs: &[f64]) -> bool {
    xs.iter().all(|x| x.is_finite() && *x > 0.0) && xs.windows(2).all(|w| w[1] > w[0])
}

impl RunConfig {
    fn check(&self) -> Result<()> {
        let bad = |msg: String| -> Result<()> { Err(UsageError(msg).into()) };
        if self.dimension < 3 {
            return bad(format!("dimension must be at least 3, got {}", self.dimension));
        }
        if self.nodes_per_unit == 0 {
            return bad("nodes_per_unit must be positive".into());
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("tol", t.tol),
            ("tol_fix", t.tol_fix),
            ("tol_res", t.tol_res),
            ("extinction_tol", t.extinction_tol),
            ("tol_stage", t.tol_stage),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("tolerance {name} must be positive, got {v}"));
            }
        }
        if t.max_iter == 0 {
            return bad("max_iter must be positive".into());
        }
        if !increasing(&self.schedule) || !increasing(&self.curve_schedule) {
            return bad("radius schedules must be positive and strictly increasing".into());
        }
        if !increasing(&self.lambda_grid) {
            return bad("lambda_grid must be positive and strictly increasing".into());
        }
        if let Some(l) = self.lambda {
            if !(l > 0.0 && l.is_finite()) {
                return bad(format!("lambda must be positive, got {l}"));
            }
        }
        if let Some(r) = self.radius {
            if !(r > 0.0 && r.is_finite()) {
                return bad(format!("radius must be positive, got {r}"));
            }
        }
        Ok(())
    }
}

fn build_potential(spec: &PotentialSpec, base: &Path, aux: &mut Vec<(PathBuf, Vec<u8>)>) -> Result<Potential> {
    let v = match &spec.family {
        PotentialFamilySpec::RationalDecay { a, p, b, q } => Potential::rational_decay(*a, *p, *b, *q),
        PotentialFamilySpec::GaussianBump { c } => Potential::gaussian_bump(*c),
        PotentialFamilySpec::Constant { value } => Potential::constant(*value),
        PotentialFamilySpec::Tabulated { path } => {
            let full = base.join(path);
            let bytes = std::fs::read(&full)
                .map_err(|e| UsageError(format!("cannot read potential table {}: {e}", full.display())))?;
            let (radii, values) = read_table(&bytes).with_context(|| format!("potential table {}", full.display()))?;
            aux.push((full, bytes));
            Potential::tabulated(radii, values).map_err(|e| UsageError(e.to_string()))?
        }
    };
    Ok(match spec.decay_bound {
        Some(b) => v.with_decay_bound(b.amplitude, b.alpha),
        None => v,
    })
}

/// Two numeric columns with a header row.
pub fn read_table(bytes: &[u8]) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(bytes);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (k, row) in reader.deserialize::<(f64, f64)>().enumerate() {
        let (x, y) = row.map_err(|e| UsageError(format!("row {}: {e}", k + 1)))?;
        xs.push(x);
        ys.push(y);
    }
    Ok((xs, ys))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> RunConfig {
        serde_json::from_str(text).unwrap()
    }

    const MINIMAL: &str = r#"{
        "dimension": 3,
        "potential": { "family": "gaussian_bump", "c": 1.5 },
        "absorption": { "family": "saturating" }
    }"#;

    #[test]
    fn defaults_fill_optional_fields() {
        let c = parse(MINIMAL);
        assert_eq!(c.nodes_per_unit, DEFAULT_NODES_PER_UNIT);
        assert_eq!(c.curve_schedule, DEFAULT_SCHEDULE.to_vec());
        assert_eq!(c.tolerances.tol_fix, SolveOptions::default().tol_fix);
        assert!(c.check().is_ok());
    }

    #[test]
    fn check_rejects_inconsistent_values() {
        let mut c = parse(MINIMAL);
        c.schedule = vec![8.0, 4.0];
        assert!(c.check().unwrap_err().is::<UsageError>());
        let mut c = parse(MINIMAL);
        c.dimension = 2;
        assert!(c.check().is_err());
        let mut c = parse(MINIMAL);
        c.tolerances.tol_res = 0.0;
        assert!(c.check().is_err());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = MINIMAL.replace("\"dimension\"", "\"dimensoin\": 3, \"dimension\"");
        assert!(serde_json::from_str::<RunConfig>(&text).is_err());
    }

    #[test]
    fn table_reader_skips_comments_and_whitespace() {
        let (x, y) = read_table(b"r, V\n# sampled\n0, 1.5\n 2 ,-0.25\n").unwrap();
        assert_eq!(x, vec![0.0, 2.0]);
        assert_eq!(y, vec![1.5, -0.25]);
        assert!(read_table(b"r,V\n1,x\n").is_err());
    }
}
