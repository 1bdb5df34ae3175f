use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use zboundary::curves::{CeVariant, EllipticCurve};
use zboundary::zseries::{BoundKind, TruncationPlan};
use zboundary::{Budget, Error};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// A builtin name, an inline "a1,a2,a3,a4,a6" model, a path to a JSON
/// curve file, or the curve object itself.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum CurveSource {
    Model(EllipticCurve),
    Name(String),
}

// untagged derive would buffer the object and lose integer map keys
impl<'de> Deserialize<'de> for CurveSource {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match serde_json::Value::deserialize(d)? {
            serde_json::Value::String(s) => Ok(Self::Name(s)),
            v => serde_json::from_value(v).map(Self::Model).map_err(serde::de::Error::custom),
        }
    }
}

impl Default for CurveSource {
    fn default() -> Self {
        Self::Name("11a".into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grid {
    pub x_lo: f64,
    pub x_hi: f64,
    pub points: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Self { x_lo: 0.2, x_hi: 1.0, points: 50 }
    }
}

/// Truncation constants; `t` left empty means R/x_lo².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanConfig {
    #[serde(rename = "T")]
    pub t: Option<f64>,
    #[serde(rename = "R")]
    pub r: f64,
    pub alpha: f64,
    pub beta: f64,
    pub eps: f64,
}

impl Default for PlanConfig {
    fn default() -> Self {
        let d = TruncationPlan::default();
        Self { t: None, r: d.r, alpha: d.alpha, beta: d.beta, eps: d.eps }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BudgetConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_terms: usize,
}

impl Default for BudgetConfig {
    fn default() -> Self {
        let b = Budget::default();
        Self { rel_tol: b.rel_tol, abs_tol: b.abs_tol, max_terms: b.max_terms }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
pub enum What {
    /// c(ν), the boundary-term weights
    #[default]
    #[serde(rename = "cE")]
    #[value(name = "cE")]
    Ce,
    /// a(n) = Σ_{νN=n} c(ν)σ₀(N)
    #[serde(rename = "a")]
    #[value(name = "a")]
    Weights,
    /// coefficients of L(E,s)
    #[serde(rename = "L")]
    #[value(name = "L")]
    L,
    /// coefficients of ζ_E(s)²
    #[serde(rename = "zetaE2")]
    #[value(name = "zetaE2")]
    ZetaESq,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoeffsConfig {
    pub what: What,
    pub limit: usize,
}

impl Default for CoeffsConfig {
    fn default() -> Self {
        Self { what: What::Ce, limit: 100_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    /// Z_E(x) of the curve
    #[default]
    Ze,
    /// Z(x,ν) for a single ν
    Z,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub target: Target,
    pub nu: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self { target: Target::Ze, nu: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GoldfeldConfig {
    pub ladder: Vec<f64>,
    pub r: u32,
}

impl Default for GoldfeldConfig {
    fn default() -> Self {
        Self { ladder: vec![1e3, 1e4, 1e5], r: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OmegaConfig {
    pub samples: usize,
    /// Primes p ≤ bound get random angles.
    pub prime_bound: u64,
    pub limit: usize,
    pub excluded: Vec<u64>,
}

impl Default for OmegaConfig {
    fn default() -> Self {
        Self { samples: 100, prime_bound: 100, limit: 10_000, excluded: Vec::new() }
    }
}

/// Everything a run depends on. Loaded from JSON, then overridden by flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub curve: CurveSource,
    /// Conductor for an inline model.
    pub conductor: Option<u64>,
    pub variant: CeVariant,
    pub plan: PlanConfig,
    pub grid: Grid,
    pub bound: BoundKind,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub threads: Option<usize>,
    pub budget: BudgetConfig,
    pub coeffs: CoeffsConfig,
    pub scan: ScanConfig,
    pub goldfeld: GoldfeldConfig,
    pub omega: OmegaConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            curve: CurveSource::default(),
            conductor: None,
            variant: CeVariant::default(),
            plan: PlanConfig::default(),
            grid: Grid::default(),
            bound: BoundKind::default(),
            format: Format::default(),
            out: None,
            seed: 20240601,
            threads: None,
            budget: BudgetConfig::default(),
            coeffs: CoeffsConfig::default(),
            scan: ScanConfig::default(),
            goldfeld: GoldfeldConfig::default(),
            omega: OmegaConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), Error> {
        let g = &self.grid;
        if !(g.x_lo > 0.0 && g.x_hi > g.x_lo && g.points >= 2) {
            return Err(Error::Config(format!(
                "grid needs 0 < x_lo < x_hi and points >= 2 (got {}, {}, {})",
                g.x_lo, g.x_hi, g.points
            )));
        }
        self.plan()?.validate()?;
        if !(self.budget.rel_tol > 0.0 && self.budget.abs_tol >= 0.0 && self.budget.max_terms > 0) {
            return Err(Error::Config("budget needs rel_tol > 0, abs_tol >= 0, max_terms > 0".into()));
        }
        Ok(())
    }

    pub fn plan(&self) -> Result<TruncationPlan, Error> {
        let p = &self.plan;
        let t = match p.t {
            Some(t) => t,
            None => (p.r / (self.grid.x_lo * self.grid.x_lo)).ceil(),
        };
        let plan = TruncationPlan { t, r: p.r, alpha: p.alpha, beta: p.beta, eps: p.eps };
        plan.validate()?;
        Ok(plan)
    }

    pub fn budget(&self) -> Budget {
        let b = &self.budget;
        Budget { rel_tol: b.rel_tol, abs_tol: b.abs_tol, max_terms: b.max_terms }
    }

    pub fn curve(&self) -> Result<EllipticCurve, Error> {
        let curve = match &self.curve {
            CurveSource::Model(c) => c.clone(),
            CurveSource::Name(name) => {
                if let Some(c) = EllipticCurve::builtin(name) {
                    c
                } else if name.contains(',') {
                    let n = self
                        .conductor
                        .ok_or_else(|| Error::Usage(format!("inline curve `{name}` needs --conductor")))?;
                    EllipticCurve::parse_inline(name, n)?
                } else if Path::new(name).is_file() {
                    let text = std::fs::read_to_string(name)
                        .map_err(|e| Error::Config(format!("cannot read {name}: {e}")))?;
                    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{name}: {e}")))?
                } else {
                    return Err(Error::Usage(format!(
                        "unknown curve `{name}`: expected 11a, 37a, a1,a2,a3,a4,a6 or a JSON file"
                    )));
                }
            }
        };
        curve.validate()?;
        Ok(curve)
    }

    /// SHA-256 of the canonical JSON of everything that affects numbers;
    /// output location and thread count are left out.
    pub fn hash(&self, command: &str) -> String {
        let canon = self.canonical();
        let mut h = Sha256::new();
        h.update(command.as_bytes());
        h.update([0]);
        h.update(canon.as_bytes());
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn canonical(&self) -> String {
        let mut c = self.clone();
        c.out = None;
        c.threads = None;
        serde_json::to_string(&c).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = RunConfig::default();
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(c, back);
        assert!(c.validate().is_ok());
        assert_eq!(c.plan().unwrap().t, 500.0);
    }

    #[test]
    fn partial_json_fills_defaults() {
        let c: RunConfig = serde_json::from_str(r#"{"curve":"37a","plan":{"T":1000},"grid":{"x_lo":0.3}}"#).unwrap();
        assert_eq!(c.curve().unwrap().conductor, 37);
        assert_eq!(c.plan().unwrap().t, 1000.0);
        assert_eq!(c.grid.points, 50);
        assert!(serde_json::from_str::<RunConfig>(r#"{"curv":"37a"}"#).is_err());
    }

    #[test]
    fn curve_object_and_inline_forms() {
        let c: RunConfig = serde_json::from_str(
            r#"{"curve":{"a1":0,"a2":0,"a3":1,"a4":-1,"a6":0,"conductor":37,"bad_ap":{"37":-1}}}"#,
        )
        .unwrap();
        assert_eq!(c.curve().unwrap(), EllipticCurve::builtin("37a").unwrap());
        let c = RunConfig { curve: CurveSource::Name("0,0,1,-1,0".into()), conductor: None, ..Default::default() };
        assert!(matches!(c.curve(), Err(Error::Usage(_))));
        let c = RunConfig { conductor: Some(37), ..c };
        assert_eq!(c.curve().unwrap().a4, -1);
    }

    #[test]
    fn hash_ignores_output_location() {
        let a = RunConfig::default();
        let b = RunConfig { out: Some("x.csv".into()), threads: Some(3), ..a.clone() };
        assert_eq!(a.hash("ztable"), b.hash("ztable"));
        assert_ne!(a.hash("ztable"), a.hash("signscan"));
        let c = RunConfig { seed: 1, ..a.clone() };
        assert_ne!(a.hash("ztable"), c.hash("ztable"));
    }
}
