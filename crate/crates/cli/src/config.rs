//! Run configuration: a TOML file with one section per module. Unknown keys
//! are rejected.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use acma::domain::{grid_build, DefiningFunction, GridDomain};
use acma::field::SharedFn;
use acma::geometry::{AlmostComplexStructure, BoundingBox};
use acma::io::{import_field, structure_table_from_csv};
use acma::maximal::DEFAULT_SCHEDULE;
use acma::solver::SolverConfig;
use serde::Deserialize;

use crate::expr::Expr;
use crate::Failure;

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Solve,
    Maximal,
    Verify,
    Disks,
    Bench,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default)]
    pub seed: u64,
    /// Output directory; `--out` takes precedence.
    pub out: Option<PathBuf>,
    pub structure: StructureSpec,
    pub domain: DomainSpec,
    #[serde(default)]
    pub problem: ProblemSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub maximal: MaximalSpec,
    #[serde(default)]
    pub verify: VerifySpec,
    #[serde(default)]
    pub disks: DisksSpec,
    #[serde(default)]
    pub bench: BenchSpec,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureSpec {
    /// `standard`, `sheared` or `table`.
    pub family: String,
    pub n: usize,
    #[serde(default)]
    pub epsilon: f64,
    /// CSV table of `J` for the `table` family.
    pub table: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    /// `ball`, `ellipsoid(a1, ...)`, or the path of a CSV field.
    pub rho: String,
    pub h: f64,
    /// Half side of a cube centred at the origin.
    pub box_half: Option<f64>,
    pub box_lo: Option<Vec<f64>>,
    pub box_hi: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    #[serde(default = "one")]
    pub f: String,
    #[serde(default = "zero")]
    pub phi: String,
    /// Closed-form solution, if known; errors are reported against it.
    pub exact: Option<String>,
}

impl Default for ProblemSpec {
    fn default() -> Self {
        Self { f: one(), phi: zero(), exact: None }
    }
}

fn one() -> String {
    "1".into()
}

fn zero() -> String {
    "0".into()
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub tol: Option<f64>,
    pub max_newton: Option<usize>,
    pub backtrack: Option<f64>,
    pub margin_floor_fraction: Option<f64>,
    pub delta: Option<f64>,
    pub delta_schedule: Option<Vec<f64>>,
    pub max_linear_iterations: Option<usize>,
}

impl SolverSpec {
    pub fn build(&self) -> Result<SolverConfig, Failure> {
        let d = SolverConfig::default();
        let cfg = SolverConfig {
            tol: self.tol.unwrap_or(d.tol),
            max_newton: self.max_newton.unwrap_or(d.max_newton),
            backtrack: self.backtrack.unwrap_or(d.backtrack),
            margin_floor_fraction: self.margin_floor_fraction.unwrap_or(d.margin_floor_fraction),
            delta: self.delta.unwrap_or(d.delta),
            delta_schedule: self.delta_schedule.clone().unwrap_or_default(),
            max_linear_iterations: self.max_linear_iterations.unwrap_or(d.max_linear_iterations),
            ..d
        };
        if !(cfg.tol > 0.0) || !(cfg.backtrack > 0.0 && cfg.backtrack < 1.0) || cfg.delta < 0.0 {
            return Err(Failure::Config("solver: tol must be positive, backtrack in (0, 1), delta >= 0".into()));
        }
        Ok(cfg)
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaximalSpec {
    #[serde(default = "default_schedule")]
    pub schedule: Vec<usize>,
    #[serde(default = "default_trials")]
    pub probe_trials: usize,
    /// Number of balls in the cover used by the F(J)-harmonic check.
    #[serde(default = "default_cover")]
    pub cover: usize,
}

impl Default for MaximalSpec {
    fn default() -> Self {
        Self { schedule: default_schedule(), probe_trials: default_trials(), cover: default_cover() }
    }
}

fn default_schedule() -> Vec<usize> {
    DEFAULT_SCHEDULE.to_vec()
}

fn default_trials() -> usize {
    40
}

fn default_cover() -> usize {
    4
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    /// Field CSV to check; defaults to `u.csv` in the output directory.
    pub solution: Option<PathBuf>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisksSpec {
    #[serde(default = "default_disk_count")]
    pub count: usize,
    #[serde(default = "default_disk_radius")]
    pub radius: f64,
    /// Test function for the Laplacian-versus-Hessian check.
    #[serde(default = "default_disk_field")]
    pub field: String,
    /// Difference step of the Hessian side of the check.
    #[serde(default = "default_disk_h")]
    pub h: f64,
}

impl Default for DisksSpec {
    fn default() -> Self {
        Self {
            count: default_disk_count(),
            radius: default_disk_radius(),
            field: default_disk_field(),
            h: default_disk_h(),
        }
    }
}

fn default_disk_count() -> usize {
    10
}

fn default_disk_radius() -> f64 {
    0.1
}

fn default_disk_field() -> String {
    "x1^2 + y1^2 + x2^2 + y2^2 + 0.3 * x1^3".into()
}

fn default_disk_h() -> f64 {
    1e-3
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSpec {
    #[serde(default = "default_bench_hs")]
    pub h: Vec<f64>,
}

impl Default for BenchSpec {
    fn default() -> Self {
        Self { h: default_bench_hs() }
    }
}

fn default_bench_hs() -> Vec<f64> {
    vec![0.25, 0.125, 0.0625]
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, Failure> {
        let cfg: Self = toml::from_str(text).map_err(|e| Failure::Config(e.to_string()))?;
        if !(cfg.domain.h > 0.0) {
            return Err(Failure::Config("domain.h must be positive".into()));
        }
        if !(1..=2).contains(&cfg.structure.n) {
            return Err(Failure::Config("structure.n must be 1 or 2".into()));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn dim(&self) -> usize {
        2 * self.structure.n
    }

    pub fn structure(&self) -> Result<AlmostComplexStructure, Failure> {
        let s = &self.structure;
        match s.family.as_str() {
            "standard" => Ok(AlmostComplexStructure::standard(s.n)),
            "sheared" => Ok(AlmostComplexStructure::sheared(s.n, s.epsilon)),
            "table" => {
                let path = s.table.as_ref().ok_or_else(|| Failure::Config("structure.table is required".into()))?;
                let text =
                    std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
                let table = structure_table_from_csv(&text, s.n).map_err(|e| Failure::Config(e.to_string()))?;
                Ok(AlmostComplexStructure::from_table(table))
            }
            other => Err(Failure::Config(format!("unknown structure family '{other}'"))),
        }
    }

    pub fn bounding_box(&self) -> Result<BoundingBox, Failure> {
        let d = &self.domain;
        match (&d.box_lo, &d.box_hi, d.box_half) {
            (Some(lo), Some(hi), None) if lo.len() == self.dim() && hi.len() == self.dim() => {
                Ok(BoundingBox::new(lo.clone(), hi.clone()))
            }
            (None, None, Some(half)) if half > 0.0 => Ok(BoundingBox::cube(self.dim(), half)),
            (None, None, None) => Ok(BoundingBox::cube(self.dim(), 1.25)),
            _ => Err(Failure::Config(format!(
                "domain: give either box_half or box_lo and box_hi with {} entries each",
                self.dim()
            ))),
        }
    }

    pub fn defining_function(&self) -> Result<DefiningFunction, Failure> {
        let rho = self.domain.rho.trim();
        if rho == "ball" {
            return Ok(DefiningFunction::Ball);
        }
        if let Some(args) = rho.strip_prefix("ellipsoid(").and_then(|r| r.strip_suffix(')')) {
            let axes: Vec<f64> = args
                .split(',')
                .map(|a| a.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| Failure::Config(format!("bad ellipsoid axes '{args}'")))?;
            if axes.iter().any(|a| !(*a > 0.0)) || (axes.len() != self.dim() && axes.len() != self.structure.n) {
                return Err(Failure::Config(format!(
                    "ellipsoid needs {} or {} positive semi-axes",
                    self.structure.n,
                    self.dim()
                )));
            }
            return Ok(DefiningFunction::Ellipsoid(axes));
        }
        let field = import_field(Path::new(rho), None).map_err(|e| Failure::Config(format!("rho field {rho}: {e}")))?;
        if field.grid().n() != self.structure.n {
            return Err(Failure::Config(format!("rho field {rho} has the wrong dimension")));
        }
        Ok(DefiningFunction::Custom(Arc::new(field)))
    }

    pub fn domain_at(&self, h: f64) -> Result<Arc<GridDomain>, Failure> {
        let j = self.structure()?;
        let dom = grid_build(&self.defining_function()?, &self.bounding_box()?, h, &j)
            .map_err(|e| Failure::Config(format!("domain: {e}")))?;
        Ok(Arc::new(dom))
    }

    pub fn domain(&self) -> Result<Arc<GridDomain>, Failure> {
        self.domain_at(self.domain.h)
    }

    pub fn expr(&self, text: &str, what: &str) -> Result<Expr, Failure> {
        Expr::parse(text, self.structure.n).map_err(|e| Failure::Config(format!("{what}: {e}")))
    }

    pub fn f(&self) -> Result<Expr, Failure> {
        self.expr(&self.problem.f, "problem.f")
    }

    pub fn phi(&self) -> Result<SharedFn, Failure> {
        Ok(Arc::new(self.expr(&self.problem.phi, "problem.phi")?))
    }

    pub fn exact(&self) -> Result<Option<Expr>, Failure> {
        self.problem.exact.as_deref().map(|e| self.expr(e, "problem.exact")).transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
command = "solve"
[structure]
family = "standard"
n = 2
[domain]
rho = "ball"
h = 0.25
"#;

    #[test]
    fn defaults_fill_optional_sections() {
        let c = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.command, Command::Solve);
        assert_eq!(c.problem.f, "1");
        assert_eq!(c.maximal.schedule, DEFAULT_SCHEDULE.to_vec());
        assert_eq!(c.solver.build().unwrap().tol, 1e-8);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = MINIMAL.replace("h = 0.25", "h = 0.25\nspacing = 0.1");
        assert!(matches!(RunConfig::parse(&text), Err(Failure::Config(m)) if m.contains("spacing")));
        let text = format!("{MINIMAL}\n[solver]\ntolerance = 1e-6\n");
        assert!(matches!(RunConfig::parse(&text), Err(Failure::Config(_))));
    }

    #[test]
    fn missing_sections_are_rejected() {
        assert!(RunConfig::parse("command = \"solve\"").is_err());
        assert!(RunConfig::parse(&MINIMAL.replace("command = \"solve\"", "command = \"plot\"")).is_err());
    }

    #[test]
    fn ellipsoid_spec_is_parsed() {
        let c = RunConfig::parse(&MINIMAL.replace("\"ball\"", "\"ellipsoid(2, 1)\"")).unwrap();
        assert!(matches!(c.defining_function().unwrap(), DefiningFunction::Ellipsoid(a) if a == vec![2.0, 1.0]));
        let c = RunConfig::parse(&MINIMAL.replace("\"ball\"", "\"ellipsoid(2, -1)\"")).unwrap();
        assert!(c.defining_function().is_err());
    }

    #[test]
    fn packaged_configs_are_valid() {
        for text in [
            include_str!("../configs/ball.toml"),
            include_str!("../configs/sheared.toml"),
            include_str!("../configs/maximal.toml"),
            include_str!("../configs/bench.toml"),
            include_str!("../configs/disks.toml"),
        ] {
            let c = RunConfig::parse(text).unwrap();
            c.structure().unwrap();
            c.bounding_box().unwrap();
            c.defining_function().unwrap();
            c.phi().unwrap();
            c.exact().unwrap();
            c.expr(&c.disks.field, "field").unwrap();
        }
    }

    #[test]
    fn box_spec_must_be_consistent() {
        let c = RunConfig::parse(&MINIMAL.replace("h = 0.25", "h = 0.25\nbox_lo = [-1, -1]\nbox_hi = [1, 1]")).unwrap();
        assert!(c.bounding_box().is_err());
    }
}
