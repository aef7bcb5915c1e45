//! INI-style run configuration.
//!
//! ```text
//! [problem]   theta, k, n
//! [geometry]  kind = euclidean | hyperbolic_half_plane | semi_flat,
//!             potential, chart_lo, chart_hi, tol_ma
//! [domain]    kind = box | ball, lo, hi | center, radius
//! [grid]      nt, nodes
//! [data]      phi0, phi1
//! [solver]    SolverParams fields
//! [output]    solution, angle, path, summary, svg, svg_fields
//! ```

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use sldsl_core::{
    build_grid, euclidean, hyperbolic_half_plane, semi_flat_from_potential, Branch, ChartBox, ChartGeometry,
    DirichletProblem, DomainSpec, Expr, ExprPotential, InitMode, ScalarField, SolverParams,
};

use crate::CliError;

const SECTIONS: &[(&str, &[&str])] = &[
    ("problem", &["theta", "k", "n"]),
    ("geometry", &["kind", "potential", "chart_lo", "chart_hi", "tol_ma"]),
    ("domain", &["kind", "lo", "hi", "center", "radius"]),
    ("grid", &["nt", "nodes"]),
    ("data", &["phi0", "phi1"]),
    (
        "solver",
        &["tau_factor", "tol_res", "max_iter", "eps_int", "tol_s", "init_mode", "jacobi_damping"],
    ),
    ("output", &["solution", "angle", "path", "summary", "svg", "svg_fields"]),
];

/// A value together with the line it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub value: String,
    pub line: usize,
}

/// Raw `section.key -> value` map.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Ini {
    entries: BTreeMap<(String, String), Entry>,
    pub warnings: Vec<String>,
}

impl Ini {
    /// Parses INI text. In strict mode unknown sections or keys are errors;
    /// otherwise they are collected as warnings.
    pub fn parse(text: &str, strict: bool) -> Result<Ini, CliError> {
        let mut ini = Ini::default();
        let mut section: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let s = strip_comment(raw).trim();
            if s.is_empty() {
                continue;
            }
            if let Some(rest) = s.strip_prefix('[') {
                let Some(name) = rest.strip_suffix(']') else {
                    return Err(CliError::config(line, "", "unterminated section header"));
                };
                let name = name.trim().to_string();
                if !SECTIONS.iter().any(|(n, _)| *n == name) {
                    let msg = format!("unknown section [{name}]");
                    if strict {
                        return Err(CliError::config(line, &name, &msg));
                    }
                    ini.warnings.push(format!("line {line}: {msg}"));
                }
                section = Some(name);
                continue;
            }
            let Some((k, v)) = s.split_once('=') else {
                return Err(CliError::config(line, "", "expected `key = value`"));
            };
            let Some(sec) = section.clone() else {
                return Err(CliError::config(line, k.trim(), "key outside of any section"));
            };
            let key = k.trim().to_string();
            let known = SECTIONS
                .iter()
                .find(|(n, _)| *n == sec)
                .is_some_and(|(_, keys)| keys.contains(&key.as_str()));
            if !known {
                let msg = format!("unknown key `{key}` in [{sec}]");
                if strict {
                    return Err(CliError::config(line, &key, &msg));
                }
                ini.warnings.push(format!("line {line}: {msg}"));
                continue;
            }
            let value = unquote(v.trim()).to_string();
            if ini.entries.insert((sec.clone(), key.clone()), Entry { value, line }).is_some() {
                return Err(CliError::config(line, &key, &format!("duplicate key `{key}` in [{sec}]")));
            }
        }
        Ok(ini)
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&Entry> {
        self.entries.get(&(section.to_string(), key.to_string()))
    }

    fn require(&self, section: &str, key: &str) -> Result<&Entry, CliError> {
        self.get(section, key)
            .ok_or_else(|| CliError::config(0, key, &format!("missing `{key}` in [{section}]")))
    }

    fn parse_opt<T: std::str::FromStr>(&self, section: &str, key: &str) -> Result<Option<T>, CliError> {
        match self.get(section, key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse()
                .map(Some)
                .map_err(|_| CliError::config(e.line, key, &format!("cannot parse `{}`", e.value))),
        }
    }

    fn parse_req<T: std::str::FromStr>(&self, section: &str, key: &str) -> Result<T, CliError> {
        self.require(section, key)?;
        Ok(self.parse_opt(section, key)?.expect("checked"))
    }

    fn list(&self, section: &str, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        let Some(e) = self.get(section, key) else { return Ok(None) };
        parse_list(&e.value)
            .map(Some)
            .ok_or_else(|| CliError::config(e.line, key, &format!("cannot parse list `{}`", e.value)))
    }
}

fn strip_comment(s: &str) -> &str {
    let cut = s.find(['#', ';']).unwrap_or(s.len());
    &s[..cut]
}

fn unquote(s: &str) -> &str {
    s.strip_prefix('"').and_then(|r| r.strip_suffix('"')).unwrap_or(s)
}

/// Comma- or whitespace-separated numbers.
pub fn parse_list(s: &str) -> Option<Vec<f64>> {
    let v: Result<Vec<f64>, _> = s
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(str::parse)
        .collect();
    v.ok().filter(|v| !v.is_empty())
}

#[derive(Debug, Clone, PartialEq)]
pub enum GeometryKind {
    Euclidean,
    HyperbolicHalfPlane,
    SemiFlat { potential: String, chart: ChartBox, tol_ma: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub solution: String,
    pub angle: String,
    pub path: String,
    pub summary: String,
    pub svg: bool,
    pub svg_fields: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub theta: f64,
    pub k: i64,
    pub n: usize,
    pub geometry: GeometryKind,
    pub domain: DomainSpec,
    pub nt: usize,
    pub nodes: Vec<usize>,
    pub phi0: String,
    pub phi1: String,
    pub solver: SolverParams,
    pub output: OutputSpec,
}

/// A number or a closed-form constant such as `3*pi/4`.
pub fn constant_expr(src: &str) -> Option<f64> {
    if let Ok(v) = src.parse() {
        return Some(v);
    }
    let e = Expr::parse(src).ok().filter(|e| e.arity() == 0)?;
    Some(e.eval(&[])).filter(|v| v.is_finite())
}

fn expr_field(src: &str, n: usize, key: &str, line: usize) -> Result<Expr, CliError> {
    let e = Expr::parse(src).map_err(|err| CliError::config(line, key, &err.to_string()))?;
    if e.arity() > n {
        return Err(CliError::config(line, key, &format!("uses x{} but n = {n}", e.arity())));
    }
    Ok(e)
}

impl RunConfig {
    pub fn load(path: &Path, strict: bool) -> Result<(RunConfig, Vec<String>), CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let ini = Ini::parse(&text, strict)?;
        let cfg = RunConfig::from_ini(&ini)?;
        Ok((cfg, ini.warnings))
    }

    pub fn from_ini(ini: &Ini) -> Result<RunConfig, CliError> {
        let th = ini.require("problem", "theta")?;
        let theta = constant_expr(&th.value).ok_or_else(|| CliError::config(th.line, "theta", &format!("cannot parse `{}`", th.value)))?;
        let k: i64 = ini.parse_opt("problem", "k")?.unwrap_or(0);
        let n: usize = ini.parse_req("problem", "n")?;
        if !(1..=3).contains(&n) {
            return Err(CliError::config(ini.require("problem", "n")?.line, "n", "n must be 1, 2 or 3"));
        }
        Branch::from_theta(theta, k, n).map_err(|e| CliError::config(th.line, "theta", &e.to_string()))?;

        let kind = ini.get("geometry", "kind").map_or("euclidean", |e| e.value.as_str());
        let geometry = match kind {
            "euclidean" => GeometryKind::Euclidean,
            "hyperbolic_half_plane" => {
                if n != 2 {
                    return Err(CliError::config(ini.require("geometry", "kind")?.line, "kind", "hyperbolic_half_plane needs n = 2"));
                }
                GeometryKind::HyperbolicHalfPlane
            }
            "semi_flat" => {
                let pot = ini.require("geometry", "potential")?;
                expr_field(&pot.value, n, "potential", pot.line)?;
                let lo = ini.list("geometry", "chart_lo")?;
                let hi = ini.list("geometry", "chart_hi")?;
                let (lo, hi) = match (lo, hi) {
                    (Some(lo), Some(hi)) => (lo, hi),
                    _ => return Err(CliError::config(pot.line, "chart_lo", "semi_flat needs chart_lo and chart_hi")),
                };
                if lo.len() != n || hi.len() != n {
                    return Err(CliError::config(pot.line, "chart_lo", "chart bounds must have n entries"));
                }
                GeometryKind::SemiFlat {
                    potential: pot.value.clone(),
                    chart: ChartBox::new(lo, hi),
                    tol_ma: ini.parse_opt("geometry", "tol_ma")?.unwrap_or(1e-8),
                }
            }
            other => {
                return Err(CliError::config(
                    ini.require("geometry", "kind")?.line,
                    "kind",
                    &format!("unknown geometry `{other}`"),
                ))
            }
        };

        let dkind = ini.require("domain", "kind")?;
        let domain = match dkind.value.as_str() {
            "box" => {
                let lo = ini.list("domain", "lo")?.ok_or_else(|| CliError::config(dkind.line, "lo", "box needs lo"))?;
                let hi = ini.list("domain", "hi")?.ok_or_else(|| CliError::config(dkind.line, "hi", "box needs hi"))?;
                if lo.len() != n || hi.len() != n || lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
                    return Err(CliError::config(dkind.line, "lo", "box bounds must have n entries with lo < hi"));
                }
                DomainSpec::Box { lo, hi }
            }
            "ball" => {
                let center = ini
                    .list("domain", "center")?
                    .ok_or_else(|| CliError::config(dkind.line, "center", "ball needs center"))?;
                let radius: f64 = ini.parse_req("domain", "radius")?;
                if center.len() != n || !(radius > 0.0) {
                    return Err(CliError::config(dkind.line, "center", "ball needs n center entries and radius > 0"));
                }
                DomainSpec::Ball { center, radius }
            }
            other => return Err(CliError::config(dkind.line, "kind", &format!("unknown domain `{other}`"))),
        };

        let nt: usize = ini.parse_req("grid", "nt")?;
        let nodes_entry = ini.require("grid", "nodes")?;
        let nodes: Vec<usize> = nodes_entry
            .value
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|_| CliError::config(nodes_entry.line, "nodes", "nodes must be integers"))?;
        if nodes.len() != n {
            return Err(CliError::config(nodes_entry.line, "nodes", "nodes must have n entries"));
        }

        let p0 = ini.require("data", "phi0")?;
        let p1 = ini.require("data", "phi1")?;
        expr_field(&p0.value, n, "phi0", p0.line)?;
        expr_field(&p1.value, n, "phi1", p1.line)?;

        let mut solver = SolverParams::default();
        if let Some(v) = ini.parse_opt("solver", "tau_factor")? {
            solver.tau_factor = v;
        }
        if let Some(v) = ini.parse_opt("solver", "tol_res")? {
            solver.tol_res = v;
        }
        if let Some(v) = ini.parse_opt("solver", "max_iter")? {
            solver.max_iter = v;
        }
        if let Some(v) = ini.parse_opt("solver", "eps_int")? {
            solver.eps_int = v;
        }
        if let Some(v) = ini.parse_opt("solver", "tol_s")? {
            solver.tol_s = v;
        }
        if let Some(v) = ini.parse_opt("solver", "jacobi_damping")? {
            solver.jacobi_damping = v;
        }
        if let Some(e) = ini.get("solver", "init_mode") {
            solver.init_mode = match e.value.as_str() {
                "linear" | "linear_interp" => InitMode::LinearInterp,
                "perron" | "perron_subsolution" => InitMode::PerronSubsolution,
                other => return Err(CliError::config(e.line, "init_mode", &format!("unknown init_mode `{other}`"))),
            };
        }
        solver
            .validate()
            .map_err(|e| CliError::config(0, "solver", &e.to_string()))?;

        let text = |key: &str, default: &str| ini.get("output", key).map_or(default.to_string(), |e| e.value.clone());
        let svg = match ini.get("output", "svg") {
            None => false,
            Some(e) => e
                .value
                .parse()
                .map_err(|_| CliError::config(e.line, "svg", "svg must be true or false"))?,
        };
        let svg_fields: Vec<String> = text("svg_fields", "u,theta")
            .split(',')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect();
        for f in &svg_fields {
            if !["u", "theta", "sl_angle", "residual"].contains(&f.as_str()) {
                let line = ini.get("output", "svg_fields").map_or(0, |e| e.line);
                return Err(CliError::config(line, "svg_fields", &format!("unknown field `{f}`")));
            }
        }
        let output = OutputSpec {
            solution: text("solution", "solution.csv"),
            angle: text("angle", "angle.csv"),
            path: text("path", "path.csv"),
            summary: text("summary", "summary.txt"),
            svg,
            svg_fields,
        };

        Ok(RunConfig {
            theta,
            k,
            n,
            geometry,
            domain,
            nt,
            nodes,
            phi0: p0.value.clone(),
            phi1: p1.value.clone(),
            solver,
            output,
        })
    }

    pub fn branch(&self) -> Branch {
        Branch::from_theta(self.theta, self.k, self.n).expect("validated at load")
    }

    pub fn geometry(&self) -> Result<Arc<dyn ChartGeometry>, CliError> {
        Ok(match &self.geometry {
            GeometryKind::Euclidean => Arc::new(euclidean(self.n)),
            GeometryKind::HyperbolicHalfPlane => Arc::new(hyperbolic_half_plane()),
            GeometryKind::SemiFlat { potential, chart, tol_ma } => {
                let phi = ExprPotential::parse(potential, self.n).map_err(|e| CliError::config(0, "potential", &e.to_string()))?;
                Arc::new(
                    semi_flat_from_potential(Arc::new(phi), chart.clone(), *tol_ma)
                        .map_err(|e| CliError::config(0, "potential", &e.to_string()))?,
                )
            }
        })
    }

    /// Builds the Dirichlet problem, with grid counts scaled for refinement
    /// level `level` (`(m - 1) 2^level + 1` nodes per axis).
    pub fn problem_at_level(&self, level: u32) -> Result<DirichletProblem, CliError> {
        let refine = |m: usize| (m - 1) * 2usize.pow(level) + 1;
        let nodes: Vec<usize> = self.nodes.iter().map(|&m| refine(m)).collect();
        let grid = build_grid(&self.domain, refine(self.nt), &nodes).map_err(|e| CliError::config(0, "grid", &e.to_string()))?;
        let field = |src: &str| -> ScalarField {
            let e = Expr::parse(src).expect("validated at load");
            Arc::new(move |x: &[f64]| e.eval(x))
        };
        DirichletProblem::new(self.geometry()?, grid, self.branch(), field(&self.phi0), field(&self.phi1))
            .map_err(|e| CliError::config(0, "problem", &e.to_string()))
    }

    pub fn problem(&self) -> Result<DirichletProblem, CliError> {
        self.problem_at_level(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = "\
[problem]
theta = 0
n = 1
[domain]
kind = box
lo = -1
hi = 1
[grid]
nt = 9
nodes = 9
[data]
phi0 = 0
phi1 = \"0.3*x1\"   # exact tx solution
";

    #[test]
    fn parses_basic_config() {
        let ini = Ini::parse(BASIC, true).unwrap();
        let cfg = RunConfig::from_ini(&ini).unwrap();
        assert_eq!(cfg.n, 1);
        assert_eq!(cfg.phi1, "0.3*x1");
        assert_eq!(cfg.geometry, GeometryKind::Euclidean);
        assert_eq!(cfg.output.solution, "solution.csv");
        assert!(cfg.problem().is_ok());
    }

    #[test]
    fn strict_mode_rejects_unknown_keys() {
        let text = BASIC.replace("nt = 9", "nt = 9\ntol_res = 1e-3");
        match Ini::parse(&text, true) {
            Err(CliError::Config { line, key, .. }) => {
                assert_eq!(line, 10);
                assert_eq!(key, "tol_res");
            }
            other => panic!("{other:?}"),
        }
        let ini = Ini::parse(&text, false).unwrap();
        assert_eq!(ini.warnings.len(), 1);
    }

    #[test]
    fn rejects_out_of_range_branch_and_bad_data() {
        let text = BASIC.replace("theta = 0", "theta = 0\nk = 1");
        assert!(RunConfig::from_ini(&Ini::parse(&text, true).unwrap()).is_err());
        let text = BASIC.replace("phi0 = 0", "phi0 = x2");
        assert!(RunConfig::from_ini(&Ini::parse(&text, true).unwrap()).is_err());
        let text = BASIC.replace("phi0 = 0", "phi0 = sin(");
        assert!(RunConfig::from_ini(&Ini::parse(&text, true).unwrap()).is_err());
    }

    #[test]
    fn duplicate_and_orphan_keys() {
        assert!(Ini::parse("theta = 1", true).is_err());
        assert!(Ini::parse("[problem]\ntheta = 1\ntheta = 2", true).is_err());
        assert!(Ini::parse("[problem\n", true).is_err());
    }

    #[test]
    fn theta_accepts_constant_expressions() {
        assert_eq!(constant_expr("3*pi/4"), Some(3.0 * std::f64::consts::PI / 4.0));
        assert_eq!(constant_expr("0.5"), Some(0.5));
        assert_eq!(constant_expr("x1"), None);
    }

    #[test]
    fn list_parsing() {
        assert_eq!(parse_list("1, 2 3"), Some(vec![1.0, 2.0, 3.0]));
        assert_eq!(parse_list(""), None);
        assert_eq!(parse_list("a"), None);
    }
}
