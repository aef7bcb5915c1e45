use std::io::Write;
use std::path::Path;

use sldsl_core::angle::theta_hat_eigen;
use sldsl_core::discretization::angle_values;
use sldsl_core::geodesic::{export_path, geodesic_residual, sup_norm, DEFAULT_DEN_MIN};
use sldsl_core::linalg::principal_arg;
use sldsl_core::solver::{certify, solve, validate_data};
use sldsl_core::subequation::{
    dsl_dual_contains, dsl_on_boundary, dsl_verdict, sl_contains, sl_dual_contains, window_margin,
};
use sldsl_core::{theta_tilde, Branch, DirichletProblem, GridFunction, SolveReport, SymMatrix};

use crate::config::RunConfig;
use crate::output::{self, SolutionFields};
use crate::{fmt_f64, CliError, EXIT_NOT_CONVERGED, EXIT_OK, EXIT_UNCERTIFIED};

/// Largest tolerated `|a_ij - a_ji|` in matrix input.
pub const ASYMMETRY_TOL: f64 = 1e-12;

/// Parses `"a,b;c,d"`. Rows end at `;` or a newline, entries are separated
/// by commas or whitespace.
pub fn parse_matrix(src: &str) -> Result<SymMatrix, CliError> {
    let rows: Vec<Vec<f64>> = src
        .split([';', '\n'])
        .map(str::trim)
        .filter(|r| !r.is_empty() && !r.starts_with('#'))
        .map(|r| {
            r.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<f64>().map_err(|_| CliError::Input(format!("bad matrix entry `{t}`"))))
                .collect()
        })
        .collect::<Result<_, _>>()?;
    if rows.is_empty() || rows.iter().any(|r| r.len() != rows.len()) {
        return Err(CliError::Input(format!("matrix must be square, got {} rows", rows.len())));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(CliError::Input("matrix entries must be finite".into()));
    }
    SymMatrix::try_from_rows(&rows, ASYMMETRY_TOL).map_err(|e| CliError::Input(e.to_string()))
}

fn require_spacetime(a: &SymMatrix) -> Result<(), CliError> {
    if a.dim() < 2 {
        return Err(CliError::Input("space-time matrix needs n + 1 >= 2 rows".into()));
    }
    Ok(())
}

pub fn read_matrix(inline: Option<&str>, file: Option<&Path>) -> Result<SymMatrix, CliError> {
    match (inline, file) {
        (Some(m), None) => parse_matrix(m),
        (None, Some(p)) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            parse_matrix(&text)
        }
        _ => Err(CliError::Input("give exactly one of --matrix or --file".into())),
    }
}

pub fn cmd_angle(out: &mut impl Write, a: &SymMatrix, n: Option<usize>, tol_s: f64) -> Result<i32, CliError> {
    require_spacetime(a)?;
    if let Some(n) = n {
        if a.dim() != n + 1 {
            return Err(CliError::Input(format!("matrix is {0}x{0}, expected n + 1 = {1}", a.dim(), n + 1)));
        }
    }
    let v = theta_tilde(a, tol_s);
    if v.on_singular_set {
        writeln!(out, "theta_tilde = {}, S-branch", fmt_f64(v.value))?;
        writeln!(out, "sl_angle(B) = {}", fmt_f64(sldsl_core::sl_angle(&a.trailing_block())))?;
    } else {
        writeln!(out, "theta_tilde = {}, eigenvalue branch", fmt_f64(v.value))?;
        let (_, eig) = theta_hat_eigen(a, tol_s).map_err(|e| CliError::Input(e.to_string()))?;
        for (k, z) in eig.iter().enumerate() {
            writeln!(
                out,
                "lambda_{k} = {} {} {}i, arg = {}",
                fmt_f64(z.re),
                if z.im < 0.0 { "-" } else { "+" },
                fmt_f64(z.im.abs()),
                fmt_f64(principal_arg(*z))
            )?;
        }
    }
    Ok(EXIT_OK)
}

pub enum SubeqTarget {
    /// Space-time matrix against the DSL branch.
    Dsl { theta: f64, k: i64 },
    /// Spatial matrix against the special Lagrangian level `c`.
    Sl { c: f64 },
}

pub fn cmd_subeq(
    out: &mut impl Write,
    a: &SymMatrix,
    target: SubeqTarget,
    eps_int: f64,
    tol_s: f64,
) -> Result<i32, CliError> {
    match target {
        SubeqTarget::Dsl { theta, k } => {
            require_spacetime(a)?;
            let br = Branch::from_theta(theta, k, a.dim() - 1).map_err(|e| CliError::Input(e.to_string()))?;
            let v = dsl_verdict(a, &br, eps_int, tol_s);
            writeln!(out, "c = {}", fmt_f64(br.c))?;
            writeln!(out, "theta_tilde = {}", fmt_f64(theta_tilde(a, tol_s).value))?;
            writeln!(out, "margin = {}", fmt_f64(v.margin))?;
            writeln!(out, "contained = {}", v.contained)?;
            writeln!(out, "interior = {}", v.interior)?;
            writeln!(out, "on_boundary = {}", dsl_on_boundary(a, &br, eps_int, tol_s))?;
            writeln!(out, "dual_contains = {}", dsl_dual_contains(a, &br, eps_int, tol_s))?;
        }
        SubeqTarget::Sl { c } => {
            let v = sl_contains(a, c);
            writeln!(out, "sl_angle = {}", fmt_f64(sldsl_core::sl_angle(a)))?;
            writeln!(out, "margin = {}", fmt_f64(v.margin))?;
            writeln!(out, "contained = {}", v.contained)?;
            writeln!(out, "interior = {}", v.interior)?;
            writeln!(out, "dual_contains = {}", sl_dual_contains(a, c))?;
            writeln!(out, "window_margin = {}", fmt_f64(window_margin(a, c)))?;
        }
    }
    Ok(EXIT_OK)
}

fn kv(entries: &mut Vec<(String, String)>, k: &str, v: impl ToString) {
    entries.push((k.to_string(), v.to_string()));
}

fn run_solve(cfg: &RunConfig, level: u32) -> Result<(DirichletProblem, SolveReport), CliError> {
    let problem = cfg.problem_at_level(level)?;
    let report = solve(&problem, &cfg.solver)?;
    Ok((problem, report))
}

pub fn cmd_solve(out: &mut impl Write, config: &Path, out_dir: &Path, strict: bool) -> Result<i32, CliError> {
    let (cfg, warnings) = RunConfig::load(config, strict)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let problem = cfg.problem()?;
    let validation = validate_data(&problem).map_err(|e| CliError::config(0, "data", &e.to_string()))?;
    if !validation.hypothesis_two() {
        eprintln!(
            "warning: endpoint data violate the window hypotheses (min margin {:.3e})",
            validation.min_margin()
        );
    }
    let report = solve(&problem, &cfg.solver)?;
    let cert = certify(&report.solution, &problem, &cfg.solver);
    let grid = problem.grid();
    let c = problem.branch().c;
    let theta = problem.branch().theta;
    let u = &report.solution;

    let values = angle_values(grid, u, problem.frames(), cfg.solver.tol_s);
    let theta_field = GridFunction::new(values.iter().map(|v| v.map_or(f64::NAN, |a| a.value)).collect());
    let residual = theta_field.map(|v| v - c);
    let sl = output::sl_angle_field(&problem, u);
    let fields = SolutionFields {
        u,
        theta: &theta_field,
        sl_angle: &sl,
        residual: &residual,
    };
    let path = export_path(&problem, u, theta)?;
    let geo = sup_norm(&geodesic_residual(&problem, u, theta, DEFAULT_DEN_MIN)?);

    std::fs::create_dir_all(out_dir).map_err(|e| CliError::Io(format!("{}: {e}", out_dir.display())))?;
    output::write(out_dir, &cfg.output.solution, &output::solution_csv(grid, &fields))?;
    output::write(out_dir, &cfg.output.angle, &output::angle_csv(grid, &values, c))?;
    output::write(out_dir, &cfg.output.path, &output::path_csv(grid, &path))?;
    let mut svgs = 0;
    if cfg.output.svg {
        for name in &cfg.output.svg_fields {
            let f = fields.get(name).expect("validated at load");
            for (file, svg) in output::field_svgs(grid, name, f) {
                output::write(out_dir, &file, &svg)?;
                svgs += 1;
            }
        }
    }

    let code = if !report.converged {
        EXIT_NOT_CONVERGED
    } else if !cert.certified {
        EXIT_UNCERTIFIED
    } else {
        EXIT_OK
    };
    let mut e = Vec::new();
    kv(&mut e, "geometry", problem.geometry().label());
    kv(&mut e, "n", cfg.n);
    kv(&mut e, "theta", fmt_f64(theta));
    kv(&mut e, "c", fmt_f64(c));
    kv(&mut e, "grid", format!("{} x {:?}", grid.nt(), grid.counts()));
    kv(&mut e, "hypothesis_one", validation.hypothesis_one());
    kv(&mut e, "hypothesis_two", validation.hypothesis_two());
    kv(&mut e, "data_min_margin", fmt_f64(validation.min_margin()));
    kv(&mut e, "converged", report.converged);
    kv(&mut e, "iterations", report.iterations);
    kv(&mut e, "initial_residual", fmt_f64(report.initial_residual));
    kv(&mut e, "residual", fmt_f64(report.residual));
    kv(&mut e, "stats.nodes", report.stats.nodes);
    kv(&mut e, "stats.max_abs_dev", fmt_f64(report.stats.max_abs_dev));
    kv(&mut e, "stats.non_contained", report.stats.non_contained);
    kv(&mut e, "stats.singular_nodes", report.stats.singular_nodes);
    let min_window = report.window.iter().map(|w| w.min_margin).fold(f64::INFINITY, f64::min);
    kv(&mut e, "window.min_margin", fmt_f64(min_window));
    kv(&mut e, "window.violations", cert.window_violations);
    kv(&mut e, "certified", cert.certified);
    kv(&mut e, "certify.tol", fmt_f64(cert.tol));
    kv(&mut e, "certify.within_tol", format!("{}/{}", cert.within_tol, cert.nodes));
    kv(&mut e, "certify.on_boundary", format!("{}/{}", cert.on_boundary, cert.nodes));
    kv(&mut e, "certify.max_principle", cert.max_principle.ok());
    kv(&mut e, "geodesic_residual", fmt_f64(geo));
    kv(&mut e, "path.min_positivity", fmt_f64(path.min_margin()));
    kv(&mut e, "svg_files", svgs);
    kv(&mut e, "wall_clock_s", format!("{:.3}", report.wall_clock.as_secs_f64()));
    kv(&mut e, "exit_code", code);
    let summary = output::summary_text(&e);
    output::write(out_dir, &cfg.output.summary, &summary)?;
    out.write_all(summary.as_bytes())?;
    Ok(code)
}

/// Successive differences at or below this are rounding noise.
pub const EXACT_DIFF_TOL: f64 = 1e-12;

/// Sup difference between level `k` and `k + 1` on the nodes of level `k`.
pub fn restricted_diff(coarse: &DirichletProblem, uc: &GridFunction, fine: &DirichletProblem, uf: &GridFunction) -> f64 {
    let (gc, gf) = (coarse.grid(), fine.grid());
    let mut d = 0.0f64;
    for idx in 0..gc.len() {
        let (ti, s) = gc.split(idx);
        let m: Vec<usize> = gc.multi_index(s).iter().map(|i| 2 * i).collect();
        let a = uc.get(idx);
        let b = uf.get(gf.index(2 * ti, gf.spatial_index(&m)));
        if a.is_finite() && b.is_finite() {
            d = d.max((a - b).abs());
        }
    }
    d
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub level: u32,
    pub nodes: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
    pub residual: f64,
    pub geodesic_residual: f64,
    /// Difference to the previous level; `None` on level 0.
    pub diff: Option<f64>,
}

/// `log2` of successive difference ratios, or `None` when every difference
/// is at rounding level.
pub fn observed_orders(rows: &[ConvergenceRow]) -> Option<Vec<f64>> {
    let d: Vec<f64> = rows.iter().filter_map(|r| r.diff).collect();
    if d.iter().all(|&v| v <= EXACT_DIFF_TOL) {
        return None;
    }
    Some(d.windows(2).map(|w| (w[0] / w[1]).log2()).collect())
}

pub fn convergence_rows(cfg: &RunConfig, levels: u32) -> Result<Vec<ConvergenceRow>, CliError> {
    if levels < 3 {
        return Err(CliError::Input(format!("convergence needs at least 3 levels, got {levels}")));
    }
    let mut rows = Vec::new();
    let mut prev: Option<(DirichletProblem, GridFunction)> = None;
    for level in 0..levels {
        let (p, rep) = run_solve(cfg, level)?;
        let geo = sup_norm(&geodesic_residual(&p, &rep.solution, p.branch().theta, DEFAULT_DEN_MIN)?);
        let diff = prev.as_ref().map(|(pc, uc)| restricted_diff(pc, uc, &p, &rep.solution));
        let mut nodes = vec![p.grid().nt()];
        nodes.extend(p.grid().counts());
        rows.push(ConvergenceRow {
            level,
            nodes,
            iterations: rep.iterations,
            converged: rep.converged,
            residual: rep.residual,
            geodesic_residual: geo,
            diff,
        });
        prev = Some((p, rep.solution));
    }
    Ok(rows)
}

pub fn cmd_convergence(out: &mut impl Write, config: &Path, levels: u32, strict: bool) -> Result<i32, CliError> {
    let (cfg, warnings) = RunConfig::load(config, strict)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let rows = convergence_rows(&cfg, levels)?;
    writeln!(out, "level  nodes           sweeps    residual    geodesic    diff")?;
    for r in &rows {
        let nodes = r.nodes.iter().map(usize::to_string).collect::<Vec<_>>().join("x");
        let diff = r.diff.map_or("-".to_string(), |d| format!("{d:.3e}"));
        writeln!(
            out,
            "{:<6} {:<15} {:<9} {:<11.3e} {:<11.3e} {diff}",
            r.level, nodes, r.iterations, r.residual, r.geodesic_residual
        )?;
    }
    match observed_orders(&rows) {
        None => writeln!(out, "observed order: exact")?,
        Some(o) => {
            let o: Vec<String> = o.iter().map(|v| format!("{v:.3}")).collect();
            writeln!(out, "observed order: {}", o.join(", "))?;
        }
    }
    Ok(if rows.iter().all(|r| r.converged) { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

#[cfg(test)]
mod tests {
    use super::*;
    use sldsl_core::subequation::DEFAULT_EPS_INT;
    use sldsl_core::DEFAULT_TOL_S;

    fn run_angle(m: &str) -> String {
        let mut buf = Vec::new();
        cmd_angle(&mut buf, &parse_matrix(m).unwrap(), None, DEFAULT_TOL_S).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn angle_examples() {
        assert!(run_angle("0,0;0,0").starts_with("theta_tilde = 1.5707963267948966, S-branch"));
        assert!(run_angle("1,0;0,1").starts_with("theta_tilde = 2.356194490192345, eigenvalue branch"));
        assert!(run_angle("0,0.3;0.3,0").starts_with("theta_tilde = 0.0, eigenvalue branch"));
    }

    #[test]
    fn matrix_input_checks() {
        assert!(parse_matrix("1,2;2.0000000001,1").is_err());
        assert!(parse_matrix("1,2;2").is_err());
        let one = parse_matrix("1").unwrap();
        assert!(cmd_angle(&mut Vec::new(), &one, None, DEFAULT_TOL_S).is_err());
        assert!(parse_matrix("1,x;x,1").is_err());
        let m = parse_matrix("1 0.5\n0.5 2\n").unwrap();
        assert_eq!(m.get(0, 1), 0.5);
    }

    #[test]
    fn subeq_reports_dsl_and_sl() {
        let mut buf = Vec::new();
        let a = parse_matrix("1,0;0,1").unwrap();
        cmd_subeq(&mut buf, &a, SubeqTarget::Dsl { theta: 0.0, k: 0 }, DEFAULT_EPS_INT, DEFAULT_TOL_S).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.contains("contained = true") && s.contains("interior = true"));
        let mut buf = Vec::new();
        cmd_subeq(&mut buf, &a, SubeqTarget::Sl { c: 0.0 }, DEFAULT_EPS_INT, DEFAULT_TOL_S).unwrap();
        assert!(String::from_utf8(buf).unwrap().contains("sl_angle = 1.5707963267948966"));
    }

    #[test]
    fn orders_from_differences() {
        let row = |d: Option<f64>| ConvergenceRow {
            level: 0,
            nodes: vec![],
            iterations: 0,
            converged: true,
            residual: 0.0,
            geodesic_residual: 0.0,
            diff: d,
        };
        let rows = [row(None), row(Some(0.0)), row(Some(1e-15))];
        assert_eq!(observed_orders(&rows), None);
        let rows = [row(None), row(Some(0.4)), row(Some(0.1))];
        assert_eq!(observed_orders(&rows), Some(vec![2.0]));
    }
}
