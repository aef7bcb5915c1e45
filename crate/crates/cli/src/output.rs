//! CSV, SVG and summary writers.

use std::fmt::Write as _;
use std::path::Path;

use sldsl_core::discretization::SpatialClass;
use sldsl_core::{sl_angle, GridFunction, LagrangianPath, NodeClass, SpaceTimeGrid};

use crate::CliError;

/// 17 significant digits, enough for an exact round trip.
pub fn fmt_csv(v: f64) -> String {
    format!("{:.16e}", v)
}

fn coord_header(n: usize) -> String {
    (1..=n).map(|k| format!(",x{k}")).collect()
}

/// Nodes of slice-major order resorted lexicographically by `(t, x1, x2, x3)`,
/// skipping nodes outside the domain.
pub fn lexicographic_nodes(grid: &SpaceTimeGrid) -> Vec<usize> {
    let mut spatial: Vec<usize> = (0..grid.n_spatial())
        .filter(|&s| grid.spatial_class(s) != SpatialClass::Outside)
        .collect();
    spatial.sort_by_key(|&s| grid.multi_index(s));
    (0..grid.nt())
        .flat_map(|ti| spatial.iter().map(move |&s| grid.index(ti, s)))
        .collect()
}

/// Spatial angle `tr arctan` of the slice Hessian at inside nodes.
pub fn sl_angle_field(problem: &sldsl_core::DirichletProblem, u: &GridFunction) -> GridFunction {
    let grid = problem.grid();
    let mut out = vec![f64::NAN; grid.len()];
    for ti in 0..grid.nt() {
        let slice = u.slice(grid, ti);
        for s in grid.inside_spatial() {
            if let Ok(b) = problem.frames().spatial_hessian(grid, slice, s) {
                out[grid.index(ti, s)] = sl_angle(&b);
            }
        }
    }
    GridFunction::new(out)
}

pub struct SolutionFields<'a> {
    pub u: &'a GridFunction,
    pub theta: &'a GridFunction,
    pub sl_angle: &'a GridFunction,
    pub residual: &'a GridFunction,
}

impl SolutionFields<'_> {
    pub fn get(&self, name: &str) -> Option<&GridFunction> {
        match name {
            "u" => Some(self.u),
            "theta" => Some(self.theta),
            "sl_angle" => Some(self.sl_angle),
            "residual" => Some(self.residual),
            _ => None,
        }
    }
}

pub fn solution_csv(grid: &SpaceTimeGrid, f: &SolutionFields) -> String {
    let mut s = format!("t{},u,theta,sl_angle,residual\n", coord_header(grid.n()));
    for idx in lexicographic_nodes(grid) {
        let p = grid.point(idx);
        let row: Vec<String> = p
            .iter()
            .copied()
            .chain([f.u.get(idx), f.theta.get(idx), f.sl_angle.get(idx), f.residual.get(idx)])
            .map(fmt_csv)
            .collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

/// Interior angle values with the singular-set flag.
pub fn angle_csv(grid: &SpaceTimeGrid, values: &[Option<sldsl_core::AngleValue>], c: f64) -> String {
    let mut s = format!("t{},theta_tilde,on_singular_set,margin\n", coord_header(grid.n()));
    for idx in lexicographic_nodes(grid) {
        if grid.class(idx) != NodeClass::Interior {
            continue;
        }
        let Some(v) = values[idx] else { continue };
        let mut row: Vec<String> = grid.point(idx).into_iter().map(fmt_csv).collect();
        row.push(fmt_csv(v.value));
        row.push(u8::from(v.on_singular_set).to_string());
        row.push(fmt_csv(v.value - c));
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

/// One row per slice and spatial node: potential, velocity, section
/// coordinates and positivity margin. Missing quantities are `NaN`.
pub fn path_csv(grid: &SpaceTimeGrid, path: &LagrangianPath) -> String {
    let n = grid.n();
    let ys: String = (1..=n).map(|k| format!(",y{k}")).collect();
    let mut s = format!("t{},f,velocity{ys},positivity\n", coord_header(n));
    for idx in lexicographic_nodes(grid) {
        let (ti, sp) = grid.split(idx);
        let mut row: Vec<f64> = grid.point(idx);
        row.push(path.slices[ti][sp]);
        row.push(path.velocity[ti][sp]);
        match &path.sections[ti][sp] {
            Some(y) => row.extend(y),
            None => row.extend(std::iter::repeat_n(f64::NAN, n)),
        }
        row.push(path.margins[ti][sp].unwrap_or(f64::NAN));
        let row: Vec<String> = row.into_iter().map(fmt_csv).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

/// Parses a CSV written by this module into its header and numeric rows.
pub fn read_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>), CliError> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::Input("empty csv".into()))?
        .split(',')
        .map(str::to_string)
        .collect::<Vec<_>>();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let row: Vec<f64> = line
            .split(',')
            .map(|t| t.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::Input(format!("csv row {}: {e}", i + 2)))?;
        if row.len() != header.len() {
            return Err(CliError::Input(format!("csv row {} has {} columns", i + 2, row.len())));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

// Piecewise-linear colormap from dark blue through teal to yellow.
const STOPS: [(f64, [u8; 3]); 5] = [
    (0.0, [48, 18, 59]),
    (0.25, [50, 101, 176]),
    (0.5, [39, 173, 129]),
    (0.75, [190, 210, 60]),
    (1.0, [250, 240, 40]),
];

fn color(v: f64, lo: f64, hi: f64) -> String {
    if !v.is_finite() {
        return "#bbbbbb".into();
    }
    let s = if hi > lo { ((v - lo) / (hi - lo)).clamp(0.0, 1.0) } else { 0.5 };
    let k = STOPS.iter().position(|(p, _)| *p >= s).unwrap_or(STOPS.len() - 1).max(1);
    let (p0, c0) = STOPS[k - 1];
    let (p1, c1) = STOPS[k];
    let w = (s - p0) / (p1 - p0);
    let mix = |a: u8, b: u8| (a as f64 + w * (b as f64 - a as f64)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(c0[0], c1[0]), mix(c0[1], c1[1]), mix(c0[2], c1[2]))
}

/// Heatmap of `values[row][col]`, row 0 drawn at the bottom.
pub fn heatmap_svg(title: &str, x_label: &str, y_label: &str, values: &[Vec<f64>]) -> String {
    const CELL: usize = 12;
    const MARGIN: usize = 40;
    let rows = values.len();
    let cols = values.first().map_or(0, Vec::len);
    let finite = values.iter().flatten().copied().filter(|v| v.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let (w, h) = (cols * CELL + 2 * MARGIN, rows * CELL + 2 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
    );
    let _ = writeln!(s, "<!-- sldsl {} -->", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "<text x=\"{MARGIN}\" y=\"{}\" font-size=\"12\">{title}</text>", MARGIN / 2);
    for (r, row) in values.iter().enumerate() {
        let y = MARGIN + (rows - 1 - r) * CELL;
        for (c, &v) in row.iter().enumerate() {
            let x = MARGIN + c * CELL;
            let _ = writeln!(
                s,
                "<rect x=\"{x}\" y=\"{y}\" width=\"{CELL}\" height=\"{CELL}\" fill=\"{}\"/>",
                color(v, lo, hi)
            );
        }
    }
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" font-size=\"10\">{x_label}</text>",
        MARGIN + cols * CELL / 2,
        h - MARGIN / 3
    );
    let _ = writeln!(
        s,
        "<text x=\"4\" y=\"{}\" font-size=\"10\">{y_label}</text>",
        MARGIN + rows * CELL / 2
    );
    let range = if lo <= hi { format!("min {lo:.6e} max {hi:.6e}") } else { "no finite values".into() };
    let _ = writeln!(s, "<text x=\"{MARGIN}\" y=\"{}\" font-size=\"10\">{range}</text>", h - 4);
    s.push_str("</svg>\n");
    s
}

/// Heatmaps of one field: a single `t`-`x` map for `n = 1`, one map per
/// time slice otherwise (at the middle `x3` section for `n = 3`).
pub fn field_svgs(grid: &SpaceTimeGrid, name: &str, f: &GridFunction) -> Vec<(String, String)> {
    let counts = grid.counts();
    let at = |ti: usize, m: &[usize]| f.get(grid.index(ti, grid.spatial_index(m)));
    match grid.n() {
        1 => {
            let values: Vec<Vec<f64>> = (0..grid.nt()).map(|ti| (0..counts[0]).map(|i| at(ti, &[i])).collect()).collect();
            vec![(format!("{name}.svg"), heatmap_svg(name, "x1", "t", &values))]
        }
        n => (0..grid.nt())
            .map(|ti| {
                let values: Vec<Vec<f64>> = (0..counts[1])
                    .map(|j| {
                        (0..counts[0])
                            .map(|i| if n == 2 { at(ti, &[i, j]) } else { at(ti, &[i, j, counts[2] / 2]) })
                            .collect()
                    })
                    .collect();
                let title = format!("{name} at t = {:.6}", grid.t(ti));
                (format!("{name}_t{ti:03}.svg"), heatmap_svg(&title, "x1", "x2", &values))
            })
            .collect(),
    }
}

/// Writes `key = value` lines.
pub fn summary_text(entries: &[(String, String)]) -> String {
    entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
}

pub fn parse_summary(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter_map(|l| l.split_once(" = "))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

pub fn write(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_float_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, f64::MAX, 5e-324, std::f64::consts::PI] {
            assert_eq!(fmt_csv(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
        assert!(fmt_csv(f64::NAN).parse::<f64>().unwrap().is_nan());
    }

    #[test]
    fn colormap_ends() {
        assert_eq!(color(0.0, 0.0, 1.0), "#30123b");
        assert_eq!(color(1.0, 0.0, 1.0), "#faf028");
        assert_eq!(color(f64::NAN, 0.0, 1.0), "#bbbbbb");
    }

    #[test]
    fn summary_round_trip() {
        let e = vec![("a".to_string(), "1".to_string()), ("b.c".to_string(), "x y".to_string())];
        assert_eq!(parse_summary(&summary_text(&e)), e);
    }
}
