//! Output files and their readers: error and interface tables (CSV), the
//! approximating-plane patches (OBJ) and nodal fields (legacy VTK).

use std::collections::BTreeMap;
use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Side;
use crate::ife::IfeSpace;
use crate::mesh::Mesh;
use crate::problems::Problem;
use crate::quadrature::cross_section;
use crate::runner::{InterfaceStats, ProbeRow, SweepResult, SweepRow};
use crate::Point;

/// One line of `errors.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    #[serde(rename = "N")]
    pub n: usize,
    pub h: f64,
    pub e_inf: f64,
    pub e_0: f64,
    pub e_1: f64,
    pub e_energy: Option<f64>,
    pub assembly_s: f64,
    pub solve_s: f64,
    pub interface_element_pct: f64,
}

impl From<&SweepRow> for ErrorRecord {
    fn from(r: &SweepRow) -> Self {
        Self {
            n: r.report.n,
            h: r.report.h,
            e_inf: r.report.e_inf,
            e_0: r.report.e_0,
            e_1: r.report.e_1,
            e_energy: r.report.e_energy,
            assembly_s: r.assembly_s,
            solve_s: r.solve_s,
            interface_element_pct: r.interface_element_pct,
        }
    }
}

/// One line of `stats.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsRecord {
    #[serde(rename = "N")]
    pub n: usize,
    pub h: f64,
    pub elements: usize,
    pub interface_elements: usize,
    pub interface_fraction: f64,
    pub non_interface_minus: usize,
    pub non_interface_plus: usize,
    pub type_i: usize,
    pub type_ii: usize,
    pub type_iii: usize,
    pub type_iv: usize,
    pub type_v: usize,
}

impl From<&InterfaceStats> for StatsRecord {
    fn from(s: &InterfaceStats) -> Self {
        let k = s.by_kind;
        Self {
            n: s.n,
            h: s.h,
            elements: s.elements,
            interface_elements: s.interface_elements,
            interface_fraction: s.interface_fraction,
            non_interface_minus: k[0],
            non_interface_plus: k[1],
            type_i: k[2],
            type_ii: k[3],
            type_iii: k[4],
            type_iv: k[5],
            type_v: k[6],
        }
    }
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::invalid(format!("csv: {other:?}")),
    }
}

fn write_records<T: Serialize>(out: impl Write, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn read_records<T: for<'de> Deserialize<'de>>(input: impl Read) -> Result<Vec<T>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|r| r.map_err(csv_error))
        .collect()
}

pub fn write_errors_csv(out: impl Write, rows: &[ErrorRecord]) -> Result<()> {
    write_records(out, rows)
}

pub fn read_errors_csv(input: impl Read) -> Result<Vec<ErrorRecord>> {
    read_records(input)
}

pub fn write_stats_csv(out: impl Write, rows: &[StatsRecord]) -> Result<()> {
    write_records(out, rows)
}

pub fn read_stats_csv(input: impl Read) -> Result<Vec<StatsRecord>> {
    read_records(input)
}

/// One line of `probes.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRecord {
    #[serde(rename = "N")]
    pub n: usize,
    pub h: f64,
    pub elements: usize,
    pub trace: f64,
    pub inverse: f64,
    pub interface_jump: f64,
}

impl From<&ProbeRow> for ProbeRecord {
    fn from(r: &ProbeRow) -> Self {
        Self {
            n: r.n,
            h: r.h,
            elements: r.elements,
            trace: r.trace,
            inverse: r.inverse,
            interface_jump: r.interface_jump,
        }
    }
}

pub fn write_probes_csv(out: impl Write, rows: &[ProbeRecord]) -> Result<()> {
    write_records(out, rows)
}

pub fn read_probes_csv(input: impl Read) -> Result<Vec<ProbeRecord>> {
    read_records(input)
}

/// Triangle soup.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
}

impl TriangleMesh {
    pub fn area(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                let [a, b, c] = t.map(|i| self.vertices[i]);
                0.5 * (b - a).cross(&(c - a)).norm()
            })
            .sum()
    }
}

/// The approximating-plane patches of all interface elements, each polygon
/// fanned into triangles.
pub fn plane_patches(space: &IfeSpace) -> TriangleMesh {
    let mut m = TriangleMesh::default();
    for e in space.interface_elements() {
        let cut = &space.cuts[e];
        let Some(plane) = cut.plane.as_ref() else {
            continue;
        };
        let poly = cross_section(&cut.frame, plane);
        if poly.len() < 3 {
            continue;
        }
        let base = m.vertices.len();
        m.vertices.extend(&poly);
        for i in 1..poly.len() - 1 {
            m.triangles.push([base, base + i, base + i + 1]);
        }
    }
    m
}

pub fn write_obj(mut out: impl Write, mesh: &TriangleMesh) -> Result<()> {
    writeln!(out, "# approximating-plane patches of interface elements")?;
    for v in &mesh.vertices {
        writeln!(out, "v {} {} {}", v.x, v.y, v.z)?;
    }
    for t in &mesh.triangles {
        writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
    }
    Ok(())
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: "<input>".into(),
        line,
        message: message.into(),
    }
}

/// Reads `v` and triangular `f` records; other records are ignored.
pub fn read_obj(input: impl BufRead) -> Result<TriangleMesh> {
    let mut m = TriangleMesh::default();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let c: Vec<f64> = it
                    .map(|t| {
                        t.parse::<f64>()
                            .map_err(|e| parse_err(i + 1, e.to_string()))
                    })
                    .collect::<Result<_>>()?;
                if c.len() != 3 {
                    return Err(parse_err(i + 1, "vertex needs 3 coordinates"));
                }
                m.vertices.push(Point::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let idx: Vec<usize> = it
                    .map(|t| {
                        let first = t.split('/').next().unwrap_or(t);
                        first
                            .parse::<usize>()
                            .ok()
                            .filter(|&k| k >= 1)
                            .map(|k| k - 1)
                            .ok_or_else(|| parse_err(i + 1, format!("bad vertex index `{t}`")))
                    })
                    .collect::<Result<_>>()?;
                if idx.len() != 3 {
                    return Err(parse_err(i + 1, "only triangles are supported"));
                }
                m.triangles.push([idx[0], idx[1], idx[2]]);
            }
            _ => {}
        }
    }
    if let Some(bad) = m
        .triangles
        .iter()
        .flatten()
        .find(|&&k| k >= m.vertices.len())
    {
        return Err(parse_err(
            0,
            format!("vertex index {} out of range", bad + 1),
        ));
    }
    Ok(m)
}

/// Nodal scalar fields on a structured grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub dims: [usize; 3],
    pub origin: Point,
    pub spacing: Point,
    /// Named point-data arrays in file order, x index fastest.
    pub scalars: Vec<(String, Vec<f64>)>,
}

impl GridField {
    pub fn from_mesh(mesh: &Mesh) -> Self {
        Self {
            dims: mesh.node_dims(),
            origin: mesh.domain().lo,
            spacing: mesh.spacing(),
            scalars: Vec::new(),
        }
    }

    pub fn with(mut self, name: &str, values: Vec<f64>) -> Self {
        self.scalars.push((name.to_string(), values));
        self
    }

    pub fn get(&self, name: &str) -> Option<&[f64]> {
        self.scalars
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }
}

/// Legacy ASCII VTK, `STRUCTURED_POINTS` with `POINT_DATA` scalars.
pub fn write_vtk(mut out: impl Write, field: &GridField, title: &str) -> Result<()> {
    let npts: usize = field.dims.iter().product();
    for (name, v) in &field.scalars {
        if v.len() != npts {
            return Err(Error::invalid(format!(
                "field `{name}` has {} values for {npts} points",
                v.len()
            )));
        }
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(Error::invalid(format!("bad field name `{name}`")));
        }
    }
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "{}", title.lines().next().unwrap_or(""))?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET STRUCTURED_POINTS")?;
    let [nx, ny, nz] = field.dims;
    writeln!(out, "DIMENSIONS {nx} {ny} {nz}")?;
    let (o, s) = (field.origin, field.spacing);
    writeln!(out, "ORIGIN {} {} {}", o.x, o.y, o.z)?;
    writeln!(out, "SPACING {} {} {}", s.x, s.y, s.z)?;
    writeln!(out, "POINT_DATA {npts}")?;
    for (name, v) in &field.scalars {
        writeln!(out, "SCALARS {name} double 1")?;
        writeln!(out, "LOOKUP_TABLE default")?;
        for x in v {
            writeln!(out, "{x}")?;
        }
    }
    Ok(())
}

/// Reads files written by [`write_vtk`] (any whitespace layout of the
/// values is accepted).
pub fn read_vtk(mut input: impl Read) -> Result<GridField> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let mut lines = text.lines().enumerate();
    let mut next_line = |what: &str| {
        lines
            .next()
            .ok_or_else(|| parse_err(0, format!("unexpected end of file, expected {what}")))
    };
    let (l, head) = next_line("header")?;
    if !head.starts_with("# vtk DataFile") {
        return Err(parse_err(l + 1, "not a legacy VTK file"));
    }
    next_line("title")?;
    let (l, fmt) = next_line("format")?;
    if fmt.trim() != "ASCII" {
        return Err(parse_err(l + 1, "only ASCII files are supported"));
    }
    let mut keyed: BTreeMap<String, (usize, Vec<String>)> = BTreeMap::new();
    let mut scalars = Vec::new();
    let mut npts = None;
    let rest: Vec<(usize, &str)> = std::iter::from_fn(|| next_line("").ok()).collect();
    let mut i = 0;
    while i < rest.len() {
        let (l, line) = rest[i];
        let toks: Vec<&str> = line.split_whitespace().collect();
        i += 1;
        let Some(&key) = toks.first() else { continue };
        match key {
            "DATASET" => {
                if toks.get(1) != Some(&"STRUCTURED_POINTS") {
                    return Err(parse_err(l + 1, "only STRUCTURED_POINTS is supported"));
                }
            }
            "DIMENSIONS" | "ORIGIN" | "SPACING" => {
                keyed.insert(
                    key.into(),
                    (l + 1, toks[1..].iter().map(|s| s.to_string()).collect()),
                );
            }
            "POINT_DATA" => {
                npts = Some(
                    toks.get(1)
                        .and_then(|t| t.parse::<usize>().ok())
                        .ok_or_else(|| parse_err(l + 1, "bad POINT_DATA count"))?,
                );
            }
            "SCALARS" => {
                let name = toks
                    .get(1)
                    .ok_or_else(|| parse_err(l + 1, "SCALARS without a name"))?;
                let n = npts.ok_or_else(|| parse_err(l + 1, "SCALARS before POINT_DATA"))?;
                if rest
                    .get(i)
                    .map(|(_, s)| s.trim_start().starts_with("LOOKUP_TABLE"))
                    == Some(true)
                {
                    i += 1;
                }
                let mut values = Vec::with_capacity(n);
                while values.len() < n {
                    let (vl, vline) = *rest
                        .get(i)
                        .ok_or_else(|| parse_err(0, format!("field `{name}` is truncated")))?;
                    i += 1;
                    for t in vline.split_whitespace() {
                        values.push(
                            t.parse::<f64>()
                                .map_err(|e| parse_err(vl + 1, e.to_string()))?,
                        );
                    }
                }
                if values.len() != n {
                    return Err(parse_err(
                        0,
                        format!("field `{name}` has {} values", values.len()),
                    ));
                }
                scalars.push((name.to_string(), values));
            }
            _ => return Err(parse_err(l + 1, format!("unexpected record `{key}`"))),
        }
    }
    let triple = |key: &str| -> Result<Vec<String>> {
        keyed
            .get(key)
            .map(|(_, v)| v.clone())
            .filter(|v| v.len() == 3)
            .ok_or_else(|| parse_err(0, format!("missing or malformed {key}")))
    };
    let d: Vec<usize> = triple("DIMENSIONS")?
        .iter()
        .map(|t| t.parse().map_err(|_| parse_err(0, "bad DIMENSIONS")))
        .collect::<Result<_>>()?;
    let f = |key: &str| -> Result<Point> {
        let v: Vec<f64> = triple(key)?
            .iter()
            .map(|t| t.parse().map_err(|_| parse_err(0, format!("bad {key}"))))
            .collect::<Result<_>>()?;
        Ok(Point::new(v[0], v[1], v[2]))
    };
    let dims = [d[0], d[1], d[2]];
    if let Some(n) = npts {
        if n != dims.iter().product::<usize>() {
            return Err(parse_err(0, "POINT_DATA count does not match DIMENSIONS"));
        }
    }
    Ok(GridField {
        dims,
        origin: f("ORIGIN")?,
        spacing: f("SPACING")?,
        scalars,
    })
}

fn create(dir: &std::path::Path, name: &str) -> Result<std::io::BufWriter<std::fs::File>> {
    Ok(std::io::BufWriter::new(std::fs::File::create(
        dir.join(name),
    )?))
}

/// Nodal fields of the finest solution: `u_h`, `level_set` and, with an
/// exact solution, `exact` and `error = u_h - exact`.
pub fn solution_field(result: &SweepResult, problem: &Problem) -> GridField {
    let fine = &result.finest;
    let mesh = &fine.space.mesh;
    let nodes: Vec<Point> = (0..mesh.num_nodes()).map(|n| mesh.node_point(n)).collect();
    let ls: Vec<f64> = nodes.iter().map(|x| fine.level_set.value(x)).collect();
    let mut field = GridField::from_mesh(mesh)
        .with("u_h", fine.coeffs.clone())
        .with("level_set", ls.clone());
    if let Some(exact) = &problem.exact {
        let snap = crate::assembly::snap_tolerance(&fine.space);
        let u: Vec<f64> = nodes
            .iter()
            .zip(&ls)
            .map(|(x, &v)| exact(x, Side::of(v, snap)).0)
            .collect();
        let err = fine.coeffs.iter().zip(&u).map(|(a, b)| a - b).collect();
        field = field.with("exact", u).with("error", err);
    }
    field
}

/// Writes `errors.csv`, `stats.csv`, `tau.obj` and `solution.vtk` into `dir`.
pub fn write_run_outputs(
    dir: &std::path::Path,
    result: &SweepResult,
    problem: &Problem,
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let errors: Vec<ErrorRecord> = result.rows.iter().map(ErrorRecord::from).collect();
    write_errors_csv(create(dir, "errors.csv")?, &errors)?;
    let stats: Vec<StatsRecord> = result.stats.iter().map(StatsRecord::from).collect();
    write_stats_csv(create(dir, "stats.csv")?, &stats)?;
    let mut obj = create(dir, "tau.obj")?;
    write_obj(&mut obj, &plane_patches(&result.finest.space))?;
    obj.flush()?;
    let mut vtk = create(dir, "solution.vtk")?;
    let n = result.finest.space.mesh.counts()[0];
    write_vtk(
        &mut vtk,
        &solution_field(result, problem),
        &format!("{} N={n}", problem.name),
    )?;
    vtk.flush()?;
    Ok(())
}

/// Writes `stats.csv` alone.
pub fn write_stats_file(dir: &std::path::Path, stats: &[InterfaceStats]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let rows: Vec<StatsRecord> = stats.iter().map(StatsRecord::from).collect();
    write_stats_csv(create(dir, "stats.csv")?, &rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vtk_round_trip() {
        let f = GridField {
            dims: [2, 3, 2],
            origin: Point::new(-1.0, 0.5, 0.0),
            spacing: Point::new(0.1, 0.25, 1.0 / 3.0),
            scalars: vec![
                (
                    "u_h".into(),
                    (0..12).map(|i| i as f64 * 0.1 - 0.3).collect(),
                ),
                ("error".into(), (0..12).map(|i| 1e-7 * i as f64).collect()),
            ],
        };
        let mut buf = Vec::new();
        write_vtk(&mut buf, &f, "test").unwrap();
        assert_eq!(read_vtk(buf.as_slice()).unwrap(), f);
        let bad = GridField::from_mesh(
            &Mesh::uniform(crate::mesh::BoxDomain::cube(0.0, 1.0).unwrap(), 1).unwrap(),
        )
        .with("u", vec![0.0; 3]);
        assert!(write_vtk(Vec::new(), &bad, "x").is_err());
    }

    #[test]
    fn obj_round_trip_and_errors() {
        let m = TriangleMesh {
            vertices: vec![
                Point::zeros(),
                Point::x(),
                Point::y(),
                Point::new(0.3, 0.7, 1.0 / 7.0),
            ],
            triangles: vec![[0, 1, 2], [1, 3, 2]],
        };
        let mut buf = Vec::new();
        write_obj(&mut buf, &m).unwrap();
        assert_eq!(read_obj(buf.as_slice()).unwrap(), m);
        assert!(read_obj("v 0 0 0\nf 1 2 3\n".as_bytes()).is_err());
        assert!(read_obj("v 0 0\n".as_bytes()).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![
            ErrorRecord {
                n: 10,
                h: 0.2,
                e_inf: 1.5e-3,
                e_0: 2.0 / 3.0,
                e_1: 0.1,
                e_energy: None,
                assembly_s: 0.0,
                solve_s: 0.0,
                interface_element_pct: 27.2,
            },
            ErrorRecord {
                n: 20,
                h: 0.1,
                e_inf: 3e-4,
                e_0: 1e-300,
                e_1: 0.05,
                e_energy: Some(0.07),
                assembly_s: 1.25,
                solve_s: 0.5,
                interface_element_pct: 14.5,
            },
        ];
        let mut buf = Vec::new();
        write_errors_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text
            .starts_with("N,h,e_inf,e_0,e_1,e_energy,assembly_s,solve_s,interface_element_pct\n"));
        assert_eq!(read_errors_csv(buf.as_slice()).unwrap(), rows);
    }
}
