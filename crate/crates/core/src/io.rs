//! Mesh generation, file formats and simulation output.
//!
//! File formats are byte-stable: floats are printed with Rust's shortest
//! round-trip formatting, and no file contains timestamps (wall-clock info
//! lives only in the run-summary JSON).

use crate::analysis::BenchmarkRow;
use crate::levelset::PhaseLabels;
use crate::mesh::{classify_degenerate, BoundaryEdge, DegenerateClass, Mesh, DEFAULT_ANGLE_TOL};
use crate::{Error, Result, Vec2};
use std::fmt::Write as _;
use std::io::{BufWriter, Write};
use std::path::Path;

/// Structured rectangle mesh with alternating diagonals (union-jack pattern)
/// so no global diagonal direction biases the flow. Boundary edges are tagged
/// "left", "right", "bottom", "top".
pub fn generate_rect_mesh(width: f64, height: f64, nx: usize, ny: usize) -> Result<Mesh> {
    if nx == 0 || ny == 0 || !(width > 0.0) || !(height > 0.0) {
        return Err(Error::Mesh(format!(
            "invalid rectangle mesh request: {width} x {height}, {nx} x {ny} cells"
        )));
    }
    let idx = |i: usize, j: usize| j * (nx + 1) + i;
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            nodes.push(Vec2::new(
                width * i as f64 / nx as f64,
                height * j as f64 / ny as f64,
            ));
        }
    }
    let mut tris = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let a = idx(i, j);
            let b = idx(i + 1, j);
            let c = idx(i + 1, j + 1);
            let d = idx(i, j + 1);
            if (i + j) % 2 == 0 {
                tris.push([a, b, c]);
                tris.push([a, c, d]);
            } else {
                tris.push([a, b, d]);
                tris.push([b, c, d]);
            }
        }
    }
    let mut bnd = Vec::with_capacity(2 * (nx + ny));
    for i in 0..nx {
        bnd.push(BoundaryEdge {
            a: idx(i, 0),
            b: idx(i + 1, 0),
            tag: "bottom".into(),
        });
        bnd.push(BoundaryEdge {
            a: idx(i, ny),
            b: idx(i + 1, ny),
            tag: "top".into(),
        });
    }
    for j in 0..ny {
        bnd.push(BoundaryEdge {
            a: idx(0, j),
            b: idx(0, j + 1),
            tag: "left".into(),
        });
        bnd.push(BoundaryEdge {
            a: idx(nx, j),
            b: idx(nx, j + 1),
            tag: "right".into(),
        });
    }
    Mesh::build(nodes, tris, bnd)
}

/// Writes the plain-text mesh format:
/// header `xmesh-tri 1`, a counts line, node lines `x y`, triangle lines
/// `i j k`, boundary-edge lines `i j tag`.
pub fn write_mesh_text<W: Write>(mut w: W, mesh: &Mesh) -> Result<()> {
    writeln!(w, "xmesh-tri 1")?;
    writeln!(
        w,
        "{} {} {}",
        mesh.node_count(),
        mesh.triangle_count(),
        mesh.boundary_edges().len()
    )?;
    for p in mesh.positions() {
        writeln!(w, "{} {}", p.x, p.y)?;
    }
    for t in mesh.triangles() {
        writeln!(w, "{} {} {}", t[0], t[1], t[2])?;
    }
    for be in mesh.boundary_edges() {
        writeln!(w, "{} {} {}", be.a, be.b, be.tag)?;
    }
    Ok(())
}

pub fn save_mesh_text(path: &Path, mesh: &Mesh) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_mesh_text(BufWriter::new(f), mesh)
}

/// Reads the plain-text mesh format written by [`write_mesh_text`].
pub fn read_mesh_text(text: &str) -> Result<Mesh> {
    let mut lines = text.lines().enumerate();
    let mut next = |what: &str| -> Result<(usize, &str)> {
        lines
            .next()
            .map(|(n, l)| (n + 1, l))
            .ok_or_else(|| Error::Mesh(format!("mesh file truncated, expected {what}")))
    };
    let (ln, header) = next("header")?;
    if header.trim() != "xmesh-tri 1" {
        return Err(Error::Mesh(format!(
            "line {ln}: bad header {header:?}, expected \"xmesh-tri 1\""
        )));
    }
    let (ln, counts) = next("counts line")?;
    let counts: Vec<usize> = counts
        .split_whitespace()
        .map(|t| t.parse())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Mesh(format!("line {ln}: bad counts: {e}")))?;
    if counts.len() != 3 {
        return Err(Error::Mesh(format!("line {ln}: expected 3 counts")));
    }
    let (nn, nt, nb) = (counts[0], counts[1], counts[2]);
    let mut nodes = Vec::with_capacity(nn);
    for _ in 0..nn {
        let (ln, l) = next("node line")?;
        let mut it = l.split_whitespace();
        let x: f64 = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Mesh(format!("line {ln}: bad node x")))?;
        let y: f64 = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Mesh(format!("line {ln}: bad node y")))?;
        nodes.push(Vec2::new(x, y));
    }
    let mut tris = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (ln, l) = next("triangle line")?;
        let v: Vec<usize> = l
            .split_whitespace()
            .map(|t| t.parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Mesh(format!("line {ln}: bad triangle: {e}")))?;
        if v.len() != 3 {
            return Err(Error::Mesh(format!("line {ln}: triangle needs 3 indices")));
        }
        tris.push([v[0], v[1], v[2]]);
    }
    let mut bnd = Vec::with_capacity(nb);
    for _ in 0..nb {
        let (ln, l) = next("boundary edge line")?;
        let mut it = l.split_whitespace();
        let a: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Mesh(format!("line {ln}: bad boundary edge")))?;
        let b: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Mesh(format!("line {ln}: bad boundary edge")))?;
        let tag = it.next().unwrap_or("wall").to_string();
        bnd.push(BoundaryEdge { a, b, tag });
    }
    Mesh::build(nodes, tris, bnd)
}

pub fn load_mesh_text(path: &Path) -> Result<Mesh> {
    let text = std::fs::read_to_string(path)?;
    read_mesh_text(&text)
}

/// Minimal Gmsh MSH 4.1 ASCII reader: nodes, 2D triangles (type 2) and
/// boundary lines (type 1). Every other block is skipped. Line elements
/// become boundary edges tagged with their entity tag.
pub fn read_gmsh_msh(text: &str) -> Result<Mesh> {
    let mut lines = text.lines().peekable();
    let mut node_ids: Vec<u64> = Vec::new();
    let mut coords: Vec<Vec2> = Vec::new();
    let mut tris: Vec<[u64; 3]> = Vec::new();
    let mut bnd: Vec<(u64, u64, String)> = Vec::new();
    let bad = |what: &str| Error::Mesh(format!("gmsh: malformed {what} section"));

    while let Some(line) = lines.next() {
        match line.trim() {
            "$MeshFormat" => {
                let l = lines.next().ok_or_else(|| bad("MeshFormat"))?;
                let mut it = l.split_whitespace();
                let version = it.next().unwrap_or("");
                if !version.starts_with("4.1") {
                    return Err(Error::Mesh(format!(
                        "gmsh: unsupported MSH version {version}, need 4.1 ASCII"
                    )));
                }
                let is_binary = it.next() == Some("1");
                if is_binary {
                    return Err(Error::Mesh("gmsh: binary MSH not supported".into()));
                }
            }
            "$Nodes" => {
                let head = lines.next().ok_or_else(|| bad("Nodes"))?;
                let mut it = head.split_whitespace();
                let num_blocks: usize = it.next().and_then(|t| t.parse().ok()).ok_or_else(|| bad("Nodes"))?;
                for _ in 0..num_blocks {
                    let bh = lines.next().ok_or_else(|| bad("Nodes"))?;
                    let v: Vec<i64> = bh
                        .split_whitespace()
                        .map(|t| t.parse().unwrap_or(-1))
                        .collect();
                    if v.len() != 4 {
                        return Err(bad("Nodes"));
                    }
                    let count = v[3] as usize;
                    let mut ids = Vec::with_capacity(count);
                    for _ in 0..count {
                        let id: u64 = lines
                            .next()
                            .and_then(|l| l.trim().parse().ok())
                            .ok_or_else(|| bad("Nodes"))?;
                        ids.push(id);
                    }
                    for id in ids {
                        let l = lines.next().ok_or_else(|| bad("Nodes"))?;
                        let mut c = l.split_whitespace();
                        let x: f64 = c.next().and_then(|t| t.parse().ok()).ok_or_else(|| bad("Nodes"))?;
                        let y: f64 = c.next().and_then(|t| t.parse().ok()).ok_or_else(|| bad("Nodes"))?;
                        node_ids.push(id);
                        coords.push(Vec2::new(x, y));
                    }
                }
            }
            "$Elements" => {
                let head = lines.next().ok_or_else(|| bad("Elements"))?;
                let num_blocks: usize = head
                    .split_whitespace()
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| bad("Elements"))?;
                for _ in 0..num_blocks {
                    let bh = lines.next().ok_or_else(|| bad("Elements"))?;
                    let v: Vec<i64> = bh
                        .split_whitespace()
                        .map(|t| t.parse().unwrap_or(-1))
                        .collect();
                    if v.len() != 4 {
                        return Err(bad("Elements"));
                    }
                    let (entity_tag, ty, count) = (v[1], v[2], v[3] as usize);
                    for _ in 0..count {
                        let l = lines.next().ok_or_else(|| bad("Elements"))?;
                        let ids: Vec<u64> = l
                            .split_whitespace()
                            .skip(1)
                            .map(|t| t.parse().unwrap_or(0))
                            .collect();
                        match ty {
                            1 if ids.len() >= 2 => {
                                bnd.push((ids[0], ids[1], entity_tag.to_string()))
                            }
                            2 if ids.len() >= 3 => tris.push([ids[0], ids[1], ids[2]]),
                            _ => {} // points, higher-order, 3D: skipped
                        }
                    }
                }
            }
            _ => {} // other sections skipped wholesale
        }
    }

    if coords.is_empty() || tris.is_empty() {
        return Err(Error::Mesh("gmsh: no nodes or no triangles found".into()));
    }
    let mut id_map = std::collections::HashMap::new();
    for (i, id) in node_ids.iter().enumerate() {
        id_map.insert(*id, i);
    }
    let lookup = |id: u64| -> Result<usize> {
        id_map
            .get(&id)
            .copied()
            .ok_or_else(|| Error::Mesh(format!("gmsh: element references unknown node {id}")))
    };
    let tris = tris
        .into_iter()
        .map(|t| Ok([lookup(t[0])?, lookup(t[1])?, lookup(t[2])?]))
        .collect::<Result<Vec<_>>>()?;
    let bnd = bnd
        .into_iter()
        .map(|(a, b, tag)| {
            Ok(BoundaryEdge {
                a: lookup(a)?,
                b: lookup(b)?,
                tag,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Mesh::build(coords, tris, bnd)
}

/// Nodal and cell fields attached to a VTK snapshot. Any field may be absent.
#[derive(Default)]
pub struct VtkFields<'a> {
    pub phi: Option<&'a [f64]>,
    pub pressure: Option<&'a [f64]>,
    pub modified_pressure: Option<&'a [f64]>,
    pub velocity: Option<&'a [Vec2]>,
    pub phases: Option<&'a PhaseLabels>,
}

fn check_finite(name: &str, vals: &[f64]) -> Result<()> {
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::Mesh(format!(
            "refusing to write VTK: field {name:?} contains a non-finite value"
        )));
    }
    Ok(())
}

/// Legacy ASCII VTK unstructured-grid snapshot.
pub fn write_vtk<W: Write>(mut w: W, mesh: &Mesh, fields: &VtkFields) -> Result<()> {
    if let Some(v) = fields.phi {
        check_finite("phi", v)?;
    }
    if let Some(v) = fields.pressure {
        check_finite("p", v)?;
    }
    if let Some(v) = fields.modified_pressure {
        check_finite("pbar", v)?;
    }
    if let Some(v) = fields.velocity {
        let flat: Vec<f64> = v.iter().flat_map(|u| [u.x, u.y]).collect();
        check_finite("u", &flat)?;
    }

    let nn = mesh.node_count();
    let nt = mesh.triangle_count();
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "xmesh snapshot")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {nn} double")?;
    for p in mesh.positions() {
        writeln!(w, "{} {} 0", p.x, p.y)?;
    }
    writeln!(w, "CELLS {nt} {}", 4 * nt)?;
    for t in mesh.triangles() {
        writeln!(w, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    writeln!(w, "CELL_TYPES {nt}")?;
    for _ in 0..nt {
        writeln!(w, "5")?;
    }

    let any_point_data = fields.phi.is_some()
        || fields.pressure.is_some()
        || fields.modified_pressure.is_some()
        || fields.velocity.is_some();
    if any_point_data {
        writeln!(w, "POINT_DATA {nn}")?;
        let scalar = |w: &mut W, name: &str, vals: &[f64]| -> Result<()> {
            writeln!(w, "SCALARS {name} double 1")?;
            writeln!(w, "LOOKUP_TABLE default")?;
            for v in vals {
                writeln!(w, "{v}")?;
            }
            Ok(())
        };
        if let Some(v) = fields.phi {
            scalar(&mut w, "phi", v)?;
        }
        if let Some(v) = fields.pressure {
            scalar(&mut w, "p", v)?;
        }
        if let Some(v) = fields.modified_pressure {
            scalar(&mut w, "pbar", v)?;
        }
        if let Some(v) = fields.velocity {
            writeln!(w, "VECTORS u double")?;
            for u in v {
                writeln!(w, "{} {} 0", u.x, u.y)?;
            }
        }
    }

    writeln!(w, "CELL_DATA {nt}")?;
    if let Some(ph) = fields.phases {
        writeln!(w, "SCALARS phase int 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for l in &ph.label {
            writeln!(w, "{}", l.index() + 1)?;
        }
    }
    writeln!(w, "SCALARS area double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for t in 0..nt {
        writeln!(w, "{}", mesh.area(t))?;
    }
    writeln!(w, "SCALARS degenerate int 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for t in 0..nt {
        let class = classify_degenerate(&mesh.triangle_geometry(t), DEFAULT_ANGLE_TOL);
        let code = match class {
            DegenerateClass::Regular => 0,
            DegenerateClass::Needle => 1,
            DegenerateClass::Cap => 2,
        };
        writeln!(w, "{code}")?;
    }
    Ok(())
}

pub fn save_vtk(path: &Path, mesh: &Mesh, fields: &VtkFields) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_vtk(BufWriter::new(f), mesh, fields)
}

/// Benchmark time-series CSV with the exact header
/// `t,com_y,rise_velocity,circularity,mass,max_speed` and LF line endings.
pub fn write_benchmark_csv<W: Write>(mut w: W, series: &[BenchmarkRow]) -> Result<()> {
    if series.is_empty() {
        return Err(Error::Mesh("refusing to write empty benchmark series".into()));
    }
    let mut buf = String::new();
    buf.push_str("t,com_y,rise_velocity,circularity,mass,max_speed\n");
    for r in series {
        let _ = writeln!(
            buf,
            "{},{},{},{},{},{}",
            r.t, r.com_y, r.rise_velocity, r.circularity, r.mass, r.max_speed
        );
    }
    w.write_all(buf.as_bytes())?;
    Ok(())
}

pub fn save_benchmark_csv(path: &Path, series: &[BenchmarkRow]) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_benchmark_csv(BufWriter::new(f), series)
}

/// One row of the per-step relay diagnostics CSV.
#[derive(Debug, Clone, Copy)]
pub struct RelayDiagRow {
    pub step: usize,
    pub n_active: usize,
    pub n_moved: usize,
    pub n_caps: usize,
    pub max_cap_band: usize,
    pub min_area: f64,
}

pub fn write_relay_csv<W: Write>(mut w: W, rows: &[RelayDiagRow]) -> Result<()> {
    writeln!(w, "step,n_active,n_moved,n_caps,max_cap_band,min_area")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.step, r.n_active, r.n_moved, r.n_caps, r.max_cap_band, r.min_area
        )?;
    }
    Ok(())
}

pub fn save_relay_csv(path: &Path, rows: &[RelayDiagRow]) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_relay_csv(BufWriter::new(f), rows)
}
