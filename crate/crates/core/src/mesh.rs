//! Triangulations of the pipe cross-section.
//!
//! Text format (comments start with `#`):
//!
//! ```text
//! vertices <N>
//! x1 x2            (N lines)
//! cells <M>
//! i j k            (M lines, zero-based vertex indices)
//! boundary <K>
//! v                (K lines, zero-based vertex indices)
//! ```

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::GnfError;
use crate::tolerances::MAX_ASPECT_RATIO;

/// Geometry of the cross-section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ShapeSpec {
    /// Unit disk; boundary cells are curved.
    Disk,
    Rectangle {
        x_min: f64,
        x_max: f64,
        y_min: f64,
        y_max: f64,
    },
    /// Mesh read from a file in the text format above.
    External {
        path: String,
    },
}

impl ShapeSpec {
    pub fn is_curved(&self) -> bool {
        matches!(self, ShapeSpec::Disk)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    pub vertices: Vec<[f64; 2]>,
    pub cells: Vec<[usize; 3]>,
    /// Sorted boundary vertex indices.
    pub boundary: Vec<usize>,
}

fn section_header<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>, name: &str) -> Result<usize, GnfError> {
    let (ln, l) = lines.next().ok_or_else(|| GnfError::MeshParse { line: 0, msg: format!("missing '{name}' section") })?;
    let mut it = l.split_whitespace();
    if it.next() != Some(name) {
        return Err(GnfError::MeshParse { line: ln, msg: format!("expected '{name} <count>'") });
    }
    it.next().and_then(|c| c.parse().ok()).ok_or_else(|| GnfError::MeshParse { line: ln, msg: "bad count".into() })
}

fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

impl Mesh {
    /// Builds a mesh, orienting cells counter-clockwise and deriving the boundary.
    pub fn from_parts(vertices: Vec<[f64; 2]>, mut cells: Vec<[usize; 3]>) -> Result<Self, GnfError> {
        for (k, c) in cells.iter_mut().enumerate() {
            if c.iter().any(|&v| v >= vertices.len()) {
                return Err(GnfError::InvalidMesh(format!("cell {k} references a missing vertex")));
            }
            if signed_area(vertices[c[0]], vertices[c[1]], vertices[c[2]]) < 0.0 {
                c.swap(1, 2);
            }
        }
        let mut mesh = Mesh { vertices, cells, boundary: Vec::new() };
        mesh.boundary = mesh.boundary_vertices_from_edges();
        Ok(mesh)
    }

    /// Concentric-ring triangulation of the unit disk.
    ///
    /// Ring `i` carries `6i` vertices at radius `i/N`; `N` is `⌈1/h⌉` rounded
    /// up to an even number so that `(0, ±1)` are vertices.
    pub fn unit_disk(h: f64) -> Result<Self, GnfError> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(GnfError::InvalidParameter(format!("mesh size h = {h} must be positive")));
        }
        let mut rings = (1.0 / h).ceil().max(2.0) as usize;
        if rings % 2 == 1 {
            rings += 1;
        }
        let mut vertices = vec![[0.0, 0.0]];
        let mut ring_start = vec![0usize];
        for i in 1..=rings {
            ring_start.push(vertices.len());
            let r = i as f64 / rings as f64;
            let count = 6 * i;
            for k in 0..count {
                let t = std::f64::consts::TAU * k as f64 / count as f64;
                let (s, c) = t.sin_cos();
                vertices.push(if i == rings { [c, s] } else { [r * c, r * s] });
            }
        }
        // exact extreme points on the outer ring
        let outer = ring_start[rings];
        let count = 6 * rings;
        for (k, target) in [(0, [1.0, 0.0]), (count / 4, [0.0, 1.0]), (count / 2, [-1.0, 0.0]), (3 * count / 4, [0.0, -1.0])] {
            vertices[outer + k] = target;
        }
        let mut cells = Vec::with_capacity(6 * rings * rings);
        for j in 0..6 {
            cells.push([0, 1 + j, 1 + (j + 1) % 6]);
        }
        for i in 2..=rings {
            let (n0, n1) = (6 * (i - 1), 6 * i);
            let (s0, s1) = (ring_start[i - 1], ring_start[i]);
            let (mut a, mut b) = (0usize, 0usize);
            while a < n0 || b < n1 {
                let next_inner = (a + 1) as f64 / n0 as f64;
                let next_outer = (b + 1) as f64 / n1 as f64;
                let ia = s0 + a % n0;
                let ib = s1 + b % n1;
                if b >= n1 || (a < n0 && next_inner <= next_outer) {
                    cells.push([ia, ib, s0 + (a + 1) % n0]);
                    a += 1;
                } else {
                    cells.push([ia, ib, s1 + (b + 1) % n1]);
                    b += 1;
                }
            }
        }
        Self::from_parts(vertices, cells)
    }

    /// Structured triangulation of an axis-aligned rectangle.
    pub fn rectangle(x_min: f64, x_max: f64, y_min: f64, y_max: f64, h: f64) -> Result<Self, GnfError> {
        if !(h > 0.0) || !(x_max > x_min) || !(y_max > y_min) {
            return Err(GnfError::InvalidParameter("rectangle needs h > 0 and positive extents".into()));
        }
        let nx = ((x_max - x_min) / h).ceil().max(1.0) as usize;
        let ny = ((y_max - y_min) / h).ceil().max(1.0) as usize;
        let id = |i: usize, j: usize| j * (nx + 1) + i;
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                vertices.push([x_min + (x_max - x_min) * i as f64 / nx as f64, y_min + (y_max - y_min) * j as f64 / ny as f64]);
            }
        }
        let mut cells = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                if (i + j) % 2 == 0 {
                    cells.push([a, b, c]);
                    cells.push([a, c, d]);
                } else {
                    cells.push([a, b, d]);
                    cells.push([b, c, d]);
                }
            }
        }
        Self::from_parts(vertices, cells)
    }

    /// Unique edges (sorted vertex pairs) with their adjacent cell counts.
    pub fn edges(&self) -> (Vec<[usize; 2]>, Vec<[usize; 3]>, Vec<u8>) {
        let mut index: HashMap<[usize; 2], usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut counts = Vec::new();
        let mut cell_edges = Vec::with_capacity(self.cells.len());
        for c in &self.cells {
            let mut ce = [0; 3];
            for (k, (a, b)) in [(c[0], c[1]), (c[1], c[2]), (c[2], c[0])].into_iter().enumerate() {
                let key = if a < b { [a, b] } else { [b, a] };
                let e = *index.entry(key).or_insert_with(|| {
                    edges.push(key);
                    counts.push(0u8);
                    edges.len() - 1
                });
                counts[e] += 1;
                ce[k] = e;
            }
            cell_edges.push(ce);
        }
        (edges, cell_edges, counts)
    }

    fn boundary_vertices_from_edges(&self) -> Vec<usize> {
        let (edges, _, counts) = self.edges();
        let mut on = vec![false; self.vertices.len()];
        for (e, &c) in edges.iter().zip(&counts) {
            if c == 1 {
                on[e[0]] = true;
                on[e[1]] = true;
            }
        }
        (0..on.len()).filter(|&v| on[v]).collect()
    }

    /// Longest edge over shortest altitude bound: `L_max² / (2A)`.
    pub fn aspect_ratio(&self, cell: usize) -> f64 {
        let c = self.cells[cell];
        let p = [self.vertices[c[0]], self.vertices[c[1]], self.vertices[c[2]]];
        let len2 = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2);
        let lmax = len2(p[0], p[1]).max(len2(p[1], p[2])).max(len2(p[2], p[0]));
        let area = signed_area(p[0], p[1], p[2]).abs();
        if area == 0.0 {
            f64::INFINITY
        } else {
            lmax / (2.0 * area)
        }
    }

    pub fn max_edge_length(&self) -> f64 {
        let (edges, _, _) = self.edges();
        edges
            .iter()
            .map(|e| {
                let (a, b) = (self.vertices[e[0]], self.vertices[e[1]]);
                ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// Rejects empty meshes, degenerate cells and vertices outside the unit ball.
    pub fn validate(&self) -> Result<(), GnfError> {
        if self.cells.is_empty() {
            return Err(GnfError::InvalidMesh("mesh has no cells".into()));
        }
        for (k, v) in self.vertices.iter().enumerate() {
            if !(v[0].is_finite() && v[1].is_finite()) || v[0].hypot(v[1]) > 1.0 + 1e-12 {
                return Err(GnfError::InvalidMesh(format!("vertex {k} lies outside the closed unit ball")));
            }
        }
        for k in 0..self.cells.len() {
            let ar = self.aspect_ratio(k);
            if !(ar <= MAX_ASPECT_RATIO) {
                return Err(GnfError::InvalidMesh(format!("cell {k} is degenerate (aspect ratio {ar:.3e})")));
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "vertices {}", self.vertices.len());
        for v in &self.vertices {
            let _ = writeln!(s, "{:e} {:e}", v[0], v[1]);
        }
        let _ = writeln!(s, "cells {}", self.cells.len());
        for c in &self.cells {
            let _ = writeln!(s, "{} {} {}", c[0], c[1], c[2]);
        }
        let _ = writeln!(s, "boundary {}", self.boundary.len());
        for b in &self.boundary {
            let _ = writeln!(s, "{b}");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, GnfError> {
        let mut lines =
            text.lines().enumerate().map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim())).filter(|(_, l)| !l.is_empty());
        let err = |line: usize, msg: &str| GnfError::MeshParse { line, msg: msg.to_string() };
        let nv = section_header(&mut lines, "vertices")?;
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (ln, l) = lines.next().ok_or_else(|| err(0, "truncated vertex list"))?;
            let xs: Vec<f64> =
                l.split_whitespace().map(|t| t.parse::<f64>()).collect::<Result<_, _>>().map_err(|_| err(ln, "bad coordinate"))?;
            if xs.len() != 2 {
                return Err(err(ln, "vertex needs two coordinates"));
            }
            vertices.push([xs[0], xs[1]]);
        }
        let nc = section_header(&mut lines, "cells")?;
        let mut cells = Vec::with_capacity(nc);
        for _ in 0..nc {
            let (ln, l) = lines.next().ok_or_else(|| err(0, "truncated cell list"))?;
            let ids: Vec<usize> =
                l.split_whitespace().map(|t| t.parse::<usize>()).collect::<Result<_, _>>().map_err(|_| err(ln, "bad vertex index"))?;
            if ids.len() != 3 {
                return Err(err(ln, "cell needs three vertex indices"));
            }
            cells.push([ids[0], ids[1], ids[2]]);
        }
        let nb = section_header(&mut lines, "boundary")?;
        let mut boundary = Vec::with_capacity(nb);
        for _ in 0..nb {
            let (ln, l) = lines.next().ok_or_else(|| err(0, "truncated boundary list"))?;
            boundary.push(l.parse::<usize>().map_err(|_| err(ln, "bad boundary index"))?);
        }
        let mesh = Self::from_parts(vertices, cells)?;
        boundary.sort_unstable();
        boundary.dedup();
        if boundary != mesh.boundary {
            return Err(GnfError::InvalidMesh("boundary list does not match the topological boundary".into()));
        }
        Ok(mesh)
    }

    pub fn read(path: &Path) -> Result<Self, GnfError> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<(), GnfError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    /// Legacy VTK unstructured grid of the linear cells.
    pub fn to_vtk(&self) -> String {
        let mut s = String::from("# vtk DataFile Version 3.0\ncross-section mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n");
        let _ = writeln!(s, "POINTS {} double", self.vertices.len());
        for v in &self.vertices {
            let _ = writeln!(s, "{:e} {:e} 0", v[0], v[1]);
        }
        let _ = writeln!(s, "CELLS {} {}", self.cells.len(), 4 * self.cells.len());
        for c in &self.cells {
            let _ = writeln!(s, "3 {} {} {}", c[0], c[1], c[2]);
        }
        let _ = writeln!(s, "CELL_TYPES {}", self.cells.len());
        for _ in &self.cells {
            s.push_str("5\n");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_topology() {
        let m = Mesh::unit_disk(0.1).unwrap();
        // 1 + Σ 6i vertices, 6N² cells, 6N boundary vertices
        assert_eq!(m.vertices.len(), 1 + 3 * 10 * 11);
        assert_eq!(m.cells.len(), 600);
        assert_eq!(m.boundary.len(), 60);
        m.validate().unwrap();
        for k in 0..m.cells.len() {
            let c = m.cells[k];
            assert!(signed_area(m.vertices[c[0]], m.vertices[c[1]], m.vertices[c[2]]) > 0.0);
            assert!(m.aspect_ratio(k) < 3.0);
        }
        // Euler characteristic of a disk
        let (edges, _, _) = m.edges();
        assert_eq!(m.vertices.len() as i64 - edges.len() as i64 + m.cells.len() as i64, 1);
    }

    #[test]
    fn odd_ring_count_is_rounded_up() {
        let m = Mesh::unit_disk(0.2).unwrap();
        assert_eq!(m.boundary.len(), 36);
        assert!(m.vertices.iter().any(|v| *v == [0.0, -1.0]));
    }

    #[test]
    fn rectangle_topology() {
        let m = Mesh::rectangle(-0.5, 0.5, -0.5, 0.5, 0.25).unwrap();
        assert_eq!(m.vertices.len(), 25);
        assert_eq!(m.cells.len(), 32);
        assert_eq!(m.boundary.len(), 16);
        let area: f64 = m.cells.iter().map(|c| signed_area(m.vertices[c[0]], m.vertices[c[1]], m.vertices[c[2]])).sum();
        assert!((area - 1.0).abs() < 1e-14);
    }

    #[test]
    fn text_round_trip() {
        let m = Mesh::unit_disk(0.3).unwrap();
        let back = Mesh::from_text(&m.to_text()).unwrap();
        assert_eq!(back.cells, m.cells);
        assert_eq!(back.boundary, m.boundary);
        for (a, b) in back.vertices.iter().zip(&m.vertices) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn parse_errors_are_reported() {
        assert!(matches!(Mesh::from_text("vertices 1\n0 0\n"), Err(GnfError::MeshParse { .. })));
        assert!(matches!(Mesh::from_text("vertices 1\n0 x\n"), Err(GnfError::MeshParse { line: 2, .. })));
        let bad_boundary = "vertices 3\n0 0\n0.5 0\n0 0.5\ncells 1\n0 1 2\nboundary 2\n0\n1\n";
        assert!(matches!(Mesh::from_text(bad_boundary), Err(GnfError::InvalidMesh(_))));
    }

    #[test]
    fn validation_rejects_bad_meshes() {
        let outside = Mesh::rectangle(0.0, 1.0, 0.0, 1.0, 0.5).unwrap();
        assert!(outside.validate().is_err());
        let sliver = Mesh::from_parts(vec![[0.0, 0.0], [0.5, 0.0], [0.25, 1e-5]], vec![[0, 1, 2]]).unwrap();
        assert!(sliver.validate().is_err());
    }
}
