//! Plain-text artifacts: VTK fields, coefficient dumps and JSON reports.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::GnfError;
use crate::fields::{PressureField, VelocityField};
use crate::space::CrossSection;

/// VTK legacy file with quadratic triangles, `u` as point vectors and `π` as point scalars.
///
/// Pressure at edge midpoints is the mean of the two edge vertices.
pub fn velocity_pressure_vtk(cs: &CrossSection, u: &VelocityField, pi: &PressureField) -> String {
    let nn = cs.n_nodes();
    let nv = cs.n_vertices();
    let mut pres = vec![0.0; nn];
    pres[..nv].copy_from_slice(&pi.values);
    for (c, cn) in cs.cell_nodes.iter().enumerate() {
        let cell = cs.mesh.cells[c];
        for (e, (a, b)) in [(0, 1), (1, 2), (2, 0)].into_iter().enumerate() {
            pres[cn[3 + e]] = 0.5 * (pi.values[cell[a]] + pi.values[cell[b]]);
        }
    }
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0\ncurved pipe cross-section\nASCII\nDATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {nn} double");
    for x in &cs.nodes {
        let _ = writeln!(s, "{:.17e} {:.17e} 0", x[0], x[1]);
    }
    let _ = writeln!(s, "CELLS {} {}", cs.n_cells(), 7 * cs.n_cells());
    for cn in &cs.cell_nodes {
        let _ = writeln!(s, "6 {} {} {} {} {} {}", cn[0], cn[1], cn[2], cn[3], cn[4], cn[5]);
    }
    let _ = writeln!(s, "CELL_TYPES {}", cs.n_cells());
    for _ in 0..cs.n_cells() {
        let _ = writeln!(s, "22");
    }
    let _ = writeln!(s, "POINT_DATA {nn}\nVECTORS velocity double");
    for c in &u.coeffs {
        let _ = writeln!(s, "{:.17e} {:.17e} {:.17e}", c[0], c[1], c[2]);
    }
    let _ = writeln!(s, "SCALARS pressure double 1\nLOOKUP_TABLE default");
    for v in &pres {
        let _ = writeln!(s, "{v:.17e}");
    }
    s
}

/// One line per node (`u₁ u₂ u₃`), then one per vertex (`π`), round-trip exact.
pub fn coefficient_dump(u: &VelocityField, pi: &PressureField) -> String {
    let mut s = format!("velocity {}\n", u.coeffs.len());
    for c in &u.coeffs {
        let _ = writeln!(s, "{:e} {:e} {:e}", c[0], c[1], c[2]);
    }
    let _ = writeln!(s, "pressure {}", pi.values.len());
    for v in &pi.values {
        let _ = writeln!(s, "{v:e}");
    }
    s
}

pub fn parse_coefficient_dump(text: &str) -> Result<(VelocityField, PressureField), GnfError> {
    let lines: Vec<(usize, &str)> = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty()).collect();
    let err = |line: usize, msg: &str| GnfError::MeshParse { line, msg: msg.into() };
    let header = |pos: usize, name: &str| -> Result<usize, GnfError> {
        let &(line, l) = lines.get(pos).ok_or_else(|| err(0, "truncated coefficient dump"))?;
        l.strip_prefix(name).and_then(|r| r.trim().parse().ok()).ok_or_else(|| err(line, "bad section header"))
    };
    let numbers = |pos: usize, want: usize| -> Result<Vec<f64>, GnfError> {
        let &(line, l) = lines.get(pos).ok_or_else(|| err(0, "truncated coefficient dump"))?;
        let v: Vec<f64> = l.split_whitespace().map(str::parse).collect::<Result<_, _>>().map_err(|_| err(line, "malformed number"))?;
        if v.len() != want {
            return Err(err(line, "wrong number of values"));
        }
        Ok(v)
    };
    let nu = header(0, "velocity")?;
    let coeffs = (1..=nu).map(|i| numbers(i, 3).map(|v| [v[0], v[1], v[2]])).collect::<Result<Vec<_>, _>>()?;
    let np = header(nu + 1, "pressure")?;
    let values = (nu + 2..nu + 2 + np).map(|i| numbers(i, 1).map(|v| v[0])).collect::<Result<Vec<_>, _>>()?;
    Ok((VelocityField { coeffs }, PressureField { values }))
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String, GnfError> {
    Ok(serde_json::to_string_pretty(value)?)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), GnfError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::ShapeSpec;
    use crate::space::build_cross_section;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dump_round_trips_bit_exactly() {
        let cs = build_cross_section(&ShapeSpec::Disk, 0.4, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = VelocityField::random(&cs, &mut rng);
        let pi = PressureField { values: (0..cs.n_vertices()).map(|i| (i as f64).sqrt() / 7.0).collect() };
        let (u2, p2) = parse_coefficient_dump(&coefficient_dump(&u, &pi)).unwrap();
        assert_eq!(u2, u);
        assert_eq!(p2, pi);
        assert!(parse_coefficient_dump("velocity 2\n1 2 3\n").is_err());
    }

    #[test]
    fn vtk_has_quadratic_cells() {
        let cs = build_cross_section(&ShapeSpec::Disk, 0.5, 0.0).unwrap();
        let s = velocity_pressure_vtk(&cs, &VelocityField::zeros(&cs), &PressureField::zeros(&cs));
        assert!(s.contains(&format!("POINTS {} double", cs.n_nodes())));
        assert_eq!(s.lines().filter(|l| *l == "22").count(), cs.n_cells());
    }
}
