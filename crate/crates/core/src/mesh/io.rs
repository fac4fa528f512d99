//! ASCII file formats.
//!
//! ```text
//! tetmesh v1              dispfield v1 <n>       scalarfield v1 <n>
//! <nv> <nt> <nb>          dx dy dz   (n lines)   v          (n lines)
//! x y z      (nv lines)
//! a b c d    (nt lines, 0-based)
//! a b c tag  (nb lines)
//! ```
//!
//! Reals are written with the shortest representation that reads back to
//! the same `f64`, which never needs more than 17 significant digits.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use crate::geometry::Vec3;
use crate::mesh::{BoundaryFace, DisplacementField, SurfaceMesh, TetMesh};
use crate::real::format_exact;
use crate::{Error, Real, Result};

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Self { inner: text.lines().enumerate() }
    }

    /// Next non-blank line with its 1-based number.
    fn next_line(&mut self) -> Option<(usize, &'a str)> {
        for (i, l) in self.inner.by_ref() {
            let l = l.trim();
            if !l.is_empty() {
                return Some((i + 1, l));
            }
        }
        None
    }

    fn expect_line(&mut self, what: &str) -> Result<(usize, &'a str)> {
        self.next_line().ok_or_else(|| Error::Parse { line: 0, msg: format!("unexpected end of file, expected {what}") })
    }
}

fn parse_fields<F: FromStr>(line_no: usize, line: &str, n: usize) -> Result<Vec<F>> {
    let toks: Vec<&str> = line.split_whitespace().collect();
    if toks.len() != n {
        return Err(Error::Parse { line: line_no, msg: format!("expected {n} fields, found {}", toks.len()) });
    }
    toks.iter()
        .map(|t| t.parse::<F>().map_err(|_| Error::Parse { line: line_no, msg: format!("cannot parse {t:?}") }))
        .collect()
}

fn parse_real<T: Real>(line_no: usize, line: &str) -> Result<Vec3<T>> {
    let v: Vec<f64> = parse_fields(line_no, line, 3)?;
    let p = Vec3::from_f64([v[0], v[1], v[2]]);
    if !p.is_finite() {
        return Err(Error::Parse { line: line_no, msg: "non-finite value".into() });
    }
    Ok(p)
}

fn fmt3<T: Real>(out: &mut String, v: Vec3<T>) {
    let _ = writeln!(out, "{} {} {}", format_exact(v.x.as_f64()), format_exact(v.y.as_f64()), format_exact(v.z.as_f64()));
}

fn check_header(line_no: usize, line: &str, magic: &str) -> Result<()> {
    if line != magic {
        return Err(Error::Parse { line: line_no, msg: format!("expected header {magic:?}, found {line:?}") });
    }
    Ok(())
}

/// Parses a `tetmesh v1` document. With `nb = 0` the boundary is recomputed.
pub fn parse_tet_mesh<T: Real>(text: &str) -> Result<TetMesh<T>> {
    let mut lines = Lines::new(text);
    let (n, l) = lines.expect_line("header")?;
    check_header(n, l, "tetmesh v1")?;
    let (n, l) = lines.expect_line("counts")?;
    let counts: Vec<usize> = parse_fields(n, l, 3)?;
    let (nv, nt, nb) = (counts[0], counts[1], counts[2]);

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (n, l) = lines.expect_line("vertex")?;
        vertices.push(parse_real(n, l)?);
    }
    let mut tets = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (n, l) = lines.expect_line("tet")?;
        let v: Vec<usize> = parse_fields(n, l, 4)?;
        tets.push([v[0], v[1], v[2], v[3]]);
    }
    let mut faces = Vec::with_capacity(nb);
    for _ in 0..nb {
        let (n, l) = lines.expect_line("boundary face")?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != 4 {
            return Err(Error::Parse { line: n, msg: format!("expected 4 fields, found {}", toks.len()) });
        }
        let v: Vec<usize> = parse_fields(n, &toks[..3].join(" "), 3)?;
        let tag: i64 = toks[3].parse().map_err(|_| Error::Parse { line: n, msg: format!("bad tag {:?}", toks[3]) })?;
        faces.push(BoundaryFace { verts: [v[0], v[1], v[2]], tag });
    }
    if let Some((n, _)) = lines.next_line() {
        return Err(Error::Parse { line: n, msg: "trailing content after declared records".into() });
    }
    TetMesh::new(vertices, tets, if nb == 0 { None } else { Some(faces) })
}

pub fn format_tet_mesh<T: Real>(mesh: &TetMesh<T>) -> String {
    let mut out = String::new();
    out.push_str("tetmesh v1\n");
    let _ = writeln!(out, "{} {} {}", mesh.vertices.len(), mesh.tets.len(), mesh.boundary_faces.len());
    for p in &mesh.vertices {
        fmt3(&mut out, *p);
    }
    for t in &mesh.tets {
        let _ = writeln!(out, "{} {} {} {}", t[0], t[1], t[2], t[3]);
    }
    for f in &mesh.boundary_faces {
        let _ = writeln!(out, "{} {} {} {}", f.verts[0], f.verts[1], f.verts[2], f.tag);
    }
    out
}

pub fn load_tet_mesh<T: Real>(path: impl AsRef<Path>) -> Result<TetMesh<T>> {
    parse_tet_mesh(&std::fs::read_to_string(path)?)
}

pub fn write_tet_mesh<T: Real>(mesh: &TetMesh<T>, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, format_tet_mesh(mesh))?;
    Ok(())
}

pub fn format_displacement_field<T: Real>(field: &DisplacementField<T>) -> String {
    let mut out = format!("dispfield v1 {}\n", field.values.len());
    for v in &field.values {
        fmt3(&mut out, *v);
    }
    out
}

pub fn parse_displacement_field<T: Real>(text: &str) -> Result<DisplacementField<T>> {
    let mut lines = Lines::new(text);
    let (n, l) = lines.expect_line("header")?;
    let count = parse_counted_header(n, l, "dispfield")?;
    let mut values = Vec::with_capacity(count);
    while let Some((n, l)) = lines.next_line() {
        values.push(parse_real(n, l)?);
    }
    if values.len() != count {
        return Err(Error::CountMismatch { expected: count, found: values.len() });
    }
    DisplacementField::new(values)
}

fn parse_counted_header(line_no: usize, line: &str, magic: &str) -> Result<usize> {
    let toks: Vec<&str> = line.split_whitespace().collect();
    if toks.len() != 3 || toks[0] != magic || toks[1] != "v1" {
        return Err(Error::Parse { line: line_no, msg: format!("expected \"{magic} v1 <n>\", found {line:?}") });
    }
    toks[2].parse().map_err(|_| Error::Parse { line: line_no, msg: format!("bad count {:?}", toks[2]) })
}

pub fn write_displacement_field<T: Real>(field: &DisplacementField<T>, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, format_displacement_field(field))?;
    Ok(())
}

pub fn read_displacement_field<T: Real>(path: impl AsRef<Path>) -> Result<DisplacementField<T>> {
    parse_displacement_field(&std::fs::read_to_string(path)?)
}

/// One value per line under a `scalarfield v1 <n>` header.
pub fn format_scalar_field<T: Real>(values: &[T]) -> String {
    let mut out = format!("scalarfield v1 {}\n", values.len());
    for v in values {
        out.push_str(&format_exact(v.as_f64()));
        out.push('\n');
    }
    out
}

pub fn parse_scalar_field<T: Real>(text: &str) -> Result<Vec<T>> {
    let mut lines = Lines::new(text);
    let (n, l) = lines.expect_line("header")?;
    let count = parse_counted_header(n, l, "scalarfield")?;
    let mut values = Vec::with_capacity(count);
    while let Some((n, l)) = lines.next_line() {
        let v: Vec<f64> = parse_fields(n, l, 1)?;
        values.push(T::lit(v[0]));
    }
    if values.len() != count {
        return Err(Error::CountMismatch { expected: count, found: values.len() });
    }
    Ok(values)
}

/// Wavefront OBJ text: `v` records, then one `g feature_<tag>` group per
/// feature tag (ascending) holding that feature's `f` records (1-based).
pub fn format_surface_obj<T: Real>(surface: &SurfaceMesh<T>) -> Result<String> {
    if surface.vertices.is_empty() || surface.triangles.is_empty() {
        return Err(Error::InvalidArgument("cannot export an empty surface".into()));
    }
    let mut out = String::new();
    for p in &surface.vertices {
        out.push_str("v ");
        fmt3(&mut out, *p);
    }
    for tag in surface.feature_tags() {
        let _ = writeln!(out, "g feature_{tag}");
        for (t, tri) in surface.triangles.iter().enumerate() {
            if surface.feature[t] == tag {
                let _ = writeln!(out, "f {} {} {}", tri[0] + 1, tri[1] + 1, tri[2] + 1);
            }
        }
    }
    Ok(out)
}

pub fn export_surface_obj<T: Real>(surface: &SurfaceMesh<T>, path: impl AsRef<Path>) -> Result<()> {
    let text = format_surface_obj(surface)?;
    let mut f = std::fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SINGLE_TET: &str = "tetmesh v1\n4 1 0\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n0 1 2 3\n";

    #[test]
    fn single_tet_loads_with_recomputed_boundary() {
        let m: TetMesh<f64> = parse_tet_mesh(SINGLE_TET).unwrap();
        assert_eq!(m.vertices.len(), 4);
        assert_eq!(m.tets.len(), 1);
        assert_eq!(m.boundary_faces.len(), 4);
    }

    #[test]
    fn dangling_index_is_rejected() {
        let text = "tetmesh v1\n4 2 0\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n0 1 2 3\n0 1 2 9\n";
        let err = parse_tet_mesh::<f64>(text).unwrap_err();
        assert!(matches!(err, Error::InvalidMesh(ref m) if m.contains("vertex 9")), "{err}");
    }

    #[test]
    fn inverted_tet_is_rejected() {
        let text = "tetmesh v1\n4 1 0\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n0 1 3 2\n";
        assert!(matches!(parse_tet_mesh::<f64>(text), Err(Error::BadTet(0))));
    }

    #[test]
    fn malformed_line_is_a_parse_error() {
        let text = "tetmesh v1\n4 1 0\n0 0\n1 0 0\n0 1 0\n0 0 1\n0 1 2 3\n";
        assert!(matches!(parse_tet_mesh::<f64>(text), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(parse_tet_mesh::<f64>("tetmesh v2\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn tet_mesh_text_round_trips() {
        let m: TetMesh<f64> = parse_tet_mesh(SINGLE_TET).unwrap();
        let again: TetMesh<f64> = parse_tet_mesh(&format_tet_mesh(&m)).unwrap();
        assert_eq!(m, again);
    }

    #[test]
    fn zero_field_prints_plain_zeros() {
        let text = format_displacement_field(&DisplacementField::<f64>::zeros(3));
        assert_eq!(text, "dispfield v1 3\n0 0 0\n0 0 0\n0 0 0\n");
    }

    #[test]
    fn short_field_is_a_count_mismatch() {
        let err = parse_displacement_field::<f64>("dispfield v1 3\n0 0 0\n1 1 1\n").unwrap_err();
        assert!(matches!(err, Error::CountMismatch { expected: 3, found: 2 }));
    }

    #[test]
    fn single_triangle_obj() {
        let s = SurfaceMesh::standalone(
            vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)],
            vec![[0, 1, 2]],
            vec![7],
        )
        .unwrap();
        let text = format_surface_obj(&s).unwrap();
        assert_eq!(text.lines().filter(|l| l.starts_with("v ")).count(), 3);
        assert_eq!(text.lines().filter(|l| l.starts_with("f ")).count(), 1);
        assert!(text.contains("g feature_7\nf 1 2 3\n"));
    }

    #[test]
    fn empty_surface_cannot_be_exported() {
        let s = SurfaceMesh::<f64>::standalone(vec![], vec![], vec![]).unwrap();
        assert!(format_surface_obj(&s).is_err());
    }

    #[test]
    fn scalar_field_round_trips() {
        let v = vec![0.0, 1.0 / 3.0, -2.5e-7];
        assert_eq!(parse_scalar_field::<f64>(&format_scalar_field(&v)).unwrap(), v);
    }
}
