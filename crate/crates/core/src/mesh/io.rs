//! Line-oriented text formats for meshes and fields.
//!
//! ```text
//! TRIMESH v1
//! V <count>
//! x y
//! ...
//! T <count>
//! i j k
//! ...
//! ```
//!
//! Fields: a `P0FIELD v1 <count>` or `P1FIELD v1 <count>` header followed by
//! one value per line. Floats are written in shortest round-trip form.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use super::TriMesh;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldKind {
    P0,
    P1,
}

impl FieldKind {
    fn tag(self) -> &'static str {
        match self {
            FieldKind::P0 => "P0FIELD",
            FieldKind::P1 => "P1FIELD",
        }
    }
}

pub fn mesh_to_string(mesh: &TriMesh) -> String {
    let mut out = String::new();
    out.push_str("TRIMESH v1\n");
    let _ = writeln!(out, "V {}", mesh.num_vertices());
    for [x, y] in mesh.vertices() {
        let _ = writeln!(out, "{x} {y}");
    }
    let _ = writeln!(out, "T {}", mesh.num_triangles());
    for [i, j, k] in mesh.triangles() {
        let _ = writeln!(out, "{i} {j} {k}");
    }
    out
}

pub fn save_mesh(mesh: &TriMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, mesh_to_string(mesh)).map_err(|e| Error::io(path, e))
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriMesh> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_mesh(&text, path)
}

pub fn save_field(kind: FieldKind, values: &[f64], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, field_to_string(kind, values)).map_err(|e| Error::io(path, e))
}

pub fn field_to_string(kind: FieldKind, values: &[f64]) -> String {
    let mut out = format!("{} v1 {}\n", kind.tag(), values.len());
    for v in values {
        let _ = writeln!(out, "{v}");
    }
    out
}

pub fn load_field(path: impl AsRef<Path>) -> Result<(FieldKind, Vec<f64>)> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_field(&text, path)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    path: &'a Path,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str, path: &'a Path) -> Self {
        Lines {
            inner: text.lines().enumerate(),
            path,
            last: 0,
        }
    }

    fn err(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            line,
            message: message.into(),
        }
    }

    /// Next non-blank line, with its 1-based number.
    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        for (i, line) in self.inner.by_ref() {
            self.last = i + 1;
            let trimmed = line.trim();
            if !trimmed.is_empty() {
                return Ok((i + 1, trimmed));
            }
        }
        Err(self.err(
            self.last + 1,
            format!("unexpected end of file, expected {what}"),
        ))
    }

    fn parse<T: FromStr>(&self, line: usize, token: &str, what: &str) -> Result<T> {
        token
            .parse()
            .map_err(|_| self.err(line, format!("invalid {what} `{token}`")))
    }

    fn trailing(&mut self) -> Result<()> {
        for (i, line) in self.inner.by_ref() {
            if !line.trim().is_empty() {
                return Err(Error::Parse {
                    path: self.path.to_path_buf(),
                    line: i + 1,
                    message: "unexpected trailing content".into(),
                });
            }
        }
        Ok(())
    }
}

fn parse_section_count(lines: &mut Lines, tag: &str) -> Result<usize> {
    let (no, line) = lines.next(&format!("`{tag} <count>`"))?;
    let mut it = line.split_whitespace();
    match (it.next(), it.next(), it.next()) {
        (Some(t), Some(count), None) if t == tag => lines.parse(no, count, "count"),
        _ => Err(lines.err(no, format!("expected `{tag} <count>`"))),
    }
}

pub fn parse_mesh(text: &str, path: &Path) -> Result<TriMesh> {
    let mut lines = Lines::new(text, path);
    let (no, header) = lines.next("header")?;
    if header != "TRIMESH v1" {
        return Err(lines.err(no, "expected header `TRIMESH v1`"));
    }
    let nv = parse_section_count(&mut lines, "V")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (no, line) = lines.next("vertex coordinates")?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 2 {
            return Err(lines.err(no, "expected `x y`"));
        }
        let x: f64 = lines.parse(no, tokens[0], "coordinate")?;
        let y: f64 = lines.parse(no, tokens[1], "coordinate")?;
        if !x.is_finite() || !y.is_finite() {
            return Err(lines.err(no, "non-finite coordinate"));
        }
        vertices.push([x, y]);
    }
    let nt = parse_section_count(&mut lines, "T")?;
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (no, line) = lines.next("triangle indices")?;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 3 {
            return Err(lines.err(no, "expected `i j k`"));
        }
        let mut tri = [0usize; 3];
        for (slot, tok) in tri.iter_mut().zip(&tokens) {
            *slot = lines.parse(no, tok, "vertex index")?;
            if *slot >= nv {
                return Err(lines.err(no, format!("vertex index {slot} out of range")));
            }
        }
        triangles.push(tri);
    }
    lines.trailing()?;
    TriMesh::from_parts(vertices, triangles)
}

pub fn parse_field(text: &str, path: &Path) -> Result<(FieldKind, Vec<f64>)> {
    let mut lines = Lines::new(text, path);
    let (no, header) = lines.next("header")?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    let kind = match tokens.as_slice() {
        ["P0FIELD", "v1", _] => FieldKind::P0,
        ["P1FIELD", "v1", _] => FieldKind::P1,
        _ => return Err(lines.err(no, "expected `P0FIELD v1 <count>` or `P1FIELD v1 <count>`")),
    };
    let count: usize = lines.parse(no, tokens[2], "count")?;
    let mut values = Vec::with_capacity(count);
    for _ in 0..count {
        let (no, line) = lines.next("field value")?;
        values.push(lines.parse(no, line, "value")?);
    }
    lines.trailing()?;
    Ok((kind, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_square_mesh;

    fn p() -> &'static Path {
        Path::new("<mem>")
    }

    #[test]
    fn structured_round_trip() {
        let m = generate_square_mesh(4, 0.0, 0).unwrap();
        let back = parse_mesh(&mesh_to_string(&m), p()).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn jittered_round_trip_is_bitwise() {
        let m = generate_square_mesh(7, 0.27, 123).unwrap();
        let back = parse_mesh(&mesh_to_string(&m), p()).unwrap();
        for (a, b) in m.vertices().iter().zip(back.vertices()) {
            assert_eq!(a[0].to_bits(), b[0].to_bits());
            assert_eq!(a[1].to_bits(), b[1].to_bits());
        }
        assert_eq!(m, back);
    }

    #[test]
    fn truncated_file_reports_line() {
        let m = generate_square_mesh(2, 0.0, 0).unwrap();
        let text = mesh_to_string(&m);
        let cut: String = text.lines().take(12).map(|l| format!("{l}\n")).collect();
        match parse_mesh(&cut, p()).unwrap_err() {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 13);
                assert!(message.contains("end of file"), "{message}");
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn bad_token_reports_line() {
        let text = "TRIMESH v1\nV 3\n0 0\n1 zero\n0 1\nT 1\n0 1 2\n";
        match parse_mesh(text, p()).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 4),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn field_round_trip() {
        let vals = vec![0.1, -2.5e-17, 3.0, f64::MIN_POSITIVE];
        let text = field_to_string(FieldKind::P1, &vals);
        let (kind, back) = parse_field(&text, p()).unwrap();
        assert_eq!(kind, FieldKind::P1);
        assert_eq!(vals, back);
    }

    #[test]
    fn field_count_mismatch() {
        assert!(parse_field("P0FIELD v1 3\n1\n2\n", p()).is_err());
        assert!(parse_field("P0FIELD v1 1\n1\n2\n", p()).is_err());
    }
}
