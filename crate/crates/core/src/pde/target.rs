use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::mesh::{load_field, FieldKind, P0Field, P1Field, TriMesh};

/// Where a control field comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum ControlSource {
    /// Built-in piecewise constant stand-in: two nested indicator sets.
    Phantom,
    File(PathBuf),
}

/// How the observation target `y_d` is specified.
#[derive(Clone, Debug, PartialEq)]
pub enum TargetSpec {
    Zero,
    /// Nodal interpolation of the closed box centered at (cx, cy) with the
    /// given width and height.
    Indicator {
        cx: f64,
        cy: f64,
        w: f64,
        h: f64,
    },
    /// `y_d = K u_d` for a given control.
    ForwardOf(ControlSource),
    File(PathBuf),
}

impl TargetSpec {
    /// Builds the target. `forward` is only called for [`TargetSpec::ForwardOf`].
    pub fn resolve(
        &self,
        mesh: &TriMesh,
        forward: impl FnOnce(&P0Field) -> Result<P1Field>,
    ) -> Result<P1Field> {
        match self {
            TargetSpec::Zero => Ok(P1Field::zeros(mesh.num_vertices())),
            &TargetSpec::Indicator { cx, cy, w, h } => Ok(P1Field::from_vertices(mesh, |x, y| {
                if (x - cx).abs() <= 0.5 * w && (y - cy).abs() <= 0.5 * h {
                    1.0
                } else {
                    0.0
                }
            })),
            TargetSpec::ForwardOf(source) => forward(&source.resolve(mesh)?),
            TargetSpec::File(path) => {
                let (kind, values) = load_field(path)?;
                check_field(path, kind, FieldKind::P1, values.len(), mesh.num_vertices())?;
                Ok(P1Field::new(values))
            }
        }
    }
}

impl ControlSource {
    pub fn resolve(&self, mesh: &TriMesh) -> Result<P0Field> {
        match self {
            ControlSource::Phantom => Ok(phantom_control(mesh)),
            ControlSource::File(path) => {
                let (kind, values) = load_field(path)?;
                check_field(
                    path,
                    kind,
                    FieldKind::P0,
                    values.len(),
                    mesh.num_triangles(),
                )?;
                Ok(P0Field::new(values))
            }
        }
    }
}

fn check_field(
    path: &std::path::Path,
    kind: FieldKind,
    want: FieldKind,
    len: usize,
    n: usize,
) -> Result<()> {
    if kind != want {
        return Err(Error::Config(format!(
            "{}: expected a {want:?} field, found {kind:?}",
            path.display()
        )));
    }
    if len != n {
        return Err(Error::Config(format!(
            "{}: field has {len} values, mesh needs {n}",
            path.display()
        )));
    }
    Ok(())
}

/// Value 1 on an ellipse and 2 on a disc nested inside it, 0 elsewhere
/// (membership decided by triangle centroids).
pub fn phantom_control(mesh: &TriMesh) -> P0Field {
    P0Field::from_centroids(mesh, |x, y| {
        let outer = ((x + 0.1) / 0.6).powi(2) + (y / 0.45).powi(2) < 1.0;
        let inner = (x - 0.15).hypot(y - 0.1) < 0.2;
        f64::from(u8::from(outer)) + f64::from(u8::from(inner))
    })
}

impl FromStr for TargetSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let words: Vec<&str> = s.split_whitespace().collect();
        let bad = |why: &str| Error::Config(format!("invalid y_d spec `{s}`: {why}"));
        match words.as_slice() {
            ["zero"] => Ok(TargetSpec::Zero),
            ["indicator", rest @ ..] => {
                if rest.len() != 4 {
                    return Err(bad("expected `indicator cx cy w h`"));
                }
                let mut v = [0.0f64; 4];
                for (slot, word) in v.iter_mut().zip(rest) {
                    *slot = word.parse().map_err(|_| bad(&format!("`{word}` is not a number")))?;
                }
                if !v.iter().all(|x| x.is_finite()) || v[2] <= 0.0 || v[3] <= 0.0 {
                    return Err(bad("box must be finite with positive width and height"));
                }
                Ok(TargetSpec::Indicator { cx: v[0], cy: v[1], w: v[2], h: v[3] })
            }
            ["forward-of", "phantom"] => Ok(TargetSpec::ForwardOf(ControlSource::Phantom)),
            ["forward-of", path] => Ok(TargetSpec::ForwardOf(ControlSource::File(path.into()))),
            ["file", path] => Ok(TargetSpec::File(path.into())),
            _ => Err(bad("expected `zero`, `indicator cx cy w h`, `forward-of phantom|<p0 file>` or `file <p1 file>`")),
        }
    }
}

impl fmt::Display for TargetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetSpec::Zero => write!(f, "zero"),
            TargetSpec::Indicator { cx, cy, w, h } => write!(f, "indicator {cx} {cy} {w} {h}"),
            TargetSpec::ForwardOf(ControlSource::Phantom) => write!(f, "forward-of phantom"),
            TargetSpec::ForwardOf(ControlSource::File(p)) => {
                write!(f, "forward-of {}", p.display())
            }
            TargetSpec::File(p) => write!(f, "file {}", p.display()),
        }
    }
}
