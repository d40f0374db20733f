//! Text point-cloud formats: `xyz`, ASCII PLY and OFF.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use super::{Point3, PointCloud};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudFormat {
    /// Whitespace-separated `x y z [nx ny nz]` per line.
    Xyz,
    PlyAscii,
    Off,
}

impl CloudFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "xyz" | "txt" | "pts" => Some(CloudFormat::Xyz),
            "ply" => Some(CloudFormat::PlyAscii),
            "off" => Some(CloudFormat::Off),
            _ => None,
        }
    }
}

impl FromStr for CloudFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "xyz" => Ok(CloudFormat::Xyz),
            "ply" | "ply_ascii" => Ok(CloudFormat::PlyAscii),
            "off" => Ok(CloudFormat::Off),
            other => Err(Error::Parameter(format!("unknown point-cloud format '{other}'"))),
        }
    }
}

pub fn load_point_cloud(path: impl AsRef<Path>, format: CloudFormat) -> Result<PointCloud> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_point_cloud(&text, format)
}

pub fn parse_point_cloud(text: &str, format: CloudFormat) -> Result<PointCloud> {
    let (points, normals) = match format {
        CloudFormat::Xyz => parse_xyz(text)?,
        CloudFormat::PlyAscii => parse_ply(text)?,
        CloudFormat::Off => parse_off(text)?,
    };
    if points.is_empty() {
        return Err(Error::EmptyInput("point cloud has no vertices".into()));
    }
    let mut cloud = PointCloud::new(points)?;
    if let Some(n) = normals {
        let n = n
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                v.normalized()
                    .ok_or_else(|| Error::Validation(format!("normal {i} is zero")))
            })
            .collect::<Result<Vec<_>>>()?;
        cloud.set_normals(n)?;
    }
    Ok(cloud)
}

type Parsed = (Vec<Point3>, Option<Vec<Point3>>);

fn numbers(line: &str, lineno: usize) -> Result<Vec<f64>> {
    line.split_whitespace()
        .map(|tok| {
            tok.parse::<f64>().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("'{tok}' is not a number"),
            })
        })
        .collect()
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_xyz(text: &str) -> Result<Parsed> {
    let mut points = Vec::new();
    let mut normals = Vec::new();
    let mut arity = None;
    for (lineno, line) in content_lines(text) {
        let v = numbers(line, lineno)?;
        if v.len() != 3 && v.len() != 6 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected 3 or 6 fields, found {}", v.len()),
            });
        }
        match arity {
            None => arity = Some(v.len()),
            Some(a) if a != v.len() => {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("expected {a} fields like the first record, found {}", v.len()),
                })
            }
            _ => {}
        }
        points.push(Point3::new(v[0], v[1], v[2]));
        if v.len() == 6 {
            normals.push(Point3::new(v[3], v[4], v[5]));
        }
    }
    let normals = (arity == Some(6)).then_some(normals);
    Ok((points, normals))
}

struct PlyElement {
    name: String,
    count: usize,
    properties: Vec<String>,
}

fn parse_ply(text: &str) -> Result<Parsed> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match lines.next() {
        Some((_, "ply")) => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: "missing 'ply' magic".into(),
            })
        }
    }
    let mut elements: Vec<PlyElement> = Vec::new();
    let mut header_done = false;
    for (lineno, line) in lines.by_ref() {
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("format") => {
                if tok.next() != Some("ascii") {
                    return Err(Error::Parse {
                        line: lineno,
                        message: "only ASCII PLY is supported".into(),
                    });
                }
            }
            Some("element") => {
                let name = tok.next().unwrap_or_default().to_string();
                let count = tok.next().and_then(|c| c.parse().ok()).ok_or(Error::Parse {
                    line: lineno,
                    message: "bad element count".into(),
                })?;
                elements.push(PlyElement {
                    name,
                    count,
                    properties: Vec::new(),
                });
            }
            Some("property") => {
                let el = elements.last_mut().ok_or(Error::Parse {
                    line: lineno,
                    message: "property before any element".into(),
                })?;
                // `property list ...` entries occupy one line per element; the name is last
                let name = line.split_whitespace().last().unwrap_or_default();
                el.properties.push(name.to_string());
            }
            Some("end_header") => {
                header_done = true;
                break;
            }
            Some("comment") | Some("obj_info") | None => {}
            Some(other) => {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("unexpected header keyword '{other}'"),
                })
            }
        }
    }
    if !header_done {
        return Err(Error::Parse {
            line: text.lines().count(),
            message: "missing end_header".into(),
        });
    }

    let mut points = Vec::new();
    let mut normals = Vec::new();
    let mut has_normals = false;
    for el in &elements {
        let pos = |name: &str| el.properties.iter().position(|p| p == name);
        let is_vertex = el.name == "vertex";
        let (ix, iy, iz) = (pos("x"), pos("y"), pos("z"));
        let (inx, iny, inz) = (pos("nx"), pos("ny"), pos("nz"));
        if is_vertex {
            if ix.is_none() || iy.is_none() || iz.is_none() {
                return Err(Error::Parse {
                    line: 1,
                    message: "vertex element lacks x/y/z".into(),
                });
            }
            has_normals = inx.is_some() && iny.is_some() && inz.is_some();
        }
        for _ in 0..el.count {
            let (lineno, line) = lines.next().ok_or(Error::Parse {
                line: text.lines().count(),
                message: format!("file ends before all '{}' records", el.name),
            })?;
            if !is_vertex {
                continue;
            }
            let v = numbers(line, lineno)?;
            if v.len() < el.properties.len() {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("expected {} vertex fields, found {}", el.properties.len(), v.len()),
                });
            }
            points.push(Point3::new(v[ix.unwrap()], v[iy.unwrap()], v[iz.unwrap()]));
            if has_normals {
                normals.push(Point3::new(v[inx.unwrap()], v[iny.unwrap()], v[inz.unwrap()]));
            }
        }
    }
    Ok((points, has_normals.then_some(normals)))
}

fn parse_off(text: &str) -> Result<Parsed> {
    let mut lines = content_lines(text);
    let (lineno, magic) = lines.next().ok_or(Error::EmptyInput("empty OFF file".into()))?;
    let mut fields = magic.split_whitespace();
    let with_normals = match fields.next() {
        Some("OFF") => false,
        Some("NOFF") => true,
        _ => {
            return Err(Error::Parse {
                line: lineno,
                message: "missing OFF header".into(),
            })
        }
    };
    // counts may share the header line ("OFF 4 0 0")
    let rest: Vec<&str> = fields.collect();
    let counts = if rest.is_empty() {
        let (l, line) = lines.next().ok_or(Error::Parse {
            line: lineno,
            message: "missing vertex/face counts".into(),
        })?;
        numbers(line, l)?
    } else {
        numbers(&rest.join(" "), lineno)?
    };
    let nv = match counts.first() {
        Some(&n) if n >= 0.0 && n.fract() == 0.0 => n as usize,
        _ => {
            return Err(Error::Parse {
                line: lineno,
                message: "bad vertex count".into(),
            })
        }
    };
    let want = if with_normals { 6 } else { 3 };
    let mut points = Vec::with_capacity(nv);
    let mut normals = Vec::new();
    for _ in 0..nv {
        let (l, line) = lines.next().ok_or(Error::Parse {
            line: text.lines().count(),
            message: format!("expected {nv} vertices"),
        })?;
        let v = numbers(line, l)?;
        if v.len() < want {
            return Err(Error::Parse {
                line: l,
                message: format!("expected {want} vertex fields, found {}", v.len()),
            });
        }
        points.push(Point3::new(v[0], v[1], v[2]));
        if with_normals {
            normals.push(Point3::new(v[3], v[4], v[5]));
        }
    }
    Ok((points, with_normals.then_some(normals)))
}

/// Serializes a cloud as `xyz` text; normals are appended when present.
pub fn write_point_cloud_xyz(cloud: &PointCloud) -> String {
    let mut out = String::new();
    match cloud.normals() {
        Some(normals) => {
            for (p, n) in cloud.points().iter().zip(normals) {
                let _ = writeln!(out, "{} {} {} {} {} {}", p.x, p.y, p.z, n.x, n.y, n.z);
            }
        }
        None => {
            for p in cloud.points() {
                let _ = writeln!(out, "{} {} {}", p.x, p.y, p.z);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xyz_three_points() {
        let c = parse_point_cloud("0 0 0\n1 0 0\n0 1 0\n", CloudFormat::Xyz).unwrap();
        assert_eq!(c.len(), 3);
        assert!(c.normals().is_none());
        assert_eq!(c.points()[1], Point3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn xyz_with_normals() {
        let c = parse_point_cloud("0 0 0 0 0 2\n1 0 0 0 0 1\n", CloudFormat::Xyz).unwrap();
        assert_eq!(c.normals().unwrap()[0], Point3::new(0.0, 0.0, 1.0));
    }

    #[test]
    fn xyz_arity_violation_reports_line() {
        let err = parse_point_cloud("0 0\n", CloudFormat::Xyz).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
        let err = parse_point_cloud("0 0 0\n1 1 x\n", CloudFormat::Xyz).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn empty_file_is_empty_input() {
        assert!(matches!(
            parse_point_cloud("\n# nothing\n", CloudFormat::Xyz),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn off_four_vertices() {
        let text = "OFF\n4 0 0\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n";
        let c = parse_point_cloud(text, CloudFormat::Off).unwrap();
        assert_eq!(c.len(), 4);
        let inline = parse_point_cloud("OFF 4 1 0\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n3 0 1 2\n", CloudFormat::Off).unwrap();
        assert_eq!(inline.len(), 4);
    }

    #[test]
    fn ply_vertices_and_normals_faces_ignored() {
        let text = "ply\nformat ascii 1.0\ncomment x\nelement vertex 2\nproperty float x\nproperty float y\n\
property float z\nproperty float nx\nproperty float ny\nproperty float nz\nelement face 1\n\
property list uchar int vertex_indices\nend_header\n0 0 0 1 0 0\n1 2 3 0 1 0\n3 0 1 1\n";
        let c = parse_point_cloud(text, CloudFormat::PlyAscii).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.points()[1], Point3::new(1.0, 2.0, 3.0));
        assert_eq!(c.normals().unwrap()[1], Point3::new(0.0, 1.0, 0.0));
    }

    #[test]
    fn binary_ply_rejected() {
        let text = "ply\nformat binary_little_endian 1.0\nend_header\n";
        assert!(matches!(
            parse_point_cloud(text, CloudFormat::PlyAscii),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn xyz_writer_parses_back() {
        let c = PointCloud::with_normals(vec![Point3::new(0.1, 0.2, 0.3)], vec![Point3::new(0.0, 1.0, 0.0)]).unwrap();
        let back = parse_point_cloud(&write_point_cloud_xyz(&c), CloudFormat::Xyz).unwrap();
        assert_eq!(back, c);
    }
}
