//! OBJ and PLY mesh import/export.
//!
//! Floats are written with the shortest representation that parses back to the same
//! `f64`, so text round-trips are lossless.

use std::fmt::Write as _;
use std::path::Path;

use super::{MeshError, TriMesh, Vec3};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown mesh format: {0}")]
    UnknownFormat(String),
    #[error("invalid mesh: {0}")]
    Mesh(#[from] MeshError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    PlyAscii,
    PlyBinary,
}

impl MeshFormat {
    /// Format from a file extension; `.ply` maps to binary PLY on output.
    pub fn from_path(path: &Path) -> Result<Self, IoError> {
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        match ext.as_deref() {
            Some("obj") => Ok(MeshFormat::Obj),
            Some("ply") => Ok(MeshFormat::PlyBinary),
            _ => Err(IoError::UnknownFormat(path.display().to_string())),
        }
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> IoError {
    IoError::Parse { line, message: message.into() }
}

/// Parses `v` and `f` records; polygons are fan-triangulated, texture/normal indices
/// and negative (relative) indices are accepted, other records ignored.
pub fn parse_obj(text: &str) -> Result<TriMesh, IoError> {
    let mut verts = Vec::new();
    let mut faces = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line_no = ln + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let mut c = [0.0; 3];
                for slot in &mut c {
                    let tok = it.next().ok_or_else(|| parse_err(line_no, "vertex needs 3 coordinates"))?;
                    *slot = tok.parse().map_err(|_| parse_err(line_no, format!("bad coordinate `{tok}`")))?;
                }
                verts.push(Vec3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let mut idx = Vec::new();
                for tok in it {
                    let first = tok.split('/').next().unwrap_or("");
                    let i: i64 = first.parse().map_err(|_| parse_err(line_no, format!("bad face index `{tok}`")))?;
                    let resolved = if i > 0 {
                        i - 1
                    } else if i < 0 {
                        verts.len() as i64 + i
                    } else {
                        return Err(parse_err(line_no, "face index 0"));
                    };
                    if resolved < 0 || resolved as usize >= verts.len() {
                        return Err(parse_err(line_no, format!("face index {i} out of range")));
                    }
                    idx.push(resolved as usize);
                }
                if idx.len() < 3 {
                    return Err(parse_err(line_no, "face needs at least 3 vertices"));
                }
                for k in 1..idx.len() - 1 {
                    faces.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            Some(_) | None => {}
        }
    }
    Ok(TriMesh::new(verts, faces)?)
}

pub fn to_obj(mesh: &TriMesh) -> String {
    let mut s = String::with_capacity(40 * (mesh.vertex_count() + mesh.face_count()));
    for v in mesh.vertices() {
        let _ = writeln!(s, "v {} {} {}", v.x, v.y, v.z);
    }
    for f in mesh.faces() {
        let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    s
}

pub fn to_ply_ascii(mesh: &TriMesh) -> String {
    let mut s = ply_header("ascii", mesh);
    for v in mesh.vertices() {
        let _ = writeln!(s, "{} {} {}", v.x, v.y, v.z);
    }
    for f in mesh.faces() {
        let _ = writeln!(s, "3 {} {} {}", f[0], f[1], f[2]);
    }
    s
}

pub fn to_ply_binary(mesh: &TriMesh) -> Vec<u8> {
    let mut out = ply_header("binary_little_endian", mesh).into_bytes();
    for v in mesh.vertices() {
        for k in 0..3 {
            out.extend_from_slice(&v[k].to_le_bytes());
        }
    }
    for f in mesh.faces() {
        out.push(3u8);
        for &i in f {
            out.extend_from_slice(&(i as u32).to_le_bytes());
        }
    }
    out
}

fn ply_header(format: &str, mesh: &TriMesh) -> String {
    format!(
        "ply\nformat {format} 1.0\nelement vertex {}\nproperty double x\nproperty double y\nproperty double z\n\
         element face {}\nproperty list uchar uint vertex_indices\nend_header\n",
        mesh.vertex_count(),
        mesh.face_count()
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn read_le(self, b: &[u8]) -> f64 {
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug)]
enum Property {
    Scalar(String, Scalar),
    List(String, Scalar, Scalar),
}

#[derive(Debug)]
struct Element {
    name: String,
    count: usize,
    props: Vec<Property>,
}

/// Reads ASCII or binary little-endian PLY with `vertex` (x, y, z) and `face`
/// (`vertex_indices` or `vertex_index` list) elements.
pub fn parse_ply(bytes: &[u8]) -> Result<TriMesh, IoError> {
    let mut pos = 0usize;
    let mut line_no = 0usize;
    let next_line = |pos: &mut usize| -> Option<String> {
        if *pos >= bytes.len() {
            return None;
        }
        let end = bytes[*pos..].iter().position(|&b| b == b'\n').map_or(bytes.len(), |e| *pos + e);
        let s = String::from_utf8_lossy(&bytes[*pos..end]).trim_end_matches('\r').to_string();
        *pos = (end + 1).min(bytes.len());
        Some(s)
    };
    let mut elements: Vec<Element> = Vec::new();
    let mut format = None;
    let mut header_lines = 0;
    loop {
        let line = next_line(&mut pos).ok_or_else(|| parse_err(header_lines + 1, "unterminated header"))?;
        header_lines += 1;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if header_lines == 1 {
            if toks != ["ply"] {
                return Err(parse_err(1, "missing `ply` magic"));
            }
            continue;
        }
        match toks.first().copied() {
            Some("format") => format = toks.get(1).map(|s| s.to_string()),
            Some("element") => {
                let name = toks.get(1).ok_or_else(|| parse_err(header_lines, "element without name"))?;
                let count = toks
                    .get(2)
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| parse_err(header_lines, "element without count"))?;
                elements.push(Element { name: name.to_string(), count, props: Vec::new() });
            }
            Some("property") => {
                let el = elements.last_mut().ok_or_else(|| parse_err(header_lines, "property before element"))?;
                let bad = || parse_err(header_lines, format!("bad property `{line}`"));
                if toks.get(1) == Some(&"list") {
                    let c = toks.get(2).and_then(|t| Scalar::parse(t)).ok_or_else(bad)?;
                    let v = toks.get(3).and_then(|t| Scalar::parse(t)).ok_or_else(bad)?;
                    let name = toks.get(4).ok_or_else(bad)?;
                    el.props.push(Property::List(name.to_string(), c, v));
                } else {
                    let s = toks.get(1).and_then(|t| Scalar::parse(t)).ok_or_else(bad)?;
                    let name = toks.get(2).ok_or_else(bad)?;
                    el.props.push(Property::Scalar(name.to_string(), s));
                }
            }
            Some("end_header") => break,
            Some("comment") | Some("obj_info") | None => {}
            Some(other) => return Err(parse_err(header_lines, format!("unexpected header keyword `{other}`"))),
        }
    }
    line_no += header_lines;
    let binary = match format.as_deref() {
        Some("ascii") => false,
        Some("binary_little_endian") => true,
        Some(f) => return Err(IoError::UnknownFormat(format!("ply format `{f}`"))),
        None => return Err(parse_err(2, "missing format line")),
    };

    let mut verts = Vec::new();
    let mut faces = Vec::new();
    for el in &elements {
        for _ in 0..el.count {
            let mut xyz = [0.0; 3];
            let mut poly: Vec<usize> = Vec::new();
            if binary {
                for p in &el.props {
                    match p {
                        Property::Scalar(name, s) => {
                            let b = bytes
                                .get(pos..pos + s.size())
                                .ok_or_else(|| parse_err(line_no, "truncated binary body"))?;
                            let v = s.read_le(b);
                            pos += s.size();
                            set_coord(&mut xyz, name, v);
                        }
                        Property::List(name, c, s) => {
                            let b = bytes
                                .get(pos..pos + c.size())
                                .ok_or_else(|| parse_err(line_no, "truncated binary body"))?;
                            let n = c.read_le(b) as usize;
                            pos += c.size();
                            for _ in 0..n {
                                let b = bytes
                                    .get(pos..pos + s.size())
                                    .ok_or_else(|| parse_err(line_no, "truncated binary body"))?;
                                if is_index_list(name) {
                                    poly.push(s.read_le(b) as usize);
                                }
                                pos += s.size();
                            }
                        }
                    }
                }
            } else {
                let line = next_line(&mut pos).ok_or_else(|| parse_err(line_no + 1, "unexpected end of body"))?;
                line_no += 1;
                let mut toks = line.split_whitespace();
                let num = |toks: &mut std::str::SplitWhitespace| -> Result<f64, IoError> {
                    let t = toks.next().ok_or_else(|| parse_err(line_no, "missing value"))?;
                    t.parse::<f64>().map_err(|_| parse_err(line_no, format!("bad number `{t}`")))
                };
                for p in &el.props {
                    match p {
                        Property::Scalar(name, _) => {
                            let v = num(&mut toks)?;
                            set_coord(&mut xyz, name, v);
                        }
                        Property::List(name, _, _) => {
                            let n = num(&mut toks)? as usize;
                            for _ in 0..n {
                                let v = num(&mut toks)?;
                                if is_index_list(name) {
                                    poly.push(v as usize);
                                }
                            }
                        }
                    }
                }
            }
            match el.name.as_str() {
                "vertex" => verts.push(Vec3::new(xyz[0], xyz[1], xyz[2])),
                "face" => {
                    if poly.len() < 3 {
                        return Err(parse_err(line_no, "face needs at least 3 vertices"));
                    }
                    for k in 1..poly.len() - 1 {
                        faces.push([poly[0], poly[k], poly[k + 1]]);
                    }
                }
                _ => {}
            }
        }
    }
    Ok(TriMesh::new(verts, faces)?)
}

fn is_index_list(name: &str) -> bool {
    name == "vertex_indices" || name == "vertex_index"
}

fn set_coord(xyz: &mut [f64; 3], name: &str, v: f64) {
    match name {
        "x" => xyz[0] = v,
        "y" => xyz[1] = v,
        "z" => xyz[2] = v,
        _ => {}
    }
}

pub fn read_mesh(path: &Path) -> Result<TriMesh, IoError> {
    let bytes = std::fs::read(path)?;
    match MeshFormat::from_path(path)? {
        MeshFormat::Obj => parse_obj(&String::from_utf8_lossy(&bytes)),
        MeshFormat::PlyAscii | MeshFormat::PlyBinary => parse_ply(&bytes),
    }
}

pub fn write_mesh(path: &Path, mesh: &TriMesh) -> Result<(), IoError> {
    write_mesh_as(path, mesh, MeshFormat::from_path(path)?)
}

pub fn write_mesh_as(path: &Path, mesh: &TriMesh, format: MeshFormat) -> Result<(), IoError> {
    let bytes = match format {
        MeshFormat::Obj => to_obj(mesh).into_bytes(),
        MeshFormat::PlyAscii => to_ply_ascii(mesh).into_bytes(),
        MeshFormat::PlyBinary => to_ply_binary(mesh),
    };
    std::fs::write(path, bytes)?;
    Ok(())
}
