use std::collections::HashSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use ply_rs::parser::Parser;
use ply_rs::ply::{DefaultElement, Property};

use crate::domain::SurfaceDomain;
use crate::geometry::{TriMesh, Vec3};
use crate::ops::{interpolate_at, SurfaceField};

use super::{quantize, IoError};

/// Loads a triangle mesh from `.obj` or `.ply`, with per-vertex colors when present.
pub fn load_mesh(path: &Path) -> Result<TriMesh, IoError> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    match ext.as_str() {
        "obj" => load_obj(path),
        "ply" => load_ply(path),
        _ => Err(IoError::format(path, "unsupported mesh format; expected .obj or .ply")),
    }
}

fn load_obj(path: &Path) -> Result<TriMesh, IoError> {
    let options = tobj::LoadOptions { single_index: true, triangulate: true, ..Default::default() };
    let (models, _) = tobj::load_obj(path, &options).map_err(|e| IoError::format(path, e.to_string()))?;
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    let mut colors = Vec::new();
    for model in &models {
        let m = &model.mesh;
        let offset = vertices.len();
        vertices.extend(m.positions.chunks_exact(3).map(|p| Vec3::new(p[0] as f64, p[1] as f64, p[2] as f64)));
        faces.extend(m.indices.chunks_exact(3).map(|f| [0, 1, 2].map(|k| offset + f[k] as usize)));
        colors.extend(m.vertex_color.chunks_exact(3).map(|c| [c[0] as f64, c[1] as f64, c[2] as f64]));
    }
    let mesh = TriMesh::new(vertices, faces)?;
    Ok(if !colors.is_empty() && colors.len() == mesh.vertices().len() { mesh.with_colors(colors) } else { mesh })
}

fn scalar(p: &Property) -> Option<f64> {
    Some(match *p {
        Property::Float(v) => v as f64,
        Property::Double(v) => v,
        Property::Char(v) => v as f64,
        Property::UChar(v) => v as f64,
        Property::Short(v) => v as f64,
        Property::UShort(v) => v as f64,
        Property::Int(v) => v as f64,
        Property::UInt(v) => v as f64,
        _ => return None,
    })
}

fn index_list(p: &Property) -> Option<Vec<usize>> {
    Some(match p {
        Property::ListInt(v) => v.iter().map(|&i| i as usize).collect(),
        Property::ListUInt(v) => v.iter().map(|&i| i as usize).collect(),
        Property::ListUChar(v) => v.iter().map(|&i| i as usize).collect(),
        Property::ListShort(v) => v.iter().map(|&i| i as usize).collect(),
        Property::ListUShort(v) => v.iter().map(|&i| i as usize).collect(),
        _ => return None,
    })
}

fn read_ply(path: &Path) -> Result<ply_rs::ply::Ply<DefaultElement>, IoError> {
    let file = File::open(path).map_err(IoError::file(path))?;
    Parser::<DefaultElement>::new()
        .read_ply(&mut BufReader::new(file))
        .map_err(|e| IoError::format(path, e.to_string()))
}

/// Per-vertex colors in `[0, 1]`; 8-bit integer colors are divided by 255.
fn vertex_colors(path: &Path, vertices: &[DefaultElement]) -> Result<Option<Vec<[f64; 3]>>, IoError> {
    let Some(first) = vertices.first() else { return Ok(None) };
    if !first.contains_key("red") {
        return Ok(None);
    }
    let scale = match first.get("red") {
        Some(Property::Float(_) | Property::Double(_)) => 1.0,
        Some(Property::UShort(_)) => 65535.0,
        _ => 255.0,
    };
    vertices
        .iter()
        .map(|v| {
            let mut c = [0.0; 3];
            for (k, name) in ["red", "green", "blue"].into_iter().enumerate() {
                c[k] = v
                    .get(name)
                    .and_then(scalar)
                    .ok_or_else(|| IoError::format(path, format!("vertex without `{name}`")))?
                    / scale;
            }
            Ok(c)
        })
        .collect::<Result<Vec<_>, _>>()
        .map(Some)
}

fn load_ply(path: &Path) -> Result<TriMesh, IoError> {
    let ply = read_ply(path)?;
    let empty = Vec::new();
    let verts = ply.payload.get("vertex").unwrap_or(&empty);
    let vertices = verts
        .iter()
        .map(|v| {
            let coord = |name| {
                v.get(name).and_then(scalar).ok_or_else(|| IoError::format(path, format!("vertex without `{name}`")))
            };
            Ok(Vec3::new(coord("x")?, coord("y")?, coord("z")?))
        })
        .collect::<Result<Vec<_>, IoError>>()?;
    let mut faces = Vec::new();
    for f in ply.payload.get("face").unwrap_or(&empty) {
        let idx = f
            .get("vertex_indices")
            .or_else(|| f.get("vertex_index"))
            .and_then(index_list)
            .ok_or_else(|| IoError::format(path, "face without a vertex index list"))?;
        if idx.len() < 3 {
            return Err(IoError::format(path, "face with fewer than three vertices"));
        }
        // fan triangulation of polygons
        faces.extend((1..idx.len() - 1).map(|k| [idx[0], idx[k], idx[k + 1]]));
    }
    let colors = vertex_colors(path, verts)?;
    let mesh = TriMesh::new(vertices, faces)?;
    Ok(match colors {
        Some(c) => mesh.with_colors(c),
        None => mesh,
    })
}

/// 8-bit vertex colors of a PLY file, in file order.
pub fn read_ply_colors(path: &Path) -> Result<Vec<[u8; 3]>, IoError> {
    let ply = read_ply(path)?;
    let empty = Vec::new();
    let colors = vertex_colors(path, ply.payload.get("vertex").unwrap_or(&empty))?
        .ok_or_else(|| IoError::format(path, "no vertex colors"))?;
    Ok(colors.into_iter().map(|c| c.map(quantize)).collect())
}

/// Writes an ASCII PLY with 8-bit vertex colors and optional triangles.
pub fn write_ply(path: &Path, vertices: &[Vec3], colors: &[[u8; 3]], faces: &[[usize; 3]]) -> Result<(), IoError> {
    assert_eq!(vertices.len(), colors.len());
    let file = File::create(path).map_err(IoError::file(path))?;
    let mut w = BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        writeln!(w, "ply\nformat ascii 1.0\nelement vertex {}", vertices.len())?;
        writeln!(w, "property double x\nproperty double y\nproperty double z")?;
        writeln!(w, "property uchar red\nproperty uchar green\nproperty uchar blue")?;
        if !faces.is_empty() {
            writeln!(w, "element face {}\nproperty list uchar int vertex_indices", faces.len())?;
        }
        writeln!(w, "end_header")?;
        for (v, c) in vertices.iter().zip(colors) {
            writeln!(w, "{:e} {:e} {:e} {} {} {}", v.x, v.y, v.z, c[0], c[1], c[2])?;
        }
        for f in faces {
            writeln!(w, "3 {} {} {}", f[0], f[1], f[2])?;
        }
        w.flush()
    };
    write().map_err(IoError::file(path))
}

fn color_of(values: &[f64]) -> Result<[u8; 3], IoError> {
    match values.len() {
        1 => Ok([quantize(values[0]); 3]),
        3 => Ok([quantize(values[0]), quantize(values[1]), quantize(values[2])]),
        n => Err(IoError::Mismatch(format!("cannot export {n} channels as color"))),
    }
}

/// On-surface samples for export: the closest point of each band point, keeping
/// the first band point (in band order) whose closest point falls in each grid cell.
pub fn surface_samples(field: &SurfaceField, domain: &SurfaceDomain) -> Result<(Vec<Vec3>, Vec<[u8; 3]>), IoError> {
    if field.len() != domain.len() {
        return Err(IoError::Mismatch(format!("field has {} points, band has {}", field.len(), domain.len())));
    }
    let spec = domain.band().spec();
    let origin = Vec3::from(spec.origin);
    let mut seen = HashSet::new();
    let mut points = Vec::new();
    let mut colors = Vec::new();
    for (i, cp) in domain.closest_points().iter().enumerate() {
        let cell = ((cp.position - origin) / spec.h).map(|c| c.floor() as i64);
        if seen.insert([cell.x, cell.y, cell.z]) {
            points.push(cp.position);
            colors.push(color_of(field.point(i))?);
        }
    }
    Ok((points, colors))
}

/// Writes the field as a colored point cloud; returns the vertex count.
pub fn export_surface(field: &SurfaceField, domain: &SurfaceDomain, path: &Path) -> Result<usize, IoError> {
    let (points, colors) = surface_samples(field, domain)?;
    write_ply(path, &points, &colors, &[])?;
    Ok(points.len())
}

/// Writes `mesh` with vertex colors interpolated from the field at each vertex.
pub fn export_mesh_colors(
    mesh: &TriMesh,
    field: &SurfaceField,
    domain: &SurfaceDomain,
    path: &Path,
) -> Result<(), IoError> {
    let colors = mesh
        .vertices()
        .iter()
        .map(|v| {
            let values = interpolate_at(domain.band(), field, v).map_err(|e| IoError::Mismatch(e.to_string()))?;
            color_of(&values)
        })
        .collect::<Result<Vec<_>, _>>()?;
    write_ply(path, mesh.vertices(), &colors, mesh.faces())
}
