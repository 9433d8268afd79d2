//! Writes the colored mesh used by the mesh configs: a bumpy subdivided
//! icosahedron painted with flat Voronoi patches.
//!
//! Usage: `cargo run --example colored_blob -- configs/assets/blob.ply`

use cpdiff::geometry::TriMesh;
use cpdiff::io::{quantize, write_ply};
use cpdiff::Vec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PALETTE: [[f64; 3]; 6] = [
    [0.93, 0.78, 0.25],
    [0.85, 0.35, 0.20],
    [0.30, 0.60, 0.35],
    [0.95, 0.92, 0.85],
    [0.55, 0.30, 0.55],
    [0.35, 0.65, 0.85],
];

fn main() {
    let path = std::env::args().nth(1).unwrap_or_else(|| "blob.ply".into());
    let sphere = TriMesh::icosphere(5, 1.0);
    let bump = |p: &Vec3| 1.0 + 0.12 * (3.0 * p.x).sin() * (2.0 * p.y).cos() + 0.08 * (4.0 * p.z).sin();
    let vertices: Vec<Vec3> = sphere.vertices().iter().map(|p| p * bump(p)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let sites: Vec<(Vec3, usize)> = (0..48)
        .map(|_| {
            let v = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            (v.normalize(), rng.gen_range(0..PALETTE.len()))
        })
        .collect();
    let colors: Vec<[u8; 3]> = sphere
        .vertices()
        .iter()
        .map(|p| {
            let nearest = sites.iter().min_by(|a, b| (a.0 - p).norm().total_cmp(&(b.0 - p).norm())).unwrap();
            PALETTE[nearest.1].map(quantize)
        })
        .collect();
    write_ply(std::path::Path::new(&path), &vertices, &colors, sphere.faces()).expect("write mesh");
    println!("wrote {path}: {} vertices, {} faces", vertices.len(), sphere.faces().len());
}
