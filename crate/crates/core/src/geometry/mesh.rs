use std::collections::HashMap;

use super::{GeometryError, SurfacePoint, Vec3};

/// Closest point on a triangle mesh with the feature it landed on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshHit {
    pub point: SurfacePoint,
    pub face: usize,
    /// Barycentric weights of `point.position` w.r.t. the face's vertices.
    pub bary: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Feature {
    Vertex(usize),
    /// Edge from local vertex `k` to `k + 1 (mod 3)`.
    Edge(usize),
    Face,
}

#[derive(Debug, Clone, Copy)]
struct Aabb {
    min: Vec3,
    max: Vec3,
}

impl Aabb {
    fn empty() -> Self {
        Self { min: Vec3::repeat(f64::INFINITY), max: Vec3::repeat(f64::NEG_INFINITY) }
    }

    fn grow(&mut self, p: &Vec3) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    fn dist2(&self, p: &Vec3) -> f64 {
        let d = (self.min - p).sup(&(p - self.max)).sup(&Vec3::zeros());
        d.norm_squared()
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf { bounds: Aabb, start: usize, end: usize },
    Inner { bounds: Aabb, left: usize, right: usize },
}

impl Node {
    fn bounds(&self) -> &Aabb {
        match self {
            Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => bounds,
        }
    }
}

const LEAF_SIZE: usize = 4;

/// Triangle mesh with optional per-vertex RGB colors and a BVH for closest point queries.
///
/// Normals follow the triangle winding (counter-clockwise seen from the normal side).
/// Vertex normals are angle-weighted, edge normals average the adjacent faces.
#[derive(Debug, Clone)]
pub struct TriMesh {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    colors: Option<Vec<[f64; 3]>>,
    face_normals: Vec<Vec3>,
    vertex_normals: Vec<Vec3>,
    edge_normals: Vec<[Vec3; 3]>,
    nodes: Vec<Node>,
    order: Vec<usize>,
}

impl TriMesh {
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self, GeometryError> {
        if faces.is_empty() {
            return Err(GeometryError::EmptyMesh);
        }
        for (f, tri) in faces.iter().enumerate() {
            if let Some(&v) = tri.iter().find(|&&v| v >= vertices.len()) {
                return Err(GeometryError::BadFaceIndex { face: f, vertex: v, count: vertices.len() });
            }
        }

        let face_normals: Vec<Vec3> = faces
            .iter()
            .map(|t| {
                let n = (vertices[t[1]] - vertices[t[0]]).cross(&(vertices[t[2]] - vertices[t[0]]));
                n.try_normalize(0.0).unwrap_or_else(Vec3::z)
            })
            .collect();

        let mut vertex_normals = vec![Vec3::zeros(); vertices.len()];
        for (t, n) in faces.iter().zip(&face_normals) {
            for k in 0..3 {
                let p = vertices[t[k]];
                let a = (vertices[t[(k + 1) % 3]] - p).normalize();
                let b = (vertices[t[(k + 2) % 3]] - p).normalize();
                let angle = a.dot(&b).clamp(-1.0, 1.0).acos();
                vertex_normals[t[k]] += n * angle;
            }
        }
        for n in &mut vertex_normals {
            *n = n.try_normalize(0.0).unwrap_or_else(Vec3::z);
        }

        let mut edge_faces: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (f, t) in faces.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                edge_faces.entry((a.min(b), a.max(b))).or_default().push(f);
            }
        }
        let edge_normals = faces
            .iter()
            .map(|t| {
                std::array::from_fn(|k| {
                    let (a, b) = (t[k], t[(k + 1) % 3]);
                    let sum: Vec3 = edge_faces[&(a.min(b), a.max(b))].iter().map(|&f| face_normals[f]).sum();
                    sum.try_normalize(0.0).unwrap_or_else(Vec3::z)
                })
            })
            .collect();

        let mut mesh = Self {
            vertices,
            faces,
            colors: None,
            face_normals,
            vertex_normals,
            edge_normals,
            nodes: Vec::new(),
            order: Vec::new(),
        };
        mesh.build_bvh();
        Ok(mesh)
    }

    pub fn with_colors(mut self, colors: Vec<[f64; 3]>) -> Self {
        assert_eq!(colors.len(), self.vertices.len(), "one color per vertex");
        self.colors = Some(colors);
        self
    }

    /// Icosahedron refined `subdivisions` times, vertices projected to the sphere.
    pub fn icosphere(subdivisions: u32, radius: f64) -> Self {
        let t = (1.0 + 5f64.sqrt()) / 2.0;
        let mut verts: Vec<Vec3> = [
            [-1.0, t, 0.0],
            [1.0, t, 0.0],
            [-1.0, -t, 0.0],
            [1.0, -t, 0.0],
            [0.0, -1.0, t],
            [0.0, 1.0, t],
            [0.0, -1.0, -t],
            [0.0, 1.0, -t],
            [t, 0.0, -1.0],
            [t, 0.0, 1.0],
            [-t, 0.0, -1.0],
            [-t, 0.0, 1.0],
        ]
        .iter()
        .map(|p| Vec3::from(*p).normalize())
        .collect();
        let mut faces: Vec<[usize; 3]> = vec![
            [0, 11, 5],
            [0, 5, 1],
            [0, 1, 7],
            [0, 7, 10],
            [0, 10, 11],
            [1, 5, 9],
            [5, 11, 4],
            [11, 10, 2],
            [10, 7, 6],
            [7, 1, 8],
            [3, 9, 4],
            [3, 4, 2],
            [3, 2, 6],
            [3, 6, 8],
            [3, 8, 9],
            [4, 9, 5],
            [2, 4, 11],
            [6, 2, 10],
            [8, 6, 7],
            [9, 8, 1],
        ];
        for _ in 0..subdivisions {
            let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
            let mut midpoint = |a: usize, b: usize, verts: &mut Vec<Vec3>| {
                *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                    verts.push(((verts[a] + verts[b]) / 2.0).normalize());
                    verts.len() - 1
                })
            };
            faces = faces
                .iter()
                .flat_map(|&[a, b, c]| {
                    let ab = midpoint(a, b, &mut verts);
                    let bc = midpoint(b, c, &mut verts);
                    let ca = midpoint(c, a, &mut verts);
                    [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
                })
                .collect();
        }
        for v in &mut verts {
            *v *= radius;
        }
        Self::new(verts, faces).expect("icosphere is a valid mesh")
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn colors(&self) -> Option<&[[f64; 3]]> {
        self.colors.as_deref()
    }

    pub fn vertex_normals(&self) -> &[Vec3] {
        &self.vertex_normals
    }

    pub(crate) fn bounds(&self) -> (Vec3, Vec3) {
        let b = self.nodes[0].bounds();
        (b.min, b.max)
    }

    fn face_bounds(&self, f: usize) -> Aabb {
        let mut b = Aabb::empty();
        for &v in &self.faces[f] {
            b.grow(&self.vertices[v]);
        }
        b
    }

    fn build_bvh(&mut self) {
        let centroids: Vec<Vec3> = self
            .faces
            .iter()
            .map(|t| (self.vertices[t[0]] + self.vertices[t[1]] + self.vertices[t[2]]) / 3.0)
            .collect();
        let mut order: Vec<usize> = (0..self.faces.len()).collect();
        let mut nodes = Vec::with_capacity(2 * self.faces.len() / LEAF_SIZE + 1);
        self.build_node(&mut nodes, &mut order, &centroids, 0, self.faces.len());
        self.nodes = nodes;
        self.order = order;
    }

    fn build_node(
        &self,
        nodes: &mut Vec<Node>,
        order: &mut [usize],
        centroids: &[Vec3],
        start: usize,
        end: usize,
    ) -> usize {
        let mut bounds = Aabb::empty();
        let mut cbounds = Aabb::empty();
        for &f in &order[start..end] {
            let fb = self.face_bounds(f);
            bounds.grow(&fb.min);
            bounds.grow(&fb.max);
            cbounds.grow(&centroids[f]);
        }
        let id = nodes.len();
        if end - start <= LEAF_SIZE {
            nodes.push(Node::Leaf { bounds, start, end });
            return id;
        }
        nodes.push(Node::Leaf { bounds, start, end });
        let axis = (cbounds.max - cbounds.min).imax();
        let mid = (start + end) / 2;
        order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            centroids[a][axis].total_cmp(&centroids[b][axis]).then(a.cmp(&b))
        });
        let left = self.build_node(nodes, order, centroids, start, mid);
        let right = self.build_node(nodes, order, centroids, mid, end);
        nodes[id] = Node::Inner { bounds, left, right };
        id
    }

    /// Exact closest point over all triangles.
    pub fn closest(&self, x: &Vec3) -> MeshHit {
        let mut best = (f64::INFINITY, 0usize, Vec3::zeros(), [1.0, 0.0, 0.0], Feature::Face);
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            match &self.nodes[id] {
                Node::Leaf { bounds, start, end } => {
                    if bounds.dist2(x) >= best.0 {
                        continue;
                    }
                    for &f in &self.order[*start..*end] {
                        let t = self.faces[f];
                        let (p, bary, feature) =
                            closest_on_triangle(x, &self.vertices[t[0]], &self.vertices[t[1]], &self.vertices[t[2]]);
                        let d2 = (x - p).norm_squared();
                        if d2 < best.0 || (d2 == best.0 && f < best.1) {
                            best = (d2, f, p, bary, feature);
                        }
                    }
                }
                Node::Inner { bounds, left, right } => {
                    if bounds.dist2(x) >= best.0 {
                        continue;
                    }
                    let (dl, dr) = (self.nodes[*left].bounds().dist2(x), self.nodes[*right].bounds().dist2(x));
                    if dl < dr {
                        stack.push(*right);
                        stack.push(*left);
                    } else {
                        stack.push(*left);
                        stack.push(*right);
                    }
                }
            }
        }
        let (d2, face, position, bary, feature) = best;
        let normal = match feature {
            Feature::Face => self.face_normals[face],
            Feature::Edge(k) => self.edge_normals[face][k],
            Feature::Vertex(k) => self.vertex_normals[self.faces[face][k]],
        };
        MeshHit { point: SurfacePoint { position, normal, distance: d2.sqrt() }, face, bary }
    }
}

/// Closest point on triangle `abc` by Voronoi region classification.
fn closest_on_triangle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> (Vec3, [f64; 3], Feature) {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return (*a, [1.0, 0.0, 0.0], Feature::Vertex(0));
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return (*b, [0.0, 1.0, 0.0], Feature::Vertex(1));
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (a + ab * v, [1.0 - v, v, 0.0], Feature::Edge(0));
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return (*c, [0.0, 0.0, 1.0], Feature::Vertex(2));
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (a + ac * w, [1.0 - w, 0.0, w], Feature::Edge(2));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (b + (c - b) * w, [0.0, 1.0 - w, w], Feature::Edge(1));
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (a + ab * v + ac * w, [1.0 - v - w, v, w], Feature::Face)
}
