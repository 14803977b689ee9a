use super::{Aabb, Mesh, Vec3};
use crate::error::{Error, Result};

const LEAF_SIZE: usize = 4;

/// Nearest point on a mesh surface.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfacePoint {
    pub face: usize,
    /// Weights of the face's three vertices; nonnegative, summing to 1.
    pub bary: [f64; 3],
    pub position: Vec3,
    /// Distance from the query point (m).
    pub distance: f64,
}

/// Whether closest-point queries land anywhere on a triangle or only on vertices.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosestMode {
    #[default]
    Surface,
    Vertex,
}

#[derive(Clone, Debug)]
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

/// Bounding-volume hierarchy over the triangles of one mesh.
///
/// Holds its own copy of the triangle corners, so it stays valid independent
/// of the mesh it was built from.
#[derive(Clone, Debug)]
pub struct TriangleBvh {
    nodes: Vec<Node>,
    /// Face indices in leaf order.
    order: Vec<usize>,
    tris: Vec<[Vec3; 3]>,
}

impl TriangleBvh {
    pub fn build(mesh: &Mesh) -> Result<Self> {
        if mesh.is_empty() {
            return Err(Error::EmptyMesh);
        }
        let tris: Vec<[Vec3; 3]> = (0..mesh.faces.len()).map(|f| mesh.triangle(f)).collect();
        let centroids: Vec<Vec3> = tris.iter().map(|t| (t[0] + t[1] + t[2]) / 3.0).collect();
        let mut order: Vec<usize> = (0..tris.len()).collect();
        let mut nodes = Vec::with_capacity(2 * tris.len() / LEAF_SIZE + 1);
        build_node(&tris, &centroids, &mut order, 0, tris.len(), &mut nodes);
        Ok(TriangleBvh { nodes, order, tris })
    }

    pub fn face_count(&self) -> usize {
        self.tris.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    /// Globally nearest surface point. Equal distances resolve to the lowest face index.
    pub fn closest_point(&self, q: &Vec3) -> SurfacePoint {
        self.query(q, ClosestMode::Surface)
    }

    /// Nearest mesh vertex, reported as a surface point with a unit barycentric.
    pub fn closest_vertex(&self, q: &Vec3) -> SurfacePoint {
        self.query(q, ClosestMode::Vertex)
    }

    pub fn query(&self, q: &Vec3, mode: ClosestMode) -> SurfacePoint {
        let mut best_d2 = f64::INFINITY;
        let mut best_face = usize::MAX;
        let mut best_bary = [1.0, 0.0, 0.0];

        let mut stack = Vec::with_capacity(64);
        stack.push(0usize);
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni];
            if node.bounds().distance_squared(q) > best_d2 {
                continue;
            }
            match *node {
                Node::Leaf { start, end, .. } => {
                    for &face in &self.order[start..end] {
                        let (d2, bary) = match mode {
                            ClosestMode::Surface => {
                                let bary = closest_point_on_triangle(q, &self.tris[face]);
                                let p = combine(&self.tris[face], &bary);
                                ((q - p).norm_squared(), bary)
                            }
                            ClosestMode::Vertex => nearest_corner(q, &self.tris[face]),
                        };
                        if d2 < best_d2 || (d2 == best_d2 && face < best_face) {
                            best_d2 = d2;
                            best_face = face;
                            best_bary = bary;
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    let dl = self.nodes[left].bounds().distance_squared(q);
                    let dr = self.nodes[right].bounds().distance_squared(q);
                    // nearer child popped first
                    if dl <= dr {
                        stack.push(right);
                        stack.push(left);
                    } else {
                        stack.push(left);
                        stack.push(right);
                    }
                }
            }
        }

        let position = combine(&self.tris[best_face], &best_bary);
        SurfacePoint {
            face: best_face,
            bary: best_bary,
            position,
            distance: (q - position).norm(),
        }
    }
}

fn build_node(
    tris: &[[Vec3; 3]],
    centroids: &[Vec3],
    order: &mut [usize],
    start: usize,
    end: usize,
    nodes: &mut Vec<Node>,
) -> usize {
    let mut bounds = Aabb::EMPTY;
    for &f in &order[start..end] {
        for p in &tris[f] {
            bounds.grow(p);
        }
    }
    let idx = nodes.len();
    if end - start <= LEAF_SIZE {
        nodes.push(Node::Leaf { bounds, start, end });
        return idx;
    }
    let cb = Aabb::from_points(order[start..end].iter().map(|&f| &centroids[f]));
    let ext = cb.extent();
    let axis = if ext[0] >= ext[1] && ext[0] >= ext[2] {
        0
    } else if ext[1] >= ext[2] {
        1
    } else {
        2
    };
    let mid = start + (end - start) / 2;
    order[start..end].sort_by(|&a, &b| {
        centroids[a][axis]
            .total_cmp(&centroids[b][axis])
            .then(a.cmp(&b))
    });
    nodes.push(Node::Leaf { bounds, start, end }); // placeholder
    let left = build_node(tris, centroids, order, start, mid, nodes);
    let right = build_node(tris, centroids, order, mid, end, nodes);
    nodes[idx] = Node::Inner {
        bounds,
        left,
        right,
    };
    idx
}

fn combine(t: &[Vec3; 3], b: &[f64; 3]) -> Vec3 {
    t[0] * b[0] + t[1] * b[1] + t[2] * b[2]
}

fn nearest_corner(q: &Vec3, t: &[Vec3; 3]) -> (f64, [f64; 3]) {
    let mut best = (f64::INFINITY, [1.0, 0.0, 0.0]);
    for (k, p) in t.iter().enumerate() {
        let d2 = (q - p).norm_squared();
        if d2 < best.0 {
            let mut b = [0.0; 3];
            b[k] = 1.0;
            best = (d2, b);
        }
    }
    best
}

/// Barycentric coordinates of the point of triangle `t` nearest to `p`.
///
/// Voronoi-region walk over vertices, edges and the interior. The result is
/// nonnegative and sums to 1.
pub fn closest_point_on_triangle(p: &Vec3, t: &[Vec3; 3]) -> [f64; 3] {
    let (a, b, c) = (&t[0], &t[1], &t[2]);
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return [1.0, 0.0, 0.0];
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return [0.0, 1.0, 0.0];
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return [1.0 - v, v, 0.0];
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return [0.0, 0.0, 1.0];
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return [1.0 - w, 0.0, w];
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return [0.0, 1.0 - w, w];
    }
    let sum = va + vb + vc;
    let (u, v, w) = (va / sum, vb / sum, vc / sum);
    let (u, v, w) = (u.max(0.0), v.max(0.0), w.max(0.0));
    let s = u + v + w;
    [u / s, v / s, w / s]
}
