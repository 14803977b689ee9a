//! Procedural test and demo meshes. All closed shapes are outward oriented.

use std::collections::HashMap;
use std::f64::consts::PI;

use rand::Rng;

use super::{Aabb, Mesh, Vec3};

fn build(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Mesh {
    Mesh::new(vertices, faces).expect("procedural mesh is valid")
}

/// Closed box over `b`.
pub fn box_mesh(b: &Aabb) -> Mesh {
    let (lo, hi) = (b.min, b.max);
    let v = |i: usize| {
        Vec3::new(
            if i & 1 == 0 { lo[0] } else { hi[0] },
            if i & 2 == 0 { lo[1] } else { hi[1] },
            if i & 4 == 0 { lo[2] } else { hi[2] },
        )
    };
    let vertices = (0..8).map(v).collect();
    let quads = [
        [0, 2, 3, 1], // -z
        [4, 5, 7, 6], // +z
        [0, 1, 5, 4], // -y
        [2, 6, 7, 3], // +y
        [0, 4, 6, 2], // -x
        [1, 3, 7, 5], // +x
    ];
    let mut faces = Vec::with_capacity(12);
    for q in quads {
        faces.push([q[0], q[1], q[2]]);
        faces.push([q[0], q[2], q[3]]);
    }
    build(vertices, faces)
}

/// Axis-aligned cube with edge `size`, centered at the origin.
pub fn cube(size: f64) -> Mesh {
    let h = 0.5 * size;
    box_mesh(&Aabb::new([-h; 3], [h; 3]))
}

/// Subdivided icosahedron projected onto a sphere.
pub fn icosphere(subdivisions: usize, radius: f64) -> Mesh {
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
    .map(|p| Vec3::new(p[0], p[1], p[2]).normalize())
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
        let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<Vec3>| -> usize {
            let key = (a.min(b), a.max(b));
            *cache.entry(key).or_insert_with(|| {
                verts.push(((verts[a] + verts[b]) * 0.5).normalize());
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for f in &faces {
            let a = midpoint(f[0], f[1], &mut verts);
            let b = midpoint(f[1], f[2], &mut verts);
            let c = midpoint(f[2], f[0], &mut verts);
            next.push([f[0], a, c]);
            next.push([f[1], b, a]);
            next.push([f[2], c, b]);
            next.push([a, b, c]);
        }
        faces = next;
    }
    build(verts.into_iter().map(|v| v * radius).collect(), faces)
}

/// Icosphere carrying spherical (longitude, colatitude) UVs.
pub fn uv_sphere_icosphere(subdivisions: usize, radius: f64) -> Mesh {
    let mut m = icosphere(subdivisions, radius);
    let uvs = m
        .vertices
        .iter()
        .map(|p| {
            let d = p / radius;
            let u = (0.5 + d.y.atan2(d.x) / (2.0 * PI)).clamp(0.0, 1.0);
            let v = (d.z.clamp(-1.0, 1.0).acos() / PI).clamp(0.0, 1.0);
            [u, v]
        })
        .collect();
    m.uvs = Some(uvs);
    m
}

/// Torus around the z axis with major radius `major` and tube radius `minor`.
pub fn torus(major: f64, minor: f64, segments: usize, sides: usize) -> Mesh {
    let mut vertices = Vec::with_capacity(segments * sides);
    for i in 0..segments {
        let u = 2.0 * PI * i as f64 / segments as f64;
        for j in 0..sides {
            let v = 2.0 * PI * j as f64 / sides as f64;
            let r = major + minor * v.cos();
            vertices.push(Vec3::new(r * u.cos(), r * u.sin(), minor * v.sin()));
        }
    }
    let id = |i: usize, j: usize| (i % segments) * sides + (j % sides);
    let mut faces = Vec::with_capacity(2 * segments * sides);
    for i in 0..segments {
        for j in 0..sides {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
    build(vertices, faces)
}

/// Concave L-shaped prism: the L of unit-width arms within [0,2]² extruded over z ∈ [0,1].
pub fn l_prism() -> Mesh {
    let outline = [
        [0.0, 0.0],
        [2.0, 0.0],
        [2.0, 1.0],
        [1.0, 1.0],
        [1.0, 2.0],
        [0.0, 2.0],
    ];
    let n = outline.len();
    let mut vertices = Vec::with_capacity(2 * n);
    for z in [0.0, 1.0] {
        for p in &outline {
            vertices.push(Vec3::new(p[0], p[1], z));
        }
    }
    // fan from the reflex corner (index 3)
    let cap = [[3, 4, 5], [3, 5, 0], [3, 0, 1], [3, 1, 2]];
    let mut faces = Vec::new();
    for t in cap {
        faces.push([t[0] + n, t[1] + n, t[2] + n]);
        faces.push([t[0], t[2], t[1]]);
    }
    for i in 0..n {
        let j = (i + 1) % n;
        faces.push([i, j, j + n]);
        faces.push([i, j + n, i + n]);
    }
    build(vertices, faces)
}

/// Flat grid in the z = 0 plane spanning [0,size]², UVs equal to position / size.
pub fn grid_plane(nx: usize, ny: usize, size: f64) -> Mesh {
    let mut vertices = Vec::new();
    let mut uvs = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            let u = i as f64 / nx as f64;
            let v = j as f64 / ny as f64;
            vertices.push(Vec3::new(u * size, v * size, 0.0));
            uvs.push([u, v]);
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut faces = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    let mut m = build(vertices, faces);
    m.uvs = Some(uvs);
    m
}

/// Independent random triangles inside [-extent, extent]³.
pub fn random_triangle_soup<R: Rng>(rng: &mut R, count: usize, extent: f64) -> Mesh {
    let mut vertices = Vec::with_capacity(3 * count);
    let mut faces = Vec::with_capacity(count);
    while faces.len() < count {
        let c = Vec3::new(
            rng.gen_range(-extent..extent),
            rng.gen_range(-extent..extent),
            rng.gen_range(-extent..extent),
        );
        let s = 0.15 * extent;
        let tri: Vec<Vec3> = (0..3)
            .map(|_| {
                c + Vec3::new(
                    rng.gen_range(-s..s),
                    rng.gen_range(-s..s),
                    rng.gen_range(-s..s),
                )
            })
            .collect();
        if (tri[1] - tri[0]).cross(&(tri[2] - tri[0])).norm() < 1e-6 {
            continue;
        }
        let base = vertices.len();
        vertices.extend(tri);
        faces.push([base, base + 1, base + 2]);
    }
    build(vertices, faces)
}
