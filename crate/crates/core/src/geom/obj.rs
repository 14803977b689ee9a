//! Wavefront OBJ import/export (`v`, `vt`, `vn`, `f`).
//!
//! Polygons are fan-triangulated on load. UVs and normals are stored per
//! vertex: the first `vt`/`vn` a face corner assigns to a position wins.
//! Normals are renormalized on load. Other record types are ignored.

use std::fmt::Write as _;
use std::path::Path;

use super::{DegeneratePolicy, Mesh, Vec3};
use crate::error::{Error, Result};

pub fn read_obj(path: &Path, policy: DegeneratePolicy) -> Result<Mesh> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_obj(&text, path, policy)
}

pub fn write_obj(path: &Path, mesh: &Mesh) -> Result<()> {
    std::fs::write(path, to_obj_string(mesh)).map_err(|e| Error::io(path, e))
}

pub fn parse_obj(text: &str, path: &Path, policy: DegeneratePolicy) -> Result<Mesh> {
    let err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };

    let mut positions: Vec<Vec3> = Vec::new();
    let mut texcoords: Vec<[f64; 2]> = Vec::new();
    let mut normals_in: Vec<Vec3> = Vec::new();
    // (line, corners as (v, vt, vn))
    let mut polys: Vec<(usize, Vec<(usize, Option<usize>, Option<usize>)>)> = Vec::new();

    for (ln0, raw) in text.lines().enumerate() {
        let ln = ln0 + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut tok = line.split_whitespace();
        let Some(kind) = tok.next() else { continue };
        let floats = |n: usize, tok: std::str::SplitWhitespace| -> Result<Vec<f64>> {
            let vals: Vec<&str> = tok.collect();
            if vals.len() < n {
                return Err(err(ln, format!("`{kind}` needs {n} values, found {}", vals.len())));
            }
            vals[..n]
                .iter()
                .map(|s| {
                    s.parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .ok_or_else(|| err(ln, format!("invalid number `{s}`")))
                })
                .collect()
        };
        match kind {
            "v" => {
                let c = floats(3, tok)?;
                positions.push(Vec3::new(c[0], c[1], c[2]));
            }
            "vt" => {
                let c = floats(2, tok)?;
                texcoords.push([c[0], c[1]]);
            }
            "vn" => {
                let c = floats(3, tok)?;
                let n = Vec3::new(c[0], c[1], c[2]);
                let n = n
                    .try_normalize(0.0)
                    .ok_or_else(|| err(ln, "zero-length normal".into()))?;
                normals_in.push(n);
            }
            "f" => {
                let mut corners = Vec::new();
                for t in tok {
                    let mut parts = t.split('/');
                    let resolve = |s: Option<&str>, count: usize, what: &str| -> Result<Option<usize>> {
                        match s {
                            None | Some("") => Ok(None),
                            Some(s) => {
                                let i: i64 = s
                                    .parse()
                                    .map_err(|_| err(ln, format!("invalid {what} index `{s}`")))?;
                                let idx = if i > 0 {
                                    i - 1
                                } else if i < 0 {
                                    count as i64 + i
                                } else {
                                    -1
                                };
                                if idx < 0 || idx >= count as i64 {
                                    return Err(err(
                                        ln,
                                        format!("{what} index {i} out of range (have {count})"),
                                    ));
                                }
                                Ok(Some(idx as usize))
                            }
                        }
                    };
                    let v = resolve(parts.next(), positions.len(), "vertex")?
                        .ok_or_else(|| err(ln, format!("face corner `{t}` has no vertex index")))?;
                    let vt = resolve(parts.next(), texcoords.len(), "texcoord")?;
                    let vn = resolve(parts.next(), normals_in.len(), "normal")?;
                    corners.push((v, vt, vn));
                }
                if corners.len() < 3 {
                    return Err(err(ln, format!("face has {} corners, need 3", corners.len())));
                }
                polys.push((ln, corners));
            }
            _ => {}
        }
    }

    let n = positions.len();
    let any_vt = polys.iter().any(|(_, c)| c.iter().any(|x| x.1.is_some()));
    let any_vn = polys.iter().any(|(_, c)| c.iter().any(|x| x.2.is_some()));
    let mut uv: Vec<Option<[f64; 2]>> = vec![None; n];
    let mut nrm: Vec<Option<Vec3>> = vec![None; n];
    let mut faces = Vec::new();
    for (ln, corners) in &polys {
        for &(v, vt, vn) in corners {
            if any_vt {
                let t = vt.ok_or_else(|| err(*ln, "face corner lacks a texcoord".into()))?;
                uv[v].get_or_insert(texcoords[t]);
            }
            if any_vn {
                let k = vn.ok_or_else(|| err(*ln, "face corner lacks a normal".into()))?;
                nrm[v].get_or_insert(normals_in[k]);
            }
        }
        for k in 1..corners.len() - 1 {
            let f = [corners[0].0, corners[k].0, corners[k + 1].0];
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(err(*ln, "face repeats a vertex index".into()));
            }
            faces.push(f);
        }
    }
    let uvs = any_vt.then(|| uv.into_iter().map(|t| t.unwrap_or([0.0, 0.0])).collect());
    let normals = any_vn.then(|| nrm.into_iter().map(|t| t.unwrap_or_else(Vec3::z)).collect());

    Mesh::with_attributes(positions, faces, uvs, normals, policy).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        msg: e.to_string(),
    })
}

/// `%.9g`-style formatting: 9 significant digits, trailing zeros trimmed.
pub fn fmt_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.8e}", x);
    let (mant, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        let s = format!("{:.*}", decimals, x);
        trim_zeros(&s)
    } else {
        format!("{}e{}", trim_zeros(mant), exp)
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        let t = s.trim_end_matches('0').trim_end_matches('.');
        if t == "-0" { "0".into() } else { t.into() }
    } else {
        s.into()
    }
}

pub fn to_obj_string(mesh: &Mesh) -> String {
    let mut s = String::with_capacity(mesh.vertices.len() * 48 + mesh.faces.len() * 24);
    for v in &mesh.vertices {
        let _ = writeln!(s, "v {} {} {}", fmt_sig9(v.x), fmt_sig9(v.y), fmt_sig9(v.z));
    }
    if let Some(uvs) = &mesh.uvs {
        for t in uvs {
            let _ = writeln!(s, "vt {} {}", fmt_sig9(t[0]), fmt_sig9(t[1]));
        }
    }
    if let Some(ns) = &mesh.normals {
        for n in ns {
            let _ = writeln!(s, "vn {} {} {}", fmt_sig9(n.x), fmt_sig9(n.y), fmt_sig9(n.z));
        }
    }
    let (has_t, has_n) = (mesh.uvs.is_some(), mesh.normals.is_some());
    for f in &mesh.faces {
        s.push('f');
        for &i in f {
            let i = i + 1;
            match (has_t, has_n) {
                (false, false) => write!(s, " {i}"),
                (true, false) => write!(s, " {i}/{i}"),
                (false, true) => write!(s, " {i}//{i}"),
                (true, true) => write!(s, " {i}/{i}/{i}"),
            }
            .expect("write to string");
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::shapes;

    fn p() -> &'static Path {
        Path::new("test.obj")
    }

    #[test]
    fn sig9_formatting() {
        assert_eq!(fmt_sig9(0.0), "0");
        assert_eq!(fmt_sig9(1.0), "1");
        assert_eq!(fmt_sig9(-0.5), "-0.5");
        assert_eq!(fmt_sig9(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt_sig9(123456.789012), "123456.789");
        assert_eq!(fmt_sig9(1.5e-7), "1.5e-7");
        assert_eq!(fmt_sig9(2.0e12), "2e12");
        assert_eq!(fmt_sig9(0.000123456789123), "0.000123456789");
    }

    #[test]
    fn quads_are_fan_triangulated() {
        let text = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n";
        let m = parse_obj(text, p(), DegeneratePolicy::Reject).unwrap();
        assert_eq!(m.faces, vec![[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn slash_forms_and_negative_indices() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nvt 1 0\nvt 0 1\nvn 0 0 2\nf -3/1/1 -2/2/1 -1/3/1\n";
        let m = parse_obj(text, p(), DegeneratePolicy::Reject).unwrap();
        assert_eq!(m.faces, vec![[0, 1, 2]]);
        assert_eq!(m.uvs.as_ref().unwrap()[1], [1.0, 0.0]);
        assert_eq!(m.normals.as_ref().unwrap()[2], Vec3::z());
    }

    #[test]
    fn bad_face_index_names_line() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\n\nf 1 2 9\n";
        match parse_obj(text, p(), DegeneratePolicy::Reject) {
            Err(Error::Parse { line, msg, .. }) => {
                assert_eq!(line, 5);
                assert!(msg.contains("out of range"), "{msg}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn roundtrip_keeps_nine_digits() {
        let mut m = shapes::grid_plane(3, 2, 1.7);
        m.vertices[4].z = 0.123456789123;
        let back = parse_obj(&to_obj_string(&m), p(), DegeneratePolicy::Reject).unwrap();
        assert_eq!(back.faces, m.faces);
        for (a, b) in back.vertices.iter().zip(&m.vertices) {
            assert!((a - b).norm() < 1e-8);
        }
        assert_eq!(back.uvs.as_ref().unwrap().len(), m.vertices.len());
    }
}
