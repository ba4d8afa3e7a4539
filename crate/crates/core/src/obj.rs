//! Wavefront OBJ export of surface nets (and a minimal reader for
//! round-trip checks).

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::surface::{gauss_curvature_dot, KNode, SurfaceNet, Vec3};

/// Write a net as OBJ: one vertex per node in row-major order, one quad face
/// per grid cell with consistent winding. Cells whose owning node is flagged
/// degenerate by the curvature conditioning test are omitted.
pub fn export_obj(s: &SurfaceNet, out: &mut impl Write) -> Result<()> {
    let d = s.domain();
    let (n1, n2) = (d.n1(), d.n2());
    let k = gauss_curvature_dot(s);
    writeln!(out, "# {} x {} surface net", n1, n2)?;
    if let Some(lambda) = s.lambda {
        writeln!(out, "# spectral parameter lambda = {lambda}")?;
    }
    for i in 0..n1 {
        for j in 0..n2 {
            let v = s.r.get(i, j);
            writeln!(out, "v {:.9e} {:.9e} {:.9e}", v.x, v.y, v.z)?;
        }
    }
    let idx = |i: usize, j: usize| i * n2 + j + 1; // OBJ indices are 1-based
    for i in 0..n1 - 1 {
        for j in 0..n2 - 1 {
            if matches!(k.get(i, j), KNode::Degenerate) {
                continue;
            }
            writeln!(
                out,
                "f {} {} {} {}",
                idx(i, j),
                idx(i + 1, j),
                idx(i + 1, j + 1),
                idx(i, j + 1)
            )?;
        }
    }
    Ok(())
}

pub fn export_obj_to_path(s: &SurfaceNet, path: &std::path::Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    export_obj(s, &mut w)
}

/// Minimal OBJ reader: vertices and quad faces (1-based indices converted
/// back to 0-based). Used by round-trip tests and the verify pipeline.
pub fn import_obj(input: &mut impl BufRead) -> Result<(Vec<Vec3>, Vec<[usize; 4]>)> {
    let mut verts = Vec::new();
    let mut faces = Vec::new();
    for line in input.lines() {
        let line = line?;
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("v") => {
                let mut coords = [0.0f64; 3];
                for c in coords.iter_mut() {
                    *c = parts
                        .next()
                        .ok_or_else(|| Error::Construction("short vertex line".into()))?
                        .parse()
                        .map_err(|e| Error::Construction(format!("bad vertex: {e}")))?;
                }
                verts.push(Vec3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let mut idx = [0usize; 4];
                for v in idx.iter_mut() {
                    let tok = parts
                        .next()
                        .ok_or_else(|| Error::Construction("non-quad face".into()))?;
                    let first = tok.split('/').next().unwrap_or(tok);
                    let one_based: usize = first
                        .parse()
                        .map_err(|e| Error::Construction(format!("bad face index: {e}")))?;
                    if one_based == 0 || one_based > verts.len() {
                        return Err(Error::Construction(format!(
                            "face index {one_based} out of range"
                        )));
                    }
                    *v = one_based - 1;
                }
                faces.push(idx);
            }
            _ => {}
        }
    }
    Ok((verts, faces))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timescale::{GridDomain, GridFunction, TimeScale1D};
    use std::io::BufReader;
    use std::sync::Arc;

    fn saddle_net(n: usize) -> SurfaceNet {
        let dom = Arc::new(GridDomain::new(
            TimeScale1D::uniform(0.0, 1.0 / n as f64, n).unwrap(),
            TimeScale1D::uniform(0.0, 1.0 / n as f64, n).unwrap(),
        ));
        let r = GridFunction::from_fn(Arc::clone(&dom), |i, j| {
            let (u, v) = (dom.t1().point(i), dom.t2().point(j));
            Vec3::new(u, v, u * u - v * v)
        });
        let nrm = GridFunction::fill(Arc::clone(&dom), Vec3::new(0.0, 0.0, 1.0));
        SurfaceNet::new(dom, r, nrm, None).unwrap()
    }

    #[test]
    fn three_by_three_counts() {
        let s = saddle_net(3);
        let mut buf = Vec::new();
        export_obj(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().filter(|l| l.starts_with("v ")).count(), 9);
        assert_eq!(text.lines().filter(|l| l.starts_with("f ")).count(), 4);
    }

    #[test]
    fn vertex_lines_carry_nine_plus_digits() {
        let s = saddle_net(3);
        let mut buf = Vec::new();
        export_obj(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let line = text.lines().find(|l| l.starts_with("v ")).unwrap();
        for tok in line.split_whitespace().skip(1) {
            let mantissa = tok.split('e').next().unwrap();
            let digits = mantissa.chars().filter(|c| c.is_ascii_digit()).count();
            assert!(digits >= 9, "{tok}");
        }
    }

    #[test]
    fn round_trip_coordinates() {
        let s = saddle_net(5);
        let mut buf = Vec::new();
        export_obj(&s, &mut buf).unwrap();
        let (verts, faces) = import_obj(&mut BufReader::new(buf.as_slice())).unwrap();
        assert_eq!(verts.len(), 25);
        assert_eq!(faces.len(), 16);
        for i in 0..5 {
            for j in 0..5 {
                let got = verts[i * 5 + j];
                let want = s.r.get(i, j);
                assert!((got - want).norm() <= 1e-8 * (1.0 + want.norm()));
            }
        }
        // all faces reference 4 distinct vertices
        for f in faces {
            let mut sorted = f.to_vec();
            sorted.sort_unstable();
            sorted.dedup();
            assert_eq!(sorted.len(), 4);
        }
    }

    #[test]
    fn import_rejects_bad_faces() {
        let text = "v 0 0 0\nf 1 2 3 4\n";
        let err = import_obj(&mut BufReader::new(text.as_bytes()));
        assert!(err.is_err());
    }
}
