//! ASCII PLY reading and writing for point clouds and triangle meshes with
//! per-vertex 8-bit colour.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::Rgb;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PlyData {
    pub vertices: Vec<Vec3>,
    /// Empty, or one colour per vertex.
    pub colours: Vec<[u8; 3]>,
    pub faces: Vec<[usize; 3]>,
}

pub fn colour_to_u8(c: &Rgb) -> [u8; 3] {
    [0, 1, 2].map(|k| (c[k].clamp(0.0, 1.0) * 255.0).round() as u8)
}

pub fn write<W: Write>(out: &mut W, data: &PlyData) -> Result<()> {
    let has_colour = !data.colours.is_empty();
    if has_colour && data.colours.len() != data.vertices.len() {
        return Err(Error::Parse("colour count does not match vertex count".into()));
    }
    writeln!(out, "ply")?;
    writeln!(out, "format ascii 1.0")?;
    writeln!(out, "element vertex {}", data.vertices.len())?;
    writeln!(out, "property double x")?;
    writeln!(out, "property double y")?;
    writeln!(out, "property double z")?;
    if has_colour {
        writeln!(out, "property uchar red")?;
        writeln!(out, "property uchar green")?;
        writeln!(out, "property uchar blue")?;
    }
    if !data.faces.is_empty() {
        writeln!(out, "element face {}", data.faces.len())?;
        writeln!(out, "property list uchar int vertex_indices")?;
    }
    writeln!(out, "end_header")?;
    for (k, v) in data.vertices.iter().enumerate() {
        if has_colour {
            let [r, g, b] = data.colours[k];
            writeln!(out, "{} {} {} {} {} {}", v.x, v.y, v.z, r, g, b)?;
        } else {
            writeln!(out, "{} {} {}", v.x, v.y, v.z)?;
        }
    }
    for [a, b, c] in &data.faces {
        writeln!(out, "3 {a} {b} {c}")?;
    }
    Ok(())
}

pub fn write_file(path: &Path, data: &PlyData) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write(&mut w, data)?;
    w.flush()?;
    Ok(())
}

/// Reads the ASCII subset written by [`write`]: a vertex element whose first
/// three properties are x, y, z, optional red/green/blue uchar properties, and
/// an optional triangle face list.
pub fn read<R: BufRead>(input: R) -> Result<PlyData> {
    let mut lines = input.lines();
    let mut next_line = || -> Result<String> {
        lines
            .next()
            .ok_or_else(|| Error::Parse("unexpected end of PLY".into()))?
            .map_err(Error::from)
    };
    if next_line()?.trim() != "ply" {
        return Err(Error::Parse("missing ply magic".into()));
    }
    let mut n_vert = 0usize;
    let mut n_face = 0usize;
    let mut vprops: Vec<String> = Vec::new();
    let mut current = String::new();
    loop {
        let line = next_line()?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            ["format", "ascii", _] => {}
            ["format", other, ..] => return Err(Error::Parse(format!("unsupported PLY format {other}"))),
            ["comment", ..] | [] => {}
            ["element", name, count] => {
                let count: usize = count.parse().map_err(|_| Error::Parse(format!("bad count {count}")))?;
                current = name.to_string();
                match *name {
                    "vertex" => n_vert = count,
                    "face" => n_face = count,
                    other => return Err(Error::Parse(format!("unsupported element {other}"))),
                }
            }
            ["property", "list", ..] if current == "face" => {}
            ["property", _, name] if current == "vertex" => vprops.push(name.to_string()),
            ["end_header"] => break,
            _ => return Err(Error::Parse(format!("unexpected header line: {line}"))),
        }
    }
    let idx = |name: &str| vprops.iter().position(|p| p == name);
    let (ix, iy, iz) = match (idx("x"), idx("y"), idx("z")) {
        (Some(x), Some(y), Some(z)) => (x, y, z),
        _ => return Err(Error::Parse("vertex element lacks x/y/z".into())),
    };
    let rgb = match (idx("red"), idx("green"), idx("blue")) {
        (Some(r), Some(g), Some(b)) => Some((r, g, b)),
        _ => None,
    };
    let mut data = PlyData::default();
    for _ in 0..n_vert {
        let line = next_line()?;
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| Error::Parse(format!("bad number {t}"))))
            .collect::<Result<_>>()?;
        if vals.len() < vprops.len() {
            return Err(Error::Parse(format!("short vertex line: {line}")));
        }
        data.vertices.push(Vec3::new(vals[ix], vals[iy], vals[iz]));
        if let Some((r, g, b)) = rgb {
            data.colours.push([vals[r] as u8, vals[g] as u8, vals[b] as u8]);
        }
    }
    for _ in 0..n_face {
        let line = next_line()?;
        let vals: Vec<usize> = line
            .split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|_| Error::Parse(format!("bad index {t}"))))
            .collect::<Result<_>>()?;
        match vals.as_slice() {
            [3, a, b, c] => data.faces.push([*a, *b, *c]),
            _ => return Err(Error::Parse(format!("only triangles are supported: {line}"))),
        }
    }
    Ok(data)
}

pub fn read_file(path: &Path) -> Result<PlyData> {
    read(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::make_icosphere;
    use proptest::prelude::*;

    #[test]
    fn mesh_roundtrip() {
        let m = make_icosphere(Vec3::new(1.0, 2.0, 3.0), 0.7, 1);
        let data = PlyData {
            vertices: m.vertices.clone(),
            colours: m.vertices.iter().map(|_| [10, 200, 255]).collect(),
            faces: m.faces.clone(),
        };
        let mut buf = Vec::new();
        write(&mut buf, &data).unwrap();
        let back = read(buf.as_slice()).unwrap();
        assert_eq!(back, data);
    }

    #[test]
    fn rejects_binary_and_garbage() {
        assert!(read("ply\nformat binary_little_endian 1.0\nend_header\n".as_bytes()).is_err());
        assert!(read("not a ply\n".as_bytes()).is_err());
        let quad = "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n0 0 0\n4 0 0 0 0\n";
        assert!(read(quad.as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn cloud_positions_roundtrip_exactly(pts in proptest::collection::vec((-1e3..1e3f64, -1e3..1e3f64, -1e3..1e3f64), 0..40)) {
            let data = PlyData {
                vertices: pts.iter().map(|&(x, y, z)| Vec3::new(x, y, z)).collect(),
                ..Default::default()
            };
            let mut buf = Vec::new();
            write(&mut buf, &data).unwrap();
            prop_assert_eq!(read(buf.as_slice()).unwrap(), data);
        }
    }
}
