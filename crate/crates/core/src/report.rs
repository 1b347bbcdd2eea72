//! Serialization helpers: complex quantities in JSON, CSV tables, and a
//! legacy-ASCII VTK writer for field inspection.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;

use crate::error::Result;

/// Serde adapter storing `Vec<Complex64>` as `[[re, im], ...]`.
pub mod complex_vec {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = v.iter().map(|z| [z.re, z.im]).collect();
        pairs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        let pairs: Vec<[f64; 2]> = Vec::deserialize(d)?;
        Ok(pairs.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
    }
}

/// Serde adapter storing one `Complex64` as `[re, im]`.
pub mod complex_num {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(Complex64::new(re, im))
    }
}

/// Serde adapter storing a dense complex matrix as rows of `[re, im]` pairs.
pub mod complex_mat {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Vec<Complex64>], s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = v
            .iter()
            .map(|row| row.iter().map(|z| [z.re, z.im]).collect())
            .collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<Complex64>>, D::Error> {
        let rows: Vec<Vec<[f64; 2]>> = Vec::deserialize(d)?;
        Ok(rows
            .into_iter()
            .map(|row| row.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
            .collect())
    }
}

/// Writes a CSV table with full float precision.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{}", header.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    out.flush()?;
    Ok(())
}

/// Writes a legacy ASCII VTK unstructured grid with scalar point fields.
/// Callers pass the visualization view of the discretization (for quadratic
/// fields this is the midpoint-refined triangulation, so the plotted field
/// is exactly the nodal interpolant).
pub fn write_vtk(
    path: &Path,
    points: &[[f64; 2]],
    triangles: &[[usize; 3]],
    fields: &[(&str, &[f64])],
) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "waveguide field")?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {} double", points.len())?;
    for p in points {
        writeln!(out, "{:.12e} {:.12e} 0.0", p[0], p[1])?;
    }
    writeln!(out, "CELLS {} {}", triangles.len(), 4 * triangles.len())?;
    for t in triangles {
        writeln!(out, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    writeln!(out, "CELL_TYPES {}", triangles.len())?;
    for _ in triangles {
        writeln!(out, "5")?;
    }
    if !fields.is_empty() {
        writeln!(out, "POINT_DATA {}", points.len())?;
        for (name, values) in fields {
            assert_eq!(values.len(), points.len(), "field {name} has wrong length");
            writeln!(out, "SCALARS {name} double 1")?;
            writeln!(out, "LOOKUP_TABLE default")?;
            for v in *values {
                writeln!(out, "{v:.12e}")?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

/// Convenience: splits complex nodal values into the standard plot fields.
pub fn complex_fields(values: &[Complex64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let re: Vec<f64> = values.iter().map(|z| z.re).collect();
    let im: Vec<f64> = values.iter().map(|z| z.im).collect();
    let abs: Vec<f64> = values.iter().map(|z| z.norm()).collect();
    (re, im, abs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::{Deserialize, Serialize};

    #[derive(Serialize, Deserialize)]
    struct Wrap {
        #[serde(with = "complex_vec")]
        v: Vec<Complex64>,
        #[serde(with = "complex_mat")]
        m: Vec<Vec<Complex64>>,
    }

    #[test]
    fn complex_round_trip() {
        let w = Wrap {
            v: vec![Complex64::new(1.5, -2.25), Complex64::new(0.0, 3.0)],
            m: vec![
                vec![Complex64::new(0.1, 0.2), Complex64::new(-0.3, 0.4)],
                vec![Complex64::new(5.0, 0.0), Complex64::new(0.0, -1.0)],
            ],
        };
        let s = serde_json::to_string(&w).unwrap();
        let back: Wrap = serde_json::from_str(&s).unwrap();
        assert_eq!(w.v, back.v);
        assert_eq!(w.m, back.m);
    }

    #[test]
    fn vtk_and_csv_write() {
        let dir = tempfile::tempdir().unwrap();
        let vtk = dir.path().join("f.vtk");
        let points = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let tris = [[0usize, 1, 2]];
        let vals = [0.0, 1.0, 2.0];
        write_vtk(&vtk, &points, &tris, &[("u", &vals)]).unwrap();
        let text = std::fs::read_to_string(&vtk).unwrap();
        assert!(text.contains("POINTS 3 double"));
        assert!(text.contains("SCALARS u double 1"));

        let csv = dir.path().join("t.csv");
        write_csv(&csv, &["a", "b"], &[vec![1.0, 2.0], vec![3.0, 4.5]]).unwrap();
        let text = std::fs::read_to_string(&csv).unwrap();
        assert!(text.starts_with("a,b\n"));
        assert_eq!(text.lines().count(), 3);
    }
}
