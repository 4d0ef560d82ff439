//! Realizations on the square grid `{-n..n}^2 / n` and their file formats.

use std::io::{Read, Write};

use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"VMG1";
const VERSION: u32 = 1;

/// Field values on an odd-sided square grid.
///
/// `values` is row-major with the row index increasing along the second
/// coordinate: the value at grid point `origin + spacing * (col, row)` is
/// `values[row * side + col]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    side: usize,
    spacing: f64,
    origin: (f64, f64),
    values: Vec<f64>,
}

impl FieldGrid {
    /// Validates and wraps the values.
    pub fn new(side: usize, spacing: f64, origin: (f64, f64), values: Vec<f64>) -> Result<Self> {
        if side == 0 || side % 2 == 0 {
            return Err(Error::Validation(format!("grid side {side} must be odd")));
        }
        if values.len() != side * side {
            return Err(Error::Validation(format!(
                "grid of side {side} needs {} values, got {}",
                side * side,
                values.len()
            )));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::Validation(format!("grid spacing {spacing} must be positive")));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!("grid value {i} is not finite")));
        }
        Ok(FieldGrid {
            side,
            spacing,
            origin,
            values,
        })
    }

    /// Grid `{-n..n}^2 / n` covering `[-1, 1]^2`.
    pub fn on_unit_square(n: usize, values: Vec<f64>) -> Result<Self> {
        Self::new(2 * n + 1, 1.0 / n as f64, (-1.0, -1.0), values)
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn origin(&self) -> (f64, f64) {
        self.origin
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value at column `col` (first coordinate) and row `row` (second coordinate).
    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.values[row * self.side + col]
    }

    /// Multiplies every value by `c`.
    pub fn scaled(&self, c: f64) -> FieldGrid {
        FieldGrid {
            values: self.values.iter().map(|v| v * c).collect(),
            ..self.clone()
        }
    }

    /// Writes the binary VMG1 format (little endian).
    pub fn write_vmg<W: Write>(&self, mut out: W) -> Result<()> {
        let mut buf = Vec::with_capacity(36 + 8 * self.values.len());
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        let side = u32::try_from(self.side).map_err(|_| Error::Format("side exceeds u32".into()))?;
        buf.extend_from_slice(&side.to_le_bytes());
        buf.extend_from_slice(&self.spacing.to_le_bytes());
        buf.extend_from_slice(&self.origin.0.to_le_bytes());
        buf.extend_from_slice(&self.origin.1.to_le_bytes());
        for v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        out.write_all(&buf)?;
        Ok(())
    }

    /// Reads the binary VMG1 format.
    pub fn read_vmg<R: Read>(mut input: R) -> Result<Self> {
        let mut bytes = Vec::new();
        input.read_to_end(&mut bytes)?;
        if bytes.len() < 36 || &bytes[..4] != MAGIC {
            return Err(Error::Format("missing VMG1 header".into()));
        }
        let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes"));
        let f64_at = |i: usize| f64::from_le_bytes(bytes[i..i + 8].try_into().expect("8 bytes"));
        let version = u32_at(4);
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let side = u32_at(8) as usize;
        let expected = 36 + 8 * side * side;
        if bytes.len() != expected {
            return Err(Error::Format(format!(
                "expected {expected} bytes for side {side}, found {}",
                bytes.len()
            )));
        }
        let values = (0..side * side).map(|k| f64_at(36 + 8 * k)).collect();
        FieldGrid::new(side, f64_at(12), (f64_at(20), f64_at(28)), values)
            .map_err(|e| Error::Format(e.to_string()))
    }

    /// Writes `x,y,value` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let mut text = String::from("x,y,value\n");
        for row in 0..self.side {
            let y = self.origin.1 + self.spacing * row as f64;
            for col in 0..self.side {
                let x = self.origin.0 + self.spacing * col as f64;
                text.push_str(&format!("{x:.16e},{y:.16e},{:.16e}\n", self.get(col, row)));
            }
        }
        out.write_all(text.as_bytes())?;
        Ok(())
    }

    /// Writes a binary PGM (P5, maxval 255) with linear min-max scaling; the
    /// top image row is the largest second coordinate.
    pub fn write_pgm<W: Write>(&self, mut out: W) -> Result<()> {
        let (lo, hi) = self
            .values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        let span = hi - lo;
        let mut buf = format!("P5\n{} {}\n255\n", self.side, self.side).into_bytes();
        for row in (0..self.side).rev() {
            for col in 0..self.side {
                let level = if span > 0.0 {
                    ((self.get(col, row) - lo) / span * 255.0).round()
                } else {
                    0.0
                };
                buf.push(level as u8);
            }
        }
        out.write_all(&buf)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_even_side_and_nonfinite() {
        assert!(FieldGrid::new(2, 1.0, (0.0, 0.0), vec![0.0; 4]).is_err());
        assert!(FieldGrid::new(1, 1.0, (0.0, 0.0), vec![f64::NAN]).is_err());
    }

    #[test]
    fn vmg_header_layout() {
        let g = FieldGrid::on_unit_square(1, (0..9).map(f64::from).collect()).unwrap();
        let mut buf = Vec::new();
        g.write_vmg(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"VMG1");
        assert_eq!(buf.len(), 36 + 72);
        assert_eq!(u32::from_le_bytes(buf[8..12].try_into().unwrap()), 3);
        assert_eq!(FieldGrid::read_vmg(&buf[..]).unwrap(), g);
        assert!(FieldGrid::read_vmg(&buf[..40]).is_err());
    }

    #[test]
    fn pgm_rows_run_top_down() {
        let g = FieldGrid::on_unit_square(1, vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0]).unwrap();
        let mut buf = Vec::new();
        g.write_pgm(&mut buf).unwrap();
        let header = b"P5\n3 3\n255\n";
        assert_eq!(&buf[..header.len()], header);
        assert_eq!(&buf[header.len()..], &[255, 255, 255, 128, 128, 128, 0, 0, 0]);
    }
}
