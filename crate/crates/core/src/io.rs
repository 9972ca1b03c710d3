//! Text encodings for complex matrices.
//!
//! CSV cells hold `re+imj` with both parts in shortest round-trip exponent
//! form, so parsing a written file reproduces every bit. JSON uses nested
//! `[re, im]` pairs inside a small shape-tagged container.

use serde::{Deserialize, Serialize};

use crate::error::{LcuError, Result};
use crate::linalg::{ComplexMatrix, C64};

/// Row-major nested `[re, im]` pairs.
pub type PairMatrix = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_pairs(m: &ComplexMatrix) -> PairMatrix {
    (0..m.rows())
        .map(|i| m.row(i).iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

pub fn matrix_from_pairs(p: &PairMatrix) -> Result<ComplexMatrix> {
    let rows: Vec<Vec<C64>> = p
        .iter()
        .map(|row| row.iter().map(|&[re, im]| C64::new(re, im)).collect())
        .collect();
    ComplexMatrix::from_rows(&rows)
}

pub fn format_complex(z: C64) -> String {
    format!("{:e}{:+e}j", z.re, z.im)
}

pub fn parse_complex(s: &str) -> Result<C64> {
    let s = s.trim();
    let body = s
        .strip_suffix('j')
        .ok_or_else(|| LcuError::Parse(format!("complex cell {s:?} lacks the 'j' suffix")))?;
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| {
            (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E')
        })
        .ok_or_else(|| LcuError::Parse(format!("complex cell {s:?} has no imaginary part")))?;
    let re: f64 = body[..split]
        .parse()
        .map_err(|e| LcuError::Parse(format!("{s:?}: {e}")))?;
    let im: f64 = body[split..]
        .parse()
        .map_err(|e| LcuError::Parse(format!("{s:?}: {e}")))?;
    Ok(C64::new(re, im))
}

/// One CSV line per matrix row.
pub fn matrix_to_csv(m: &ComplexMatrix) -> String {
    let mut out = String::new();
    for i in 0..m.rows() {
        let cells: Vec<String> = m.row(i).iter().map(|&z| format_complex(z)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Parses [`matrix_to_csv`] output; blank lines and `#` comments are skipped.
pub fn matrix_from_csv(text: &str) -> Result<ComplexMatrix> {
    let rows = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.split(',').map(parse_complex).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    ComplexMatrix::from_rows(&rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixDocument {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub data: PairMatrix,
}

impl MatrixDocument {
    pub fn new(name: &str, m: &ComplexMatrix) -> Self {
        Self {
            name: name.to_string(),
            rows: m.rows(),
            cols: m.cols(),
            data: matrix_to_pairs(m),
        }
    }

    pub fn matrix(&self) -> Result<ComplexMatrix> {
        let m = matrix_from_pairs(&self.data)?;
        if m.shape() != (self.rows, self.cols) {
            return Err(LcuError::Dimension(format!(
                "{} declares {}x{} but holds {}x{}",
                self.name,
                self.rows,
                self.cols,
                m.rows(),
                m.cols()
            )));
        }
        Ok(m)
    }
}
