//! JSON helpers for complex matrices: row-major rows of `[re, im]` pairs.

use num_complex::Complex64;

use crate::dense::CMatrix;
use crate::error::{Error, Result};

pub fn complex_rows(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    m.row_iter().map(|r| r.iter().map(|z| [z.re, z.im]).collect()).collect()
}

pub fn complex_from_rows(rows: &[Vec<[f64; 2]>]) -> Result<CMatrix> {
    let nr = rows.len();
    let nc = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != nc) {
        return Err(Error::Dimension("ragged complex matrix rows".into()));
    }
    Ok(CMatrix::from_fn(nr, nc, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1])))
}
