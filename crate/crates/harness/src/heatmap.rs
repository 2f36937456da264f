//! Grayscale PGM rendering of matrix magnitudes.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{HarnessError, Result};

/// Binary PGM (`P5`) bytes, one pixel per entry, row `i` of `m` on image
/// row `i`. Larger magnitudes are darker.
///
/// Entries with `|x| <= threshold` count as zero. With `zero_is_white`
/// zeros are 255 and nonzero magnitudes are scaled linearly onto
/// `[0, 254]` over their own range, so the faintest nonzero entry stays
/// distinguishable from a zero. Otherwise all magnitudes share one linear
/// scale onto `[0, 255]`.
pub fn heatmap_bytes(m: &DMatrix<f64>, zero_is_white: bool, threshold: f64) -> Result<Vec<u8>> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(HarnessError::Spec("heatmap input has non-finite entries".into()));
    }
    let mag = |x: f64| if x.abs() <= threshold { 0.0 } else { x.abs() };
    let considered = m.iter().map(|&x| mag(x)).filter(|&a| !zero_is_white || a > 0.0);
    let (lo, hi) = considered.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), a| (lo.min(a), hi.max(a)));
    let top = if zero_is_white { 254.0 } else { 255.0 };
    let pixel = |x: f64| -> u8 {
        let a = mag(x);
        if a == 0.0 && (zero_is_white || hi == lo) {
            255
        } else if hi == lo {
            0
        } else {
            (top * (hi - a) / (hi - lo)).round() as u8
        }
    };
    let mut out = format!("P5\n{} {}\n255\n", m.ncols(), m.nrows()).into_bytes();
    for i in 0..m.nrows() {
        out.extend((0..m.ncols()).map(|j| pixel(m[(i, j)])));
    }
    Ok(out)
}

pub fn emit_heatmap(m: &DMatrix<f64>, path: &Path, zero_is_white: bool, threshold: Option<f64>) -> Result<()> {
    let bytes = heatmap_bytes(m, zero_is_white, threshold.unwrap_or(0.0))?;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&bytes)?;
    w.flush()?;
    Ok(())
}
