//! Affinity heatmaps as binary (P5) PGM images.

use std::path::Path;

use crate::error::Result;
use crate::model::checkpoint::atomic_write;
use crate::spectral::Affinity;

/// Writes an n x n 8-bit grayscale image with pixel values
/// `round(255 * w_ij / max(W))`; an all-zero affinity becomes an all-black
/// image.
pub fn emit_heatmap(w: &Affinity, path: &Path) -> Result<()> {
    let n = w.n();
    let max = w.matrix().max_abs();
    let mut bytes = format!("P5\n{n} {n}\n255\n").into_bytes();
    bytes.reserve(n * n);
    for v in w.matrix().data() {
        let pixel = if max > 0.0 {
            (255.0 * v / max).round() as u8
        } else {
            0
        };
        bytes.push(pixel);
    }
    atomic_write(path, &bytes)
}
