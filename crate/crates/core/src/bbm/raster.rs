use crate::error::{Error, Result};
use crate::par::{self, Execution};

use super::band::AttractorCloud;

/// Occupancy counts over the band `[0, 1] × [-1, 1]`, row 0 at `y = 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub counts: Vec<u32>,
}

impl Raster {
    pub fn max_count(&self) -> u32 {
        self.counts.iter().copied().max().unwrap_or(0)
    }

    pub fn nonzero(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    /// Binary PGM with `floor(count * 255 / max)` gray levels.
    pub fn to_pgm(&self) -> Vec<u8> {
        let max = u64::from(self.max_count());
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.counts.iter().map(|&c| (u64::from(c) * 255).checked_div(max).unwrap_or(0) as u8));
        out
    }
}

fn pixel(width: usize, height: usize, (x, y): (f64, f64)) -> usize {
    let col = ((x * width as f64).floor().max(0.0) as usize).min(width - 1);
    let row = (((1.0 - y) / 2.0 * height as f64).floor().max(0.0) as usize).min(height - 1);
    row * width + col
}

/// Chunk size for parallel accumulation.
const CHUNK: usize = 1 << 14;

pub fn attractor_raster(cloud: &AttractorCloud, width: usize, height: usize, exec: Execution) -> Result<Raster> {
    rasterize(&cloud.points, width, height, exec)
}

pub fn rasterize(points: &[(f64, f64)], width: usize, height: usize, exec: Execution) -> Result<Raster> {
    if width == 0 || height == 0 {
        return Err(Error::Precondition("raster dimensions must be positive".into()));
    }
    let chunks: Vec<&[(f64, f64)]> = points.chunks(CHUNK).collect();
    let partial = par::map_slice(exec, &chunks, |chunk| {
        let mut counts = vec![0u32; width * height];
        for &p in *chunk {
            counts[pixel(width, height, p)] += 1;
        }
        counts
    });
    let mut counts = vec![0u32; width * height];
    for part in partial {
        for (c, p) in counts.iter_mut().zip(part) {
            *c += p;
        }
    }
    Ok(Raster { width, height, counts })
}
