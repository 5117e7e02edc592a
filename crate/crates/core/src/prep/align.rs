use std::cmp::Ordering;

use serde::Serialize;

use super::RasterImage;
use crate::error::{Error, Result};

/// Integer translation applied to the moving image: output pixel `(x, y)`
/// comes from moving pixel `(x - dx, y - dy)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Shift {
    pub dx: i32,
    pub dy: i32,
}

impl Shift {
    fn magnitude_sq(&self) -> i64 {
        self.dx as i64 * self.dx as i64 + self.dy as i64 * self.dy as i64
    }
}

/// Candidate score: mean squared luma difference over the overlap, kept as
/// an exact fraction so comparisons are reproducible.
#[derive(Clone, Copy)]
struct Score {
    ssd: u128,
    area: u128,
}

impl Score {
    fn cmp_mean(&self, other: &Score) -> Ordering {
        (self.ssd * other.area).cmp(&(other.ssd * self.area))
    }
}

/// Exhaustive search over integer shifts in `[-max_shift, max_shift]²`
/// minimizing the overlap-normalized SSD of integer luma. Ties go to the
/// smaller shift, then to row-major (dy, dx) order. Vacated borders of the
/// returned image are zero.
pub fn align_translation(
    reference: &RasterImage,
    moving: &RasterImage,
    max_shift: u32,
) -> Result<(RasterImage, Shift)> {
    if reference.dimensions() != moving.dimensions() {
        return Err(Error::Input(format!(
            "alignment needs equal dimensions, got {:?} and {:?}",
            reference.dimensions(),
            moving.dimensions()
        )));
    }
    let (w, h) = reference.dimensions();
    if 2 * max_shift as u64 >= w.min(h) as u64 {
        return Err(Error::Input(format!(
            "max shift {max_shift} must be below half of the smaller side ({})",
            w.min(h)
        )));
    }

    let ref_luma = reference.luma();
    let mov_luma = moving.luma();
    let (w, h, m) = (w as i64, h as i64, max_shift as i64);

    let mut best: Option<(Score, Shift)> = None;
    for dy in -m..=m {
        for dx in -m..=m {
            let (x0, x1) = (dx.max(0), (w + dx).min(w));
            let (y0, y1) = (dy.max(0), (h + dy).min(h));
            let mut ssd: u128 = 0;
            for y in y0..y1 {
                let ref_row = (y * w) as usize;
                let mov_row = ((y - dy) * w) as usize;
                for x in x0..x1 {
                    let a = ref_luma[ref_row + x as usize] as i64;
                    let b = mov_luma[mov_row + (x - dx) as usize] as i64;
                    ssd += ((a - b) * (a - b)) as u128;
                }
            }
            let score = Score {
                ssd,
                area: ((x1 - x0) * (y1 - y0)) as u128,
            };
            let shift = Shift {
                dx: dx as i32,
                dy: dy as i32,
            };
            let better = match &best {
                None => true,
                Some((s, sh)) => match score.cmp_mean(s) {
                    Ordering::Less => true,
                    Ordering::Equal => shift.magnitude_sq() < sh.magnitude_sq(),
                    Ordering::Greater => false,
                },
            };
            if better {
                best = Some((score, shift));
            }
        }
    }

    let (_, shift) = best.expect("search space contains the zero shift");
    Ok((translate(moving, shift), shift))
}

fn translate(image: &RasterImage, shift: Shift) -> RasterImage {
    let (w, h) = (image.width() as i64, image.height() as i64);
    RasterImage::from_fn(image.width(), image.height(), |x, y| {
        let sx = x as i64 - shift.dx as i64;
        let sy = y as i64 - shift.dy as i64;
        if (0..w).contains(&sx) && (0..h).contains(&sy) {
            image.get(sx as u32, sy as u32)
        } else {
            [0, 0, 0]
        }
    })
    .expect("translation preserves dimensions")
}
