//! Mask visualization: level 1 red, level 2 yellow, level 3 green.

use rdok_core::codec::coding_units;
use rdok_core::image_io::ImagePlanes;
use rdok_core::partition::MaskField;
use rdok_core::Result;

pub const ALPHA: f64 = 0.5;

pub fn level_color(level: u8) -> [f64; 3] {
    match level {
        1 => [1.0, 0.0, 0.0],
        2 => [1.0, 1.0, 0.0],
        _ => [0.0, 1.0, 0.0],
    }
}

/// Tints each coding unit with its level color at [`ALPHA`] and outlines it
/// in the same color at full opacity.
pub fn render(img: &ImagePlanes, mask: &MaskField) -> Result<ImagePlanes> {
    let pw = img.padded_width();
    let mut planes = img.planes().clone();
    for unit in coding_units(mask) {
        let color = level_color(unit.level);
        let last = unit.size - 1;
        for dy in 0..unit.size {
            for dx in 0..unit.size {
                let border = dx == 0 || dy == 0 || dx == last || dy == last;
                let i = (unit.y0 + dy) * pw + unit.x0 + dx;
                for (c, plane) in planes.iter_mut().enumerate() {
                    plane[i] = if border {
                        color[c]
                    } else {
                        (1.0 - ALPHA) * plane[i] + ALPHA * color[c]
                    };
                }
            }
        }
    }
    ImagePlanes::from_padded_planes(img.width(), img.height(), planes)
}
