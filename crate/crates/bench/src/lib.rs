//! Benchmark fixtures; the benchmarks live in `benches/`.

use rdok_core::image_io::ImagePlanes;
use rdok_core::synth;

/// Seeded composite used by every benchmark.
pub fn fixture(width: usize, height: usize) -> ImagePlanes {
    synth::composite(width, height, 42)
}
