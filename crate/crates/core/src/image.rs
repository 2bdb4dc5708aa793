//! HDR and 8-bit image buffers.

use alloc::vec::Vec;

use crate::camera::Dims;
use crate::math::Rgb;

/// Linear radiance image, row-major from the top-left.
#[derive(Debug, Clone, PartialEq)]
pub struct HdrImage {
    pub dims: Dims,
    pub pixels: Vec<Rgb>,
}

impl HdrImage {
    pub fn new(dims: Dims) -> Self {
        Self { dims, pixels: alloc::vec![Rgb::BLACK; dims.pixel_count()] }
    }

    pub fn filled(dims: Dims, c: Rgb) -> Self {
        Self { dims, pixels: alloc::vec![c; dims.pixel_count()] }
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> Rgb {
        self.pixels[(y * self.dims.width + x) as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, c: Rgb) {
        self.pixels[(y * self.dims.width + x) as usize] = c;
    }

    pub fn mean(&self) -> Rgb {
        let n = self.pixels.len().max(1) as f64;
        self.pixels.iter().fold(Rgb::BLACK, |a, p| a + *p) / n
    }
}

/// 8-bit RGB image, row-major from the top-left.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rgb8Image {
    pub dims: Dims,
    pub data: Vec<u8>,
}

impl Rgb8Image {
    pub fn new(dims: Dims) -> Self {
        Self { dims, data: alloc::vec![0; dims.pixel_count() * 3] }
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y * self.dims.width + x) as usize * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// Places `left` and `right` next to each other. Heights must match.
    pub fn side_by_side(left: &Rgb8Image, right: &Rgb8Image) -> Rgb8Image {
        assert_eq!(left.dims.height, right.dims.height, "side-by-side heights differ");
        let dims = Dims::new(left.dims.width + right.dims.width, left.dims.height);
        let mut data = Vec::with_capacity(dims.pixel_count() * 3);
        let (lw, rw) = (left.dims.width as usize * 3, right.dims.width as usize * 3);
        for y in 0..dims.height as usize {
            data.extend_from_slice(&left.data[y * lw..(y + 1) * lw]);
            data.extend_from_slice(&right.data[y * rw..(y + 1) * rw]);
        }
        Rgb8Image { dims, data }
    }
}
