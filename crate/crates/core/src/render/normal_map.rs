use crate::Vec3;

/// Which triangle produced a pixel and its un-normalized world-space barycentrics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FragmentSource {
    pub triangle: u32,
    pub alphas: [f64; 3],
}

/// A covered pixel: unit camera-space normal, screen depth `z'` when known, and the
/// fragment that produced it when rendered (decoded images carry neither).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Fragment {
    pub normal: Vec3,
    pub depth: Option<f64>,
    pub source: Option<FragmentSource>,
}

/// Row-major image of optional fragments; `None` marks an uncovered pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalMap {
    width: usize,
    height: usize,
    pixels: Vec<Option<Fragment>>,
}

impl NormalMap {
    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            pixels: vec![None; width * height],
        }
    }

    pub fn from_pixels(width: usize, height: usize, pixels: Vec<Option<Fragment>>) -> Self {
        assert_eq!(pixels.len(), width * height, "pixel count does not match dimensions");
        Self {
            width,
            height,
            pixels,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixels(&self) -> &[Option<Fragment>] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [Option<Fragment>] {
        &mut self.pixels
    }

    /// Pixel at column `x`, row `y`.
    pub fn get(&self, x: usize, y: usize) -> Option<&Fragment> {
        self.pixels[y * self.width + x].as_ref()
    }

    pub fn set(&mut self, x: usize, y: usize, fragment: Option<Fragment>) {
        self.pixels[y * self.width + x] = fragment;
    }

    pub fn is_covered(&self, index: usize) -> bool {
        self.pixels[index].is_some()
    }

    pub fn coverage_count(&self) -> usize {
        self.pixels.iter().filter(|p| p.is_some()).count()
    }

    /// Normal at a flat pixel index, if covered.
    pub fn normal(&self, index: usize) -> Option<Vec3> {
        self.pixels[index].map(|f| f.normal)
    }
}
