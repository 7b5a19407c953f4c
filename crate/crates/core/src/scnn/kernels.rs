use serde::{Deserialize, Serialize};

/// Convolution weights laid out `[out][in][y][x]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    pub out_features: u16,
    pub in_features: u16,
    pub height: u16,
    pub width: u16,
    pub weights: Vec<f32>,
}

impl Kernel {
    pub fn zeros(out_features: u16, in_features: u16, height: u16, width: u16) -> Self {
        let n = usize::from(out_features) * usize::from(in_features) * usize::from(height) * usize::from(width);
        Self {
            out_features,
            in_features,
            height,
            width,
            weights: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn map_len(&self) -> usize {
        usize::from(self.in_features) * usize::from(self.height) * usize::from(self.width)
    }

    #[inline]
    pub fn index(&self, out: u16, input: u16, ky: u16, kx: u16) -> usize {
        ((usize::from(out) * usize::from(self.in_features) + usize::from(input)) * usize::from(self.height)
            + usize::from(ky))
            * usize::from(self.width)
            + usize::from(kx)
    }

    #[inline]
    pub fn get(&self, out: u16, input: u16, ky: u16, kx: u16) -> f32 {
        self.weights[self.index(out, input, ky, kx)]
    }

    /// Weights of one output map.
    pub fn map(&self, out: u16) -> &[f32] {
        let n = self.map_len();
        &self.weights[usize::from(out) * n..(usize::from(out) + 1) * n]
    }

    pub fn map_mut(&mut self, out: u16) -> &mut [f32] {
        let n = self.map_len();
        &mut self.weights[usize::from(out) * n..(usize::from(out) + 1) * n]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeKernelParams {
    pub size: u16,
    pub sigma: f64,
    /// Distance of each Gaussian lobe from the kernel centre, in pixels.
    pub offset: f64,
}

impl Default for EdgeKernelParams {
    fn default() -> Self {
        Self {
            size: 5,
            sigma: 1.0,
            offset: 1.0,
        }
    }
}

pub fn make_edge_kernels() -> Kernel {
    make_edge_kernels_with(&EdgeKernelParams::default())
}

/// Four oriented difference-of-offset-Gaussian edge detectors at 0°, 45°,
/// 90° and 135°. Feature 0 responds to horizontal edges. Each kernel sums to
/// zero and its positive lobe sums to one.
pub fn make_edge_kernels_with(p: &EdgeKernelParams) -> Kernel {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    // lobe offset direction (x, y) per orientation
    let normals = [(0.0, 1.0), (s, s), (1.0, 0.0), (-s, s)];
    let mut k = Kernel::zeros(4, 1, p.size, p.size);
    let c = f64::from(p.size - 1) / 2.0;
    let g = |a: f64, b: f64| (-(a * a + b * b) / (2.0 * p.sigma * p.sigma)).exp();
    for (f, &(nx, ny)) in normals.iter().enumerate() {
        let mut raw = vec![0.0f64; usize::from(p.size) * usize::from(p.size)];
        for y in 0..p.size {
            for x in 0..p.size {
                let (dx, dy) = (f64::from(x) - c, f64::from(y) - c);
                raw[usize::from(y) * usize::from(p.size) + usize::from(x)] =
                    g(dx + p.offset * nx, dy + p.offset * ny) - g(dx - p.offset * nx, dy - p.offset * ny);
            }
        }
        let mean = raw.iter().sum::<f64>() / raw.len() as f64;
        raw.iter_mut().for_each(|v| *v -= mean);
        let positive: f64 = raw.iter().filter(|v| **v > 0.0).sum();
        for (dst, v) in k.map_mut(f as u16).iter_mut().zip(&raw) {
            *dst = (v / positive) as f32;
        }
    }
    k
}
