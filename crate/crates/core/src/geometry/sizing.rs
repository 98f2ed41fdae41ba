use crate::error::Result;

use super::patch::{PatchSpec, PreparedPatch};

/// Target local mesh size `h(x) = min(h_far, h_k + slope_k · dist_k(x))`
/// over a set of features (origin, patch interior, patch rim).
#[derive(Clone, Debug)]
pub struct SizeField {
    h_far: f64,
    features: Vec<Feature>,
}

#[derive(Clone, Debug)]
enum Feature {
    Origin { h: f64, slope: f64 },
    Region { patch: PreparedPatch, scale: f64, h: f64, slope: f64 },
    Rim { patch: PreparedPatch, scale: f64, h: f64, slope: f64 },
}

/// Split a point into its flat-face part and its height above the face.
fn split(x: &[f64]) -> ([f64; 2], f64) {
    if x.len() == 3 {
        ([x[0], x[1]], x[2])
    } else {
        ([x[0], 0.0], x[1])
    }
}

impl SizeField {
    pub fn uniform(h_far: f64) -> Self {
        SizeField { h_far, features: Vec::new() }
    }

    pub fn h_far(&self) -> f64 {
        self.h_far
    }

    pub fn with_origin(mut self, h: f64, slope: f64) -> Self {
        self.features.push(Feature::Origin { h, slope });
        self
    }

    /// Size `h` on the dilated patch `scale·V`, growing with slope away from it.
    pub fn with_patch(mut self, patch: &PatchSpec, scale: f64, h: f64, slope: f64) -> Result<Self> {
        self.features.push(Feature::Region { patch: patch.prepare()?, scale, h, slope });
        Ok(self)
    }

    /// Size `h` along the boundary curve of `scale·V`.
    pub fn with_rim(mut self, patch: &PatchSpec, scale: f64, h: f64, slope: f64) -> Result<Self> {
        self.features.push(Feature::Rim { patch: patch.prepare()?, scale, h, slope });
        Ok(self)
    }

    pub fn at(&self, x: &[f64]) -> f64 {
        let mut h = self.h_far;
        for f in &self.features {
            let cand = match f {
                Feature::Origin { h, slope } => h + slope * x.iter().map(|v| v * v).sum::<f64>().sqrt(),
                Feature::Region { patch, scale, h, slope } => {
                    let (p, z) = split(x);
                    let d = (patch.signed_distance([p[0] / scale, p[1] / scale]) * scale).max(0.0);
                    h + slope * d.hypot(z)
                }
                Feature::Rim { patch, scale, h, slope } => {
                    let (p, z) = split(x);
                    let d = (patch.signed_distance([p[0] / scale, p[1] / scale]) * scale).abs();
                    h + slope * d.hypot(z)
                }
            };
            h = h.min(cand);
        }
        h
    }
}
