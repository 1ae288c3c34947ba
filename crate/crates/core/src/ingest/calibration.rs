//! Per-camera calibration and locally adaptive projection.

use serde::{Deserialize, Serialize};

use super::homography::{collinear, Homography};
use super::IngestError;

/// Pairs used for one local fit.
pub const NEAREST_PAIRS: usize = 7;

/// Pixel point and its world position in Mercator meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPair {
    pub u: f64,
    pub v: f64,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSet {
    pub camera_id: String,
    pub pairs: Vec<CalibrationPair>,
}

impl CalibrationSet {
    pub fn new(camera_id: &str, pairs: Vec<CalibrationPair>) -> Result<Self, IngestError> {
        let set = Self {
            camera_id: camera_id.into(),
            pairs,
        };
        set.check()?;
        Ok(set)
    }

    pub fn check(&self) -> Result<(), IngestError> {
        if self.pairs.len() < 4 {
            return Err(IngestError::TooFewPairs {
                camera: self.camera_id.clone(),
                count: self.pairs.len(),
            });
        }
        let finite = self
            .pairs
            .iter()
            .all(|p| [p.u, p.v, p.x, p.y].iter().all(|c| c.is_finite()));
        if !finite {
            return Err(IngestError::Invalid(format!(
                "camera {}: non-finite calibration value",
                self.camera_id
            )));
        }
        let mut pixels: Vec<(f64, f64)> = self.pairs.iter().map(|p| (p.u, p.v)).collect();
        pixels.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        if let Some(w) = pixels.windows(2).find(|w| w[0] == w[1]) {
            return Err(IngestError::DuplicatePixel {
                camera: self.camera_id.clone(),
                u: w[0].0,
                v: w[0].1,
            });
        }
        Ok(())
    }

    /// Homography fitted to every pair.
    pub fn global_homography(&self) -> Result<Homography, IngestError> {
        self.check()?;
        let (src, dst) = split(self.pairs.iter());
        Homography::fit(&src, &dst).ok_or_else(|| IngestError::Degenerate {
            camera: self.camera_id.clone(),
        })
    }
}

fn split<'a>(pairs: impl Iterator<Item = &'a CalibrationPair>) -> (Vec<[f64; 2]>, Vec<[f64; 2]>) {
    pairs.map(|p| ([p.u, p.v], [p.x, p.y])).unzip()
}

/// Projects a pixel to Mercator meters with a homography fitted to the
/// seven calibration pairs nearest in the image. If those are degenerate,
/// further pairs are added in order of distance.
pub fn project_point(calib: &CalibrationSet, pixel: [f64; 2]) -> Result<[f64; 2], IngestError> {
    calib.check()?;
    let mut order: Vec<(f64, usize)> = calib
        .pairs
        .iter()
        .enumerate()
        .map(|(i, p)| ((p.u - pixel[0]).hypot(p.v - pixel[1]), i))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let degenerate = || IngestError::Degenerate {
        camera: calib.camera_id.clone(),
    };
    for k in NEAREST_PAIRS.min(order.len())..=order.len() {
        let (src, dst) = split(order[..k].iter().map(|&(_, i)| &calib.pairs[i]));
        if collinear(&src) || collinear(&dst) {
            continue;
        }
        if let Some(h) = Homography::fit(&src, &dst) {
            return h.apply(pixel).ok_or_else(degenerate);
        }
    }
    Err(degenerate())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(f: impl Fn(f64, f64) -> (f64, f64), pts: &[(f64, f64)]) -> Vec<CalibrationPair> {
        pts.iter()
            .map(|&(u, v)| {
                let (x, y) = f(u, v);
                CalibrationPair { u, v, x, y }
            })
            .collect()
    }

    const SEVEN: [(f64, f64); 7] = [
        (0.0, 0.0),
        (1.0, 0.0),
        (0.0, 1.0),
        (1.0, 1.0),
        (2.0, 0.5),
        (0.5, 2.0),
        (2.0, 2.0),
    ];

    #[test]
    fn identity_pairs() {
        let c = CalibrationSet::new("cam", pairs(|u, v| (u, v), &SEVEN)).unwrap();
        let q = project_point(&c, [0.5, 0.5]).unwrap();
        assert!((q[0] - 0.5).abs() < 1e-9 && (q[1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn scale_by_two() {
        let c = CalibrationSet::new("cam", pairs(|u, v| (2.0 * u, 2.0 * v), &SEVEN)).unwrap();
        let q = project_point(&c, [1.0, 1.0]).unwrap();
        assert!((q[0] - 2.0).abs() < 1e-6 && (q[1] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn three_pairs_rejected() {
        let p = pairs(|u, v| (u, v), &SEVEN[..3]);
        assert!(matches!(
            CalibrationSet::new("cam", p),
            Err(IngestError::TooFewPairs { count: 3, .. })
        ));
    }

    #[test]
    fn duplicate_pixel_rejected() {
        let mut p = pairs(|u, v| (u, v), &SEVEN);
        p.push(p[2]);
        assert!(matches!(
            CalibrationSet::new("cam", p),
            Err(IngestError::DuplicatePixel { .. })
        ));
    }

    #[test]
    fn collinear_neighbours_expand() {
        // seven nearest lie on v = 0, the remaining two break the line
        let mut pts: Vec<(f64, f64)> = (0..7).map(|i| (i as f64, 0.0)).collect();
        pts.extend([(0.0, 30.0), (6.0, 30.0)]);
        let c = CalibrationSet::new("cam", pairs(|u, v| (3.0 * u, 3.0 * v), &pts)).unwrap();
        let q = project_point(&c, [3.0, 0.1]).unwrap();
        assert!((q[0] - 9.0).abs() < 1e-6 && (q[1] - 0.3).abs() < 1e-6);
    }

    #[test]
    fn all_collinear_is_degenerate() {
        let pts: Vec<(f64, f64)> = (0..9).map(|i| (i as f64, i as f64)).collect();
        let c = CalibrationSet::new("cam", pairs(|u, v| (u, v), &pts)).unwrap();
        assert!(matches!(
            project_point(&c, [1.0, 1.0]),
            Err(IngestError::Degenerate { .. })
        ));
    }
}
