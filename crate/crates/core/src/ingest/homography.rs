//! Planar homographies fitted by normalized DLT.

use nalgebra::{DMatrix, Matrix3, Vector3};

/// Smallest singular value ratio below which a point set is treated as
/// collinear, and the DLT null space as non-unique.
const DEGENERACY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography(pub Matrix3<f64>);

impl Homography {
    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    /// Maps a point; `None` if it lands on the line at infinity.
    pub fn apply(&self, p: [f64; 2]) -> Option<[f64; 2]> {
        let q = self.0 * Vector3::new(p[0], p[1], 1.0);
        let scale = self.0.abs().max() * (p[0].abs() + p[1].abs() + 1.0);
        if q[2].abs() <= 1e-15 * scale {
            return None;
        }
        Some([q[0] / q[2], q[1] / q[2]])
    }

    /// Least-squares fit of `dst ~ H src` over at least four pairs. Returns
    /// `None` for degenerate configurations.
    pub fn fit(src: &[[f64; 2]], dst: &[[f64; 2]]) -> Option<Self> {
        assert_eq!(src.len(), dst.len());
        if src.len() < 4 || collinear(src) || collinear(dst) {
            return None;
        }
        let (ts, ns) = normalization(src);
        let (td, nd) = normalization(dst);
        let rows = (2 * ns.len()).max(9);
        let mut a = DMatrix::<f64>::zeros(rows, 9);
        for (i, (p, q)) in ns.iter().zip(&nd).enumerate() {
            let (x, y, u, v) = (p[0], p[1], q[0], q[1]);
            let r = 2 * i;
            a.row_mut(r)
                .copy_from_slice(&[-x, -y, -1.0, 0.0, 0.0, 0.0, u * x, u * y, u]);
            a.row_mut(r + 1)
                .copy_from_slice(&[0.0, 0.0, 0.0, -x, -y, -1.0, v * x, v * y, v]);
        }
        let svd = a.svd(false, true);
        let v_t = svd.v_t?;
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
        let s1 = svd.singular_values[order[1]];
        let s_max = svd.singular_values[order[order.len() - 1]];
        if s1 <= DEGENERACY_TOL * s_max {
            return None;
        }
        let h = v_t.row(order[0]);
        let hn = Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8]);
        let td_inv = td.try_inverse()?;
        let m = td_inv * hn * ts;
        let m = if m[(2, 2)].abs() > 1e-12 {
            m / m[(2, 2)]
        } else {
            m / m.norm()
        };
        m.iter().all(|v| v.is_finite()).then_some(Self(m))
    }
}

/// Hartley normalization: centroid to origin, mean distance sqrt(2).
fn normalization(pts: &[[f64; 2]]) -> (Matrix3<f64>, Vec<[f64; 2]>) {
    let n = pts.len() as f64;
    let cx = pts.iter().map(|p| p[0]).sum::<f64>() / n;
    let cy = pts.iter().map(|p| p[1]).sum::<f64>() / n;
    let mean = pts
        .iter()
        .map(|p| (p[0] - cx).hypot(p[1] - cy))
        .sum::<f64>()
        / n;
    let s = if mean > 0.0 {
        std::f64::consts::SQRT_2 / mean
    } else {
        1.0
    };
    let t = Matrix3::new(s, 0.0, -s * cx, 0.0, s, -s * cy, 0.0, 0.0, 1.0);
    let out = pts
        .iter()
        .map(|p| [s * (p[0] - cx), s * (p[1] - cy)])
        .collect();
    (t, out)
}

/// True when all points lie on one line (relative to their spread).
pub fn collinear(pts: &[[f64; 2]]) -> bool {
    if pts.len() < 3 {
        return true;
    }
    let n = pts.len() as f64;
    let cx = pts.iter().map(|p| p[0]).sum::<f64>() / n;
    let cy = pts.iter().map(|p| p[1]).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in pts {
        let (dx, dy) = (p[0] - cx, p[1] - cy);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let tr = sxx + syy;
    if tr <= 0.0 {
        return true;
    }
    let det = sxx * syy - sxy * sxy;
    let disc = ((sxx - syy).powi(2) + 4.0 * sxy * sxy).sqrt();
    let small = (tr - disc) / 2.0;
    let small = if small > 0.0 {
        small
    } else {
        det / tr.max(f64::MIN_POSITIVE)
    };
    small <= DEGENERACY_TOL * tr
}
