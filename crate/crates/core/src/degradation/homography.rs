use nalgebra::{DMatrix, Matrix3, Vector3};

use crate::error::{Error, Result};

/// 3×3 projective transform normalized so that `h[(2, 2)] == 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography(pub Matrix3<f64>);

impl Homography {
    pub fn identity() -> Self {
        Homography(Matrix3::identity())
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn apply(&self, (x, y): (f64, f64)) -> (f64, f64) {
        let p = self.0 * Vector3::new(x, y, 1.0);
        (p.x / p.z, p.y / p.z)
    }

    pub fn inverse(&self) -> Result<Homography> {
        self.0
            .try_inverse()
            .map(Homography)
            .ok_or_else(|| Error::Degenerate("homography is singular".into()))
    }
}

/// Similarity transform taking points to zero centroid and mean distance √2.
fn normalizer(points: &[(f64, f64)]) -> Result<Matrix3<f64>> {
    let n = points.len() as f64;
    let cx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let cy = points.iter().map(|p| p.1).sum::<f64>() / n;
    let mean_dist = points
        .iter()
        .map(|p| ((p.0 - cx).powi(2) + (p.1 - cy).powi(2)).sqrt())
        .sum::<f64>()
        / n;
    if !(mean_dist.is_finite() && mean_dist > 0.0) {
        return Err(Error::Degenerate("points coincide".into()));
    }
    let s = std::f64::consts::SQRT_2 / mean_dist;
    Ok(Matrix3::new(s, 0.0, -s * cx, 0.0, s, -s * cy, 0.0, 0.0, 1.0))
}

fn has_collinear_triple(points: &[(f64, f64)]) -> bool {
    let scale = points
        .iter()
        .flat_map(|p| [p.0.abs(), p.1.abs()])
        .fold(1.0f64, f64::max);
    let tol = 1e-9 * scale * scale;
    let n = points.len();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let (a, b, c) = (points[i], points[j], points[k]);
                let cross = (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0);
                if cross.abs() <= tol {
                    return true;
                }
            }
        }
    }
    false
}

/// Normalized direct linear transform mapping `src[i]` onto `dst[i]`.
///
/// Solves the 2n×9 algebraic system by SVD after conditioning both point
/// sets; no outlier rejection.
pub fn estimate_homography(src: &[(f64, f64)], dst: &[(f64, f64)]) -> Result<Homography> {
    if src.len() != dst.len() {
        return Err(Error::invalid(format!(
            "{} source points but {} destination points",
            src.len(),
            dst.len()
        )));
    }
    if src.len() < 4 {
        return Err(Error::TooShort {
            needed: 4,
            actual: src.len(),
        });
    }
    if src
        .iter()
        .chain(dst)
        .any(|p| !(p.0.is_finite() && p.1.is_finite()))
    {
        return Err(Error::invalid("non-finite point"));
    }
    if src.len() == 4 && (has_collinear_triple(src) || has_collinear_triple(dst)) {
        return Err(Error::Degenerate("three collinear correspondences".into()));
    }

    let ts = normalizer(src)?;
    let td = normalizer(dst)?;
    let n = src.len();
    // Padding to at least 9 rows keeps the full right-singular basis.
    let rows = (2 * n).max(9);
    let mut a = DMatrix::<f64>::zeros(rows, 9);
    for (i, (s, d)) in src.iter().zip(dst).enumerate() {
        let ps = ts * Vector3::new(s.0, s.1, 1.0);
        let pd = td * Vector3::new(d.0, d.1, 1.0);
        let (x, y) = (ps.x, ps.y);
        let (u, v) = (pd.x, pd.y);
        let r0 = [-x, -y, -1.0, 0.0, 0.0, 0.0, u * x, u * y, u];
        let r1 = [0.0, 0.0, 0.0, -x, -y, -1.0, v * x, v * y, v];
        for c in 0..9 {
            a[(2 * i, c)] = r0[c];
            a[(2 * i + 1, c)] = r1[c];
        }
    }

    let svd = a.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Degenerate("SVD failed".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let largest = svd.singular_values[order[0]];
    let second_smallest = svd.singular_values[order[7]];
    if !(largest > 0.0) || second_smallest / largest < 1e-10 {
        return Err(Error::Degenerate(
            "correspondences do not determine a unique homography".into(),
        ));
    }
    let h = v_t.row(order[8]);
    let hn = Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8]);
    let td_inv = td
        .try_inverse()
        .ok_or_else(|| Error::Degenerate("destination normalizer singular".into()))?;
    let m = td_inv * hn * ts;
    let scale = m[(2, 2)];
    if scale.abs() < 1e-12 * m.abs().max() {
        return Err(Error::Degenerate("homography maps origin to infinity".into()));
    }
    Ok(Homography(m / scale))
}
