use nalgebra::{Matrix3, SymmetricEigen, Unit};

use crate::geom::{PlaneParams, Point3, UnitVector3, Vec3};
use crate::{Error, Result};

/// Centroid and (biased) covariance of a point set.
pub(crate) fn centroid_covariance<'a, I>(points: I) -> Option<(Point3, Matrix3<f64>)>
where
    I: IntoIterator<Item = &'a Point3>,
    I::IntoIter: Clone,
{
    let iter = points.into_iter();
    let mut n = 0usize;
    let mut sum = Vec3::zeros();
    for p in iter.clone() {
        sum += p.coords;
        n += 1;
    }
    if n == 0 {
        return None;
    }
    let c = sum / n as f64;
    let mut cov = Matrix3::zeros();
    for p in iter {
        let d = p.coords - c;
        cov += d * d.transpose();
    }
    Some((Point3::from(c), cov / n as f64))
}

/// Eigenvalues sorted ascending with matching eigenvectors.
pub(crate) fn sorted_eigen(cov: Matrix3<f64>) -> ([f64; 3], [Vec3; 3]) {
    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.map(|i| eig.eigenvalues[i]);
    let vectors = order.map(|i| eig.eigenvectors.column(i).into_owned());
    (values, vectors)
}

/// Sign convention for otherwise unoriented normals: the largest-magnitude
/// component is positive.
pub(crate) fn canonical_sign(v: Vec3) -> Vec3 {
    let mut k = 0;
    for i in 1..3 {
        if v[i].abs() > v[k].abs() {
            k = i;
        }
    }
    if v[k] < 0.0 {
        -v
    } else {
        v
    }
}

/// Total-least-squares plane through `points`.
///
/// The plane passes through the centroid and its normal is the eigenvector of
/// the smallest covariance eigenvalue, signed so its largest component is
/// positive. Fails for fewer than three points or collinear input.
pub fn refit_plane(points: &[Point3]) -> Result<PlaneParams> {
    if points.len() < 3 {
        return Err(Error::Degenerate("plane fit needs at least three points"));
    }
    let (c, cov) = centroid_covariance(points).expect("non-empty");
    let (values, vectors) = sorted_eigen(cov);
    let scale = values[2].max(f64::MIN_POSITIVE);
    if values[2] <= 0.0 || values[1] <= 1e-12 * scale {
        return Err(Error::Degenerate("points are collinear or coincident"));
    }
    let n: UnitVector3 = Unit::new_normalize(canonical_sign(vectors[0]));
    Ok(PlaneParams::from_point_normal(&c, &n))
}

/// Solves `A x = b`; `None` when `|det A|` is at most `min_det`.
pub(crate) fn solve3(a: &Matrix3<f64>, b: &Vec3, min_det: f64) -> Option<Vec3> {
    let det = a.determinant();
    if !(det.abs() > min_det) {
        return None;
    }
    a.lu().solve(b)
}
