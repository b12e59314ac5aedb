//! Small dense symmetric linear algebra: Cholesky and cyclic Jacobi.

use crate::error::{invalid, Error, Result};

/// Square row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Builds from nested rows; every row must have `rows.len()` entries.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(invalid("matrix rows must form a square"));
        }
        Ok(Matrix {
            n,
            data: rows.concat(),
        })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.n, |i, j| self[(j, i)])
    }

    /// `self * self^T`.
    pub fn gram(&self) -> Matrix {
        let n = self.n;
        let mut out = Matrix::zeros(n);
        if n == 0 {
            return out;
        }
        unsafe {
            matrixmultiply::dgemm(
                n,
                n,
                n,
                1.0,
                self.data.as_ptr(),
                n as isize,
                1,
                self.data.as_ptr(),
                1,
                n as isize,
                0.0,
                out.data.as_mut_ptr(),
                n as isize,
                1,
            );
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!(self.n, other.n, "size mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol))
    }

    fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// Lower-triangular `L` with `L L^T = c`.
pub fn cholesky(c: &Matrix) -> Result<Matrix> {
    let n = c.size();
    let mut l = Matrix::zeros(n);
    for j in 0..n {
        let mut d = c[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(Error::Numerical(format!(
                "matrix is not positive definite (pivot {} is {d:e})",
                j + 1
            )));
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let mut v = c[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = v / d;
        }
    }
    Ok(l)
}

/// Eigen-decomposition of a symmetric matrix.
#[derive(Clone, Debug)]
pub struct SymmetricEigen {
    /// Descending.
    pub values: Vec<f64>,
    /// `vectors[k]` belongs to `values[k]`, unit length, first nonzero entry positive.
    pub vectors: Vec<Vec<f64>>,
}

/// Stop when the off-diagonal Frobenius norm falls to this fraction of `||C||_F`.
pub const JACOBI_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 60;

/// Cyclic Jacobi rotations.
pub fn symmetric_eigen(c: &Matrix) -> Result<SymmetricEigen> {
    let n = c.size();
    let scale = c.frobenius();
    if !scale.is_finite() {
        return Err(Error::Numerical("matrix has non-finite entries".into()));
    }
    if !c.is_symmetric(1e-12 * scale.max(1.0)) {
        return Err(invalid("matrix is not symmetric"));
    }
    let mut a = c.clone();
    // Row k of `v` is the k-th eigenvector, so rotations touch contiguous rows.
    let mut v = Matrix::identity(n);
    let target = JACOBI_TOL * scale;
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..i).map(move |j| (i, j)))
            .map(|(i, j)| 2.0 * a[(i, j)] * a[(i, j)])
            .sum::<f64>()
            .sqrt();
        if off <= target {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged {
        return Err(Error::Numerical(format!(
            "Jacobi did not converge in {MAX_SWEEPS} sweeps"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[(y, y)].total_cmp(&a[(x, x)]));
    let mut values = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n);
    for k in order {
        let mut vec = v.row(k).to_vec();
        if let Some(first) = vec.iter().find(|x| x.abs() > 1e-12) {
            if *first < 0.0 {
                vec.iter_mut().for_each(|x| *x = -*x);
            }
        }
        values.push(a[(k, k)]);
        vectors.push(vec);
    }
    Ok(SymmetricEigen { values, vectors })
}

fn rotate(a: &mut Matrix, v: &mut Matrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    if apq == 0.0 {
        return;
    }
    let app = a[(p, p)];
    let aqq = a[(q, q)];
    if apq.abs() <= f64::EPSILON * 1e-3 * (app.abs() * aqq.abs()).sqrt() {
        a[(p, q)] = 0.0;
        a[(q, p)] = 0.0;
        return;
    }
    let theta = (aqq - app) / (2.0 * apq);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let n = a.size();
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = a[(p, k)];
        let akq = a[(q, k)];
        let np = c * akp - s * akq;
        let nq = s * akp + c * akq;
        a[(p, k)] = np;
        a[(q, k)] = nq;
        a[(k, p)] = np;
        a[(k, q)] = nq;
    }
    a[(p, p)] = app - t * apq;
    a[(q, q)] = aqq + t * apq;
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;
    // p < q always.
    let (lo, hi) = v.data.split_at_mut(q * n);
    let (rp, rq) = (&mut lo[p * n..(p + 1) * n], &mut hi[..n]);
    for (x, y) in rp.iter_mut().zip(rq.iter_mut()) {
        let (vp, vq) = (*x, *y);
        *x = c * vp - s * vq;
        *y = s * vp + c * vq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_of_known_matrix() {
        let c = Matrix::from_rows(&[vec![4.0, 2.0], vec![2.0, 5.0]]).unwrap();
        let l = cholesky(&c).unwrap();
        assert_eq!(
            l,
            Matrix::from_rows(&[vec![2.0, 0.0], vec![1.0, 2.0]]).unwrap()
        );
        let bad = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(cholesky(&bad), Err(Error::Numerical(_))));
    }

    #[test]
    fn jacobi_two_by_two() {
        let c = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let e = symmetric_eigen(&c).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-14);
        assert!((e.values[1] - 1.0).abs() < 1e-14);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((e.vectors[0][0] - h).abs() < 1e-14 && (e.vectors[0][1] - h).abs() < 1e-14);
        assert!((e.vectors[1][0] - h).abs() < 1e-14 && (e.vectors[1][1] + h).abs() < 1e-14);
    }

    #[test]
    fn jacobi_rejects_asymmetric() {
        let c = Matrix::from_rows(&[vec![2.0, 1.0], vec![0.0, 2.0]]).unwrap();
        assert!(matches!(symmetric_eigen(&c), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn jacobi_reconstructs_random_symmetric() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let n = 40;
        let b = Matrix::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let c = b.gram();
        let e = symmetric_eigen(&c).unwrap();
        let back = Matrix::from_fn(n, |i, j| {
            (0..n)
                .map(|k| e.values[k] * e.vectors[k][i] * e.vectors[k][j])
                .sum()
        });
        assert!(back.max_abs_diff(&c) < 1e-11);
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
    }
}
