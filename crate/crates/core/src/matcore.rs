//! Small dense floating-point matrices.
//!
//! A thin wrapper over `nalgebra::DMatrix<f64>` exposing only what the
//! lattice and rotation constructions need.

use std::ops::Mul;

use nalgebra::DMatrix;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Threshold on `||R R^T - I||_max` for a matrix to count as orthogonal.
pub const ORTHO_TOL: f64 = 1e-10;
/// `|det|` at or below this is treated as singular.
pub const SINGULAR_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix(DMatrix<f64>);

impl Matrix {
    /// Row-major constructor.
    pub fn from_row_slice(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Precondition("matrix entries must be finite".into()));
        }
        Ok(Matrix(DMatrix::from_row_slice(rows, cols, data)))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Shape("ragged rows".into()));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Matrix::from_row_slice(rows.len(), cols, &flat)
    }

    pub fn identity(n: usize) -> Self {
        Matrix(DMatrix::identity(n, n))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.0.row(i).iter().copied().collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows()).map(|i| self.row(i)).collect()
    }

    pub fn as_nalgebra(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn scale(&self, factor: f64) -> Matrix {
        Matrix(&self.0 * factor)
    }

    pub fn transpose(&self) -> Matrix {
        Matrix(self.0.transpose())
    }

    pub fn kronecker(&self, other: &Matrix) -> Matrix {
        Matrix(self.0.kronecker(&other.0))
    }

    pub fn det(&self) -> Result<f64> {
        self.require_square()?;
        Ok(self.0.clone().lu().determinant())
    }

    pub fn inverse(&self) -> Result<Matrix> {
        let det = self.det()?;
        if det.abs() <= SINGULAR_TOL {
            return Err(Error::Singular { det });
        }
        self.0
            .clone()
            .lu()
            .try_inverse()
            .map(Matrix)
            .ok_or(Error::Singular { det })
    }

    /// `||R R^T - I||_max`.
    pub fn orthogonality_residual(&self) -> Result<f64> {
        self.require_square()?;
        let n = self.rows();
        let prod = &self.0 * self.0.transpose();
        Ok((prod - DMatrix::<f64>::identity(n, n)).amax())
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!(self.0.shape(), other.0.shape());
        (&self.0 - &other.0).amax()
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols() != other.rows() {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows(),
                self.cols(),
                other.rows(),
                other.cols()
            )));
        }
        Ok(Matrix(&self.0 * &other.0))
    }

    fn require_square(&self) -> Result<()> {
        if self.is_square() {
            Ok(())
        } else {
            Err(Error::NotSquare {
                rows: self.rows(),
                cols: self.cols(),
            })
        }
    }
}

impl Mul for &Matrix {
    type Output = Matrix;

    /// Panics on a shape mismatch; use [`Matrix::matmul`] for a checked product.
    fn mul(self, rhs: &Matrix) -> Matrix {
        self.matmul(rhs).expect("matrix shapes agree")
    }
}

impl Serialize for Matrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(deserializer)?;
        Matrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// The `p x p` identity with entries `(i,i), (i,j), (j,i), (j,j)` replaced by
/// `cos a, -sin a, sin a, cos a`. Indices are 1-based with `i < j`.
pub fn givens(p: usize, i: usize, j: usize, alpha: f64) -> Result<Matrix> {
    if !(1 <= i && i < j && j <= p) {
        return Err(Error::Index(format!(
            "givens indices need 1 <= i < j <= p, got i={i}, j={j}, p={p}"
        )));
    }
    let (s, c) = alpha.sin_cos();
    let mut m = DMatrix::identity(p, p);
    let (a, b) = (i - 1, j - 1);
    m[(a, a)] = c;
    m[(a, b)] = -s;
    m[(b, a)] = s;
    m[(b, b)] = c;
    Ok(Matrix(m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn kronecker_examples() {
        let i2 = Matrix::identity(2);
        assert_eq!(i2.kronecker(&i2), Matrix::identity(4));

        let swap = m(&[&[0.0, 1.0], &[1.0, 0.0]]).kronecker(&i2);
        let expected = m(&[
            &[0.0, 0.0, 1.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0, 0.0],
        ]);
        assert_eq!(swap, expected);

        // Q(5) (x) Q(2): both first rows are (1, 1).
        let q = |q: f64| m(&[&[1.0, 1.0], &[-q.sqrt(), q.sqrt()]]);
        let k = q(5.0).kronecker(&q(2.0));
        assert_eq!(k.row(0), vec![1.0, 1.0, 1.0, 1.0]);
        assert_eq!(k.rows(), 4);
    }

    #[test]
    fn det_and_inverse() {
        assert_eq!(Matrix::identity(3).det().unwrap(), 1.0);
        let inv = m(&[&[2.0, 0.0], &[0.0, 4.0]]).inverse().unwrap();
        assert!(inv.max_abs_diff(&m(&[&[0.5, 0.0], &[0.0, 0.25]])) < 1e-15);
        assert!(matches!(
            m(&[&[1.0, 2.0], &[2.0, 4.0]]).inverse(),
            Err(Error::Singular { .. })
        ));
        assert!(matches!(
            m(&[&[1.0, 2.0]]).det(),
            Err(Error::NotSquare { rows: 1, cols: 2 })
        ));
    }

    #[test]
    fn givens_examples() {
        assert_eq!(givens(2, 1, 2, 0.0).unwrap(), Matrix::identity(2));
        let quarter = givens(2, 1, 2, PI / 2.0).unwrap();
        assert!(quarter.max_abs_diff(&m(&[&[0.0, -1.0], &[1.0, 0.0]])) < 1e-15);
        let half = givens(3, 1, 3, PI).unwrap();
        let expected = m(&[&[-1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, -1.0]]);
        assert!(half.max_abs_diff(&expected) < 1e-15);
        assert!(givens(3, 2, 2, 0.1).is_err());
        assert!(givens(3, 0, 2, 0.1).is_err());
        assert!(givens(3, 2, 4, 0.1).is_err());
    }

    #[test]
    fn orthogonality_residual_examples() {
        assert_eq!(Matrix::identity(5).orthogonality_residual().unwrap(), 0.0);
        let g = givens(4, 2, 3, 1.1).unwrap();
        assert!(g.orthogonality_residual().unwrap() <= 1e-15);
        let shear = m(&[&[1.0, 1.0], &[0.0, 1.0]]);
        assert_eq!(shear.orthogonality_residual().unwrap(), 1.0);
    }

    fn random_rotation(p: usize, angles: &[f64]) -> Matrix {
        let mut r = Matrix::identity(p);
        let mut it = angles.iter();
        for i in 1..=p {
            for j in i + 1..=p {
                r = &r * &givens(p, i, j, *it.next().unwrap()).unwrap();
            }
        }
        r
    }

    proptest! {
        #[test]
        fn kronecker_of_orthogonal_is_orthogonal(
            p in 2usize..5, q in 2usize..5,
            angles in proptest::collection::vec(0.0..2.0 * PI, 20),
        ) {
            let a = random_rotation(p, &angles);
            let b = random_rotation(q, &angles[10..]);
            prop_assert!(a.kronecker(&b).orthogonality_residual().unwrap() <= 1e-12);
        }

        #[test]
        fn kronecker_determinant_identity(
            p in 1usize..4, q in 1usize..4,
            a in proptest::collection::vec(-2.0f64..2.0, 9),
            b in proptest::collection::vec(-2.0f64..2.0, 9),
        ) {
            let ma = Matrix::from_row_slice(p, p, &a[..p * p]).unwrap();
            let mb = Matrix::from_row_slice(q, q, &b[..q * q]).unwrap();
            let lhs = ma.kronecker(&mb).det().unwrap();
            let rhs = ma.det().unwrap().powi(q as i32) * mb.det().unwrap().powi(p as i32);
            prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs.abs().max(1.0));
        }

        #[test]
        fn double_inverse_is_identity(
            p in 2usize..=8,
            vals in proptest::collection::vec(-1.0f64..1.0, 64),
        ) {
            // Diagonally dominant, hence well conditioned.
            let mut data = vals[..p * p].to_vec();
            for i in 0..p {
                data[i * p + i] += p as f64 + 1.0;
            }
            let a = Matrix::from_row_slice(p, p, &data).unwrap();
            let back = a.inverse().unwrap().inverse().unwrap();
            prop_assert!(back.max_abs_diff(&a) <= 1e-9);
            let prod = &a * &a.inverse().unwrap();
            prop_assert!(prod.max_abs_diff(&Matrix::identity(p)) <= 1e-9);
        }
    }
}
