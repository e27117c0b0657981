//! Exact integer and rational arithmetic for the rotation side conditions.
//!
//! Irrationality of products of radicals and full rank of integer matrices
//! cannot be decided from floating point, so everything here works on
//! arbitrary-precision integers.

use std::fmt;
use std::ops::{Mul, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Pow, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A normalized rational number: `den > 0` and `gcd(|num|, den) == 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Rational {
    num: i64,
    den: i64,
}

impl Rational {
    pub fn new(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::Precondition("rational with zero denominator".into()));
        }
        let sign = if den < 0 { -1 } else { 1 };
        let g = num.gcd(&den).max(1);
        Ok(Rational {
            num: sign * num / g,
            den: sign * den / g,
        })
    }

    pub fn integer(n: i64) -> Self {
        Rational { num: n, den: 1 }
    }

    pub fn num(&self) -> i64 {
        self.num
    }

    pub fn den(&self) -> i64 {
        self.den
    }

    pub fn is_integer(&self) -> bool {
        self.den == 1
    }

    pub fn is_positive(&self) -> bool {
        self.num > 0
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl FromStr for Rational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Precondition(format!("cannot parse rational from {s:?}"));
        match s.trim().split_once('/') {
            Some((n, d)) => {
                let n = n.trim().parse().map_err(|_| bad())?;
                let d = d.trim().parse().map_err(|_| bad())?;
                Rational::new(n, d)
            }
            None => Ok(Rational::integer(s.trim().parse().map_err(|_| bad())?)),
        }
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        if self.den == 1 {
            serializer.serialize_i64(self.num)
        } else {
            serializer.serialize_str(&self.to_string())
        }
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Int(i64),
            Text(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Int(n) => Ok(Rational::integer(n)),
            Repr::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Dense integer matrix with arbitrary-precision entries, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<BigInt>,
}

impl IntMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<BigInt>) -> Result<Self> {
        if rows == 0 || cols == 0 || entries.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} entries for a {rows}x{cols} integer matrix",
                entries.len()
            )));
        }
        Ok(IntMatrix { rows, cols, entries })
    }

    /// Builds from nested rows of machine integers. Panics on ragged input.
    pub fn from_rows<const C: usize>(rows: &[[i64; C]]) -> Self {
        let entries = rows.iter().flatten().map(|&v| BigInt::from(v)).collect();
        IntMatrix::new(rows.len(), C, entries).expect("non-empty rectangular rows")
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix {
            rows,
            cols,
            entries: vec![BigInt::zero(); rows * cols],
        }
    }

    /// All-ones square matrix.
    pub fn ones(n: usize) -> Self {
        IntMatrix {
            rows: n,
            cols: n,
            entries: vec![BigInt::one(); n * n],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.entries[i * self.cols + j]
    }

    pub fn entries(&self) -> &[BigInt] {
        &self.entries
    }

    pub fn scale(&self, factor: i64) -> IntMatrix {
        let f = BigInt::from(factor);
        IntMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|e| e * &f).collect(),
        }
    }

    pub fn kron(&self, other: &IntMatrix) -> IntMatrix {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut entries = vec![BigInt::zero(); rows * cols];
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.get(i, j);
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        entries[(i * other.rows + k) * cols + j * other.cols + l] =
                            a * other.get(k, l);
                    }
                }
            }
        }
        IntMatrix { rows, cols, entries }
    }

    pub fn to_f64_rows(&self) -> Vec<Vec<f64>> {
        use num_traits::ToPrimitive;
        (0..self.rows)
            .map(|i| {
                (0..self.cols)
                    .map(|j| self.get(i, j).to_f64().unwrap_or(f64::NAN))
                    .collect()
            })
            .collect()
    }
}

impl Mul for &IntMatrix {
    type Output = Result<IntMatrix>;

    fn mul(self, rhs: &IntMatrix) -> Result<IntMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = IntMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for j in 0..rhs.cols {
                let mut acc = BigInt::zero();
                for k in 0..self.cols {
                    acc += self.get(i, k) * rhs.get(k, j);
                }
                out.entries[i * rhs.cols + j] = acc;
            }
        }
        Ok(out)
    }
}

impl Sub for &IntMatrix {
    type Output = Result<IntMatrix>;

    fn sub(self, rhs: &IntMatrix) -> Result<IntMatrix> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(Error::Shape(format!(
                "cannot subtract {}x{} from {}x{}",
                rhs.rows, rhs.cols, self.rows, self.cols
            )));
        }
        Ok(IntMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self
                .entries
                .iter()
                .zip(&rhs.entries)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }
}

/// Largest `r` with `r^k <= m`, by binary search on exact integers.
pub fn integer_kth_root(m: &BigUint, k: u32) -> BigUint {
    assert!(k >= 1);
    if m.is_zero() || k == 1 {
        return m.clone();
    }
    // r < 2^(ceil(bits/k)), so that is a safe exclusive upper bound.
    let bits = m.bits();
    let mut lo = BigUint::one();
    let mut hi = BigUint::one() << (bits.div_ceil(u64::from(k)) as usize);
    while &lo + 1u32 < hi {
        let mid: BigUint = (&lo + &hi) >> 1;
        if Pow::pow(&mid, k) <= *m {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// True iff some integer `r >= 1` satisfies `r^k == m`.
pub fn is_perfect_kth_power(m: &BigUint, k: u32) -> bool {
    debug_assert!(k >= 2);
    if m.is_zero() {
        return false;
    }
    let r = integer_kth_root(m, k);
    Pow::pow(&r, k) == *m
}

/// Decides whether `prod bases[i]^exponents[i]` is irrational.
///
/// The product is rewritten as `m^(1/L)` with `L` the lcm of the exponent
/// denominators and `m = prod bases[i]^(num_i * L / den_i)`; it is rational
/// exactly when `m` is a perfect `L`-th power.
pub fn root_product_is_irrational(bases: &[u64], exponents: &[Rational]) -> Result<bool> {
    if bases.is_empty() || bases.len() != exponents.len() {
        return Err(Error::Precondition(
            "bases and exponents must be non-empty and of equal length".into(),
        ));
    }
    if bases.contains(&0) || exponents.iter().any(|e| !e.is_positive()) {
        return Err(Error::Precondition(
            "bases must be >= 1 and exponents positive".into(),
        ));
    }
    let lcm = exponents.iter().fold(1i64, |acc, e| acc.lcm(&e.den()));
    if lcm == 1 {
        return Ok(false);
    }
    let mut m = BigUint::one();
    for (&b, e) in bases.iter().zip(exponents) {
        let power = u32::try_from(e.num() * (lcm / e.den()))
            .map_err(|_| Error::Precondition("exponent too large".into()))?;
        m *= Pow::pow(&BigUint::from(b), power);
    }
    let lcm = u32::try_from(lcm).map_err(|_| Error::Precondition("lcm too large".into()))?;
    Ok(!is_perfect_kth_power(&m, lcm))
}

/// Exact determinant by fraction-free (Bareiss) elimination.
pub fn int_det(m: &IntMatrix) -> Result<BigInt> {
    if m.rows != m.cols {
        return Err(Error::NotSquare {
            rows: m.rows,
            cols: m.cols,
        });
    }
    let n = m.rows;
    let mut a: Vec<Vec<BigInt>> = (0..n)
        .map(|i| m.entries[i * n..(i + 1) * n].to_vec())
        .collect();
    let mut sign = 1i32;
    let mut prev = BigInt::one();
    for k in 0..n.saturating_sub(1) {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&r| !a[r][k].is_zero()) {
                Some(r) => {
                    a.swap(k, r);
                    sign = -sign;
                }
                None => return Ok(BigInt::zero()),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let t = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                // Exact by Sylvester's identity.
                a[i][j] = t / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    let det = a[n - 1][n - 1].clone();
    Ok(if sign < 0 { -det } else { det })
}

/// Convenience: full rank of a square integer matrix.
pub fn has_full_rank(m: &IntMatrix) -> Result<bool> {
    Ok(!int_det(m)?.is_zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d).unwrap()
    }

    fn big(n: u64) -> BigUint {
        BigUint::from(n)
    }

    #[test]
    fn perfect_powers() {
        assert!(is_perfect_kth_power(&big(16), 2));
        assert!(!is_perfect_kth_power(&big(10), 2));
        assert!(is_perfect_kth_power(&big(27), 3));
        assert!(is_perfect_kth_power(&big(1), 7));
        assert!(!is_perfect_kth_power(&big(108), 6));
        let huge: BigUint = Pow::pow(&big(1_000_003), 5u32);
        assert!(is_perfect_kth_power(&huge, 5));
        assert!(!is_perfect_kth_power(&(huge + 1u32), 5));
    }

    #[test]
    fn perfect_squares_match_float_sqrt_up_to_a_million() {
        for m in 1u64..=1_000_000 {
            let s = (m as f64).sqrt().floor() as u64;
            let floor_sqrt = (s.saturating_sub(1)..=s + 1)
                .filter(|c| c * c <= m)
                .max()
                .unwrap();
            assert_eq!(
                is_perfect_kth_power(&big(m), 2),
                floor_sqrt * floor_sqrt == m,
                "m = {m}"
            );
        }
    }

    #[test]
    fn root_products() {
        let half = r(1, 2);
        assert!(!root_product_is_irrational(&[2, 8], &[half, half]).unwrap());
        assert!(root_product_is_irrational(&[2, 5], &[half, half]).unwrap());
        assert!(root_product_is_irrational(&[3, 2], &[half, r(1, 3)]).unwrap());
        assert!(!root_product_is_irrational(&[7], &[r(2, 1)]).unwrap());
        assert!(!root_product_is_irrational(&[8], &[r(2, 3)]).unwrap());
        assert!(root_product_is_irrational(&[2], &[r(2, 3)]).unwrap());
        assert!(root_product_is_irrational(&[], &[]).is_err());
        assert!(root_product_is_irrational(&[0], &[half]).is_err());
    }

    #[test]
    fn rational_normalizes_and_parses() {
        assert_eq!(r(4, -6), r(-2, 3));
        assert_eq!(r(-2, 3).den(), 3);
        assert_eq!("3/6".parse::<Rational>().unwrap(), r(1, 2));
        assert_eq!("5".parse::<Rational>().unwrap(), Rational::integer(5));
        assert!("1/0".parse::<Rational>().is_err());
        assert!("x".parse::<Rational>().is_err());
        let json = serde_json::to_string(&[r(1, 2), Rational::integer(3)]).unwrap();
        assert_eq!(json, r#"["1/2",3]"#);
        let back: Vec<Rational> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, vec![r(1, 2), Rational::integer(3)]);
    }

    #[test]
    fn determinants() {
        let eye = IntMatrix::from_rows(&[[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]]);
        assert_eq!(int_det(&eye).unwrap(), BigInt::from(1));
        assert_eq!(
            int_det(&IntMatrix::from_rows(&[[2, 1], [1, 0]])).unwrap(),
            BigInt::from(-1)
        );
        // Needs a row swap at the first pivot.
        assert_eq!(
            int_det(&IntMatrix::from_rows(&[[0, 1], [1, 0]])).unwrap(),
            BigInt::from(-1)
        );
        assert_eq!(
            int_det(&IntMatrix::from_rows(&[[1, 2], [2, 4]])).unwrap(),
            BigInt::zero()
        );
        assert!(int_det(&IntMatrix::from_rows(&[[1, 2, 3]])).is_err());
    }

    #[test]
    fn kron_and_arithmetic() {
        let a = IntMatrix::from_rows(&[[0, 1], [1, 0]]);
        let eye = IntMatrix::from_rows(&[[1, 0], [0, 1]]);
        let k = a.kron(&eye);
        assert_eq!(k.rows(), 4);
        assert_eq!(k.get(0, 2), &BigInt::from(1));
        assert_eq!(k.get(2, 0), &BigInt::from(1));
        assert_eq!(k.get(0, 0), &BigInt::zero());
        let p = (&a * &a).unwrap();
        assert_eq!(p, eye);
        let d = (&eye.scale(3) - &eye).unwrap();
        assert_eq!(d, eye.scale(2));
    }

    fn cofactor_det(m: &[Vec<i64>]) -> i64 {
        let n = m.len();
        if n == 1 {
            return m[0][0];
        }
        (0..n)
            .map(|j| {
                let minor: Vec<Vec<i64>> = m[1..]
                    .iter()
                    .map(|row| {
                        row.iter()
                            .enumerate()
                            .filter(|&(c, _)| c != j)
                            .map(|(_, &v)| v)
                            .collect()
                    })
                    .collect();
                let s = if j % 2 == 0 { 1 } else { -1 };
                s * m[0][j] * cofactor_det(&minor)
            })
            .sum()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1500))]

        #[test]
        fn bareiss_matches_cofactor_expansion(
            n in 1usize..=4,
            vals in proptest::collection::vec(-3i64..=3, 16),
        ) {
            let rows: Vec<Vec<i64>> = (0..n).map(|i| vals[i * n..(i + 1) * n].to_vec()).collect();
            let m = IntMatrix::new(n, n, rows.iter().flatten().map(|&v| BigInt::from(v)).collect()).unwrap();
            prop_assert_eq!(int_det(&m).unwrap(), BigInt::from(cofactor_det(&rows)));
        }

        #[test]
        fn irrationality_is_permutation_invariant(
            pairs in proptest::collection::vec((1u64..60, 1i64..4, 1i64..7), 1..5),
            shift in 0usize..5,
        ) {
            let bases: Vec<u64> = pairs.iter().map(|p| p.0).collect();
            let exps: Vec<Rational> = pairs.iter().map(|p| Rational::new(p.1, p.2).unwrap()).collect();
            let mut b2 = bases.clone();
            let mut e2 = exps.clone();
            let s = shift % bases.len();
            b2.rotate_left(s);
            e2.rotate_left(s);
            b2.reverse();
            e2.reverse();
            prop_assert_eq!(
                root_product_is_irrational(&bases, &exps).unwrap(),
                root_product_is_irrational(&b2, &e2).unwrap()
            );
        }

        #[test]
        fn irrationality_is_invariant_under_splitting_a_base(
            a in 1u64..40, b in 1u64..40, c in 1u64..40,
            num in 1i64..4, den in 1i64..7, cnum in 1i64..4, cden in 1i64..7,
        ) {
            let e = Rational::new(num, den).unwrap();
            let ec = Rational::new(cnum, cden).unwrap();
            prop_assert_eq!(
                root_product_is_irrational(&[a * b, c], &[e, ec]).unwrap(),
                root_product_is_irrational(&[a, b, c], &[e, e, ec]).unwrap()
            );
        }

        #[test]
        fn kth_root_brackets(m in 1u64..u64::MAX, k in 2u32..9) {
            let m = big(m);
            let r = integer_kth_root(&m, k);
            prop_assert!(Pow::pow(&r, k) <= m);
            prop_assert!(Pow::pow(&(r + 1u32), k) > m);
        }
    }
}
