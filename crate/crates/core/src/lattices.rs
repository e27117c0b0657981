//! Generator matrices for the lattice families and lattice predicates.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{Matrix, SINGULAR_TOL};
use crate::rotations::MagicRotationSpec;

/// Entries of `K = G_sub G_sup^{-1}` must be this close to integers.
pub const INTEGER_TOL: f64 = 1e-9;

/// Coefficient box radius at which the brute-force shortest vector search is
/// exact for every family constructed here.
pub const SHORTEST_VECTOR_BOX: i64 = 3;

/// Unrotated lattice families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseLattice {
    ThinnestCovering,
    DensestPacking,
    Integer,
    /// The checkerboard lattice `{a in Z^p : sum(a) even}`, which sits
    /// between `L(2I)` and `L(I)`.
    Interleaved,
}

impl BaseLattice {
    pub const ALL: [BaseLattice; 4] = [
        BaseLattice::DensestPacking,
        BaseLattice::ThinnestCovering,
        BaseLattice::Integer,
        BaseLattice::Interleaved,
    ];

    pub fn generator(self, p: usize) -> Result<GeneratorMatrix> {
        match self {
            BaseLattice::ThinnestCovering => generator_thinnest_covering(p),
            BaseLattice::DensestPacking => generator_densest_packing(p),
            BaseLattice::Integer => generator_integer(p),
            BaseLattice::Interleaved => generator_interleaved(p),
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            BaseLattice::ThinnestCovering => "tc",
            BaseLattice::DensestPacking => "dp",
            BaseLattice::Integer => "int",
            BaseLattice::Interleaved => "interleaved",
        }
    }
}

impl fmt::Display for BaseLattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for BaseLattice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tc" | "thinnest_covering" => Ok(BaseLattice::ThinnestCovering),
            "dp" | "densest_packing" => Ok(BaseLattice::DensestPacking),
            "int" | "integer" => Ok(BaseLattice::Integer),
            "interleaved" => Ok(BaseLattice::Interleaved),
            other => Err(Error::Precondition(format!("unknown lattice {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LatticeFamily {
    ThinnestCovering,
    DensestPacking,
    Integer,
    Interleaved,
    /// `G_base R` for a rotation `R` built from `spec`.
    Rotated {
        base: BaseLattice,
        spec: MagicRotationSpec,
    },
    /// A caller-supplied generator with no known family.
    Custom,
}

impl From<BaseLattice> for LatticeFamily {
    fn from(b: BaseLattice) -> Self {
        match b {
            BaseLattice::ThinnestCovering => LatticeFamily::ThinnestCovering,
            BaseLattice::DensestPacking => LatticeFamily::DensestPacking,
            BaseLattice::Integer => LatticeFamily::Integer,
            BaseLattice::Interleaved => LatticeFamily::Interleaved,
        }
    }
}

/// A nonsingular `p x p` generator; the lattice is `{a^T G : a in Z^p}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorMatrix {
    pub p: usize,
    pub g: Matrix,
    pub absdet: f64,
    pub family: LatticeFamily,
}

impl GeneratorMatrix {
    pub fn new(g: Matrix, family: LatticeFamily) -> Result<Self> {
        let absdet = g.det()?.abs();
        if absdet <= SINGULAR_TOL {
            return Err(Error::Singular { det: absdet });
        }
        Ok(GeneratorMatrix {
            p: g.rows(),
            g,
            absdet,
            family,
        })
    }

    /// `G R` labelled with the rotation that produced `R`.
    pub fn rotated(&self, r: &Matrix, base: BaseLattice, spec: MagicRotationSpec) -> Result<Self> {
        GeneratorMatrix::new(self.g.matmul(r)?, LatticeFamily::Rotated { base, spec })
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        GeneratorMatrix::new(self.g.scale(factor), LatticeFamily::Custom)
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.g.to_rows()
    }
}

fn check_dim(p: usize, min: usize, max: usize) -> Result<()> {
    if (min..=max).contains(&p) {
        Ok(())
    } else {
        Err(Error::Dimension { p, min, max })
    }
}

/// `[{(p+1) - (p+1)^{1/2}} I_p - J_p] {(p+1)^{1/2} - 1}^{-1} (p+1)^{-(p-1)/(2p)}`.
pub fn generator_thinnest_covering(p: usize) -> Result<GeneratorMatrix> {
    check_dim(p, 2, 22)?;
    let pf = p as f64;
    let s = (pf + 1.0).sqrt();
    let scale = (pf + 1.0).powf(-(pf - 1.0) / (2.0 * pf)) / (s - 1.0);
    let diag = ((pf + 1.0) - s - 1.0) * scale;
    let off = -scale;
    let data: Vec<f64> = (0..p * p)
        .map(|idx| if idx / p == idx % p { diag } else { off })
        .collect();
    GeneratorMatrix::new(
        Matrix::from_row_slice(p, p, &data)?,
        LatticeFamily::ThinnestCovering,
    )
}

/// Densest packing generators with unit determinant, `2 <= p <= 8`.
pub fn generator_densest_packing(p: usize) -> Result<GeneratorMatrix> {
    check_dim(p, 2, 8)?;
    if p == 2 {
        let tc = generator_thinnest_covering(2)?;
        return GeneratorMatrix::new(tc.g, LatticeFamily::DensestPacking);
    }
    let mut rows = vec![vec![0.0; p]; p];
    let pf = p as f64;
    let scale = if p <= 5 {
        // [1_{p-1} I_{p-1}; 2 0^T]
        for (i, row) in rows.iter_mut().take(p - 1).enumerate() {
            row[0] = 1.0;
            row[i + 1] = 1.0;
        }
        rows[p - 1][0] = 2.0;
        2f64.powf(-1.0 / pf)
    } else {
        // [1_{p-2} I_{p-2} 0_{p-2}; 2 0^T 0; 1/2 1^T/2 (9-p)^{1/2}/2]
        for (i, row) in rows.iter_mut().take(p - 2).enumerate() {
            row[0] = 1.0;
            row[i + 1] = 1.0;
        }
        rows[p - 2][0] = 2.0;
        for v in rows[p - 1].iter_mut().take(p - 1) {
            *v = 0.5;
        }
        rows[p - 1][p - 1] = (9.0 - pf).sqrt() / 2.0;
        (9.0 - pf).powf(-1.0 / (2.0 * pf))
    };
    let rows: Vec<Vec<f64>> = rows
        .into_iter()
        .map(|r| r.into_iter().map(|v| v * scale).collect())
        .collect();
    GeneratorMatrix::new(Matrix::from_rows(&rows)?, LatticeFamily::DensestPacking)
}

pub fn generator_integer(p: usize) -> Result<GeneratorMatrix> {
    check_dim(p, 1, usize::MAX)?;
    GeneratorMatrix::new(Matrix::identity(p), LatticeFamily::Integer)
}

/// Checkerboard lattice `D_p`: rows `e_1 + e_{i+1}` for `i < p` and `2 e_1`.
/// Determinant 2.
pub fn generator_interleaved(p: usize) -> Result<GeneratorMatrix> {
    check_dim(p, 2, usize::MAX)?;
    let mut rows = vec![vec![0.0; p]; p];
    for (i, row) in rows.iter_mut().take(p - 1).enumerate() {
        row[0] = 1.0;
        row[i + 1] = 1.0;
    }
    rows[p - 1][0] = 2.0;
    GeneratorMatrix::new(Matrix::from_rows(&rows)?, LatticeFamily::Interleaved)
}

/// Minimum of `||a^T G||` over nonzero integer `a` in `[-m, m]^p`.
pub fn shortest_vector_length(g: &GeneratorMatrix, m: i64) -> f64 {
    assert!(m >= 1, "coefficient box radius must be positive");
    let rows = g.rows();
    let p = g.p;
    let mut best = f64::INFINITY;
    // Partial sums per depth avoid recomputing a^T G at every leaf.
    let mut partial = vec![vec![0.0; p]; p + 1];
    fn recurse(
        depth: usize,
        all_zero: bool,
        rows: &[Vec<f64>],
        m: i64,
        partial: &mut [Vec<f64>],
        best: &mut f64,
    ) {
        let p = rows.len();
        if depth == p {
            if !all_zero {
                let norm2: f64 = partial[p].iter().map(|v| v * v).sum();
                if norm2 < *best {
                    *best = norm2;
                }
            }
            return;
        }
        // a and -a give the same length: make the first nonzero coefficient positive.
        let lo = if all_zero { 0 } else { -m };
        for c in lo..=m {
            let (head, tail) = partial.split_at_mut(depth + 1);
            let prev = &head[depth];
            let next = &mut tail[0];
            for ((n, &pv), &r) in next.iter_mut().zip(prev.iter()).zip(&rows[depth]) {
                *n = pv + c as f64 * r;
            }
            recurse(depth + 1, all_zero && c == 0, rows, m, partial, best);
        }
    }
    recurse(0, true, &rows, m, &mut partial, &mut best);
    best.sqrt()
}

/// `L(sub) ⊆ L(sup)`: `K = sub * sup^{-1}` is integral with `|det K| >= 1`.
pub fn is_sublattice(sub: &GeneratorMatrix, sup: &GeneratorMatrix) -> Result<bool> {
    if sub.p != sup.p {
        return Err(Error::Shape(format!(
            "dimensions differ: {} vs {}",
            sub.p, sup.p
        )));
    }
    let k = sub.g.matmul(&sup.g.inverse()?)?;
    let p = sub.p;
    let mut rounded = Vec::with_capacity(p * p);
    for i in 0..p {
        for j in 0..p {
            let v = k.get(i, j);
            let r = v.round();
            if (v - r).abs() > INTEGER_TOL {
                return Ok(false);
            }
            rounded.push(r);
        }
    }
    let det = Matrix::from_row_slice(p, p, &rounded)?.det()?;
    Ok(det.abs().round() >= 1.0)
}

/// `L(2 I_p) ⊆ L(G) ⊆ L(I_p)`.
pub fn is_standard_interleaved(g: &GeneratorMatrix) -> Result<bool> {
    let p = g.p;
    let two = GeneratorMatrix::new(Matrix::identity(p).scale(2.0), LatticeFamily::Custom)?;
    let one = GeneratorMatrix::new(Matrix::identity(p), LatticeFamily::Custom)?;
    Ok(is_sublattice(&two, g)? && is_sublattice(g, &one)?)
}
