//! Magic rotation families, their exact side conditions, and a sampler.
//!
//! Every family is described by a [`MagicRotationSpec`] holding integer or
//! rational parameters. [`validate_spec`] decides all side conditions in
//! exact arithmetic for a given base lattice; [`build`] turns a spec into an
//! orthogonal matrix and refuses specs whose lattice-independent conditions
//! fail.

use std::f64::consts::TAU;
use std::fmt;

use num_bigint::BigUint;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactnum::{has_full_rank, is_perfect_kth_power, root_product_is_irrational, IntMatrix, Rational};
use crate::lattices::BaseLattice;
use crate::matcore::{givens, Matrix};
use crate::oracles::{thm4_b4, thm6_tc_matrix};

/// A 2x2 integer matrix `[[v11, v12], [v21, v22]]`.
pub type Int2 = [[i64; 2]; 2];

/// Parameter bound for sampled matrix entries and `u` values.
pub const SAMPLE_ENTRY_MAX: i64 = 9;
/// Upper bound on sampled `q` values.
pub const SAMPLE_Q_MAX: u64 = 50;
/// Rejections before [`sample_spec`] falls back to the catalog.
pub const SAMPLE_MAX_REJECTIONS: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant")]
pub enum MagicRotationSpec {
    /// `R2(V_z, q_z) ⊗ ... ⊗ R2(V_1, q_1)` in dimension `2^z`; `v[0]` is `V_1`.
    TensorPow2 { v: Vec<Int2>, q: Vec<u64> },
    /// `R2(V_2, q_2) ⊗ R2(V_1, 5)` for the four-dimensional thinnest covering.
    Tc4 { v1: Int2, v2: Int2, q2: u64 },
    /// `R~2(u1, u2, u3, 3)` for the two-dimensional densest packing.
    Dp2Tilde { u1: i64, u2: i64, u3: i64 },
    /// `R3(q)` for rational `q`.
    R3 { q: Rational },
    /// `R3(q2) ⊗ inner` in six dimensions.
    Dim6 { q2: Rational, inner: Dim6Inner },
    /// Product of Givens rotations over `1 <= i < j <= p` in lexicographic
    /// order; no magic property.
    RandomGivens { p: usize, angles: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form")]
pub enum Dim6Inner {
    R2Form { v: Int2, q1: u64 },
    TildeForm { u1: i64, u2: i64, u3: i64, q1: u64 },
}

impl MagicRotationSpec {
    pub fn dimension(&self) -> usize {
        match self {
            MagicRotationSpec::TensorPow2 { v, .. } => 1usize << v.len().min(usize::BITS as usize - 1),
            MagicRotationSpec::Tc4 { .. } => 4,
            MagicRotationSpec::Dp2Tilde { .. } => 2,
            MagicRotationSpec::R3 { .. } => 3,
            MagicRotationSpec::Dim6 { .. } => 6,
            MagicRotationSpec::RandomGivens { p, .. } => *p,
        }
    }

    pub fn variant_name(&self) -> &'static str {
        match self {
            MagicRotationSpec::TensorPow2 { .. } => "TensorPow2",
            MagicRotationSpec::Tc4 { .. } => "Tc4",
            MagicRotationSpec::Dp2Tilde { .. } => "Dp2Tilde",
            MagicRotationSpec::R3 { .. } => "R3",
            MagicRotationSpec::Dim6 { .. } => "Dim6",
            MagicRotationSpec::RandomGivens { .. } => "RandomGivens",
        }
    }

    pub fn is_magic(&self) -> bool {
        !matches!(self, MagicRotationSpec::RandomGivens { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Condition {
    pub name: String,
    pub holds: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub conditions: Vec<Condition>,
}

impl ConditionReport {
    fn check(&mut self, name: impl Into<String>, holds: bool, detail: impl Into<String>) {
        self.conditions.push(Condition {
            name: name.into(),
            holds,
            detail: detail.into(),
        });
    }

    pub fn is_valid(&self) -> bool {
        !self.conditions.is_empty() && self.conditions.iter().all(|c| c.holds)
    }

    pub fn failures(&self) -> Vec<String> {
        self.conditions
            .iter()
            .filter(|c| !c.holds)
            .map(|c| format!("{} ({})", c.name, c.detail))
            .collect()
    }

    pub fn get(&self, name: &str) -> Option<&Condition> {
        self.conditions.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for ConditionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.conditions {
            writeln!(
                f,
                "[{}] {}: {}",
                if c.holds { "ok" } else { "FAIL" },
                c.name,
                c.detail
            )?;
        }
        Ok(())
    }
}

fn int2_matrix(v: &Int2) -> IntMatrix {
    IntMatrix::from_rows(v)
}

fn det2(v: &Int2) -> i128 {
    v[0][0] as i128 * v[1][1] as i128 - v[0][1] as i128 * v[1][0] as i128
}

/// `v11^2 + v21^2 == q (v12^2 + v22^2)`, exactly.
fn column_norm_condition(v: &Int2, q: u64) -> bool {
    let sq = |x: i64| (x as i128) * (x as i128);
    sq(v[0][0]) + sq(v[1][0]) == q as i128 * (sq(v[0][1]) + sq(v[1][1]))
}

fn irrational(bases: &[u64], exps: &[(i64, i64)]) -> bool {
    let exps: Vec<Rational> = exps
        .iter()
        .map(|&(n, d)| Rational::new(n, d).expect("nonzero denominator"))
        .collect();
    bases.iter().all(|&b| b >= 1) && root_product_is_irrational(bases, &exps).unwrap_or(false)
}

fn is_cube(n: u64) -> bool {
    n != 0 && is_perfect_kth_power(&BigUint::from(n), 3)
}

fn check_r2_factor(report: &mut ConditionReport, label: &str, v: &Int2, q: u64) {
    report.check(
        format!("{label} entries natural"),
        v.iter().flatten().all(|&x| x >= 0),
        format!("{v:?}"),
    );
    report.check(
        format!("{label} full rank"),
        det2(v) != 0,
        format!("det = {}", det2(v)),
    );
    report.check(
        format!("{label} column norms match q"),
        q >= 1 && column_norm_condition(v, q),
        format!(
            "v11^2+v21^2 = {}, q(v12^2+v22^2) = {}",
            v[0][0].pow(2) + v[1][0].pow(2),
            q as i128 * (v[0][1].pow(2) + v[1][1].pow(2)) as i128
        ),
    );
}

/// Condition name, radicands and their `(numerator, denominator)` exponents.
type RadicalCheck = (&'static str, Vec<u64>, Vec<(i64, i64)>);

/// Conditions that do not depend on the lattice being rotated.
pub fn intrinsic_report(spec: &MagicRotationSpec) -> ConditionReport {
    let mut r = ConditionReport::default();
    match spec {
        MagicRotationSpec::TensorPow2 { v, q } => {
            r.check(
                "factor count",
                !v.is_empty() && v.len() == q.len() && v.len() <= 6,
                format!("{} V matrices, {} q values", v.len(), q.len()),
            );
            for (l, (vl, &ql)) in v.iter().zip(q).enumerate() {
                check_r2_factor(&mut r, &format!("V{}", l + 1), vl, ql);
            }
            // Every nonempty subset product of sqrt(q_l) must be irrational.
            let z = q.len().min(v.len()).min(6);
            let mut bad = Vec::new();
            for mask in 1u32..(1 << z) {
                let subset: Vec<u64> = (0..z).filter(|&l| mask & (1 << l) != 0).map(|l| q[l]).collect();
                let halves = vec![(1, 2); subset.len()];
                if !irrational(&subset, &halves) {
                    bad.push(subset);
                }
            }
            r.check(
                "subset-product irrational",
                z > 0 && bad.is_empty(),
                if bad.is_empty() {
                    "every nonempty product of sqrt(q_l) is irrational".to_string()
                } else {
                    format!("rational sqrt products for q subsets {bad:?}")
                },
            );
        }
        MagicRotationSpec::Tc4 { v1, v2, q2 } => {
            check_r2_factor(&mut r, "V1", v1, 5);
            check_r2_factor(&mut r, "V2", v2, *q2);
            r.check("sqrt(q2) irrational", irrational(&[*q2], &[(1, 2)]), format!("q2 = {q2}"));
            r.check(
                "sqrt(5 q2) irrational",
                irrational(&[5, *q2], &[(1, 2), (1, 2)]),
                format!("5 q2 = {}", 5 * q2),
            );
            let b4 = thm4_b4(&int2_matrix(v1), &int2_matrix(v2));
            let full = has_full_rank(&b4).unwrap_or(false);
            r.check("B4 full rank", full, "5 V2⊗V1 − V2⊗V̄1 − (J V2)⊗(J V1)");
        }
        MagicRotationSpec::Dp2Tilde { u1, u2, u3 } => {
            r.check(
                "u nonzero",
                (*u1, *u2, *u3) != (0, 0, 0),
                format!("u = ({u1}, {u2}, {u3})"),
            );
            let lhs = (*u3 as i128).pow(2);
            let rhs = 3 * (*u1 as i128).pow(2) + (*u2 as i128).pow(2);
            r.check(
                "u3^2 != 3u1^2 + u2^2",
                lhs != rhs,
                format!("u3^2 = {lhs}, 3u1^2 + u2^2 = {rhs}"),
            );
        }
        MagicRotationSpec::R3 { q } => {
            r.check("q positive", q.is_positive(), format!("q = {q}"));
            let cube_pair = q.is_positive() && is_cube(q.num() as u64) && is_cube(q.den() as u64);
            r.check(
                "q^(1/3) irrational",
                q.is_positive() && !cube_pair,
                format!("q = {q}"),
            );
        }
        MagicRotationSpec::Dim6 { q2, inner } => {
            let q2_nat = q2.is_integer() && q2.is_positive();
            r.check("q2 natural", q2_nat, format!("q2 = {q2}"));
            let q1 = match inner {
                Dim6Inner::R2Form { v, q1 } => {
                    check_r2_factor(&mut r, "V", v, *q1);
                    *q1
                }
                Dim6Inner::TildeForm { u1, u2, q1, .. } => {
                    r.check("u1 != 0", *u1 != 0, format!("u1 = {u1}"));
                    r.check("u2 != 0", *u2 != 0, format!("u2 = {u2}"));
                    *q1
                }
            };
            r.check("q1 natural", q1 >= 1, format!("q1 = {q1}"));
            let q2v = if q2_nat { q2.num() as u64 } else { 0 };
            let radicals: [RadicalCheck; 5] = [
                ("q1^(1/2) irrational", vec![q1], vec![(1, 2)]),
                ("q2^(1/3) irrational", vec![q2v], vec![(1, 3)]),
                ("q1^(1/2) q2^(1/3) irrational", vec![q1, q2v], vec![(1, 2), (1, 3)]),
                ("q2^(2/3) irrational", vec![q2v], vec![(2, 3)]),
                ("q1^(1/2) q2^(2/3) irrational", vec![q1, q2v], vec![(1, 2), (2, 3)]),
            ];
            for (name, bases, exps) in radicals {
                r.check(name, irrational(&bases, &exps), format!("q1 = {q1}, q2 = {q2}"));
            }
        }
        MagicRotationSpec::RandomGivens { p, angles } => {
            r.check("p >= 2", *p >= 2, format!("p = {p}"));
            let expected = p * p.saturating_sub(1) / 2;
            r.check(
                "angle count",
                angles.len() == expected,
                format!("{} angles, expected p(p-1)/2 = {expected}", angles.len()),
            );
            r.check(
                "angles finite",
                angles.iter().all(|a| a.is_finite()),
                "all angles are finite reals",
            );
        }
    }
    r
}

/// All side conditions of `spec` when used to rotate `base`.
pub fn validate_spec(spec: &MagicRotationSpec, base: BaseLattice) -> ConditionReport {
    let mut r = intrinsic_report(spec);
    use BaseLattice::*;
    let p = spec.dimension();
    let (supported, why) = match spec {
        MagicRotationSpec::TensorPow2 { v, .. } => match base {
            Integer | Interleaved => (true, "any power of two".to_string()),
            DensestPacking => (
                matches!(v.len(), 2 | 3),
                "densest packings only in p = 4, 8".to_string(),
            ),
            ThinnestCovering => (v.len() == 3, "thinnest covering only in p = 8".to_string()),
        },
        MagicRotationSpec::Tc4 { .. } => (
            base == ThinnestCovering,
            "four-dimensional thinnest covering only".to_string(),
        ),
        MagicRotationSpec::Dp2Tilde { .. } => (
            matches!(base, DensestPacking | ThinnestCovering),
            "two-dimensional densest packing (= thinnest covering) only".to_string(),
        ),
        MagicRotationSpec::R3 { .. } => (true, "all base lattices".to_string()),
        MagicRotationSpec::Dim6 { inner, .. } => match (base, inner) {
            (Integer | Interleaved, _) => (true, "any inner form".to_string()),
            (DensestPacking | ThinnestCovering, Dim6Inner::TildeForm { .. }) => {
                (true, "tilde inner form".to_string())
            }
            (_, Dim6Inner::R2Form { .. }) => (
                false,
                "R2 inner form is only covered for integer and interleaved lattices".to_string(),
            ),
        },
        MagicRotationSpec::RandomGivens { .. } => (true, "no projection guarantee".to_string()),
    };
    r.check(
        "base lattice supported",
        supported,
        format!("{} on {base} (p = {p}): {why}", spec.variant_name()),
    );
    if base == DensestPacking && p > 8 {
        r.check("base dimension", false, format!("no densest packing generator for p = {p}"));
    }
    if let MagicRotationSpec::Dim6 {
        q2,
        inner: Dim6Inner::TildeForm { u1, u2, u3, q1 },
    } = spec
    {
        match base {
            DensestPacking => {
                r.check("q1 = 3", *q1 == 3, format!("q1 = {q1}"));
                r.check("u3 != 0", *u3 != 0, format!("u3 = {u3}"));
            }
            ThinnestCovering => {
                r.check("q1 = 7", *q1 == 7, format!("q1 = {q1}"));
                let full = q2.is_integer()
                    && has_full_rank(&thm6_tc_matrix(q2.num(), *u1, *u2, *u3)).unwrap_or(false);
                r.check(
                    "TC6 rank matrix full rank",
                    full,
                    "7 B3⊗U − B3⊗Ũ − (J3 B3)⊗(J2 U)",
                );
            }
            _ => {}
        }
    }
    r
}

/// `R2(V, q) = V Q(q) W(V, q)` with `Q(q) = [[1, 1], [-sqrt q, sqrt q]]` and
/// `W` normalizing the columns.
pub fn build_r2(v: &Int2, q: u64) -> Result<Matrix> {
    if det2(v) == 0 {
        return Err(Error::Condition(format!("V = {v:?} is singular")));
    }
    if q == 0 || !column_norm_condition(v, q) {
        return Err(Error::Condition(format!(
            "V = {v:?} does not satisfy v11^2 + v21^2 = {q} (v12^2 + v22^2)"
        )));
    }
    let s = (q as f64).sqrt();
    let f = |x: i64| x as f64;
    let c1 = [f(v[0][0]) - f(v[0][1]) * s, f(v[1][0]) - f(v[1][1]) * s];
    let c2 = [f(v[0][0]) + f(v[0][1]) * s, f(v[1][0]) + f(v[1][1]) * s];
    let w1 = (c1[0] * c1[0] + c1[1] * c1[1]).powf(-0.5);
    let w2 = (c2[0] * c2[0] + c2[1] * c2[1]).powf(-0.5);
    Matrix::from_row_slice(2, 2, &[c1[0] * w1, c2[0] * w2, c1[1] * w1, c2[1] * w2])
}

/// `R~2(u1, u2, u3, q) = [[a, u2], [-u2, a]] / sqrt(a^2 + u2^2)`, `a = u1 sqrt q + u3`.
pub fn build_r2_tilde(u1: i64, u2: i64, u3: i64, q: u64) -> Result<Matrix> {
    let a = u1 as f64 * (q as f64).sqrt() + u3 as f64;
    let b = u2 as f64;
    if a == 0.0 && b == 0.0 {
        return Err(Error::Degenerate(format!(
            "u1 sqrt(q) + u3 and u2 both vanish for u = ({u1}, {u2}, {u3}), q = {q}"
        )));
    }
    let w = (a * a + b * b).powf(-0.5);
    Matrix::from_row_slice(2, 2, &[a * w, b * w, -b * w, a * w])
}

/// The circulant-like `R3(q)` with normalizer `w̄(q)`.
pub fn build_r3(q: Rational) -> Result<Matrix> {
    if !q.is_positive() {
        return Err(Error::Degenerate(format!("R3 needs q > 0, got {q}")));
    }
    if q == Rational::integer(1) {
        return Err(Error::Degenerate("R3(1) is the zero matrix".into()));
    }
    let qf = q.to_f64();
    let c = qf.cbrt();
    let cp = |k: i32| c.powi(k);
    let norm2 = cp(10) + 2.0 * cp(9) + cp(8) - 2.0 * cp(7) - 2.0 * cp(6) - 2.0 * cp(5) - cp(4)
        + 2.0 * cp(2)
        + 1.0;
    let w = norm2.powf(-0.5);
    let a = (1.0 - qf) * w;
    let b = (qf - c) * w;
    let d = (1.0 - qf) * (c + c * c) * w;
    Matrix::from_row_slice(3, 3, &[a, b, d, b, d, a, d, a, b])
}

fn build_givens_product(p: usize, angles: &[f64]) -> Result<Matrix> {
    let mut r = Matrix::identity(p);
    let mut it = angles.iter();
    for i in 1..=p {
        for j in i + 1..=p {
            let alpha = it
                .next()
                .ok_or_else(|| Error::Precondition("too few Givens angles".into()))?;
            r = r.matmul(&givens(p, i, j, *alpha)?)?;
        }
    }
    Ok(r)
}

/// Builds the rotation matrix of `spec`, refusing specs that fail any
/// lattice-independent condition.
pub fn build(spec: &MagicRotationSpec) -> Result<Matrix> {
    let report = intrinsic_report(spec);
    if !report.is_valid() {
        return Err(Error::InvalidSpec(report));
    }
    match spec {
        MagicRotationSpec::TensorPow2 { v, q } => {
            let mut factors = v.iter().zip(q).rev();
            let (v0, q0) = factors.next().expect("validated non-empty");
            let mut r = build_r2(v0, *q0)?;
            for (vl, ql) in factors {
                r = r.kronecker(&build_r2(vl, *ql)?);
            }
            Ok(r)
        }
        MagicRotationSpec::Tc4 { v1, v2, q2 } => Ok(build_r2(v2, *q2)?.kronecker(&build_r2(v1, 5)?)),
        MagicRotationSpec::Dp2Tilde { u1, u2, u3 } => build_r2_tilde(*u1, *u2, *u3, 3),
        MagicRotationSpec::R3 { q } => build_r3(*q),
        MagicRotationSpec::Dim6 { q2, inner } => {
            let inner = match inner {
                Dim6Inner::R2Form { v, q1 } => build_r2(v, *q1)?,
                Dim6Inner::TildeForm { u1, u2, u3, q1 } => build_r2_tilde(*u1, *u2, *u3, *q1)?,
            };
            Ok(build_r3(*q2)?.kronecker(&inner))
        }
        MagicRotationSpec::RandomGivens { p, angles } => build_givens_product(*p, angles),
    }
}

/// Known-valid specs per `(p, base)`, filtered through [`validate_spec`] so
/// that nothing unverified is ever returned.
pub fn catalog(p: usize, base: BaseLattice) -> Vec<MagicRotationSpec> {
    use BaseLattice::*;
    let v_q2: Int2 = [[1, 1], [1, 0]];
    let v_q5: Int2 = [[2, 1], [1, 0]];
    let v_q13: Int2 = [[3, 1], [2, 0]];
    let tilde = |u1, u2, u3, q1| Dim6Inner::TildeForm { u1, u2, u3, q1 };
    let candidates = match (p, base) {
        (2, DensestPacking | ThinnestCovering) => vec![
            MagicRotationSpec::Dp2Tilde { u1: 1, u2: 1, u3: 1 },
            MagicRotationSpec::Dp2Tilde { u1: 1, u2: 2, u3: 0 },
        ],
        (2, _) => vec![MagicRotationSpec::TensorPow2 { v: vec![v_q2], q: vec![2] }],
        (3, _) => vec![
            MagicRotationSpec::R3 { q: Rational::integer(2) },
            MagicRotationSpec::R3 { q: Rational::integer(3) },
        ],
        (4, ThinnestCovering) => vec![MagicRotationSpec::Tc4 { v1: v_q5, v2: v_q2, q2: 2 }],
        (4, _) => vec![MagicRotationSpec::TensorPow2 { v: vec![v_q2, v_q5], q: vec![2, 5] }],
        (6, DensestPacking) => vec![MagicRotationSpec::Dim6 {
            q2: Rational::integer(2),
            inner: tilde(1, 1, 1, 3),
        }],
        (6, ThinnestCovering) => vec![MagicRotationSpec::Dim6 {
            q2: Rational::integer(2),
            inner: tilde(1, 1, 1, 7),
        }],
        (6, _) => vec![
            MagicRotationSpec::Dim6 {
                q2: Rational::integer(3),
                inner: Dim6Inner::R2Form { v: v_q2, q1: 2 },
            },
            MagicRotationSpec::Dim6 {
                q2: Rational::integer(2),
                inner: tilde(1, 1, 1, 3),
            },
        ],
        (8, _) => vec![MagicRotationSpec::TensorPow2 {
            v: vec![v_q2, v_q5, v_q13],
            q: vec![2, 5, 13],
        }],
        _ => vec![],
    };
    candidates
        .into_iter()
        .filter(|s| validate_spec(s, base).is_valid())
        .collect()
}

fn draw_natural_v<R: Rng + ?Sized>(rng: &mut R) -> Int2 {
    let mut e = || rng.random_range(0..=SAMPLE_ENTRY_MAX);
    [[e(), e()], [e(), e()]]
}

fn draw_u<R: Rng + ?Sized>(rng: &mut R) -> i64 {
    rng.random_range(-SAMPLE_ENTRY_MAX..=SAMPLE_ENTRY_MAX)
}

/// Draws `V` until it is full rank and `(v11^2 + v21^2) / (v12^2 + v22^2)`
/// is a natural number in `[2, SAMPLE_Q_MAX]` (and equals `fixed_q` if given).
fn draw_r2_factor<R: Rng + ?Sized>(rng: &mut R, fixed_q: Option<u64>) -> Option<(Int2, u64)> {
    for _ in 0..SAMPLE_MAX_REJECTIONS {
        let v = draw_natural_v(rng);
        let num = (v[0][0].pow(2) + v[1][0].pow(2)) as u64;
        let den = (v[0][1].pow(2) + v[1][1].pow(2)) as u64;
        if den == 0 || !num.is_multiple_of(den) || det2(&v) == 0 {
            continue;
        }
        let q = num / den;
        let ok = match fixed_q {
            Some(f) => q == f,
            None => (2..=SAMPLE_Q_MAX).contains(&q),
        };
        if ok {
            return Some((v, q));
        }
    }
    None
}

fn draw_candidate<R: Rng + ?Sized>(
    p: usize,
    base: BaseLattice,
    rng: &mut R,
) -> Option<MagicRotationSpec> {
    use BaseLattice::*;
    Some(match (p, base) {
        (2, DensestPacking | ThinnestCovering) => MagicRotationSpec::Dp2Tilde {
            u1: draw_u(rng),
            u2: draw_u(rng),
            u3: draw_u(rng),
        },
        (2 | 4 | 8, _) if !(p == 4 && base == ThinnestCovering) => {
            let z = p.trailing_zeros() as usize;
            let mut v = Vec::with_capacity(z);
            let mut q = Vec::with_capacity(z);
            for _ in 0..z {
                let (vl, ql) = draw_r2_factor(rng, None)?;
                v.push(vl);
                q.push(ql);
            }
            MagicRotationSpec::TensorPow2 { v, q }
        }
        (4, ThinnestCovering) => {
            let (v1, _) = draw_r2_factor(rng, Some(5))?;
            let (v2, q2) = draw_r2_factor(rng, None)?;
            MagicRotationSpec::Tc4 { v1, v2, q2 }
        }
        (3, _) => {
            let s1 = rng.random_range(1..=SAMPLE_Q_MAX as i64);
            let s2 = rng.random_range(1..=SAMPLE_Q_MAX as i64);
            MagicRotationSpec::R3 {
                q: Rational::new(s1, s2).expect("positive denominator"),
            }
        }
        (6, _) => {
            let q2 = Rational::integer(rng.random_range(2..=SAMPLE_Q_MAX as i64));
            let tilde_q1 = match base {
                DensestPacking => Some(3),
                ThinnestCovering => Some(7),
                _ => None,
            };
            let inner = match tilde_q1 {
                Some(q1) => Dim6Inner::TildeForm {
                    u1: draw_u(rng),
                    u2: draw_u(rng),
                    u3: draw_u(rng),
                    q1,
                },
                None if rng.random_bool(0.5) => {
                    let (v, q1) = draw_r2_factor(rng, None)?;
                    Dim6Inner::R2Form { v, q1 }
                }
                None => Dim6Inner::TildeForm {
                    u1: draw_u(rng),
                    u2: draw_u(rng),
                    u3: draw_u(rng),
                    q1: rng.random_range(2..=SAMPLE_Q_MAX),
                },
            };
            MagicRotationSpec::Dim6 { q2, inner }
        }
        _ => return None,
    })
}

/// Uniform Givens angles on `[0, 2π)`.
pub fn sample_random_givens<R: Rng + ?Sized>(p: usize, rng: &mut R) -> MagicRotationSpec {
    let angles = (0..p * (p - 1) / 2).map(|_| rng.random_range(0.0..TAU)).collect();
    MagicRotationSpec::RandomGivens { p, angles }
}

/// Draws a spec that passes [`validate_spec`] for `(p, base)`.
///
/// Magic families for `p` in {2, 3, 4, 6, 8} by rejection sampling with a
/// catalog fallback; random Givens products for `p` in {5, 7}.
pub fn sample_spec<R: Rng + ?Sized>(
    p: usize,
    base: BaseLattice,
    rng: &mut R,
) -> Result<MagicRotationSpec> {
    if !(2..=8).contains(&p) {
        return Err(Error::Dimension { p, min: 2, max: 8 });
    }
    if p == 5 || p == 7 {
        return Ok(sample_random_givens(p, rng));
    }
    for _ in 0..SAMPLE_MAX_REJECTIONS {
        if let Some(spec) = draw_candidate(p, base, rng) {
            if validate_spec(&spec, base).is_valid() {
                return Ok(spec);
            }
        }
    }
    let fallback = catalog(p, base);
    if fallback.is_empty() {
        return Err(Error::SpecUnavailable {
            p,
            base: base.to_string(),
            reason: "rejection sampling exhausted and the catalog has no entry".into(),
        });
    }
    Ok(fallback[rng.random_range(0..fallback.len())].clone())
}
