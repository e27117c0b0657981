//! Independent brute-force and exact-arithmetic checks of the number-theoretic
//! claims behind the magic rotations. These back the `selfcheck` command.

use num_bigint::BigInt;
use num_integer::Integer;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::designgen::PointSet;
use crate::error::{Error, Result};
use crate::exactnum::{int_det, IntMatrix, Rational};
use crate::lattices::BaseLattice;
use crate::metrics::sorted_sum;
use crate::rotations::{build, catalog, validate_spec, MagicRotationSpec};

/// Largest dimension accepted by [`brute_force_min_subset_separation`].
pub const BRUTE_FORCE_MAX_P: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct G3Inputs {
    pub a: [i64; 3],
    pub s1: i64,
    pub s2: i64,
}

impl G3Inputs {
    pub fn new(a: [i64; 3], s1: i64, s2: i64) -> Result<Self> {
        if s2 <= 0 || s1.gcd(&s2) != 1 {
            return Err(Error::Precondition(format!(
                "need coprime s1, s2 with s2 > 0, got ({s1}, {s2})"
            )));
        }
        Ok(G3Inputs { a, s1, s2 })
    }
}

/// `(β0, β1, β2)` with `β0 = a2(s2−s1) + a3 s1`, `β1 = a1(s2−s1) − a3 s2`,
/// `β2 = a1(s2−s1)`.
pub fn g3_betas(inp: &G3Inputs) -> [BigInt; 3] {
    let [a1, a2, a3] = inp.a.map(BigInt::from);
    let s1 = BigInt::from(inp.s1);
    let s2 = BigInt::from(inp.s2);
    let d = &s2 - &s1;
    [&a2 * &d + &a3 * &s1, &a1 * &d - &a3 * &s2, &a1 * &d]
}

/// `g3(a) = 3 β0 β1 β2 s1 s2 − β0³ s2² − β1³ s1 s2 − β2³ s1²`.
pub fn g3_value(inp: &G3Inputs) -> BigInt {
    let [b0, b1, b2] = g3_betas(inp);
    let s1 = BigInt::from(inp.s1);
    let s2 = BigInt::from(inp.s2);
    let cube = |x: &BigInt| x * x * x;
    BigInt::from(3) * &b0 * &b1 * &b2 * &s1 * &s2
        - cube(&b0) * &s2 * &s2
        - cube(&b1) * &s1 * &s2
        - cube(&b2) * &s1 * &s1
}

/// Minimum over point pairs and all coordinate subsets of size `k` of the
/// projected distance, summing each subset's squared differences in
/// ascending order.
pub fn brute_force_min_subset_separation(d: &PointSet, k: usize) -> Result<f64> {
    let p = d.p();
    if p > BRUTE_FORCE_MAX_P {
        return Err(Error::Precondition(format!(
            "exhaustive subset search limited to p <= {BRUTE_FORCE_MAX_P}, got {p}"
        )));
    }
    if k == 0 || k > p {
        return Err(Error::Precondition(format!("need 1 <= k <= {p}, got {k}")));
    }
    if d.n() < 2 {
        return Err(Error::Precondition("need at least two points".into()));
    }
    let subsets = combinations(p, k);
    let mut best = f64::INFINITY;
    let mut buf = Vec::with_capacity(k);
    for i in 0..d.n() {
        for j in i + 1..d.n() {
            let (x, y) = (d.point(i), d.point(j));
            for gamma in &subsets {
                buf.clear();
                buf.extend(gamma.iter().map(|&c| (x[c] - y[c]) * (x[c] - y[c])));
                best = best.min(sorted_sum(&mut buf));
            }
        }
    }
    Ok(best.sqrt())
}

/// The two 2x2 integer matrices from the rank argument for `R~2(u, 3)`.
pub fn thm2_b_matrices(u1: i64, u2: i64, u3: i64) -> (IntMatrix, IntMatrix) {
    let b1 = IntMatrix::from_rows(&[[-3 * u1 + u2 + 2 * u3, 2 * u1 - u3], [-2 * u2 - u3, -u1 + u2]]);
    let b2 = IntMatrix::from_rows(&[[2 * u2 - u3, -u1 - u2], [-3 * u1 - u2 + 2 * u3, 2 * u1 - u3]]);
    (b1, b2)
}

/// `B4 = 5 V2⊗V1 − V2⊗V̄1 − (J2 V2)⊗(J2 V1)` with
/// `V̄1 = [[5 v112, v111], [5 v122, v121]]`.
pub fn thm4_b4(v1: &IntMatrix, v2: &IntMatrix) -> IntMatrix {
    let e = |m: &IntMatrix, i, j| m.get(i, j).clone();
    let five = BigInt::from(5);
    let v1_bar = IntMatrix::new(
        2,
        2,
        vec![&five * e(v1, 0, 1), e(v1, 0, 0), &five * e(v1, 1, 1), e(v1, 1, 0)],
    )
    .expect("2x2 shape");
    let j2 = IntMatrix::ones(2);
    let a = v2.kron(v1).scale(5);
    let b = v2.kron(&v1_bar);
    let c = (&j2 * v2)
        .expect("2x2 product")
        .kron(&(&j2 * v1).expect("2x2 product"));
    let ab = (&a - &b).expect("4x4 difference");
    (&ab - &c).expect("4x4 difference")
}

/// `7 B3⊗U − B3⊗Ũ − (J3 B3)⊗(J2 U)` with `U = [[u2, 0], [u3, u1]]`,
/// `Ũ = [[u2, 0], [7u1, u3]]`, `B3 = [[0, 1−q2, 1−q2], [1−q2, 0, 0], [q2, −1, 0]]`.
pub fn thm6_tc_matrix(q2: i64, u1: i64, u2: i64, u3: i64) -> IntMatrix {
    let u = IntMatrix::from_rows(&[[u2, 0], [u3, u1]]);
    let u_tilde = IntMatrix::from_rows(&[[u2, 0], [7 * u1, u3]]);
    let b3 = IntMatrix::from_rows(&[[0, 1 - q2, 1 - q2], [1 - q2, 0, 0], [q2, -1, 0]]);
    let j3b3 = (&IntMatrix::ones(3) * &b3).expect("3x3 product");
    let j2u = (&IntMatrix::ones(2) * &u).expect("2x2 product");
    let a = b3.kron(&u).scale(7);
    let b = b3.kron(&u_tilde);
    let c = j3b3.kron(&j2u);
    (&(&a - &b).expect("6x6 difference") - &c).expect("6x6 difference")
}

/// Exhaustive ranges for [`selfcheck`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelfcheckRanges {
    /// `|a_i| <= a` for the cubic-form check.
    pub a: i64,
    /// `|u_i| <= u` for the two-dimensional rank check.
    pub u: i64,
    /// `2 <= q_1, q_2 <= q` for the square-root product check.
    pub q: u64,
}

impl Default for SelfcheckRanges {
    fn default() -> Self {
        SelfcheckRanges { a: 4, u: 5, q: 50 }
    }
}

impl std::str::FromStr for SelfcheckRanges {
    type Err = Error;

    /// Comma-separated `key=value` pairs with keys `a`, `u`, `q`; missing keys
    /// keep their defaults.
    fn from_str(s: &str) -> Result<Self> {
        let mut r = SelfcheckRanges::default();
        for part in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::Precondition(format!("expected key=value, got {part:?}")))?;
            let bad = || Error::Precondition(format!("invalid value in {part:?}"));
            match key.trim() {
                "a" => r.a = value.trim().parse().map_err(|_| bad())?,
                "u" => r.u = value.trim().parse().map_err(|_| bad())?,
                "q" => r.q = value.trim().parse().map_err(|_| bad())?,
                other => {
                    return Err(Error::Precondition(format!(
                        "unknown range key {other:?} (expected a, u or q)"
                    )))
                }
            }
        }
        if r.a < 1 || r.u < 0 || r.q < 2 {
            return Err(Error::Precondition(format!(
                "ranges need a >= 1, u >= 0, q >= 2, got {r:?}"
            )));
        }
        Ok(r)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub range: String,
    pub pass: bool,
    pub counterexample: Option<Value>,
}

fn result(name: &str, range: String, counterexample: Option<Value>) -> CheckResult {
    CheckResult {
        name: name.to_string(),
        range,
        pass: counterexample.is_none(),
        counterexample,
    }
}

fn cube_range(a: i64) -> impl Iterator<Item = [i64; 3]> {
    (-a..=a).flat_map(move |x| (-a..=a).flat_map(move |y| (-a..=a).map(move |z| [x, y, z])))
}

/// `g3(a) != 0` for all nonzero `a` in the box and `q` in {2, 3, 5}.
pub fn check_g3_nonvanishing(a: i64) -> CheckResult {
    let mut cx = None;
    'outer: for s1 in [2, 3, 5] {
        for v in cube_range(a).filter(|v| *v != [0, 0, 0]) {
            let inp = G3Inputs::new(v, s1, 1).expect("coprime");
            if g3_value(&inp) == BigInt::from(0) {
                cx = Some(json!({ "a": v, "s1": s1, "s2": 1 }));
                break 'outer;
            }
        }
    }
    result("g3 nonvanishing", format!("q in {{2,3,5}}, a in [-{a},{a}]^3 \\ 0"), cx)
}

/// Numeric cross-check: `g3 = −s2² N(β0 + β1 c + β2 c²)` where `c = q^{1/3}` and
/// `N` is the product over the three complex cube roots; and the third
/// column of `R3(q)` applied to `a` equals `w̄ (β0 + β1 c + β2 c²) / s2`.
pub fn check_g3_identity(a: i64) -> CheckResult {
    let mut cx = None;
    let qs = [(2, 1), (3, 1), (5, 1), (3, 2), (7, 5)];
    'outer: for (s1, s2) in qs {
        let q = s1 as f64 / s2 as f64;
        let c = q.cbrt();
        let r3 = crate::rotations::build_r3(Rational::new(s1, s2).expect("valid")).expect("q != 1");
        let col: Vec<f64> = (0..3).map(|i| r3.get(i, 2)).collect();
        let w_bar = {
            let raw = [1.0 - q, q - c, (1.0 - q) * (c + c * c)];
            1.0 / raw.iter().map(|x| x * x).sum::<f64>().sqrt()
        };
        for v in cube_range(a) {
            let inp = G3Inputs::new(v, s1, s2).expect("coprime");
            let [b0, b1, b2] = g3_betas(&inp).map(|b| b.to_string().parse::<f64>().expect("small"));
            let f = |re: f64, im: f64| (b0 + b1 * re + b2 * (re * re - im * im), b1 * im + 2.0 * b2 * re * im);
            // Roots c, c ω, c ω².
            let (h, k) = (-0.5 * c, 3f64.sqrt() / 2.0 * c);
            let f0 = f(c, 0.0).0;
            let (f1r, f1i) = f(h, k);
            let norm = f0 * (f1r * f1r + f1i * f1i);
            let g3 = g3_value(&inp).to_string().parse::<f64>().expect("small");
            let lhs = -(s2 as f64).powi(2) * norm;
            let scale = g3.abs().max(1.0);
            let col_val: f64 = v.iter().zip(&col).map(|(&ai, ci)| ai as f64 * ci).sum();
            let expected_col = w_bar * f0 / s2 as f64;
            if (lhs - g3).abs() > 1e-8 * scale || (col_val - expected_col).abs() > 1e-9 * (1.0 + col_val.abs()) {
                cx = Some(json!({ "a": v, "s1": s1, "s2": s2, "g3": g3, "norm_form": lhs }));
                break 'outer;
            }
        }
    }
    result(
        "g3 norm identity",
        format!("q in {{2,3,5,3/2,7/5}}, a in [-{a},{a}]^3"),
        cx,
    )
}

/// `det B1 != 0 and det B2 != 0` iff `u3² != 3u1² + u2²`, over `|u_i| <= u`.
pub fn check_thm2_link(u: i64) -> CheckResult {
    let mut cx = None;
    'outer: for u1 in -u..=u {
        for u2 in -u..=u {
            for u3 in -u..=u {
                let (b1, b2) = thm2_b_matrices(u1, u2, u3);
                let zero = BigInt::from(0);
                let full = int_det(&b1).expect("square") != zero && int_det(&b2).expect("square") != zero;
                let cond = u3 * u3 != 3 * u1 * u1 + u2 * u2;
                if full != cond {
                    cx = Some(json!({ "u": [u1, u2, u3], "full_rank": full, "condition": cond }));
                    break 'outer;
                }
            }
        }
    }
    result("two-dimensional rank link", format!("|u_i| <= {u}"), cx)
}

fn is_square_float_oracle(m: u64) -> bool {
    let r = (m as f64).sqrt().round() as u64;
    (r.saturating_sub(1)..=r + 1).any(|s| s * s == m)
}

/// The subset-product entry of [`validate_spec`] agrees with an independent
/// perfect-square test on `{q1, q2, q1 q2}`, for all `2 <= q1, q2 <= q`.
pub fn check_subset_products(q: u64) -> CheckResult {
    let mut cx = None;
    let v = [[1, 1], [1, 0]];
    'outer: for q1 in 2..=q {
        for q2 in 2..=q {
            let spec = MagicRotationSpec::TensorPow2 { v: vec![v, v], q: vec![q1, q2] };
            let report = validate_spec(&spec, BaseLattice::Integer);
            let reported = report
                .get("subset-product irrational")
                .map(|c| c.holds)
                .unwrap_or(false);
            let oracle = ![q1, q2, q1 * q2].into_iter().any(is_square_float_oracle);
            if reported != oracle {
                cx = Some(json!({ "q": [q1, q2], "reported": reported, "oracle": oracle }));
                break 'outer;
            }
        }
    }
    result("subset-product squares rejected", format!("2 <= q1, q2 <= {q}"), cx)
}

/// Every shipped catalog entry validates and builds an orthogonal matrix.
pub fn check_catalog() -> CheckResult {
    let mut cx = None;
    'outer: for p in [2, 3, 4, 6, 8] {
        for base in BaseLattice::ALL {
            let entries = catalog(p, base);
            if entries.is_empty() {
                cx = Some(json!({ "p": p, "base": base.short_name(), "reason": "no entry" }));
                break 'outer;
            }
            for spec in entries {
                if let Some(bad) = spec_failure(&spec, base) {
                    cx = Some(json!({ "p": p, "base": base.short_name(), "spec": spec, "reason": bad }));
                    break 'outer;
                }
            }
        }
    }
    result("catalog valid", "p in {2,3,4,6,8}, all base lattices".into(), cx)
}

fn spec_failure(spec: &MagicRotationSpec, base: BaseLattice) -> Option<String> {
    let report = validate_spec(spec, base);
    if !report.is_valid() {
        return Some(report.failures().join("; "));
    }
    match build(spec) {
        Ok(r) => {
            let res = r.orthogonality_residual().unwrap_or(f64::INFINITY);
            (res > crate::matcore::ORTHO_TOL).then(|| format!("orthogonality residual {res:e}"))
        }
        Err(e) => Some(e.to_string()),
    }
}

/// Runs every oracle suite. With `inject_fault`, an additional check
/// asserts that a spec with a perfect-cube `q` is valid, which must fail.
pub fn selfcheck(ranges: &SelfcheckRanges, inject_fault: bool) -> Vec<CheckResult> {
    let mut out = vec![
        check_g3_nonvanishing(ranges.a),
        check_g3_identity(ranges.a),
        check_thm2_link(ranges.u),
        check_subset_products(ranges.q),
        check_catalog(),
    ];
    if inject_fault {
        let spec = MagicRotationSpec::R3 { q: Rational::integer(8) };
        let cx = spec_failure(&spec, BaseLattice::DensestPacking)
            .map(|reason| json!({ "spec": spec, "reason": reason }));
        out.push(result("injected spec", "R3 with q = 8".into(), cx));
    }
    out
}

/// All `k`-subsets of `0..p` in lexicographic order.
fn combinations(p: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, p: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..=p - (k - cur.len()) {
            cur.push(i);
            go(i + 1, p, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, p, k, &mut Vec::with_capacity(k), &mut out);
    out
}
