//! Separation and fill distances, their coordinate projections, and the
//! design score.
//!
//! Every squared distance is summed after sorting its per-coordinate terms
//! in ascending order. With that convention the fast minimum over all
//! `k`-subsets equals the exhaustive minimum bit for bit, and the full
//! projection reproduces the unprojected separation exactly.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::designgen::PointSet;
use crate::error::{Error, Result};

/// Default number of query points for [`fill_estimate`].
pub const DEFAULT_FILL_SAMPLES: usize = 1 << 14;
const HALTON_PERMUTATION_SEED: u64 = 0x005e_ed0f_4a17;
const PRIMES: [u64; 24] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
];

/// Sorts `terms` ascending and sums them left to right.
pub fn sorted_sum(terms: &mut [f64]) -> f64 {
    terms.sort_unstable_by(f64::total_cmp);
    terms.iter().sum()
}

fn require_pairs(d: &PointSet) -> Result<()> {
    if d.n() < 2 {
        return Err(Error::Precondition(format!(
            "separation needs at least two points, got {}",
            d.n()
        )));
    }
    Ok(())
}

/// Per-`i` minimum over `j > i` of `f(x_i, x_j)`, reduced in parallel.
fn pairwise_min<F>(d: &PointSet, width: usize, f: F) -> Vec<f64>
where
    F: Fn(&[f64], &[f64], &mut Vec<f64>, &mut [f64]) + Sync,
{
    let n = d.n();
    (0..n)
        .into_par_iter()
        .fold(
            || (vec![f64::INFINITY; width], Vec::new(), vec![0.0; width]),
            |(mut best, mut buf, mut out), i| {
                let x = d.point(i);
                for j in i + 1..n {
                    f(x, d.point(j), &mut buf, &mut out);
                    for (b, o) in best.iter_mut().zip(&out) {
                        if *o < *b {
                            *b = *o;
                        }
                    }
                }
                (best, buf, out)
            },
        )
        .map(|(best, _, _)| best)
        .reduce(
            || vec![f64::INFINITY; width],
            |a, b| a.iter().zip(&b).map(|(x, y)| x.min(*y)).collect(),
        )
}

/// Minimum pairwise Euclidean distance.
pub fn separation(d: &PointSet) -> Result<f64> {
    projected_separation(d, &(1..=d.p()).collect::<Vec<_>>())
}

/// Minimum pairwise distance over the 1-based coordinates in `gamma`.
pub fn projected_separation(d: &PointSet, gamma: &[usize]) -> Result<f64> {
    require_pairs(d)?;
    if gamma.is_empty() {
        return Err(Error::Precondition("projection set must be nonempty".into()));
    }
    if let Some(bad) = gamma.iter().find(|&&c| c == 0 || c > d.p()) {
        return Err(Error::Index(format!("coordinate {bad} outside 1..={}", d.p())));
    }
    let best = pairwise_min(d, 1, |x, y, buf, out| {
        buf.clear();
        buf.extend(gamma.iter().map(|&c| (x[c - 1] - y[c - 1]) * (x[c - 1] - y[c - 1])));
        out[0] = sorted_sum(buf);
    });
    Ok(best[0].sqrt())
}

/// `min_proj_sep[k-1]` for `k = 1..=p`: for each pair the best `k`-subset
/// is formed by the `k` smallest squared coordinate differences.
pub fn min_projected_separation_all(d: &PointSet) -> Result<Vec<f64>> {
    require_pairs(d)?;
    let p = d.p();
    let best = pairwise_min(d, p, |x, y, buf, out| {
        buf.clear();
        buf.extend(x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)));
        buf.sort_unstable_by(f64::total_cmp);
        let mut s = 0.0;
        for (o, t) in out.iter_mut().zip(buf.iter()) {
            s += t;
            *o = s;
        }
    });
    Ok(best.into_iter().map(f64::sqrt).collect())
}

/// Minimum over all coordinate subsets of size `k` of the projected separation.
pub fn min_projected_separation(d: &PointSet, k: usize) -> Result<f64> {
    if k == 0 || k > d.p() {
        return Err(Error::Precondition(format!("need 1 <= k <= {}, got {k}", d.p())));
    }
    Ok(min_projected_separation_all(d)?[k - 1])
}

/// Exact fill distance of coordinate `j` (1-based) over `[0, 1]`.
pub fn univariate_fill(d: &PointSet, j: usize) -> Result<f64> {
    if d.n() == 0 {
        return Err(Error::Precondition("fill distance needs at least one point".into()));
    }
    if j == 0 || j > d.p() {
        return Err(Error::Index(format!("coordinate {j} outside 1..={}", d.p())));
    }
    let mut c = d.column(j - 1);
    c.sort_unstable_by(f64::total_cmp);
    let edge = c[0].max(1.0 - c[c.len() - 1]);
    Ok(c.windows(2).map(|w| (w[1] - w[0]) / 2.0).fold(edge, f64::max))
}

/// Deterministic generalized Halton sequence with scrambled digits.
#[derive(Clone, Debug)]
pub struct Halton {
    perms: Vec<Vec<u64>>,
}

impl Halton {
    pub fn new(p: usize) -> Result<Self> {
        if p == 0 || p > PRIMES.len() {
            return Err(Error::Dimension { p, min: 1, max: PRIMES.len() });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(HALTON_PERMUTATION_SEED);
        let perms = PRIMES[..p]
            .iter()
            .map(|&b| {
                // Digit 0 stays fixed so that trailing zeros contribute nothing.
                let mut tail: Vec<u64> = (1..b).collect();
                tail.shuffle(&mut rng);
                std::iter::once(0).chain(tail).collect()
            })
            .collect();
        Ok(Halton { perms })
    }

    /// The `i`-th point (`i >= 1`).
    pub fn point(&self, i: u64, out: &mut [f64]) {
        for (o, (perm, &b)) in out.iter_mut().zip(self.perms.iter().zip(&PRIMES)) {
            let mut k = i;
            let mut f = 1.0 / b as f64;
            let mut x = 0.0;
            while k > 0 {
                x += perm[(k % b) as usize] as f64 * f;
                k /= b;
                f /= b as f64;
            }
            *o = x;
        }
    }
}

/// Largest distance from `samples` Halton points to the nearest design point.
/// A lower bound on the true fill distance.
pub fn fill_estimate(d: &PointSet, samples: usize) -> Result<f64> {
    if d.n() == 0 {
        return Err(Error::Precondition("fill distance needs at least one point".into()));
    }
    if samples == 0 {
        return Err(Error::Precondition("need at least one fill sample".into()));
    }
    let p = d.p();
    let seq = Halton::new(p)?;
    let worst = (1..=samples as u64)
        .into_par_iter()
        .map_init(
            || vec![0.0; p],
            |y, i| {
                seq.point(i, y);
                d.iter()
                    .map(|x| x.iter().zip(y.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
                    .fold(f64::INFINITY, f64::min)
            },
        )
        .reduce(|| 0.0, f64::max);
    Ok(worst.sqrt())
}

/// `ln(m_1)/2 + sum_{k>=2} k ln(m_k)` for `m = min_proj_sep`; `-inf` if any
/// entry is zero.
pub fn score_from(min_proj_sep: &[f64]) -> f64 {
    min_proj_sep
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            let w = if i == 0 { 0.5 } else { (i + 1) as f64 };
            w * m.ln()
        })
        .sum()
}

pub fn score(d: &PointSet) -> Result<f64> {
    Ok(score_from(&min_projected_separation_all(d)?))
}

pub mod score_serde {
    //! Serializes `f64` as a number, or as `"-inf"`, `"inf"`, `"nan"`.
    use super::*;

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "-inf" => Ok(f64::NEG_INFINITY),
                "inf" => Ok(f64::INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("invalid number {other:?}"))),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionMetrics {
    pub p: usize,
    pub n: usize,
    pub sep: f64,
    /// Index `k-1` holds the minimum over all `k`-subsets.
    pub min_proj_sep: Vec<f64>,
    /// Index `j-1` holds the fill distance of coordinate `j`.
    pub uni_fill: Vec<f64>,
    pub fill_estimate: f64,
    #[serde(with = "score_serde")]
    pub score: f64,
    /// `min_proj_sep[k-1] * n^{1/k}`.
    pub c_hat: Vec<f64>,
}

impl ProjectionMetrics {
    pub fn max_uni_fill(&self) -> f64 {
        self.uni_fill.iter().copied().fold(0.0, f64::max)
    }
}

pub fn metrics_report(d: &PointSet, fill_samples: usize) -> Result<ProjectionMetrics> {
    let mps = min_projected_separation_all(d)?;
    let p = d.p();
    let n = d.n();
    let uni_fill = (1..=p).map(|j| univariate_fill(d, j)).collect::<Result<Vec<_>>>()?;
    let c_hat = mps
        .iter()
        .enumerate()
        .map(|(i, m)| m * (n as f64).powf(1.0 / (i + 1) as f64))
        .collect();
    Ok(ProjectionMetrics {
        p,
        n,
        sep: mps[p - 1],
        score: score_from(&mps),
        min_proj_sep: mps,
        uni_fill,
        fill_estimate: fill_estimate(d, fill_samples)?,
        c_hat,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::brute_force_min_subset_separation;
    use proptest::prelude::*;
    use rand::Rng;

    fn pts(rows: &[&[f64]]) -> PointSet {
        PointSet::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn separation_examples() {
        assert!((separation(&pts(&[&[0.0, 0.0], &[1.0, 1.0]])).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(separation(&pts(&[&[0.0, 0.0], &[0.5, 0.0], &[1.0, 0.0]])).unwrap(), 0.5);
        assert!(separation(&pts(&[&[0.0, 0.0]])).is_err());
    }

    #[test]
    fn projected_examples() {
        let d = pts(&[&[0.0, 0.0], &[1.0, 0.0]]);
        assert_eq!(projected_separation(&d, &[2]).unwrap(), 0.0);
        assert_eq!(projected_separation(&pts(&[&[0.0, 0.0], &[1.0, 1.0]]), &[1]).unwrap(), 1.0);
        assert!(projected_separation(&d, &[]).is_err());
        assert!(projected_separation(&d, &[3]).is_err());
        let e = pts(&[&[0.1, 0.7, 0.3], &[0.4, 0.2, 0.9], &[0.8, 0.5, 0.6]]);
        assert_eq!(projected_separation(&e, &[1, 2, 3]).unwrap(), separation(&e).unwrap());
    }

    #[test]
    fn min_projected_examples() {
        let d = pts(&[&[0.0, 0.0, 0.0], &[0.3, 0.1, 0.4]]);
        assert!((min_projected_separation(&d, 2).unwrap() - 0.1f64.sqrt()).abs() < 1e-15);
        assert_eq!(min_projected_separation(&d, 3).unwrap(), separation(&d).unwrap());
        assert!(min_projected_separation(&d, 0).is_err());
        assert!(min_projected_separation(&d, 4).is_err());
    }

    #[test]
    fn univariate_fill_examples() {
        let col = |v: &[f64]| PointSet::new(1, v.to_vec()).unwrap();
        assert_eq!(univariate_fill(&col(&[0.25, 0.75]), 1).unwrap(), 0.25);
        assert!((univariate_fill(&col(&[0.1, 0.5, 0.9]), 1).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(univariate_fill(&col(&[0.0]), 1).unwrap(), 1.0);
    }

    #[test]
    fn univariate_fill_matches_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let v: Vec<f64> = (0..15).map(|_| rng.random()).collect();
            let exact = univariate_fill(&PointSet::new(1, v.clone()).unwrap(), 1).unwrap();
            let m = 10_000;
            let grid = (0..=m)
                .map(|i| {
                    let y = i as f64 / m as f64;
                    v.iter().map(|x| (x - y).abs()).fold(f64::INFINITY, f64::min)
                })
                .fold(0.0, f64::max);
            assert!(grid <= exact + 1e-15 && exact - grid <= 1.0 / m as f64);
        }
    }

    #[test]
    fn fill_estimate_examples() {
        for p in [1, 2, 4] {
            let centre = PointSet::new(p, vec![0.5; p]).unwrap();
            let est = fill_estimate(&centre, 4096).unwrap();
            let bound = (p as f64 / 4.0).sqrt();
            assert!(est <= bound && est > 0.9 * bound, "p = {p}: {est}");
        }
        let grid = |m: usize| {
            let mut rows = Vec::new();
            for a in 0..=m {
                for b in 0..=m {
                    rows.push(vec![a as f64 / m as f64, b as f64 / m as f64]);
                }
            }
            PointSet::from_rows(&rows).unwrap()
        };
        let coarse = fill_estimate(&grid(4), 2048).unwrap();
        let fine = fill_estimate(&grid(10), 2048).unwrap();
        assert!(fine < coarse && fine <= 0.5f64.sqrt() / 10.0);
        assert_eq!(coarse, fill_estimate(&grid(4), 2048).unwrap());
    }

    #[test]
    fn halton_points_in_unit_cube() {
        let h = Halton::new(8).unwrap();
        let mut y = vec![0.0; 8];
        for i in 1..2000 {
            h.point(i, &mut y);
            assert!(y.iter().all(|v| (0.0..1.0).contains(v)));
        }
        h.point(1, &mut y);
        assert!(y[0] == 0.5);
    }

    #[test]
    fn score_examples() {
        let s = score(&pts(&[&[0.0, 0.0], &[1.0, 1.0]])).unwrap();
        assert!((s - 2f64.ln()).abs() < 1e-12);
        let tied = pts(&[&[0.3, 0.1], &[0.3, 0.8], &[0.6, 0.5]]);
        assert_eq!(score(&tied).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn score_is_increasing_in_each_entry() {
        let base = [0.01, 0.1, 0.2, 0.3];
        let s0 = score_from(&base);
        for k in 0..4 {
            let mut up = base;
            up[k] *= 1.01;
            assert!(score_from(&up) > s0);
        }
    }

    #[test]
    fn metrics_json_shape() {
        let d = pts(&[&[0.0, 0.0], &[0.0, 1.0]]);
        let m = metrics_report(&d, 64).unwrap();
        assert_eq!(m.score, f64::NEG_INFINITY);
        let json = serde_json::to_value(&m).unwrap();
        assert_eq!(json["score"], "-inf");
        for key in ["sep", "min_proj_sep", "uni_fill", "fill_estimate", "score", "c_hat"] {
            assert!(json.get(key).is_some(), "{key}");
        }
        let back: ProjectionMetrics = serde_json::from_value(json).unwrap();
        assert_eq!(back.score, f64::NEG_INFINITY);
    }

    fn random_set(rng: &mut ChaCha8Rng, p: usize, n: usize) -> PointSet {
        PointSet::new(p, (0..p * n).map(|_| rng.random()).collect()).unwrap()
    }

    #[test]
    fn fast_path_equals_subset_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for case in 0..120 {
            let p = 1 + case % 6;
            let n = 2 + rng.random_range(0..39);
            let d = random_set(&mut rng, p, n);
            let fast = min_projected_separation_all(&d).unwrap();
            for k in 1..=p {
                assert_eq!(fast[k - 1], brute_force_min_subset_separation(&d, k).unwrap(), "case {case}, k {k}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn report_invariants(seed in 0u64..10_000, p in 1usize..=6, n in 2usize..30) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = random_set(&mut rng, p, n);
            let m = metrics_report(&d, 256).unwrap();
            for k in 1..p {
                prop_assert!(m.min_proj_sep[k - 1] <= m.min_proj_sep[k]);
            }
            prop_assert_eq!(m.min_proj_sep[p - 1], m.sep);
            prop_assert_eq!(m.sep, separation(&d).unwrap());
            prop_assert!(m.uni_fill.iter().chain(&m.c_hat).all(|v| *v >= 0.0));

            let mut perm: Vec<usize> = (0..p).collect();
            perm.shuffle(&mut rng);
            let q = d.permute_coordinates(&perm).unwrap();
            let mq = metrics_report(&q, 256).unwrap();
            prop_assert_eq!(&mq.min_proj_sep, &m.min_proj_sep);
            prop_assert_eq!(mq.score, m.score);
            for (j, &c) in perm.iter().enumerate() {
                prop_assert_eq!(mq.uni_fill[j], m.uni_fill[c]);
            }
        }
    }
}
