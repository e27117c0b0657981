//! Lattice points inside the unit cube and the perturbation search that
//! yields designs of an exact size.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattices::{GeneratorMatrix, LatticeFamily};
use crate::rotations::MagicRotationSpec;

/// Default number of perturbation draws before giving up.
pub const DEFAULT_MAX_ATTEMPTS: usize = 100_000;
/// Two design points closer than this count as duplicates.
pub const DUPLICATE_TOL: f64 = 1e-12;
/// Slack applied when pruning the coefficient search; membership itself is exact.
const PRUNE_MARGIN: f64 = 1e-9;

/// `n` points in `p` dimensions, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    p: usize,
    coords: Vec<f64>,
}

impl PointSet {
    pub fn new(p: usize, coords: Vec<f64>) -> Result<Self> {
        if p == 0 || !coords.len().is_multiple_of(p) {
            return Err(Error::Shape(format!(
                "{} coordinates do not split into points of dimension {p}",
                coords.len()
            )));
        }
        Ok(PointSet { p, coords })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::Shape("ragged point rows".into()));
        }
        PointSet::new(p, rows.iter().flatten().copied().collect())
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n(&self) -> usize {
        self.coords.len() / self.p
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.p..(i + 1) * self.p]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.p)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// The `j`-th coordinate (0-based) of every point.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.iter().map(|x| x[j]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.iter().map(<[f64]>::to_vec).collect()
    }

    /// Reorders coordinates so that new coordinate `j` is old coordinate `perm[j]`.
    pub fn permute_coordinates(&self, perm: &[usize]) -> Result<PointSet> {
        let mut seen = vec![false; self.p];
        if perm.len() != self.p || perm.iter().any(|&c| c >= self.p || std::mem::replace(&mut seen[c], true)) {
            return Err(Error::Precondition(format!("{perm:?} is not a permutation of 0..{}", self.p)));
        }
        let coords = self.iter().flat_map(|x| perm.iter().map(move |&c| x[c])).collect();
        PointSet::new(self.p, coords)
    }
}

impl Serialize for PointSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for PointSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        PointSet::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// A generated design together with everything needed to reproduce it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Design {
    pub p: usize,
    pub n: usize,
    pub points: PointSet,
    pub generator: GeneratorMatrix,
    pub h: f64,
    pub delta: Vec<f64>,
    pub spec: Option<MagicRotationSpec>,
    pub seed: u64,
}

/// The sidecar record written next to a design file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignMeta {
    pub p: usize,
    pub n: usize,
    pub h: f64,
    pub delta: Vec<f64>,
    pub absdet: f64,
    pub family: LatticeFamily,
    pub spec: Option<MagicRotationSpec>,
    pub seed: u64,
}

impl Design {
    pub fn meta(&self) -> DesignMeta {
        DesignMeta {
            p: self.p,
            n: self.n,
            h: self.h,
            delta: self.delta.clone(),
            absdet: self.generator.absdet,
            family: self.generator.family.clone(),
            spec: self.spec.clone(),
            seed: self.seed,
        }
    }
}

/// `h = (n |det G|)^{-1/p}`.
pub fn scale_for(g: &GeneratorMatrix, n: usize) -> f64 {
    (n as f64 * g.absdet).powf(-1.0 / g.p as f64)
}

/// Walks `{a in Z^p : h (a^T G + delta) in [0,1]^p}`.
///
/// With `G^T = QR`, the box is contained in a ball that becomes
/// `|R a - t| <= rho` in rotated coordinates, so `a` is enumerated from its
/// last entry down with exact per-entry intervals. Each partial sum is also
/// checked against the box using coefficient bounds for the entries still free.
struct Enumerator {
    p: usize,
    h: f64,
    rows: Vec<Vec<f64>>,
    delta: Vec<f64>,
    /// Target box for `a^T G`: `[lo_j, hi_j] = [-delta_j, 1/h - delta_j]`.
    lo: Vec<f64>,
    hi: Vec<f64>,
    /// Upper triangular factor, center and radius of the enclosing ball.
    r: Vec<Vec<f64>>,
    t: Vec<f64>,
    rho2: f64,
    /// `free_min[m][j]`, `free_max[m][j]`: extreme contributions of rows `0..m` to coordinate `j`.
    free_min: Vec<Vec<f64>>,
    free_max: Vec<Vec<f64>>,
}

impl Enumerator {
    fn new(g: &GeneratorMatrix, h: f64, delta: &[f64]) -> Result<Self> {
        let p = g.p;
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Precondition(format!("scale h must be positive, got {h}")));
        }
        if delta.len() != p || delta.iter().any(|d| !d.is_finite()) {
            return Err(Error::Shape(format!("delta must have {p} finite entries")));
        }
        let ginv = g.g.inverse()?;
        let lo: Vec<f64> = delta.iter().map(|d| -d).collect();
        let hi: Vec<f64> = delta.iter().map(|d| 1.0 / h - d).collect();
        // a_i = sum_j y_j Ginv[j][i] with y_j in [lo_j, hi_j].
        let mut a_lo = vec![0.0; p];
        let mut a_hi = vec![0.0; p];
        for i in 0..p {
            let (mut mn, mut mx) = (0.0, 0.0);
            for j in 0..p {
                let c = ginv.get(j, i);
                let (x, y) = (c * lo[j], c * hi[j]);
                mn += x.min(y);
                mx += x.max(y);
            }
            let slack = PRUNE_MARGIN * (1.0 + f64::max(mn.abs(), mx.abs()));
            a_lo[i] = (mn - slack).floor();
            a_hi[i] = (mx + slack).ceil();
        }
        let rows = g.rows();
        let mut free_min = vec![vec![0.0; p]; p + 1];
        let mut free_max = vec![vec![0.0; p]; p + 1];
        for m in 0..p {
            for j in 0..p {
                let (x, y) = (a_lo[m] * rows[m][j], a_hi[m] * rows[m][j]);
                free_min[m + 1][j] = free_min[m][j] + x.min(y);
                free_max[m + 1][j] = free_max[m][j] + x.max(y);
            }
        }
        let qr = g.g.as_nalgebra().transpose().qr();
        let (q, r) = (qr.q(), qr.r());
        let center: Vec<f64> = (0..p).map(|j| 0.5 * (lo[j] + hi[j])).collect();
        let t: Vec<f64> = (0..p).map(|k| (0..p).map(|j| q[(j, k)] * center[j]).sum()).collect();
        let half = 0.5 / h;
        let rho2 = half * half * p as f64 * (1.0 + 1e-9) + PRUNE_MARGIN;
        let r = (0..p).map(|i| (0..p).map(|k| r[(i, k)]).collect()).collect();
        Ok(Enumerator {
            p,
            h,
            rows,
            delta: delta.to_vec(),
            lo,
            hi,
            r,
            t,
            rho2,
            free_min,
            free_max,
        })
    }

    /// Calls `visit` with each coefficient vector and its point in the cube;
    /// stops early when `visit` returns `false`.
    fn run(&self, visit: &mut dyn FnMut(&[i64], &[f64]) -> bool) {
        let p = self.p;
        let mut a = vec![0i64; p];
        let mut partial = vec![vec![0.0; p]; p + 1];
        let mut point = vec![0.0; p];
        self.recurse(p, self.rho2, &mut a, &mut partial, &mut point, visit);
    }

    /// Fixes `a[level - 1]` given `a[level..]`; `budget` is the squared radius left.
    fn recurse(
        &self,
        level: usize,
        budget: f64,
        a: &mut [i64],
        partial: &mut [Vec<f64>],
        point: &mut [f64],
        visit: &mut dyn FnMut(&[i64], &[f64]) -> bool,
    ) -> bool {
        let p = self.p;
        if level == 0 {
            for (j, slot) in point.iter_mut().enumerate() {
                let s = a.iter().zip(&self.rows).fold(0.0, |s, (&c, row)| s + c as f64 * row[j]);
                let x = self.h * (s + self.delta[j]);
                if !(0.0..=1.0).contains(&x) {
                    return true;
                }
                *slot = x;
            }
            return visit(a, point);
        }
        let d = level - 1;
        let offset: f64 = (level..p).map(|k| self.r[d][k] * a[k] as f64).sum();
        let target = self.t[d] - offset;
        let rdd = self.r[d][d];
        let center = target / rdd;
        let width = budget.max(0.0).sqrt() / rdd.abs();
        let (c_lo, c_hi) = ((center - width).ceil() as i64, (center + width).floor() as i64);
        for c in c_lo..=c_hi {
            let e = rdd * c as f64 - target;
            let rest = budget - e * e;
            if rest < 0.0 {
                continue;
            }
            let (head, tail) = partial.split_at_mut(level);
            let (prev, next) = (&tail[0], &mut head[d]);
            let mut feasible = true;
            for j in 0..p {
                let v = prev[j] + c as f64 * self.rows[d][j];
                next[j] = v;
                let (mn, mx) = (v + self.free_min[d][j], v + self.free_max[d][j]);
                let slack = PRUNE_MARGIN * (1.0 + f64::max(mn.abs(), mx.abs()));
                if mx < self.lo[j] - slack || mn > self.hi[j] + slack {
                    feasible = false;
                    break;
                }
            }
            if !feasible {
                continue;
            }
            a[d] = c;
            if !self.recurse(d, rest, a, partial, point, visit) {
                return false;
            }
        }
        true
    }
}

/// All points `h (a^T G + delta)` with integer `a` inside the closed unit cube,
/// ordered lexicographically by `a`.
pub fn enumerate_points(g: &GeneratorMatrix, h: f64, delta: &[f64]) -> Result<PointSet> {
    let e = Enumerator::new(g, h, delta)?;
    let mut found: Vec<(Vec<i64>, Vec<f64>)> = Vec::new();
    e.run(&mut |a, x| {
        found.push((a.to_vec(), x.to_vec()));
        true
    });
    found.sort_by(|x, y| x.0.cmp(&y.0));
    PointSet::new(g.p, found.into_iter().flat_map(|(_, x)| x).collect())
}

/// Number of points in the cube, counting no further than `limit`.
pub fn count_points(g: &GeneratorMatrix, h: f64, delta: &[f64], limit: usize) -> Result<usize> {
    let e = Enumerator::new(g, h, delta)?;
    let mut count = 0usize;
    e.run(&mut |_, _| {
        count += 1;
        count < limit
    });
    Ok(count)
}

fn has_near_duplicates(d: &PointSet) -> bool {
    let tol2 = DUPLICATE_TOL * DUPLICATE_TOL;
    (0..d.n()).any(|i| {
        let x = d.point(i);
        (i + 1..d.n()).any(|j| {
            let y = d.point(j);
            x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() < tol2
        })
    })
}

/// Draws `delta = u^T G` with `u` uniform on `[0,1)^p` until the design has
/// exactly `n` points and no two of them coincide.
pub fn find_delta<R: Rng + ?Sized>(
    g: &GeneratorMatrix,
    n: usize,
    rng: &mut R,
    max_attempts: usize,
) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::Precondition("design size n must be at least 1".into()));
    }
    if max_attempts == 0 {
        return Err(Error::Precondition("max_attempts must be at least 1".into()));
    }
    let h = scale_for(g, n);
    let rows = g.rows();
    let p = g.p;
    // Counts above n are lumped into n + 1.
    let mut histogram = BTreeMap::new();
    for _ in 0..max_attempts {
        let u: Vec<f64> = (0..p).map(|_| rng.random::<f64>()).collect();
        let delta: Vec<f64> = (0..p)
            .map(|j| (0..p).map(|i| u[i] * rows[i][j]).sum())
            .collect();
        let count = count_points(g, h, &delta, n + 1)?;
        *histogram.entry(count).or_insert(0) += 1;
        if count == n && !has_near_duplicates(&enumerate_points(g, h, &delta)?) {
            return Ok(delta);
        }
    }
    Err(Error::DeltaExhausted {
        target: n,
        attempts: max_attempts,
        histogram,
    })
}

/// Generates an `n`-point design from `G`; a deterministic function of
/// `(G, n, seed)`.
pub fn generate(
    g: &GeneratorMatrix,
    n: usize,
    spec: Option<MagicRotationSpec>,
    seed: u64,
) -> Result<Design> {
    generate_with_attempts(g, n, spec, seed, DEFAULT_MAX_ATTEMPTS)
}

pub fn generate_with_attempts(
    g: &GeneratorMatrix,
    n: usize,
    spec: Option<MagicRotationSpec>,
    seed: u64,
    max_attempts: usize,
) -> Result<Design> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let delta = find_delta(g, n, &mut rng, max_attempts)?;
    let h = scale_for(g, n);
    let points = enumerate_points(g, h, &delta)?;
    debug_assert_eq!(points.n(), n);
    Ok(Design {
        p: g.p,
        n,
        points,
        generator: g.clone(),
        h,
        delta,
        spec,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattices::{generator_densest_packing, generator_integer, BaseLattice};
    use crate::matcore::{givens, Matrix};
    use crate::rotations::{build, catalog, sample_spec};
    use proptest::prelude::*;
    use rand::Rng;

    fn sorted_rows(d: &PointSet) -> Vec<Vec<f64>> {
        let mut rows = d.to_rows();
        rows.sort_by(|a, b| a.partial_cmp(b).unwrap());
        rows
    }

    #[test]
    fn grid_examples() {
        let g = generator_integer(2).unwrap();
        let d = enumerate_points(&g, 0.5, &[0.0, 0.0]).unwrap();
        assert_eq!(d.n(), 9);
        let mut expected = Vec::new();
        for a in [0.0, 0.5, 1.0] {
            for b in [0.0, 0.5, 1.0] {
                expected.push(vec![a, b]);
            }
        }
        assert_eq!(sorted_rows(&d), expected);

        let d = enumerate_points(&g, 0.5, &[0.5, 0.5]).unwrap();
        assert_eq!(
            sorted_rows(&d),
            vec![vec![0.25, 0.25], vec![0.25, 0.75], vec![0.75, 0.25], vec![0.75, 0.75]]
        );
    }

    #[test]
    fn points_stay_in_cube() {
        let g = generator_densest_packing(2).unwrap();
        let d = enumerate_points(&g, 0.03, &[0.37, -0.2]).unwrap();
        assert!(d.n() > 100);
        assert!(d.coords().iter().all(|x| (0.0..=1.0).contains(x)));
        assert!(enumerate_points(&g, 0.0, &[0.0, 0.0]).is_err());
    }

    /// Plain box filter without pruning, as an independent reference.
    fn reference_enumeration(g: &GeneratorMatrix, h: f64, delta: &[f64], radius: i64) -> Vec<Vec<f64>> {
        let p = g.p;
        let rows = g.rows();
        let mut out = Vec::new();
        let total = (2 * radius + 1).pow(p as u32);
        for idx in 0..total {
            let mut a = vec![0i64; p];
            let mut r = idx;
            for slot in a.iter_mut().rev() {
                *slot = r % (2 * radius + 1) - radius;
                r /= 2 * radius + 1;
            }
            let mut x = vec![0.0; p];
            let mut inside = true;
            for j in 0..p {
                let mut s = 0.0;
                for i in 0..p {
                    s += a[i] as f64 * rows[i][j];
                }
                x[j] = h * (s + delta[j]);
                inside &= (0.0..=1.0).contains(&x[j]);
            }
            if inside {
                out.push(x);
            }
        }
        out
    }

    #[test]
    fn pruned_enumeration_matches_box_filter() {
        for p in [2, 3, 4] {
            let base = BaseLattice::DensestPacking;
            let spec = catalog(p, base).remove(0);
            let g = base.generator(p).unwrap().rotated(&build(&spec).unwrap(), base, spec).unwrap();
            let h = scale_for(&g, 30);
            let delta: Vec<f64> = (0..p).map(|j| 0.1 + 0.07 * j as f64).collect();
            let fast = enumerate_points(&g, h, &delta).unwrap().to_rows();
            let slow = reference_enumeration(&g, h, &delta, 12);
            assert_eq!(fast, slow, "p = {p}");
        }
        for (p, n) in [(5, 12), (6, 10)] {
            let base = BaseLattice::DensestPacking;
            let mut rng = ChaCha8Rng::seed_from_u64(p as u64);
            let spec = sample_spec(p, base, &mut rng).unwrap();
            let g = base.generator(p).unwrap().rotated(&build(&spec).unwrap(), base, spec).unwrap();
            let h = scale_for(&g, n);
            let delta: Vec<f64> = (0..p).map(|j| 0.05 + 0.11 * j as f64).collect();
            let fast = enumerate_points(&g, h, &delta).unwrap().to_rows();
            let slow = reference_enumeration(&g, h, &delta, 4);
            assert_eq!(slow, reference_enumeration(&g, h, &delta, 5), "radius too small for p = {p}");
            assert_eq!(fast, slow, "p = {p}");
        }
    }

    #[test]
    fn find_delta_examples() {
        let g = generator_integer(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let delta = find_delta(&g, 4, &mut rng, 1000).unwrap();
        assert_eq!(enumerate_points(&g, scale_for(&g, 4), &delta).unwrap().n(), 4);
        // With delta = 0 and h = 1/3 both cube faces carry points: 4 x 4 of them.
        assert_eq!(enumerate_points(&g, scale_for(&g, 9), &[0.0, 0.0]).unwrap().n(), 16);
        let delta = find_delta(&g, 9, &mut rng, 1000).unwrap();
        assert_eq!(enumerate_points(&g, scale_for(&g, 9), &delta).unwrap().n(), 9);
        assert!(matches!(find_delta(&g, 0, &mut rng, 10), Err(Error::Precondition(_))));
    }

    #[test]
    fn exhaustion_reports_histogram() {
        // With G = I and n = 10 each axis holds 3 or 4 points, so counts are 9, 12 or 16.
        let g = generator_integer(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        match find_delta(&g, 10, &mut rng, 50) {
            Err(Error::DeltaExhausted { target, attempts, histogram }) => {
                assert_eq!((target, attempts), (10, 50));
                assert!(histogram.keys().all(|c| [9, 11].contains(c)));
                assert_eq!(histogram.values().sum::<usize>(), 50);
            }
            other => panic!("expected exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn generate_examples() {
        let base = BaseLattice::DensestPacking;
        let spec = catalog(3, base).remove(0);
        let g = base.generator(3).unwrap().rotated(&build(&spec).unwrap(), base, spec.clone()).unwrap();
        let d = generate(&g, 100, Some(spec.clone()), 7).unwrap();
        assert_eq!(d.points.n(), 100);
        assert!(d.points.coords().iter().all(|x| (0.0..=1.0).contains(x)));
        assert!((d.h - 100f64.powf(-1.0 / 3.0) * g.absdet.powf(-1.0 / 3.0)).abs() < 1e-12);
        assert_eq!(d, generate(&g, 100, Some(spec), 7).unwrap());

        let single = generate(&generator_integer(2).unwrap(), 1, None, 3).unwrap();
        assert_eq!(single.points.n(), 1);
    }

    #[test]
    fn mean_count_near_target() {
        let base = BaseLattice::DensestPacking;
        for p in [2, 4] {
            let spec = catalog(p, base).remove(0);
            let g = base.generator(p).unwrap().rotated(&build(&spec).unwrap(), base, spec).unwrap();
            let n = 60;
            let h = scale_for(&g, n);
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let rows = g.rows();
            let mut total = 0;
            for _ in 0..200 {
                let u: Vec<f64> = (0..p).map(|_| rng.random::<f64>()).collect();
                let delta: Vec<f64> = (0..p).map(|j| (0..p).map(|i| u[i] * rows[i][j]).sum()).collect();
                total += count_points(&g, h, &delta, usize::MAX).unwrap();
            }
            let mean = total as f64 / 200.0;
            assert!((0.8 * n as f64..=1.2 * n as f64).contains(&mean), "p = {p}: mean {mean}");
        }
    }

    #[test]
    fn permute_coordinates_checks() {
        let d = PointSet::from_rows(&[vec![1.0, 2.0, 3.0]]).unwrap();
        assert_eq!(d.permute_coordinates(&[2, 0, 1]).unwrap().point(0), &[3.0, 1.0, 2.0]);
        assert!(d.permute_coordinates(&[0, 0, 1]).is_err());
    }

    fn diff_multiset(d: &PointSet) -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        for i in 0..d.n() {
            for j in 0..d.n() {
                if i != j {
                    let v: Vec<f64> = d.point(i).iter().zip(d.point(j)).map(|(a, b)| ((a - b) * 1e8).round() / 1e8).collect();
                    out.push(v);
                }
            }
        }
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn lattice_shift_preserves_design(
            alpha in 0.0..std::f64::consts::TAU,
            u in proptest::collection::vec(0.0..1.0f64, 2),
            shift in proptest::collection::vec(-3i64..=3, 2),
        ) {
            let r = givens(2, 1, 2, alpha).unwrap();
            let g = GeneratorMatrix::new(
                generator_densest_packing(2).unwrap().g.matmul(&r).unwrap(),
                LatticeFamily::Custom,
            ).unwrap();
            let rows = g.rows();
            let h = scale_for(&g, 40);
            let delta: Vec<f64> = (0..2).map(|j| u[0] * rows[0][j] + u[1] * rows[1][j]).collect();
            let moved: Vec<f64> = (0..2)
                .map(|j| delta[j] + shift[0] as f64 * rows[0][j] + shift[1] as f64 * rows[1][j])
                .collect();
            let a = enumerate_points(&g, h, &delta).unwrap();
            let b = enumerate_points(&g, h, &moved).unwrap();
            prop_assert_eq!(a.n(), b.n());
            prop_assert_eq!(diff_multiset(&a), diff_multiset(&b));
        }
    }

    #[test]
    fn identity_rotation_builds_same_design() {
        let g = generator_densest_packing(2).unwrap();
        let gi = GeneratorMatrix::new(g.g.matmul(&Matrix::identity(2)).unwrap(), LatticeFamily::Custom).unwrap();
        assert_eq!(generate(&g, 20, None, 4).unwrap().points, generate(&gi, 20, None, 4).unwrap().points);
    }
}
