//! Bounds on the achievable rate of the decoder with erasures.
//!
//! The three-level process `D_{n+1} ∈ {D_n⁺, D_n⁻}` (each w.p. ½) polarizes
//! to `(1,0,0)` or `(0,1,0)`, and the achievable rate `C(W,Q)` is the
//! probability of the former. `I(D_n)` is a supermartingale and
//! `F(D_n) = p − 4√(pm)` a submartingale, both equal to 1 at `(1,0,0)` and 0
//! at `(0,1,0)`, so their expectations bracket `C(W,Q)`:
//!
//! ```text
//! L_n = E[F(D_n)] ≤ C(W,Q) ≤ E[I(D_n)] = U_n
//! ```
//!
//! Expectations are exact averages over all `2ⁿ` paths.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channels::{self, ChannelModel, TripleDensity};
use crate::density::{triple_minus, triple_plus};
use crate::error::{Error, Result};
use crate::format::sig10;

/// Largest exponent evaluated by exhaustive path enumeration.
pub const ENUMERATION_CEILING: u32 = 22;

/// Subtrees above this depth are evaluated with `rayon::join`. The split
/// shape is fixed, so sums do not depend on the worker count.
const PARALLEL_DEPTH: u32 = 8;

/// `F(D) = p − 4√(pm)`.
pub fn functional_f(d: &TripleDensity) -> f64 {
    d.lower_functional()
}

/// `L₀…L_n` and `U₀…U_n` for one starting triple.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsSeries {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoundsSeries {
    pub fn n_max(&self) -> u32 {
        (self.lower.len() - 1) as u32
    }

    /// CSV with header `n,L_n,U_n`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,L_n,U_n\n");
        for (n, (l, u)) in self.lower.iter().zip(&self.upper).enumerate() {
            out.push_str(&format!("{},{},{}\n", n, sig10(*l), sig10(*u)));
        }
        out
    }
}

fn check_depth(n: u32, ceiling: u32) -> Result<()> {
    if n > ceiling.min(ENUMERATION_CEILING) {
        return Err(Error::EnumerationCeiling { n, ceiling: ceiling.min(ENUMERATION_CEILING) });
    }
    Ok(())
}

// Adds [I, F] of every node at depth k of the subtree into acc[k].
fn walk(d: TripleDensity, k: usize, acc: &mut [[f64; 2]]) {
    acc[k][0] += d.capacity();
    acc[k][1] += d.lower_functional();
    if k + 1 < acc.len() {
        walk(triple_minus(&d), k + 1, acc);
        walk(triple_plus(&d), k + 1, acc);
    }
}

fn level_sums(d: TripleDensity, levels: usize, par: u32) -> Vec<[f64; 2]> {
    if par == 0 || levels <= 1 {
        let mut acc = vec![[0.0; 2]; levels];
        walk(d, 0, &mut acc);
        return acc;
    }
    let (minus, plus) = rayon::join(
        || level_sums(triple_minus(&d), levels - 1, par - 1),
        || level_sums(triple_plus(&d), levels - 1, par - 1),
    );
    let mut acc = Vec::with_capacity(levels);
    acc.push([d.capacity(), d.lower_functional()]);
    for (a, b) in minus.iter().zip(&plus) {
        acc.push([a[0] + b[0], a[1] + b[1]]);
    }
    acc
}

/// `U_n = 2⁻ⁿ Σ I(D_path)` and `L_n = 2⁻ⁿ Σ F(D_path)` for `n = 0..=n_max`.
pub fn bounds_series(d0: &TripleDensity, n_max: u32) -> Result<BoundsSeries> {
    check_depth(n_max, ENUMERATION_CEILING)?;
    let sums = level_sums(*d0, n_max as usize + 1, PARALLEL_DEPTH);
    let (mut lower, mut upper) = (Vec::new(), Vec::new());
    for (n, s) in sums.iter().enumerate() {
        let scale = 0.5f64.powi(n as i32);
        upper.push(s[0] * scale);
        lower.push(s[1] * scale);
    }
    Ok(BoundsSeries { lower, upper })
}

fn leaf_walk<F>(d: TripleDensity, remaining: u32, f: &F, acc: &mut [f64; 2])
where
    F: Fn(&TripleDensity) -> [f64; 2],
{
    if remaining == 0 {
        let v = f(&d);
        acc[0] += v[0];
        acc[1] += v[1];
    } else {
        leaf_walk(triple_minus(&d), remaining - 1, f, acc);
        leaf_walk(triple_plus(&d), remaining - 1, f, acc);
    }
}

fn leaf_sums<F>(d: TripleDensity, remaining: u32, par: u32, f: &F) -> [f64; 2]
where
    F: Fn(&TripleDensity) -> [f64; 2] + Sync,
{
    if par == 0 || remaining == 0 {
        let mut acc = [0.0; 2];
        leaf_walk(d, remaining, f, &mut acc);
        return acc;
    }
    let (a, b) = rayon::join(
        || leaf_sums(triple_minus(&d), remaining - 1, par - 1, f),
        || leaf_sums(triple_plus(&d), remaining - 1, par - 1, f),
    );
    [a[0] + b[0], a[1] + b[1]]
}

/// `(L_n, U_n)` at a single depth, skipping the intermediate levels.
pub fn bracket_at(d0: &TripleDensity, n: u32) -> Result<(f64, f64)> {
    check_depth(n, ENUMERATION_CEILING)?;
    let s = leaf_sums(*d0, n, PARALLEL_DEPTH, &|d| [d.lower_functional(), d.capacity()]);
    let scale = 0.5f64.powi(n as i32);
    Ok((s[0] * scale, s[1] * scale))
}

fn lower_at(d0: &TripleDensity, n: u32) -> f64 {
    let s = leaf_sums(*d0, n, PARALLEL_DEPTH, &|d| [d.lower_functional(), 0.0]);
    s[0] * 0.5f64.powi(n as i32)
}

/// Bracket `[L_n, U_n]` on `C(W,Q)` at the first `n` where it is narrower
/// than `tol`, or at `n_ceiling`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityEstimate {
    pub lower: f64,
    pub upper: f64,
    pub n_used: u32,
    pub converged: bool,
}

pub fn estimate_capacity_q(d0: &TripleDensity, tol: f64, n_ceiling: u32) -> Result<CapacityEstimate> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidArgument(format!("tolerance {tol} must be positive")));
    }
    check_depth(n_ceiling, ENUMERATION_CEILING)?;
    let series = bounds_series(d0, n_ceiling)?;
    let hit = (0..=n_ceiling as usize).find(|&n| series.upper[n] - series.lower[n] <= tol);
    let n = hit.unwrap_or(n_ceiling as usize);
    Ok(CapacityEstimate {
        lower: series.lower[n],
        upper: series.upper[n],
        n_used: n as u32,
        converged: hit.is_some(),
    })
}

/// Sampled estimates of `L_n` and `U_n` with 95% normal-approximation radii.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McBounds {
    pub lower: f64,
    pub upper: f64,
    pub lower_radius: f64,
    pub upper_radius: f64,
    pub samples: usize,
}

/// Monte Carlo estimate of `(L_n, U_n)` over uniformly drawn paths.
///
/// Sample `k` draws its path from its own ChaCha stream `k` under `seed`.
pub fn bounds_series_mc(d0: &TripleDensity, n: u32, samples: usize, seed: u64) -> Result<McBounds> {
    if samples < 1000 {
        return Err(Error::InvalidArgument(format!("need at least 1000 samples, got {samples}")));
    }
    let values: Vec<[f64; 2]> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let mut d = *d0;
            for _ in 0..n {
                d = if rng.random::<bool>() { triple_plus(&d) } else { triple_minus(&d) };
            }
            [d.lower_functional(), d.capacity()]
        })
        .collect();
    // Welford's update: a constant sample gives its value and zero spread
    // exactly.
    let (mut mean, mut m2) = ([0.0f64; 2], [0.0f64; 2]);
    for (k, v) in values.iter().enumerate() {
        for j in 0..2 {
            let delta = v[j] - mean[j];
            mean[j] += delta / (k + 1) as f64;
            m2[j] += delta * (v[j] - mean[j]);
        }
    }
    let count = samples as f64;
    let radius = |j: usize| 1.96 * (m2[j] / (count - 1.0) / count).sqrt();
    let (lower, upper) = (mean[0], mean[1]);
    Ok(McBounds {
        lower,
        upper,
        lower_radius: radius(0),
        upper_radius: radius(1),
        samples,
    })
}

/// Lower bound on `C(W,Q)` valid for every channel of the given capacity.
///
/// Any channel has `E(W) ≤ (1 − I(W))/2`. The bound is the smallest `L_n`
/// over the triples `(1 − E − e/2, e, E − e/2)` of error functional
/// `E = (1 − I)/2`, with `e` on a uniform grid of `e_grid` points in
/// `[0, 2E]`, clamped at zero.
pub fn universal_lower_bound(capacity: f64, e_grid: usize, n: u32) -> Result<f64> {
    if !(0.0..=1.0).contains(&capacity) {
        return Err(Error::InvalidArgument(format!("capacity {capacity} outside [0, 1]")));
    }
    if e_grid == 0 {
        return Err(Error::InvalidArgument("erasure grid needs at least one point".into()));
    }
    check_depth(n, ENUMERATION_CEILING)?;
    let err = (1.0 - capacity) / 2.0;
    let members: Vec<TripleDensity> = (0..e_grid)
        .map(|k| {
            let e = if e_grid == 1 { 0.0 } else { 2.0 * err * k as f64 / (e_grid - 1) as f64 };
            let m = (err - e / 2.0).max(0.0);
            TripleDensity { p: 1.0 - e - m, e, m }
        })
        .collect();
    let lows: Vec<f64> = members.par_iter().map(|d| lower_at(d, n)).collect();
    let worst = lows.into_iter().fold(f64::INFINITY, f64::min);
    Ok(worst.max(0.0))
}

/// Channel families plotted against capacity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveFamily {
    Bec,
    Bsc,
    Bawgn,
    Universal,
}

impl FromStr for CurveFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "bec" => Ok(CurveFamily::Bec),
            "bsc" => Ok(CurveFamily::Bsc),
            "bawgn" => Ok(CurveFamily::Bawgn),
            "universal" => Ok(CurveFamily::Universal),
            other => Err(Error::Parse(format!("unknown channel family '{other}'"))),
        }
    }
}

impl fmt::Display for CurveFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CurveFamily::Bec => "bec",
            CurveFamily::Bsc => "bsc",
            CurveFamily::Bawgn => "bawgn",
            CurveFamily::Universal => "universal",
        })
    }
}

/// One capacity grid point of a curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    pub capacity: f64,
    pub lower: f64,
    pub upper: f64,
    pub n: u32,
}

impl CurveRow {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

pub fn curve_csv(rows: &[CurveRow]) -> String {
    let mut out = String::from("capacity,lower,upper,n\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{}\n", sig10(r.capacity), sig10(r.lower), sig10(r.upper), r.n));
    }
    out
}

/// Crossover probability of the BSC with the given capacity.
pub fn bsc_for_capacity(capacity: f64) -> f64 {
    if capacity >= 1.0 {
        return 0.0;
    }
    if capacity <= 0.0 {
        return 0.5;
    }
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if 1.0 - channels::h2(mid) > capacity {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Noise deviation of the BAWGN channel with the given capacity, found by
/// bisection on `ln σ` down to a relative width of 1e-10.
pub fn bawgn_for_capacity(capacity: f64) -> Result<f64> {
    if !(capacity > 0.0 && capacity < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "BAWGN capacity must lie strictly inside (0, 1), got {capacity}"
        )));
    }
    let cap = |ln_sigma: f64| channels::capacity(&ChannelModel::Bawgn(ln_sigma.exp()));
    let (mut lo, mut hi) = (1e-2f64.ln(), 1e3f64.ln());
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if cap(mid)? > capacity {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

/// Starting triple for a family member of the given capacity; `None` for the
/// universal family, which has no single member.
pub fn family_triple(family: CurveFamily, capacity: f64) -> Result<Option<TripleDensity>> {
    Ok(match family {
        CurveFamily::Bec => Some(TripleDensity { p: capacity, e: 1.0 - capacity, m: 0.0 }),
        CurveFamily::Bsc => Some(channels::triple_of(&ChannelModel::Bsc(bsc_for_capacity(capacity)))?),
        CurveFamily::Bawgn => Some(if capacity >= 1.0 {
            TripleDensity::PERFECT
        } else if capacity <= 0.0 {
            TripleDensity { p: 0.5, e: 0.0, m: 0.5 }
        } else {
            channels::triple_of(&ChannelModel::Bawgn(bawgn_for_capacity(capacity)?))?
        }),
        CurveFamily::Universal => None,
    })
}

/// `C(W,Q)` bracket against capacity on the grid `I_k = k/points`,
/// `k = 1..=points`.
///
/// Lower bounds are clamped at zero since a rate cannot be negative. The
/// universal row reports its bound as `lower` and the capacity as `upper`.
pub fn curve(family: CurveFamily, points: usize, n: u32, e_grid: usize) -> Result<Vec<CurveRow>> {
    if points == 0 {
        return Err(Error::InvalidArgument("curve needs at least one point".into()));
    }
    check_depth(n, ENUMERATION_CEILING)?;
    (1..=points)
        .map(|k| {
            let capacity = k as f64 / points as f64;
            let (lower, upper) = match family {
                CurveFamily::Bec => (capacity, capacity),
                CurveFamily::Universal => (universal_lower_bound(capacity, e_grid, n)?, capacity),
                _ => {
                    let d0 = family_triple(family, capacity)?.expect("member triple");
                    let (l, u) = bracket_at(&d0, n)?;
                    (l.max(0.0), u)
                }
            };
            Ok(CurveRow { capacity, lower, upper, n })
        })
        .collect()
}

/// Whether `Z(D⁻) ≤ 2Z(D)` and `Z(D⁺) ≤ 2Z(D)^{3/2}` hold (slack 1e-12).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZCheck {
    pub minus_holds: bool,
    pub plus_holds: bool,
}

pub fn z_bounds_check(d: &TripleDensity) -> ZCheck {
    let z = d.bhattacharyya();
    ZCheck {
        minus_holds: triple_minus(d).bhattacharyya() <= 2.0 * z + 1e-12,
        plus_holds: triple_plus(d).bhattacharyya() <= 2.0 * z.powf(1.5) + 1e-12,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::index_to_path;
    use crate::density::evolve_triple;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    const BSC: TripleDensity = TripleDensity { p: 0.89, e: 0.0, m: 0.11 };

    // Average over explicitly enumerated paths.
    fn by_paths(d0: &TripleDensity, n: u32) -> (f64, f64) {
        let len = 1usize << n;
        let (mut l, mut u) = (0.0, 0.0);
        for i in 0..len {
            let d = evolve_triple(d0, &index_to_path(i, n).unwrap());
            l += d.lower_functional();
            u += d.capacity();
        }
        (l / len as f64, u / len as f64)
    }

    #[test]
    fn functional_endpoints() {
        assert_eq!(functional_f(&TripleDensity::PERFECT), 1.0);
        assert_eq!(functional_f(&TripleDensity::ERASURE), 0.0);
        close(functional_f(&BSC), -0.3616, 1e-4);
    }

    #[test]
    fn two_routes_agree() {
        let starts = [BSC, TripleDensity { p: 0.6, e: 0.3, m: 0.1 }, TripleDensity { p: 0.5, e: 0.5, m: 0.0 }];
        for d0 in starts {
            let s = bounds_series(&d0, 12).unwrap();
            for n in 0..=12 {
                let (l, u) = by_paths(&d0, n);
                close(s.lower[n as usize], l, 1e-10);
                close(s.upper[n as usize], u, 1e-10);
            }
            let (l, u) = bracket_at(&d0, 12).unwrap();
            close(l, s.lower[12], 1e-12);
            close(u, s.upper[12], 1e-12);
        }
    }

    #[test]
    fn early_terms_of_the_bsc_example() {
        let s = bounds_series(&BSC, 2).unwrap();
        let expect_l = [-0.361, -0.191, -0.075];
        let expect_u = [0.500, 0.500, 0.498];
        // the reported L₀ truncates −0.3616
        close(s.lower[0], -0.3616, 5e-5);
        for n in 0..3 {
            if n > 0 {
                close(s.lower[n], expect_l[n], 0.0005);
            }
            close(s.upper[n], expect_u[n], 0.0005);
        }
    }

    #[test]
    fn series_is_monotone_and_ordered() {
        for d0 in [BSC, TripleDensity { p: 0.7, e: 0.2, m: 0.1 }] {
            let s = bounds_series(&d0, 16).unwrap();
            for n in 0..16 {
                assert!(s.lower[n + 1] >= s.lower[n] - 1e-12);
                assert!(s.upper[n + 1] <= s.upper[n] + 1e-12);
                assert!(s.lower[n] <= s.upper[n]);
            }
        }
    }

    #[test]
    fn erasure_channels_are_exact() {
        let d0 = TripleDensity { p: 0.7, e: 0.3, m: 0.0 };
        let s = bounds_series(&d0, 14).unwrap();
        for n in 0..=14 {
            close(s.lower[n], 0.7, 1e-12);
            close(s.upper[n], 0.7, 1e-12);
        }
    }

    #[test]
    fn enumeration_ceiling() {
        assert!(matches!(bounds_series(&BSC, 23), Err(Error::EnumerationCeiling { .. })));
    }

    #[test]
    fn capacity_estimates() {
        let est = estimate_capacity_q(&TripleDensity::PERFECT, 1e-6, 20).unwrap();
        assert_eq!((est.lower, est.upper, est.n_used), (1.0, 1.0, 0));
        let est = estimate_capacity_q(&TripleDensity { p: 0.5, e: 0.5, m: 0.0 }, 1e-6, 20).unwrap();
        assert_eq!((est.lower, est.upper, est.n_used), (0.5, 0.5, 0));
        let est = estimate_capacity_q(&BSC, 1e-3, 12).unwrap();
        assert!(!est.converged);
        assert_eq!(est.n_used, 12);
        assert!(estimate_capacity_q(&BSC, 0.0, 12).is_err());
    }

    #[test]
    fn monte_carlo_estimates() {
        // n = 0 is a point mass; beyond it F = I on the erasure family.
        let bec = TripleDensity { p: 0.7, e: 0.3, m: 0.0 };
        let mc = bounds_series_mc(&bec, 0, 1000, 1).unwrap();
        assert_eq!((mc.lower, mc.upper), (0.7, 0.7));
        assert_eq!((mc.lower_radius, mc.upper_radius), (0.0, 0.0));
        let mc = bounds_series_mc(&bec, 8, 20_000, 1).unwrap();
        assert_eq!(mc.lower, mc.upper);
        close(mc.upper, 0.7, 3.0 * mc.upper_radius / 1.96);

        let exact = bounds_series(&BSC, 12).unwrap();
        let mc = bounds_series_mc(&BSC, 12, 50_000, 42).unwrap();
        close(mc.lower, exact.lower[12], 3.0 * mc.lower_radius / 1.96);
        close(mc.upper, exact.upper[12], 3.0 * mc.upper_radius / 1.96);
        assert_eq!(mc, bounds_series_mc(&BSC, 12, 50_000, 42).unwrap());
        assert!(bounds_series_mc(&BSC, 4, 999, 0).is_err());
    }

    #[test]
    fn universal_bound_endpoints() {
        assert_eq!(universal_lower_bound(1.0, 50, 10).unwrap(), 1.0);
        assert_eq!(universal_lower_bound(0.0, 50, 10).unwrap(), 0.0);
        let b = universal_lower_bound(0.5, 20, 10).unwrap();
        let bsc_half = bracket_at(&BSC, 10).unwrap().0;
        assert!(b <= bsc_half.max(0.0));
        assert!(universal_lower_bound(1.2, 10, 4).is_err());
    }

    #[test]
    fn family_inversion() {
        close(channels::h2(bsc_for_capacity(0.5)), 0.5, 1e-9);
        let sigma = bawgn_for_capacity(0.5).unwrap();
        close(channels::capacity(&ChannelModel::Bawgn(sigma)).unwrap(), 0.5, 1e-9);
    }

    #[test]
    fn erasure_curve_is_the_identity() {
        for r in curve(CurveFamily::Bec, 10, 8, 1).unwrap() {
            assert_eq!((r.lower, r.upper), (r.capacity, r.capacity));
        }
        let one = curve(CurveFamily::Bsc, 1, 6, 1).unwrap();
        assert_eq!((one[0].capacity, one[0].lower, one[0].upper), (1.0, 1.0, 1.0));
        let one = curve(CurveFamily::Universal, 1, 6, 4).unwrap();
        assert_eq!((one[0].lower, one[0].upper), (1.0, 1.0));
    }

    #[test]
    fn exponent_inequalities() {
        let z = BSC.bhattacharyya();
        close(z, 0.6258, 1e-4);
        close(triple_minus(&BSC).bhattacharyya(), 0.7936, 1e-4);
        close(triple_plus(&BSC).bhattacharyya(), 0.3916, 1e-4);
        assert_eq!(z_bounds_check(&BSC), ZCheck { minus_holds: true, plus_holds: true });
        assert_eq!(
            z_bounds_check(&TripleDensity::PERFECT),
            ZCheck { minus_holds: true, plus_holds: true }
        );
    }
}
