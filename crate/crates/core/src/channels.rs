//! Binary memoryless symmetric channels and their message densities.
//!
//! Every quantity is taken under the all-zero codeword: LLRs are
//! `log(W(y|0) / W(y|1))` with `y ~ W(·|0)`, so positive values favor the
//! transmitted bit.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use libm::erfc;

use crate::error::{Error, Result};

const INF: f64 = f64::INFINITY;

/// Tolerance on the total mass of user-supplied densities.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Binary entropy in bits, continuously extended with `h2(0) = h2(1) = 0`.
pub fn h2(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -(x * x.log2() + (1.0 - x) * (1.0 - x).log2())
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// A BMS channel.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelModel {
    /// Binary erasure channel with erasure probability `ε ∈ [0, 1]`.
    Bec(f64),
    /// Binary symmetric channel with crossover probability `ε ∈ [0, 1/2]`.
    Bsc(f64),
    /// BPSK over additive white Gaussian noise of standard deviation `σ > 0`.
    Bawgn(f64),
    /// A channel with finitely many outputs, given by its LLR atoms under
    /// input 0. `levels` is strictly increasing and closed under negation.
    DiscreteSymmetric { levels: Vec<f64>, probs: Vec<f64> },
}

impl ChannelModel {
    pub fn bec(erasure: f64) -> Result<Self> {
        let ch = ChannelModel::Bec(erasure);
        ch.validate()?;
        Ok(ch)
    }

    pub fn bsc(crossover: f64) -> Result<Self> {
        let ch = ChannelModel::Bsc(crossover);
        ch.validate()?;
        Ok(ch)
    }

    pub fn bawgn(sigma: f64) -> Result<Self> {
        let ch = ChannelModel::Bawgn(sigma);
        ch.validate()?;
        Ok(ch)
    }

    /// The three-output channel whose LLR law is the triple `(p, e, m)`.
    pub fn triple(p: f64, e: f64, m: f64) -> Result<Self> {
        let ch = ChannelModel::DiscreteSymmetric {
            levels: vec![-INF, 0.0, INF],
            probs: vec![m, e, p],
        };
        ch.validate()?;
        Ok(ch)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidChannel(msg));
        match *self {
            ChannelModel::Bec(eps) if !(0.0..=1.0).contains(&eps) => {
                bad(format!("erasure probability {eps} outside [0, 1]"))
            }
            ChannelModel::Bsc(eps) if !(0.0..=0.5).contains(&eps) => {
                bad(format!("crossover probability {eps} outside [0, 1/2]"))
            }
            ChannelModel::Bawgn(sigma) if !(sigma > 0.0 && sigma.is_finite()) => {
                bad(format!("noise deviation {sigma} must be positive and finite"))
            }
            ChannelModel::DiscreteSymmetric {
                ref levels,
                ref probs,
            } => {
                check_atoms(levels, probs).map_err(|e| match e {
                    Error::InvalidDensity(msg) => Error::InvalidChannel(msg),
                    other => other,
                })
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for ChannelModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelModel::Bec(eps) => write!(f, "bec:{eps}"),
            ChannelModel::Bsc(eps) => write!(f, "bsc:{eps}"),
            ChannelModel::Bawgn(sigma) => write!(f, "bawgn:{sigma}"),
            ChannelModel::DiscreteSymmetric { levels, probs } => {
                if levels.len() == 3 && levels[0] == -INF && levels[1] == 0.0 && levels[2] == INF {
                    write!(f, "triple:{},{},{}", probs[2], probs[1], probs[0])
                } else {
                    write!(f, "discrete:")?;
                    for (i, (l, p)) in levels.iter().zip(probs).enumerate() {
                        if i > 0 {
                            write!(f, ";")?;
                        }
                        write!(f, "{l}@{p}")?;
                    }
                    Ok(())
                }
            }
        }
    }
}

fn parse_real(s: &str) -> Result<f64> {
    let s = s.trim();
    match s {
        "inf" | "+inf" => return Ok(INF),
        "-inf" => return Ok(-INF),
        _ => {}
    }
    s.parse::<f64>()
        .ok()
        .filter(|x| !x.is_nan())
        .ok_or_else(|| Error::Parse(format!("not a number: '{s}'")))
}

impl FromStr for ChannelModel {
    type Err = Error;

    /// Accepts `bec:<ε>`, `bsc:<ε>`, `bawgn:<σ>`, `triple:<p>,<e>,<m>` and
    /// `discrete:<llr>@<prob>;...`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, args) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("channel spec '{s}' lacks a ':'")))?;
        match kind.trim() {
            "bec" => ChannelModel::bec(parse_real(args)?),
            "bsc" => ChannelModel::bsc(parse_real(args)?),
            "bawgn" => ChannelModel::bawgn(parse_real(args)?),
            "triple" => {
                let parts = args.split(',').map(parse_real).collect::<Result<Vec<_>>>()?;
                if parts.len() != 3 {
                    return Err(Error::Parse(format!("triple needs three masses, got '{args}'")));
                }
                ChannelModel::triple(parts[0], parts[1], parts[2])
            }
            "discrete" => {
                let mut levels = Vec::new();
                let mut probs = Vec::new();
                for atom in args.split(';') {
                    let (l, p) = atom
                        .split_once('@')
                        .ok_or_else(|| Error::Parse(format!("atom '{atom}' is not <llr>@<prob>")))?;
                    levels.push(parse_real(l)?);
                    probs.push(parse_real(p)?);
                }
                let ch = ChannelModel::DiscreteSymmetric { levels, probs };
                ch.validate()?;
                Ok(ch)
            }
            other => Err(Error::Parse(format!("unknown channel kind '{other}'"))),
        }
    }
}

/// Message distribution of the decoder with erasures: mass `p` at `+∞`,
/// `e` at `0` and `m` at `−∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripleDensity {
    pub p: f64,
    pub e: f64,
    pub m: f64,
}

/// Capacity, Bhattacharyya parameter and bit-error probability of a triple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripleStats {
    pub capacity: f64,
    pub bhattacharyya: f64,
    pub error_prob: f64,
}

impl TripleDensity {
    /// The noiseless channel `(1, 0, 0)`.
    pub const PERFECT: TripleDensity = TripleDensity { p: 1.0, e: 0.0, m: 0.0 };
    /// The pure erasure `(0, 1, 0)`.
    pub const ERASURE: TripleDensity = TripleDensity { p: 0.0, e: 1.0, m: 0.0 };

    pub fn new(p: f64, e: f64, m: f64) -> Result<Self> {
        if !(p >= 0.0 && e >= 0.0 && m >= 0.0) || ((p + e + m) - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidDensity(format!(
                "triple ({p}, {e}, {m}) is not a probability vector"
            )));
        }
        Ok(TripleDensity { p, e, m })
    }

    pub fn total(&self) -> f64 {
        self.p + self.e + self.m
    }

    /// `I(D) = (m + p)(1 − h2(p / (p + m)))`, zero when `p + m = 0`.
    pub fn capacity(&self) -> f64 {
        let s = self.p + self.m;
        if s <= 0.0 {
            return 0.0;
        }
        s * (1.0 - h2(self.p / s))
    }

    /// `Z(D) = 2√(pm) + e`.
    pub fn bhattacharyya(&self) -> f64 {
        2.0 * (self.p * self.m).sqrt() + self.e
    }

    /// `E(D) = 1 − p − e/2`, written as `m + e/2` to avoid cancellation.
    pub fn error_prob(&self) -> f64 {
        self.m + 0.5 * self.e
    }

    /// `F(D) = p − 4√(pm)`, the submartingale functional behind `L_n`.
    pub fn lower_functional(&self) -> f64 {
        self.p - 4.0 * (self.p * self.m).sqrt()
    }

    /// The same law as an LLR density on `{−∞, 0, +∞}`.
    pub fn to_llr_density(&self) -> LlrDensity {
        LlrDensity::from_parts(vec![-INF, 0.0, INF], vec![self.m, self.e, self.p])
    }

    pub fn stats(&self) -> TripleStats {
        TripleStats {
            capacity: self.capacity(),
            bhattacharyya: self.bhattacharyya(),
            error_prob: self.error_prob(),
        }
    }
}

pub fn triple_stats(d: &TripleDensity) -> TripleStats {
    d.stats()
}

/// A finite probability mass function over an antisymmetric LLR alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct LlrDensity {
    alphabet: Vec<f64>,
    probs: Vec<f64>,
}

fn check_atoms(alphabet: &[f64], probs: &[f64]) -> Result<()> {
    if alphabet.is_empty() || alphabet.len() != probs.len() {
        return Err(Error::InvalidDensity(format!(
            "{} atoms but {} masses",
            alphabet.len(),
            probs.len()
        )));
    }
    if alphabet.iter().any(|x| x.is_nan()) || alphabet.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidDensity("alphabet must be strictly increasing".into()));
    }
    let len = alphabet.len();
    for i in 0..len {
        let (a, b) = (alphabet[i], -alphabet[len - 1 - i]);
        let ok = if a.is_infinite() || b.is_infinite() {
            a == b
        } else {
            (a - b).abs() <= 1e-12 * a.abs().max(1.0)
        };
        if !ok {
            return Err(Error::InvalidDensity(format!(
                "alphabet is not antisymmetric: {a} has no mirror"
            )));
        }
    }
    if probs.iter().any(|&p| p.is_nan() || p < 0.0) {
        return Err(Error::InvalidDensity("negative or NaN mass".into()));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::InvalidDensity(format!("masses sum to {total}, not 1")));
    }
    Ok(())
}

impl LlrDensity {
    pub fn new(alphabet: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        check_atoms(&alphabet, &probs)?;
        Ok(LlrDensity { alphabet, probs })
    }

    /// Builds a density without validation; callers guarantee the invariants
    /// up to floating-point rounding.
    pub(crate) fn from_parts(alphabet: Vec<f64>, probs: Vec<f64>) -> Self {
        debug_assert_eq!(alphabet.len(), probs.len());
        LlrDensity { alphabet, probs }
    }

    pub fn point_mass(x: f64) -> Self {
        if x == 0.0 {
            LlrDensity::from_parts(vec![0.0], vec![1.0])
        } else {
            let a = x.abs();
            let probs = if x > 0.0 { vec![0.0, 1.0] } else { vec![1.0, 0.0] };
            LlrDensity::from_parts(vec![-a, a], probs)
        }
    }

    pub fn alphabet(&self) -> &[f64] {
        &self.alphabet
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.alphabet.iter().copied().zip(self.probs.iter().copied())
    }

    pub fn total_mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Mass on the atom equal to `x` (zero when `x` is not an atom).
    pub fn mass_at(&self, x: f64) -> f64 {
        self.iter().filter(|&(a, _)| a == x).map(|(_, p)| p).sum()
    }

    /// Mean LLR; infinite if an infinite atom carries mass.
    pub fn mean(&self) -> f64 {
        self.iter()
            .filter(|&(_, p)| p > 0.0)
            .map(|(a, p)| if a.is_infinite() { a } else { a * p })
            .sum()
    }

    /// The law of `−X` for `X` distributed as `self`.
    pub fn mirrored(&self) -> Self {
        let alphabet = self.alphabet.iter().rev().map(|&a| -a).collect();
        let probs = self.probs.iter().rev().copied().collect();
        LlrDensity { alphabet, probs }
    }

    /// `Pr(X < 0) + ½ Pr(X = 0)`.
    pub fn error_prob(&self) -> f64 {
        self.iter()
            .map(|(a, p)| {
                if a < 0.0 {
                    p
                } else if a == 0.0 {
                    0.5 * p
                } else {
                    0.0
                }
            })
            .sum()
    }

    /// Collapses the density to its sign pattern.
    pub fn to_triple(&self) -> TripleDensity {
        let mut t = TripleDensity { p: 0.0, e: 0.0, m: 0.0 };
        for (a, p) in self.iter() {
            if a > 0.0 {
                t.p += p;
            } else if a < 0.0 {
                t.m += p;
            } else {
                t.e += p;
            }
        }
        t
    }
}

/// Discretization of a continuous LLR law: `cells` equal cells spanning
/// `[−half_width, half_width]`, tails folded into the end cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LlrGrid {
    pub cells: usize,
    pub half_width: f64,
}

impl Default for LlrGrid {
    fn default() -> Self {
        LlrGrid { cells: 2001, half_width: 30.0 }
    }
}

/// `I(W)` in bits per channel use.
pub fn capacity(ch: &ChannelModel) -> Result<f64> {
    ch.validate()?;
    Ok(match *ch {
        ChannelModel::Bec(eps) => 1.0 - eps,
        ChannelModel::Bsc(eps) => 1.0 - h2(eps),
        ChannelModel::Bawgn(sigma) => bawgn_capacity(sigma),
        ChannelModel::DiscreteSymmetric {
            ref levels,
            ref probs,
        } => discrete_capacity(levels, probs),
    })
}

// Each mirror pair {ℓ, −ℓ} is a BSC once the pair is revealed.
fn discrete_capacity(levels: &[f64], probs: &[f64]) -> f64 {
    let len = levels.len();
    (0..len / 2)
        .map(|i| {
            let (neg, pos) = (probs[i], probs[len - 1 - i]);
            let s = neg + pos;
            if s > 0.0 {
                s * (1.0 - h2(neg / s))
            } else {
                0.0
            }
        })
        .sum()
}

const BAWGN_Z_HALF_WIDTH: f64 = 12.0;
const BAWGN_Z_STEP: f64 = 1e-2;

/// `1 − E[log2(1 + e^{−L})]` with `L = 2(1 + σZ)/σ²`, by the trapezoid rule
/// over the standard normal `Z` on a fixed grid. The integrand is analytic,
/// so the rule is accurate far beyond 1e-6 at this step.
fn bawgn_capacity(sigma: f64) -> f64 {
    let steps = (2.0 * BAWGN_Z_HALF_WIDTH / BAWGN_Z_STEP).round() as usize;
    let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    let mut acc = 0.0;
    for i in 0..=steps {
        let z = -BAWGN_Z_HALF_WIDTH + i as f64 * BAWGN_Z_STEP;
        let llr = 2.0 * (1.0 + sigma * z) / (sigma * sigma);
        // ln(1 + e^{-llr}) without overflow
        let softplus = (-llr).max(0.0) + (-llr.abs()).exp().ln_1p();
        let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
        acc += w * norm * (-0.5 * z * z).exp() * softplus;
    }
    1.0 - acc * BAWGN_Z_STEP / std::f64::consts::LN_2
}

/// The starting state `D₀ = Q(L(Y))` of the three-level process.
pub fn triple_of(ch: &ChannelModel) -> Result<TripleDensity> {
    ch.validate()?;
    Ok(match *ch {
        ChannelModel::Bec(eps) => TripleDensity { p: 1.0 - eps, e: eps, m: 0.0 },
        ChannelModel::Bsc(0.5) => TripleDensity { p: 0.0, e: 1.0, m: 0.0 },
        ChannelModel::Bsc(eps) => TripleDensity { p: 1.0 - eps, e: 0.0, m: eps },
        ChannelModel::Bawgn(sigma) => {
            // L > 0 iff y > 0 with y ~ N(1, σ²)
            TripleDensity {
                p: normal_cdf(1.0 / sigma),
                e: 0.0,
                m: normal_cdf(-1.0 / sigma),
            }
        }
        ChannelModel::DiscreteSymmetric {
            ref levels,
            ref probs,
        } => LlrDensity::from_parts(levels.clone(), probs.clone()).to_triple(),
    })
}

/// The law of the channel LLR under input 0.
///
/// Exact for finite-output channels. For the BAWGN channel the Gaussian LLR
/// law `N(2/σ², 4/σ²)` is integrated over each grid cell and the mass placed
/// at the cell center.
pub fn llr_density(ch: &ChannelModel, grid: &LlrGrid) -> Result<LlrDensity> {
    ch.validate()?;
    match *ch {
        ChannelModel::Bec(eps) => Ok(LlrDensity::from_parts(
            vec![-INF, 0.0, INF],
            vec![0.0, eps, 1.0 - eps],
        )),
        ChannelModel::Bsc(eps) => Ok(if eps == 0.5 {
            LlrDensity::from_parts(vec![0.0], vec![1.0])
        } else {
            let l = bsc_llr(eps);
            LlrDensity::from_parts(vec![-l, l], vec![eps, 1.0 - eps])
        }),
        ChannelModel::Bawgn(sigma) => bawgn_density(sigma, grid),
        ChannelModel::DiscreteSymmetric {
            ref levels,
            ref probs,
        } => Ok(LlrDensity::from_parts(levels.clone(), probs.clone())),
    }
}

fn bsc_llr(eps: f64) -> f64 {
    if eps == 0.0 {
        INF
    } else {
        ((1.0 - eps) / eps).ln()
    }
}

fn bawgn_density(sigma: f64, grid: &LlrGrid) -> Result<LlrDensity> {
    if grid.cells < 2 || !(grid.half_width > 0.0 && grid.half_width.is_finite()) {
        return Err(Error::InvalidGrid(format!(
            "need at least 2 cells on a positive finite range, got {} on ±{}",
            grid.cells, grid.half_width
        )));
    }
    let mean = 2.0 / (sigma * sigma);
    let sd = 2.0 / sigma;
    let width = 2.0 * grid.half_width / grid.cells as f64;
    let mid = (grid.cells as f64 - 1.0) / 2.0;
    // Upper-tail mass beyond x: accurate for both tails.
    let tail = |x: f64| normal_cdf(-(x - mean) / sd);
    let mut alphabet = Vec::with_capacity(grid.cells);
    let mut probs = Vec::with_capacity(grid.cells);
    for k in 0..grid.cells {
        let center = (k as f64 - mid) * width;
        let lo = if k == 0 { -INF } else { center - width / 2.0 };
        let hi = if k + 1 == grid.cells { INF } else { center + width / 2.0 };
        alphabet.push(center);
        probs.push((tail(lo) - tail(hi)).max(0.0));
    }
    Ok(LlrDensity::from_parts(alphabet, probs))
}

/// One LLR observation of the channel under the all-zero input.
pub fn sample_llr<R: Rng + ?Sized>(ch: &ChannelModel, rng: &mut R) -> f64 {
    match *ch {
        ChannelModel::Bec(eps) => {
            if rng.random::<f64>() < eps {
                0.0
            } else {
                INF
            }
        }
        ChannelModel::Bsc(eps) => {
            let l = bsc_llr(eps);
            if rng.random::<f64>() < eps {
                -l
            } else {
                l
            }
        }
        ChannelModel::Bawgn(sigma) => {
            let z: f64 = rng.sample(StandardNormal);
            2.0 * (1.0 + sigma * z) / (sigma * sigma)
        }
        ChannelModel::DiscreteSymmetric {
            ref levels,
            ref probs,
        } => {
            let u = rng.random::<f64>();
            let mut acc = 0.0;
            for (&l, &p) in levels.iter().zip(probs) {
                acc += p;
                if u < acc {
                    return l;
                }
            }
            // Rounding left u above the accumulated total: take the last
            // atom that carries mass.
            levels
                .iter()
                .zip(probs)
                .rev()
                .find(|(_, &p)| p > 0.0)
                .map(|(&l, _)| l)
                .unwrap_or(0.0)
        }
    }
}
