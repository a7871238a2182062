//! Density evolution over tree channels and code construction.

use rayon::prelude::*;

use crate::channels::{self, ChannelModel, LlrDensity, LlrGrid, TripleDensity};
use crate::codec::TreePath;
use crate::error::{Error, Result};
use crate::format::sig10;
use crate::llr;
use crate::quantizer::{quantize_density, Quantizer};

/// Density of the variable-node output for two i.i.d. inputs.
pub fn triple_plus(d: &TripleDensity) -> TripleDensity {
    let TripleDensity { p, e, m } = *d;
    TripleDensity {
        p: p * p + 2.0 * p * e,
        e: e * e + 2.0 * p * m,
        m: m * m + 2.0 * e * m,
    }
}

/// Density of the check-node output for two i.i.d. inputs.
pub fn triple_minus(d: &TripleDensity) -> TripleDensity {
    let TripleDensity { p, e, m } = *d;
    TripleDensity {
        p: p * p + m * m,
        // 1 − (1 − e)², expanded so that e = 0 stays exactly 0
        e: e * (2.0 - e),
        m: 2.0 * p * m,
    }
}

/// Folds the transforms along the path, level 1 first.
pub fn evolve_triple(d0: &TripleDensity, path: &TreePath) -> TripleDensity {
    path.bits().iter().fold(*d0, |d, &variable| {
        if variable {
            triple_plus(&d)
        } else {
            triple_minus(&d)
        }
    })
}

/// Bit error probability `Pr(m < 0) + ½ Pr(m = 0)` of a root density.
pub fn bit_error_prob(d: &LlrDensity) -> f64 {
    d.error_prob()
}

/// Pairwise output tables of one quantizer.
///
/// Densities on the alphabet are plain mass vectors indexed like
/// `Quantizer::levels`; every node rule is an `|Q|²` push-forward through
/// these tables.
pub struct Evolver {
    quantizer: Quantizer,
    levels: Vec<f64>,
    var_table: Vec<u32>,
    check_table: Vec<u32>,
}

impl Evolver {
    pub fn new(quantizer: Quantizer) -> Self {
        let levels = quantizer.levels();
        let size = levels.len();
        let mut var_table = Vec::with_capacity(size * size);
        let mut check_table = Vec::with_capacity(size * size);
        for &a in &levels {
            for &b in &levels {
                var_table.push(quantizer.slot(llr::sum(a, b)) as u32);
                check_table.push(quantizer.slot(llr::boxplus(a, b)) as u32);
            }
        }
        Evolver { quantizer, levels, var_table, check_table }
    }

    pub fn quantizer(&self) -> &Quantizer {
        &self.quantizer
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// Masses of `d` on the alphabet; errors on atoms off the alphabet.
    pub fn masses_of(&self, d: &LlrDensity) -> Result<Vec<f64>> {
        let mut masses = vec![0.0; self.levels.len()];
        for (x, p) in d.iter() {
            if p == 0.0 {
                continue;
            }
            let slot = self
                .quantizer
                .level_slot(x)
                .ok_or(Error::SupportOutsideAlphabet(x))?;
            masses[slot] += p;
        }
        Ok(masses)
    }

    pub fn density(&self, masses: Vec<f64>) -> LlrDensity {
        LlrDensity::from_parts(self.levels.clone(), masses)
    }

    fn push_forward(&self, table: &[u32], d1: &[f64], d2: &[f64]) -> Vec<f64> {
        let size = self.levels.len();
        let mut out = vec![0.0; size];
        let support2: Vec<(usize, f64)> = d2
            .iter()
            .copied()
            .enumerate()
            .filter(|&(_, p)| p > 0.0)
            .collect();
        for (i, &p1) in d1.iter().enumerate() {
            if p1 == 0.0 {
                continue;
            }
            let row = &table[i * size..(i + 1) * size];
            for &(j, p2) in &support2 {
                out[row[j] as usize] += p1 * p2;
            }
        }
        out
    }

    pub fn var(&self, d1: &[f64], d2: &[f64]) -> Vec<f64> {
        self.push_forward(&self.var_table, d1, d2)
    }

    pub fn check(&self, d1: &[f64], d2: &[f64]) -> Vec<f64> {
        self.push_forward(&self.check_table, d1, d2)
    }
}

/// Law of `Q(X + Y)` for independent `X ~ d1`, `Y ~ d2`.
pub fn de_var(d1: &LlrDensity, d2: &LlrDensity, q: &Quantizer) -> Result<LlrDensity> {
    let ev = Evolver::new(*q);
    let out = ev.var(&ev.masses_of(d1)?, &ev.masses_of(d2)?);
    Ok(ev.density(out))
}

/// Law of `Q(2 atanh(tanh(X/2) tanh(Y/2)))` for independent `X ~ d1`, `Y ~ d2`.
pub fn de_check(d1: &LlrDensity, d2: &LlrDensity, q: &Quantizer) -> Result<LlrDensity> {
    let ev = Evolver::new(*q);
    let out = ev.check(&ev.masses_of(d1)?, &ev.masses_of(d2)?);
    Ok(ev.density(out))
}

/// Root-message densities of all `2ⁿ` tree channels, index `i` for `T(i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesizedFamily {
    n: u32,
    quantizer: Quantizer,
    alphabet: Vec<f64>,
    masses: Vec<Vec<f64>>,
}

impl SynthesizedFamily {
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn quantizer(&self) -> &Quantizer {
        &self.quantizer
    }

    pub fn density(&self, i: usize) -> LlrDensity {
        LlrDensity::from_parts(self.alphabet.clone(), self.masses[i].clone())
    }

    pub fn error_probs(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.error_prob(i)).collect()
    }

    pub fn error_prob(&self, i: usize) -> f64 {
        self.alphabet
            .iter()
            .zip(&self.masses[i])
            .map(|(&a, &p)| {
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

    /// CSV with header `index,p_err`, plus `p,e,m` for the three-level
    /// quantizer.
    pub fn to_csv(&self) -> String {
        let three = self.quantizer == Quantizer::Sign;
        let mut out = String::from(if three { "index,p_err,p,e,m\n" } else { "index,p_err\n" });
        for i in 0..self.len() {
            out.push_str(&format!("{},{}", i, sig10(self.error_prob(i))));
            if three {
                let t = self.density(i).to_triple();
                out.push_str(&format!(",{},{},{}", sig10(t.p), sig10(t.e), sig10(t.m)));
            }
            out.push('\n');
        }
        out
    }
}

/// Default ceiling on `|Q|²·N·log N` for [`synthesize`].
pub const DEFAULT_WORK_CEILING: f64 = 2e11;

/// Evolves `d0` through every tree channel of height `n`.
///
/// Stage `j` holds the `2ʲ` densities of the `j`-bit prefixes; the check
/// child of prefix `b` becomes `2b` and the variable child `2b + 1`, so the
/// final position is the index whose expansion is the path.
pub fn synthesize(
    d0: &LlrDensity,
    n: u32,
    q: &Quantizer,
    work_ceiling: f64,
) -> Result<SynthesizedFamily> {
    let size = q.size() as f64;
    let len = 2f64.powi(n as i32);
    let estimate = size * size * len * (n.max(1) as f64);
    if estimate > work_ceiling {
        return Err(Error::ResourceLimit { estimate, ceiling: work_ceiling });
    }
    let ev = Evolver::new(*q);
    let mut stage = vec![ev.masses_of(d0)?];
    for _ in 0..n {
        stage = stage
            .par_iter()
            .flat_map_iter(|d| [ev.check(d, d), ev.var(d, d)])
            .collect();
    }
    Ok(SynthesizedFamily {
        n,
        quantizer: *q,
        alphabet: ev.levels().to_vec(),
        masses: stage,
    })
}

/// The `k` indices of smallest error probability, ascending; ties go to the
/// smaller index.
pub fn choose_info_set(error_probs: &[f64], k: usize) -> Result<Vec<usize>> {
    if k > error_probs.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot choose {k} of {} indices",
            error_probs.len()
        )));
    }
    let mut order: Vec<usize> = (0..error_probs.len()).collect();
    order.sort_by(|&a, &b| error_probs[a].total_cmp(&error_probs[b]).then(a.cmp(&b)));
    let mut chosen = order[..k].to_vec();
    chosen.sort_unstable();
    Ok(chosen)
}

/// Law of the quantized channel message `Q(L(Y))`.
///
/// For the Gaussian channel the mass of each level is the exact Gaussian
/// probability of its preimage under `Q`; finite-output channels are pushed
/// forward atom by atom.
pub fn leaf_density(ch: &ChannelModel, q: &Quantizer) -> Result<LlrDensity> {
    ch.validate()?;
    match (ch, q) {
        (&ChannelModel::Bawgn(sigma), Quantizer::Uniform(spec)) => {
            let mean = 2.0 / (sigma * sigma);
            let sd = 2.0 / sigma;
            let tail = |x: f64| channels::normal_cdf(-(x - mean) / sd);
            let levels = spec.levels();
            let k = levels.len();
            let probs = (0..k)
                .map(|j| {
                    let lo = if j == 0 { f64::NEG_INFINITY } else { levels[j] - spec.delta() / 2.0 };
                    let hi = if j + 1 == k { f64::INFINITY } else { levels[j] + spec.delta() / 2.0 };
                    (tail(lo) - tail(hi)).max(0.0)
                })
                .collect();
            Ok(LlrDensity::from_parts(levels, probs))
        }
        (ChannelModel::Bawgn(_), Quantizer::Sign) => {
            let t = channels::triple_of(ch)?;
            Ok(LlrDensity::from_parts(q.levels(), vec![t.m, t.e, t.p]))
        }
        _ => Ok(quantize_density(&channels::llr_density(ch, &LlrGrid::default())?, q)),
    }
}

// 2q(1 − q), written as ½ − 2(½ − q)² near ½ so the step stays strictly
// increasing in floating point wherever the result is below ½.
fn check_step(q: f64) -> f64 {
    if q < 0.25 {
        2.0 * q * (1.0 - q)
    } else {
        let d = 0.5 - q;
        0.5 - 2.0 * d * d
    }
}

/// Error probability of the single-bit (Gallager) decoder along a path.
///
/// A check level maps `q ↦ 2q(1 − q)`; a variable level with two inputs and
/// a fair coin on disagreement maps `q ↦ q² + q(1 − q) = q`. The returned
/// trajectory starts with `q0`.
pub fn gallager_demo(q0: f64, path: &TreePath) -> Result<Vec<f64>> {
    if !(0.0..=0.5).contains(&q0) {
        return Err(Error::InvalidArgument(format!("error probability {q0} outside [0, 1/2]")));
    }
    let mut trajectory = Vec::with_capacity(path.len() + 1);
    trajectory.push(q0);
    let mut q = q0;
    for &variable in path.bits() {
        // q² + ½·2q(1 − q) collapses to q exactly
        if !variable {
            q = check_step(q);
        }
        trajectory.push(q);
    }
    Ok(trajectory)
}
