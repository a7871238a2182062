//! Seeded Monte Carlo estimation of block and genie-aided bit error rates.
//!
//! Trial `t` under root seed `s` draws everything from ChaCha8 stream `t` of
//! key `s`, so results do not depend on the number or scheduling of worker
//! threads. Counts are integers and sum in any order.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channels::{sample_llr, ChannelModel};
use crate::codec::{encode, ErasureRule, ExactRule, MessageRule, PolarCode, QuantizedRule, ScDecoder};
use crate::density::SynthesizedFamily;
use crate::error::{Error, Result};
use crate::format::{csv_field, sig10};
use crate::quantizer::{Quantizer, Trit};

/// Which SC decoder a simulation runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecoderKind {
    Exact,
    Quantized(Quantizer),
    /// Three-level decoder; channel LLRs are sign-quantized first.
    Erasure,
}

impl fmt::Display for DecoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecoderKind::Exact => f.write_str("exact"),
            DecoderKind::Erasure => f.write_str("erasure"),
            DecoderKind::Quantized(q) => write!(f, "{q}"),
        }
    }
}

impl FromStr for DecoderKind {
    type Err = Error;

    /// `exact`, `erasure`, or a quantizer spec such as `q:delta=0.5,M=8`.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "exact" => Ok(DecoderKind::Exact),
            "erasure" => Ok(DecoderKind::Erasure),
            other if other.starts_with("q:") => Ok(DecoderKind::Quantized(other.parse()?)),
            other => Err(Error::Parse(format!(
                "unknown decoder '{other}' (expected exact, erasure or q:...)"
            ))),
        }
    }
}

/// What the encoder sends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Transmission {
    #[default]
    AllZero,
    /// Uniform information bits; a sanity check of channel symmetry.
    RandomMessage,
}

/// Outcome of a batch of trials.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialReport {
    pub decoder: DecoderKind,
    pub channel: ChannelModel,
    pub n: u32,
    pub rate: f64,
    pub trials: u64,
    pub seed: u64,
    pub block_errors: u64,
    pub bler: f64,
    pub ci95: f64,
    pub per_index_errors: Option<Vec<u64>>,
}

pub const CSV_HEADER: &str = "decoder,channel,n,rate,trials,seed,block_errors,bler,ci95";

/// Normal-approximation 95% radius; zero errors count as one.
pub fn ci95(errors: u64, trials: u64) -> f64 {
    let t = trials as f64;
    let p = errors.max(1) as f64 / t;
    1.96 * (p * (1.0 - p) / t).sqrt()
}

impl TrialReport {
    fn new(
        code: &PolarCode,
        channel: &ChannelModel,
        decoder: DecoderKind,
        trials: u64,
        seed: u64,
        block_errors: u64,
        per_index_errors: Option<Vec<u64>>,
    ) -> Self {
        TrialReport {
            decoder,
            channel: channel.clone(),
            n: code.n(),
            rate: code.rate(),
            trials,
            seed,
            block_errors,
            bler: block_errors as f64 / trials as f64,
            ci95: ci95(block_errors, trials),
            per_index_errors,
        }
    }

    pub fn csv_row(&self) -> String {
        [
            csv_field(&self.decoder.to_string()),
            csv_field(&self.channel.to_string()),
            self.n.to_string(),
            sig10(self.rate),
            self.trials.to_string(),
            self.seed.to_string(),
            self.block_errors.to_string(),
            sig10(self.bler),
            sig10(self.ci95),
        ]
        .join(",")
    }

    /// Empirical per-index error rates, when recorded.
    pub fn index_rates(&self) -> Option<Vec<f64>> {
        let t = self.trials as f64;
        self.per_index_errors
            .as_ref()
            .map(|e| e.iter().map(|&c| c as f64 / t).collect())
    }
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

struct Setup<'a> {
    code: &'a PolarCode,
    channel: &'a ChannelModel,
    transmission: Transmission,
    genie: bool,
    seed: u64,
}

// Per-trial outcome: block error flag and, in genie mode, per-index errors.
fn run_trial<R, L>(dec: &mut ScDecoder<R>, leaf: &L, setup: &Setup<'_>, t: u64) -> (bool, Vec<usize>)
where
    R: MessageRule,
    L: Fn(f64) -> R::Msg,
{
    let code = setup.code;
    let len = code.len();
    let mut rng = trial_rng(setup.seed, t);
    let mut u = vec![0u8; len];
    if setup.transmission == Transmission::RandomMessage {
        for &i in code.info_set() {
            u[i] = rng.random::<bool>() as u8;
        }
    }
    let x = encode(&u, code.n()).expect("length matches the code");
    let channel: Vec<R::Msg> = x
        .iter()
        .map(|&bit| {
            let l = sample_llr(setup.channel, &mut rng);
            leaf(if bit == 1 { -l } else { l })
        })
        .collect();
    if setup.genie {
        // Frozen indices are decided too; the genie supplies every value.
        let none_frozen = vec![false; len];
        let out = dec
            .decode(&channel, &none_frozen, Some(&u), &mut rng)
            .expect("buffers sized to the code");
        let wrong: Vec<usize> = (0..len).filter(|&i| out.u_hat[i] != u[i]).collect();
        let block = wrong.iter().any(|&i| !code.frozen_mask()[i]);
        (block, wrong)
    } else {
        let out = dec
            .decode(&channel, code.frozen_mask(), None, &mut rng)
            .expect("buffers sized to the code");
        let block = code.info_set().iter().any(|&i| out.u_hat[i] != u[i]);
        (block, Vec::new())
    }
}

fn run_all<R, L>(rule: R, leaf: L, setup: &Setup<'_>, trials: u64) -> (u64, Vec<u64>)
where
    R: MessageRule + Clone + Send + Sync,
    R::Msg: Send,
    L: Fn(f64) -> R::Msg + Sync,
{
    let len = setup.code.len();
    let n = setup.code.n();
    (0..trials)
        .into_par_iter()
        .map_init(
            || ScDecoder::new(rule.clone(), n),
            |dec, t| run_trial(dec, &leaf, setup, t),
        )
        .fold(
            || (0u64, vec![0u64; if setup.genie { len } else { 0 }]),
            |(mut blocks, mut counts), (block, wrong)| {
                blocks += block as u64;
                for i in wrong {
                    counts[i] += 1;
                }
                (blocks, counts)
            },
        )
        .reduce(
            || (0u64, vec![0u64; if setup.genie { len } else { 0 }]),
            |(b1, mut c1), (b2, c2)| {
                for (a, b) in c1.iter_mut().zip(&c2) {
                    *a += b;
                }
                (b1 + b2, c1)
            },
        )
}

fn dispatch(decoder: DecoderKind, setup: &Setup<'_>, trials: u64) -> (u64, Vec<u64>) {
    match decoder {
        DecoderKind::Exact => run_all(ExactRule, |l| l, setup, trials),
        DecoderKind::Quantized(q) => run_all(QuantizedRule(q), move |l| q.apply(l), setup, trials),
        DecoderKind::Erasure => run_all(ErasureRule, Trit::from_llr, setup, trials),
    }
}

fn validate(channel: &ChannelModel, trials: u64) -> Result<()> {
    channel.validate()?;
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    Ok(())
}

/// Block error rate of `code` over `channel`; a block error is any wrong
/// information bit.
pub fn simulate_block_error(
    code: &PolarCode,
    channel: &ChannelModel,
    decoder: DecoderKind,
    trials: u64,
    seed: u64,
) -> Result<TrialReport> {
    simulate_with(code, channel, decoder, trials, seed, Transmission::AllZero)
}

pub fn simulate_with(
    code: &PolarCode,
    channel: &ChannelModel,
    decoder: DecoderKind,
    trials: u64,
    seed: u64,
    transmission: Transmission,
) -> Result<TrialReport> {
    validate(channel, trials)?;
    let setup = Setup { code, channel, transmission, genie: false, seed };
    let (blocks, _) = dispatch(decoder, &setup, trials);
    Ok(TrialReport::new(code, channel, decoder, trials, seed, blocks, None))
}

/// Genie-aided decoding: the true bits are fed back after every decision.
///
/// `per_index_errors` counts wrong decisions at every index, frozen or not;
/// `block_errors` counts trials with a wrong information-index decision.
pub fn genie_bit_errors(
    code: &PolarCode,
    channel: &ChannelModel,
    decoder: DecoderKind,
    trials: u64,
    seed: u64,
) -> Result<TrialReport> {
    validate(channel, trials)?;
    let setup = Setup { code, channel, transmission: Transmission::AllZero, genie: true, seed };
    let (blocks, counts) = dispatch(decoder, &setup, trials);
    Ok(TrialReport::new(code, channel, decoder, trials, seed, blocks, Some(counts)))
}

/// `Σ_{i ∈ info_set} Pr(Ê_i)`.
pub fn union_bound(family: &SynthesizedFamily, info_set: &[usize]) -> Result<f64> {
    let len = family.len();
    info_set.iter().try_fold(0.0, |acc, &i| {
        if i >= len {
            return Err(Error::IndexOutOfRange { index: i, len });
        }
        Ok(acc + family.error_prob(i))
    })
}
