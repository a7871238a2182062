//! Polar transform and successive-cancellation decoders.
//!
//! The generator is `G_N = G₂^{⊗n}` with rows labeled `0..N` top to bottom and
//! no bit-reversal. Bit `u_i` is decided on the tree channel `T(i)`: reading
//! the binary expansion `b₁…bₙ` of `i` (most significant bit first), level
//! `j` of the tree holds check nodes when `b_j = 0` and variable nodes when
//! `b_j = 1`.

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::llr;
use crate::quantizer::{Quantizer, Trit};

/// Largest supported block exponent.
pub const MAX_EXPONENT: u32 = 30;

/// A polar code: block length `2ⁿ`, information set, frozen bits fixed to 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolarCode {
    n: u32,
    info_set: Vec<usize>,
    frozen: Vec<bool>,
}

impl PolarCode {
    pub fn new(n: u32, info_set: impl IntoIterator<Item = usize>) -> Result<Self> {
        if n > MAX_EXPONENT {
            return Err(Error::InvalidCode(format!("exponent {n} above {MAX_EXPONENT}")));
        }
        let len = 1usize << n;
        let mut info: Vec<usize> = info_set.into_iter().collect();
        info.sort_unstable();
        info.dedup();
        if let Some(&bad) = info.iter().find(|&&i| i >= len) {
            return Err(Error::IndexOutOfRange { index: bad, len });
        }
        let mut frozen = vec![true; len];
        for &i in &info {
            frozen[i] = false;
        }
        Ok(PolarCode { n, info_set: info, frozen })
    }

    /// Every index carries information.
    pub fn full(n: u32) -> Result<Self> {
        PolarCode::new(n, 0..(1usize << n.min(MAX_EXPONENT)))
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn len(&self) -> usize {
        1 << self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn info_set(&self) -> &[usize] {
        &self.info_set
    }

    pub fn frozen_mask(&self) -> &[bool] {
        &self.frozen
    }

    pub fn dimension(&self) -> usize {
        self.info_set.len()
    }

    pub fn rate(&self) -> f64 {
        self.info_set.len() as f64 / self.len() as f64
    }
}

/// The level roles `b₁…bₙ` of a tree channel; `true` is a variable level.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TreePath(Vec<bool>);

impl TreePath {
    pub fn new(bits: Vec<bool>) -> Self {
        TreePath(bits)
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Index with `b₁` as the most significant bit.
    pub fn to_index(&self) -> usize {
        self.0.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
    }
}

impl fmt::Display for TreePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

pub fn index_to_path(i: usize, n: u32) -> Result<TreePath> {
    let len = 1usize
        .checked_shl(n)
        .filter(|_| n <= MAX_EXPONENT)
        .ok_or_else(|| Error::InvalidCode(format!("exponent {n} above {MAX_EXPONENT}")))?;
    if i >= len {
        return Err(Error::IndexOutOfRange { index: i, len });
    }
    Ok(TreePath((0..n).rev().map(|shift| (i >> shift) & 1 == 1).collect()))
}

/// `x = u·G_N` over GF(2) by the butterfly recursion.
pub fn encode(u: &[u8], n: u32) -> Result<Vec<u8>> {
    let len = 1usize << n;
    if u.len() != len {
        return Err(Error::LengthMismatch { expected: len, actual: u.len() });
    }
    let mut x: Vec<u8> = u.iter().map(|b| b & 1).collect();
    let mut half = 1;
    while half < len {
        for block in x.chunks_mut(2 * half) {
            let (top, bottom) = block.split_at_mut(half);
            for (t, b) in top.iter_mut().zip(bottom.iter()) {
                *t ^= *b;
            }
        }
        half *= 2;
    }
    Ok(x)
}

/// Node arithmetic of an SC decoder.
pub trait MessageRule {
    type Msg: Copy + Default;

    /// Check node, combining the two halves of a block.
    fn check(&self, a: Self::Msg, b: Self::Msg) -> Self::Msg;

    /// Variable node `b + (−1)^flip · a`, where `flip` is the partial sum of
    /// the already decided upper half.
    fn var(&self, a: Self::Msg, b: Self::Msg, flip: bool) -> Self::Msg;

    /// Hard decision on a root message; `None` on an exact tie.
    fn decide(&self, m: Self::Msg) -> Option<u8>;
}

/// Exact LLR arithmetic.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactRule;

impl MessageRule for ExactRule {
    type Msg = f64;

    #[inline]
    fn check(&self, a: f64, b: f64) -> f64 {
        llr::boxplus(a, b)
    }

    #[inline]
    fn var(&self, a: f64, b: f64, flip: bool) -> f64 {
        llr::sum(b, if flip { -a } else { a })
    }

    #[inline]
    fn decide(&self, m: f64) -> Option<u8> {
        sign_decision(m)
    }
}

/// Exact arithmetic followed by `Q` at every node output.
#[derive(Debug, Clone, Copy)]
pub struct QuantizedRule(pub Quantizer);

impl MessageRule for QuantizedRule {
    type Msg = f64;

    #[inline]
    fn check(&self, a: f64, b: f64) -> f64 {
        self.0.apply(llr::boxplus(a, b))
    }

    #[inline]
    fn var(&self, a: f64, b: f64, flip: bool) -> f64 {
        self.0.apply(llr::sum(b, if flip { -a } else { a }))
    }

    #[inline]
    fn decide(&self, m: f64) -> Option<u8> {
        sign_decision(m)
    }
}

/// The symbolic `{−∞, 0, +∞}` algebra of the decoder with erasures.
#[derive(Debug, Clone, Copy, Default)]
pub struct ErasureRule;

impl MessageRule for ErasureRule {
    type Msg = Trit;

    #[inline]
    fn check(&self, a: Trit, b: Trit) -> Trit {
        a.check(b)
    }

    #[inline]
    fn var(&self, a: Trit, b: Trit, flip: bool) -> Trit {
        b.sum(if flip { a.negate() } else { a })
    }

    #[inline]
    fn decide(&self, m: Trit) -> Option<u8> {
        match m {
            Trit::Plus => Some(0),
            Trit::Minus => Some(1),
            Trit::Erasure => None,
        }
    }
}

#[inline]
fn sign_decision(m: f64) -> Option<u8> {
    if m > 0.0 {
        Some(0)
    } else if m < 0.0 {
        Some(1)
    } else {
        None
    }
}

/// Decisions and the root message seen at every index.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoded<M> {
    pub u_hat: Vec<u8>,
    pub roots: Vec<M>,
}

/// Reusable SC decoder state for one block length.
///
/// Messages of a node covering `s` leaves live in `llr[s..2s]` and its
/// re-encoded partial sums in `bits[s..2s]`; the channel sits at `llr[N..2N]`.
pub struct ScDecoder<R: MessageRule> {
    rule: R,
    n: u32,
    llr: Vec<R::Msg>,
    bits: Vec<u8>,
}

struct Pass<'a, G: ?Sized> {
    frozen: &'a [bool],
    genie: Option<&'a [u8]>,
    rng: &'a mut G,
}

impl<R: MessageRule> ScDecoder<R> {
    pub fn new(rule: R, n: u32) -> Self {
        let len = 1usize << n;
        ScDecoder {
            rule,
            n,
            llr: vec![R::Msg::default(); 2 * len],
            bits: vec![0; 2 * len],
        }
    }

    pub fn len(&self) -> usize {
        1 << self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Decodes one block.
    ///
    /// Frozen indices are set to 0 without consulting the root message.
    /// With `genie`, each decision is recorded but the true bit `genie[i]`
    /// is fed back to later indices instead. Root ties draw a fair coin from
    /// `rng`; nothing else consumes randomness.
    pub fn decode<G: Rng + ?Sized>(
        &mut self,
        channel: &[R::Msg],
        frozen: &[bool],
        genie: Option<&[u8]>,
        rng: &mut G,
    ) -> Result<Decoded<R::Msg>> {
        let len = self.len();
        for actual in [channel.len(), frozen.len(), genie.map_or(len, <[u8]>::len)] {
            if actual != len {
                return Err(Error::LengthMismatch { expected: len, actual });
            }
        }
        self.llr[len..].copy_from_slice(channel);
        let mut out = Decoded {
            u_hat: vec![0; len],
            roots: vec![R::Msg::default(); len],
        };
        let mut pass = Pass { frozen, genie, rng };
        self.descend(len, 0, &mut pass, &mut out);
        Ok(out)
    }

    fn descend<G: Rng + ?Sized>(
        &mut self,
        s: usize,
        first: usize,
        pass: &mut Pass<'_, G>,
        out: &mut Decoded<R::Msg>,
    ) {
        if s == 1 {
            let root = self.llr[1];
            let decision = if pass.frozen[first] {
                0
            } else {
                match self.rule.decide(root) {
                    Some(b) => b,
                    None => pass.rng.random::<bool>() as u8,
                }
            };
            out.u_hat[first] = decision;
            out.roots[first] = root;
            self.bits[1] = pass.genie.map_or(decision, |g| g[first] & 1);
            return;
        }
        let h = s / 2;
        for k in 0..h {
            self.llr[h + k] = self.rule.check(self.llr[s + k], self.llr[s + h + k]);
        }
        self.descend(h, first, pass, out);
        self.bits.copy_within(h..s, s);
        for k in 0..h {
            self.llr[h + k] =
                self.rule
                    .var(self.llr[s + k], self.llr[s + h + k], self.bits[s + k] == 1);
        }
        self.descend(h, first + h, pass, out);
        for k in 0..h {
            let lower = self.bits[h + k];
            self.bits[s + k] ^= lower;
            self.bits[s + h + k] = lower;
        }
    }

    #[cfg(test)]
    pub(crate) fn messages(&self) -> &[R::Msg] {
        &self.llr[1..]
    }
}

fn check_len(code: &PolarCode, actual: usize) -> Result<()> {
    if actual != code.len() {
        return Err(Error::LengthMismatch { expected: code.len(), actual });
    }
    Ok(())
}

/// Exact SC decoding; returns the decisions and the root LLR of every index.
pub fn sc_decode<G: Rng + ?Sized>(
    llrs: &[f64],
    code: &PolarCode,
    rng: &mut G,
) -> Result<(Vec<u8>, Vec<f64>)> {
    check_len(code, llrs.len())?;
    let mut dec = ScDecoder::new(ExactRule, code.n());
    let out = dec.decode(llrs, code.frozen_mask(), None, rng)?;
    Ok((out.u_hat, out.roots))
}

/// `SCD_Q`: channel LLRs are quantized first, then every node output.
pub fn quantized_sc_decode<G: Rng + ?Sized>(
    llrs: &[f64],
    code: &PolarCode,
    q: &Quantizer,
    rng: &mut G,
) -> Result<(Vec<u8>, Vec<f64>)> {
    check_len(code, llrs.len())?;
    let leaves: Vec<f64> = llrs.iter().map(|&x| q.apply(x)).collect();
    let mut dec = ScDecoder::new(QuantizedRule(*q), code.n());
    let out = dec.decode(&leaves, code.frozen_mask(), None, rng)?;
    Ok((out.u_hat, out.roots))
}

/// The decoder with erasures on sign-quantized inputs.
pub fn erasure_sc_decode<G: Rng + ?Sized>(
    signs: &[Trit],
    code: &PolarCode,
    rng: &mut G,
) -> Result<Vec<u8>> {
    check_len(code, signs.len())?;
    let mut dec = ScDecoder::new(ErasureRule, code.n());
    Ok(dec.decode(signs, code.frozen_mask(), None, rng)?.u_hat)
}
