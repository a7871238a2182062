//! Message quantizers.
//!
//! [`QuantizerSpec`] is the uniform quantizer with level spacing `Δ` and
//! truncation `M`, alphabet `{−M, …, −Δ, 0, Δ, …, M}` of size `1 + 2M/Δ`.
//! The decoder with erasures instead uses the symbolic alphabet
//! `{−∞, 0, +∞}` of [`sign_quantize`], exposed both as [`Quantizer::Sign`]
//! on LLR values and as [`Trit`] for the dedicated decoder.

use std::fmt;
use std::str::FromStr;

use crate::channels::LlrDensity;
use crate::error::{Error, Result};

const INF: f64 = f64::INFINITY;

/// Uniform quantizer parameters; `M/Δ` is a positive integer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizerSpec {
    delta: f64,
    m_sat: f64,
    steps: u32,
}

impl QuantizerSpec {
    pub fn new(delta: f64, m_sat: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite() && m_sat > 0.0 && m_sat.is_finite()) {
            return Err(Error::InvalidQuantizer(format!(
                "need Δ > 0 and M > 0, got Δ={delta}, M={m_sat}"
            )));
        }
        let ratio = m_sat / delta;
        let steps = ratio.round();
        if steps < 1.0 || (ratio - steps).abs() > 1e-9 * ratio.max(1.0) || steps > u32::MAX as f64 {
            return Err(Error::InvalidQuantizer(format!(
                "M/Δ = {ratio} is not a positive integer"
            )));
        }
        Ok(QuantizerSpec { delta, m_sat, steps: steps as u32 })
    }

    /// The quantizer with `size` levels on `[−M, M]`, i.e. `Δ = 2M/(size − 1)`.
    pub fn with_size(size: usize, m_sat: f64) -> Result<Self> {
        if size < 3 || size.is_multiple_of(2) {
            return Err(Error::InvalidQuantizer(format!(
                "alphabet size must be odd and at least 3, got {size}"
            )));
        }
        let steps = ((size - 1) / 2) as f64;
        QuantizerSpec::new(m_sat / steps, m_sat)
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn m_sat(&self) -> f64 {
        self.m_sat
    }

    /// `M/Δ`.
    pub fn steps(&self) -> u32 {
        self.steps
    }

    /// `|Q| = 1 + 2M/Δ`.
    pub fn size(&self) -> usize {
        1 + 2 * self.steps as usize
    }

    /// `{kΔ : k = −M/Δ … M/Δ}`, strictly increasing.
    pub fn levels(&self) -> Vec<f64> {
        let k = self.steps as i64;
        (-k..=k).map(|j| self.level(j)).collect()
    }

    #[inline]
    fn level(&self, j: i64) -> f64 {
        j as f64 * self.delta
    }

    /// Signed level index of `Q(x)`, in `−M/Δ ..= M/Δ`.
    #[inline]
    pub fn quantize_index(&self, x: f64) -> i64 {
        let k = self.steps as i64;
        if x.is_infinite() || x.abs() > self.m_sat {
            return if x > 0.0 { k } else { -k };
        }
        // f64::round breaks ties away from zero, which keeps Q odd.
        ((x / self.delta).round() as i64).clamp(-k, k)
    }

    /// `Q(x)`: nearest level, ties away from zero, `sign(x)·M` outside
    /// `[−M, M]`.
    #[inline]
    pub fn quantize(&self, x: f64) -> f64 {
        self.level(self.quantize_index(x))
    }
}

/// The three-way sign map onto `{−∞, 0, +∞}`.
#[inline]
pub fn sign_quantize(x: f64) -> f64 {
    if x > 0.0 {
        INF
    } else if x < 0.0 {
        -INF
    } else {
        0.0
    }
}

/// A message of the decoder with erasures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum Trit {
    Minus,
    #[default]
    Erasure,
    Plus,
}

impl Trit {
    pub fn from_llr(x: f64) -> Trit {
        if x > 0.0 {
            Trit::Plus
        } else if x < 0.0 {
            Trit::Minus
        } else {
            Trit::Erasure
        }
    }

    pub fn to_llr(self) -> f64 {
        match self {
            Trit::Minus => -INF,
            Trit::Erasure => 0.0,
            Trit::Plus => INF,
        }
    }

    /// Check-node rule: product of signs, erasure absorbs.
    #[inline]
    pub fn check(self, other: Trit) -> Trit {
        match (self, other) {
            (Trit::Erasure, _) | (_, Trit::Erasure) => Trit::Erasure,
            (a, b) if a == b => Trit::Plus,
            _ => Trit::Minus,
        }
    }

    /// Variable-node rule: saturating addition, `∞ + −∞ = 0`.
    #[inline]
    pub fn sum(self, other: Trit) -> Trit {
        match (self, other) {
            (Trit::Erasure, x) | (x, Trit::Erasure) => x,
            (a, b) if a == b => a,
            _ => Trit::Erasure,
        }
    }

    #[inline]
    pub fn negate(self) -> Trit {
        match self {
            Trit::Minus => Trit::Plus,
            Trit::Erasure => Trit::Erasure,
            Trit::Plus => Trit::Minus,
        }
    }
}

/// A message quantizer as used by the decoders and density evolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Quantizer {
    Uniform(QuantizerSpec),
    /// The three-level `{−∞, 0, +∞}` quantizer.
    Sign,
}

impl From<QuantizerSpec> for Quantizer {
    fn from(spec: QuantizerSpec) -> Self {
        Quantizer::Uniform(spec)
    }
}

impl Quantizer {
    pub fn size(&self) -> usize {
        match self {
            Quantizer::Uniform(spec) => spec.size(),
            Quantizer::Sign => 3,
        }
    }

    pub fn levels(&self) -> Vec<f64> {
        match self {
            Quantizer::Uniform(spec) => spec.levels(),
            Quantizer::Sign => vec![-INF, 0.0, INF],
        }
    }

    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        match self {
            Quantizer::Uniform(spec) => spec.quantize(x),
            Quantizer::Sign => sign_quantize(x),
        }
    }

    /// Position of `Q(x)` in [`Quantizer::levels`].
    #[inline]
    pub fn slot(&self, x: f64) -> usize {
        match self {
            Quantizer::Uniform(spec) => (spec.quantize_index(x) + spec.steps as i64) as usize,
            Quantizer::Sign => Trit::from_llr(x) as usize,
        }
    }

    /// Position of `x` in the alphabet, or `None` when `x` is not a level.
    pub fn level_slot(&self, x: f64) -> Option<usize> {
        match self {
            Quantizer::Uniform(spec) => {
                if x.is_nan() || x.is_infinite() || x.abs() > spec.m_sat * (1.0 + 1e-12) {
                    return None;
                }
                let j = (x / spec.delta).round();
                ((x - j * spec.delta).abs() <= 1e-9 * spec.delta)
                    .then(|| (j as i64 + spec.steps as i64) as usize)
            }
            Quantizer::Sign => (x == 0.0 || x.is_infinite()).then(|| Trit::from_llr(x) as usize),
        }
    }
}

impl fmt::Display for Quantizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Quantizer::Uniform(spec) => write!(f, "q:delta={},M={}", spec.delta, spec.m_sat),
            Quantizer::Sign => write!(f, "q:sign"),
        }
    }
}

impl FromStr for Quantizer {
    type Err = Error;

    /// Accepts `q:sign` and `q:delta=<Δ>,M=<M>`.
    fn from_str(s: &str) -> Result<Self> {
        let body = s
            .trim()
            .strip_prefix("q:")
            .ok_or_else(|| Error::Parse(format!("quantizer spec '{s}' must start with 'q:'")))?;
        if body == "sign" {
            return Ok(Quantizer::Sign);
        }
        let (mut delta, mut m_sat) = (None, None);
        for part in body.split(',') {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got '{part}'")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("not a number: '{value}'")))?;
            match key.trim() {
                "delta" => delta = Some(value),
                "M" => m_sat = Some(value),
                other => return Err(Error::Parse(format!("unknown quantizer key '{other}'"))),
            }
        }
        match (delta, m_sat) {
            (Some(d), Some(m)) => Ok(Quantizer::Uniform(QuantizerSpec::new(d, m)?)),
            _ => Err(Error::Parse(format!("quantizer '{s}' needs both delta and M"))),
        }
    }
}

/// Push-forward of `d` through `q`, supported on `q.levels()`.
pub fn quantize_density(d: &LlrDensity, q: &Quantizer) -> LlrDensity {
    let levels = q.levels();
    let mut probs = vec![0.0; levels.len()];
    for (x, p) in d.iter() {
        probs[q.slot(x)] += p;
    }
    LlrDensity::from_parts(levels, probs)
}
