//! Polar codes under quantized successive-cancellation decoding.
//!
//! The crate covers the whole pipeline for studying how much rate a polar
//! code loses when its SC decoder runs on a small message alphabet:
//!
//! - [`channels`]: BMS channel models, their LLR laws and the `(p, e, m)`
//!   three-atom densities of the decoder with erasures.
//! - [`quantizer`]: the uniform `(Δ, M)` message quantizer and the
//!   three-level sign quantizer.
//! - [`codec`]: the polar transform and the exact, quantized and erasure SC
//!   decoders.
//! - [`density`]: density evolution over tree channels and code
//!   construction.
//! - [`bounds`]: the super/submartingale bound sequences `U_n`, `L_n` on the
//!   achievable rate of the three-level decoder and the capacity curves.
//! - [`sim`]: seeded Monte Carlo block- and bit-error estimation.
//! - [`cli`]: the `polarq` command-line front end.

pub mod bounds;
pub mod channels;
pub mod cli;
pub mod codec;
pub mod density;
pub mod error;
pub mod format;
pub mod llr;
pub mod quantizer;
pub mod sim;

pub use bounds::{BoundsSeries, CurveFamily, CurveRow};
pub use channels::{ChannelModel, LlrDensity, TripleDensity};
pub use codec::{PolarCode, TreePath};
pub use density::SynthesizedFamily;
pub use error::{Error, Result};
pub use quantizer::{Quantizer, QuantizerSpec, Trit};
pub use sim::{DecoderKind, TrialReport};
