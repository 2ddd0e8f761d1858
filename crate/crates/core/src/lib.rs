//! Convolutional sparse coding toolkit.
//!
//! - [`conv_dict`]: local and global convolutional dictionaries, codes, stripes.
//! - [`measures`]: `ℓ0,∞`, mutual and shifted coherences, stripe coherence.
//! - [`spark`]: brute-force Spark / Stripe-Spark, Gershgorin brackets, uniqueness.
//! - [`pursuit`]: OMP, ADMM basis pursuit, recovery conditions.
//! - [`dictgen`]: random and low-coherence local dictionaries, random signals.
//! - [`harness`]: phase-transition and coherence-scatter experiments.
//! - [`io`]: text formats for dictionaries, codes and signals.

pub mod conv_dict;
pub mod dictgen;
pub mod error;
pub mod harness;
pub mod io;
pub mod measures;
pub mod pursuit;
pub mod spark;

pub use conv_dict::{build_global, ConvDictionary, LocalDictionary, SparseCode, StripeDictionary};
pub use error::{CscError, Result};
