//! Rate-region evaluation, strong-interference certification and Monte Carlo
//! simulation of generalized compress-and-forward (GCF) relaying for
//! primitive multiuser networks whose relay does not know the source
//! codebooks.
//!
//! The crate is organised bottom-up:
//!
//! * [`dist`] holds exact joint distributions and information measures.
//! * [`channel`] builds and validates channels, input policies and the
//!   Gaussian interference-relay parameter record.
//! * [`region`] evaluates GCF, CF and NNC rate regions for a fixed policy and
//!   compares them; [`frontier`] searches the policy space.
//! * [`conditions`] checks the strong-interference conditions.
//! * [`sim`] realizes the random-coding scheme at small blocklengths.
//!
//! All quantities are in bits.

#![allow(clippy::needless_range_loop)]

pub mod channel;
pub mod conditions;
pub mod dist;
pub mod error;
pub mod frontier;
pub mod region;
pub mod sim;

pub use channel::{builtin_channel, load_channel, uniform_policy, Channel, GaussianIfrc, Mode, Policy};
pub use conditions::{
    gaussian_equivalence_check, strong_interference_dmc, strong_interference_gaussian, Certification,
    ConditionReport, GaussianEquivalence,
};
pub use dist::{build_joint, JointDistribution};
pub use error::{Error, Result};
pub use frontier::{frontier_search, FrontierResult, GridSpec, RegionKind, SearchConfig};
pub use region::{
    cf_region_pmarc, gcf_region_marc_m, gcf_region_multicast, gcf_region_pifrc, gcf_region_pmarc,
    nnc_region_pmarc, region_compare, Comparison, RateRegion, Verdict,
};
pub use sim::{simulate, verify_lemma1, Lemma1Config, Lemma1Report, SimConfig, SimReport, Topology};
