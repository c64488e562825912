//! Restricted two-adaptive bitprobe schemes: parsing and validation, a
//! storability oracle, the node/path/universe combinatorics built on top of
//! sets, adversarial certificates, the scheme-modification pipeline, and
//! numeric bound checks.

pub mod adversary;
pub mod analysis;
pub mod fixtures;
pub mod scheme;
pub mod storability;
pub mod transform;
mod twosat;
pub mod universe;
