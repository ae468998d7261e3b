//! Test-only support: brute-force reference implementations and seeded
//! synthetic VOC-shaped datasets.
//!
//! Nothing here calls into `pseudobox::metrics`, `pseudobox::pseudo_labels` or
//! `pseudobox::simulator`; the oracles recompute everything from box corners
//! so they can be compared against the library.

pub mod oracle;
pub mod synth;
