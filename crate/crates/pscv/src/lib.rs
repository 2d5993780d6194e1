//! Exact computations for positive scalar curvature questions on finite 2-groups:
//! eta invariants of space forms, orders of the subgroups they span in torsion
//! groups, and mod 2 characteristic classes and homology of classifying spaces.

pub mod charclass;
pub mod eta;
pub mod exact;
pub mod grouprep;
pub mod homcount;
pub mod refdata;
pub mod torsion;
pub mod verify;
