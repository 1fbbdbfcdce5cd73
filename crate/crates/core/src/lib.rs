//! Chern classes of almost periodic divisors on tube domains.

pub mod apmap;
pub mod chern;
pub mod contour;
pub mod dbar;
pub mod divisor;
pub mod exactlin;
pub mod expsum;
pub mod json;
pub mod quad;
pub mod sigma;
