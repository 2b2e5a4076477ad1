//! Extensions of the one-sided engine: several excursion sets, a combined
//! Parisian / barrier trigger, short-rate bonds and regime-switching chains.

pub mod bond;
pub mod minhit;
pub mod multisided;
pub mod regime;
