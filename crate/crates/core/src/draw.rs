//! The random choices made by every engine go through [`Draw`].
//!
//! Engines only ever ask for a uniform index or a biased coin. Any
//! [`rand::RngCore`] is a `Draw`; tests can supply a scripted chooser that
//! walks every branch of a single step and weighs it exactly.

use rand::{Rng, RngCore};

pub trait Draw {
    /// Uniform index in `0..len`. `len` is never zero.
    fn index(&mut self, len: usize) -> usize;

    /// `true` with probability `p`, where `p` lies in `[0, 1]`.
    fn chance(&mut self, p: f64) -> bool;
}

impl<R: RngCore + ?Sized> Draw for R {
    #[inline]
    fn index(&mut self, len: usize) -> usize {
        self.random_range(0..len)
    }

    #[inline]
    fn chance(&mut self, p: f64) -> bool {
        self.random::<f64>() < p
    }
}
