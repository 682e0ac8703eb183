//! Exact harmonic numbers in big-rational arithmetic.

use num::rational::BigRational;
use num::BigInt;
use num::{One, Zero};

/// H_n = 1 + 1/2 + … + 1/n as an exact rational; H_0 = 0.
pub fn harmonic(n: usize) -> BigRational {
    let mut acc = BigRational::zero();
    for k in 1..=n {
        acc += BigRational::new(BigInt::one(), BigInt::from(k));
    }
    acc
}

/// Cache of H_0..H_N, extendable on demand.
#[derive(Debug, Clone, Default)]
pub struct HarmonicCache {
    values: Vec<BigRational>,
}

impl HarmonicCache {
    pub fn new() -> Self {
        HarmonicCache {
            values: vec![BigRational::zero()],
        }
    }

    /// H_n, computing and memoizing intermediate values as needed.
    pub fn get(&mut self, n: usize) -> &BigRational {
        if self.values.is_empty() {
            self.values.push(BigRational::zero());
        }
        while self.values.len() <= n {
            let k = self.values.len();
            let next = self.values[k - 1].clone() + BigRational::new(BigInt::one(), BigInt::from(k));
            self.values.push(next);
        }
        &self.values[n]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}
