//! 32-bit maximal-length Fibonacci LFSR.
//!
//! Feedback polynomial x^32 + x^22 + x^2 + x + 1. The register shifts right;
//! bit 0 is the oldest bit of the sequence and the feedback bit enters at
//! bit 31. This is the only randomness source in the crate, so every table,
//! seed choice and synthetic stream is reproducible from a single `u32`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Lfsr32 {
    state: u32,
}

impl Lfsr32 {
    pub fn new(seed: u32) -> Result<Self> {
        if seed == 0 {
            return Err(Error::InvalidGenerator);
        }
        Ok(Self { state: seed })
    }

    #[inline]
    pub fn state(&self) -> u32 {
        self.state
    }

    /// Advances the register by one bit.
    #[inline]
    pub fn step(&mut self) {
        let s = self.state;
        // taps 32, 22, 2, 1 -> bits 0, 10, 30, 31
        let fb = (s ^ (s >> 10) ^ (s >> 30) ^ (s >> 31)) & 1;
        self.state = (s >> 1) | (fb << 31);
    }

    /// Advances by 32 single-bit shifts and returns the new state.
    #[inline]
    pub fn next_u32(&mut self) -> u32 {
        for _ in 0..32 {
            self.step();
        }
        self.state
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let lo = self.next_u32() as u64;
        let hi = self.next_u32() as u64;
        lo | (hi << 32)
    }

    /// Unbiased draw in `[0, n)` by rejection sampling.
    pub fn uniform(&mut self, n: u32) -> Result<u32> {
        if n == 0 {
            return Err(Error::EmptyRange);
        }
        let n = n as u64;
        let span = 1u64 << 32;
        let zone = span - span % n;
        loop {
            let x = self.next_u32() as u64;
            if x < zone {
                return Ok((x % n) as u32);
            }
        }
    }

    /// Uniform real in the open interval (0, 1) with 53 bits of resolution.
    pub fn next_f64(&mut self) -> f64 {
        let hi = (self.next_u32() >> 5) as u64;
        let lo = (self.next_u32() >> 6) as u64;
        let bits = (hi << 26) | lo;
        (bits as f64 + 0.5) / (1u64 << 53) as f64
    }

    /// Standard normal draw via Box-Muller (cosine branch).
    pub fn next_gaussian(&mut self) -> f64 {
        let u1 = self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}
