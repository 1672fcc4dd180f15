//! Packed cyclic bit registers.
//!
//! A [`BitPlane`] stores one occupation number per lattice site, packed into
//! 64-bit words. Bit position `p` runs from `0` to `len - 1` and corresponds
//! to lattice sites ordered from the most negative coordinate upwards. All
//! shifts are cyclic.

use crate::error::{PcaError, Result};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitPlane {
    len: usize,
    words: Vec<u64>,
}

impl BitPlane {
    /// All-zero register of `len` bits.
    pub fn zeros(len: usize) -> Self {
        assert!(len >= 1, "bit plane must hold at least one bit");
        let nw = len.div_ceil(64);
        BitPlane {
            len,
            words: vec![0; nw],
        }
    }

    /// All-one register of `len` bits.
    pub fn ones(len: usize) -> Self {
        let mut plane = Self::zeros(len);
        for w in plane.words.iter_mut() {
            *w = u64::MAX;
        }
        plane.mask_tail();
        plane
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut plane = Self::zeros(bits.len());
        for (p, &b) in bits.iter().enumerate() {
            plane.set(p, b);
        }
        plane
    }

    /// Parses a string of `0`/`1` characters; character `i` is bit position `i`.
    pub fn parse(s: &str) -> Result<Self> {
        if s.is_empty() {
            return Err(PcaError::Input("empty bitstring".into()));
        }
        let mut plane = Self::zeros(s.len());
        for (p, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => plane.set(p, true),
                _ => {
                    return Err(PcaError::Input(format!(
                        "bitstring may only contain 0 or 1, found {c:?}"
                    )))
                }
            }
        }
        Ok(plane)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, p: usize) -> bool {
        debug_assert!(p < self.len);
        (self.words[p >> 6] >> (p & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, p: usize, value: bool) {
        debug_assert!(p < self.len);
        let mask = 1u64 << (p & 63);
        if value {
            self.words[p >> 6] |= mask;
        } else {
            self.words[p >> 6] &= !mask;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Positions of set bits in ascending order.
    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let base = wi << 6;
            std::iter::successors(Some(w), |&r| Some(r & r.wrapping_sub(1)))
                .take_while(|&r| r != 0)
                .map(move |r| base + r.trailing_zeros() as usize)
        })
    }

    /// Cyclic shift moving every bit from position `p` to `p + 1`.
    pub fn rotate_up(&mut self) {
        let top = self.get(self.len - 1);
        let mut carry = top as u64;
        for w in self.words.iter_mut() {
            let next = *w >> 63;
            *w = (*w << 1) | carry;
            carry = next;
        }
        self.mask_tail();
    }

    /// Cyclic shift moving every bit from position `p` to `p - 1`.
    pub fn rotate_down(&mut self) {
        let bottom = self.get(0);
        let nw = self.words.len();
        for w in 0..nw {
            let carry_in = if w + 1 < nw {
                self.words[w + 1] << 63
            } else {
                0
            };
            self.words[w] = (self.words[w] >> 1) | carry_in;
        }
        self.set(self.len - 1, bottom);
    }

    /// Flips every bit.
    pub fn complement(&mut self) {
        for w in self.words.iter_mut() {
            *w = !*w;
        }
        self.mask_tail();
    }

    /// Reverses the bit order: position `p` becomes `len - 1 - p`.
    pub fn reverse(&mut self) {
        let mut rev = Self::zeros(self.len);
        for p in self.iter_ones().collect::<Vec<_>>() {
            rev.set(self.len - 1 - p, true);
        }
        *self = rev;
    }

    /// Integer encoding with bit position 0 as the most significant bit.
    /// Requires `len <= 63` so the result fits alongside multi-plane packing.
    pub fn to_index(&self) -> u64 {
        assert!(self.len <= 63, "index encoding requires at most 63 bits");
        let mut tau = 0u64;
        for p in 0..self.len {
            tau = (tau << 1) | self.get(p) as u64;
        }
        tau
    }

    pub fn from_index(len: usize, tau: u64) -> Self {
        assert!(len <= 63);
        let mut plane = Self::zeros(len);
        for p in 0..len {
            plane.set(p, (tau >> (len - 1 - p)) & 1 == 1);
        }
        plane
    }

    /// Direct word access for block-structured update kernels.
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn words_mut(&mut self) -> &mut [u64] {
        &mut self.words
    }

    fn mask_tail(&mut self) {
        let used = self.len & 63;
        if used != 0 {
            let last = self.words.len() - 1;
            self.words[last] &= (1u64 << used) - 1;
        }
    }
}

impl std::fmt::Display for BitPlane {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for p in 0..self.len {
            f.write_str(if self.get(p) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl std::fmt::Debug for BitPlane {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        std::fmt::Display::fmt(self, f)
    }
}
