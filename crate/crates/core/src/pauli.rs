//! Bit-packed Pauli words and Pauli-basis product states.
//!
//! Site `i` of an `n`-site word occupies bits `2i` and `2i+1` of the packed
//! representation. When a word acts on a `2^n` amplitude vector, site 0 is the
//! leftmost tensor factor, i.e. the most significant bit of the basis index.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest qubit count for which dense matrices are built.
pub const DENSE_CAP: usize = 12;

const SITES_PER_WORD: usize = 32;
const LOW: u64 = 0x5555_5555_5555_5555;

/// Single-site code of the identity.
pub const I: u8 = 0;
/// Single-site code of sigma^(1).
pub const X: u8 = 1;
/// Single-site code of sigma^(2).
pub const Y: u8 = 2;
/// Single-site code of sigma^(3).
pub const Z: u8 = 3;

fn words_for(n: usize) -> usize {
    n.div_ceil(SITES_PER_WORD).max(1)
}

fn pack(codes: &[u8]) -> Vec<u64> {
    let mut words = vec![0u64; words_for(codes.len())];
    for (i, &c) in codes.iter().enumerate() {
        words[i / SITES_PER_WORD] |= u64::from(c & 3) << (2 * (i % SITES_PER_WORD));
    }
    words
}

fn letter_of(code: u8) -> char {
    ['I', 'X', 'Y', 'Z'][code as usize]
}

fn code_of(ch: char) -> Option<u8> {
    match ch {
        'I' => Some(I),
        'X' => Some(X),
        'Y' => Some(Y),
        'Z' => Some(Z),
        _ => None,
    }
}

/// An `n`-site Pauli word without phase.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    n: usize,
    words: Vec<u64>,
}

impl PauliString {
    /// Builds a word from per-site codes in `{0,1,2,3}`.
    pub fn new(codes: &[u8]) -> Result<Self> {
        if let Some(&bad) = codes.iter().find(|&&c| c > 3) {
            return Err(Error::InvalidArgument(format!("pauli code {bad} out of range")));
        }
        Ok(Self {
            n: codes.len(),
            words: pack(codes),
        })
    }

    /// The identity word on `n` sites.
    pub fn identity(n: usize) -> Self {
        Self {
            n,
            words: vec![0; words_for(n)],
        }
    }

    /// A word acting with `code` on the listed sites and trivially elsewhere.
    pub fn on_sites(n: usize, sites: &[usize], codes: &[u8]) -> Result<Self> {
        if sites.len() != codes.len() {
            return Err(Error::LengthMismatch {
                expected: sites.len(),
                got: codes.len(),
            });
        }
        let mut all = vec![I; n];
        for (&s, &c) in sites.iter().zip(codes) {
            if s >= n {
                return Err(Error::InvalidArgument(format!("site {s} out of range for n = {n}")));
            }
            all[s] = c;
        }
        Self::new(&all)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Code at site `i`.
    pub fn code(&self, i: usize) -> u8 {
        ((self.words[i / SITES_PER_WORD] >> (2 * (i % SITES_PER_WORD))) & 3) as u8
    }

    pub fn codes(&self) -> Vec<u8> {
        (0..self.n).map(|i| self.code(i)).collect()
    }

    /// Indices of the sites carrying a non-identity code, in increasing order.
    pub fn support(&self) -> Vec<usize> {
        (0..self.n).filter(|&i| self.code(i) != I).collect()
    }

    /// Size of the support.
    pub fn locality(&self) -> usize {
        self.words
            .iter()
            .map(|w| ((w | (w >> 1)) & LOW).count_ones() as usize)
            .sum()
    }

    /// Whether every support site lies in `sites` (given as a membership mask).
    pub fn support_within(&self, inside: &[bool]) -> bool {
        (0..self.n).all(|i| self.code(i) == I || inside[i])
    }

    /// Whether the support meets the set given as a membership mask.
    pub fn support_meets(&self, set: &[bool]) -> bool {
        (0..self.n).any(|i| self.code(i) != I && set[i])
    }

    /// Commutation test by anticommuting-site parity.
    pub fn commutes(&self, other: &PauliString) -> Result<bool> {
        if self.n != other.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        let mut count = 0u32;
        for (a, b) in self.words.iter().zip(&other.words) {
            let both = (a | (a >> 1)) & (b | (b >> 1)) & LOW;
            let x = a ^ b;
            let differ = (x | (x >> 1)) & LOW;
            count += (both & differ).count_ones();
        }
        Ok(count.is_multiple_of(2))
    }

    /// Bit masks describing the action on computational basis states.
    ///
    /// The word maps `|x>` to `phase(x) |x ^ flip>` where
    /// `phase(x) = i^{#Y} (-1)^{popcount(x & sign)}`. Requires `n <= 63`.
    pub fn basis_action(&self) -> BasisAction {
        let mut flip = 0usize;
        let mut sign = 0usize;
        let mut ys = 0u32;
        for i in 0..self.n {
            let bit = 1usize << (self.n - 1 - i);
            match self.code(i) {
                X => flip |= bit,
                Y => {
                    flip |= bit;
                    sign |= bit;
                    ys += 1;
                }
                Z => sign |= bit,
                _ => {}
            }
        }
        let base = match ys % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
        BasisAction { flip, sign, base }
    }

    /// Applies the word to an amplitude vector.
    pub fn apply(&self, amp: &[Complex64]) -> Vec<Complex64> {
        let act = self.basis_action();
        let mut out = vec![Complex64::new(0.0, 0.0); amp.len()];
        for (x, &a) in amp.iter().enumerate() {
            out[x ^ act.flip] = act.phase(x) * a;
        }
        out
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n {
            write!(f, "{}", letter_of(self.code(i)))?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliString({self})")
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let codes = s
            .trim()
            .chars()
            .map(|ch| code_of(ch).ok_or_else(|| Error::Parse(format!("bad pauli letter {ch:?}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(&codes)
    }
}

/// Action of a Pauli word on computational basis states.
#[derive(Clone, Copy, Debug)]
pub struct BasisAction {
    pub flip: usize,
    pub sign: usize,
    pub base: Complex64,
}

impl BasisAction {
    /// Phase picked up by `|x>`.
    #[inline]
    pub fn phase(&self, x: usize) -> Complex64 {
        if (x & self.sign).count_ones() % 2 == 1 {
            -self.base
        } else {
            self.base
        }
    }
}

/// A Pauli-basis product state `|b;s>`.
///
/// Frames take values in `{1,2,3}` and outcome `s_i` selects the eigenvalue
/// `(-1)^{s_i}` of `sigma^(b_i)` on site `i`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ShadowState {
    n: usize,
    frames: Vec<u64>,
    outcomes: Vec<u64>,
}

impl ShadowState {
    pub fn new(frames: &[u8], outcomes: &[u8]) -> Result<Self> {
        if frames.len() != outcomes.len() {
            return Err(Error::LengthMismatch {
                expected: frames.len(),
                got: outcomes.len(),
            });
        }
        if let Some(&b) = frames.iter().find(|&&b| !(1..=3).contains(&b)) {
            return Err(Error::InvalidArgument(format!("frame {b} not in 1..=3")));
        }
        if let Some(&s) = outcomes.iter().find(|&&s| s > 1) {
            return Err(Error::InvalidArgument(format!("outcome {s} not a bit")));
        }
        Ok(Self {
            n: frames.len(),
            frames: pack(frames),
            outcomes: pack(outcomes),
        })
    }

    /// Builds a state from per-site letters `2(b-1)+s` in `0..6`.
    pub fn from_letters(letters: &[u8]) -> Result<Self> {
        if let Some(&l) = letters.iter().find(|&&l| l >= 6) {
            return Err(Error::InvalidArgument(format!("letter {l} not in 0..6")));
        }
        let frames: Vec<u8> = letters.iter().map(|l| l / 2 + 1).collect();
        let outcomes: Vec<u8> = letters.iter().map(|l| l % 2).collect();
        Self::new(&frames, &outcomes)
    }

    /// The `idx`-th state in base-6 order with site 0 most significant.
    pub fn from_index(n: usize, mut idx: usize) -> Self {
        let mut letters = vec![0u8; n];
        for i in (0..n).rev() {
            letters[i] = (idx % 6) as u8;
            idx /= 6;
        }
        Self::from_letters(&letters).expect("letters are in range")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn frame(&self, i: usize) -> u8 {
        ((self.frames[i / SITES_PER_WORD] >> (2 * (i % SITES_PER_WORD))) & 3) as u8
    }

    pub fn outcome(&self, i: usize) -> u8 {
        ((self.outcomes[i / SITES_PER_WORD] >> (2 * (i % SITES_PER_WORD))) & 1) as u8
    }

    /// Six-letter encoding `2(b_i-1)+s_i` of site `i`.
    pub fn letter(&self, i: usize) -> u8 {
        2 * (self.frame(i) - 1) + self.outcome(i)
    }

    pub fn frames(&self) -> Vec<u8> {
        (0..self.n).map(|i| self.frame(i)).collect()
    }

    pub fn outcomes(&self) -> Vec<u8> {
        (0..self.n).map(|i| self.outcome(i)).collect()
    }

    pub fn letters(&self) -> Vec<u8> {
        (0..self.n).map(|i| self.letter(i)).collect()
    }

    /// Amplitude vector of the product state.
    pub fn state_vector(&self) -> Vec<Complex64> {
        let mut amp = vec![Complex64::new(1.0, 0.0)];
        for i in 0..self.n {
            let v = site_vector(self.frame(i), self.outcome(i));
            let mut next = Vec::with_capacity(amp.len() * 2);
            for a in &amp {
                next.push(a * v[0]);
                next.push(a * v[1]);
            }
            amp = next;
        }
        amp
    }
}

impl fmt::Display for ShadowState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n {
            write!(f, "{}", letter_of(self.frame(i)))?;
        }
        write!(f, "/")?;
        for i in 0..self.n {
            write!(f, "{}", self.outcome(i))?;
        }
        Ok(())
    }
}

impl fmt::Debug for ShadowState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ShadowState({self})")
    }
}

impl FromStr for ShadowState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (fr, bits) = s
            .trim()
            .split_once('/')
            .ok_or_else(|| Error::Parse(format!("missing '/' in shadow state {s:?}")))?;
        let frames = fr
            .chars()
            .map(|ch| match code_of(ch) {
                Some(c) if c != I => Ok(c),
                _ => Err(Error::Parse(format!("bad frame letter {ch:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        let outcomes = bits
            .chars()
            .map(|ch| match ch {
                '0' => Ok(0),
                '1' => Ok(1),
                _ => Err(Error::Parse(format!("bad outcome bit {ch:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(&frames, &outcomes)
    }
}

/// Eigenvector of `sigma^(frame)` with eigenvalue `(-1)^outcome`.
pub fn site_vector(frame: u8, outcome: u8) -> [Complex64; 2] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let sgn = if outcome == 0 { 1.0 } else { -1.0 };
    match frame {
        X => [Complex64::new(h, 0.0), Complex64::new(sgn * h, 0.0)],
        Y => [Complex64::new(h, 0.0), Complex64::new(0.0, sgn * h)],
        _ => {
            if outcome == 0 {
                [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]
            } else {
                [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]
            }
        }
    }
}

/// `<b;s| P |b;s>` computed combinatorially.
pub fn expectation(w: &ShadowState, p: &PauliString) -> Result<i8> {
    if w.n != p.n {
        return Err(Error::LengthMismatch {
            expected: p.n,
            got: w.n,
        });
    }
    Ok(expectation_unchecked(w, p))
}

/// [`expectation`] without the length check.
#[inline]
pub fn expectation_unchecked(w: &ShadowState, p: &PauliString) -> i8 {
    let mut parity = 0u32;
    for ((pw, fw), ow) in p.words.iter().zip(&w.frames).zip(&w.outcomes) {
        let sup = (pw | (pw >> 1)) & LOW;
        let x = pw ^ fw;
        if (x | (x >> 1)) & sup != 0 {
            return 0;
        }
        parity += (ow & sup).count_ones();
    }
    if parity.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// The 2x2 matrix of a single-site code.
pub fn single_matrix(code: u8) -> [[Complex64; 2]; 2] {
    let o = Complex64::new(0.0, 0.0);
    let l = Complex64::new(1.0, 0.0);
    let im = Complex64::new(0.0, 1.0);
    match code {
        X => [[o, l], [l, o]],
        Y => [[o, -im], [im, o]],
        Z => [[l, o], [o, -l]],
        _ => [[l, o], [o, l]],
    }
}

/// Dense `2^n x 2^n` matrix of a word via Kronecker products.
pub fn dense_matrix(p: &PauliString, cap: usize) -> Result<DMatrix<Complex64>> {
    if p.n > cap.min(DENSE_CAP) {
        return Err(Error::CapExceeded {
            what: "dense qubit",
            got: p.n,
            cap: cap.min(DENSE_CAP),
        });
    }
    let mut m = DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
    for i in 0..p.n {
        let s = single_matrix(p.code(i));
        let site = DMatrix::from_fn(2, 2, |r, c| s[r][c]);
        m = m.kronecker(&site);
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn support_examples() {
        assert!(PauliString::new(&[0, 0, 0]).unwrap().support().is_empty());
        assert_eq!(PauliString::new(&[1, 0, 3]).unwrap().support(), vec![0, 2]);
        assert_eq!(PauliString::new(&[2, 2, 2, 2]).unwrap().support(), vec![0, 1, 2, 3]);
        assert_eq!(PauliString::new(&[2, 2, 2, 2]).unwrap().locality(), 4);
    }

    #[test]
    fn commutation_examples() {
        assert!(ps("XI").commutes(&ps("IZ")).unwrap());
        assert!(!ps("X").commutes(&ps("Z")).unwrap());
        assert!(ps("XZ").commutes(&ps("ZX")).unwrap());
        assert!(ps("X").commutes(&ps("XI")).is_err());
    }

    #[test]
    fn expectation_examples() {
        let z0: ShadowState = "Z/0".parse().unwrap();
        assert_eq!(expectation(&z0, &ps("Z")).unwrap(), 1);
        assert_eq!(expectation(&z0, &ps("X")).unwrap(), 0);
        let w = ShadowState::new(&[1, 3], &[1, 0]).unwrap();
        assert_eq!(expectation(&w, &ps("XZ")).unwrap(), -1);
    }

    #[test]
    fn dense_examples() {
        let z = dense_matrix(&ps("Z"), 12).unwrap();
        assert_eq!(z[(0, 0)].re, 1.0);
        assert_eq!(z[(1, 1)].re, -1.0);
        let id = dense_matrix(&ps("II"), 12).unwrap();
        assert_eq!(id, DMatrix::identity(4, 4));
        let xx = dense_matrix(&ps("XX"), 12).unwrap();
        assert_eq!(xx[(3, 0)].re, 1.0);
        assert!(dense_matrix(&PauliString::identity(13), 12).is_err());
    }

    #[test]
    fn text_round_trip() {
        let p = ps("IXYZ");
        assert_eq!(p.to_string(), "IXYZ");
        let w: ShadowState = "XYZ/101".parse().unwrap();
        assert_eq!(w.to_string(), "XYZ/101");
        assert_eq!(w.frames(), vec![1, 2, 3]);
        assert_eq!(w.outcomes(), vec![1, 0, 1]);
        assert!("XA/00".parse::<ShadowState>().is_err());
        assert!("IX/00".parse::<ShadowState>().is_err());
    }

    #[test]
    fn long_words_cross_word_boundary() {
        let mut codes = vec![0u8; 70];
        codes[31] = X;
        codes[32] = Z;
        codes[69] = Y;
        let p = PauliString::new(&codes).unwrap();
        assert_eq!(p.support(), vec![31, 32, 69]);
        assert_eq!(p.codes(), codes);
    }

    #[test]
    fn index_enumeration_is_bijective() {
        let n = 3;
        let mut seen = std::collections::HashSet::new();
        for idx in 0..216 {
            seen.insert(ShadowState::from_index(n, idx));
        }
        assert_eq!(seen.len(), 216);
    }
}
