use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sha2::{Digest, Sha256};

use crate::error::{invalid, Result};

/// Generator handed out by [`RngStream::rng`].
pub type SplitRng = ChaCha8Rng;

/// A named random substream.
///
/// The stream key is a hash of the master seed and the full label path, so a
/// stream can be re-derived anywhere (another thread, another process) and
/// always yields the same sequence. Nothing is shared between streams.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RngStream {
    master_seed: u64,
    path: Vec<(String, u64)>,
    key: [u8; 32],
}

impl RngStream {
    /// Root stream for `master_seed` with an empty path.
    pub fn root(master_seed: u64) -> Self {
        let mut h = Sha256::new();
        h.update(b"airfl-sim/root/v1");
        h.update(master_seed.to_le_bytes());
        Self {
            master_seed,
            path: Vec::new(),
            key: h.finalize().into(),
        }
    }

    /// Substream one level below `self`.
    pub fn child(&self, label: &str, index: u64) -> Self {
        let mut h = Sha256::new();
        h.update(self.key);
        h.update((label.len() as u64).to_le_bytes());
        h.update(label.as_bytes());
        h.update(index.to_le_bytes());
        let mut path = self.path.clone();
        path.push((label.to_owned(), index));
        Self {
            master_seed: self.master_seed,
            path,
            key: h.finalize().into(),
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn path(&self) -> &[(String, u64)] {
        &self.path
    }

    /// Fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> SplitRng {
        ChaCha8Rng::from_seed(self.key)
    }
}

/// Derives the stream at `path` under `master_seed`.
pub fn derive_stream(master_seed: u64, path: &[(&str, u64)]) -> RngStream {
    path.iter()
        .fold(RngStream::root(master_seed), |s, (label, idx)| s.child(label, *idx))
}

/// Non-empty vector of complex channel amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexVector(Vec<Complex64>);

impl ComplexVector {
    pub fn new(entries: Vec<Complex64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(invalid("complex vector must have at least one entry"));
        }
        Ok(Self(entries))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Complex64> {
        self.0.iter()
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self(self.0.iter().map(|z| z * c).collect())
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.0
    }
}

impl std::ops::Index<usize> for ComplexVector {
    type Output = Complex64;

    fn index(&self, i: usize) -> &Complex64 {
        &self.0[i]
    }
}

/// `n` i.i.d. CN(0, 1) samples drawn from `rng`.
pub fn sample_complex_gaussian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
        })
        .collect()
}

/// `n` i.i.d. CN(0, 1) samples from the start of `stream`.
pub fn draw_complex_gaussian(n: usize, stream: &RngStream) -> Result<ComplexVector> {
    if n == 0 {
        return Err(invalid("cannot draw an empty complex Gaussian vector"));
    }
    ComplexVector::new(sample_complex_gaussian(&mut stream.rng(), n))
}

/// Uniform angle on [0, 2π).
pub fn sample_uniform_angle<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    wrap_angle(rng.random::<f64>() * TAU)
}

/// Maps any angle onto [0, 2π).
pub fn wrap_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}
