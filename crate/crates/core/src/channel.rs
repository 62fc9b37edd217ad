//! Block Rayleigh fading and the matched-filter observation model.
//!
//! Each source's gain is `α·e^{jθ}` with `α ~ Rayleigh(1/√2)` (so
//! `E[α²] = 1`) and `θ ~ U(0, 2π]`, constant over a block of symbols and
//! independent across sources and blocks. Received dimension `m` of a
//! symbol period carries the sum of the gains of every source that sent
//! symbol `m`, plus circularly-symmetric complex Gaussian noise of variance
//! N0 per complex entry.

use std::f64::consts::TAU;

use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::modem::SymbolFrame;
use crate::{Error, Real, Result};

/// Sources are indexed by bit position in a `u32` mask.
pub const MAX_SOURCES: usize = 16;

/// The 2^K values a single received dimension can take in one block: the
/// sum of the gains over every subset of sources, indexed by bitmask.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetSums<T> {
    gains: Vec<Complex<T>>,
    sums: Vec<Complex<T>>,
}

impl<T: Real> SubsetSums<T> {
    pub fn from_gains(gains: &[Complex<T>]) -> Result<Self> {
        let k = gains.len();
        if k == 0 || k > MAX_SOURCES {
            return Err(Error::InvalidConfig(format!(
                "source count {k} outside 1..={MAX_SOURCES}"
            )));
        }
        let mut sums = vec![Complex::new(T::zero(), T::zero()); 1 << k];
        // Each mask extends the mask with its lowest set bit cleared.
        for mask in 1usize..sums.len() {
            let low = mask.trailing_zeros() as usize;
            sums[mask] = sums[mask & (mask - 1)] + gains[low];
        }
        Ok(Self {
            gains: gains.to_vec(),
            sums,
        })
    }

    pub fn sources(&self) -> usize {
        self.gains.len()
    }

    pub fn full_mask(&self) -> u32 {
        ((1u64 << self.gains.len()) - 1) as u32
    }

    pub fn gains(&self) -> &[Complex<T>] {
        &self.gains
    }

    #[inline]
    pub fn get(&self, mask: u32) -> Complex<T> {
        self.sums[mask as usize]
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.sums
    }
}

/// Per-source, per-block gains with the subset-sum table of every block.
#[derive(Debug, Clone, PartialEq)]
pub struct FadingRealization<T> {
    /// `gains[k][block]`.
    gains: Vec<Vec<Complex<T>>>,
    blocks: Vec<SubsetSums<T>>,
}

impl<T: Real> FadingRealization<T> {
    /// Builds a realization from explicit `gains[k][block]`.
    pub fn from_gains(gains: Vec<Vec<Complex<T>>>) -> Result<Self> {
        let nb = gains.first().map_or(0, Vec::len);
        if nb == 0 || gains.iter().any(|g| g.len() != nb) {
            return Err(Error::InvalidConfig(
                "gain matrix must be K x Nb with Nb >= 1".into(),
            ));
        }
        let blocks = (0..nb)
            .map(|b| {
                let column: Vec<_> = gains.iter().map(|g| g[b]).collect();
                SubsetSums::from_gains(&column)
            })
            .collect::<Result<_>>()?;
        Ok(Self { gains, blocks })
    }

    pub fn sources(&self) -> usize {
        self.gains.len()
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn gain(&self, source: usize, block: usize) -> Complex<T> {
        self.gains[source][block]
    }

    pub fn subset_sums(&self, block: usize) -> &SubsetSums<T> {
        &self.blocks[block]
    }
}

/// Draws independent gains for `k` sources over `nb` blocks.
///
/// Gains are drawn source-major, so with the same stream the first `k`
/// sources of a larger draw match a smaller one.
pub fn draw_fading<T: Real, R: Rng + ?Sized>(
    k: usize,
    nb: usize,
    rng: &mut R,
) -> Result<FadingRealization<T>> {
    if k == 0 || nb == 0 {
        return Err(Error::InvalidConfig(format!(
            "draw_fading needs K >= 1 and Nb >= 1, got K={k}, Nb={nb}"
        )));
    }
    let gains = (0..k)
        .map(|_| {
            (0..nb)
                .map(|_| {
                    // α² ~ Exp(1) is Rayleigh(1/√2) squared.
                    let power: f64 = Exp1.sample(rng);
                    let theta = TAU * (1.0 - rng.random::<f64>());
                    let h = Complex::from_polar(power.sqrt(), theta);
                    Complex::new(T::of(h.re), T::of(h.im))
                })
                .collect()
        })
        .collect();
    FadingRealization::from_gains(gains)
}

/// Per-source Eb/N0 in dB to N0, taking unit symbol energy and Eb = 1/μ.
pub fn ebn0_to_n0(ebn0_db: f64, mu: usize) -> f64 {
    1.0 / (mu as f64 * 10f64.powf(ebn0_db / 10.0))
}

/// Symbols per fading block actually used for a frame of `nq` symbols.
///
/// A block longer than the frame covers the whole frame.
pub fn effective_block_size(block_size: usize, nq: usize) -> usize {
    block_size.min(nq).max(1)
}

/// Number of fading blocks a frame of `nq` symbols spans. A trailing
/// partial block gets its own gains.
pub fn block_count(block_size: usize, nq: usize) -> usize {
    nq.div_ceil(effective_block_size(block_size, nq)).max(1)
}

/// Matched-filter outputs for a frame: Nq columns of M complex entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationFrame<T> {
    samples: Vec<Complex<T>>,
    dims: usize,
    n0: T,
    block_size: usize,
}

impl<T: Real> ObservationFrame<T> {
    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn n0(&self) -> T {
        self.n0
    }

    /// Nq.
    pub fn len(&self) -> usize {
        self.samples.len() / self.dims
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn column(&self, i: usize) -> &[Complex<T>] {
        &self.samples[i * self.dims..(i + 1) * self.dims]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[Complex<T>]> {
        self.samples.chunks_exact(self.dims)
    }

    /// Fading block of column `i`.
    pub fn block_of(&self, i: usize) -> usize {
        i / self.block_size
    }
}

fn check_frames<T: Real>(
    frames: &[SymbolFrame],
    fading: &FadingRealization<T>,
    block_size: usize,
) -> Result<(usize, usize, usize)> {
    let first = frames.first().ok_or(Error::Empty("frame list"))?;
    let (m, nq) = (first.order().get(), first.len());
    if let Some(f) = frames.iter().find(|f| f.order().get() != m || f.len() != nq) {
        return Err(Error::LengthMismatch(nq, f.len()));
    }
    if frames.len() != fading.sources() {
        return Err(Error::InvalidConfig(format!(
            "{} frames but fading drawn for {} sources",
            frames.len(),
            fading.sources()
        )));
    }
    if block_size == 0 {
        return Err(Error::InvalidConfig("block size must be >= 1".into()));
    }
    let n = effective_block_size(block_size, nq);
    if block_count(block_size, nq) > fading.block_count() {
        return Err(Error::InvalidConfig(format!(
            "frame spans {} blocks but fading has {}",
            block_count(block_size, nq),
            fading.block_count()
        )));
    }
    Ok((m, nq, n))
}

/// Noiseless received signal: column `i`, entry `m` is the subset sum of the
/// gains of the sources that sent symbol `m` in period `i`.
pub fn superimpose<T: Real>(
    frames: &[SymbolFrame],
    fading: &FadingRealization<T>,
    block_size: usize,
) -> Result<ObservationFrame<T>> {
    let (m, nq, n) = check_frames(frames, fading, block_size)?;
    let mut samples = Vec::with_capacity(nq * m);
    let mut masks = vec![0u32; m];
    for i in 0..nq {
        masks.iter_mut().for_each(|x| *x = 0);
        for (k, frame) in frames.iter().enumerate() {
            masks[frame.symbols()[i]] |= 1 << k;
        }
        let table = fading.subset_sums(i / n);
        samples.extend(masks.iter().map(|&mask| table.get(mask)));
    }
    Ok(ObservationFrame {
        samples,
        dims: m,
        n0: T::zero(),
        block_size: n,
    })
}

/// Sends the K frames through the block fading channel and adds noise of
/// variance `n0` per complex entry (`n0/2` per real dimension).
pub fn transmit<T: Real, R: Rng + ?Sized>(
    frames: &[SymbolFrame],
    fading: &FadingRealization<T>,
    n0: f64,
    block_size: usize,
    rng: &mut R,
) -> Result<ObservationFrame<T>> {
    if !(n0 > 0.0 && n0.is_finite()) {
        return Err(Error::InvalidConfig(format!("N0 must be positive, got {n0}")));
    }
    let mut obs = superimpose(frames, fading, block_size)?;
    let sigma = (n0 / 2.0).sqrt();
    for s in obs.samples.iter_mut() {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        *s += Complex::new(T::of(sigma * re), T::of(sigma * im));
    }
    obs.n0 = T::of(n0);
    Ok(obs)
}
