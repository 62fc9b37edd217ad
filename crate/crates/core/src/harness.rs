//! Monte Carlo bit-error-rate engine.
//!
//! A frame trial draws K random information sequences and a fresh fading
//! realization, sends them through the channel, detects every symbol period
//! and counts errors against the XOR of the sources' bits. Frames run in
//! parallel; each one owns random streams derived from
//! `(seed, grid point, frame)`, and results are reduced in frame order, so a
//! run is reproducible bit for bit whatever the worker count.

use std::collections::hash_map::{Entry, HashMap};

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{self, FadingRealization, SubsetSums, MAX_SOURCES};
use crate::constellation::{
    constellation_size, enumerate_supersymbols, squared_distance, SuperSymbol, DEFAULT_ENUMERATION_CAP,
};
use crate::lsd::{Candidate, CandidateList, SphereDecoder};
use crate::modem::{modulate_frame, nc_bit_sum, BitSequence, ModOrder};
use crate::somap::{self, Scored, DEFAULT_LLR_CLAMP};
use crate::{Error, Real, Result};

/// Radius doublings tried on an empty list before falling back to the
/// exhaustive detector for that symbol.
pub const MAX_RADIUS_DOUBLINGS: u32 = 30;

/// Frames dispatched per parallel batch. Fixed so early stopping does not
/// depend on the worker count.
const FRAME_BATCH: u64 = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Detector {
    /// List sphere decoder feeding the soft demapper.
    #[default]
    Lsd,
    /// Soft demapper over the full M^K constellation.
    Exhaustive,
}

impl std::str::FromStr for Detector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lsd" => Ok(Detector::Lsd),
            "exhaustive" => Ok(Detector::Exhaustive),
            other => Err(Error::InvalidConfig(format!(
                "unknown detector '{other}', expected lsd or exhaustive"
            ))),
        }
    }
}

/// Experiment parameters. Field names double as the JSON config keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// K.
    pub sources: usize,
    /// M.
    pub mod_order: usize,
    /// L, information bits per source per frame.
    pub info_bits: usize,
    /// N, symbols per fading block; `None` means one block per frame.
    pub block_size: Option<usize>,
    /// N_S.
    pub list_size: usize,
    /// B, giving the radius `r = 2 B N0`.
    pub radius_scale: f64,
    /// Fixed radius used instead of `2 B N0` when set.
    pub radius: Option<f64>,
    /// Eb/N0 points in dB.
    #[serde(alias = "snr")]
    pub ebn0_grid: Vec<f64>,
    pub max_frames: u64,
    /// Stop a point once this many bit errors have been counted.
    pub target_errors: u64,
    pub seed: u64,
    pub detector: Detector,
    pub tighten_radius: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            sources: 2,
            mod_order: 2,
            info_bits: 2304,
            block_size: None,
            list_size: 5,
            radius_scale: 2.0,
            radius: None,
            ebn0_grid: Vec::new(),
            max_frames: 1000,
            target_errors: 200,
            seed: 0,
            detector: Detector::Lsd,
            tighten_radius: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(2..=MAX_SOURCES).contains(&self.sources) {
            return bad(format!("sources must be in 2..={MAX_SOURCES}, got {}", self.sources));
        }
        let order = self.order()?;
        let mu = order.bits_per_symbol();
        if self.info_bits == 0 || self.info_bits % mu != 0 {
            return bad(format!(
                "info_bits {} must be a positive multiple of {mu}",
                self.info_bits
            ));
        }
        if self.block_size == Some(0) {
            return bad("block_size must be >= 1".into());
        }
        if self.list_size == 0 {
            return bad("list_size must be >= 1".into());
        }
        if !(self.radius_scale > 0.0 && self.radius_scale.is_finite()) {
            return bad(format!("radius_scale must be positive, got {}", self.radius_scale));
        }
        if let Some(r) = self.radius {
            if !(r > 0.0 && r.is_finite()) {
                return bad(format!("radius must be positive, got {r}"));
            }
        }
        if self.max_frames == 0 {
            return bad("max_frames must be >= 1".into());
        }
        if let Some(x) = self.ebn0_grid.iter().find(|x| !x.is_finite()) {
            return bad(format!("Eb/N0 value {x} is not finite"));
        }
        if self.detector == Detector::Exhaustive {
            match constellation_size(self.mod_order, self.sources) {
                Some(n) if n <= DEFAULT_ENUMERATION_CAP => {}
                _ => return bad("constellation too large for the exhaustive detector".into()),
            }
        }
        Ok(())
    }

    pub fn order(&self) -> Result<ModOrder> {
        ModOrder::new(self.mod_order)
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.mod_order.trailing_zeros() as usize
    }

    /// Nq = L / μ.
    pub fn symbols_per_frame(&self) -> usize {
        self.info_bits / self.bits_per_symbol()
    }

    pub fn effective_block_size(&self) -> usize {
        let nq = self.symbols_per_frame();
        channel::effective_block_size(self.block_size.unwrap_or(nq), nq)
    }

    pub fn block_count(&self) -> usize {
        let nq = self.symbols_per_frame();
        channel::block_count(self.block_size.unwrap_or(nq), nq)
    }

    /// Initial search radius at noise level `n0`.
    pub fn radius_for(&self, n0: f64) -> f64 {
        self.radius.unwrap_or(2.0 * self.radius_scale * n0)
    }
}

/// Accumulated result for one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerRecord {
    pub ebn0_db: f64,
    pub bit_errors: u64,
    pub bits_total: u64,
    pub ber: f64,
    pub frames: u64,
    /// Radius doublings triggered by empty lists.
    pub lsd_retries: u64,
}

/// Outcome of a single frame trial.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FrameOutcome {
    pub errors: u64,
    pub bits: u64,
    pub retries: u64,
}

/// Independent stream for `(seed, point, frame, purpose)`.
pub fn trial_rng(seed: u64, point: u64, frame: u64, purpose: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    for (chunk, word) in key.chunks_exact_mut(8).zip([seed, point, frame, purpose]) {
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

const FADING_STREAM: u64 = 0;
const DATA_STREAM: u64 = 1;

/// Per-symbol detection state: decoder scratch plus the full constellation
/// of each block, built on first use.
pub struct Receiver<T> {
    detector: Detector,
    dims: usize,
    mu: usize,
    n0: T,
    radius: T,
    decoder: SphereDecoder<T>,
    constellations: HashMap<usize, Vec<SuperSymbol<T>>>,
    scored: Vec<Scored<T>>,
    retries: u64,
}

impl<T: Real> Receiver<T> {
    pub fn new(config: &SimConfig, n0: f64) -> Result<Self> {
        config.validate()?;
        let dims = config.mod_order;
        Ok(Self {
            detector: config.detector,
            dims,
            mu: config.bits_per_symbol(),
            n0: T::of(n0),
            radius: T::of(config.radius_for(n0)),
            decoder: SphereDecoder::new(dims, config.list_size)?.with_tighten_radius(config.tighten_radius),
            constellations: HashMap::new(),
            scored: Vec::new(),
            retries: 0,
        })
    }

    /// Radius doublings so far.
    pub fn retries(&self) -> u64 {
        self.retries
    }

    /// Full constellation sorted by distance to `y`, as a candidate list.
    fn exhaustive_list(&mut self, y: &[Complex<T>], table: &SubsetSums<T>, block: usize) -> Result<CandidateList<T>> {
        let dims = self.dims;
        let points = match self.constellations.entry(block) {
            Entry::Occupied(e) => e.into_mut(),
            Entry::Vacant(e) => e.insert(enumerate_supersymbols(table, dims, DEFAULT_ENUMERATION_CAP)?),
        };
        let candidates = points
            .iter()
            .map(|s| Candidate {
                squared_distance: squared_distance(y, s.vector()),
                symbol: s.clone(),
            })
            .collect();
        Ok(CandidateList::from_candidates(candidates, points.len(), T::infinity()))
    }

    /// Candidate list for one observation under the configured detector and
    /// the empty-list retry policy.
    pub fn candidates(&mut self, y: &[Complex<T>], table: &SubsetSums<T>, block: usize) -> Result<CandidateList<T>> {
        if self.detector == Detector::Exhaustive {
            return self.exhaustive_list(y, table, block);
        }
        let mut radius = self.radius;
        for attempt in 0..=MAX_RADIUS_DOUBLINGS {
            let list = self.decoder.decode(y, table, radius)?;
            if !list.is_empty() {
                return Ok(list);
            }
            if attempt < MAX_RADIUS_DOUBLINGS {
                self.retries += 1;
                radius = radius + radius;
            }
        }
        self.exhaustive_list(y, table, block)
    }

    /// Detects the network-coded bits of one observation and appends them
    /// to `out`.
    pub fn detect_into(&mut self, y: &[Complex<T>], table: &SubsetSums<T>, block: usize, out: &mut Vec<u8>) -> Result<()> {
        let list = self.candidates(y, table, block)?;
        let mut scored = std::mem::take(&mut self.scored);
        scored.clear();
        scored.extend(list.entries().iter().map(|c| Scored {
            label: c.symbol.label(),
            log_likelihood: somap::log_likelihood_from_distance(c.squared_distance, self.dims, self.n0),
        }));
        let priors = vec![T::zero(); self.mu];
        let llrs = somap::nc_llrs(&scored, &priors, self.mu, T::of(DEFAULT_LLR_CLAMP))?;
        out.extend_from_slice(somap::hard_decision(&llrs).as_slice());
        self.scored = scored;
        Ok(())
    }
}

fn random_bits<R: Rng + ?Sized>(len: usize, rng: &mut R) -> BitSequence {
    let mut bits = Vec::with_capacity(len);
    while bits.len() < len {
        let word: u64 = rng.random();
        let take = (len - bits.len()).min(64);
        bits.extend((0..take).map(|i| ((word >> i) & 1) as u8));
    }
    BitSequence::from(bits.as_slice())
}

/// One end-to-end frame at noise level `n0` over the given fading.
pub fn run_frame<T: Real, R: Rng + ?Sized>(
    config: &SimConfig,
    n0: f64,
    fading: &FadingRealization<T>,
    rng: &mut R,
) -> Result<FrameOutcome> {
    config.validate()?;
    let order = config.order()?;
    let sources: Vec<BitSequence> = (0..config.sources)
        .map(|_| random_bits(config.info_bits, rng))
        .collect();
    let truth = nc_bit_sum(&sources)?;
    let frames = sources
        .iter()
        .map(|u| modulate_frame(u, order))
        .collect::<Result<Vec<_>>>()?;
    let block_size = config.effective_block_size();
    let observations = channel::transmit(&frames, fading, n0, block_size, rng)?;

    let mut receiver = Receiver::<T>::new(config, n0)?;
    let mut detected = Vec::with_capacity(config.info_bits);
    for (i, y) in observations.columns().enumerate() {
        let block = observations.block_of(i);
        receiver.detect_into(y, fading.subset_sums(block), block, &mut detected)?;
    }
    let errors = BitSequence::from(detected.as_slice()).hamming_distance(&truth)?;
    Ok(FrameOutcome {
        errors: errors as u64,
        bits: config.info_bits as u64,
        retries: receiver.retries(),
    })
}

/// Frame `frame` of grid point `point`, with its own fading and data
/// streams.
pub fn run_trial<T: Real>(config: &SimConfig, point: usize, frame: u64, n0: f64) -> Result<FrameOutcome> {
    let mut fading_rng = trial_rng(config.seed, point as u64, frame, FADING_STREAM);
    let fading = channel::draw_fading::<T, _>(config.sources, config.block_count(), &mut fading_rng)?;
    let mut data_rng = trial_rng(config.seed, point as u64, frame, DATA_STREAM);
    run_frame(config, n0, &fading, &mut data_rng)
}

/// Runs frames at grid point `point` until `target_errors` or `max_frames`.
/// Uses the current rayon pool.
pub fn run_point<T: Real>(config: &SimConfig, point: usize, ebn0_db: f64) -> Result<BerRecord> {
    config.validate()?;
    let n0 = channel::ebn0_to_n0(ebn0_db, config.bits_per_symbol());
    let mut record = BerRecord {
        ebn0_db,
        bit_errors: 0,
        bits_total: 0,
        ber: 0.0,
        frames: 0,
        lsd_retries: 0,
    };
    let mut start = 0;
    'batches: while start < config.max_frames {
        let end = (start + FRAME_BATCH).min(config.max_frames);
        let outcomes = (start..end)
            .into_par_iter()
            .map(|frame| run_trial::<T>(config, point, frame, n0))
            .collect::<Result<Vec<_>>>()?;
        for outcome in outcomes {
            record.bit_errors += outcome.errors;
            record.bits_total += outcome.bits;
            record.lsd_retries += outcome.retries;
            record.frames += 1;
            if record.bit_errors >= config.target_errors {
                break 'batches;
            }
        }
        start = end;
    }
    record.ber = record.bit_errors as f64 / record.bits_total as f64;
    Ok(record)
}

/// One record per grid point, in grid order.
pub fn sweep<T: Real>(config: &SimConfig) -> Result<Vec<BerRecord>> {
    if config.ebn0_grid.is_empty() {
        return Err(Error::Empty("Eb/N0 grid"));
    }
    config
        .ebn0_grid
        .iter()
        .enumerate()
        .map(|(i, &db)| run_point::<T>(config, i, db))
        .collect()
}

/// [`sweep`] on a dedicated pool of `workers` threads.
pub fn sweep_with_workers<T: Real>(config: &SimConfig, workers: usize) -> Result<Vec<BerRecord>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    pool.install(|| sweep::<T>(config))
}
