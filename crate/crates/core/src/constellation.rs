//! Super-symbols: the gain-weighted sum of one symbol from every source.
//!
//! A super-symbol is identified by its assignment `(q_1, .., q_K)`. Its
//! complex M-vector has entry `m` equal to the subset sum of the gains of
//! the sources assigned to dimension `m`, and its network-coded label is the
//! XOR of the sources' symbol labels. Distinct assignments may land on the
//! same point while carrying different labels, so they are never merged.

use num_complex::Complex;

use crate::channel::SubsetSums;
use crate::modem::{symbol_bits, BitSequence};
use crate::{Error, Real, Result};

/// Largest constellation [`enumerate_supersymbols`] builds by default.
pub const DEFAULT_ENUMERATION_CAP: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq)]
pub struct SuperSymbol<T> {
    assignment: Vec<usize>,
    vector: Vec<Complex<T>>,
    label: usize,
}

impl<T: Real> SuperSymbol<T> {
    pub fn new(assignment: Vec<usize>, table: &SubsetSums<T>, dims: usize) -> Result<Self> {
        let vector = supersymbol_vector(&assignment, table, dims)?;
        let label = nc_label(&assignment);
        Ok(Self {
            assignment,
            vector,
            label,
        })
    }

    /// Builds from per-dimension source masks that partition the sources.
    pub(crate) fn from_masks(masks: &[u32], table: &SubsetSums<T>) -> Self {
        let mut assignment = vec![0; table.sources()];
        for (m, &mask) in masks.iter().enumerate() {
            let mut rest = mask;
            while rest != 0 {
                assignment[rest.trailing_zeros() as usize] = m;
                rest &= rest - 1;
            }
        }
        Self {
            label: nc_label(&assignment),
            vector: masks.iter().map(|&mask| table.get(mask)).collect(),
            assignment,
        }
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn vector(&self) -> &[Complex<T>] {
        &self.vector
    }

    /// The network-coded label as a symbol index (XOR of the `q_k`).
    pub fn label(&self) -> usize {
        self.label
    }

    /// The network-coded label as μ bits, MSB first.
    pub fn nc_bits(&self, mu: usize) -> BitSequence {
        symbol_bits(self.label, mu).expect("label fits in mu bits")
    }
}

/// Per-dimension masks of the sources assigned to each of `dims` dimensions.
pub fn dimension_masks(assignment: &[usize], dims: usize) -> Result<Vec<u32>> {
    let mut masks = vec![0u32; dims];
    for (k, &q) in assignment.iter().enumerate() {
        if q >= dims {
            return Err(Error::SymbolOutOfRange {
                symbol: q,
                bits_per_symbol: dims.trailing_zeros() as usize,
            });
        }
        masks[q] |= 1 << k;
    }
    Ok(masks)
}

/// Entry `m` is the sum of the gains of the sources with `q_k = m`; unused
/// dimensions are zero.
pub fn supersymbol_vector<T: Real>(
    assignment: &[usize],
    table: &SubsetSums<T>,
    dims: usize,
) -> Result<Vec<Complex<T>>> {
    if assignment.len() != table.sources() {
        return Err(Error::LengthMismatch(assignment.len(), table.sources()));
    }
    Ok(dimension_masks(assignment, dims)?
        .into_iter()
        .map(|mask| table.get(mask))
        .collect())
}

/// XOR of the symbol indices. Bitwise this is the XOR of their binary labels.
pub fn nc_label(assignment: &[usize]) -> usize {
    assignment.iter().fold(0, |acc, &q| acc ^ q)
}

pub fn nc_label_bits(assignment: &[usize], mu: usize) -> Result<BitSequence> {
    symbol_bits(nc_label(assignment), mu)
}

/// Squared Euclidean distance `||y - x||²`, summed in dimension order.
#[inline]
pub fn squared_distance<T: Real>(y: &[Complex<T>], x: &[Complex<T>]) -> T {
    y.iter()
        .zip(x)
        .fold(T::zero(), |acc, (a, b)| acc + (*a - *b).norm_sqr())
}

/// Constellation size M^K, or `None` on overflow.
pub fn constellation_size(dims: usize, sources: usize) -> Option<usize> {
    u32::try_from(sources).ok().and_then(|k| dims.checked_pow(k))
}

/// All M^K super-symbols, assignments in lexicographic order with `q_1`
/// most significant.
pub fn enumerate_supersymbols<T: Real>(
    table: &SubsetSums<T>,
    dims: usize,
    cap: usize,
) -> Result<Vec<SuperSymbol<T>>> {
    let k = table.sources();
    let size = match constellation_size(dims, k) {
        Some(n) if n <= cap => n,
        other => {
            return Err(Error::EnumerationCap {
                size: other.map_or((dims as u128).saturating_pow(k as u32), |n| n as u128),
                cap,
            })
        }
    };
    let mut out = Vec::with_capacity(size);
    let mut assignment = vec![0usize; k];
    for _ in 0..size {
        out.push(SuperSymbol::new(assignment.clone(), table, dims)?);
        // Odometer increment, last source fastest.
        for q in assignment.iter_mut().rev() {
            *q += 1;
            if *q < dims {
                break;
            }
            *q = 0;
        }
    }
    Ok(out)
}
