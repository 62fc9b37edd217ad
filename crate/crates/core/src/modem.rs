//! M-ary orthogonal modulation and the network-coded bit stream.
//!
//! Bit groups map to symbol indices in natural binary, most significant bit
//! first. A symbol index `q` stands for the one-hot M-vector with a 1 at
//! position `q`; the dense vector is never stored.

use crate::{Error, Result};

/// Ordered sequence of bits, each 0 or 1.
#[derive(Debug, Clone, PartialEq, Eq, Default, Hash)]
pub struct BitSequence(Vec<u8>);

impl BitSequence {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if let Some(&b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::InvalidConfig(format!("bit value {b} is not 0 or 1")));
        }
        Ok(Self(bits))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<u8> {
        self.0
    }

    pub fn extend_from(&mut self, other: &BitSequence) {
        self.0.extend_from_slice(&other.0);
    }

    /// Number of positions where `self` and `other` differ.
    pub fn hamming_distance(&self, other: &BitSequence) -> Result<usize> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch(self.len(), other.len()));
        }
        Ok(self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count())
    }
}

impl From<&[u8]> for BitSequence {
    /// Any nonzero byte is read as a 1.
    fn from(bits: &[u8]) -> Self {
        Self(bits.iter().map(|&b| (b != 0) as u8).collect())
    }
}

/// Modulation order M, a power of two no smaller than 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModOrder(usize);

impl ModOrder {
    pub fn new(order: usize) -> Result<Self> {
        if order < 2 || !order.is_power_of_two() {
            return Err(Error::InvalidModOrder(order));
        }
        Ok(Self(order))
    }

    pub fn get(self) -> usize {
        self.0
    }

    /// μ = log2(M).
    pub fn bits_per_symbol(self) -> usize {
        self.0.trailing_zeros() as usize
    }
}

/// A source's modulated frame as symbol indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolFrame {
    symbols: Vec<usize>,
    order: ModOrder,
}

impl SymbolFrame {
    pub fn new(symbols: Vec<usize>, order: ModOrder) -> Result<Self> {
        if let Some(&q) = symbols.iter().find(|&&q| q >= order.get()) {
            return Err(Error::SymbolOutOfRange {
                symbol: q,
                bits_per_symbol: order.bits_per_symbol(),
            });
        }
        Ok(Self { symbols, order })
    }

    pub fn symbols(&self) -> &[usize] {
        &self.symbols
    }

    pub fn order(&self) -> ModOrder {
        self.order
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.order.bits_per_symbol()
    }

    /// Nq.
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

/// Groups `info_bits` into μ-bit words and maps each to its natural-binary
/// symbol index.
pub fn modulate_frame(info_bits: &BitSequence, order: ModOrder) -> Result<SymbolFrame> {
    let mu = order.bits_per_symbol();
    if info_bits.len() % mu != 0 {
        return Err(Error::LengthNotMultiple {
            len: info_bits.len(),
            bits_per_symbol: mu,
        });
    }
    let symbols = info_bits
        .as_slice()
        .chunks_exact(mu)
        .map(|group| group.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize))
        .collect();
    Ok(SymbolFrame { symbols, order })
}

/// The μ bits of symbol `q`, MSB first.
pub fn symbol_bits(q: usize, mu: usize) -> Result<BitSequence> {
    if mu >= usize::BITS as usize || q >> mu != 0 {
        return Err(Error::SymbolOutOfRange {
            symbol: q,
            bits_per_symbol: mu,
        });
    }
    Ok(BitSequence(
        (0..mu).rev().map(|i| ((q >> i) & 1) as u8).collect(),
    ))
}

/// Element-wise XOR across all source sequences.
pub fn nc_bit_sum(sources: &[BitSequence]) -> Result<BitSequence> {
    let (first, rest) = sources.split_first().ok_or(Error::Empty("source list"))?;
    let mut sum = first.0.clone();
    for seq in rest {
        if seq.len() != sum.len() {
            return Err(Error::LengthMismatch(sum.len(), seq.len()));
        }
        for (acc, &b) in sum.iter_mut().zip(&seq.0) {
            *acc ^= b;
        }
    }
    Ok(BitSequence(sum))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bits(v: &[u8]) -> BitSequence {
        BitSequence::new(v.to_vec()).unwrap()
    }

    #[test]
    fn modulate_examples() {
        let m2 = ModOrder::new(2).unwrap();
        let m4 = ModOrder::new(4).unwrap();
        assert_eq!(modulate_frame(&bits(&[0, 1, 1, 0]), m2).unwrap().symbols(), &[0, 1, 1, 0]);
        assert_eq!(modulate_frame(&bits(&[1, 0, 0, 1]), m4).unwrap().symbols(), &[2, 1]);
        assert_eq!(modulate_frame(&bits(&[1, 1, 1, 1]), m4).unwrap().symbols(), &[3, 3]);
    }

    #[test]
    fn modulate_rejects_bad_inputs() {
        assert_eq!(ModOrder::new(3), Err(Error::InvalidModOrder(3)));
        assert_eq!(ModOrder::new(1), Err(Error::InvalidModOrder(1)));
        assert_eq!(ModOrder::new(0), Err(Error::InvalidModOrder(0)));
        let m8 = ModOrder::new(8).unwrap();
        assert!(matches!(
            modulate_frame(&bits(&[1, 0, 1, 1]), m8),
            Err(Error::LengthNotMultiple { len: 4, bits_per_symbol: 3 })
        ));
        assert!(BitSequence::new(vec![0, 2]).is_err());
    }

    #[test]
    fn symbol_bits_examples() {
        assert_eq!(symbol_bits(2, 2).unwrap(), bits(&[1, 0]));
        assert_eq!(symbol_bits(0, 1).unwrap(), bits(&[0]));
        assert_eq!(symbol_bits(5, 3).unwrap(), bits(&[1, 0, 1]));
        assert!(symbol_bits(4, 2).is_err());
    }

    #[test]
    fn nc_bit_sum_examples() {
        assert_eq!(nc_bit_sum(&[bits(&[1, 0, 1]), bits(&[1, 1, 0])]).unwrap(), bits(&[0, 1, 1]));
        assert_eq!(
            nc_bit_sum(&[bits(&[1, 0]), bits(&[1, 1]), bits(&[1, 0])]).unwrap(),
            bits(&[1, 1])
        );
        let x = bits(&[1, 1, 0, 1]);
        assert_eq!(nc_bit_sum(&[x.clone(), x]).unwrap(), BitSequence::zeros(4));
        assert!(matches!(
            nc_bit_sum(&[bits(&[1]), bits(&[1, 0])]),
            Err(Error::LengthMismatch(1, 2))
        ));
        assert!(nc_bit_sum(&[]).is_err());
    }

    fn bit_vec(len: usize) -> impl Strategy<Value = BitSequence> {
        proptest::collection::vec(0u8..2, len).prop_map(BitSequence)
    }

    proptest! {
        #[test]
        fn modulation_round_trips(mu in 1usize..4, words in 0usize..64, seed in any::<u64>()) {
            let order = ModOrder::new(1 << mu).unwrap();
            let mut state = seed | 1;
            let raw: Vec<u8> = (0..words * mu)
                .map(|_| { state ^= state << 13; state ^= state >> 7; state ^= state << 17; (state & 1) as u8 })
                .collect();
            let u = BitSequence(raw);
            let frame = modulate_frame(&u, order).unwrap();
            prop_assert_eq!(frame.len(), words);
            let mut back = BitSequence::default();
            for &q in frame.symbols() {
                back.extend_from(&symbol_bits(q, mu).unwrap());
            }
            prop_assert_eq!(back, u);
        }

        #[test]
        fn xor_sum_is_a_commutative_monoid(a in bit_vec(24), b in bit_vec(24), c in bit_vec(24)) {
            let ab_c = nc_bit_sum(&[nc_bit_sum(&[a.clone(), b.clone()]).unwrap(), c.clone()]).unwrap();
            let a_bc = nc_bit_sum(&[a.clone(), nc_bit_sum(&[b.clone(), c.clone()]).unwrap()]).unwrap();
            prop_assert_eq!(&ab_c, &a_bc);
            prop_assert_eq!(
                nc_bit_sum(&[a.clone(), b.clone()]).unwrap(),
                nc_bit_sum(&[b.clone(), a.clone()]).unwrap()
            );
            prop_assert_eq!(nc_bit_sum(&[a.clone(), BitSequence::zeros(24)]).unwrap(), a);
        }
    }
}
