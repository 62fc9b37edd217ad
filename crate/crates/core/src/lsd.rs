//! List sphere decoder over subset-sum components.
//!
//! For orthogonal modulation the squared distance between the observation
//! `y` and a super-symbol `x` splits into independent per-dimension terms
//! `|x_m - y_m|²`, and each `x_m` is one of the 2^K subset sums of the
//! source gains. The decoder walks the dimensions from `M-1` down to `0`,
//! choosing at each level which of the still unassigned sources occupy that
//! dimension. A branch survives while its accumulated distance stays inside
//! the radius; the check for each candidate component is done in polar form
//! against the residual radius. At dimension 0 the remaining sources are
//! forced, so every leaf is a valid assignment.
//!
//! Leaves inside the radius go into a bounded list ordered by distance; once
//! the list is full a new leaf only enters by displacing the farthest entry.

use std::cmp::Ordering;

use num_complex::Complex;

use crate::channel::SubsetSums;
use crate::constellation::SuperSymbol;
use crate::{Error, Real, Result};

/// Magnitudes below this take the direct distance route in [`eta_test`].
pub const POLAR_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Inside,
    Outside,
}

/// Whether `component` lies within `sqrt(residual_radius_sq)` of `target`.
///
/// With `component = d e^{jθ}` and `target = d̂ e^{jθ̂}` the condition
/// `|component - target|² <= r̃²` becomes `cos(θ - θ̂) >= η` where
/// `η = (d² + d̂² - r̃²) / (2 d d̂)`; `η > 1` is always outside and `η < -1`
/// always inside.
pub fn eta_test<T: Real>(component: Complex<T>, target: Complex<T>, residual_radius_sq: T) -> Region {
    let (d, theta) = component.to_polar();
    let (d_hat, theta_hat) = target.to_polar();
    eta_test_polar(
        Polar { magnitude: d, phase: theta },
        Polar { magnitude: d_hat, phase: theta_hat },
        residual_radius_sq,
        || (component - target).norm_sqr(),
    )
}

#[derive(Debug, Clone, Copy)]
struct Polar<T> {
    magnitude: T,
    phase: T,
}

#[inline]
fn eta_test_polar<T: Real>(
    component: Polar<T>,
    target: Polar<T>,
    residual_radius_sq: T,
    direct_distance_sq: impl FnOnce() -> T,
) -> Region {
    let eps = T::of(POLAR_EPSILON);
    let inside = if component.magnitude > eps && target.magnitude > eps {
        let (d, d_hat) = (component.magnitude, target.magnitude);
        let two = T::one() + T::one();
        let eta = (d * d + d_hat * d_hat - residual_radius_sq) / (two * d * d_hat);
        if eta > T::one() {
            false
        } else if eta < -T::one() {
            true
        } else {
            (component.phase - target.phase).cos() >= eta
        }
    } else {
        direct_distance_sq() <= residual_radius_sq
    };
    if inside {
        Region::Inside
    } else {
        Region::Outside
    }
}

/// A listed super-symbol and its squared distance to the observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate<T> {
    pub symbol: SuperSymbol<T>,
    pub squared_distance: T,
}

fn rank<T: Real>(a: &Candidate<T>, b: &Candidate<T>) -> Ordering {
    a.squared_distance
        .partial_cmp(&b.squared_distance)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.symbol.assignment().cmp(b.symbol.assignment()))
}

/// Up to `capacity` candidates, ascending by squared distance with ties
/// broken by assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateList<T> {
    entries: Vec<Candidate<T>>,
    capacity: usize,
    radius: T,
}

impl<T: Real> CandidateList<T> {
    pub fn new(capacity: usize, radius: T) -> Self {
        Self {
            entries: Vec::with_capacity(capacity.min(64)),
            capacity,
            radius,
        }
    }

    /// Builds a list from arbitrary candidates: sorts them, drops those
    /// outside `radius` and keeps the `capacity` nearest.
    pub fn from_candidates(mut candidates: Vec<Candidate<T>>, capacity: usize, radius: T) -> Self {
        let r2 = radius * radius;
        candidates.retain(|c| c.squared_distance <= r2);
        candidates.sort_by(rank);
        candidates.truncate(capacity);
        Self {
            entries: candidates,
            capacity,
            radius,
        }
    }

    pub fn entries(&self) -> &[Candidate<T>] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.entries.len() >= self.capacity
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn radius(&self) -> T {
        self.radius
    }

    pub fn worst_distance(&self) -> Option<T> {
        self.entries.last().map(|c| c.squared_distance)
    }

    /// Inserts in order, evicting the farthest entry when full. Returns
    /// whether the candidate was kept.
    pub fn offer(&mut self, candidate: Candidate<T>) -> bool {
        if self.capacity == 0 {
            return false;
        }
        if self.is_full() {
            let worst = self.entries.last().expect("full list is nonempty");
            if rank(&candidate, worst) != Ordering::Less {
                return false;
            }
            self.entries.pop();
        }
        let at = self
            .entries
            .partition_point(|e| rank(e, &candidate) == Ordering::Less);
        self.entries.insert(at, candidate);
        true
    }

    pub fn into_entries(self) -> Vec<Candidate<T>> {
        self.entries
    }
}

/// Node counts from the most recent search.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchStats {
    /// Component values screened by the radius test.
    pub screened: u64,
    /// Branches expanded after passing the test.
    pub expanded: u64,
    /// Complete assignments reached.
    pub leaves: u64,
}

#[derive(Debug, Clone, Copy)]
struct SearchState<T> {
    level: usize,
    remaining: u32,
    accumulated: T,
}

/// Reusable decoder: holds per-level scratch so repeated searches do not
/// allocate beyond the returned list.
#[derive(Debug, Clone)]
pub struct SphereDecoder<T> {
    dims: usize,
    capacity: usize,
    tighten_radius: bool,
    levels: Vec<Vec<(T, u32)>>,
    chosen: Vec<u32>,
    polar: Vec<Polar<T>>,
    stats: SearchStats,
}

impl<T: Real> SphereDecoder<T> {
    pub fn new(dims: usize, capacity: usize) -> Result<Self> {
        if dims == 0 {
            return Err(Error::InvalidConfig("dimension count must be >= 1".into()));
        }
        if capacity == 0 {
            return Err(Error::InvalidConfig("list capacity must be >= 1".into()));
        }
        Ok(Self {
            dims,
            capacity,
            tighten_radius: false,
            levels: vec![Vec::new(); dims],
            chosen: vec![0; dims],
            polar: Vec::new(),
            stats: SearchStats::default(),
        })
    }

    /// Once the list is full, prune against the farthest listed distance
    /// instead of the fixed radius.
    pub fn with_tighten_radius(mut self, on: bool) -> Self {
        self.tighten_radius = on;
        self
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn stats(&self) -> SearchStats {
        self.stats
    }

    /// The `capacity` nearest super-symbols within `radius` of `y`. An empty
    /// list is a valid result.
    pub fn decode(&mut self, y: &[Complex<T>], table: &SubsetSums<T>, radius: T) -> Result<CandidateList<T>> {
        if y.len() != self.dims {
            return Err(Error::LengthMismatch(y.len(), self.dims));
        }
        if !(radius > T::zero()) {
            return Err(Error::InvalidConfig(format!("radius must be positive, got {radius}")));
        }
        self.polar.clear();
        self.polar.extend(table.as_slice().iter().map(|c| {
            let (magnitude, phase) = c.to_polar();
            Polar { magnitude, phase }
        }));
        self.stats = SearchStats::default();
        let mut list = CandidateList::new(self.capacity, radius);
        let start = SearchState {
            level: self.dims - 1,
            remaining: table.full_mask(),
            accumulated: T::zero(),
        };
        self.descend(start, y, table, radius * radius, &mut list);
        Ok(list)
    }

    fn bound(&self, radius_sq: T, list: &CandidateList<T>) -> T {
        match list.worst_distance() {
            Some(worst) if self.tighten_radius && list.is_full() && worst < radius_sq => worst,
            _ => radius_sq,
        }
    }

    fn descend(
        &mut self,
        state: SearchState<T>,
        y: &[Complex<T>],
        table: &SubsetSums<T>,
        radius_sq: T,
        list: &mut CandidateList<T>,
    ) {
        let level = state.level;
        if level == 0 {
            self.leaf(state, y, table, radius_sq, list);
            return;
        }

        let target = y[level];
        let (d_hat, theta_hat) = target.to_polar();
        let target_polar = Polar { magnitude: d_hat, phase: theta_hat };
        let residual = self.bound(radius_sq, list) - state.accumulated;
        if residual < T::zero() {
            return;
        }

        let mut options = std::mem::take(&mut self.levels[level]);
        options.clear();
        // Every submask of the unassigned sources, the empty one included.
        let mut subset = state.remaining;
        loop {
            self.stats.screened += 1;
            let component = table.get(subset);
            let term = (component - target).norm_sqr();
            if eta_test_polar(self.polar[subset as usize], target_polar, residual, || term) == Region::Inside {
                options.push((term, subset));
            }
            if subset == 0 {
                break;
            }
            subset = (subset - 1) & state.remaining;
        }
        options.sort_unstable_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .unwrap_or(Ordering::Equal)
                .then(a.1.cmp(&b.1))
        });

        for &(term, subset) in &options {
            let accumulated = state.accumulated + term;
            if self.tighten_radius && accumulated > self.bound(radius_sq, list) {
                // Options are ascending, the rest are no closer.
                break;
            }
            self.stats.expanded += 1;
            self.chosen[level] = subset;
            self.descend(
                SearchState {
                    level: level - 1,
                    remaining: state.remaining & !subset,
                    accumulated,
                },
                y,
                table,
                radius_sq,
                list,
            );
        }
        self.levels[level] = options;
    }

    fn leaf(
        &mut self,
        state: SearchState<T>,
        y: &[Complex<T>],
        table: &SubsetSums<T>,
        radius_sq: T,
        list: &mut CandidateList<T>,
    ) {
        self.stats.leaves += 1;
        self.chosen[0] = state.remaining;
        let last = (table.get(state.remaining) - y[0]).norm_sqr();
        if state.accumulated + last > self.bound(radius_sq, list) {
            return;
        }
        // Recomputed in dimension order so it matches squared_distance()
        // bit for bit.
        let distance = self
            .chosen
            .iter()
            .zip(y)
            .fold(T::zero(), |acc, (&mask, yi)| acc + (table.get(mask) - *yi).norm_sqr());
        if distance > radius_sq {
            return;
        }
        if let Some(worst) = list.worst_distance() {
            if list.is_full() && distance > worst {
                return;
            }
        }
        list.offer(Candidate {
            symbol: SuperSymbol::from_masks(&self.chosen, table),
            squared_distance: distance,
        });
    }
}

/// One-shot search; see [`SphereDecoder::decode`].
pub fn sphere_decode<T: Real>(
    y: &[Complex<T>],
    table: &SubsetSums<T>,
    radius: T,
    capacity: usize,
) -> Result<CandidateList<T>> {
    SphereDecoder::new(y.len(), capacity)?.decode(y, table, radius)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::draw_fading;
    use crate::constellation::{enumerate_supersymbols, squared_distance};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn eta_examples() {
        // η = 0 boundary, |x - t|² = 2 - 2cos(π/2) = 2.
        let x = Complex::from_polar(1.0, FRAC_PI_2);
        assert_eq!(eta_test(x, c(1.0, 0.0), 2.0 + 1e-12), Region::Inside);
        assert_eq!(eta_test(c(0.0, 0.0), c(0.1, 0.0), 0.0025), Region::Outside);
        // η = 15.
        assert_eq!(eta_test(c(3.0, 0.0), c(0.1, 0.0), 0.01), Region::Outside);
        assert_eq!(eta_test(c(0.0, 0.0), c(0.01, 0.0), 0.01), Region::Inside);
        // η < -1: the whole circle is inside.
        assert_eq!(eta_test(c(0.1, 0.0), c(-0.1, 0.0), 1.0), Region::Inside);
    }

    #[test]
    fn noiseless_hit() {
        let table = SubsetSums::from_gains(&[c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        let list = sphere_decode(&[c(2.0, 0.0), c(0.0, 0.0)], &table, 1.0, 1).unwrap();
        assert_eq!(list.len(), 1);
        assert_eq!(list.entries()[0].symbol.assignment(), &[0, 0]);
        assert_eq!(list.entries()[0].squared_distance, 0.0);
    }

    #[test]
    fn empty_list_is_valid() {
        let table = SubsetSums::from_gains(&[c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        let list = sphere_decode(&[c(10.0, 0.0), c(10.0, 0.0)], &table, 1.0, 5).unwrap();
        assert!(list.is_empty());
    }

    #[test]
    fn rejects_bad_arguments() {
        let table = SubsetSums::from_gains(&[c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!(sphere_decode(&[c(0.0, 0.0); 2], &table, 0.0, 1).is_err());
        assert!(sphere_decode(&[c(0.0, 0.0); 2], &table, 1.0, 0).is_err());
        let mut dec = SphereDecoder::new(4, 1).unwrap();
        assert!(dec.decode(&[c(0.0, 0.0); 2], &table, 1.0).is_err());
    }

    fn exhaustive(y: &[Complex<f64>], table: &SubsetSums<f64>, radius: f64, capacity: usize) -> CandidateList<f64> {
        let all = enumerate_supersymbols(table, y.len(), 1 << 16).unwrap();
        let scored = all
            .into_iter()
            .map(|s| Candidate {
                squared_distance: squared_distance(y, s.vector()),
                symbol: s,
            })
            .collect();
        CandidateList::from_candidates(scored, capacity, radius)
    }

    #[test]
    fn list_matches_truncated_exhaustive_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for trial in 0..2000 {
            let k = rng.random_range(1..=4);
            let m = [2, 4][rng.random_range(0..2)];
            let capacity = rng.random_range(1..=6);
            let radius = rng.random_range(0.2..3.0);
            let f = draw_fading::<f64, _>(k, 1, &mut rng).unwrap();
            let y: Vec<_> = (0..m).map(|_| c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0))).collect();
            let expect = exhaustive(&y, f.subset_sums(0), radius, capacity);
            for tighten in [false, true] {
                let got = SphereDecoder::new(m, capacity)
                    .unwrap()
                    .with_tighten_radius(tighten)
                    .decode(&y, f.subset_sums(0), radius)
                    .unwrap();
                assert_eq!(got.entries(), expect.entries(), "trial {trial}, tighten {tighten}");
            }
        }
    }

    #[test]
    fn tightening_visits_fewer_nodes() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let f = draw_fading::<f64, _>(5, 1, &mut rng).unwrap();
        let y: Vec<_> = (0..4).map(|_| c(rng.random_range(-1.0..1.0), 0.0)).collect();
        let mut fixed = SphereDecoder::new(4, 3).unwrap();
        let mut tight = SphereDecoder::new(4, 3).unwrap().with_tighten_radius(true);
        let a = fixed.decode(&y, f.subset_sums(0), 100.0).unwrap();
        let b = tight.decode(&y, f.subset_sums(0), 100.0).unwrap();
        assert_eq!(a, b);
        assert_eq!(fixed.stats().leaves, 1024);
        assert!(tight.stats().leaves < fixed.stats().leaves);
    }

    #[test]
    fn list_offer_keeps_order_and_capacity() {
        let table = SubsetSums::from_gains(&[c(1.0, 0.0)]).unwrap();
        let sym = |q: usize| SuperSymbol::new(vec![q], &table, 4).unwrap();
        let mut list = CandidateList::new(2, 10.0);
        assert!(list.offer(Candidate { symbol: sym(2), squared_distance: 3.0 }));
        assert!(list.offer(Candidate { symbol: sym(1), squared_distance: 1.0 }));
        assert!(!list.offer(Candidate { symbol: sym(3), squared_distance: 3.0 }));
        assert!(list.offer(Candidate { symbol: sym(0), squared_distance: 3.0 }));
        let order: Vec<_> = list.entries().iter().map(|e| e.symbol.assignment()[0]).collect();
        assert_eq!(order, vec![1, 0]);
    }
}
