use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::sync::Arc;

use serde::Serialize;

use super::{multiplicity, WeightFamily};

/// All lattice points obtained from one orthant point by sign changes.
#[derive(Clone, Debug, PartialEq)]
pub struct Orbit {
    pub weight: f64,
    /// Coordinate magnitudes.
    pub point: Vec<u64>,
    pub multiplicity: u64,
}

struct Entry {
    weight: f64,
    point: Vec<u64>,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.weight.total_cmp(&other.weight).then_with(|| self.point.cmp(&other.point))
    }
}

/// Orthant points `ℕ_0^d` in non-decreasing weight order.
///
/// Every point other than the origin has exactly one parent, obtained by
/// decrementing its last nonzero coordinate; children of `a` are `a + e_i`
/// for `i` at or after the last nonzero index of `a`. Because weights are
/// monotone in every magnitude, a parent never outweighs its children, so a
/// min-heap frontier emits points in order without a visited set.
pub struct OrbitStream {
    family: Arc<dyn WeightFamily>,
    heap: BinaryHeap<Reverse<Entry>>,
}

impl OrbitStream {
    pub fn new(family: Arc<dyn WeightFamily>) -> Self {
        let origin = vec![0u64; family.dim()];
        let weight = family.weight_abs(&origin);
        let mut heap = BinaryHeap::new();
        heap.push(Reverse(Entry { weight, point: origin }));
        OrbitStream { family, heap }
    }

    /// Weight of the next orbit.
    pub fn peek_weight(&self) -> Option<f64> {
        self.heap.peek().map(|Reverse(e)| e.weight)
    }

    pub fn frontier_len(&self) -> usize {
        self.heap.len()
    }
}

impl Iterator for OrbitStream {
    type Item = Orbit;

    fn next(&mut self) -> Option<Orbit> {
        let Reverse(Entry { weight, point }) = self.heap.pop()?;
        let last = point.iter().rposition(|&x| x != 0).unwrap_or(0);
        for i in last..point.len() {
            let mut child = point.clone();
            child[i] += 1;
            let w = self.family.weight_abs(&child);
            self.heap.push(Reverse(Entry { weight: w, point: child }));
        }
        let multiplicity = multiplicity(&point);
        Some(Orbit { weight, point, multiplicity })
    }
}

/// A lattice point with its weight.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LatticePoint {
    pub k: Vec<i64>,
    pub weight: f64,
}

/// Every point of `ℤ^d` in non-decreasing weight order; ties are broken by
/// `|k|₁` and then lexicographically.
pub struct RearrangementStream {
    orbits: OrbitStream,
    pending: std::vec::IntoIter<LatticePoint>,
    emitted: u64,
}

impl RearrangementStream {
    pub fn new(family: Arc<dyn WeightFamily>) -> Self {
        RearrangementStream { orbits: OrbitStream::new(family), pending: Vec::new().into_iter(), emitted: 0 }
    }

    pub fn emitted(&self) -> u64 {
        self.emitted
    }

    fn refill(&mut self) {
        let Some(first) = self.orbits.next() else { return };
        let weight = first.weight;
        let mut batch = Vec::new();
        push_signed(&first.point, weight, &mut batch);
        while self.orbits.peek_weight() == Some(weight) {
            let orbit = self.orbits.next().expect("peeked");
            push_signed(&orbit.point, weight, &mut batch);
        }
        batch.sort_by(|a, b| {
            let l1 = |p: &LatticePoint| p.k.iter().map(|x| x.unsigned_abs()).sum::<u64>();
            l1(a).cmp(&l1(b)).then_with(|| a.k.cmp(&b.k))
        });
        self.pending = batch.into_iter();
    }
}

fn push_signed(point: &[u64], weight: f64, out: &mut Vec<LatticePoint>) {
    let nonzero: Vec<usize> = (0..point.len()).filter(|&i| point[i] != 0).collect();
    for mask in 0u64..(1u64 << nonzero.len()) {
        let mut k: Vec<i64> = point.iter().map(|&x| x as i64).collect();
        for (bit, &i) in nonzero.iter().enumerate() {
            if mask >> bit & 1 == 1 {
                k[i] = -k[i];
            }
        }
        out.push(LatticePoint { k, weight });
    }
}

impl Iterator for RearrangementStream {
    type Item = LatticePoint;

    fn next(&mut self) -> Option<LatticePoint> {
        if self.pending.len() == 0 {
            self.refill();
        }
        let p = self.pending.next()?;
        self.emitted += 1;
        Some(p)
    }
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use super::*;
    use crate::exponent::Exponent;
    use crate::lattice::{Energy, Mixed};

    #[test]
    fn weights_are_non_decreasing_and_points_unique() {
        let families: Vec<Arc<dyn WeightFamily>> = vec![
            Arc::new(Mixed::new(1.0, Exponent::INFINITY, 3).unwrap()),
            Arc::new(Mixed::new(0.7, Exponent::new(1.5).unwrap(), 2).unwrap()),
            Arc::new(Energy::new(1.5, 2).unwrap()),
        ];
        for fam in families {
            let mut seen = HashSet::new();
            let mut last = 0.0;
            for p in RearrangementStream::new(fam.clone()).take(20_000) {
                assert!(p.weight >= last);
                last = p.weight;
                assert!(seen.insert(p.k.clone()), "{:?} repeated", p.k);
                assert_eq!(fam.weight(&p.k).unwrap(), p.weight);
            }
        }
    }

    #[test]
    fn ties_follow_l1_then_lexicographic_order() {
        let fam: Arc<dyn WeightFamily> = Arc::new(Mixed::new(1.0, Exponent::INFINITY, 2).unwrap());
        let first: Vec<Vec<i64>> = RearrangementStream::new(fam).take(9).map(|p| p.k).collect();
        assert_eq!(
            first,
            vec![
                vec![0, 0],
                vec![-1, 0],
                vec![0, -1],
                vec![0, 1],
                vec![1, 0],
                vec![-1, -1],
                vec![-1, 1],
                vec![1, -1],
                vec![1, 1]
            ]
        );
    }

    #[test]
    fn orbit_multiplicities_sum_to_point_counts() {
        let fam: Arc<dyn WeightFamily> = Arc::new(Mixed::new(2.0, Exponent::new(2.0).unwrap(), 3).unwrap());
        let points = RearrangementStream::new(fam.clone()).take(5000).count() as u64;
        let mut total = 0;
        for orbit in OrbitStream::new(fam) {
            total += orbit.multiplicity;
            if total >= points {
                break;
            }
        }
        assert!(total >= points);
    }
}
