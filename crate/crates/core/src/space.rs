//! Mixed-radix enumeration of finite product spaces.
//!
//! Tuples over finite port types are stored as vectors of label indices and
//! addressed by a single index with the first coordinate most significant,
//! so that index order is lexicographic order on tuples.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TupleSpace {
    radices: Vec<usize>,
    size: usize,
}

impl TupleSpace {
    pub fn new(radices: Vec<usize>) -> Self {
        let size =
            radices.iter().try_fold(1usize, |acc, &r| acc.checked_mul(r)).expect("tuple space size overflows usize");
        TupleSpace { radices, size }
    }

    pub fn radices(&self) -> &[usize] {
        &self.radices
    }

    /// Number of tuples. The empty product has exactly one (empty) tuple.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn arity(&self) -> usize {
        self.radices.len()
    }

    pub fn encode(&self, tuple: &[usize]) -> Result<usize> {
        if tuple.len() != self.radices.len() {
            return Err(Error::Dimension { expected: self.radices.len(), got: tuple.len() });
        }
        let mut idx = 0usize;
        for (pos, (&v, &r)) in tuple.iter().zip(&self.radices).enumerate() {
            if v >= r {
                return Err(Error::Value(format!("coordinate {pos} has value index {v}, carrier size is {r}")));
            }
            idx = idx * r + v;
        }
        Ok(idx)
    }

    pub fn decode(&self, mut idx: usize) -> Vec<usize> {
        debug_assert!(idx < self.size.max(1));
        let mut out = vec![0; self.radices.len()];
        for (slot, &r) in out.iter_mut().zip(&self.radices).rev() {
            *slot = idx % r;
            idx /= r;
        }
        out
    }

    pub fn iter(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        (0..self.size).map(move |i| self.decode(i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_product_has_one_tuple() {
        let s = TupleSpace::new(vec![]);
        assert_eq!(s.size(), 1);
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![Vec::<usize>::new()]);
        assert_eq!(s.encode(&[]).unwrap(), 0);
    }

    #[test]
    fn lexicographic_order() {
        let s = TupleSpace::new(vec![2, 3]);
        let all: Vec<_> = s.iter().collect();
        assert_eq!(all[0], vec![0, 0]);
        assert_eq!(all[1], vec![0, 1]);
        assert_eq!(all[3], vec![1, 0]);
        for (i, t) in all.iter().enumerate() {
            assert_eq!(s.encode(t).unwrap(), i);
        }
    }

    #[test]
    fn zero_radix_is_empty() {
        let s = TupleSpace::new(vec![2, 0]);
        assert_eq!(s.size(), 0);
        assert_eq!(s.iter().count(), 0);
    }

    #[test]
    fn encode_rejects_out_of_carrier() {
        let s = TupleSpace::new(vec![2]);
        assert!(s.encode(&[2]).is_err());
        assert!(s.encode(&[0, 0]).is_err());
    }
}
