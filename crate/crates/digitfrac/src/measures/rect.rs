//! Axis-aligned rational boxes with per-face open/closed flags.

use num_traits::{One, Zero};

use crate::rat::Rat;

/// One-dimensional segment with endpoint flags.
#[derive(Debug, Clone, PartialEq)]
pub struct Seg {
    pub lo: Rat,
    pub hi: Rat,
    pub closed_lo: bool,
    pub closed_hi: bool,
}

impl Seg {
    pub fn closed(lo: Rat, hi: Rat) -> Seg {
        Seg {
            lo,
            hi,
            closed_lo: true,
            closed_hi: true,
        }
    }

    pub fn open(lo: Rat, hi: Rat) -> Seg {
        Seg {
            lo,
            hi,
            closed_lo: false,
            closed_hi: false,
        }
    }

    pub fn new(lo: Rat, hi: Rat, closed_lo: bool, closed_hi: bool) -> Seg {
        Seg {
            lo,
            hi,
            closed_lo,
            closed_hi,
        }
    }

    /// Empty as a set: inverted, or a single point with an open end.
    pub fn is_empty(&self) -> bool {
        self.lo > self.hi || (self.lo == self.hi && !(self.closed_lo && self.closed_hi))
    }

    /// Clip to [0, 1]; the cut faces become closed (they are interior points
    /// of the original segment).
    pub fn clip_unit(&self) -> Seg {
        let mut s = self.clone();
        if s.lo < Rat::zero() {
            s.lo = Rat::zero();
            s.closed_lo = true;
        }
        if s.hi > Rat::one() {
            s.hi = Rat::one();
            s.closed_hi = true;
        }
        s
    }
}

/// Axis-aligned box in `[0,1]^k` with rational corners and per-face flags.
#[derive(Debug, Clone, PartialEq)]
pub struct Rect {
    lo: Vec<Rat>,
    hi: Vec<Rat>,
    closed_lo: Vec<bool>,
    closed_hi: Vec<bool>,
}

impl Rect {
    pub fn closed(lo: Vec<Rat>, hi: Vec<Rat>) -> Rect {
        let k = lo.len();
        Rect {
            lo,
            hi,
            closed_lo: vec![true; k],
            closed_hi: vec![true; k],
        }
    }

    pub fn with_flags(
        lo: Vec<Rat>,
        hi: Vec<Rat>,
        closed_lo: Vec<bool>,
        closed_hi: Vec<bool>,
    ) -> Rect {
        assert_eq!(lo.len(), hi.len());
        assert_eq!(lo.len(), closed_lo.len());
        assert_eq!(lo.len(), closed_hi.len());
        Rect {
            lo,
            hi,
            closed_lo,
            closed_hi,
        }
    }

    pub fn from_segs(segs: Vec<Seg>) -> Rect {
        let mut lo = Vec::with_capacity(segs.len());
        let mut hi = Vec::with_capacity(segs.len());
        let mut cl = Vec::with_capacity(segs.len());
        let mut ch = Vec::with_capacity(segs.len());
        for s in segs {
            lo.push(s.lo);
            hi.push(s.hi);
            cl.push(s.closed_lo);
            ch.push(s.closed_hi);
        }
        Rect::with_flags(lo, hi, cl, ch)
    }

    pub fn unit_cube(k: usize) -> Rect {
        Rect::closed(vec![Rat::zero(); k], vec![Rat::one(); k])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[Rat] {
        &self.lo
    }

    pub fn hi(&self) -> &[Rat] {
        &self.hi
    }

    pub fn seg(&self, j: usize) -> Seg {
        Seg {
            lo: self.lo[j].clone(),
            hi: self.hi[j].clone(),
            closed_lo: self.closed_lo[j],
            closed_hi: self.closed_hi[j],
        }
    }

    pub fn segs(&self) -> Vec<Seg> {
        (0..self.dim()).map(|j| self.seg(j)).collect()
    }

    pub fn is_empty(&self) -> bool {
        (0..self.dim()).any(|j| self.seg(j).is_empty())
    }

    pub fn inside_unit_cube(&self) -> bool {
        self.lo.iter().all(|l| l >= &Rat::zero()) && self.hi.iter().all(|h| h <= &Rat::one())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;

    #[test]
    fn seg_emptiness() {
        assert!(Seg::open(rat(1, 2), rat(1, 2)).is_empty());
        assert!(!Seg::closed(rat(1, 2), rat(1, 2)).is_empty());
        assert!(Seg::closed(rat(2, 3), rat(1, 3)).is_empty());
    }

    #[test]
    fn clip_closes_cut_faces() {
        let s = Seg::open(rat(-1, 4), rat(1, 4)).clip_unit();
        assert_eq!(s.lo, rat(0, 1));
        assert!(s.closed_lo);
        assert!(!s.closed_hi);
    }
}
