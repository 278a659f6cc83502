/// Finite union of disjoint intervals on the line, kept sorted.
///
/// Endpoints are not tracked as open or closed; every quantity computed
/// from these sets is a length.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IntervalSet(Vec<(f64, f64)>);

impl IntervalSet {
    pub fn empty() -> Self {
        IntervalSet(Vec::new())
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        if hi > lo {
            IntervalSet(vec![(lo, hi)])
        } else {
            IntervalSet::empty()
        }
    }

    /// Builds from arbitrary (possibly overlapping) pieces.
    pub fn from_pieces(mut pieces: Vec<(f64, f64)>) -> Self {
        pieces.retain(|(a, b)| b > a);
        pieces.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(pieces.len());
        for (a, b) in pieces {
            match out.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => out.push((a, b)),
            }
        }
        IntervalSet(out)
    }

    pub fn pieces(&self) -> &[(f64, f64)] {
        &self.0
    }

    pub fn measure(&self) -> f64 {
        self.0.iter().map(|(a, b)| b - a).sum()
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        let mut all = self.0.clone();
        all.extend_from_slice(&other.0);
        IntervalSet::from_pieces(all)
    }

    pub fn intersect(&self, other: &IntervalSet) -> IntervalSet {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            let (a0, a1) = self.0[i];
            let (b0, b1) = other.0[j];
            let lo = a0.max(b0);
            let hi = a1.min(b1);
            if hi > lo {
                out.push((lo, hi));
            }
            if a1 < b1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        IntervalSet(out)
    }

    pub fn subtract(&self, other: &IntervalSet) -> IntervalSet {
        let mut out = Vec::new();
        for &(a0, a1) in &self.0 {
            let mut lo = a0;
            for &(b0, b1) in &other.0 {
                if b1 <= lo || b0 >= a1 {
                    continue;
                }
                if b0 > lo {
                    out.push((lo, b0));
                }
                lo = lo.max(b1);
                if lo >= a1 {
                    break;
                }
            }
            if a1 > lo {
                out.push((lo, a1));
            }
        }
        IntervalSet(out)
    }
}
