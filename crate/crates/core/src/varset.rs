use std::fmt;

/// Subset of query variables stored as a bitmask; bit `i` is variable `i`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct VarSet(pub u32);

impl VarSet {
    pub const EMPTY: VarSet = VarSet(0);

    pub fn singleton(i: usize) -> Self {
        VarSet(1 << i)
    }

    pub fn full(n: usize) -> Self {
        VarSet(((1u64 << n) - 1) as u32)
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(items: I) -> Self {
        VarSet(items.into_iter().fold(0, |m, i| m | (1 << i)))
    }

    pub fn bits(self) -> usize {
        self.0 as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn union(self, o: VarSet) -> Self {
        VarSet(self.0 | o.0)
    }

    pub fn intersect(self, o: VarSet) -> Self {
        VarSet(self.0 & o.0)
    }

    pub fn minus(self, o: VarSet) -> Self {
        VarSet(self.0 & !o.0)
    }

    pub fn is_subset(self, o: VarSet) -> bool {
        self.0 & !o.0 == 0
    }

    pub fn with(self, i: usize) -> Self {
        VarSet(self.0 | 1 << i)
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut m = self.0;
        std::iter::from_fn(move || {
            if m == 0 {
                return None;
            }
            let i = m.trailing_zeros() as usize;
            m &= m - 1;
            Some(i)
        })
    }

    /// All subsets of `[n]` in bitmask order, the empty set first.
    pub fn all(n: usize) -> impl Iterator<Item = VarSet> {
        (0..1u32 << n).map(VarSet)
    }

    /// Renders with variable names, e.g. `"X,Y"`; the empty set is `""`.
    pub fn display(self, names: &[String]) -> String {
        self.iter().map(|i| names[i].as_str()).collect::<Vec<_>>().join(",")
    }
}

impl fmt::Debug for VarSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}
