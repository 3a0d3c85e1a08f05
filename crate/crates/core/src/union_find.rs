/// Disjoint sets with union by size and path halving. Tracks the largest
/// set as it grows.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
    largest: u32,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
            largest: u32::from(n > 0),
        }
    }

    /// Puts every element back in its own set.
    pub fn reset(&mut self) {
        for (i, p) in self.parent.iter_mut().enumerate() {
            *p = i as u32;
        }
        self.size.fill(1);
        self.largest = u32::from(!self.parent.is_empty());
    }

    pub fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    /// Returns true if the two sets were distinct.
    pub fn union(&mut self, a: u32, b: u32) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.size[a as usize] < self.size[b as usize] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b as usize] = a;
        self.size[a as usize] += self.size[b as usize];
        self.largest = self.largest.max(self.size[a as usize]);
        true
    }

    pub fn largest(&self) -> usize {
        self.largest as usize
    }

    pub fn set_size(&mut self, x: u32) -> usize {
        let r = self.find(x);
        self.size[r as usize] as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merges_and_tracks_largest() {
        let mut uf = UnionFind::new(6);
        assert_eq!(uf.largest(), 1);
        assert!(uf.union(0, 1));
        assert!(uf.union(2, 3));
        assert!(uf.union(1, 3));
        assert!(!uf.union(0, 2));
        assert_eq!(uf.largest(), 4);
        assert_eq!(uf.set_size(5), 1);
        assert_eq!(uf.find(0), uf.find(3));
        uf.reset();
        assert_eq!(uf.largest(), 1);
        assert_ne!(uf.find(0), uf.find(1));
    }
}
