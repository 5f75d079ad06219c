//! Isomorphism-class census of small induced subgraphs.
//!
//! For a fixed order `k <= 6`, every k-subset of a vertex pool is classified
//! by the canonical form of its induced adjacency mask. Embedding counts
//! follow as `copies * |Aut|`, which is how the generator acceptance checks
//! stay fast on hosts with tens of millions of k-subsets.

use crate::error::{Error, Result};
use crate::graph::{Graph, GraphBuilder, VertexSet};

/// Pair index of `(i, j)` with `i < j < k` in the fixed bit layout.
#[inline]
fn pair_bit(i: usize, j: usize) -> usize {
    debug_assert!(i < j);
    j * (j - 1) / 2 + i
}

/// Census tables for graphs on `k` labelled vertices.
pub struct IsoClasses {
    pub k: usize,
    /// canonical adjacency mask per class, sorted ascending
    pub canonical: Vec<u32>,
    /// mask (2^C(k,2) entries) -> class index
    pub class_of: Vec<u16>,
    /// automorphism count per class
    pub aut: Vec<u64>,
    /// edge count per class
    pub edges: Vec<u32>,
}

impl IsoClasses {
    pub fn build(k: usize) -> Result<IsoClasses> {
        if k < 1 || k > 6 {
            return Err(Error::SizeLimit(format!(
                "census order {k} outside 1..=6"
            )));
        }
        let pairs = k * (k - 1) / 2;
        let perms = permutations(k);
        // bit permutation tables: for each perm, where each pair bit goes
        let mut bitmaps: Vec<Vec<usize>> = Vec::with_capacity(perms.len());
        for p in &perms {
            let mut map = vec![0usize; pairs];
            for j in 1..k {
                for i in 0..j {
                    let (a, b) = (p[i].min(p[j]), p[i].max(p[j]));
                    map[pair_bit(i, j)] = pair_bit(a as usize, b as usize);
                }
            }
            bitmaps.push(map);
        }
        let total = 1usize << pairs;
        let mut class_of = vec![u16::MAX; total];
        let mut canonical = Vec::new();
        let mut aut = Vec::new();
        let mut edges = Vec::new();
        for mask in 0..total as u32 {
            if class_of[mask as usize] != u16::MAX {
                continue;
            }
            // orbit of this mask under vertex permutations
            let mut orbit = Vec::new();
            let mut canon = u32::MAX;
            let mut stabilizer = 0u64;
            for map in &bitmaps {
                let mut m2 = 0u32;
                for b in 0..pairs {
                    if mask >> b & 1 == 1 {
                        m2 |= 1 << map[b];
                    }
                }
                if m2 == mask {
                    stabilizer += 1;
                }
                canon = canon.min(m2);
                orbit.push(m2);
            }
            let class = canonical.len() as u16;
            canonical.push(canon);
            aut.push(stabilizer);
            edges.push(mask.count_ones());
            for m2 in orbit {
                class_of[m2 as usize] = class;
            }
        }
        // reorder classes by canonical mask for a stable presentation
        let mut order: Vec<usize> = (0..canonical.len()).collect();
        order.sort_by_key(|&i| canonical[i]);
        let mut rank = vec![0u16; canonical.len()];
        for (new, &old) in order.iter().enumerate() {
            rank[old] = new as u16;
        }
        let canonical2: Vec<u32> = order.iter().map(|&i| canonical[i]).collect();
        let aut2: Vec<u64> = order.iter().map(|&i| aut[i]).collect();
        let edges2: Vec<u32> = order.iter().map(|&i| edges[i]).collect();
        for c in class_of.iter_mut() {
            *c = rank[*c as usize];
        }
        Ok(IsoClasses {
            k,
            canonical: canonical2,
            class_of,
            aut: aut2,
            edges: edges2,
        })
    }

    pub fn class_count(&self) -> usize {
        self.canonical.len()
    }

    /// A representative graph for a class.
    pub fn representative(&self, class: usize) -> Graph {
        let mask = self.canonical[class];
        let mut b = GraphBuilder::new(self.k).expect("small");
        for j in 1..self.k {
            for i in 0..j {
                if mask >> pair_bit(i, j) & 1 == 1 {
                    b.add_edge(i as u32, j as u32);
                }
            }
        }
        b.build()
    }

    /// Counts induced copies of every class among the k-subsets of `pool`.
    pub fn census(&self, g: &Graph, pool: &VertexSet) -> Vec<u64> {
        let verts: Vec<u32> = pool.to_vec();
        let mut counts = vec![0u64; self.class_count()];
        if verts.len() < self.k {
            return counts;
        }
        let k = self.k;
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            let mut mask = 0u32;
            for j in 1..k {
                for i in 0..j {
                    if g.has_edge(verts[idx[i]], verts[idx[j]]) {
                        mask |= 1 << pair_bit(i, j);
                    }
                }
            }
            counts[self.class_of[mask as usize] as usize] += 1;
            // next combination
            let mut pos = k;
            loop {
                if pos == 0 {
                    return counts;
                }
                pos -= 1;
                if idx[pos] != verts.len() - k + pos {
                    break;
                }
            }
            idx[pos] += 1;
            for p in pos + 1..k {
                idx[p] = idx[p - 1] + 1;
            }
        }
    }
}

fn permutations(k: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut cur: Vec<u8> = (0..k as u8).collect();
    heap_permute(&mut cur, k, &mut out);
    out
}

fn heap_permute(arr: &mut Vec<u8>, size: usize, out: &mut Vec<Vec<u8>>) {
    if size == 1 {
        out.push(arr.clone());
        return;
    }
    for i in 0..size {
        heap_permute(arr, size - 1, out);
        if size % 2 == 1 {
            arr.swap(0, size - 1);
        } else {
            arr.swap(i, size - 1);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{automorphism_count, count_embeddings};
    use crate::rng::SplitMix64;

    #[test]
    fn class_counts_match_known_values() {
        assert_eq!(IsoClasses::build(2).unwrap().class_count(), 2);
        assert_eq!(IsoClasses::build(3).unwrap().class_count(), 4);
        assert_eq!(IsoClasses::build(4).unwrap().class_count(), 11);
        assert_eq!(IsoClasses::build(5).unwrap().class_count(), 34);
    }

    #[test]
    fn automorphisms_match_embedding_counter() {
        let iso = IsoClasses::build(4).unwrap();
        for c in 0..iso.class_count() {
            let rep = iso.representative(c);
            assert_eq!(iso.aut[c], automorphism_count(&rep).unwrap(), "class {c}");
        }
    }

    #[test]
    fn census_times_aut_equals_embeddings() {
        let mut rng = SplitMix64::new(3);
        let n = 12;
        let mut b = GraphBuilder::new(n).unwrap();
        for u in 0..n as u32 {
            for v in u + 1..n as u32 {
                if rng.next_bool(0.4) {
                    b.add_edge(u, v);
                }
            }
        }
        let g = b.build();
        let pool = VertexSet::full(n);
        let iso = IsoClasses::build(4).unwrap();
        let counts = iso.census(&g, &pool);
        let total: u64 = counts.iter().sum();
        assert_eq!(total, 495); // C(12,4)
        for c in 0..iso.class_count() {
            let rep = iso.representative(c);
            let emb = count_embeddings(&rep, &g).unwrap();
            assert_eq!(counts[c] * iso.aut[c], emb, "class {c}");
        }
    }
}
