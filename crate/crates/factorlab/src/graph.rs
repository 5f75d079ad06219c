//! Dense bit-row graph representation and small structural utilities.
//!
//! [`Graph`] is an immutable simple undirected graph on vertices `0..n-1`
//! with one bitset row per vertex. Everything downstream (generators,
//! perturbation, the factor engine, the proof procedures) works on this
//! carrier.

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Hard cap on the number of vertices (adjacency takes `n^2` bits).
pub const MAX_VERTICES: usize = 20_000;

#[inline]
pub(crate) fn words_for(n: usize) -> usize {
    n.div_ceil(64)
}

// ---------------------------------------------------------------------------
// VertexSet
// ---------------------------------------------------------------------------

/// A subset of the vertices `0..n-1`, stored as a bitset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VertexSet {
    n: usize,
    words: Vec<u64>,
}

impl VertexSet {
    pub fn new(n: usize) -> Self {
        VertexSet {
            n,
            words: vec![0; words_for(n)],
        }
    }

    pub fn full(n: usize) -> Self {
        let mut s = VertexSet::new(n);
        for v in 0..n {
            s.insert(v as u32);
        }
        s
    }

    pub fn from_iter<I: IntoIterator<Item = u32>>(n: usize, it: I) -> Self {
        let mut s = VertexSet::new(n);
        for v in it {
            s.insert(v);
        }
        s
    }

    #[inline]
    pub fn universe(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn insert(&mut self, v: u32) {
        debug_assert!((v as usize) < self.n);
        self.words[v as usize >> 6] |= 1u64 << (v & 63);
    }

    #[inline]
    pub fn remove(&mut self, v: u32) {
        debug_assert!((v as usize) < self.n);
        self.words[v as usize >> 6] &= !(1u64 << (v & 63));
    }

    #[inline]
    pub fn contains(&self, v: u32) -> bool {
        debug_assert!((v as usize) < self.n);
        self.words[v as usize >> 6] >> (v & 63) & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn clear(&mut self) {
        self.words.fill(0);
    }

    pub fn union_with(&mut self, other: &VertexSet) {
        debug_assert_eq!(self.n, other.n);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn intersect_with(&mut self, other: &VertexSet) {
        debug_assert_eq!(self.n, other.n);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
    }

    pub fn subtract(&mut self, other: &VertexSet) {
        debug_assert_eq!(self.n, other.n);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= !b;
        }
    }

    pub fn intersects(&self, other: &VertexSet) -> bool {
        self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0)
    }

    pub fn is_subset_of(&self, other: &VertexSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    /// Number of elements also contained in a bit-row slice.
    #[inline]
    pub fn count_and(&self, row: &[u64]) -> usize {
        self.words
            .iter()
            .zip(row)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    /// Lowest element, if any.
    pub fn min(&self) -> Option<u32> {
        for (i, &w) in self.words.iter().enumerate() {
            if w != 0 {
                return Some((i as u32) * 64 + w.trailing_zeros());
            }
        }
        None
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let base = (i as u32) * 64;
            BitIter { word: w, base }
        })
    }

    pub fn to_vec(&self) -> Vec<u32> {
        self.iter().collect()
    }

    pub(crate) fn words_mut(&mut self) -> &mut [u64] {
        &mut self.words
    }
}

struct BitIter {
    word: u64,
    base: u32,
}

impl Iterator for BitIter {
    type Item = u32;
    #[inline]
    fn next(&mut self) -> Option<u32> {
        if self.word == 0 {
            return None;
        }
        let t = self.word.trailing_zeros();
        self.word &= self.word - 1;
        Some(self.base + t)
    }
}

// ---------------------------------------------------------------------------
// Clique
// ---------------------------------------------------------------------------

/// A clique given by its sorted vertex list.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Clique {
    pub vertices: Vec<u32>,
}

impl Clique {
    pub fn new(mut vertices: Vec<u32>) -> Self {
        vertices.sort_unstable();
        Clique { vertices }
    }

    pub fn order(&self) -> usize {
        self.vertices.len()
    }

    /// Checks that every pair is an edge of `g`.
    pub fn is_clique_in(&self, g: &Graph) -> bool {
        for (i, &u) in self.vertices.iter().enumerate() {
            for &v in &self.vertices[i + 1..] {
                if u == v || !g.has_edge(u, v) {
                    return false;
                }
            }
        }
        true
    }
}

// ---------------------------------------------------------------------------
// Graph
// ---------------------------------------------------------------------------

/// Immutable simple undirected graph with dense bit-row adjacency.
#[derive(Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl std::fmt::Debug for Graph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Graph(n={}, m={})", self.n, self.edge_count())
    }
}

/// Mutable builder; [`Graph`] itself is immutable once built.
#[derive(Clone)]
pub struct GraphBuilder {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl GraphBuilder {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_VERTICES {
            return Err(Error::SizeLimit(format!(
                "vertex count {n} outside 1..={MAX_VERTICES}"
            )));
        }
        let words = words_for(n);
        Ok(GraphBuilder {
            n,
            words,
            bits: vec![0; n * words],
        })
    }

    #[inline]
    pub fn add_edge(&mut self, u: u32, v: u32) {
        debug_assert!(u != v && (u as usize) < self.n && (v as usize) < self.n);
        self.bits[u as usize * self.words + (v as usize >> 6)] |= 1u64 << (v & 63);
        self.bits[v as usize * self.words + (u as usize >> 6)] |= 1u64 << (u & 63);
    }

    #[inline]
    pub fn has_edge(&self, u: u32, v: u32) -> bool {
        self.bits[u as usize * self.words + (v as usize >> 6)] >> (v & 63) & 1 == 1
    }

    pub fn build(self) -> Graph {
        Graph {
            n: self.n,
            words: self.words,
            bits: self.bits,
        }
    }
}

impl Graph {
    /// Builds a graph from an explicit edge list.
    ///
    /// Every pair must satisfy `0 <= u < v < n` and appear once; the error
    /// names the first offending entry (1-based, matching file lines).
    pub fn from_edge_list(n: usize, edges: &[(u32, u32)]) -> Result<Graph> {
        let mut b = GraphBuilder::new(n)?;
        for (idx, &(u, v)) in edges.iter().enumerate() {
            let line = idx + 1;
            if u >= v {
                return Err(Error::InputFormat {
                    line,
                    msg: format!("edge ({u}, {v}) must satisfy u < v"),
                });
            }
            if v as usize >= n {
                return Err(Error::InputFormat {
                    line,
                    msg: format!("endpoint {v} out of range for n = {n}"),
                });
            }
            if b.has_edge(u, v) {
                return Err(Error::InputFormat {
                    line,
                    msg: format!("duplicate edge ({u}, {v})"),
                });
            }
            b.add_edge(u, v);
        }
        Ok(b.build())
    }

    pub fn empty(n: usize) -> Result<Graph> {
        Ok(GraphBuilder::new(n)?.build())
    }

    pub fn complete(n: usize) -> Result<Graph> {
        let mut b = GraphBuilder::new(n)?;
        for u in 0..n as u32 {
            for v in u + 1..n as u32 {
                b.add_edge(u, v);
            }
        }
        Ok(b.build())
    }

    /// Edge-set union of two graphs on the same vertex set.
    pub fn overlay(&self, other: &Graph) -> Result<Graph> {
        if self.n != other.n {
            return Err(Error::Dimension(format!(
                "overlay of graphs with n = {} and n = {}",
                self.n, other.n
            )));
        }
        let mut bits = self.bits.clone();
        for (a, b) in bits.iter_mut().zip(&other.bits) {
            *a |= b;
        }
        Ok(Graph {
            n: self.n,
            words: self.words,
            bits,
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn row(&self, v: u32) -> &[u64] {
        let s = v as usize * self.words;
        &self.bits[s..s + self.words]
    }

    #[inline]
    pub fn has_edge(&self, u: u32, v: u32) -> bool {
        debug_assert!((u as usize) < self.n && (v as usize) < self.n);
        self.bits[u as usize * self.words + (v as usize >> 6)] >> (v & 63) & 1 == 1
    }

    #[inline]
    pub fn degree(&self, v: u32) -> usize {
        self.row(v).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn edge_count(&self) -> usize {
        let total: usize = (0..self.n as u32).map(|v| self.degree(v)).sum();
        total / 2
    }

    pub fn min_degree(&self) -> usize {
        (0..self.n as u32).map(|v| self.degree(v)).min().unwrap_or(0)
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n as u32).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    pub fn edges(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for u in 0..self.n as u32 {
            for v in self.neighbors_above(u) {
                out.push((u, v));
            }
        }
        out
    }

    pub fn neighbors(&self, v: u32) -> impl Iterator<Item = u32> + '_ {
        VertexSetRef {
            words: self.row(v),
        }
        .iter()
    }

    fn neighbors_above(&self, v: u32) -> impl Iterator<Item = u32> + '_ {
        self.neighbors(v).filter(move |&w| w > v)
    }

    pub fn neighbor_set(&self, v: u32) -> VertexSet {
        VertexSet {
            n: self.n,
            words: self.row(v).to_vec(),
        }
    }

    /// Degree of `v` into the set `s`.
    #[inline]
    pub fn degree_in(&self, v: u32, s: &VertexSet) -> usize {
        s.count_and(self.row(v))
    }

    /// Number of edges with both endpoints in `s`.
    pub fn edges_within(&self, s: &VertexSet) -> usize {
        let total: usize = s.iter().map(|v| self.degree_in(v, s)).sum();
        total / 2
    }

    /// Number of edges between two disjoint sets.
    pub fn edges_between(&self, a: &VertexSet, b: &VertexSet) -> usize {
        a.iter().map(|v| self.degree_in(v, b)).sum()
    }

    /// Induced subgraph on `keep`; vertex ids are compacted in increasing
    /// order and the mapping new -> old is returned alongside.
    pub fn induced(&self, keep: &VertexSet) -> (Graph, Vec<u32>) {
        let old: Vec<u32> = keep.to_vec();
        let mut b = GraphBuilder::new(old.len().max(1)).expect("within cap");
        for (i, &u) in old.iter().enumerate() {
            for (j, &v) in old.iter().enumerate().skip(i + 1) {
                if self.has_edge(u, v) {
                    b.add_edge(i as u32, j as u32);
                }
            }
        }
        (b.build(), old)
    }

    /// Whether the graph is connected (vacuously true for n = 1).
    pub fn is_connected(&self) -> bool {
        let mut seen = VertexSet::new(self.n);
        let mut stack = vec![0u32];
        seen.insert(0);
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for w in self.neighbors(v) {
                if !seen.contains(w) {
                    seen.insert(w);
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.n
    }

    /// Core numbers (degeneracy peeling), used to prune clique enumeration.
    pub fn core_numbers(&self) -> Vec<u32> {
        let n = self.n;
        let mut deg: Vec<usize> = (0..n as u32).map(|v| self.degree(v)).collect();
        let mut core = vec![0u32; n];
        let mut alive = VertexSet::full(n);
        let mut current = 0usize;
        for _ in 0..n {
            let mut best = usize::MAX;
            let mut who = 0u32;
            for v in alive.iter() {
                if deg[v as usize] < best {
                    best = deg[v as usize];
                    who = v;
                }
            }
            current = current.max(best);
            core[who as usize] = current as u32;
            alive.remove(who);
            for w in self.neighbors(who) {
                if alive.contains(w) {
                    deg[w as usize] -= 1;
                }
            }
        }
        core
    }

    /// Greedy independent set within `within` (min-degree-first, ties by id).
    /// A lower bound on the independence number of the induced subgraph.
    pub fn greedy_independent_set(&self, within: &VertexSet) -> VertexSet {
        let mut cand = within.clone();
        let mut out = VertexSet::new(self.n);
        while let Some(_) = cand.min() {
            let mut best_v = u32::MAX;
            let mut best_d = usize::MAX;
            for v in cand.iter() {
                let d = self.degree_in(v, &cand);
                if d < best_d {
                    best_d = d;
                    best_v = v;
                    if d == 0 {
                        break;
                    }
                }
            }
            out.insert(best_v);
            for (w, row) in cand
                .words_mut()
                .iter_mut()
                .zip(self.row(best_v))
            {
                *w &= !row;
            }
            cand.remove(best_v);
        }
        out
    }

    /// Streams every `k`-clique exactly once, in lexicographic vertex order.
    pub fn enumerate_cliques(&self, k: usize) -> Result<CliqueIter<'_>> {
        if k == 0 || k > self.n {
            return Err(Error::Argument(format!(
                "clique order {k} outside 1..={}",
                self.n
            )));
        }
        Ok(CliqueIter::new(self, k))
    }

    /// Collects `enumerate_cliques` into a vector.
    pub fn cliques(&self, k: usize) -> Result<Vec<Clique>> {
        Ok(self.enumerate_cliques(k)?.collect())
    }
}

struct VertexSetRef<'a> {
    words: &'a [u64],
}

impl<'a> VertexSetRef<'a> {
    fn iter(self) -> impl Iterator<Item = u32> + 'a {
        self.words.iter().enumerate().flat_map(|(i, &w)| BitIter {
            word: w,
            base: (i as u32) * 64,
        })
    }
}

// ---------------------------------------------------------------------------
// Clique enumeration
// ---------------------------------------------------------------------------

/// Lexicographic branch-and-bound k-clique stream.
///
/// Candidates are intersected with neighbourhoods as the clique grows, and
/// vertices whose core number is below `k-1` are discarded up front, so
/// dense hosts at a few hundred vertices enumerate in seconds.
pub struct CliqueIter<'a> {
    g: &'a Graph,
    k: usize,
    clique: Vec<u32>,
    // one candidate bitset per open level
    stack: Vec<Vec<u64>>,
}

impl<'a> CliqueIter<'a> {
    fn new(g: &'a Graph, k: usize) -> Self {
        let mut root = vec![u64::MAX; g.words];
        // mask off bits >= n
        let extra = g.words * 64 - g.n;
        if extra > 0 {
            *root.last_mut().unwrap() = u64::MAX >> extra;
        }
        if k >= 3 {
            let core = g.core_numbers();
            for v in 0..g.n {
                if (core[v] as usize) < k - 1 {
                    root[v >> 6] &= !(1u64 << (v & 63));
                }
            }
        }
        CliqueIter {
            g,
            k,
            clique: Vec::with_capacity(k),
            stack: vec![root],
        }
    }

    #[inline]
    fn pop_lowest(words: &mut [u64]) -> Option<u32> {
        for (i, w) in words.iter_mut().enumerate() {
            if *w != 0 {
                let t = w.trailing_zeros();
                *w &= *w - 1;
                return Some((i as u32) * 64 + t);
            }
        }
        None
    }
}

impl<'a> Iterator for CliqueIter<'a> {
    type Item = Clique;

    fn next(&mut self) -> Option<Clique> {
        loop {
            let depth = self.stack.len();
            if depth == 0 {
                return None;
            }
            let frame = self.stack.last_mut().unwrap();
            match Self::pop_lowest(frame) {
                None => {
                    self.stack.pop();
                    self.clique.pop();
                }
                Some(v) => {
                    if self.clique.len() + 1 == self.k {
                        let mut vs = self.clique.clone();
                        vs.push(v);
                        return Some(Clique { vertices: vs });
                    }
                    // children: remaining candidates (all > v) that neighbour v
                    let frame_snapshot = self.stack.last().unwrap();
                    let row = self.g.row(v);
                    let child: Vec<u64> = frame_snapshot
                        .iter()
                        .zip(row)
                        .map(|(a, b)| a & b)
                        .collect();
                    let avail: usize =
                        child.iter().map(|w| w.count_ones() as usize).sum();
                    if self.clique.len() + 1 + avail >= self.k {
                        self.clique.push(v);
                        self.stack.push(child);
                    }
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Induced embedding counting
// ---------------------------------------------------------------------------

/// Cap on pattern order for exact embedding counts.
pub const EMBED_CAP: usize = 6;

/// Exact number of induced embeddings of `f` into `h`: injective maps that
/// preserve both adjacency and non-adjacency.
pub fn count_embeddings(f: &Graph, h: &Graph) -> Result<u64> {
    if f.n > EMBED_CAP {
        return Err(Error::SizeLimit(format!(
            "pattern order {} exceeds embedding cap {EMBED_CAP}",
            f.n
        )));
    }
    if f.n > h.n {
        return Ok(0);
    }
    let mut map = vec![u32::MAX; f.n];
    let mut used = VertexSet::new(h.n);
    Ok(embed_rec(f, h, 0, &mut map, &mut used, true))
}

/// Number of (not necessarily induced) subgraph embeddings of `f` into `h`.
pub fn count_subgraph_embeddings(f: &Graph, h: &Graph) -> Result<u64> {
    if f.n > EMBED_CAP {
        return Err(Error::SizeLimit(format!(
            "pattern order {} exceeds embedding cap {EMBED_CAP}",
            f.n
        )));
    }
    if f.n > h.n {
        return Ok(0);
    }
    let mut map = vec![u32::MAX; f.n];
    let mut used = VertexSet::new(h.n);
    Ok(embed_rec(f, h, 0, &mut map, &mut used, false))
}

fn embed_rec(
    f: &Graph,
    h: &Graph,
    i: usize,
    map: &mut [u32],
    used: &mut VertexSet,
    induced: bool,
) -> u64 {
    if i == f.n {
        return 1;
    }
    let mut total = 0;
    'cand: for w in 0..h.n as u32 {
        if used.contains(w) {
            continue;
        }
        for j in 0..i {
            let fe = f.has_edge(i as u32, j as u32);
            let he = h.has_edge(w, map[j]);
            if fe != he && (induced || fe) {
                continue 'cand;
            }
        }
        map[i] = w;
        used.insert(w);
        total += embed_rec(f, h, i + 1, map, used, induced);
        used.remove(w);
    }
    total
}

/// Number of automorphisms of a small graph.
pub fn automorphism_count(f: &Graph) -> Result<u64> {
    count_embeddings(f, f)
}

/// Whether `f` embeds into `h` as a spanning subgraph (`v(f) == v(h)`,
/// every `f`-edge present). Uncapped existence check for family members.
pub fn spanning_subgraph_exists(f: &Graph, h: &Graph) -> bool {
    if f.n != h.n {
        return false;
    }
    if f.edge_count() > h.edge_count() {
        return false;
    }
    let mut map = vec![u32::MAX; f.n];
    let mut used = VertexSet::new(h.n);
    spanning_rec(f, h, 0, &mut map, &mut used)
}

fn spanning_rec(f: &Graph, h: &Graph, i: usize, map: &mut [u32], used: &mut VertexSet) -> bool {
    if i == f.n {
        return true;
    }
    'cand: for w in 0..h.n as u32 {
        if used.contains(w) {
            continue;
        }
        for j in 0..i {
            if f.has_edge(i as u32, j as u32) && !h.has_edge(w, map[j]) {
                continue 'cand;
            }
        }
        map[i] = w;
        used.insert(w);
        if spanning_rec(f, h, i + 1, map, used) {
            return true;
        }
        used.remove(w);
    }
    false
}

// ---------------------------------------------------------------------------
// Even trails
// ---------------------------------------------------------------------------

/// Shortest even walk from `u` to `v` of length at most `max_len`, found by
/// breadth-first search over (vertex, parity) states. Walking around a
/// triangle is allowed, which subsumes the append-a-triangle repair for
/// odd shortest paths.
pub fn even_trail(g: &Graph, u: u32, v: u32, max_len: usize) -> Option<Vec<u32>> {
    let n = g.n;
    if u as usize >= n || v as usize >= n {
        return None;
    }
    // state = 2*vertex + parity (0 = even distance so far)
    let mut dist = vec![u32::MAX; 2 * n];
    let mut parent = vec![u32::MAX; 2 * n];
    let start = 2 * u as usize;
    dist[start] = 0;
    let mut queue = std::collections::VecDeque::new();
    queue.push_back(start as u32);
    let goal = 2 * v as usize;
    while let Some(s) = queue.pop_front() {
        let s = s as usize;
        if s == goal {
            break;
        }
        let d = dist[s];
        if d as usize >= max_len {
            continue;
        }
        let w = (s / 2) as u32;
        let parity = s & 1;
        for x in g.neighbors(w) {
            let t = 2 * x as usize + (1 - parity);
            if dist[t] == u32::MAX {
                dist[t] = d + 1;
                parent[t] = s as u32;
                queue.push_back(t as u32);
            }
        }
    }
    if dist[goal] == u32::MAX {
        return None;
    }
    let mut walk = Vec::with_capacity(dist[goal] as usize + 1);
    let mut s = goal;
    loop {
        walk.push((s / 2) as u32);
        if s == start && walk.len() == dist[goal] as usize + 1 {
            break;
        }
        s = parent[s] as usize;
    }
    walk.reverse();
    Some(walk)
}

/// Validity check for an even trail: consecutive pairs are edges, the length
/// is even and within the cap, and the endpoints match.
pub fn is_valid_even_trail(g: &Graph, u: u32, v: u32, walk: &[u32], max_len: usize) -> bool {
    if walk.is_empty() || walk[0] != u || *walk.last().unwrap() != v {
        return false;
    }
    let len = walk.len() - 1;
    if len % 2 != 0 || len > max_len {
        return false;
    }
    walk.windows(2).all(|w| g.has_edge(w[0], w[1]))
}

// ---------------------------------------------------------------------------
// Regular pair checking
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RegularityMode {
    Exhaustive,
    Sampled,
}

#[derive(Clone, Debug)]
pub struct RegularityVerdict {
    pub regular: bool,
    pub mode: RegularityMode,
    /// Worst observed |d(X1,X2) - d| over the qualifying sub-pairs seen.
    pub worst_deviation: f64,
    /// A violating sub-pair, when one was found.
    pub witness: Option<(Vec<u32>, Vec<u32>, f64)>,
}

/// Desk-scale (eps, d)-regularity check for the pair `(v1, v2)`.
///
/// Exhaustive over all qualifying sub-pairs when both sides have at most 16
/// vertices; otherwise samples 10,000 random sub-pairs of size
/// `ceil(eps * |V_i|)` with a fixed internal seed and reports the worst
/// observed deviation.
pub fn check_regular_pair(
    g: &Graph,
    v1: &VertexSet,
    v2: &VertexSet,
    eps: f64,
    d: f64,
) -> Result<RegularityVerdict> {
    if v1.is_empty() || v2.is_empty() {
        return Err(Error::Argument("regular pair: sides must be nonempty".into()));
    }
    if v1.intersects(v2) {
        return Err(Error::Argument("regular pair: sides must be disjoint".into()));
    }
    let a: Vec<u32> = v1.to_vec();
    let b: Vec<u32> = v2.to_vec();
    let min1 = ((eps * a.len() as f64).ceil() as usize).max(1);
    let min2 = ((eps * b.len() as f64).ceil() as usize).max(1);

    if a.len() <= 16 && b.len() <= 16 {
        Ok(check_exhaustive(g, &a, &b, min1, min2, eps, d))
    } else {
        Ok(check_sampled(g, &a, &b, min1, min2, eps, d))
    }
}

fn density(edges: usize, s1: usize, s2: usize) -> f64 {
    edges as f64 / (s1 as f64 * s2 as f64)
}

fn check_exhaustive(
    g: &Graph,
    a: &[u32],
    b: &[u32],
    min1: usize,
    min2: usize,
    eps: f64,
    d: f64,
) -> RegularityVerdict {
    let mut worst = 0.0f64;
    let mut witness = None;
    // For each X1, extreme densities over X2 of each size come from taking
    // the k2 smallest / largest per-vertex counts into X1.
    for mask in 1u32..(1 << a.len()) {
        let s1 = mask.count_ones() as usize;
        if s1 < min1 {
            continue;
        }
        let x1: Vec<u32> = (0..a.len())
            .filter(|&i| mask >> i & 1 == 1)
            .map(|i| a[i])
            .collect();
        let mut x1set = VertexSet::new(g.n());
        for &v in &x1 {
            x1set.insert(v);
        }
        let mut counts: Vec<(usize, u32)> =
            b.iter().map(|&w| (g.degree_in(w, &x1set), w)).collect();
        counts.sort_unstable();
        let prefix: Vec<usize> = std::iter::once(0)
            .chain(counts.iter().scan(0, |acc, &(c, _)| {
                *acc += c;
                Some(*acc)
            }))
            .collect();
        let total = prefix[b.len()];
        for k2 in min2..=b.len() {
            let lo = density(prefix[k2], s1, k2);
            let hi = density(total - prefix[b.len() - k2], s1, k2);
            for (dens, extreme_low) in [(lo, true), (hi, false)] {
                let dev = (dens - d).abs();
                if dev > worst {
                    worst = dev;
                    if dev >= eps {
                        let x2: Vec<u32> = if extreme_low {
                            counts[..k2].iter().map(|&(_, w)| w).collect()
                        } else {
                            counts[b.len() - k2..].iter().map(|&(_, w)| w).collect()
                        };
                        witness = Some((x1.clone(), x2, dens));
                    }
                }
            }
        }
    }
    RegularityVerdict {
        regular: worst < eps,
        mode: RegularityMode::Exhaustive,
        worst_deviation: worst,
        witness,
    }
}

fn check_sampled(
    g: &Graph,
    a: &[u32],
    b: &[u32],
    min1: usize,
    min2: usize,
    eps: f64,
    d: f64,
) -> RegularityVerdict {
    let mut rng = SplitMix64::new(0x5EED_9A1E);
    let mut worst = 0.0f64;
    let mut witness = None;
    for _ in 0..10_000 {
        let x1 = sample_subset(&mut rng, a, min1);
        let x2 = sample_subset(&mut rng, b, min2);
        let mut x1set = VertexSet::new(g.n());
        for &v in &x1 {
            x1set.insert(v);
        }
        let e: usize = x2.iter().map(|&w| g.degree_in(w, &x1set)).sum();
        let dens = density(e, x1.len(), x2.len());
        let dev = (dens - d).abs();
        if dev > worst {
            worst = dev;
            if dev >= eps {
                witness = Some((x1, x2, dens));
            }
        }
    }
    RegularityVerdict {
        regular: worst < eps,
        mode: RegularityMode::Sampled,
        worst_deviation: worst,
        witness,
    }
}

fn sample_subset(rng: &mut SplitMix64, pool: &[u32], size: usize) -> Vec<u32> {
    // partial Fisher-Yates over indices
    let mut idx: Vec<usize> = (0..pool.len()).collect();
    for i in 0..size.min(pool.len()) {
        let j = i + rng.next_below((pool.len() - i) as u64) as usize;
        idx.swap(i, j);
    }
    idx[..size.min(pool.len())].iter().map(|&i| pool[i]).collect()
}
