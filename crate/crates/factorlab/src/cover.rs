//! Local-search covers by edges and Q-copies, absorbers, and their
//! composition.
//!
//! The search keeps a factor of singletons, edges and Q-copies and hill
//! climbs on the lexicographic index `(k_2 + t q, q)`. Each applied move
//! strictly increases the index, so the search terminates within
//! `n (n + 1)` moves. On stabilization either few singletons remain
//! (Covered) or the Q-copies seen by two high-degree singletons span a
//! large independent set (Sparse).

use crate::error::{Error, Result};
use crate::graph::{Clique, Graph, VertexSet};
use crate::rng::{derive_seed, SplitMix64};

/// An embedded copy of Q: `l` complete to `m`, `m[i]` matched to `n[i]`.
#[derive(Clone, Debug)]
pub struct QCopy {
    pub l: Vec<u32>,
    pub m: Vec<u32>,
    pub n: Vec<u32>,
}

impl QCopy {
    fn vertices(&self) -> impl Iterator<Item = u32> + '_ {
        self.l.iter().chain(&self.m).chain(&self.n).copied()
    }

    fn is_valid_in(&self, g: &Graph, s: usize, t: usize) -> bool {
        if self.l.len() != s - t || self.m.len() != t || self.n.len() != t {
            return false;
        }
        for &a in &self.l {
            for &b in &self.m {
                if !g.has_edge(a, b) {
                    return false;
                }
            }
        }
        (0..t).all(|i| g.has_edge(self.m[i], self.n[i]))
    }
}

/// A factor of singletons, edges and Q-copies with its lexicographic index.
#[derive(Clone, Debug)]
pub struct MixedFactor {
    pub s: usize,
    pub t: usize,
    pub singletons: VertexSet,
    pub edges: Vec<(u32, u32)>,
    pub qs: Vec<QCopy>,
}

impl MixedFactor {
    /// The index `(k_2 + t q, q)`.
    pub fn index(&self) -> (u64, u64) {
        (
            self.edges.len() as u64 + (self.t as u64) * self.qs.len() as u64,
            self.qs.len() as u64,
        )
    }

    /// Disjointness, spanning (over `universe`), and per-copy structure.
    pub fn verify(&self, g: &Graph, universe: &VertexSet) -> Result<()> {
        let mut seen = self.singletons.clone();
        let mut count = self.singletons.len();
        let mut add = |v: u32, seen: &mut VertexSet| -> Result<()> {
            if seen.contains(v) {
                return Err(Error::Internal(format!("vertex {v} covered twice")));
            }
            seen.insert(v);
            Ok(())
        };
        for &(a, b) in &self.edges {
            if !g.has_edge(a, b) {
                return Err(Error::Internal(format!("({a}, {b}) is not an edge")));
            }
            add(a, &mut seen)?;
            add(b, &mut seen)?;
            count += 2;
        }
        for q in &self.qs {
            if !q.is_valid_in(g, self.s, self.t) {
                return Err(Error::Internal(format!("invalid Q-copy {q:?}")));
            }
            for v in q.vertices() {
                add(v, &mut seen)?;
            }
            count += self.s + self.t;
        }
        if count != universe.len() || !seen.is_subset_of(universe) || seen.len() != count {
            return Err(Error::Internal("factor does not span the universe".into()));
        }
        Ok(())
    }
}

/// The sparse alternative: a large vertex set with few internal edges.
#[derive(Clone, Debug)]
pub struct SparseWitness {
    pub set: VertexSet,
    pub internal_edges: usize,
    /// the claimed lower bound `(s/r - 10 s r delta) n`, for reporting
    pub size_bound: f64,
}

#[derive(Clone, Debug)]
pub enum CoverOutcome {
    Covered {
        factor: MixedFactor,
        leftover: usize,
    },
    Sparse(SparseWitness),
}

/// Default leftover constant: `2 (s + t)^2`.
pub fn default_leftover(s: usize, t: usize) -> usize {
    2 * (s + t) * (s + t)
}

/// Cover-or-sparse dichotomy under minimum degree `(1 - s/r - delta) n`.
pub fn cover_or_sparse(g: &Graph, r: u32, s: u32, delta: f64) -> Result<CoverOutcome> {
    let (s, t) = split_rs(r, s)?;
    let n = g.n() as f64;
    let need = (1.0 - s as f64 / (s + t) as f64 - delta) * n;
    if (g.min_degree() as f64) < need {
        return Err(Error::RejectedInput(format!(
            "minimum degree {} below (1 - s/r - delta) n = {need:.2}",
            g.min_degree()
        )));
    }
    let all = VertexSet::full(g.n());
    Ok(local_search(g, s, t, all, default_leftover(s, t), delta))
}

fn split_rs(r: u32, s: u32) -> Result<(usize, usize)> {
    if s >= r || 2 * s < r {
        return Err(Error::Domain(format!(
            "cover requires r/2 <= s < r, got r={r} s={s}"
        )));
    }
    Ok((s as usize, (r - s) as usize))
}

// ---------------------------------------------------------------------------
// The hill-climbing search
// ---------------------------------------------------------------------------

struct Search<'a> {
    g: &'a Graph,
    s: usize,
    t: usize,
    singles: VertexSet,
    edges: Vec<(u32, u32)>,
    qs: Vec<QCopy>,
}

/// Runs the move loop on `initial` vertices (all singletons) and classifies
/// the stabilized factor. `delta` only enters the reported sparse bound.
fn local_search(
    g: &Graph,
    s: usize,
    t: usize,
    initial: VertexSet,
    c_leftover: usize,
    delta: f64,
) -> CoverOutcome {
    let mut st = Search {
        g,
        s,
        t,
        singles: initial.clone(),
        edges: Vec::new(),
        qs: Vec::new(),
    };
    let cap = g.n() as u64 * (g.n() as u64 + 1) + 1;
    let mut moves = 0u64;
    loop {
        let before = index_of(&st);
        let applied = st.move_pair_singletons()
            || st.move_break_q()
            || st.move_merge_into_q()
            || st.move_substitute();
        if !applied {
            break;
        }
        debug_assert!(index_of(&st) > before, "move did not increase the index");
        moves += 1;
        assert!(moves <= cap, "move loop exceeded its termination bound");
    }
    let factor = MixedFactor {
        s,
        t,
        singletons: st.singles.clone(),
        edges: st.edges.clone(),
        qs: st.qs.clone(),
    };
    debug_assert!(factor.verify(g, &initial).is_ok());
    if st.singles.len() <= c_leftover {
        let leftover = st.singles.len();
        return CoverOutcome::Covered { factor, leftover };
    }
    let z = st.sparse_set();
    let internal_edges = g.edges_within(&z);
    let r = (s + t) as f64;
    let size_bound = (s as f64 / r - 10.0 * s as f64 * r * delta) * g.n() as f64;
    CoverOutcome::Sparse(SparseWitness {
        set: z,
        internal_edges,
        size_bound,
    })
}

fn index_of(st: &Search<'_>) -> (u64, u64) {
    (
        st.edges.len() as u64 + st.t as u64 * st.qs.len() as u64,
        st.qs.len() as u64,
    )
}

impl<'a> Search<'a> {
    /// M1: two adjacent singletons become an edge.
    fn move_pair_singletons(&mut self) -> bool {
        let verts: Vec<u32> = self.singles.to_vec();
        for &x in &verts {
            let mut cand = self.singles.clone();
            cand.intersect_with(&self.g.neighbor_set(x));
            let hit = cand.iter().find(|&y| y > x);
            if let Some(y) = hit {
                self.singles.remove(x);
                self.singles.remove(y);
                self.edges.push((x, y));
                return true;
            }
        }
        false
    }

    /// M3: a singleton adjacent to the L- or N-part of a Q-copy breaks the
    /// copy into `t + 1` edges (two cases by the part hit). Unavailable in
    /// the singular case, where Q has no L-part and the replacement would
    /// not fit.
    fn move_break_q(&mut self) -> bool {
        if self.s == self.t {
            return false;
        }
        let verts: Vec<u32> = self.singles.to_vec();
        for &x in &verts {
            for qi in 0..self.qs.len() {
                let q = &self.qs[qi];
                let target = q
                    .l
                    .iter()
                    .chain(&q.n)
                    .copied()
                    .filter(|&u| self.g.has_edge(x, u))
                    .min();
                let Some(u) = target else { continue };
                let q = self.qs.swap_remove(qi);
                self.singles.remove(x);
                if let Some(pos) = q.l.iter().position(|&v| v == u) {
                    // u in L: matching stays, x pairs with u
                    self.edges.push((x.min(u), x.max(u)));
                    for i in 0..self.t {
                        self.edges.push((q.m[i].min(q.n[i]), q.m[i].max(q.n[i])));
                    }
                    for (i, &l) in q.l.iter().enumerate() {
                        if i != pos {
                            self.singles.insert(l);
                        }
                    }
                } else {
                    // u = n_j: pair x with u, the freed m_j with the lowest
                    // L-vertex, keep the other matching edges
                    let j = q.n.iter().position(|&v| v == u).expect("u in N");
                    let ell = q.l[0];
                    self.edges.push((x.min(u), x.max(u)));
                    self.edges.push((q.m[j].min(ell), q.m[j].max(ell)));
                    for i in 0..self.t {
                        if i != j {
                            self.edges.push((q.m[i].min(q.n[i]), q.m[i].max(q.n[i])));
                        }
                    }
                    for &l in q.l.iter().skip(1) {
                        self.singles.insert(l);
                    }
                }
                return true;
            }
        }
        false
    }

    /// Orientation of the factor edges: the endpoint with more singleton
    /// neighbours first, ties to the lower id.
    fn orient(&self, a: u32, b: u32) -> (u32, u32) {
        let da = self.g.degree_in(a, &self.singles);
        let db = self.g.degree_in(b, &self.singles);
        if da > db || (da == db && a < b) {
            (a, b)
        } else {
            (b, a)
        }
    }

    /// M2: `s - t` singletons commonly adjacent to the heads of `t` oriented
    /// factor edges merge with them into a Q-copy. Found by exhaustive scan
    /// over t-subsets of the oriented edges in index order.
    fn move_merge_into_q(&mut self) -> bool {
        let t = self.t;
        if self.edges.len() < t || self.singles.len() < self.s - t {
            return false;
        }
        let oriented: Vec<(u32, u32)> =
            self.edges.iter().map(|&(a, b)| self.orient(a, b)).collect();
        let mut chosen: Vec<usize> = Vec::with_capacity(t);
        if let Some((subset, common)) =
            self.find_merge_subset(&oriented, &mut chosen, 0, &self.singles.clone())
        {
            let mut l: Vec<u32> = common.iter().take(self.s - t).collect();
            l.sort_unstable();
            let m: Vec<u32> = subset.iter().map(|&i| oriented[i].0).collect();
            let n: Vec<u32> = subset.iter().map(|&i| oriented[i].1).collect();
            for &v in &l {
                self.singles.remove(v);
            }
            let mut kill: Vec<usize> = subset;
            kill.sort_unstable_by(|a, b| b.cmp(a));
            for i in kill {
                self.edges.swap_remove(i);
            }
            self.qs.push(QCopy { l, m, n });
            return true;
        }
        false
    }

    fn find_merge_subset(
        &self,
        oriented: &[(u32, u32)],
        chosen: &mut Vec<usize>,
        from: usize,
        common: &VertexSet,
    ) -> Option<(Vec<usize>, VertexSet)> {
        if chosen.len() == self.t {
            return if common.len() >= self.s - self.t {
                Some((chosen.clone(), common.clone()))
            } else {
                None
            };
        }
        for i in from..oriented.len() {
            if oriented.len() - i < self.t - chosen.len() {
                break;
            }
            let mut next = common.clone();
            next.intersect_with(&self.g.neighbor_set(oriented[i].0));
            if next.len() < self.s - self.t {
                continue;
            }
            chosen.push(i);
            if let Some(hit) = self.find_merge_subset(oriented, chosen, i + 1, &next) {
                return Some(hit);
            }
            chosen.pop();
        }
        None
    }

    /// The two singletons of maximum degree, ties by id.
    fn top_two_singletons(&self) -> Option<(u32, u32)> {
        let mut best: Option<(usize, u32)> = None;
        let mut second: Option<(usize, u32)> = None;
        for v in self.singles.iter() {
            let d = self.g.degree(v);
            let cand = (d, v);
            let better = |a: (usize, u32), b: (usize, u32)| a.0 > b.0 || (a.0 == b.0 && a.1 < b.1);
            if best.is_none() || better(cand, best.unwrap()) {
                second = best;
                best = Some(cand);
            } else if second.is_none() || better(cand, second.unwrap()) {
                second = Some(cand);
            }
        }
        Some((best?.1, second?.1))
    }

    /// Q-copies whose M-part lies inside both N(x) and N(y).
    fn common_book(&self, x: u32, y: u32) -> Vec<usize> {
        let nx = self.g.neighbor_set(x);
        let ny = self.g.neighbor_set(y);
        (0..self.qs.len())
            .filter(|&i| {
                self.qs[i]
                    .m
                    .iter()
                    .all(|&v| nx.contains(v) && ny.contains(v))
            })
            .collect()
    }

    fn z_set(&self, book: &[usize]) -> VertexSet {
        let mut z = VertexSet::new(self.g.n());
        for &i in book {
            for &v in self.qs[i].l.iter().chain(&self.qs[i].n) {
                z.insert(v);
            }
        }
        z
    }

    /// M4: an edge inside the candidate set Z lets two singletons replace
    /// its endpoints inside their Q-copies, freeing the edge for the factor.
    fn move_substitute(&mut self) -> bool {
        if self.singles.len() < 2 || self.qs.is_empty() {
            return false;
        }
        let (x, y) = match self.top_two_singletons() {
            Some(p) => p,
            None => return false,
        };
        let book = self.common_book(x, y);
        let z = self.z_set(&book);
        // lexicographically first edge inside Z
        let mut found: Option<(u32, u32)> = None;
        'outer: for a in z.iter() {
            let mut cand = z.clone();
            cand.intersect_with(&self.g.neighbor_set(a));
            for b in cand.iter() {
                if b > a {
                    found = Some((a, b));
                    break 'outer;
                }
            }
        }
        let Some((z1, z2)) = found else {
            return false;
        };
        self.replace_in_copy(z1, x, &book);
        self.replace_in_copy(z2, y, &book);
        self.singles.remove(x);
        self.singles.remove(y);
        self.edges.push((z1, z2));
        true
    }

    fn replace_in_copy(&mut self, old: u32, new: u32, book: &[usize]) {
        for &qi in book {
            let q = &mut self.qs[qi];
            if let Some(pos) = q.l.iter().position(|&v| v == old) {
                q.l[pos] = new;
                q.l.sort_unstable();
                return;
            }
            if let Some(pos) = q.n.iter().position(|&v| v == old) {
                q.n[pos] = new;
                return;
            }
        }
        unreachable!("substituted vertex {old} not found in the book");
    }

    /// The sparse set at stabilization: L- and N-parts of the copies seen by
    /// the two highest-degree singletons.
    fn sparse_set(&self) -> VertexSet {
        match self.top_two_singletons() {
            Some((x, y)) => self.z_set(&self.common_book(x, y)),
            None => VertexSet::new(self.g.n()),
        }
    }
}

// ---------------------------------------------------------------------------
// Absorbers
// ---------------------------------------------------------------------------

/// Disjoint `K_g` copies covering few vertices while meeting every
/// vertex's neighbourhood often.
#[derive(Clone, Debug)]
pub struct AbsorberFamily {
    pub cliques: Vec<Clique>,
    pub delta: f64,
    pub g_order: usize,
}

#[derive(Clone, Debug)]
pub struct AbsorberVerdict {
    pub ok: bool,
    pub cover_ok: bool,
    pub neighbour_ok: bool,
    /// min over x of (#cliques meeting N(x)) - delta^2 n / (24 g^2)
    pub worst_slack: f64,
    pub covered: usize,
}

/// Exact check of the two absorber conditions.
pub fn is_absorber(g: &Graph, fam: &AbsorberFamily) -> AbsorberVerdict {
    let n = g.n() as f64;
    let mut seen = VertexSet::new(g.n());
    let mut structurally_ok = true;
    for c in &fam.cliques {
        if c.order() != fam.g_order || !c.is_clique_in(g) {
            structurally_ok = false;
        }
        for &v in &c.vertices {
            if seen.contains(v) {
                structurally_ok = false;
            }
            seen.insert(v);
        }
    }
    let covered = seen.len();
    let cover_ok = structurally_ok && (covered as f64) <= fam.delta * n;
    let threshold = fam.delta * fam.delta * n / (24.0 * (fam.g_order * fam.g_order) as f64);
    let mut worst_slack = f64::INFINITY;
    for x in 0..g.n() as u32 {
        let nb = g.neighbor_set(x);
        let count = fam
            .cliques
            .iter()
            .filter(|c| c.vertices.iter().any(|&v| nb.contains(v)))
            .count();
        worst_slack = worst_slack.min(count as f64 - threshold);
    }
    let neighbour_ok = worst_slack >= 0.0;
    AbsorberVerdict {
        ok: cover_ok && neighbour_ok,
        cover_ok,
        neighbour_ok,
        worst_slack,
        covered,
    }
}

/// Number of `K_g` copies through `v`, counted exactly but stopping once
/// `cap` is reached.
fn cliques_through(g: &Graph, v: u32, g_order: usize, cap: usize) -> usize {
    if g_order == 1 {
        return 1.min(cap);
    }
    let nb = g.neighbor_set(v);
    let (sub, _) = g.induced(&nb);
    if g_order == 2 {
        return sub.n().min(cap);
    }
    let mut count = 0;
    if let Ok(iter) = sub.enumerate_cliques(g_order - 1) {
        for _ in iter {
            count += 1;
            if count >= cap {
                break;
            }
        }
    }
    count
}

/// All `K_g` copies through `v` in lexicographic order, up to `limit`.
fn clique_family(g: &Graph, v: u32, g_order: usize, limit: usize) -> Vec<Vec<u32>> {
    let nb = g.neighbor_set(v);
    let (sub, old) = g.induced(&nb);
    let mut out = Vec::with_capacity(limit);
    if g_order == 1 {
        return vec![vec![v]];
    }
    if let Ok(iter) = sub.enumerate_cliques(g_order - 1) {
        for c in iter {
            let mut verts: Vec<u32> = c.vertices.iter().map(|&i| old[i as usize]).collect();
            verts.push(v);
            verts.sort_unstable();
            out.push(verts);
            if out.len() >= limit {
                break;
            }
        }
    }
    out
}

/// Randomized absorber construction: per-vertex clique families, sampling
/// at rate `delta / (2 alpha g) n^{1-g}`, one deletion per intersecting
/// pair, then an exact verification; retried with fresh derived seeds.
pub fn build_absorber(
    g: &Graph,
    delta: f64,
    g_order: usize,
    seed: u64,
    max_retries: usize,
) -> Result<AbsorberFamily> {
    if !(0.0..=1.0).contains(&delta) || delta <= 0.0 {
        return Err(Error::Domain(format!("delta must be in (0, 1], got {delta}")));
    }
    if !(2..=6).contains(&g_order) {
        return Err(Error::Domain(format!("g_order must be in 2..=6, got {g_order}")));
    }
    let n = g.n();
    let per_vertex = (delta * (n as f64).powi(g_order as i32 - 1)).ceil() as usize;
    // precondition: every vertex lies in at least delta n^{g-1} K_g copies;
    // exact for every vertex when n <= 100, else on 50 seeded vertices
    let probe: Vec<u32> = if n <= 100 {
        (0..n as u32).collect()
    } else {
        let mut rng = SplitMix64::new(derive_seed(seed, u64::MAX));
        rng.permutation(n).into_iter().take(50).collect()
    };
    for &v in &probe {
        let c = cliques_through(g, v, g_order, per_vertex);
        if c < per_vertex {
            return Err(Error::RejectedInput(format!(
                "vertex {v} lies in only {c} < {per_vertex} copies of K_{g_order}"
            )));
        }
    }
    // the union of per-vertex families, deduplicated
    let mut pool: std::collections::BTreeSet<[u32; 6]> = std::collections::BTreeSet::new();
    for v in 0..n as u32 {
        for verts in clique_family(g, v, g_order, per_vertex) {
            let mut key = [u32::MAX; 6];
            key[..g_order].copy_from_slice(&verts);
            pool.insert(key);
        }
    }
    let pool: Vec<[u32; 6]> = pool.into_iter().collect();
    let alpha = pool.len() as f64 / (n as f64).powi(g_order as i32);
    let rate =
        (delta / (2.0 * alpha * g_order as f64)) * (n as f64).powi(1 - g_order as i32);
    let mut fail_cover = 0usize;
    let mut fail_neighbour = 0usize;
    for retry in 0..max_retries {
        let mut rng = SplitMix64::new(derive_seed(seed, retry as u64));
        let mut sample: Vec<&[u32; 6]> =
            pool.iter().filter(|_| rng.next_bool(rate)).collect();
        // delete the later member of every intersecting pair
        let mut alive = vec![true; sample.len()];
        for i in 0..sample.len() {
            if !alive[i] {
                continue;
            }
            for j in i + 1..sample.len() {
                if alive[j]
                    && sample[i][..g_order]
                        .iter()
                        .any(|v| sample[j][..g_order].contains(v))
                {
                    alive[j] = false;
                }
            }
        }
        let mut idx = 0;
        sample.retain(|_| {
            let keep = alive[idx];
            idx += 1;
            keep
        });
        let fam = AbsorberFamily {
            cliques: sample
                .iter()
                .map(|k| Clique::new(k[..g_order].to_vec()))
                .collect(),
            delta,
            g_order,
        };
        let verdict = is_absorber(g, &fam);
        if verdict.ok {
            return Ok(fam);
        }
        if !verdict.cover_ok {
            fail_cover += 1;
        }
        if !verdict.neighbour_ok {
            fail_neighbour += 1;
        }
    }
    Err(Error::ConstructionFailure {
        retries: max_retries,
        msg: format!(
            "absorber: cover condition failed {fail_cover} times, neighbour \
             condition failed {fail_neighbour} times"
        ),
    })
}

// ---------------------------------------------------------------------------
// Composition
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub enum ComposeOutcome {
    Covered {
        factor: MixedFactor,
        absorber: AbsorberFamily,
        leftover: usize,
    },
    Sparse(SparseWitness),
}

/// Builds a `(delta/2, g)`-absorber (`g = 2` when `s > r/2`, `g = 3` in the
/// singular case), removes it, and runs the cover search on the remainder
/// with `delta/2`. The remainder search is not re-gated on minimum degree:
/// the hypothesis is on the original graph.
pub fn compose_cover(
    g: &Graph,
    r: u32,
    s: u32,
    delta: f64,
    seed: u64,
    max_retries: usize,
) -> Result<ComposeOutcome> {
    let (s, t) = split_rs(r, s)?;
    let n = g.n() as f64;
    let need = (1.0 - s as f64 / (s + t) as f64 - delta) * n;
    if (g.min_degree() as f64) < need {
        return Err(Error::RejectedInput(format!(
            "minimum degree {} below (1 - s/r - delta) n = {need:.2}",
            g.min_degree()
        )));
    }
    let g_order = if s > t { 2 } else { 3 };
    if g_order == 3 {
        // singular case: a vertex in few triangles witnesses a sparse
        // neighbourhood, which is the lemma's sparse alternative
        let per_vertex = (delta / 2.0 * n * n).ceil() as usize;
        for v in 0..g.n() as u32 {
            if cliques_through(g, v, 3, per_vertex) < per_vertex {
                let set = g.neighbor_set(v);
                let internal_edges = g.edges_within(&set);
                return Ok(ComposeOutcome::Sparse(SparseWitness {
                    size_bound: (s as f64 / (s + t) as f64
                        - 10.0 * s as f64 * (s + t) as f64 * delta)
                        * n,
                    internal_edges,
                    set,
                }));
            }
        }
    }
    let absorber = build_absorber(g, delta / 2.0, g_order, seed, max_retries)?;
    let mut remainder = VertexSet::full(g.n());
    for c in &absorber.cliques {
        for &v in &c.vertices {
            remainder.remove(v);
        }
    }
    match local_search(g, s, t, remainder, default_leftover(s, t), delta / 2.0) {
        CoverOutcome::Covered { factor, leftover } => Ok(ComposeOutcome::Covered {
            factor,
            absorber,
            leftover,
        }),
        CoverOutcome::Sparse(w) => Ok(ComposeOutcome::Sparse(w)),
    }
}
