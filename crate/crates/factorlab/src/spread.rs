//! Randomized samplers over matchings and factors, spread verification, the
//! sequential covering process, and the exact K_2* packing.

use crate::error::{Error, Result};
use crate::graph::{Graph, GraphBuilder, VertexSet};
use crate::rng::{derive_seed, SplitMix64};
use num_rational::Rational64;
use num_traits::Zero;
use serde::Serialize;

// ---------------------------------------------------------------------------
// The mu_C matching sampler
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub enum MuCOutcome {
    /// a perfect matching as (left, right) pairs sorted by left vertex
    Matching(Vec<(u32, u32)>),
    /// the conditioning event failed: J_C has no perfect matching
    NoMatching,
}

/// Each vertex draws `c` incident edges uniformly with repetition; their
/// union `J_C` gets a maximum matching by augmenting paths in ascending
/// order ("lowest augmenting path first") over a seed-derived relabeling of
/// the two classes. The relabeling keeps the extraction a pure function of
/// the seed while making the conditional law exchangeable under class
/// relabelings. Perfect matchings are returned, anything less is a failed
/// conditioning event.
pub fn mu_c_sample(
    host: &Graph,
    a: &VertexSet,
    b: &VertexSet,
    c: u32,
    seed: u64,
) -> Result<MuCOutcome> {
    if a.len() != b.len() {
        return Err(Error::Argument(format!(
            "mu_c_sample requires equal classes, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let mut shuffle_rng = SplitMix64::new(derive_seed(seed, 0x5af3));
    let mut left: Vec<u32> = a.to_vec();
    let mut right: Vec<u32> = b.to_vec();
    for i in (1..left.len()).rev() {
        let j = shuffle_rng.next_below(i as u64 + 1) as usize;
        left.swap(i, j);
    }
    for i in (1..right.len()).rev() {
        let j = shuffle_rng.next_below(i as u64 + 1) as usize;
        right.swap(i, j);
    }
    let rindex: std::collections::BTreeMap<u32, usize> =
        right.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let lindex: std::collections::BTreeMap<u32, usize> =
        left.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut rng = SplitMix64::new(seed);
    // adjacency of J_C as left -> sorted right-indices
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); left.len()];
    for (li, &v) in left.iter().enumerate() {
        let nbs: Vec<u32> = host.neighbors(v).filter(|w| b.contains(*w)).collect();
        if nbs.is_empty() {
            return Err(Error::Argument(format!("vertex {v} has no cross neighbours")));
        }
        for _ in 0..c {
            let w = nbs[rng.next_below(nbs.len() as u64) as usize];
            adj[li].push(rindex[&w]);
        }
    }
    for (ri, &v) in right.iter().enumerate() {
        let nbs: Vec<u32> = host.neighbors(v).filter(|w| a.contains(*w)).collect();
        if nbs.is_empty() {
            return Err(Error::Argument(format!("vertex {v} has no cross neighbours")));
        }
        for _ in 0..c {
            let w = nbs[rng.next_below(nbs.len() as u64) as usize];
            adj[lindex[&w]].push(ri);
        }
    }
    for l in adj.iter_mut() {
        l.sort_unstable();
        l.dedup();
    }
    // Kuhn's algorithm in deterministic order
    let n = left.len();
    let mut match_right: Vec<Option<usize>> = vec![None; n];
    let mut match_left: Vec<Option<usize>> = vec![None; n];
    fn augment(
        li: usize,
        adj: &[Vec<usize>],
        seen: &mut [bool],
        match_left: &mut [Option<usize>],
        match_right: &mut [Option<usize>],
    ) -> bool {
        for &ri in &adj[li] {
            if seen[ri] {
                continue;
            }
            seen[ri] = true;
            let free = match match_right[ri] {
                None => true,
                Some(other) => augment(other, adj, seen, match_left, match_right),
            };
            if free {
                match_right[ri] = Some(li);
                match_left[li] = Some(ri);
                return true;
            }
        }
        false
    }
    let mut size = 0;
    for li in 0..n {
        let mut seen = vec![false; n];
        if augment(li, &adj, &mut seen, &mut match_left, &mut match_right) {
            size += 1;
        }
    }
    if size < n {
        return Ok(MuCOutcome::NoMatching);
    }
    let mut pairs: Vec<(u32, u32)> = (0..n)
        .map(|li| (left[li], right[match_left[li].unwrap()]))
        .collect();
    pairs.sort_unstable();
    Ok(MuCOutcome::Matching(pairs))
}

// ---------------------------------------------------------------------------
// Spread verification
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct SpreadReport {
    /// conditioned (successful) samples
    pub samples: usize,
    pub attempts: usize,
    pub q_claimed: f64,
    pub worst_single_frequency: f64,
    pub worst_pair_frequency: f64,
    /// single edges whose Wilson 4-sigma lower bound exceeds q
    pub single_flags: usize,
    /// disjoint pairs whose Wilson 4-sigma lower bound exceeds `1.5 q^2`
    pub pair_flags: usize,
    pub pairs_checked: usize,
}

/// Wilson score interval lower bound at `z` sigmas.
pub fn wilson_lower(successes: u64, n: u64, z: f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let centre = p + z2 / (2.0 * nf);
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    ((centre - half) / (1.0 + z2 / nf)).max(0.0)
}

/// Wilson score interval upper bound at `z` sigmas.
pub fn wilson_upper(successes: u64, n: u64, z: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let centre = p + z2 / (2.0 * nf);
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    ((centre + half) / (1.0 + z2 / nf)).min(1.0)
}

/// Monte Carlo spread check for the conditioned mu_C sampler on `(a, b)`:
/// every host cross edge is tracked as a singleton set, plus `pair_checks`
/// random disjoint edge pairs. A flag means the estimated inclusion
/// probability exceeds its bound beyond 4-sigma Wilson slack.
#[allow(clippy::too_many_arguments)]
pub fn verify_spread(
    host: &Graph,
    a: &VertexSet,
    b: &VertexSet,
    c: u32,
    q_claimed: f64,
    pair_checks: usize,
    trials: usize,
    seed: u64,
) -> Result<SpreadReport> {
    let left: Vec<u32> = a.to_vec();
    let right: Vec<u32> = b.to_vec();
    let rindex: std::collections::BTreeMap<u32, usize> =
        right.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let li_of: std::collections::BTreeMap<u32, usize> =
        left.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let edges: Vec<(u32, u32)> = left
        .iter()
        .flat_map(|&u| {
            host.neighbors(u)
                .filter(|w| b.contains(*w))
                .map(move |w| (u, w))
                .collect::<Vec<_>>()
        })
        .collect();
    // random disjoint edge pairs
    let mut prng = SplitMix64::new(derive_seed(seed, u64::MAX - 1));
    let mut pairs: Vec<((u32, u32), (u32, u32))> = Vec::with_capacity(pair_checks);
    for _ in 0..pair_checks * 50 {
        if pairs.len() >= pair_checks || edges.len() < 2 {
            break;
        }
        let e = edges[prng.next_below(edges.len() as u64) as usize];
        let f = edges[prng.next_below(edges.len() as u64) as usize];
        if e.0 != f.0 && e.1 != f.1 {
            pairs.push((e, f));
        }
    }
    let mut edge_hits = vec![0u64; left.len() * right.len()];
    let mut pair_hits = vec![0u64; pairs.len()];
    let mut samples = 0usize;
    let mut attempts = 0usize;
    while samples < trials {
        attempts += 1;
        if attempts > trials * 20 {
            return Err(Error::ConstructionFailure {
                retries: attempts,
                msg: "mu_C conditioning event failing too often".into(),
            });
        }
        match mu_c_sample(host, a, b, c, derive_seed(seed, attempts as u64))? {
            MuCOutcome::NoMatching => continue,
            MuCOutcome::Matching(m) => {
                samples += 1;
                let mut partner = vec![usize::MAX; left.len()];
                for &(u, v) in &m {
                    let li = li_of[&u];
                    let ri = rindex[&v];
                    partner[li] = ri;
                    edge_hits[li * right.len() + ri] += 1;
                }
                for (pi, &((u1, v1), (u2, v2))) in pairs.iter().enumerate() {
                    if partner[li_of[&u1]] == rindex[&v1] && partner[li_of[&u2]] == rindex[&v2] {
                        pair_hits[pi] += 1;
                    }
                }
            }
        }
    }
    let mut single_flags = 0;
    let mut worst_single = 0.0f64;
    for &(u, v) in &edges {
        let hits = edge_hits[li_of[&u] * right.len() + rindex[&v]];
        worst_single = worst_single.max(hits as f64 / samples as f64);
        if wilson_lower(hits, samples as u64, 4.0) > q_claimed {
            single_flags += 1;
        }
    }
    let mut pair_flags = 0;
    let mut worst_pair = 0.0f64;
    let pair_bound = 1.5 * q_claimed * q_claimed;
    for &hits in &pair_hits {
        worst_pair = worst_pair.max(hits as f64 / samples as f64);
        if wilson_lower(hits, samples as u64, 4.0) > pair_bound {
            pair_flags += 1;
        }
    }
    Ok(SpreadReport {
        samples,
        attempts,
        q_claimed,
        worst_single_frequency: worst_single,
        worst_pair_frequency: worst_pair,
        single_flags,
        pair_flags,
        pairs_checked: pairs.len(),
    })
}

// ---------------------------------------------------------------------------
// The sequential covering process
// ---------------------------------------------------------------------------

/// An embedded complete-multipartite copy with its designated small class.
#[derive(Clone, Debug, Serialize)]
pub struct BCopy {
    pub t_class: Vec<u32>,
    pub s_classes: Vec<Vec<u32>>,
}

impl BCopy {
    pub fn vertices(&self) -> Vec<u32> {
        let mut v: Vec<u32> = self
            .t_class
            .iter()
            .chain(self.s_classes.iter().flatten())
            .copied()
            .collect();
        v.sort_unstable();
        v
    }

    /// all cross pairs present in the host
    pub fn is_valid_in(&self, g: &Graph) -> bool {
        let mut classes: Vec<&[u32]> = vec![&self.t_class];
        classes.extend(self.s_classes.iter().map(|c| c.as_slice()));
        for (i, ci) in classes.iter().enumerate() {
            for cj in classes.iter().skip(i + 1) {
                for &u in ci.iter() {
                    for &v in cj.iter() {
                        if !g.has_edge(u, v) {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }
}

/// Enumerates candidate copies through a vertex, avoiding a forbidden set.
pub trait CandidateProvider {
    fn candidates(&self, g: &Graph, x: u32, forbidden: &VertexSet) -> Result<Vec<BCopy>>;
}

/// Exhaustive desk-scale provider for `B_{m,s,t}` copies with the target
/// vertex in the class of size `t`.
pub struct BmstProvider {
    pub m: u32,
    pub s: u32,
    pub t: u32,
    /// hard cap on the number of enumerated candidates
    pub cap: usize,
}

impl BmstProvider {
    pub fn new(m: u32, s: u32, t: u32) -> Self {
        BmstProvider {
            m,
            s,
            t,
            cap: 5_000_000,
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn rec_t_class(
        &self,
        g: &Graph,
        x: u32,
        pool: &[u32],
        from: usize,
        t_rest: &mut Vec<u32>,
        avail: &VertexSet,
        out: &mut Vec<BCopy>,
    ) -> Result<()> {
        let t = self.t as usize;
        if t_rest.len() == t - 1 {
            // common neighbourhood of the whole t-class hosts the s-classes
            let mut common = g.neighbor_set(x);
            for &v in t_rest.iter() {
                common.intersect_with(&g.neighbor_set(v));
            }
            common.intersect_with(avail);
            for &v in t_rest.iter() {
                common.remove(v);
            }
            let mut t_class = vec![x];
            t_class.extend(t_rest.iter().copied());
            t_class.sort_unstable();
            let mut classes: Vec<Vec<u32>> = Vec::new();
            self.rec_s_classes(&t_class, g, common, self.m as usize, &mut classes, out)?;
            return Ok(());
        }
        for i in from..pool.len() {
            t_rest.push(pool[i]);
            self.rec_t_class(g, x, pool, i + 1, t_rest, avail, out)?;
            t_rest.pop();
        }
        Ok(())
    }

    /// Chooses the remaining s-classes; classes are ordered by their minimum
    /// vertex so each unordered family appears once.
    fn rec_s_classes(
        &self,
        t_class: &[u32],
        g: &Graph,
        pool: VertexSet,
        remaining: usize,
        classes: &mut Vec<Vec<u32>>,
        out: &mut Vec<BCopy>,
    ) -> Result<()> {
        if remaining == 0 {
            out.push(BCopy {
                t_class: t_class.to_vec(),
                s_classes: classes.clone(),
            });
            if out.len() > self.cap {
                return Err(Error::SizeLimit(format!(
                    "candidate enumeration exceeded cap {}",
                    self.cap
                )));
            }
            return Ok(());
        }
        let verts: Vec<u32> = pool.to_vec();
        let mut class: Vec<u32> = Vec::with_capacity(self.s as usize);
        self.rec_one_class(t_class, g, &verts, 0, &mut class, &pool, remaining, classes, out)
    }

    #[allow(clippy::too_many_arguments)]
    fn rec_one_class(
        &self,
        t_class: &[u32],
        g: &Graph,
        verts: &[u32],
        from: usize,
        class: &mut Vec<u32>,
        pool: &VertexSet,
        remaining: usize,
        classes: &mut Vec<Vec<u32>>,
        out: &mut Vec<BCopy>,
    ) -> Result<()> {
        let s = self.s as usize;
        if class.len() == s {
            let mut next_pool = pool.clone();
            for &v in class.iter() {
                next_pool.remove(v);
                next_pool.intersect_with(&g.neighbor_set(v));
            }
            // canonical order: later classes start above this class's minimum
            let first = class[0];
            for w in 0..first {
                if next_pool.contains(w) {
                    next_pool.remove(w);
                }
            }
            classes.push(class.clone());
            self.rec_s_classes(t_class, g, next_pool, remaining - 1, classes, out)?;
            classes.pop();
            return Ok(());
        }
        for i in from..verts.len() {
            if verts.len() - i < s - class.len() {
                break;
            }
            class.push(verts[i]);
            self.rec_one_class(t_class, g, verts, i + 1, class, pool, remaining, classes, out)?;
            class.pop();
        }
        Ok(())
    }
}

impl CandidateProvider for BmstProvider {
    fn candidates(&self, g: &Graph, x: u32, forbidden: &VertexSet) -> Result<Vec<BCopy>> {
        let n = g.n();
        let mut avail = VertexSet::full(n);
        avail.subtract(forbidden);
        avail.remove(x);
        let pool: Vec<u32> = avail.to_vec();
        let mut out = Vec::new();
        let mut t_rest: Vec<u32> = Vec::with_capacity(self.t as usize - 1);
        self.rec_t_class(g, x, &pool, 0, &mut t_rest, &avail, &mut out)?;
        Ok(out)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct XCoverStep {
    pub x: u32,
    pub candidates: usize,
}

#[derive(Clone, Debug)]
pub enum XCoverResult {
    Covered {
        copies: Vec<BCopy>,
        steps: Vec<XCoverStep>,
    },
    Stuck {
        at: u32,
        steps: Vec<XCoverStep>,
    },
}

/// The sequential process: pick a random uncovered target vertex, pick a
/// random candidate copy avoiding everything used so far, repeat. Per-step
/// candidate counts are reported rather than assumed.
pub fn x_cover_process<P: CandidateProvider>(
    g: &Graph,
    x: &VertexSet,
    provider: &P,
    seed: u64,
) -> Result<XCoverResult> {
    let mut rng = SplitMix64::new(seed);
    let mut remaining = x.clone();
    let mut used = VertexSet::new(g.n());
    let mut copies = Vec::new();
    let mut steps = Vec::new();
    while !remaining.is_empty() {
        let verts: Vec<u32> = remaining.to_vec();
        let xj = verts[rng.next_below(verts.len() as u64) as usize];
        let cands = provider.candidates(g, xj, &used)?;
        steps.push(XCoverStep {
            x: xj,
            candidates: cands.len(),
        });
        if cands.is_empty() {
            return Ok(XCoverResult::Stuck { at: xj, steps });
        }
        let copy = cands[rng.next_below(cands.len() as u64) as usize].clone();
        debug_assert!(copy.is_valid_in(g));
        for v in copy.vertices() {
            used.insert(v);
            remaining.remove(v);
        }
        copies.push(copy);
    }
    Ok(XCoverResult::Covered { copies, steps })
}

// ---------------------------------------------------------------------------
// K_2* packing
// ---------------------------------------------------------------------------

/// One embedded weighted edge: `sigma` carries weight `1/(t(s+t))`,
/// `tau` carries `1/(s(s+t))`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct K2StarCopy {
    pub sigma: u32,
    pub tau: u32,
}

#[derive(Clone, Debug)]
pub struct WeightedPacking {
    pub s: u32,
    pub t: u32,
    pub copies: Vec<K2StarCopy>,
}

impl WeightedPacking {
    pub fn w_sigma(&self) -> Rational64 {
        Rational64::new(1, (self.t as i64) * (self.s as i64 + self.t as i64))
    }

    pub fn w_tau(&self) -> Rational64 {
        Rational64::new(1, (self.s as i64) * (self.s as i64 + self.t as i64))
    }

    /// Exact per-vertex weights on a host of order `n`.
    pub fn vertex_weights(&self, n: usize) -> Vec<Rational64> {
        let mut w = vec![Rational64::zero(); n];
        for c in &self.copies {
            w[c.sigma as usize] += self.w_sigma();
            w[c.tau as usize] += self.w_tau();
        }
        w
    }

    /// `v(host) - total packed weight`, exactly.
    pub fn residue(&self, n: usize) -> Rational64 {
        let total: Rational64 = self
            .vertex_weights(n)
            .into_iter()
            .fold(Rational64::zero(), |a, b| a + b);
        Rational64::from(n as i64) - total
    }
}

/// The explicit zero-residue packing of Q: for each matching edge `m_j n_j`,
/// `t` copies of the (s+t)-fold weighted edge with `sigma -> n_j`,
/// `tau -> m_j`; for each L-vertex one such copy per `j` with `sigma -> l`;
/// each (s+t)-fold copy split into `s+t` unit copies. Every tau endpoint
/// lies in the M-part. Requires `t < s`; at `t = s` the graph Q is a perfect
/// matching and needs no packing.
pub fn k2star_packing(s: u32, t: u32) -> Result<(Graph, WeightedPacking, VertexSet)> {
    if t >= s {
        return Err(Error::Argument(format!(
            "k2star_packing requires t < s (got s={s}, t={t}); for t = s use \
             the matching directly"
        )));
    }
    if t < 1 {
        return Err(Error::Argument("t must be at least 1".into()));
    }
    let (q, _l, m, _n) = crate::hosts::q_graph(s, t)?;
    let (su, tu) = (s as usize, t as usize);
    let fold = su + tu;
    let mut copies = Vec::with_capacity(su * tu * fold);
    // vertex layout from q_graph: L = 0..s-t, M = s-t..s, N = s..s+t
    let m_of = |j: usize| (su - tu + j) as u32;
    let n_of = |j: usize| (su + j) as u32;
    for j in 0..tu {
        for _ in 0..tu * fold {
            copies.push(K2StarCopy {
                sigma: n_of(j),
                tau: m_of(j),
            });
        }
    }
    for l in 0..(su - tu) as u32 {
        for j in 0..tu {
            for _ in 0..fold {
                copies.push(K2StarCopy {
                    sigma: l,
                    tau: m_of(j),
                });
            }
        }
    }
    let packing = WeightedPacking { s, t, copies };
    Ok((q, packing, m))
}

// ---------------------------------------------------------------------------
// Recursive multipartite factor sampling
// ---------------------------------------------------------------------------

/// Desk-scale constants for the recursive sampler; the asymptotic hierarchy
/// carries no numbers, so these defaults are reported with every run.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RecursiveConfig {
    /// density parameter of the common-neighbour filter `(d^2 - sqrt(eps)) n`
    pub d: f64,
    pub eps: f64,
    /// retries for the conditioned matching at each level
    pub mu_retries: usize,
    /// densities below this trigger a warning flag
    pub density_warning: f64,
}

impl Default for RecursiveConfig {
    fn default() -> Self {
        RecursiveConfig {
            d: 0.7,
            eps: 0.01,
            mu_retries: 100,
            density_warning: 0.2,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelReport {
    /// number of columns when this level ran
    pub columns: usize,
    /// per-group density of the filtered pair graph
    pub densities: Vec<f64>,
    pub low_density_warning: bool,
}

#[derive(Clone, Debug)]
pub enum RecursiveSample {
    Sampled {
        /// per group: disjoint s-sets, each one vertex per original column
        matchings: Vec<Vec<Vec<u32>>>,
        levels: Vec<LevelReport>,
    },
    Failed {
        columns: usize,
        group: usize,
        reason: String,
    },
}

/// Samples, for each group `i`, a perfect s-uniform matching whose cells
/// are s-cliques of the host with one vertex per column `V_{i,j}`:
/// repeatedly matches the last two columns through the common-neighbour
/// filter via the conditioned sampler, contracts, and recurses on `s - 1`.
/// The extendability of the output is not certified; the contract is the
/// structural one checked here.
pub fn recursive_factor_sample(
    host: &Graph,
    parts: &[Vec<VertexSet>],
    c: u32,
    seed: u64,
    config: &RecursiveConfig,
) -> Result<RecursiveSample> {
    if parts.is_empty() || parts[0].is_empty() {
        return Err(Error::Argument("parts grid must be nonempty".into()));
    }
    let s = parts[0].len();
    let n_part = parts[0][0].len();
    for row in parts {
        if row.len() != s || row.iter().any(|p| p.len() != n_part) {
            return Err(Error::Argument(
                "parts grid must be rectangular with equal part sizes".into(),
            ));
        }
    }
    // cells[i][j] = merged vertex groups in column j of group i
    let mut cells: Vec<Vec<Vec<Vec<u32>>>> = parts
        .iter()
        .map(|row| {
            row.iter()
                .map(|p| p.iter().map(|v| vec![v]).collect())
                .collect()
        })
        .collect();
    let mut levels = Vec::new();
    let mut columns = s;
    let mut level_seed = seed;
    while columns > 1 {
        let mut densities = Vec::with_capacity(cells.len());
        for gi in 0..cells.len() {
            let (left, right) = (columns - 2, columns - 1);
            let nl = cells[gi][left].len();
            let filter_need = (config.d * config.d - config.eps.sqrt()) * n_part as f64;
            let mut pair_graph = GraphBuilder::new(2 * nl)?;
            let mut kept = 0usize;
            for (ui, ucell) in cells[gi][left].iter().enumerate() {
                for (wi, wcell) in cells[gi][right].iter().enumerate() {
                    if !cells_adjacent(host, ucell, wcell) {
                        continue;
                    }
                    // enough common cell-neighbours in every remaining column
                    let mut ok = true;
                    'cols: for (gj, grow) in cells.iter().enumerate() {
                        for (cj, col) in grow.iter().enumerate() {
                            if gj == gi && (cj == left || cj == right) {
                                continue;
                            }
                            let mut common = 0usize;
                            for z in col.iter() {
                                if cells_adjacent(host, z, ucell)
                                    && cells_adjacent(host, z, wcell)
                                {
                                    common += 1;
                                }
                            }
                            if (common as f64) < filter_need {
                                ok = false;
                                break 'cols;
                            }
                        }
                    }
                    if ok {
                        pair_graph.add_edge(ui as u32, (nl + wi) as u32);
                        kept += 1;
                    }
                }
            }
            let g2 = pair_graph.build();
            densities.push(kept as f64 / (nl * nl) as f64);
            if (0..2 * nl as u32).any(|v| g2.degree(v) == 0) {
                return Ok(RecursiveSample::Failed {
                    columns,
                    group: gi,
                    reason: "filtered pair graph has an isolated cell".into(),
                });
            }
            let a = VertexSet::from_iter(2 * nl, 0..nl as u32);
            let b = VertexSet::from_iter(2 * nl, nl as u32..2 * nl as u32);
            let mut matched: Option<Vec<(u32, u32)>> = None;
            for attempt in 0..config.mu_retries {
                level_seed = derive_seed(level_seed, attempt as u64);
                match mu_c_sample(&g2, &a, &b, c, level_seed)? {
                    MuCOutcome::Matching(pairs) => {
                        matched = Some(pairs);
                        break;
                    }
                    MuCOutcome::NoMatching => continue,
                }
            }
            let Some(pairs) = matched else {
                return Ok(RecursiveSample::Failed {
                    columns,
                    group: gi,
                    reason: format!(
                        "no conditioned matching within {} retries",
                        config.mu_retries
                    ),
                });
            };
            // contract: merge matched right cells into their left partners
            let mut merged: Vec<Vec<u32>> = Vec::with_capacity(nl);
            for &(li, ri) in &pairs {
                let mut cell = cells[gi][left][li as usize].clone();
                cell.extend(&cells[gi][right][(ri as usize) - nl]);
                cell.sort_unstable();
                merged.push(cell);
            }
            cells[gi][left] = merged;
            cells[gi].truncate(columns - 1);
        }
        let low = densities.iter().any(|&d| d < config.density_warning);
        levels.push(LevelReport {
            columns,
            densities,
            low_density_warning: low,
        });
        columns -= 1;
    }
    let matchings: Vec<Vec<Vec<u32>>> = cells.into_iter().map(|row| row[0].clone()).collect();
    // structural verification: disjoint s-cliques, one vertex per column
    for (gi, cellrow) in matchings.iter().enumerate() {
        let mut seen = VertexSet::new(host.n());
        for cell in cellrow {
            if cell.len() != s {
                return Err(Error::Internal("cell of wrong order".into()));
            }
            for (i, &u) in cell.iter().enumerate() {
                if seen.contains(u) {
                    return Err(Error::Internal("cells intersect".into()));
                }
                seen.insert(u);
                for &v in &cell[i + 1..] {
                    if !host.has_edge(u, v) {
                        return Err(Error::Internal("cell is not a clique".into()));
                    }
                }
                let col = parts[gi].iter().filter(|p| p.contains(u)).count();
                if col != 1 {
                    return Err(Error::Internal("cell vertex outside its column".into()));
                }
            }
        }
    }
    Ok(RecursiveSample::Sampled { matchings, levels })
}

/// Contraction adjacency: every cross pair between the two cells is a host
/// edge.
fn cells_adjacent(host: &Graph, a: &[u32], b: &[u32]) -> bool {
    a.iter().all(|&u| b.iter().all(|&v| host.has_edge(u, v)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hosts::bipartite_random;

    fn complete_bipartite(n: usize) -> (Graph, VertexSet, VertexSet) {
        let g = bipartite_random(n, n, 1.0, 0).unwrap();
        (
            g,
            VertexSet::from_iter(2 * n, 0..n as u32),
            VertexSet::from_iter(2 * n, n as u32..2 * n as u32),
        )
    }

    #[test]
    fn mu_c_on_a_perfect_matching_host() {
        // host is itself a perfect matching: J_C = host, always returned
        let n = 6;
        let mut b = GraphBuilder::new(2 * n).unwrap();
        for i in 0..n as u32 {
            b.add_edge(i, i + n as u32);
        }
        let g = b.build();
        let a = VertexSet::from_iter(2 * n, 0..n as u32);
        let bb = VertexSet::from_iter(2 * n, n as u32..2 * n as u32);
        for seed in 0..20 {
            match mu_c_sample(&g, &a, &bb, 3, seed).unwrap() {
                MuCOutcome::Matching(m) => {
                    assert_eq!(m.len(), n);
                    for (u, v) in m {
                        assert_eq!(v, u + n as u32);
                    }
                }
                MuCOutcome::NoMatching => panic!("host matching must always appear"),
            }
        }
    }

    #[test]
    fn mu_c_low_c_often_fails_on_knn() {
        // C = 1 on K_{8,8}: perfect matchings are rare
        let (g, a, b) = complete_bipartite(8);
        let mut failures = 0;
        for seed in 0..200 {
            if matches!(
                mu_c_sample(&g, &a, &b, 1, seed).unwrap(),
                MuCOutcome::NoMatching
            ) {
                failures += 1;
            }
        }
        assert!(failures > 100, "only {failures} failures");
    }

    #[test]
    fn mu_c_large_c_mostly_succeeds() {
        let (g, a, b) = complete_bipartite(20);
        let mut ok = 0;
        for seed in 0..100 {
            if matches!(
                mu_c_sample(&g, &a, &b, 8, seed).unwrap(),
                MuCOutcome::Matching(_)
            ) {
                ok += 1;
            }
        }
        assert!(ok >= 75, "success rate too low: {ok}/100");
    }

    #[test]
    fn mu_c_rejects_unbalanced() {
        let (g, a, _) = complete_bipartite(4);
        let b = VertexSet::from_iter(8, 4..7);
        assert!(mu_c_sample(&g, &a, &b, 2, 0).is_err());
    }

    #[test]
    fn per_edge_frequencies_roughly_uniform() {
        // exchangeability on K_{n,n}: all edge frequencies within 4 sigma
        let n = 8;
        let (g, a, b) = complete_bipartite(n);
        let mut hits = vec![0u64; n * n];
        let mut samples = 0u64;
        let mut seed = 0u64;
        while samples < 20_000 {
            seed += 1;
            if let MuCOutcome::Matching(m) = mu_c_sample(&g, &a, &b, 6, seed).unwrap() {
                samples += 1;
                for (u, v) in m {
                    hits[u as usize * n + (v as usize - n)] += 1;
                }
            }
        }
        let p = 1.0 / n as f64;
        let sigma = (p * (1.0 - p) / samples as f64).sqrt();
        for (i, &h) in hits.iter().enumerate() {
            let freq = h as f64 / samples as f64;
            assert!(
                (freq - p).abs() < 4.0 * sigma + 1.0 / samples as f64,
                "edge {i}: freq {freq} vs {p} (sigma {sigma})"
            );
        }
    }

    #[test]
    fn spread_bound_not_flagged_on_knn() {
        let n = 20;
        let (g, a, b) = complete_bipartite(n);
        let q = 4.0 * 8.0 / n as f64;
        let report = verify_spread(&g, &a, &b, 8, q, 500, 2_000, 11).unwrap();
        assert_eq!(report.single_flags, 0);
        assert_eq!(report.pair_flags, 0);
        assert!(report.worst_single_frequency <= q);
    }

    #[test]
    fn packing_small_cases() {
        let (_, p, m) = k2star_packing(2, 1).unwrap();
        assert_eq!(p.w_sigma(), Rational64::new(1, 3));
        assert_eq!(p.w_tau(), Rational64::new(1, 6));
        assert!(p.residue(3).is_zero());
        for c in &p.copies {
            assert!(m.contains(c.tau));
        }
        let (_, p, _) = k2star_packing(5, 3).unwrap();
        assert_eq!(p.copies.len(), 120);
        for w in p.vertex_weights(8) {
            assert_eq!(w, Rational64::from(1));
        }
    }

    #[test]
    fn packing_all_s_t() {
        for s in 2..=8u32 {
            for t in 1..s {
                let (q, p, m) = k2star_packing(s, t).unwrap();
                let weights = p.vertex_weights(q.n());
                assert!(
                    weights.iter().all(|w| *w == Rational64::from(1)),
                    "s={s} t={t}"
                );
                assert!(p.residue(q.n()).is_zero());
                for c in &p.copies {
                    assert!(q.has_edge(c.sigma, c.tau), "copy not on an edge");
                    assert!(m.contains(c.tau));
                }
            }
        }
        assert!(k2star_packing(3, 3).is_err());
    }

    #[test]
    fn x_cover_empty_and_singleton() {
        let g = Graph::complete(12).unwrap();
        let provider = BmstProvider::new(1, 2, 2);
        let empty = VertexSet::new(12);
        match x_cover_process(&g, &empty, &provider, 0).unwrap() {
            XCoverResult::Covered { copies, .. } => assert!(copies.is_empty()),
            _ => panic!("empty X must be covered"),
        }
        let x = VertexSet::from_iter(12, [3u32]);
        match x_cover_process(&g, &x, &provider, 1).unwrap() {
            XCoverResult::Covered { copies, steps } => {
                assert_eq!(copies.len(), 1);
                assert!(copies[0].t_class.contains(&3));
                assert!(steps[0].candidates > 0);
            }
            _ => panic!("K_n hosts every copy"),
        }
    }

    #[test]
    fn x_cover_on_extremal_host() {
        // independent A on low ids, everything else complete; copies through
        // A-vertices put them in the t-class of a K_{2,2}
        let (g, a) = crate::hosts::f_gamma(24, 4, 2, 0.0).unwrap();
        let x = VertexSet::from_iter(24, a.iter().take(3));
        let provider = BmstProvider::new(1, 2, 2);
        match x_cover_process(&g, &x, &provider, 5).unwrap() {
            XCoverResult::Covered { copies, .. } => {
                let mut seen = VertexSet::new(24);
                for c in &copies {
                    assert!(c.is_valid_in(&g));
                    for v in c.vertices() {
                        assert!(!seen.contains(v), "copies intersect");
                        seen.insert(v);
                    }
                }
                assert!(x.is_subset_of(&seen));
            }
            XCoverResult::Stuck { at, .. } => panic!("stuck at {at}"),
        }
    }

    #[test]
    fn recursive_base_case_s1() {
        let g = Graph::complete(6).unwrap();
        let parts = vec![vec![VertexSet::from_iter(6, 0..3)]];
        match recursive_factor_sample(&g, &parts, 4, 0, &RecursiveConfig::default()).unwrap() {
            RecursiveSample::Sampled { matchings, levels } => {
                assert!(levels.is_empty());
                assert_eq!(matchings[0].len(), 3);
                assert!(matchings[0].iter().all(|c| c.len() == 1));
            }
            RecursiveSample::Failed { reason, .. } => panic!("{reason}"),
        }
    }

    #[test]
    fn recursive_s2_complete_bipartite() {
        let (g, a, b) = complete_bipartite(10);
        let parts = vec![vec![a, b]];
        match recursive_factor_sample(&g, &parts, 6, 3, &RecursiveConfig::default()).unwrap() {
            RecursiveSample::Sampled { matchings, .. } => {
                assert_eq!(matchings[0].len(), 10);
                for cell in &matchings[0] {
                    assert_eq!(cell.len(), 2);
                    assert!(g.has_edge(cell[0], cell[1]));
                }
            }
            RecursiveSample::Failed { reason, .. } => panic!("{reason}"),
        }
    }

    #[test]
    fn recursive_s3_triangles() {
        // three pairwise-complete parts of size 20: 20 disjoint triangles
        let n_part = 20;
        let n = 3 * n_part;
        let mut b = GraphBuilder::new(n).unwrap();
        for u in 0..n as u32 {
            for v in u + 1..n as u32 {
                if (u as usize) / n_part != (v as usize) / n_part {
                    b.add_edge(u, v);
                }
            }
        }
        let g = b.build();
        let parts = vec![vec![
            VertexSet::from_iter(n, 0..n_part as u32),
            VertexSet::from_iter(n, n_part as u32..2 * n_part as u32),
            VertexSet::from_iter(n, 2 * n_part as u32..3 * n_part as u32),
        ]];
        match recursive_factor_sample(&g, &parts, 8, 17, &RecursiveConfig::default()).unwrap() {
            RecursiveSample::Sampled { matchings, levels } => {
                assert_eq!(matchings[0].len(), n_part);
                assert_eq!(levels.len(), 2);
                for cell in &matchings[0] {
                    assert_eq!(cell.len(), 3);
                    assert!(g.has_edge(cell[0], cell[1]));
                    assert!(g.has_edge(cell[0], cell[2]));
                    assert!(g.has_edge(cell[1], cell[2]));
                }
            }
            RecursiveSample::Failed { reason, .. } => panic!("{reason}"),
        }
    }
}
