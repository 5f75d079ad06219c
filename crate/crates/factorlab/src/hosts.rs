//! Deterministic and rejection-sampled generators for the host graphs.
//!
//! Each generator is a pure function of its parameters and seed. Designated
//! vertex sets (the independent or pseudorandom part `A`, the `L/M/N` parts
//! of `Q`) are returned alongside the graph so downstream checks always work
//! with realized sizes, never ideals.

use crate::bounds::phi;
use crate::census::IsoClasses;
use crate::error::{Error, Result};
use crate::graph::{Graph, GraphBuilder, VertexSet};
use crate::perturb::derive_uniform_unchecked;
use crate::rng::derive_seed;
use serde::{Deserialize, Serialize};

/// Rounds half up, the convention for all fractional set sizes.
#[inline]
pub fn round_half_up(x: f64) -> i64 {
    (x + 0.5).floor() as i64
}

/// `F_{r,s,gamma}`: an independent set `A` of rounded order
/// `(s/r - gamma) n` on the lowest ids, plus all remaining edges.
pub fn f_gamma(n: usize, r: u32, s: u32, gamma: f64) -> Result<(Graph, VertexSet)> {
    if s < 1 || s >= r {
        return Err(Error::Domain(format!("f_gamma requires 1 <= s < r, got s={s} r={r}")));
    }
    if !(0.0..1.0 / r as f64).contains(&gamma) {
        return Err(Error::Domain(format!(
            "f_gamma requires 0 <= gamma < 1/r, got gamma={gamma} r={r}"
        )));
    }
    let a_size = round_half_up((s as f64 / r as f64 - gamma) * n as f64);
    if a_size < 0 || a_size as usize > n {
        return Err(Error::Domain(format!("rounded |A| = {a_size} out of range")));
    }
    let a_size = a_size as usize;
    let mut b = GraphBuilder::new(n)?;
    for u in 0..n as u32 {
        for v in u + 1..n as u32 {
            if (v as usize) >= a_size {
                b.add_edge(u, v);
            }
        }
    }
    Ok((b.build(), VertexSet::from_iter(n, 0..a_size as u32)))
}

/// Complete `ceil(r/2)`-partite graph: `floor(r/2)` classes of size `2n/r`
/// and, for odd `r`, one class of size `n/r`.
pub fn multipartite_s2(n: usize, r: u32) -> Result<Graph> {
    if r < 3 {
        return Err(Error::Domain(format!("multipartite_s2 requires r >= 3, got {r}")));
    }
    if n % r as usize != 0 {
        return Err(Error::Domain(format!("multipartite_s2 requires r | n, got n={n} r={r}")));
    }
    let big = 2 * n / r as usize;
    let mut class = vec![0u32; n];
    let mut idx = 0usize;
    let mut c = 0u32;
    while idx < n {
        let size = if n - idx >= big { big } else { n - idx };
        for v in idx..idx + size {
            class[v] = c;
        }
        idx += size;
        c += 1;
    }
    let mut b = GraphBuilder::new(n)?;
    for u in 0..n as u32 {
        for v in u + 1..n as u32 {
            if class[u as usize] != class[v as usize] {
                b.add_edge(u, v);
            }
        }
    }
    Ok(b.build())
}

/// Independent set of size `n/r + 1` plus all the remaining edges; has no
/// `K_r`-factor.
pub fn hs_tight(n: usize, r: u32) -> Result<(Graph, VertexSet)> {
    if r < 2 || n % r as usize != 0 {
        return Err(Error::Domain(format!("hs_tight requires r >= 2 and r | n, got n={n} r={r}")));
    }
    let a_size = n / r as usize + 1;
    if a_size > n {
        return Err(Error::Domain("independent set larger than n".into()));
    }
    let mut b = GraphBuilder::new(n)?;
    for u in 0..n as u32 {
        for v in u + 1..n as u32 {
            if (v as usize) >= a_size {
                b.add_edge(u, v);
            }
        }
    }
    Ok((b.build(), VertexSet::from_iter(n, 0..a_size as u32)))
}

/// The graph `Q`: `|L| = s - t`, `|M| = |N| = t`, complete bipartite between
/// `L` and `M`, a perfect matching `m_i n_i` between `M` and `N`.
pub fn q_graph(s: u32, t: u32) -> Result<(Graph, VertexSet, VertexSet, VertexSet)> {
    if t < 1 || t > s {
        return Err(Error::Domain(format!("q_graph requires 1 <= t <= s, got s={s} t={t}")));
    }
    let (s, t) = (s as usize, t as usize);
    let v = s + t;
    let mut b = GraphBuilder::new(v)?;
    // L = 0..s-t, M = s-t..s, N = s..s+t
    for l in 0..s - t {
        for m in s - t..s {
            b.add_edge(l as u32, m as u32);
        }
    }
    for i in 0..t {
        b.add_edge((s - t + i) as u32, (s + i) as u32);
    }
    Ok((
        b.build(),
        VertexSet::from_iter(v, (0..(s - t) as u32).collect::<Vec<_>>()),
        VertexSet::from_iter(v, ((s - t) as u32..s as u32).collect::<Vec<_>>()),
        VertexSet::from_iter(v, (s as u32..v as u32).collect::<Vec<_>>()),
    ))
}

/// `B_{m,s,t}`: the complete `(m+1)`-partite graph with `m` classes of size
/// `s` and one class of size `t <= s`.
pub fn b_mst(m: u32, s: u32, t: u32) -> Result<Graph> {
    if m < 1 || t > s || s < 1 || t < 1 {
        return Err(Error::Domain(format!("b_mst requires m >= 1, 1 <= t <= s, got m={m} s={s} t={t}")));
    }
    let n = (m * s + t) as usize;
    let mut class = vec![0u32; n];
    for i in 0..m as usize {
        for v in i * s as usize..(i + 1) * s as usize {
            class[v] = i as u32;
        }
    }
    for v in (m * s) as usize..n {
        class[v] = m;
    }
    let mut b = GraphBuilder::new(n)?;
    for u in 0..n as u32 {
        for v in u + 1..n as u32 {
            if class[u as usize] != class[v as usize] {
                b.add_edge(u, v);
            }
        }
    }
    Ok(b.build())
}

/// Random bipartite graph with classes `[0, a)` and `[a, a + b)`; each cross
/// pair is an edge independently with probability `p` under the same
/// seeded-uniform contract as the perturbation module.
pub fn bipartite_random(a: usize, b: usize, p: f64, seed: u64) -> Result<Graph> {
    if a < 1 || b < 1 {
        return Err(Error::Domain("bipartite_random requires a, b >= 1".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("p must be in [0, 1], got {p}")));
    }
    let n = a + b;
    let mut builder = GraphBuilder::new(n)?;
    for u in 0..a as u32 {
        for v in a as u32..n as u32 {
            if derive_uniform_unchecked(seed, 0, u, v) < p {
                builder.add_edge(u, v);
            }
        }
    }
    Ok(builder.build())
}

/// Outcome of the pseudorandom lower-bound construction.
#[derive(Clone, Debug)]
pub struct PseudorandomHost {
    pub graph: Graph,
    pub a: VertexSet,
    /// realized `k = round(n^{1 - phi(s)})`
    pub k: usize,
    /// tightest `L` for which all induced-embedding counts satisfy the
    /// pseudorandomness bound `L |A|^{v(F)} (k/|A|)^{e(F)}`
    pub l_used: f64,
    pub retries_used: usize,
}

/// Diagnostics for a failed pseudorandom construction.
#[derive(Clone, Copy, Debug, Default)]
struct RejectCounts {
    min_degree: usize,
    clique_free: usize,
    embedding_bound: usize,
}

/// The lower-bound host: `|A| = s n / r + k` with `G[A]` an accepted sample
/// of the random bipartite graph on classes `ceil(|A|/2), floor(|A|/2)` with
/// edge probability `3k/|A|`, and all pairs not inside `A` present.
///
/// Acceptance per sample: minimum degree of `G[A]` at least `k`; no
/// `K_{s+1}` inside `A`; and for every graph `F` on `s + 1` vertices the
/// induced-embedding count at most `4 * 3^{e(F)} |A|^{v(F)} (k/|A|)^{e(F)}`
/// (four times the sampling expectation constant).
pub fn pseudorandom_lower(
    n: usize,
    r: u32,
    s: u32,
    seed: u64,
    max_retries: usize,
) -> Result<PseudorandomHost> {
    if s < 3 || s >= r {
        return Err(Error::Domain(format!(
            "pseudorandom_lower requires 3 <= s < r, got s={s} r={r}"
        )));
    }
    if n % r as usize != 0 {
        return Err(Error::Domain(format!("pseudorandom_lower requires r | n, got n={n} r={r}")));
    }
    if s as usize + 1 > 6 {
        return Err(Error::SizeLimit(format!(
            "embedding census capped at patterns of order 6, got s + 1 = {}",
            s + 1
        )));
    }
    let ph = phi(s)?;
    let exponent = 1.0 - *ph.numer() as f64 / *ph.denom() as f64;
    let k = round_half_up((n as f64).powf(exponent)) as usize;
    if k < 2 {
        return Err(Error::Domain(format!("n too small: k = {k} < 2")));
    }
    let a_size = s as usize * n / r as usize + k;
    if a_size >= n {
        return Err(Error::Domain(format!("|A| = {a_size} >= n = {n}")));
    }
    let class1 = a_size.div_ceil(2);
    let class2 = a_size / 2;
    let p_bip = 3.0 * k as f64 / a_size as f64;
    if p_bip > 1.0 {
        return Err(Error::Domain(format!("bipartite rate 3k/|A| = {p_bip} > 1")));
    }
    let iso = IsoClasses::build(s as usize + 1)?;
    let mut rejects = RejectCounts::default();

    for retry in 0..max_retries {
        let h = bipartite_random(class1, class2, p_bip, derive_seed(seed, retry as u64))?;
        // (G2): minimum degree of the sample at least k
        if h.min_degree() < k {
            rejects.min_degree += 1;
            continue;
        }
        // (G3): no K_{s+1}; guaranteed by bipartiteness, verified anyway
        if h.enumerate_cliques(s as usize + 1)?.next().is_some() {
            rejects.clique_free += 1;
            continue;
        }
        // (G4): embedding bounds for every isomorphism class on s+1 vertices
        let pool = VertexSet::full(a_size);
        let counts = iso.census(&h, &pool);
        let mut l_used = 0.0f64;
        let mut ok = true;
        for cls in 0..iso.class_count() {
            let emb = counts[cls] as f64 * iso.aut[cls] as f64;
            let e = iso.edges[cls];
            let scale = (a_size as f64).powi(s as i32 + 1)
                * (k as f64 / a_size as f64).powi(e as i32);
            let l_need = emb / scale;
            l_used = l_used.max(l_need);
            if l_need > 4.0 * 3f64.powi(e as i32) {
                ok = false;
                break;
            }
        }
        if !ok {
            rejects.embedding_bound += 1;
            continue;
        }
        // assemble: G[A] = H on ids 0..a_size, all pairs not inside A present
        let mut b = GraphBuilder::new(n)?;
        for u in 0..n as u32 {
            for v in u + 1..n as u32 {
                if (v as usize) < a_size {
                    if h.has_edge(u, v) {
                        b.add_edge(u, v);
                    }
                } else {
                    b.add_edge(u, v);
                }
            }
        }
        return Ok(PseudorandomHost {
            graph: b.build(),
            a: VertexSet::from_iter(n, 0..a_size as u32),
            k,
            l_used,
            retries_used: retry,
        });
    }
    let worst = [
        (rejects.min_degree, "minimum degree of G[A] below k"),
        (rejects.clique_free, "clique appeared inside A"),
        (rejects.embedding_bound, "embedding bound exceeded"),
    ]
    .into_iter()
    .max_by_key(|&(c, _)| c)
    .unwrap();
    Err(Error::ConstructionFailure {
        retries: max_retries,
        msg: format!(
            "pseudorandom_lower: most frequent rejection ({} of {}): {}",
            worst.0, max_retries, worst.1
        ),
    })
}

// ---------------------------------------------------------------------------
// HostSpec: serializable family + parameters
// ---------------------------------------------------------------------------

/// A host family plus parameters, as used in experiment configs and the CLI.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum HostSpec {
    FGamma { n: usize, r: u32, s: u32, gamma: f64 },
    MultipartiteS2 { n: usize, r: u32 },
    PseudorandomLower {
        n: usize,
        r: u32,
        s: u32,
        #[serde(default = "default_retries")]
        max_retries: usize,
    },
    HsTight { n: usize, r: u32 },
    QGraph { s: u32, t: u32 },
    BMst { m: u32, s: u32, t: u32 },
    BipartiteRandom { a: usize, b: usize, p: f64 },
}

fn default_retries() -> usize {
    200_000
}

/// A built host: graph plus named designated sets and construction report.
#[derive(Clone, Debug)]
pub struct HostInstance {
    pub graph: Graph,
    pub sets: Vec<(String, VertexSet)>,
    pub l_used: Option<f64>,
    pub retries_used: usize,
}

impl HostSpec {
    /// The clique order this family is tested against, when it has one.
    pub fn r(&self) -> Option<u32> {
        match *self {
            HostSpec::FGamma { r, .. }
            | HostSpec::MultipartiteS2 { r, .. }
            | HostSpec::PseudorandomLower { r, .. }
            | HostSpec::HsTight { r, .. } => Some(r),
            HostSpec::BMst { m, s, t } => Some(m * s + t),
            _ => None,
        }
    }

    pub fn n(&self) -> usize {
        match *self {
            HostSpec::FGamma { n, .. }
            | HostSpec::MultipartiteS2 { n, .. }
            | HostSpec::PseudorandomLower { n, .. }
            | HostSpec::HsTight { n, .. } => n,
            HostSpec::QGraph { s, t } => (s + t) as usize,
            HostSpec::BMst { m, s, t } => (m * s + t) as usize,
            HostSpec::BipartiteRandom { a, b, .. } => a + b,
        }
    }

    /// Family tag as it appears in configs and CSV output.
    pub fn family_name(&self) -> &'static str {
        match self {
            HostSpec::FGamma { .. } => "f-gamma",
            HostSpec::MultipartiteS2 { .. } => "multipartite-s2",
            HostSpec::PseudorandomLower { .. } => "pseudorandom-lower",
            HostSpec::HsTight { .. } => "hs-tight",
            HostSpec::QGraph { .. } => "q-graph",
            HostSpec::BMst { .. } => "b-mst",
            HostSpec::BipartiteRandom { .. } => "bipartite-random",
        }
    }

    /// Builds the host; `seed` only matters for the randomized families.
    pub fn build(&self, seed: u64) -> Result<HostInstance> {
        match *self {
            HostSpec::FGamma { n, r, s, gamma } => {
                let (graph, a) = f_gamma(n, r, s, gamma)?;
                Ok(HostInstance {
                    graph,
                    sets: vec![("A".into(), a)],
                    l_used: None,
                    retries_used: 0,
                })
            }
            HostSpec::MultipartiteS2 { n, r } => Ok(HostInstance {
                graph: multipartite_s2(n, r)?,
                sets: vec![],
                l_used: None,
                retries_used: 0,
            }),
            HostSpec::PseudorandomLower { n, r, s, max_retries } => {
                let h = pseudorandom_lower(n, r, s, seed, max_retries)?;
                Ok(HostInstance {
                    graph: h.graph,
                    sets: vec![("A".into(), h.a)],
                    l_used: Some(h.l_used),
                    retries_used: h.retries_used,
                })
            }
            HostSpec::HsTight { n, r } => {
                let (graph, a) = hs_tight(n, r)?;
                Ok(HostInstance {
                    graph,
                    sets: vec![("A".into(), a)],
                    l_used: None,
                    retries_used: 0,
                })
            }
            HostSpec::QGraph { s, t } => {
                let (graph, l, m, nn) = q_graph(s, t)?;
                Ok(HostInstance {
                    graph,
                    sets: vec![("L".into(), l), ("M".into(), m), ("N".into(), nn)],
                    l_used: None,
                    retries_used: 0,
                })
            }
            HostSpec::BMst { m, s, t } => Ok(HostInstance {
                graph: b_mst(m, s, t)?,
                sets: vec![],
                l_used: None,
                retries_used: 0,
            }),
            HostSpec::BipartiteRandom { a, b, p } => Ok(HostInstance {
                graph: bipartite_random(a, b, p, seed)?,
                sets: vec![],
                l_used: None,
                retries_used: 0,
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f_gamma_fig1() {
        let (g, a) = f_gamma(8, 4, 2, 0.0).unwrap();
        assert_eq!(a.len(), 4);
        assert_eq!(g.min_degree(), 4);
        assert_eq!(g.edges_within(&a), 0);
    }

    #[test]
    fn f_gamma_s1() {
        let (g, a) = f_gamma(12, 3, 1, 0.0).unwrap();
        assert_eq!(a.len(), 4);
        assert_eq!(g.edges_within(&a), 0);
        assert_eq!(g.min_degree(), 8);
    }

    #[test]
    fn f_gamma_independent_exhaustive() {
        let (g, a) = f_gamma(40, 4, 3, 0.05).unwrap();
        assert_eq!(a.len(), 28); // (3/4 - 0.05) * 40
        let verts = a.to_vec();
        for (i, &u) in verts.iter().enumerate() {
            for &v in &verts[i + 1..] {
                assert!(!g.has_edge(u, v));
            }
        }
        // every pair not inside A is an edge
        for u in 0..40u32 {
            for v in u + 1..40 {
                if !(a.contains(u) && a.contains(v)) {
                    assert!(g.has_edge(u, v));
                }
            }
        }
    }

    #[test]
    fn multipartite_degrees() {
        let g = multipartite_s2(8, 4).unwrap();
        assert_eq!(g.min_degree(), 4);
        let g = multipartite_s2(12, 3).unwrap();
        assert_eq!(g.min_degree(), 4); // classes {8, 4}
        let g = multipartite_s2(10, 5).unwrap();
        assert_eq!(g.min_degree(), 6); // classes 4, 4, 2
        assert!(multipartite_s2(10, 4).is_err());
    }

    #[test]
    fn hs_tight_structure() {
        let (g, a) = hs_tight(12, 3).unwrap();
        assert_eq!(a.len(), 5);
        assert_eq!(g.edges_within(&a), 0);
        assert_eq!(g.min_degree(), 12 - 5);
    }

    #[test]
    fn q_graph_counts() {
        let (g, l, m, n) = q_graph(5, 3).unwrap();
        assert_eq!(g.n(), 8);
        assert_eq!(g.edge_count(), 9); // (s-t) t + t = 6 + 3
        assert_eq!((l.len(), m.len(), n.len()), (2, 3, 3));
        // s = t: a perfect matching
        let (g, l, _, _) = q_graph(3, 3).unwrap();
        assert!(l.is_empty());
        assert_eq!(g.edge_count(), 3);
        assert_eq!(g.max_degree(), 1);
        // s=2, t=1: path on 3 vertices
        let (g, _, _, _) = q_graph(2, 1).unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn q_graph_edge_count_formula() {
        for s in 1..=8u32 {
            for t in 1..=s {
                let (g, _, _, _) = q_graph(s, t).unwrap();
                assert_eq!(g.edge_count() as u32, (s - t) * t + t, "s={s} t={t}");
            }
        }
    }

    #[test]
    fn b_mst_shapes() {
        let g = b_mst(1, 2, 2).unwrap();
        assert_eq!((g.n(), g.edge_count()), (4, 4)); // C_4 = K_{2,2}
        let g = b_mst(1, 3, 1).unwrap();
        assert_eq!((g.n(), g.edge_count()), (4, 3)); // K_{3,1}
        let g = b_mst(2, 2, 1).unwrap();
        assert_eq!((g.n(), g.edge_count()), (5, 8));
    }

    #[test]
    fn bipartite_random_extremes() {
        let g = bipartite_random(4, 5, 0.0, 3).unwrap();
        assert_eq!(g.edge_count(), 0);
        let g = bipartite_random(4, 5, 1.0, 3).unwrap();
        assert_eq!(g.edge_count(), 20);
        assert_eq!(g.min_degree(), 4);
    }

    #[test]
    fn bipartite_random_mean_edge_count() {
        let (a, b, p) = (50usize, 50usize, 0.3f64);
        let mut total = 0usize;
        let seeds = 100u64;
        for s in 0..seeds {
            total += bipartite_random(a, b, p, derive_seed(1, s)).unwrap().edge_count();
        }
        let mean = total as f64 / seeds as f64;
        let expect = (a * b) as f64 * p;
        let sigma = ((a * b) as f64 * p * (1.0 - p) / seeds as f64).sqrt();
        assert!((mean - expect).abs() < 4.0 * sigma);
        assert!((mean - expect).abs() / expect < 0.01);
    }

    #[test]
    fn pseudorandom_lower_small() {
        // find a seed that succeeds quickly at this desk scale; the
        // acceptance suite pins seeds the same way
        let mut host = None;
        for seed in 0..50u64 {
            if let Ok(h) = pseudorandom_lower(40, 4, 3, seed, 20) {
                host = Some(h);
                break;
            }
        }
        let h = host.expect("some seed succeeds at n=40");
        assert_eq!(h.k, 4); // round(40^{2/5})
        assert_eq!(h.a.len(), 34);
        let (ga, _) = h.graph.induced(&h.a);
        assert!(ga.cliques(4).unwrap().is_empty());
        assert!(ga.min_degree() >= h.k);
        // delta(G) >= (1 - s/r) n
        assert!(h.graph.min_degree() >= 10);
    }

    #[test]
    fn hostspec_serde_roundtrip() {
        let spec = HostSpec::FGamma { n: 24, r: 4, s: 3, gamma: 0.1 };
        let json = serde_json::to_string(&spec).unwrap();
        assert!(json.contains("\"family\":\"f-gamma\""));
        assert_eq!(serde_json::from_str::<HostSpec>(&json).unwrap(), spec);
        let js = r#"{"family":"hs-tight","n":12,"r":3}"#;
        let spec: HostSpec = serde_json::from_str(js).unwrap();
        assert_eq!(spec, HostSpec::HsTight { n: 12, r: 3 });
    }
}
