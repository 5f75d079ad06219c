//! Seeded binomial perturbation with a per-seed monotone coupling.
//!
//! Each unordered pair `(u, v)` owns a uniform `U in [0,1)` derived purely
//! from `(seed, round, u, v)`. Perturbing at probability `p` keeps exactly
//! the pairs with `U < p`, so for a fixed plan and round the random edge set
//! is pointwise non-decreasing in `p`, and per-seed crossing points are
//! well-defined. Overlaying `k` rounds at `p'` equals one round at
//! `1 - (1 - p')^k` in distribution, though not pointwise.

use crate::error::{Error, Result};
use crate::graph::{Graph, GraphBuilder};
use crate::rng::{mix64, GOLDEN_GAMMA};

/// Seed and round count for a coupled perturbation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PerturbationPlan {
    pub seed: u64,
    pub rounds: u32,
}

impl PerturbationPlan {
    pub fn new(seed: u64) -> Self {
        PerturbationPlan { seed, rounds: 1 }
    }

    pub fn with_rounds(seed: u64, rounds: u32) -> Self {
        PerturbationPlan { seed, rounds }
    }
}

/// The per-edge uniform for `(seed, round, u, v)` with `u < v`.
///
/// Bit-exact definition: starting from `z = seed`, absorb `round`, `u`, `v`
/// in turn via `z = mix64(z + GOLDEN_GAMMA + w)` (wrapping arithmetic, with
/// [`mix64`] the SplitMix64 finalizer), then map the 53 high bits of `z`
/// to `[0, 1)`.
pub fn derive_uniform(seed: u64, round: u32, u: u32, v: u32) -> Result<f64> {
    if u >= v {
        return Err(Error::Argument(format!(
            "derive_uniform requires u < v, got ({u}, {v})"
        )));
    }
    Ok(derive_uniform_unchecked(seed, round, u, v))
}

#[inline]
pub(crate) fn derive_uniform_unchecked(seed: u64, round: u32, u: u32, v: u32) -> f64 {
    let mut z = seed;
    for w in [round as u64, u as u64, v as u64] {
        z = mix64(z.wrapping_add(GOLDEN_GAMMA).wrapping_add(w));
    }
    (z >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Overlay of `g` with the coupled random graph `{e : U_e < p}`.
pub fn perturb(g: &Graph, p: f64, plan: &PerturbationPlan, round: u32) -> Result<Graph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("p must be in [0, 1], got {p}")));
    }
    if round >= plan.rounds {
        return Err(Error::Argument(format!(
            "round {round} out of range for plan with {} rounds",
            plan.rounds
        )));
    }
    let n = g.n();
    let mut b = GraphBuilder::new(n)?;
    for u in 0..n as u32 {
        for v in u + 1..n as u32 {
            if g.has_edge(u, v) || derive_uniform_unchecked(plan.seed, round, u, v) < p {
                b.add_edge(u, v);
            }
        }
    }
    Ok(b.build())
}

/// The random edges alone: `{e : U_e < p}` on an edgeless host.
pub fn random_graph(n: usize, p: f64, plan: &PerturbationPlan, round: u32) -> Result<Graph> {
    let empty = Graph::empty(n)?;
    perturb(&empty, p, plan, round)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_seed;

    #[test]
    fn p_zero_and_one() {
        let g = Graph::from_edge_list(5, &[(0, 1), (2, 3)]).unwrap();
        let plan = PerturbationPlan::new(7);
        assert_eq!(perturb(&g, 0.0, &plan, 0).unwrap(), g);
        assert_eq!(
            perturb(&g, 1.0, &plan, 0).unwrap(),
            Graph::complete(5).unwrap()
        );
    }

    #[test]
    fn monotone_in_p() {
        let g = Graph::empty(30).unwrap();
        for seed in 0..20u64 {
            let plan = PerturbationPlan::new(seed);
            let lo = perturb(&g, 0.2, &plan, 0).unwrap();
            let hi = perturb(&g, 0.7, &plan, 0).unwrap();
            for (u, v) in lo.edges() {
                assert!(hi.has_edge(u, v), "coupling broke at seed {seed}");
            }
        }
    }

    #[test]
    fn deterministic() {
        let a = derive_uniform(3, 1, 4, 9).unwrap();
        let b = derive_uniform(3, 1, 4, 9).unwrap();
        assert_eq!(a, b);
        assert!(derive_uniform(3, 1, 9, 4).is_err());
        assert!(derive_uniform(3, 1, 4, 4).is_err());
    }

    #[test]
    fn avalanche_on_tuple_components() {
        // changing any tuple component should change the output almost always
        let mut same = [0usize; 4];
        let probes = 100_000u64;
        for i in 0..probes {
            let seed = derive_seed(0xA5A5, i);
            let (r, u, v) = (i as u32 % 4, (i % 50) as u32, (i % 50) as u32 + 1 + (i % 7) as u32);
            let base = derive_uniform_unchecked(seed, r, u, v);
            if derive_uniform_unchecked(seed ^ 1, r, u, v) == base {
                same[0] += 1;
            }
            if derive_uniform_unchecked(seed, r + 1, u, v) == base {
                same[1] += 1;
            }
            if derive_uniform_unchecked(seed, r, u, v + 1) == base {
                same[2] += 1;
            }
            if derive_uniform_unchecked(seed, r, u + 1, v + 1) == base {
                same[3] += 1;
            }
        }
        for (i, &s) in same.iter().enumerate() {
            assert!(
                (s as f64) < probes as f64 * 0.001,
                "component {i} collided {s} times"
            );
        }
    }

    #[test]
    fn uniform_mean() {
        let mut sum = 0.0;
        let trials = 1_000_000u64;
        for i in 0..trials {
            let u = (i % 1000) as u32;
            sum += derive_uniform_unchecked(42, 0, u, u + 1 + (i / 1000) as u32);
        }
        let mean = sum / trials as f64;
        assert!((mean - 0.5).abs() < 0.002, "mean = {mean}");
    }

    #[test]
    fn binomial_edge_count() {
        // mean within 4 sigma over 200 seeds
        let n = 40usize;
        let pairs = n * (n - 1) / 2;
        let p = 0.3;
        let mut total = 0usize;
        let seeds = 200u64;
        for s in 0..seeds {
            let plan = PerturbationPlan::new(derive_seed(9, s));
            total += random_graph(n, p, &plan, 0).unwrap().edge_count();
        }
        let mean = total as f64 / seeds as f64;
        let expect = pairs as f64 * p;
        let sigma = (pairs as f64 * p * (1.0 - p) / seeds as f64).sqrt();
        assert!(
            (mean - expect).abs() < 4.0 * sigma,
            "mean {mean} vs {expect} (sigma {sigma})"
        );
    }

    #[test]
    fn rounds_are_uncorrelated() {
        let plan = PerturbationPlan::with_rounds(5, 2);
        let p = 0.5;
        let mut n11 = 0i64;
        let mut n1a = 0i64;
        let mut n1b = 0i64;
        let samples = 1_000_000i64;
        for i in 0..samples {
            let u = (i % 1400) as u32;
            let v = u + 1 + (i / 1400) as u32;
            let a = derive_uniform_unchecked(plan.seed, 0, u, v) < p;
            let b = derive_uniform_unchecked(plan.seed, 1, u, v) < p;
            n1a += a as i64;
            n1b += b as i64;
            n11 += (a && b) as i64;
        }
        let pa = n1a as f64 / samples as f64;
        let pb = n1b as f64 / samples as f64;
        let pab = n11 as f64 / samples as f64;
        let corr = (pab - pa * pb) / (pa * (1.0 - pa)).sqrt() / (pb * (1.0 - pb)).sqrt();
        assert!(corr.abs() < 0.01, "cross-round correlation {corr}");
    }
}
