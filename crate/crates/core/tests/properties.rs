//! Property tests over randomly drawn pipeline objects.

use proptest::prelude::*;
use sqmap_core::combmap::{self, canonical_code, faces};
use sqmap_core::electric::{solve_potentials, total_current, Network, SolveMode};
use sqmap_core::pipeline::{pipeline_sample, PipelineOptions};
use sqmap_core::treegrow::{sample_direct, CountTable};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Dart relabeling never changes the canonical code.
    #[test]
    fn canonical_code_relabeling_invariance(seed in 0u64..1000, n in 1usize..24, shift in 1usize..7) {
        let mut table = CountTable::new();
        let t = sample_direct(n, seed, &mut table);
        let m = &t.map;
        let nd = m.map.dart_count();
        // relabel by d -> (a*d + shift) mod nd with a coprime to nd
        let a = (1..nd).rev().find(|&a| gcd(a, nd) == 1).unwrap();
        let perm: Vec<usize> = (0..nd).map(|d| (a * d + shift) % nd).collect();
        let mut twin = vec![0; nd];
        let mut next = vec![0; nd];
        for d in 0..nd {
            twin[perm[d]] = perm[m.map.twin(d)];
            next[perm[d]] = perm[m.map.next(d)];
        }
        let relabeled = combmap::RootedMap::new(
            combmap::CombinatorialMap::from_permutations(twin, next).unwrap(),
            perm[m.root_dart],
            None,
        ).unwrap();
        prop_assert_eq!(canonical_code(m), canonical_code(&relabeled));
    }

    /// Degree-sum and count identities on sampled trees.
    #[test]
    fn tree_identities(seed in 0u64..1000, n in 0usize..40) {
        let mut table = CountTable::new();
        let t = sample_direct(n, seed, &mut table);
        prop_assert_eq!(t.leaves.len(), t.internal_count + 2);
        prop_assert_eq!(t.map.map.edge_count(), 2 * t.internal_count + 1);
    }

    /// Map JSON round-trips bit-exactly and codes survive.
    #[test]
    fn map_json_roundtrip(seed in 0u64..1000, n in 1usize..20) {
        let s = pipeline_sample(n, seed, &PipelineOptions { solve: false, ..Default::default() }).unwrap();
        let text = combmap::to_json(&s.map);
        let back = combmap::from_json(&text).unwrap();
        prop_assert_eq!(combmap::to_json(&back), text);
        prop_assert_eq!(canonical_code(&back), canonical_code(&s.map));
    }

    /// The dual applied twice is the original map with the root reversed,
    /// and dual faces match primal vertex degrees.
    #[test]
    fn dual_involution_on_pipeline_maps(seed in 0u64..500, n in 1usize..20) {
        let s = pipeline_sample(n, seed, &PipelineOptions { solve: false, ..Default::default() }).unwrap();
        let d = combmap::dual(&s.map);
        let dd = combmap::dual(&d);
        prop_assert_eq!(canonical_code(&dd), canonical_code(&s.map.with_reversed_root()));
        let mut a: Vec<usize> = faces(&d.map).faces.iter().map(|c| c.len()).collect();
        let mut b: Vec<usize> = (0..s.map.map.vertex_count()).map(|v| s.map.map.degree(v)).collect();
        a.sort_unstable();
        b.sort_unstable();
        prop_assert_eq!(a, b);
    }

    /// Conservation of current on squarable samples: both total-current
    /// forms agree and the interior is flow-free.
    #[test]
    fn current_conservation(seed in 0u64..400, n in 2usize..30) {
        let s = pipeline_sample(n, seed, &PipelineOptions { solve: false, ..Default::default() }).unwrap();
        if !s.squarable {
            return Ok(());
        }
        let net = Network::new(s.map.clone()).unwrap();
        let p = solve_potentials(&net, SolveMode::Iterative).unwrap();
        let lam = total_current(&net, &p);
        prop_assert!((lam.form_neighbor_sum - lam.form_degree).abs() <= 1e-12);
        let flow = sqmap_core::electric::edge_currents(&net, &p);
        prop_assert!(flow.kirchhoff_residual <= 1e-10);
        prop_assert!((flow.source_out - lam.value).abs() <= 1e-10);
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}
