//! Small-size census checks of the pipeline law: every tree/diagonal pair
//! is enumerated, the 3-connected outcomes must be hit with equal
//! multiplicity (so the conditioned law is uniform), and the
//! irreducibility route must agree with brute-force vertex cuts.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sqmap_core::closure::{unroot_second, SecondRootChoice};
use sqmap_core::combmap::canonical_code;
use sqmap_core::pipeline::{pipeline_sample_rng, quad_of_tree, PipelineOptions};
use sqmap_core::stats::chi_square_uniform;
use sqmap_core::treegrow::{enumerate_trees, CountTable};
use sqmap_core::tutte::{is_3_connected, is_3_connected_bruteforce, tutte_inverse};
use std::collections::HashMap;

fn census(n: usize) -> HashMap<Vec<u8>, (usize, bool)> {
    let mut out: HashMap<Vec<u8>, (usize, bool)> = HashMap::new();
    for t in enumerate_trees(n).unwrap() {
        for i in 0..6 {
            let dq = quad_of_tree(&t, i).unwrap();
            let quad = unroot_second(&dq, SecondRootChoice::KeepOriginal);
            let g = tutte_inverse(&quad).unwrap();
            let three = is_3_connected(&g);
            assert_eq!(
                three,
                is_3_connected_bruteforce(&g),
                "irreducibility route disagrees with vertex cuts at n={n}"
            );
            let e = out.entry(canonical_code(&g)).or_insert((0, three));
            e.0 += 1;
            assert_eq!(e.1, three);
        }
    }
    out
}

#[test]
fn conditioned_law_is_uniform_on_the_census() {
    for n in [2usize, 4] {
        let all = census(n);
        let three: Vec<usize> = all
            .values()
            .filter(|&&(_, t)| t)
            .map(|&(c, _)| c)
            .collect();
        assert!(!three.is_empty(), "3-connected maps exist at n={n}");
        // every 3-connected map is reached the same number of times, so
        // conditioning on 3-connectivity gives the uniform law
        assert!(
            three.iter().all(|&c| c == three[0]),
            "unequal multiplicities at n={n}: {three:?}"
        );
        assert_eq!(three[0], 4 * n + 2, "multiplicity at n={n}");
    }
    // no 3-connected simple planar map has seven edges
    assert!(census(3).values().all(|&(_, t)| !t));
}

#[test]
fn conditioned_sampling_matches_the_census() {
    let n = 4;
    let classes: Vec<Vec<u8>> = census(n)
        .into_iter()
        .filter(|&(_, (_, t))| t)
        .map(|(code, _)| code)
        .collect();
    let index: HashMap<Vec<u8>, usize> = classes
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, c)| (c, i))
        .collect();
    let mut counts = vec![0u64; classes.len()];
    let mut table = CountTable::new();
    let opts = PipelineOptions {
        require_three_connected: true,
        solve: false,
        ..Default::default()
    };
    for k in 0..4000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0xCE0505);
        rng.set_stream(k + 1);
        let s = pipeline_sample_rng(n, &mut rng, &mut table, &opts).unwrap();
        counts[index[&canonical_code(&s.map)]] += 1;
    }
    let (stat, p) = chi_square_uniform(&counts);
    assert!(
        p > 1e-3,
        "conditioned sampling not uniform over the census: chi2 {stat:.1}, p {p:.5}, counts {counts:?}"
    );
}
