//! Coarsening the outcome space never increases a divergence, and never
//! increases the budget of an instance.

use fanobound_core::{f_divergence, DivergenceSpec, FiniteDistribution, FiniteIsdm};
use proptest::prelude::*;

fn law(n: usize) -> impl Strategy<Value = FiniteDistribution> {
    proptest::collection::vec(prop_oneof![Just(0.0), 0.0f64..1.0], n).prop_filter_map(
        "all-zero weights",
        |w| {
            let total: f64 = w.iter().sum();
            (total > 0.0).then(|| {
                let mut p: Vec<f64> = w.iter().map(|x| x / total).collect();
                // put the rounding residue on the largest atom
                let i = (0..p.len()).max_by(|&a, &b| p[a].total_cmp(&p[b])).unwrap();
                let rest: f64 = p.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, x)| x).sum();
                p[i] = 1.0 - rest;
                FiniteDistribution::new(p).unwrap()
            })
        },
    )
}

fn pair_and_map() -> impl Strategy<Value = (FiniteDistribution, FiniteDistribution, Vec<usize>, usize)> {
    (2usize..8, 1usize..5).prop_flat_map(|(n, k)| {
        (law(n), law(n), proptest::collection::vec(0..k, n), Just(k))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn pushforward_contracts_every_divergence(
        (p, q, map, k) in pair_and_map(),
        which in 0usize..4,
    ) {
        let spec = &DivergenceSpec::NAMED[which];
        let before = f_divergence(spec, &p, &q).unwrap();
        let after = f_divergence(spec, &p.pushforward(&map, k).unwrap(), &q.pushforward(&map, k).unwrap()).unwrap();
        prop_assert!(after <= before + 1e-12, "{} {after} > {before}", spec.name());
    }
}

#[test]
fn coarsened_instance_has_smaller_budget() {
    let inst = FiniteIsdm::from_rows(
        vec![0.2, 0.3, 0.5],
        vec![
            vec![0.1, 0.2, 0.3, 0.4],
            vec![0.4, 0.3, 0.2, 0.1],
            vec![0.25, 0.25, 0.25, 0.25],
        ],
        vec![vec![0.0; 4]; 3],
        1.0,
    )
    .unwrap();
    let map = [0, 0, 1, 1];
    let coarse = FiniteIsdm::new(
        inst.prior().clone(),
        inst.obs_laws().iter().map(|r| r.pushforward(&map, 2).unwrap()).collect(),
        vec![vec![0.0; 2]; 3],
        1.0,
    )
    .unwrap();
    for spec in DivergenceSpec::NAMED.iter() {
        let fine = inst.budget(spec, &inst.mixture_reference()).unwrap();
        let merged = coarse.budget(spec, &coarse.mixture_reference()).unwrap();
        assert!(merged <= fine + 1e-12, "{}", spec.name());
    }
    // merging everything into one outcome leaves no information
    let single = FiniteIsdm::new(
        inst.prior().clone(),
        inst.obs_laws().iter().map(|r| r.pushforward(&[0; 4], 1).unwrap()).collect(),
        vec![vec![0.0]; 3],
        1.0,
    )
    .unwrap();
    assert!(single.mutual_information() <= 1e-15);
}
