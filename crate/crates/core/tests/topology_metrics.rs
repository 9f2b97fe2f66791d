use soen_core::topology::{
    avg_path_length, clustering_coefficient, generate_hierarchical, generate_random, generate_small_world,
    HierarchyLevel, Topology,
};

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn path_len(t: &Topology) -> f64 {
    avg_path_length(t, 0, 0).unwrap().mean.unwrap()
}

#[test]
fn small_world_regime() {
    let sw = generate_small_world(1000, 10, 0.1, 1).unwrap();
    let rnd = generate_random(1000, 10, 1).unwrap();
    assert!(clustering_coefficient(&sw) > 0.3);
    assert!(path_len(&sw) < 2.0 * path_len(&rnd));
}

#[test]
fn fully_rewired_small_world_looks_random() {
    let (mut l_sw, mut l_r, mut c_sw, mut c_r) = (vec![], vec![], vec![], vec![]);
    for seed in 0..20 {
        let sw = generate_small_world(300, 10, 1.0, seed).unwrap();
        let r = generate_random(300, 10, seed + 100).unwrap();
        l_sw.push(path_len(&sw));
        l_r.push(path_len(&r));
        c_sw.push(clustering_coefficient(&sw));
        c_r.push(clustering_coefficient(&r));
    }
    assert!((mean(&l_sw) - mean(&l_r)).abs() / mean(&l_r) < 0.03);
    assert!((mean(&c_sw) - mean(&c_r)).abs() / mean(&c_r) < 0.15);
}

#[test]
fn single_level_hierarchy_matches_random_degrees() {
    let h = generate_hierarchical(&[HierarchyLevel { group_size: 500, degree: 12 }], 3).unwrap();
    assert_eq!(h.n_nodes(), 500);
    assert!((0..500).all(|i| h.out_degree(i) == 12));
    let lh = path_len(&h);
    let lr = mean(&(0..5).map(|s| path_len(&generate_random(500, 12, s).unwrap())).collect::<Vec<_>>());
    assert!((lh - lr).abs() / lr < 0.03);
}

#[test]
fn modular_hierarchy_is_more_clustered_than_random() {
    let levels = [
        HierarchyLevel { group_size: 20, degree: 8 },
        HierarchyLevel { group_size: 10, degree: 2 },
    ];
    for seed in 0..20 {
        let h = generate_hierarchical(&levels, seed).unwrap();
        let r = generate_random(200, 10, seed).unwrap();
        assert!(clustering_coefficient(&h) > clustering_coefficient(&r), "seed {seed}");
    }
}

#[test]
fn sampled_path_length_converges() {
    let t = generate_random(20_000, 10, 5).unwrap();
    let a = avg_path_length(&t, 200, 1).unwrap();
    let b = avg_path_length(&t, 400, 2).unwrap();
    assert!(!a.exact && a.sources == 200 && b.sources == 400);
    let (a, b) = (a.mean.unwrap(), b.mean.unwrap());
    assert!((a - b).abs() / b < 0.05, "{a} vs {b}");
}

#[test]
fn chorded_four_cycle_clustering() {
    // Chord ends have 2 of 3 neighbor pairs linked; the others 1 of 1.
    let t = Topology::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)], 1.0).unwrap();
    let c = clustering_coefficient(&t);
    assert!((c - (2.0 / 3.0 + 2.0 / 3.0 + 1.0 + 1.0) / 4.0).abs() < 1e-12);
}
