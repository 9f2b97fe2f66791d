use soen_core::layout::{place_system, ColumnSpec, TilingSpec, WaferSpec};
use soen_core::photonics::Medium;
use soen_core::topology::{generate_hierarchical, HierarchyLevel};

#[test]
fn two_column_system_routes_inter_column_edges_over_fiber() {
    // 1000-neuron wafers, five per column, one of 100 edges crossing columns.
    let levels = [
        HierarchyLevel { group_size: 1000, degree: 99 },
        HierarchyLevel { group_size: 5, degree: 0 },
        HierarchyLevel { group_size: 2, degree: 1 },
    ];
    let topo = generate_hierarchical(&levels, 42).unwrap();
    assert_eq!(topo.n_nodes(), 10_000);
    let column = ColumnSpec {
        wafers_per_column: 5,
        ..ColumnSpec::default()
    };
    let tiling = TilingSpec {
        columns_x: 2,
        edge_couplers: false,
        ..TilingSpec::default()
    };
    let layout = place_system(&topo, &WaferSpec::default(), &column, &tiling, 42).unwrap();

    let column_of = |n: u32| layout.sites[layout.wafer_of[n as usize] as usize].column;
    let mut inter = 0;
    for (e, (src, dst, _)) in topo.edges().enumerate() {
        let media: Vec<Medium> = layout.path(e).segments.iter().map(|s| s.medium).collect();
        if column_of(src) != column_of(dst) {
            inter += 1;
            assert!(media.contains(&Medium::Fiber), "edge {e}: {media:?}");
        } else {
            assert!(!media.contains(&Medium::Fiber), "edge {e}: {media:?}");
        }
    }
    assert_eq!(inter, 10_000);
    assert_eq!(inter * 100, topo.n_edges());
    assert!(layout.fiber_demand.iter().all(|&d| d <= layout.fibers_per_wafer));
    assert_eq!(layout.fiber_demand.iter().sum::<u64>(), 10_000);
}
