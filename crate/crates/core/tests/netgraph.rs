use std::collections::BTreeSet;

use entryscope_core::netgraph::{
    build_graph, build_graph_with, edge_measures, global_measures, node_measures, read_edge_list, ComponentPolicy,
};
use entryscope_core::synthgen::illustrative_edges;
use entryscope_core::Error;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn connected_edges() -> impl Strategy<Value = Vec<(usize, usize)>> {
    (3usize..=9)
        .prop_flat_map(|n| {
            let tree = (1..n).map(|v| (0..v).prop_map(move |u| (u, v))).collect::<Vec<_>>();
            let extra = proptest::collection::vec((0..n, 0..n), 0..12);
            (tree, extra)
        })
        .prop_map(|(tree, extra)| {
            let mut set: BTreeSet<(usize, usize)> = tree.into_iter().collect();
            set.extend(extra.into_iter().filter(|(a, b)| a != b).map(|(a, b)| (a.min(b), a.max(b))));
            set.into_iter().collect()
        })
}

fn labelled(edges: &[(usize, usize)], name: impl Fn(usize) -> String) -> Vec<(String, String)> {
    edges.iter().map(|&(a, b)| (name(a), name(b))).collect()
}

proptest! {
    #[test]
    fn measures_do_not_depend_on_labels(edges in connected_edges()) {
        let g1 = build_graph(labelled(&edges, |v| format!("A{v:02}"))).unwrap();
        // Relabelling reverses the sort order of the nodes.
        let g2 = build_graph(labelled(&edges, |v| format!("Z{:02}", 99 - v))).unwrap();
        let (m1, m2) = (node_measures(&g1), node_measures(&g2));
        for v in 0..g1.node_count() {
            let i1 = g1.index_of(&format!("A{v:02}")).unwrap();
            let i2 = g2.index_of(&format!("Z{:02}", 99 - v)).unwrap();
            let (a, b) = (&m1.nodes[i1], &m2.nodes[i2]);
            prop_assert!((a.betweenness - b.betweenness).abs() < 1e-12);
            prop_assert!((a.closeness - b.closeness).abs() < 1e-12);
            prop_assert!((a.eigenvector - b.eigenvector).abs() < 1e-9);
            prop_assert!((a.avg_neighbour_degree - b.avg_neighbour_degree).abs() < 1e-12);
        }
        let (g1m, g2m) = (global_measures(&g1), global_measures(&g2));
        prop_assert!((g1m.transitivity - g2m.transitivity).abs() < 1e-12);
        prop_assert_eq!(g1m.diameter, g2m.diameter);
    }

    #[test]
    fn eigenvector_satisfies_the_eigen_equation(edges in connected_edges()) {
        let g = build_graph(labelled(&edges, |v| format!("N{v}"))).unwrap();
        let nm = node_measures(&g);
        let n = g.node_count();
        let mut a = DMatrix::<f64>::zeros(n, n);
        for &(u, v) in g.edges() {
            a[(u, v)] = 1.0;
            a[(v, u)] = 1.0;
        }
        let x = nalgebra::DVector::from_iterator(n, nm.nodes.iter().map(|m| m.eigenvector));
        prop_assert!((x.norm() - 1.0).abs() < 1e-9);
        prop_assert!(x.iter().all(|&c| c > 0.0));
        let lambda = x.dot(&(&a * &x));
        prop_assert!((&a * &x - &x * lambda).amax() < 1e-8);
    }

    #[test]
    fn edge_betweenness_sums_to_average_path_length(edges in connected_edges()) {
        let g = build_graph(labelled(&edges, |v| format!("N{v}"))).unwrap();
        let em = edge_measures(&g, &node_measures(&g));
        // Each pair spreads one unit over every edge of its geodesics.
        let total: f64 = em.edges.iter().map(|e| e.edge_betweenness).sum();
        prop_assert!((total - global_measures(&g).avg_path_length).abs() < 1e-9);
    }
}

#[test]
fn illustrative_network_shape() {
    let g = build_graph(illustrative_edges()).unwrap();
    assert_eq!((g.node_count(), g.edge_count()), (6, 8));
    let degrees: Vec<usize> = ["1", "2", "3", "4", "5", "6"]
        .iter()
        .map(|l| g.degree(g.index_of(l).unwrap()))
        .collect();
    assert_eq!(degrees, [2, 4, 3, 3, 3, 1]);
}

#[test]
fn star_and_complete_graphs() {
    let star = build_graph((1..=4).map(|i| ("HUB".to_string(), format!("S{i}")))).unwrap();
    let gm = global_measures(&star);
    assert_eq!(gm.transitivity, 0.0);
    assert_eq!(gm.diameter, 2);
    assert!((gm.assortativity.unwrap() + 1.0).abs() < 1e-12);
    let hub = node_measures(&star).nodes[star.index_of("HUB").unwrap()];
    assert_eq!((hub.degree, hub.closeness, hub.betweenness), (1.0, 1.0, 1.0));

    let labels = ["A", "B", "C", "D"];
    let k4: Vec<_> = labels
        .iter()
        .enumerate()
        .flat_map(|(i, a)| labels[i + 1..].iter().map(move |b| (a.to_string(), b.to_string())))
        .collect();
    let g = build_graph(k4).unwrap();
    let gm = global_measures(&g);
    assert_eq!((gm.density, gm.transitivity, gm.avg_clustering), (1.0, 1.0, 1.0));
    assert_eq!(gm.assortativity, None);
}

#[test]
fn invalid_graphs() {
    assert!(matches!(build_graph([("A", "A"), ("A", "B"), ("B", "C")]), Err(Error::SelfLoop(_))));
    let empty: [(&str, &str); 0] = [];
    assert!(matches!(build_graph(empty), Err(Error::TooFewNodes(0))));
    let split = [("A", "B"), ("B", "C"), ("X", "Y")];
    assert!(matches!(build_graph(split), Err(Error::Disconnected { components: 2 })));
    let g = build_graph_with(split, ComponentPolicy::LargestComponent).unwrap();
    assert_eq!(g.labels(), ["A", "B", "C"]);
}

#[test]
fn duplicate_and_reversed_edges_collapse() {
    let g = build_graph([("A", "B"), ("B", "A"), ("B", "C"), ("A", "B")]).unwrap();
    assert_eq!(g.edge_count(), 2);
}

#[test]
fn edge_list_reader() {
    let edges = read_edge_list("NODE_A,NODE_B\nDEN,LAS\nLAS,OAK\n".as_bytes()).unwrap();
    assert_eq!(edges, [("DEN".to_string(), "LAS".to_string()), ("LAS".to_string(), "OAK".to_string())]);
    let g = build_graph(edges).unwrap();
    assert_eq!(node_measures(&g).nodes[g.index_of("LAS").unwrap()].betweenness, 1.0);
}
