use std::collections::VecDeque;

use super::Graph;

/// Per-node centralities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeMeasure {
    pub degree: f64,
    pub closeness: f64,
    pub betweenness: f64,
    pub eigenvector: f64,
    pub avg_neighbour_degree: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeMeasures {
    /// Indexed like the graph's nodes.
    pub nodes: Vec<NodeMeasure>,
    /// Principal eigenvalue of the adjacency matrix (Rayleigh quotient).
    pub eigenvalue: f64,
    pub eigen_iterations: usize,
    pub eigen_converged: bool,
}

/// Edge betweenness plus the endpoint maximum of every node measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeMeasure {
    pub edge_betweenness: f64,
    pub degree: f64,
    pub closeness: f64,
    pub betweenness: f64,
    pub eigenvector: f64,
    pub avg_neighbour_degree: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeMeasures {
    /// Indexed like [`Graph::edges`].
    pub edges: Vec<EdgeMeasure>,
}

pub const EIGEN_TOLERANCE: f64 = 1e-12;
pub const EIGEN_MAX_ITERATIONS: usize = 10_000;

/// Unnormalized Brandes accumulation: returns pair-dependency sums for
/// nodes and edges, each counting every unordered pair twice.
fn brandes(g: &Graph) -> (Vec<f64>, Vec<f64>) {
    let n = g.node_count();
    let mut node = vec![0.0; n];
    let mut edge = vec![0.0; g.edge_count()];
    let mut dist = vec![u32::MAX; n];
    let mut sigma = vec![0u128; n];
    let mut delta = vec![0.0f64; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::with_capacity(n);
    for s in 0..n {
        dist.fill(u32::MAX);
        sigma.fill(0);
        delta.fill(0.0);
        order.clear();
        dist[s] = 0;
        sigma[s] = 1;
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &w in g.neighbours(v) {
                if dist[w] == u32::MAX {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                }
            }
        }
        for &w in order.iter().rev() {
            for &v in g.neighbours(w) {
                if dist[v] != u32::MAX && dist[v] + 1 == dist[w] {
                    let c = sigma[v] as f64 / sigma[w] as f64 * (1.0 + delta[w]);
                    delta[v] += c;
                    edge[g.edge_index(v, w).expect("adjacent")] += c;
                }
            }
            if w != s {
                node[w] += delta[w];
            }
        }
    }
    (node, edge)
}

/// Unit-norm nonnegative principal eigenvector by power iteration on
/// `g + I`. The shift leaves eigenvectors unchanged and makes the principal
/// eigenvalue strictly dominant in modulus, so bipartite graphs (stars,
/// trees) converge instead of oscillating.
fn principal_eigenvector(g: &Graph) -> (Vec<f64>, f64, usize, bool) {
    let n = g.node_count();
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut y = vec![0.0; n];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < EIGEN_MAX_ITERATIONS {
        iterations += 1;
        for v in 0..n {
            y[v] = x[v] + g.neighbours(v).iter().map(|&w| x[w]).sum::<f64>();
        }
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut diff = 0.0f64;
        for v in 0..n {
            y[v] /= norm;
            diff = diff.max((y[v] - x[v]).abs());
        }
        std::mem::swap(&mut x, &mut y);
        if diff < EIGEN_TOLERANCE {
            converged = true;
            break;
        }
    }
    let lambda = (0..n)
        .map(|v| x[v] * g.neighbours(v).iter().map(|&w| x[w]).sum::<f64>())
        .sum::<f64>();
    (x, lambda, iterations, converged)
}

pub fn node_measures(g: &Graph) -> NodeMeasures {
    let n = g.node_count();
    let dist = g.distances();
    let (between, _) = brandes(g);
    let (eigen, eigenvalue, eigen_iterations, eigen_converged) = principal_eigenvector(g);
    if !eigen_converged {
        log::warn!("eigenvector centrality did not converge in {eigen_iterations} iterations");
    }
    let between_norm = if n > 2 {
        1.0 / ((n - 1) * (n - 2)) as f64
    } else {
        0.0
    };
    let nodes = (0..n)
        .map(|v| {
            let k = g.degree(v) as f64;
            let far: u64 = (0..n).map(|u| dist.len(v, u) as u64).sum();
            NodeMeasure {
                degree: k / (n - 1) as f64,
                closeness: (n - 1) as f64 / far as f64,
                betweenness: between[v] * between_norm,
                eigenvector: eigen[v],
                avg_neighbour_degree: g.neighbours(v).iter().map(|&u| g.degree(u) as f64).sum::<f64>() / k,
            }
        })
        .collect();
    NodeMeasures {
        nodes,
        eigenvalue,
        eigen_iterations,
        eigen_converged,
    }
}

/// Edge measures, reusing node measures for the endpoint-max profile.
pub fn edge_measures(g: &Graph, nodes: &NodeMeasures) -> EdgeMeasures {
    let n = g.node_count();
    let (_, edge) = brandes(g);
    let norm = 1.0 / (n * (n - 1)) as f64;
    let edges = g
        .edges()
        .iter()
        .zip(edge)
        .map(|(&(i, j), eb)| {
            let (a, b) = (&nodes.nodes[i], &nodes.nodes[j]);
            EdgeMeasure {
                edge_betweenness: eb * norm,
                degree: a.degree.max(b.degree),
                closeness: a.closeness.max(b.closeness),
                betweenness: a.betweenness.max(b.betweenness),
                eigenvector: a.eigenvector.max(b.eigenvector),
                avg_neighbour_degree: a.avg_neighbour_degree.max(b.avg_neighbour_degree),
            }
        })
        .collect();
    EdgeMeasures { edges }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgraph::build_graph;

    #[test]
    fn complete_graph_k4() {
        let g = build_graph([
            ("1", "2"),
            ("1", "3"),
            ("1", "4"),
            ("2", "3"),
            ("2", "4"),
            ("3", "4"),
        ])
        .unwrap();
        let nm = node_measures(&g);
        for v in &nm.nodes {
            assert_eq!(v.degree, 1.0);
            assert_eq!(v.closeness, 1.0);
            assert_eq!(v.betweenness, 0.0);
            assert!((v.eigenvector - 0.5).abs() < 1e-12);
        }
        assert!((nm.eigenvalue - 3.0).abs() < 1e-10);
        let em = edge_measures(&g, &nm);
        for e in &em.edges {
            assert!((e.edge_betweenness - 1.0 / 6.0).abs() < 1e-12);
        }
    }

    #[test]
    fn two_nodes_have_zero_betweenness() {
        let g = build_graph([("a", "b")]).unwrap();
        let nm = node_measures(&g);
        assert!(nm.nodes.iter().all(|v| v.betweenness == 0.0));
        let em = edge_measures(&g, &nm);
        assert_eq!(em.edges[0].edge_betweenness, 1.0);
    }

    #[test]
    fn star_converges_despite_bipartite_spectrum() {
        let g = build_graph([("h", "a"), ("h", "b"), ("h", "c"), ("h", "d")]).unwrap();
        let nm = node_measures(&g);
        assert!(nm.eigen_converged);
        assert!((nm.eigenvalue - 2.0).abs() < 1e-10);
        let hub = g.index_of("h").unwrap();
        assert!((nm.nodes[hub].eigenvector - 1.0 / 2f64.sqrt()).abs() < 1e-10);
        assert!((nm.nodes[hub].betweenness - 1.0).abs() < 1e-12);
    }
}
