use super::Graph;

/// Carrier-level (whole graph) measures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlobalMeasures {
    pub density: f64,
    pub diameter: u32,
    pub avg_path_length: f64,
    pub transitivity: f64,
    pub avg_clustering: f64,
    /// `None` when every edge joins nodes of equal excess degree structure
    /// such that the variance term vanishes (e.g. regular graphs).
    pub assortativity: Option<f64>,
}

/// Number of triangles through each node, `(g^3)_ii / 2`.
pub(crate) fn triangles(g: &Graph) -> Vec<u64> {
    let n = g.node_count();
    let mut tri = vec![0u64; n];
    for &(i, j) in g.edges() {
        // Common neighbours of an edge close a triangle with it.
        let (a, b) = (g.neighbours(i), g.neighbours(j));
        let (mut x, mut y) = (0, 0);
        while x < a.len() && y < b.len() {
            match a[x].cmp(&b[y]) {
                std::cmp::Ordering::Less => x += 1,
                std::cmp::Ordering::Greater => y += 1,
                std::cmp::Ordering::Equal => {
                    tri[a[x]] += 1;
                    x += 1;
                    y += 1;
                }
            }
        }
    }
    // Each triangle at node k was seen once per opposite edge, i.e. once.
    tri
}

pub fn global_measures(g: &Graph) -> GlobalMeasures {
    let n = g.node_count();
    let m = g.edge_count();
    let dist = g.distances();

    let mut diameter = 0;
    let mut total: u64 = 0;
    for a in 0..n {
        for b in a + 1..n {
            let l = dist.len(a, b);
            diameter = diameter.max(l);
            total += l as u64;
        }
    }
    let pairs = (n * (n - 1)) as f64 / 2.0;

    let tri = triangles(g);
    let trace_g3: u64 = tri.iter().map(|t| 2 * t).sum();
    let triples: u64 = (0..n)
        .map(|v| {
            let k = g.degree(v) as u64;
            k * k.saturating_sub(1)
        })
        .sum();
    let transitivity = if triples == 0 {
        0.0
    } else {
        trace_g3 as f64 / triples as f64
    };

    let avg_clustering = (0..n)
        .map(|v| {
            let k = g.degree(v) as f64;
            if k < 2.0 {
                0.0
            } else {
                2.0 * tri[v] as f64 / (k * (k - 1.0))
            }
        })
        .sum::<f64>()
        / n as f64;

    GlobalMeasures {
        density: m as f64 / pairs,
        diameter,
        avg_path_length: total as f64 / pairs,
        transitivity,
        avg_clustering,
        assortativity: assortativity(g),
    }
}

/// Pearson correlation of excess degree across edges, evaluated exactly in
/// integers: with `s1 = Σ a·b`, `s2 = Σ (a+b)`, `s3 = Σ (a²+b²)` over edges
/// the coefficient is `(4m·s1 − s2²) / (2m·s3 − s2²)`.
fn assortativity(g: &Graph) -> Option<f64> {
    let m = g.edge_count() as i128;
    let (mut s1, mut s2, mut s3) = (0i128, 0i128, 0i128);
    for &(i, j) in g.edges() {
        let a = g.degree(i) as i128 - 1;
        let b = g.degree(j) as i128 - 1;
        s1 += a * b;
        s2 += a + b;
        s3 += a * a + b * b;
    }
    let num = 4 * m * s1 - s2 * s2;
    let den = 2 * m * s3 - s2 * s2;
    (den != 0).then(|| num as f64 / den as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgraph::build_graph;

    #[test]
    fn triangle_is_complete() {
        let g = build_graph([("1", "2"), ("2", "3"), ("1", "3")]).unwrap();
        let m = global_measures(&g);
        assert_eq!(m.density, 1.0);
        assert_eq!(m.diameter, 1);
        assert_eq!(m.avg_path_length, 1.0);
        assert_eq!(m.transitivity, 1.0);
        assert_eq!(m.avg_clustering, 1.0);
        assert_eq!(m.assortativity, None);
    }

    #[test]
    fn path_of_three() {
        // Hand evaluation: m=2, n=3; distances 1,1,2; no triangles;
        // excess degrees (0,1),(1,0) give r = -1.
        let g = build_graph([("1", "2"), ("2", "3")]).unwrap();
        let m = global_measures(&g);
        assert_eq!(m.density, 2.0 / 3.0);
        assert_eq!(m.diameter, 2);
        assert_eq!(m.avg_path_length, 4.0 / 3.0);
        assert_eq!(m.transitivity, 0.0);
        assert_eq!(m.avg_clustering, 0.0);
        assert_eq!(m.assortativity, Some(-1.0));
    }

    #[test]
    fn regular_cycle_has_undefined_assortativity() {
        let g = build_graph([("a", "b"), ("b", "c"), ("c", "d"), ("d", "a")]).unwrap();
        assert_eq!(global_measures(&g).assortativity, None);
    }

    #[test]
    fn triangles_per_node() {
        let g = build_graph([("1", "2"), ("2", "3"), ("1", "3"), ("3", "4")]).unwrap();
        assert_eq!(triangles(&g), [1, 1, 1, 0]);
    }
}
