use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use super::{
    build_graph_with, edge_measures, global_measures, node_measures, ComponentPolicy, EdgeMeasure,
    EdgeMeasures, GlobalMeasures, Graph, NodeMeasures,
};
use crate::error::{Error, Result};
use crate::ingest::RouteCarrierQuarter;
use crate::quarter::Quarter;
use crate::route::Route;

/// The twelve measures usable as the interaction variable `Z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NetworkMeasure {
    Density,
    Diameter,
    AvgPathLength,
    Transitivity,
    AvgClustering,
    Assortativity,
    EdgeBetweenness,
    Degree,
    Closeness,
    Betweenness,
    Eigenvector,
    NeighbourDegree,
}

impl NetworkMeasure {
    pub const ALL: [NetworkMeasure; 12] = [
        NetworkMeasure::Density,
        NetworkMeasure::Diameter,
        NetworkMeasure::AvgPathLength,
        NetworkMeasure::Transitivity,
        NetworkMeasure::AvgClustering,
        NetworkMeasure::Assortativity,
        NetworkMeasure::EdgeBetweenness,
        NetworkMeasure::Degree,
        NetworkMeasure::Closeness,
        NetworkMeasure::Betweenness,
        NetworkMeasure::Eigenvector,
        NetworkMeasure::NeighbourDegree,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NetworkMeasure::Density => "density",
            NetworkMeasure::Diameter => "diameter",
            NetworkMeasure::AvgPathLength => "apl",
            NetworkMeasure::Transitivity => "transitivity",
            NetworkMeasure::AvgClustering => "avg_clustering",
            NetworkMeasure::Assortativity => "assortativity",
            NetworkMeasure::EdgeBetweenness => "edge_betweenness",
            NetworkMeasure::Degree => "degree",
            NetworkMeasure::Closeness => "closeness",
            NetworkMeasure::Betweenness => "betweenness",
            NetworkMeasure::Eigenvector => "eigenvector",
            NetworkMeasure::NeighbourDegree => "neighbour_degree",
        }
    }

    pub fn is_global(self) -> bool {
        (self as usize) < 6
    }

    pub fn position(self) -> usize {
        self as usize
    }

    pub fn from_global(self, g: &GlobalMeasures) -> Option<f64> {
        match self {
            NetworkMeasure::Density => Some(g.density),
            NetworkMeasure::Diameter => Some(g.diameter as f64),
            NetworkMeasure::AvgPathLength => Some(g.avg_path_length),
            NetworkMeasure::Transitivity => Some(g.transitivity),
            NetworkMeasure::AvgClustering => Some(g.avg_clustering),
            NetworkMeasure::Assortativity => g.assortativity,
            _ => None,
        }
    }

    pub fn from_edge(self, e: &EdgeMeasure) -> Option<f64> {
        match self {
            NetworkMeasure::EdgeBetweenness => Some(e.edge_betweenness),
            NetworkMeasure::Degree => Some(e.degree),
            NetworkMeasure::Closeness => Some(e.closeness),
            NetworkMeasure::Betweenness => Some(e.betweenness),
            NetworkMeasure::Eigenvector => Some(e.eigenvector),
            NetworkMeasure::NeighbourDegree => Some(e.avg_neighbour_degree),
            _ => None,
        }
    }
}

impl fmt::Display for NetworkMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NetworkMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NetworkMeasure::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::UnknownMeasure(s.to_string()))
    }
}

/// A carrier's route graph in one quarter with its measures.
#[derive(Debug, Clone)]
pub struct CarrierNetwork {
    pub carrier: String,
    pub quarter: Quarter,
    pub graph: Graph,
    pub global: GlobalMeasures,
    pub nodes: NodeMeasures,
    pub edges: EdgeMeasures,
}

impl CarrierNetwork {
    pub fn from_graph(carrier: String, quarter: Quarter, graph: Graph) -> Self {
        let global = global_measures(&graph);
        let nodes = node_measures(&graph);
        let edges = edge_measures(&graph, &nodes);
        CarrierNetwork {
            carrier,
            quarter,
            graph,
            global,
            nodes,
            edges,
        }
    }

    pub fn route_measures(&self, route: &Route) -> Option<&EdgeMeasure> {
        let a = self.graph.index_of(route.first())?;
        let b = self.graph.index_of(route.second())?;
        self.graph.edge_index(a, b).map(|e| &self.edges.edges[e])
    }
}

/// Build one network per carrier-quarter from its served routes. Carrier
/// quarters that cannot form a graph under `policy` are skipped with a
/// warning and returned by name.
pub fn carrier_networks(
    records: &[RouteCarrierQuarter],
    policy: ComponentPolicy,
) -> (Vec<CarrierNetwork>, Vec<(String, Quarter, Error)>) {
    let mut routes: BTreeMap<(&str, Quarter), Vec<&Route>> = BTreeMap::new();
    for r in records {
        routes
            .entry((r.carrier.as_str(), r.quarter))
            .or_default()
            .push(&r.route);
    }
    let mut networks = Vec::new();
    let mut failures = Vec::new();
    for ((carrier, quarter), rs) in routes {
        let edges = rs.iter().map(|r| (r.first(), r.second()));
        match build_graph_with(edges, policy) {
            Ok(g) => networks.push(CarrierNetwork::from_graph(carrier.to_string(), quarter, g)),
            Err(e) => {
                log::warn!("skipping network {carrier} {quarter}: {e}");
                failures.push((carrier.to_string(), quarter, e));
            }
        }
    }
    (networks, failures)
}

/// Route measures of one carrier-route-quarter.
pub type RouteMeasures = EdgeMeasure;

/// Lookup of global and local measures by carrier, quarter and route.
#[derive(Debug, Clone, Default)]
pub struct MeasureIndex {
    global: BTreeMap<(String, Quarter), GlobalMeasures>,
    local: BTreeMap<(String, Route, Quarter), RouteMeasures>,
}

impl MeasureIndex {
    pub fn new(networks: &[CarrierNetwork]) -> Self {
        let mut idx = MeasureIndex::default();
        for net in networks {
            idx.global
                .insert((net.carrier.clone(), net.quarter), net.global);
            for (&(i, j), m) in net.graph.edges().iter().zip(&net.edges.edges) {
                let route = Route::new(net.graph.label(i), net.graph.label(j));
                idx.local
                    .insert((net.carrier.clone(), route, net.quarter), *m);
            }
        }
        idx
    }

    pub fn global(&self, carrier: &str, quarter: Quarter) -> Option<&GlobalMeasures> {
        self.global.get(&(carrier.to_string(), quarter))
    }

    pub fn local(&self, carrier: &str, route: &Route, quarter: Quarter) -> Option<&RouteMeasures> {
        self.local
            .get(&(carrier.to_string(), route.clone(), quarter))
    }

    /// All twelve measures for one carrier-route-quarter, `None` where
    /// unavailable or undefined.
    pub fn profile(&self, carrier: &str, route: &Route, quarter: Quarter) -> [Option<f64>; 12] {
        let g = self.global(carrier, quarter);
        let l = self.local(carrier, route, quarter);
        NetworkMeasure::ALL.map(|m| {
            if m.is_global() {
                g.and_then(|g| m.from_global(g))
            } else {
                l.and_then(|l| m.from_edge(l))
            }
        })
    }
}

fn flush<W: Write>(mut wr: csv::Writer<W>) -> Result<()> {
    wr.flush().map_err(|e| Error::io("<measures csv>", e))
}

pub fn write_global_measures_csv<W: Write>(networks: &[CarrierNetwork], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record([
        "CARRIER",
        "QUARTER",
        "NODES",
        "EDGES",
        "DENSITY",
        "DIAMETER",
        "APL",
        "TRANSITIVITY",
        "AVG_CLUSTERING",
        "ASSORTATIVITY",
    ])?;
    for n in networks {
        let g = &n.global;
        wr.write_record([
            n.carrier.clone(),
            n.quarter.to_string(),
            n.graph.node_count().to_string(),
            n.graph.edge_count().to_string(),
            g.density.to_string(),
            g.diameter.to_string(),
            g.avg_path_length.to_string(),
            g.transitivity.to_string(),
            g.avg_clustering.to_string(),
            g.assortativity.map(|a| a.to_string()).unwrap_or_default(),
        ])?;
    }
    flush(wr)
}

pub fn write_node_measures_csv<W: Write>(networks: &[CarrierNetwork], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record([
        "CARRIER",
        "QUARTER",
        "NODE",
        "DEGREE",
        "CLOSENESS",
        "BETWEENNESS",
        "EIGENVECTOR",
        "NEIGHBOUR_DEGREE",
    ])?;
    for n in networks {
        for (v, m) in n.nodes.nodes.iter().enumerate() {
            wr.write_record([
                n.carrier.clone(),
                n.quarter.to_string(),
                n.graph.label(v).to_string(),
                m.degree.to_string(),
                m.closeness.to_string(),
                m.betweenness.to_string(),
                m.eigenvector.to_string(),
                m.avg_neighbour_degree.to_string(),
            ])?;
        }
    }
    flush(wr)
}

pub fn write_edge_measures_csv<W: Write>(networks: &[CarrierNetwork], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record([
        "CARRIER",
        "QUARTER",
        "NODE_A",
        "NODE_B",
        "EDGE_BETWEENNESS",
        "DEGREE",
        "CLOSENESS",
        "BETWEENNESS",
        "EIGENVECTOR",
        "NEIGHBOUR_DEGREE",
    ])?;
    for n in networks {
        for (&(i, j), m) in n.graph.edges().iter().zip(&n.edges.edges) {
            wr.write_record([
                n.carrier.clone(),
                n.quarter.to_string(),
                n.graph.label(i).to_string(),
                n.graph.label(j).to_string(),
                m.edge_betweenness.to_string(),
                m.degree.to_string(),
                m.closeness.to_string(),
                m.betweenness.to_string(),
                m.eigenvector.to_string(),
                m.avg_neighbour_degree.to_string(),
            ])?;
        }
    }
    flush(wr)
}

/// Read a `NODE_A,NODE_B` edge list.
pub fn read_edge_list<R: Read>(reader: R) -> Result<Vec<(String, String)>> {
    let mut table = crate::ingest::Table::new("edge list", reader, &["NODE_A", "NODE_B"], &[])?;
    let mut out = Vec::new();
    for row in table.rows() {
        let row = row.map_err(|e| Error::Parse(format!("edge list {e}")))?;
        out.push((row.get(0).to_string(), row.get(1).to_string()));
    }
    Ok(out)
}
