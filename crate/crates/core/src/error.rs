use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeoError {
    #[error("coordinate out of range: lat {lat}, lon {lon}")]
    OutOfRange { lat: f64, lon: f64 },
    #[error("bearing is undefined between identical points")]
    UndefinedBearing,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("way {way} references missing node {node}")]
    MissingNode { way: i64, node: i64 },
    #[error("way {way} contains a self-loop at node {node}")]
    SelfLoop { way: i64, node: i64 },
    #[error("way {way} has coincident consecutive nodes {a} and {b}")]
    DegenerateSegment { way: i64, a: i64, b: i64 },
    #[error("node {0} defined twice")]
    DuplicateNode(i64),
    #[error("node {id}: {source}")]
    BadCoordinate { id: i64, source: GeoError },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FilterError {
    #[error("no road links within {radius_m} m of ({lat}, {lon})")]
    NoLinksInCircle { lat: f64, lon: f64, radius_m: f64 },
    #[error("filter diverged: every particle was eliminated")]
    Diverged,
    #[error("invalid filter input: {0}")]
    InvalidInput(&'static str),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("node {0} is not in the graph")]
    UnknownNode(i64),
    #[error("node {to} is unreachable from node {from}")]
    Unreachable { from: i64, to: i64 },
    #[error("no route between {min_m} and {max_m} m found after {attempts} attempts")]
    NoSuitableRoute { min_m: f64, max_m: f64, attempts: usize },
    #[error("invalid simulation input: {0}")]
    InvalidInput(&'static str),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("empty sample set")]
    Empty,
    #[error("quantile level {0} outside (0, 1]")]
    BadQuantile(f64),
    #[error("trip has no samples")]
    EmptyTrip,
    #[error("invalid evaluation input: {0}")]
    InvalidInput(&'static str),
    #[error(transparent)]
    Filter(#[from] FilterError),
}
