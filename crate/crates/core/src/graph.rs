//! Immutable directed road network.
//!
//! A [`RoadGraph`] is assembled from nodes and tagged ways through a
//! [`GraphBuilder`]. Every consecutive node pair of a way yields one directed
//! [`RoadLink`] per permitted travel direction. The XML front end lives in the
//! std companion crate; everything here is format-agnostic.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::GraphError;
use crate::geo::{geodesic_distance, planar_bearing, GeoPoint, LocalProjection, PlanarPoint};

/// Side length of the spatial-index cells, meters.
pub const GRID_CELL_M: f64 = 250.0;

const KMH: f64 = 1.0 / 3.6;
const MPH: f64 = 0.447_04;

/// Dense index of a directed link inside its graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinkId(pub u32);

impl LinkId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoadNode {
    pub id: i64,
    pub point: GeoPoint,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoadLink {
    /// OSM id of the start node.
    pub from: i64,
    /// OSM id of the end node.
    pub to: i64,
    pub from_ix: u32,
    pub to_ix: u32,
    pub length_m: f64,
    /// Travel direction, degrees clockwise from north in `[0, 360)`.
    pub bearing_deg: f64,
    pub speed_limit_mps: f64,
    /// True when the parent way is two-way.
    pub reverse_allowed: bool,
    pub way_id: i64,
}

/// Travel-direction restriction of a way.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Oneway {
    No,
    Forward,
    Reverse,
}

impl Oneway {
    pub fn from_tag(value: Option<&str>) -> Self {
        match value.map(str::trim) {
            Some("yes") | Some("true") | Some("1") => Oneway::Forward,
            Some("-1") | Some("reverse") => Oneway::Reverse,
            _ => Oneway::No,
        }
    }
}

/// Default speed limits (km/h) applied when a way has no usable `maxspeed`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpeedDefaults {
    pub motorway: f64,
    pub trunk: f64,
    pub primary: f64,
    pub secondary: f64,
    pub tertiary: f64,
    pub residential: f64,
    pub unclassified: f64,
    pub living_street: f64,
    /// Any other admitted highway class.
    pub other: f64,
}

impl Default for SpeedDefaults {
    fn default() -> Self {
        Self {
            motorway: 120.0,
            trunk: 90.0,
            primary: 90.0,
            secondary: 70.0,
            tertiary: 50.0,
            residential: 30.0,
            unclassified: 30.0,
            living_street: 20.0,
            other: 30.0,
        }
    }
}

impl SpeedDefaults {
    /// Default limit in km/h for a `highway=*` value; `_link` variants share
    /// the parent class.
    pub fn for_class(&self, highway: &str) -> f64 {
        match highway.trim_end_matches("_link") {
            "motorway" => self.motorway,
            "trunk" => self.trunk,
            "primary" => self.primary,
            "secondary" => self.secondary,
            "tertiary" => self.tertiary,
            "residential" => self.residential,
            "unclassified" => self.unclassified,
            "living_street" => self.living_street,
            _ => self.other,
        }
    }
}

/// Which ways become road links, and the limits they get.
#[derive(Clone, Debug, PartialEq)]
pub struct RoadFilter {
    pub excluded_highways: Vec<String>,
    pub defaults: SpeedDefaults,
}

impl Default for RoadFilter {
    fn default() -> Self {
        let excluded = [
            "footway",
            "path",
            "cycleway",
            "steps",
            "pedestrian",
            // not roads at all
            "proposed",
            "construction",
            "abandoned",
            "platform",
            "corridor",
            "elevator",
            "bridleway",
        ];
        Self {
            excluded_highways: excluded.iter().map(|s| String::from(*s)).collect(),
            defaults: SpeedDefaults::default(),
        }
    }
}

/// Parses an OSM `maxspeed` value into m/s. Plain numbers are km/h; an
/// `mph` suffix switches units. Symbolic values (`none`, `signals`, country
/// codes) yield `None`.
pub fn parse_maxspeed(value: &str) -> Option<f64> {
    let first = value.split(';').next()?.trim();
    let (number, factor) = match first.strip_suffix("mph") {
        Some(rest) => (rest.trim(), MPH),
        None => (first.strip_suffix("km/h").unwrap_or(first).trim(), KMH),
    };
    let v: f64 = number.parse().ok()?;
    (v.is_finite() && v > 0.0).then_some(v * factor)
}

/// A way admitted to the road network.
#[derive(Clone, Debug, PartialEq)]
pub struct WaySpec {
    pub id: i64,
    pub refs: Vec<i64>,
    pub speed_limit_mps: f64,
    pub oneway: Oneway,
}

impl WaySpec {
    /// Interprets a way's tags. Returns `None` for ways that are not part of
    /// the vehicle network.
    pub fn from_tags<'a, I>(id: i64, refs: Vec<i64>, tags: I, filter: &RoadFilter) -> Option<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut highway = None;
        let mut maxspeed = None;
        let mut oneway = None;
        for (k, v) in tags {
            match k {
                "highway" => highway = Some(v),
                "maxspeed" => maxspeed = Some(v),
                "oneway" => oneway = Some(v),
                _ => {}
            }
        }
        let highway = highway?;
        if filter.excluded_highways.iter().any(|h| h == highway) {
            return None;
        }
        let speed_limit_mps = maxspeed.and_then(parse_maxspeed).unwrap_or_else(|| filter.defaults.for_class(highway) * KMH);
        Some(Self {
            id,
            refs,
            speed_limit_mps,
            oneway: Oneway::from_tag(oneway),
        })
    }
}

/// Collects nodes and ways, then validates them into a [`RoadGraph`].
#[derive(Default, Debug)]
pub struct GraphBuilder {
    nodes: Vec<RoadNode>,
    node_ix: BTreeMap<i64, usize>,
    ways: Vec<WaySpec>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, id: i64, point: GeoPoint) -> Result<&mut Self, GraphError> {
        GeoPoint::new(point.lat, point.lon).map_err(|source| GraphError::BadCoordinate { id, source })?;
        if self.node_ix.insert(id, self.nodes.len()).is_some() {
            return Err(GraphError::DuplicateNode(id));
        }
        self.nodes.push(RoadNode { id, point });
        Ok(self)
    }

    pub fn add_way(&mut self, way: WaySpec) -> &mut Self {
        self.ways.push(way);
        self
    }

    pub fn build(self) -> Result<RoadGraph, GraphError> {
        // Nodes that no admitted way references are dropped; survivors keep
        // their input order.
        let mut used = vec![false; self.nodes.len()];
        for way in &self.ways {
            for &r in &way.refs {
                match self.node_ix.get(&r) {
                    Some(&ix) => used[ix] = true,
                    None => return Err(GraphError::MissingNode { way: way.id, node: r }),
                }
            }
        }
        let mut remap = vec![u32::MAX; self.nodes.len()];
        let mut nodes = Vec::new();
        for (ix, node) in self.nodes.into_iter().enumerate() {
            if used[ix] {
                remap[ix] = nodes.len() as u32;
                nodes.push(node);
            }
        }

        let mut links = Vec::new();
        for way in &self.ways {
            for pair in way.refs.windows(2) {
                let (a, b) = (pair[0], pair[1]);
                if a == b {
                    return Err(GraphError::SelfLoop { way: way.id, node: a });
                }
                let ia = remap[self.node_ix[&a]];
                let ib = remap[self.node_ix[&b]];
                let (pa, pb) = (nodes[ia as usize].point, nodes[ib as usize].point);
                let length_m = geodesic_distance(pa, pb);
                let bearing = planar_bearing(pa, pb);
                let bearing_deg = match bearing {
                    Ok(b) if length_m > 0.0 => b,
                    _ => return Err(GraphError::DegenerateSegment { way: way.id, a, b }),
                };
                let two_way = way.oneway == Oneway::No;
                let make = |from: i64, to: i64, from_ix: u32, to_ix: u32, bearing_deg: f64| RoadLink {
                    from,
                    to,
                    from_ix,
                    to_ix,
                    length_m,
                    bearing_deg,
                    speed_limit_mps: way.speed_limit_mps,
                    reverse_allowed: two_way,
                    way_id: way.id,
                };
                if way.oneway != Oneway::Reverse {
                    links.push(make(a, b, ia, ib, bearing_deg));
                }
                if way.oneway != Oneway::Forward {
                    links.push(make(b, a, ib, ia, crate::geo::normalize_bearing(bearing_deg + 180.0)));
                }
            }
        }
        Ok(RoadGraph::from_parts(nodes, links))
    }
}

/// A uniform grid of link ids over the graph's bounding box.
#[derive(Clone, Debug)]
struct LinkGrid {
    min: PlanarPoint,
    cols: usize,
    rows: usize,
    cells: Vec<Vec<LinkId>>,
}

impl LinkGrid {
    fn cell_of(&self, p: PlanarPoint) -> (isize, isize) {
        (
            libm::floor((p.x - self.min.x) / GRID_CELL_M) as isize,
            libm::floor((p.y - self.min.y) / GRID_CELL_M) as isize,
        )
    }

    fn clamp_range(&self, lo: isize, hi: isize, n: usize) -> Option<(usize, usize)> {
        let hi = hi.min(n as isize - 1);
        let lo = lo.max(0);
        (lo <= hi).then_some((lo as usize, hi as usize))
    }

    /// Links whose bounding boxes touch the planar box `[lo, hi]`.
    fn candidates(&self, lo: PlanarPoint, hi: PlanarPoint) -> Vec<LinkId> {
        let (c0, r0) = self.cell_of(lo);
        let (c1, r1) = self.cell_of(hi);
        let mut out = Vec::new();
        if let (Some((c0, c1)), Some((r0, r1))) = (self.clamp_range(c0, c1, self.cols), self.clamp_range(r0, r1, self.rows)) {
            for r in r0..=r1 {
                for c in c0..=c1 {
                    out.extend_from_slice(&self.cells[r * self.cols + c]);
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// The portion of a link lying inside a query circle, as a ratio interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkPortion {
    pub link: LinkId,
    pub ratio_start: f64,
    pub ratio_end: f64,
}

#[derive(Clone, Debug)]
pub struct RoadGraph {
    nodes: Vec<RoadNode>,
    links: Vec<RoadLink>,
    out_links: Vec<Vec<LinkId>>,
    in_links: Vec<Vec<LinkId>>,
    node_ix: BTreeMap<i64, u32>,
    projection: LocalProjection,
    grid: LinkGrid,
}

impl RoadGraph {
    fn from_parts(nodes: Vec<RoadNode>, links: Vec<RoadLink>) -> Self {
        let mut out_links = vec![Vec::new(); nodes.len()];
        let mut in_links = vec![Vec::new(); nodes.len()];
        for (i, l) in links.iter().enumerate() {
            out_links[l.from_ix as usize].push(LinkId(i as u32));
            in_links[l.to_ix as usize].push(LinkId(i as u32));
        }
        let node_ix = nodes.iter().enumerate().map(|(i, n)| (n.id, i as u32)).collect();

        let centre = if nodes.is_empty() {
            GeoPoint { lat: 0.0, lon: 0.0 }
        } else {
            let (mut lat0, mut lat1, mut lon0, mut lon1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
            for n in &nodes {
                lat0 = lat0.min(n.point.lat);
                lat1 = lat1.max(n.point.lat);
                lon0 = lon0.min(n.point.lon);
                lon1 = lon1.max(n.point.lon);
            }
            GeoPoint {
                lat: 0.5 * (lat0 + lat1),
                lon: 0.5 * (lon0 + lon1),
            }
        };
        let projection = LocalProjection::new(centre);
        let grid = Self::build_grid(&nodes, &links, &projection);
        Self {
            nodes,
            links,
            out_links,
            in_links,
            node_ix,
            projection,
            grid,
        }
    }

    fn build_grid(nodes: &[RoadNode], links: &[RoadLink], proj: &LocalProjection) -> LinkGrid {
        let pts: Vec<PlanarPoint> = nodes.iter().map(|n| proj.project(n.point)).collect();
        let mut min = PlanarPoint { x: f64::MAX, y: f64::MAX };
        let mut max = PlanarPoint { x: f64::MIN, y: f64::MIN };
        for p in &pts {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
        }
        if pts.is_empty() {
            min = PlanarPoint::default();
            max = PlanarPoint::default();
        }
        let cols = (libm::floor((max.x - min.x) / GRID_CELL_M) as usize) + 1;
        let rows = (libm::floor((max.y - min.y) / GRID_CELL_M) as usize) + 1;
        let mut grid = LinkGrid {
            min,
            cols,
            rows,
            cells: vec![Vec::new(); cols * rows],
        };
        for (i, l) in links.iter().enumerate() {
            let a = pts[l.from_ix as usize];
            let b = pts[l.to_ix as usize];
            let lo = PlanarPoint {
                x: a.x.min(b.x),
                y: a.y.min(b.y),
            };
            let hi = PlanarPoint {
                x: a.x.max(b.x),
                y: a.y.max(b.y),
            };
            let (c0, r0) = grid.cell_of(lo);
            let (c1, r1) = grid.cell_of(hi);
            for r in r0.max(0) as usize..=(r1.max(0) as usize).min(rows - 1) {
                for c in c0.max(0) as usize..=(c1.max(0) as usize).min(cols - 1) {
                    grid.cells[r * cols + c].push(LinkId(i as u32));
                }
            }
        }
        grid
    }

    pub fn nodes(&self) -> &[RoadNode] {
        &self.nodes
    }

    pub fn links(&self) -> &[RoadLink] {
        &self.links
    }

    pub fn link(&self, id: LinkId) -> &RoadLink {
        &self.links[id.index()]
    }

    pub fn node(&self, ix: u32) -> &RoadNode {
        &self.nodes[ix as usize]
    }

    pub fn node_index(&self, id: i64) -> Option<u32> {
        self.node_ix.get(&id).copied()
    }

    pub fn out_links(&self, node_ix: u32) -> &[LinkId] {
        &self.out_links[node_ix as usize]
    }

    pub fn in_links(&self, node_ix: u32) -> &[LinkId] {
        &self.in_links[node_ix as usize]
    }

    /// Links a vehicle may take after traversing `link`: everything leaving
    /// its end node except a link straight back to its start node.
    pub fn continuations(&self, link: LinkId) -> impl Iterator<Item = LinkId> + '_ {
        let l = &self.links[link.index()];
        let back = l.from_ix;
        self.out_links[l.to_ix as usize]
            .iter()
            .copied()
            .filter(move |c| self.links[c.index()].to_ix != back)
    }

    /// Links a vehicle may have arrived on before entering `link`, mirroring
    /// [`continuations`](Self::continuations).
    pub fn predecessors(&self, link: LinkId) -> impl Iterator<Item = LinkId> + '_ {
        let l = &self.links[link.index()];
        let ahead = l.to_ix;
        self.in_links[l.from_ix as usize]
            .iter()
            .copied()
            .filter(move |c| self.links[c.index()].from_ix != ahead)
    }

    /// The directed link between two nodes, if any.
    pub fn link_between(&self, from_ix: u32, to_ix: u32) -> Option<LinkId> {
        self.out_links[from_ix as usize].iter().copied().find(|l| self.links[l.index()].to_ix == to_ix)
    }

    /// Projection centred on the bounding-box centroid.
    pub fn projection(&self) -> &LocalProjection {
        &self.projection
    }

    /// Every link with at least one point within `radius_m` of `center`,
    /// with the in-circle ratio interval. Sorted by link id.
    pub fn links_within(&self, center: GeoPoint, radius_m: f64) -> Vec<LinkPortion> {
        if self.links.is_empty() || !(radius_m >= 0.0) {
            return Vec::new();
        }
        // Grid lookup in the global plane with a margin for projection
        // distortion; the exact test runs in a plane centred on the query.
        let c = self.projection.project(center);
        let pad = radius_m * 1.01 + 1.0;
        let lo = PlanarPoint { x: c.x - pad, y: c.y - pad };
        let hi = PlanarPoint { x: c.x + pad, y: c.y + pad };
        let local = LocalProjection::new(center);
        let mut out = Vec::new();
        for id in self.grid.candidates(lo, hi) {
            let l = &self.links[id.index()];
            let a = local.project(self.nodes[l.from_ix as usize].point);
            let b = local.project(self.nodes[l.to_ix as usize].point);
            if let Some((t0, t1)) = segment_circle(a, b, radius_m) {
                out.push(LinkPortion {
                    link: id,
                    ratio_start: t0,
                    ratio_end: t1,
                });
            }
        }
        out
    }

    /// Total length of all directed links.
    pub fn total_length(&self) -> f64 {
        self.links.iter().map(|l| l.length_m).sum()
    }
}

/// Parameter interval of segment `a→b` inside the circle of radius `r`
/// around the origin.
fn segment_circle(a: PlanarPoint, b: PlanarPoint, r: f64) -> Option<(f64, f64)> {
    let d = PlanarPoint { x: b.x - a.x, y: b.y - a.y };
    let qa = d.x * d.x + d.y * d.y;
    let qb = 2.0 * (a.x * d.x + a.y * d.y);
    let qc = a.x * a.x + a.y * a.y - r * r;
    if qa == 0.0 {
        return (qc <= 0.0).then_some((0.0, 1.0));
    }
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        return None;
    }
    let s = libm::sqrt(disc);
    let t0 = ((-qb - s) / (2.0 * qa)).max(0.0);
    let t1 = ((-qb + s) / (2.0 * qa)).min(1.0);
    (t0 <= t1).then_some((t0, t1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::offset;
    use approx::assert_relative_eq;

    fn way(id: i64, refs: &[i64], oneway: Oneway) -> WaySpec {
        WaySpec {
            id,
            refs: refs.to_vec(),
            speed_limit_mps: 13.89,
            oneway,
        }
    }

    fn two_nodes() -> GraphBuilder {
        let mut b = GraphBuilder::new();
        let o = GeoPoint { lat: 41.15, lon: -8.61 };
        b.add_node(1, o).unwrap();
        b.add_node(2, offset(o, 100.0, 0.0)).unwrap();
        b
    }

    #[test]
    fn two_way_segment_yields_two_links() {
        let mut b = two_nodes();
        b.add_way(way(10, &[1, 2], Oneway::No));
        let g = b.build().unwrap();
        assert_eq!(g.nodes().len(), 2);
        assert_eq!(g.links().len(), 2);
        let (f, r) = (&g.links()[0], &g.links()[1]);
        assert_eq!((f.from, f.to), (1, 2));
        assert_eq!((r.from, r.to), (2, 1));
        assert!(f.reverse_allowed);
        assert_eq!(g.out_links(0), &[LinkId(0)]);
        assert_eq!(g.out_links(1), &[LinkId(1)]);
        let diff = crate::geo::wrap_angle(r.bearing_deg - f.bearing_deg - 180.0);
        assert!(diff.abs() < 1e-9);
        assert_relative_eq!(f.length_m, geodesic_distance(g.node(0).point, g.node(1).point), max_relative = 1e-12);
    }

    #[test]
    fn oneway_variants() {
        let mut b = two_nodes();
        b.add_way(way(10, &[1, 2], Oneway::Forward));
        let g = b.build().unwrap();
        assert_eq!(g.links().len(), 1);
        assert_eq!((g.links()[0].from, g.links()[0].to), (1, 2));
        assert!(!g.links()[0].reverse_allowed);

        let mut b = two_nodes();
        b.add_way(way(10, &[1, 2], Oneway::Reverse));
        let g = b.build().unwrap();
        assert_eq!(g.links().len(), 1);
        assert_eq!((g.links()[0].from, g.links()[0].to), (2, 1));
    }

    #[test]
    fn missing_node_is_reported() {
        let mut b = two_nodes();
        b.add_way(way(10, &[1, 7], Oneway::No));
        assert_eq!(b.build().unwrap_err(), GraphError::MissingNode { way: 10, node: 7 });
    }

    #[test]
    fn self_loop_is_rejected() {
        let mut b = two_nodes();
        b.add_way(way(10, &[1, 1, 2], Oneway::No));
        assert!(matches!(b.build(), Err(GraphError::SelfLoop { .. })));
    }

    #[test]
    fn empty_way_set_gives_empty_graph() {
        let g = two_nodes().build().unwrap();
        assert!(g.links().is_empty());
        assert!(g.links_within(GeoPoint { lat: 41.15, lon: -8.61 }, 1e6).is_empty());
    }

    #[test]
    fn maxspeed_parsing() {
        assert_relative_eq!(parse_maxspeed("50").unwrap(), 50.0 / 3.6);
        assert_relative_eq!(parse_maxspeed("30 mph").unwrap(), 30.0 * 0.44704);
        assert_relative_eq!(parse_maxspeed("20mph").unwrap(), 20.0 * 0.44704);
        assert_relative_eq!(parse_maxspeed("70;50").unwrap(), 70.0 / 3.6);
        assert!(parse_maxspeed("none").is_none());
        assert!(parse_maxspeed("PT:urban").is_none());
    }

    #[test]
    fn tag_interpretation() {
        let f = RoadFilter::default();
        let w = WaySpec::from_tags(1, vec![1, 2], [("highway", "residential")], &f).unwrap();
        assert_relative_eq!(w.speed_limit_mps, 30.0 / 3.6);
        assert_eq!(w.oneway, Oneway::No);
        let w = WaySpec::from_tags(1, vec![1, 2], [("highway", "primary_link"), ("oneway", "-1")], &f).unwrap();
        assert_relative_eq!(w.speed_limit_mps, 90.0 / 3.6);
        assert_eq!(w.oneway, Oneway::Reverse);
        let w = WaySpec::from_tags(1, vec![1, 2], [("highway", "motorway"), ("maxspeed", "100")], &f).unwrap();
        assert_relative_eq!(w.speed_limit_mps, 100.0 / 3.6);
        assert!(WaySpec::from_tags(1, vec![1, 2], [("highway", "footway")], &f).is_none());
        assert!(WaySpec::from_tags(1, vec![1, 2], [("building", "yes")], &f).is_none());
        assert_eq!(Oneway::from_tag(Some("no")), Oneway::No);
        assert_eq!(Oneway::from_tag(None), Oneway::No);
    }

    #[test]
    fn continuations_exclude_u_turn() {
        // 1 - 2 - 3 with a spur 2 - 4
        let mut b = GraphBuilder::new();
        let o = GeoPoint { lat: 41.15, lon: -8.61 };
        b.add_node(1, o).unwrap();
        b.add_node(2, offset(o, 100.0, 0.0)).unwrap();
        b.add_node(3, offset(o, 200.0, 0.0)).unwrap();
        b.add_node(4, offset(o, 100.0, 100.0)).unwrap();
        b.add_way(way(1, &[1, 2, 3], Oneway::No));
        b.add_way(way(2, &[2, 4], Oneway::No));
        let g = b.build().unwrap();
        let first = g.link_between(0, 1).unwrap();
        let cont: Vec<_> = g.continuations(first).map(|l| g.link(l).to).collect();
        assert_eq!(cont, [3, 4]);
        let pred: Vec<_> = g.predecessors(g.link_between(1, 2).unwrap()).map(|l| g.link(l).from).collect();
        assert_eq!(pred, [1, 4]);
    }

    #[test]
    fn links_within_radius_zero_off_network() {
        let mut b = two_nodes();
        b.add_way(way(10, &[1, 2], Oneway::No));
        let g = b.build().unwrap();
        let off = offset(GeoPoint { lat: 41.15, lon: -8.61 }, 50.0, 30.0);
        assert!(g.links_within(off, 0.0).is_empty());
        assert_eq!(g.links_within(off, 1e5).len(), 2);
    }
}
