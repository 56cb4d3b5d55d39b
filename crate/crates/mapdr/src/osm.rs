//! OpenStreetMap XML extracts: reading into a [`RoadGraph`] and writing
//! synthetic maps back out.

use std::fmt::Write as _;

use mapdr_core::graph::{GraphBuilder, Oneway, RoadFilter, WaySpec};
use mapdr_core::maps::SyntheticMap;
use mapdr_core::{GeoPoint, GraphError, RoadGraph};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OsmError {
    #[error("malformed XML at line {line}: {message}")]
    Xml { line: u32, message: String },
    #[error("line {line}: {message}")]
    Element { line: u32, message: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Builds the road graph of an OSM document. Relations and non-road ways
/// are ignored.
pub fn parse_osm(xml: &str, filter: &RoadFilter) -> Result<RoadGraph, OsmError> {
    let doc = roxmltree::Document::parse(xml).map_err(|e| OsmError::Xml {
        line: e.pos().row,
        message: e.to_string(),
    })?;
    let line_of = |n: roxmltree::Node| doc.text_pos_at(n.range().start).row;
    let bad = |n: roxmltree::Node, message: String| OsmError::Element { line: line_of(n), message };
    let attr = |n: roxmltree::Node, name: &str| -> Result<String, OsmError> {
        n.attribute(name)
            .map(str::to_owned)
            .ok_or_else(|| bad(n, format!("<{}> lacks attribute `{name}`", n.tag_name().name())))
    };
    fn number<T: std::str::FromStr>(text: &str) -> Option<T> {
        text.trim().parse().ok()
    }

    let mut builder = GraphBuilder::new();
    for n in doc.root_element().children().filter(|n| n.has_tag_name("node")) {
        let id: i64 = number(&attr(n, "id")?).ok_or_else(|| bad(n, "node id is not an integer".into()))?;
        let lat: f64 = number(&attr(n, "lat")?).ok_or_else(|| bad(n, format!("node {id}: bad latitude")))?;
        let lon: f64 = number(&attr(n, "lon")?).ok_or_else(|| bad(n, format!("node {id}: bad longitude")))?;
        builder.add_node(id, GeoPoint { lat, lon }).map_err(|e| bad(n, e.to_string()))?;
    }
    for w in doc.root_element().children().filter(|n| n.has_tag_name("way")) {
        let id: i64 = number(&attr(w, "id")?).ok_or_else(|| bad(w, "way id is not an integer".into()))?;
        let mut refs = Vec::new();
        for nd in w.children().filter(|c| c.has_tag_name("nd")) {
            refs.push(number(&attr(nd, "ref")?).ok_or_else(|| bad(nd, format!("way {id}: node ref is not an integer")))?);
        }
        let tags = w
            .children()
            .filter(|c| c.has_tag_name("tag"))
            .filter_map(|t| Some((t.attribute("k")?, t.attribute("v")?)));
        if let Some(spec) = WaySpec::from_tags(id, refs, tags, filter) {
            builder.add_way(spec);
        }
    }
    Ok(builder.build()?)
}

/// Speed limit as an OSM `maxspeed` value in km/h.
fn maxspeed(limit_mps: f64) -> String {
    let kmh = limit_mps * 3.6;
    let rounded = kmh.round();
    if (kmh - rounded).abs() < 1e-9 {
        format!("{rounded}")
    } else {
        format!("{kmh}")
    }
}

/// Serializes a synthetic map. Coordinates are written in full precision
/// so that reading the file back reproduces the same graph.
pub fn write_osm(map: &SyntheticMap) -> String {
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<osm version=\"0.6\" generator=\"mapdr\">\n");
    for (id, p) in &map.nodes {
        let _ = writeln!(out, "  <node id=\"{id}\" lat=\"{}\" lon=\"{}\"/>", p.lat, p.lon);
    }
    for w in &map.ways {
        let _ = writeln!(out, "  <way id=\"{}\">", w.id);
        for r in &w.refs {
            let _ = writeln!(out, "    <nd ref=\"{r}\"/>");
        }
        let _ = writeln!(out, "    <tag k=\"highway\" v=\"residential\"/>");
        let _ = writeln!(out, "    <tag k=\"maxspeed\" v=\"{}\"/>", maxspeed(w.speed_limit_mps));
        match w.oneway {
            Oneway::No => {}
            Oneway::Forward => {
                let _ = writeln!(out, "    <tag k=\"oneway\" v=\"yes\"/>");
            }
            Oneway::Reverse => {
                let _ = writeln!(out, "    <tag k=\"oneway\" v=\"-1\"/>");
            }
        }
        out.push_str("  </way>\n");
    }
    out.push_str("</osm>\n");
    out
}
