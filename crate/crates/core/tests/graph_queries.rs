mod common;

use common::{at, build, two_way, Node};
use mapdr_core::geodesic_distance;
use mapdr_core::motion::position_of;
use mapdr_core::sim::plan_route;
use mapdr_core::{PathState, RoadGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SAMPLES: usize = 2000;

/// Minimum distance from `center` over densely sampled points of each link,
/// plus the sampled in-circle ratio range.
fn sampled(g: &RoadGraph, center: mapdr_core::GeoPoint, radius: f64) -> Vec<(f64, Option<(f64, f64)>)> {
    (0..g.links().len())
        .map(|i| {
            let mut min = f64::INFINITY;
            let mut range: Option<(f64, f64)> = None;
            for s in 0..=SAMPLES {
                let r = s as f64 / SAMPLES as f64;
                let d = geodesic_distance(position_of(g, PathState::new(mapdr_core::LinkId(i as u32), r)), center);
                min = min.min(d);
                if d <= radius {
                    range = Some(range.map_or((r, r), |(a, b)| (a.min(r), b.max(r))));
                }
            }
            (min, range)
        })
        .collect()
}

#[test]
fn star_with_two_spokes_in_circle() {
    let nodes: [Node; 4] = [(1, 0.0, 0.0), (2, 300.0, 0.0), (3, 0.0, 300.0), (4, -300.0, 0.0)];
    let g = build(&nodes, &[two_way(&[1, 2], 10.0), two_way(&[1, 3], 10.0), two_way(&[1, 4], 10.0)]);
    let found = g.links_within(at(40.0, 40.0), 50.0);
    let mut ways: Vec<i64> = found.iter().map(|p| g.link(p.link).way_id).collect();
    ways.sort_unstable();
    assert_eq!(ways, [1, 1, 2, 2]);

    let oracle = sampled(&g, at(40.0, 40.0), 50.0);
    for (i, (min, _)) in oracle.iter().enumerate() {
        assert_eq!(*min <= 50.0, found.iter().any(|p| p.link.index() == i), "link {i}");
    }
}

#[test]
fn links_within_matches_dense_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut nodes = Vec::new();
    for i in 0..30 {
        nodes.push((i as i64 + 1, rng.random_range(0.0..1500.0), rng.random_range(0.0..1500.0)));
    }
    let pairs: Vec<[i64; 2]> = (1..30).map(|i| [i as i64, rng.random_range(i + 1..=30) as i64]).collect();
    let ways: Vec<_> = pairs.iter().map(|p| two_way(p, 13.9)).collect();
    let g = build(&nodes, &ways);
    let step = 1.0 / SAMPLES as f64;
    let mut checked = 0;
    for _ in 0..60 {
        let center = at(rng.random_range(-200.0..1700.0), rng.random_range(-200.0..1700.0));
        let radius = rng.random_range(10.0..400.0);
        let found = g.links_within(center, radius);
        for (i, (min, range)) in sampled(&g, center, radius).into_iter().enumerate() {
            // sampling cannot resolve the boundary itself
            if (min - radius).abs() < 0.5 {
                continue;
            }
            let hit = found.iter().find(|p| p.link.index() == i);
            assert_eq!(min <= radius, hit.is_some(), "link {i}, min {min}, radius {radius}");
            if let (Some(p), Some((a, b))) = (hit, range) {
                assert!(p.ratio_start <= a + step && p.ratio_end >= b - step, "{p:?} vs ({a}, {b})");
                assert!(p.ratio_start >= a - 2.0 * step && p.ratio_end <= b + 2.0 * step, "{p:?} vs ({a}, {b})");
            }
            checked += 1;
        }
    }
    assert!(checked > 1000);
}

#[test]
fn empty_and_full_circles() {
    let nodes: [Node; 3] = [(1, 0.0, 0.0), (2, 100.0, 0.0), (3, 100.0, 100.0)];
    let g = build(&nodes, &[two_way(&[1, 2, 3], 10.0)]);
    assert!(g.links_within(at(500.0, 500.0), 0.0).is_empty());
    assert_eq!(g.links_within(at(50.0, 50.0), 10_000.0).len(), g.links().len());
}

/// Shortest travel time over every simple path, by depth-first search.
fn fastest_by_enumeration(g: &RoadGraph, from: u32, to: u32) -> f64 {
    fn walk(g: &RoadGraph, at: u32, to: u32, seen: &mut Vec<bool>, time: f64, best: &mut f64) {
        if at == to {
            *best = best.min(time);
            return;
        }
        for &l in g.out_links(at) {
            let link = g.link(l);
            if !seen[link.to_ix as usize] {
                seen[link.to_ix as usize] = true;
                walk(g, link.to_ix, to, seen, time + link.length_m / link.speed_limit_mps, best);
                seen[link.to_ix as usize] = false;
            }
        }
    }
    let mut seen = vec![false; g.nodes().len()];
    seen[from as usize] = true;
    let mut best = f64::INFINITY;
    walk(g, from, to, &mut seen, 0.0, &mut best);
    best
}

#[test]
fn route_matches_exhaustive_search_on_grid() {
    let id = |i: usize, j: usize| (i * 4 + j) as i64 + 1;
    let mut nodes = Vec::new();
    for i in 0..4 {
        for j in 0..4 {
            nodes.push((id(i, j), j as f64 * 200.0, i as f64 * 200.0));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut segments = Vec::new();
    for i in 0..4 {
        for j in 0..4 {
            if j + 1 < 4 {
                segments.push([id(i, j), id(i, j + 1)]);
            }
            if i + 1 < 4 {
                segments.push([id(i, j), id(i + 1, j)]);
            }
        }
    }
    for trial in 0..20 {
        let limits: Vec<f64> = segments.iter().map(|_| rng.random_range(5.0..30.0)).collect();
        let ways: Vec<_> = segments.iter().zip(&limits).map(|(s, &l)| two_way(s, l)).collect();
        let g = build(&nodes, &ways);
        let (a, b) = (rng.random_range(1..=16), rng.random_range(1..=16));
        let route = plan_route(&g, a, b).unwrap();
        assert_eq!((route[0], *route.last().unwrap()), (a, b));
        let time: f64 = route
            .windows(2)
            .map(|w| {
                let l = g.link(g.link_between(g.node_index(w[0]).unwrap(), g.node_index(w[1]).unwrap()).unwrap());
                l.length_m / l.speed_limit_mps
            })
            .sum();
        let best = fastest_by_enumeration(&g, g.node_index(a).unwrap(), g.node_index(b).unwrap());
        assert!((time - best).abs() <= 1e-9 * best.max(1.0), "trial {trial}: {time} vs {best}");
    }
}

#[test]
fn route_follows_fast_arterial() {
    let id = |i: usize, j: usize| (i * 4 + j) as i64 + 1;
    let mut nodes = Vec::new();
    for i in 0..4 {
        for j in 0..4 {
            nodes.push((id(i, j), j as f64 * 200.0, i as f64 * 200.0));
        }
    }
    let rows: Vec<Vec<i64>> = (0..4).map(|i| (0..4).map(|j| id(i, j)).collect()).collect();
    let cols: Vec<Vec<i64>> = (0..4).map(|j| (0..4).map(|i| id(i, j)).collect()).collect();
    let mut ways: Vec<_> = cols.iter().map(|c| two_way(c, 5.0)).collect();
    for (i, r) in rows.iter().enumerate() {
        ways.push(two_way(r, if i == 1 { 25.0 } else { 5.0 }));
    }
    let g = build(&nodes, &ways);
    let route = plan_route(&g, id(0, 0), id(0, 3)).unwrap();
    assert_eq!(route, [id(0, 0), id(1, 0), id(1, 1), id(1, 2), id(1, 3), id(0, 3)]);
}
