mod common;

use common::{build, Way};
use mapdr_core::graph::Oneway;
use mapdr_core::motion::{advance, SplitCounter};
use mapdr_core::{LinkId, PathState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// 200 scattered nodes, each joined to a few near neighbours; a fifth of
/// the ways are one-way so dead ends and sinks occur.
fn random_graph(seed: u64) -> mapdr_core::RoadGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes: Vec<(i64, f64, f64)> = (0..200)
        .map(|i| (i + 1, rng.random_range(0.0..3000.0), rng.random_range(0.0..3000.0)))
        .collect();
    let mut pairs = Vec::new();
    for (i, a) in nodes.iter().enumerate() {
        let mut near: Vec<(f64, usize)> = nodes
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(j, b)| ((a.1 - b.1).hypot(a.2 - b.2), j))
            .collect();
        near.sort_by(|x, y| x.0.total_cmp(&y.0));
        for &(_, j) in near.iter().take(rng.random_range(1..=3)) {
            let (lo, hi) = (i.min(j), i.max(j));
            if !pairs.iter().any(|&(x, y, _)| (x, y) == (nodes[lo].0, nodes[hi].0)) {
                let oneway = if rng.random_bool(0.2) { Oneway::Forward } else { Oneway::No };
                pairs.push((nodes[lo].0, nodes[hi].0, oneway));
            }
        }
    }
    let refs: Vec<[i64; 2]> = pairs.iter().map(|&(a, b, _)| [a, b]).collect();
    let ways: Vec<Way> = refs
        .iter()
        .zip(&pairs)
        .map(|(r, p)| Way {
            refs: r,
            limit: 13.9,
            oneway: p.2,
        })
        .collect();
    build(&nodes, &ways)
}

#[test]
fn outcome_mass_plus_lost_mass_is_one() {
    let g = random_graph(5);
    assert!(g.nodes().len() >= 190);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut splits = SplitCounter::new();
    let (mut with_loss, mut with_splits) = (0, 0);
    for _ in 0..1000 {
        let link = LinkId(rng.random_range(0..g.links().len() as u32));
        let state = PathState::new(link, rng.random_range(0.0..1.0));
        let distance = rng.random_range(0.0..400.0);
        let adv = advance(&g, state, distance, &mut splits);
        let total: f64 = adv.outcomes.iter().map(|o| o.prob_factor).sum::<f64>() + adv.lost_mass();
        assert!((total - 1.0).abs() <= 1e-12, "{total}");
        for o in &adv.outcomes {
            assert!((o.travelled_m - distance).abs() <= 1e-9 * distance.max(1.0));
            assert!(o.prob_factor <= 0.5f64.powi(o.lineage.len() as i32) + 1e-15);
        }
        with_loss += (adv.lost_mass() > 0.0) as usize;
        with_splits += adv.outcomes.iter().any(|o| !o.lineage.is_empty()) as usize;
    }
    assert!(with_loss > 10 && with_splits > 100, "{with_loss} {with_splits}");
}
