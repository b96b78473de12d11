use std::collections::VecDeque;

use super::{GraphError, RoadId, RoadNetwork};

/// Network indices within `k` hops of `center`, paired with their hop count.
///
/// Ordered by hop, then by road id, so the center always comes first.
pub fn khop_indices(net: &RoadNetwork, center: usize, k: usize) -> Vec<(usize, usize)> {
    let mut hops = vec![usize::MAX; net.len()];
    let mut queue = VecDeque::new();
    hops[center] = 0;
    queue.push_back(center);
    let mut found = vec![(center, 0)];
    while let Some(u) = queue.pop_front() {
        if hops[u] == k {
            continue;
        }
        for &v in net.neighbors(u) {
            if hops[v] == usize::MAX {
                hops[v] = hops[u] + 1;
                found.push((v, hops[v]));
                queue.push_back(v);
            }
        }
    }
    found.sort_by_key(|&(i, hop)| (hop, net.road(i).id));
    found
}

/// Roads within `k` adjacency steps of `center`, center first, then by
/// ascending hop and id.
pub fn khop_subgraph(net: &RoadNetwork, center: RoadId, k: usize) -> Result<Vec<RoadId>, GraphError> {
    if k == 0 {
        return Err(GraphError::InvalidHop(k));
    }
    let c = net.index_of(center)?;
    Ok(khop_indices(net, c, k)
        .into_iter()
        .map(|(i, _)| net.road(i).id)
        .collect())
}
