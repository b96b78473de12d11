use crate::numcore::Tensor;

use super::{GraphError, RoadNetwork};

/// Shortest-path distances by Floyd-Warshall over `n` nodes.
///
/// Unreachable pairs hold `f64::INFINITY`. Edges are undirected; parallel
/// edges keep the shortest length.
pub fn floyd_warshall<I>(n: usize, edges: I) -> Result<Tensor, GraphError>
where
    I: IntoIterator<Item = (usize, usize, f64)>,
{
    let mut d = Tensor::filled(n, n, f64::INFINITY);
    for i in 0..n {
        d.set(i, i, 0.0);
    }
    for (u, v, len) in edges {
        if !(len >= 0.0) {
            return Err(GraphError::NegativeLength { u, v, length: len });
        }
        if u >= n || v >= n {
            return Err(GraphError::NodeOutOfRange { node: u.max(v), n });
        }
        if u != v && len < d.get(u, v) {
            d.set(u, v, len);
            d.set(v, u, len);
        }
    }
    for k in 0..n {
        for i in 0..n {
            let dik = d.get(i, k);
            if dik == f64::INFINITY {
                continue;
            }
            for j in 0..n {
                let via = dik + d.get(k, j);
                if via < d.get(i, j) {
                    d.set(i, j, via);
                }
            }
        }
    }
    Ok(d)
}

/// Edge length between adjacent roads: midpoint to midpoint.
pub fn edge_length(net: &RoadNetwork, a: usize, b: usize) -> f64 {
    (net.road(a).length_m + net.road(b).length_m) / 2.0
}

/// Distances among `nodes` (network indices) using only edges inside the set.
pub fn subgraph_distances(net: &RoadNetwork, nodes: &[usize]) -> Result<Tensor, GraphError> {
    let mut edges = Vec::new();
    for (i, &a) in nodes.iter().enumerate() {
        for (j, &b) in nodes.iter().enumerate().skip(i + 1) {
            if net.are_adjacent(a, b) {
                edges.push((i, j, edge_length(net, a, b)));
            }
        }
    }
    floyd_warshall(nodes.len(), edges)
}

/// 0/1 adjacency among `nodes` plus the identity.
pub fn adjacency_matrix(net: &RoadNetwork, nodes: &[usize]) -> Tensor {
    let n = nodes.len();
    let mut a = Tensor::identity(n);
    for (i, &u) in nodes.iter().enumerate() {
        for (j, &v) in nodes.iter().enumerate() {
            if i != j && net.are_adjacent(u, v) {
                a.set(i, j, 1.0);
            }
        }
    }
    a
}

/// Gaussian distance kernel `exp(-(d/σ)²)` plus the identity.
///
/// `σ` is the mean finite off-diagonal distance (1 when there is none);
/// unreachable pairs get weight 0.
pub fn distance_weight_matrix(d: &Tensor) -> Tensor {
    let n = d.rows();
    let (mut total, mut count) = (0.0, 0usize);
    for i in 0..n {
        for j in 0..n {
            let v = d.get(i, j);
            if i != j && v.is_finite() {
                total += v;
                count += 1;
            }
        }
    }
    let sigma = if count > 0 && total > 0.0 {
        total / count as f64
    } else {
        1.0
    };
    let mut w = Tensor::identity(n);
    for i in 0..n {
        for j in 0..n {
            let v = d.get(i, j);
            if i != j && v.is_finite() {
                let r = v / sigma;
                w.set(i, j, (-r * r).exp());
            }
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_takes_shorter_detour() {
        let d = floyd_warshall(3, [(0, 1, 1.0), (1, 2, 2.0), (0, 2, 4.0)]).unwrap();
        assert_eq!(d.get(0, 2), 3.0);
        assert_eq!(d.get(2, 0), 3.0);
    }

    #[test]
    fn single_node_and_disconnected() {
        assert_eq!(floyd_warshall(1, []).unwrap().data(), &[0.0]);
        let d = floyd_warshall(3, [(0, 1, 5.0)]).unwrap();
        assert_eq!(d.get(0, 2), f64::INFINITY);
        let w = distance_weight_matrix(&d);
        assert_eq!(w.get(0, 2), 0.0);
        assert_eq!(w.get(2, 2), 1.0);
        // σ = 5, so the only connected pair gets exp(-1)
        assert!((w.get(0, 1) - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn negative_length_rejected() {
        assert!(matches!(
            floyd_warshall(2, [(0, 1, -1.0)]),
            Err(GraphError::NegativeLength { .. })
        ));
    }

    #[test]
    fn kernel_cases() {
        let single = distance_weight_matrix(&Tensor::zeros(1, 1));
        assert_eq!(single.data(), &[1.0]);

        let two = Tensor::from_rows(&[[0.0, 7.0], [7.0, 0.0]]).unwrap();
        let w = distance_weight_matrix(&two);
        assert!((w.get(0, 1) - 0.36787944117144233).abs() < 1e-15);

        let tri = floyd_warshall(3, [(0, 1, 2.0), (1, 2, 2.0), (0, 2, 2.0)]).unwrap();
        let w = distance_weight_matrix(&tri);
        let off = w.get(0, 1);
        for (i, j) in [(0, 2), (1, 2), (1, 0), (2, 0), (2, 1)] {
            assert_eq!(w.get(i, j), off);
        }
        assert!(w.is_symmetric(0.0));
    }
}
