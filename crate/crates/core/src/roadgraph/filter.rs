use crate::numcore::Tensor;

use super::GraphError;

/// Symmetric degree normalization `D^{-1/2} A D^{-1/2}`, `D = diag(row sums)`.
pub fn gcn_filter(a: &Tensor) -> Result<Tensor, GraphError> {
    let n = a.rows();
    if a.cols() != n {
        return Err(GraphError::NotSquare(a.rows(), a.cols()));
    }
    let mut degrees = Vec::with_capacity(n);
    for i in 0..n {
        let row = a.row(i);
        if let Some(v) = row.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(GraphError::InvalidWeight { row: i, value: *v });
        }
        let degree: f64 = row.iter().sum();
        if degree <= 0.0 {
            return Err(GraphError::DegenerateGraph { row: i });
        }
        degrees.push(degree);
    }
    let mut out = Tensor::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            // d_i * d_j is commutative, so symmetric A gives a bit-symmetric result
            out.set(i, j, a.get(i, j) / (degrees[i] * degrees[j]).sqrt());
        }
    }
    Ok(out)
}

/// `I - D^{-1/2} A D^{-1/2}`.
pub fn normalized_laplacian(a: &Tensor) -> Result<Tensor, GraphError> {
    let mut l = gcn_filter(a)?;
    for v in l.data_mut() {
        *v = -*v;
    }
    for i in 0..a.rows() {
        l.set(i, i, 1.0 + l.get(i, i));
    }
    Ok(l)
}
