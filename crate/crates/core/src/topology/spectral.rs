//! Laplacian spectrum of an undirected graph via cyclic Jacobi rotations.

use crate::scalar::Scalar;

use super::AdjacencyMatrix;

/// Absolute tolerance below which a Laplacian eigenvalue counts as zero.
pub const ZERO_EIGENVALUE_TOL: f64 = 1e-8;

/// Combinatorial Laplacian `L = D - A`, dense row-major.
pub fn laplacian<T: Scalar>(adj: &AdjacencyMatrix) -> Vec<Vec<T>> {
    let n = adj.len();
    let mut l = vec![vec![T::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j && adj.has_edge(i, j) {
                l[i][j] = -T::one();
                l[i][i] = l[i][i] + T::one();
            }
        }
    }
    l
}

/// All eigenvalues of a symmetric matrix, ascending. Cyclic Jacobi sweeps
/// run until the off-diagonal Frobenius norm drops below `tol`.
pub fn symmetric_eigenvalues<T: Scalar>(mut a: Vec<Vec<T>>, tol: T) -> Vec<T> {
    let n = a.len();
    let two = T::lit(2.0);
    for _sweep in 0..100 {
        let off: T = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off.sqrt() < tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p][q];
                if apq == T::zero() {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (two * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<T> = (0..n).map(|i| a[i][i]).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
    eig
}

/// Second-smallest Laplacian eigenvalue (algebraic connectivity).
pub fn algebraic_connectivity<T: Scalar>(adj: &AdjacencyMatrix) -> T {
    if adj.len() < 2 {
        return T::zero();
    }
    let tol = T::lit(ZERO_EIGENVALUE_TOL * 1e-3);
    symmetric_eigenvalues(laplacian::<T>(adj), tol)[1]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_graph_spectrum() {
        let mut adj = AdjacencyMatrix::empty(4);
        for i in 0..3 {
            adj.set_edge(i, i + 1, true);
        }
        let eig = symmetric_eigenvalues(laplacian::<f64>(&adj), 1e-14);
        // path P_n: 2 - 2 cos(k pi / n)
        for (k, lambda) in eig.iter().enumerate() {
            let expected = 2.0 - 2.0 * (k as f64 * std::f64::consts::PI / 4.0).cos();
            assert!((lambda - expected).abs() < 1e-10, "k={k}: {lambda} vs {expected}");
        }
    }

    #[test]
    fn eigenvalues_sum_to_trace() {
        let a = vec![vec![4.0, 1.0, 2.0], vec![1.0, 3.0, 0.5], vec![2.0, 0.5, 1.0]];
        let eig = symmetric_eigenvalues(a, 1e-14);
        let sum: f64 = eig.iter().sum();
        assert!((sum - 8.0).abs() < 1e-12);
    }
}
