//! Two-component PCA by power iteration with deflation, for projecting edge
//! embeddings to the plane.
//!
//! The covariance of the mean-centered rows is iterated to convergence
//! (tolerance 1e-9 on the direction change, at most 1000 iterations per
//! component); the second component comes from deflating the first. Each
//! component's sign is fixed by making its largest-magnitude loading
//! positive, so output is deterministic.

use alloc::{vec, vec::Vec};

use crate::tensor::Tensor;

const TOLERANCE: f64 = 1e-9;
const MAX_ITERATIONS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PcaError {
    /// Projection to 2 components needs at least 2 embedding dimensions.
    TooFewDimensions(usize),
    NoRows,
}

impl core::fmt::Display for PcaError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            PcaError::TooFewDimensions(d) => {
                write!(f, "pca2 needs ≥ 2 embedding dimensions, got {d}")
            }
            PcaError::NoRows => write!(f, "pca2 on an empty embedding matrix"),
        }
    }
}

impl core::error::Error for PcaError {}

#[derive(Debug, Clone)]
pub struct Pca2 {
    /// `[n × 2]` projected coordinates.
    pub coordinates: Tensor,
    /// The two principal directions, rows of a `[2 × d]` matrix.
    pub components: Tensor,
    /// Variance captured by each component.
    pub explained_variance: [f64; 2],
}

/// Project the rows of `data` (`[n × d]`, d ≥ 2) onto their top two
/// principal components.
pub fn pca2(data: &Tensor) -> Result<Pca2, PcaError> {
    assert_eq!(data.shape().len(), 2, "pca2 input must be 2-D");
    let (n, d) = (data.shape()[0], data.shape()[1]);
    if d < 2 {
        return Err(PcaError::TooFewDimensions(d));
    }
    if n == 0 {
        return Err(PcaError::NoRows);
    }

    let mut means = vec![0.0f64; d];
    for i in 0..n {
        for (j, m) in means.iter_mut().enumerate() {
            *m += data.at(i, j);
        }
    }
    for m in &mut means {
        *m /= n as f64;
    }
    let mut centered = Tensor::zeros(&[n, d]);
    for i in 0..n {
        for j in 0..d {
            centered.set(i, j, data.at(i, j) - means[j]);
        }
    }

    // covariance C = Xᵀ X / n
    let mut cov = vec![0.0f64; d * d];
    for i in 0..n {
        let row = centered.row(i);
        for a in 0..d {
            let ra = row[a];
            if ra == 0.0 {
                continue;
            }
            for b in 0..d {
                cov[a * d + b] += ra * row[b];
            }
        }
    }
    for c in &mut cov {
        *c /= n as f64;
    }

    let (v1, lambda1) = power_iterate(&cov, d, None);
    // deflate: C ← C − λ v vᵀ
    for a in 0..d {
        for b in 0..d {
            cov[a * d + b] -= lambda1 * v1[a] * v1[b];
        }
    }
    let (v2, lambda2) = power_iterate(&cov, d, Some(&v1));

    let mut coordinates = Tensor::zeros(&[n, 2]);
    for i in 0..n {
        let row = centered.row(i);
        let mut x = 0.0;
        let mut y = 0.0;
        for j in 0..d {
            x += row[j] * v1[j];
            y += row[j] * v2[j];
        }
        coordinates.set(i, 0, x);
        coordinates.set(i, 1, y);
    }
    let mut components = Tensor::zeros(&[2, d]);
    for j in 0..d {
        components.set(0, j, v1[j]);
        components.set(1, j, v2[j]);
    }
    Ok(Pca2 {
        coordinates,
        components,
        explained_variance: [lambda1, lambda2],
    })
}

/// Dominant eigenvector/-value of the symmetric matrix `m` (d×d). When
/// `orthogonal_to` is given, iteration is confined to its complement so
/// rounding cannot reintroduce the deflated direction.
fn power_iterate(m: &[f64], d: usize, orthogonal_to: Option<&[f64]>) -> (Vec<f64>, f64) {
    // deterministic start from the fixed stream (0x9e3779b9, "pca-init")
    let mut rng = crate::rng::StreamRng::new(0x9e37_79b9, "pca-init");
    let mut v: Vec<f64> = (0..d).map(|_| rng.uniform(-1.0, 1.0)).collect();
    project_out(&mut v, orthogonal_to);
    normalize(&mut v);

    let mut next = vec![0.0f64; d];
    for _ in 0..MAX_ITERATIONS {
        for a in 0..d {
            let mut acc = 0.0;
            for b in 0..d {
                acc += m[a * d + b] * v[b];
            }
            next[a] = acc;
        }
        project_out(&mut next, orthogonal_to);
        let norm = l2(&next);
        if norm < 1e-300 {
            // (near-)zero matrix: any direction is an eigenvector of λ≈0
            break;
        }
        for x in &mut next {
            *x /= norm;
        }
        let mut delta = 0.0f64;
        for j in 0..d {
            // eigenvectors are sign-ambiguous; compare up to sign
            let diff = (next[j] - v[j]).abs().min((next[j] + v[j]).abs());
            delta = delta.max(diff);
        }
        v.copy_from_slice(&next);
        if delta < TOLERANCE {
            break;
        }
    }

    fix_sign(&mut v);
    // Rayleigh quotient for the eigenvalue
    let mut mv = vec![0.0f64; d];
    for a in 0..d {
        for b in 0..d {
            mv[a] += m[a * d + b] * v[b];
        }
    }
    let lambda: f64 = v.iter().zip(&mv).map(|(a, b)| a * b).sum();
    (v, lambda)
}

fn project_out(v: &mut [f64], basis: Option<&[f64]>) {
    if let Some(u) = basis {
        let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
        for (x, &b) in v.iter_mut().zip(u) {
            *x -= dot * b;
        }
    }
}

fn l2(v: &[f64]) -> f64 {
    libm::sqrt(v.iter().map(|x| x * x).sum())
}

fn normalize(v: &mut [f64]) {
    let n = l2(v);
    if n > 0.0 {
        for x in v {
            *x /= n;
        }
    }
}

/// Make the largest-magnitude loading positive (first such index on ties).
fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (j, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = j;
        }
    }
    if v[best] < 0.0 {
        for x in v {
            *x = -*x;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamRng;

    #[test]
    fn axis_aligned_anisotropic_cloud_recovers_axes() {
        // mirror-symmetric points on the axes: the sample covariance is
        // exactly diagonal (spread 10 along x, 1 along y), so the components
        // are the axes themselves
        let m = 50;
        let mut data = Tensor::zeros(&[4 * m, 4]);
        for i in 0..m {
            let t = (i + 1) as f64 / m as f64;
            data.set(4 * i, 0, 10.0 * t);
            data.set(4 * i + 1, 0, -10.0 * t);
            data.set(4 * i + 2, 1, t);
            data.set(4 * i + 3, 1, -t);
        }
        let out = pca2(&data).unwrap();
        assert!((out.components.at(0, 0).abs() - 1.0).abs() < 1e-6);
        assert!(out.components.at(0, 1).abs() < 1e-6);
        assert!((out.components.at(1, 1).abs() - 1.0).abs() < 1e-6);
        // sign convention: dominant loading positive
        assert!(out.components.at(0, 0) > 0.0);
        assert!(out.components.at(1, 1) > 0.0);
        assert!(out.explained_variance[0] > out.explained_variance[1]);
    }

    #[test]
    fn collinear_points_put_all_variance_on_component_one() {
        let n = 50;
        let mut data = Tensor::zeros(&[n, 3]);
        for i in 0..n {
            let t = i as f64 / n as f64;
            data.set(i, 0, 3.0 * t);
            data.set(i, 1, -2.0 * t);
            data.set(i, 2, 0.5 * t);
        }
        let out = pca2(&data).unwrap();
        assert!(out.explained_variance[0] > 0.1);
        assert!(out.explained_variance[1].abs() < 1e-9);
        // second coordinates are ≈ 0 for every point
        for i in 0..n {
            assert!(out.coordinates.at(i, 1).abs() < 1e-6);
        }
    }

    #[test]
    fn too_few_dimensions_is_an_error() {
        let data = Tensor::from_rows(&[vec![1.0], vec![2.0]]);
        assert!(matches!(pca2(&data), Err(PcaError::TooFewDimensions(1))));
    }

    #[test]
    fn deterministic_across_calls() {
        let mut rng = StreamRng::new(8, "pca-det");
        let data = Tensor::new(&[30, 5], (0..150).map(|_| rng.uniform(-2.0, 2.0)).collect());
        let a = pca2(&data).unwrap();
        let b = pca2(&data).unwrap();
        assert_eq!(a.coordinates, b.coordinates);
    }
}
