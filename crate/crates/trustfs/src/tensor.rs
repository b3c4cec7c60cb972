//! Dense third-order tensor primitives: Khatri-Rao products, mode-n
//! unfoldings, CP reconstruction, and weighted slice stacking.
//!
//! Unfoldings follow the Kolda-Bader convention: mode-m fibers become
//! columns, ordered with the smaller remaining mode index varying fastest.
//! Every solver formula in this crate is derived under this one convention.

use ndarray::Array2;

use crate::error::{Error, Result};

/// Dense third-order tensor of shape `n1 x n2 x n3`.
///
/// Values are stored with the first index fastest, i.e. entry `(i, j, k)`
/// lives at `i + n1 * (j + n2 * k)`. Frontal slice `k` is the `n1 x n2`
/// matrix over `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    dims: (usize, usize, usize),
    values: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(dims: (usize, usize, usize)) -> Self {
        assert!(
            dims.0 >= 1 && dims.1 >= 1 && dims.2 >= 1,
            "tensor dims must be >= 1, got {dims:?}"
        );
        Self {
            dims,
            values: vec![0.0; dims.0 * dims.1 * dims.2],
        }
    }

    pub fn from_values(dims: (usize, usize, usize), values: Vec<f64>) -> Result<Self> {
        if values.len() != dims.0 * dims.1 * dims.2 {
            return Err(Error::DimensionMismatch(format!(
                "tensor of dims {dims:?} needs {} values, got {}",
                dims.0 * dims.1 * dims.2,
                values.len()
            )));
        }
        Ok(Self { dims, values })
    }

    /// Stack frontal slices (the `Phi` operator): slice `k` becomes the
    /// `n1 x n2` face of a tensor with `n3 = slices.len()`.
    pub fn from_slices(slices: &[Array2<f64>]) -> Result<Self> {
        let n3 = slices.len();
        if n3 == 0 {
            return Err(Error::InvalidInput("cannot stack zero slices".into()));
        }
        let (n1, n2) = slices[0].dim();
        for (k, s) in slices.iter().enumerate() {
            if s.dim() != (n1, n2) {
                return Err(Error::DimensionMismatch(format!(
                    "slice {k} has shape {:?}, expected ({n1}, {n2})",
                    s.dim()
                )));
            }
        }
        let mut t = Self::zeros((n1, n2, n3));
        for (k, s) in slices.iter().enumerate() {
            for j in 0..n2 {
                for i in 0..n1 {
                    t.set(i, j, k, s[[i, j]]);
                }
            }
        }
        Ok(t)
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.dims
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[i + self.dims.0 * (j + self.dims.1 * k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        self.values[i + self.dims.0 * (j + self.dims.1 * k)] = v;
    }

    /// Frontal slice `k` as an owned `n1 x n2` matrix.
    pub fn slice(&self, k: usize) -> Array2<f64> {
        let (n1, n2, _) = self.dims;
        Array2::from_shape_fn((n1, n2), |(i, j)| self.get(i, j, k))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Column-wise Kronecker product of `a` (`n1 x r`) and `b` (`n2 x r`):
/// column `j` of the result is `a[., j] (x) b[., j]`, of length `n1 * n2`
/// with `b`'s index varying fastest.
pub fn khatri_rao(a: &Array2<f64>, b: &Array2<f64>) -> Result<Array2<f64>> {
    let (n1, ra) = a.dim();
    let (n2, rb) = b.dim();
    if ra != rb {
        return Err(Error::DimensionMismatch(format!(
            "khatri_rao column mismatch: {ra} vs {rb}"
        )));
    }
    let mut out = Array2::zeros((n1 * n2, ra));
    for t in 0..ra {
        for i in 0..n1 {
            let ai = a[[i, t]];
            for l in 0..n2 {
                out[[i * n2 + l, t]] = ai * b[[l, t]];
            }
        }
    }
    Ok(out)
}

/// Mode-n unfolding (matricization). Modes are 1-based.
///
/// Shapes: mode 1 -> `n1 x (n2 n3)`, mode 2 -> `n2 x (n1 n3)`,
/// mode 3 -> `n3 x (n1 n2)`. Columns are ordered with the smaller
/// remaining mode index varying fastest.
pub fn unfold(z: &Tensor3, mode: usize) -> Array2<f64> {
    let (n1, n2, n3) = z.dims();
    match mode {
        1 => Array2::from_shape_fn((n1, n2 * n3), |(i, col)| z.get(i, col % n2, col / n2)),
        2 => Array2::from_shape_fn((n2, n1 * n3), |(j, col)| z.get(col % n1, j, col / n1)),
        3 => Array2::from_shape_fn((n3, n1 * n2), |(k, col)| z.get(col % n1, col / n1, k)),
        _ => panic!("unfold mode must be 1, 2, or 3, got {mode}"),
    }
}

/// Inverse of [`unfold`] for the given target dims.
pub fn fold(m: &Array2<f64>, mode: usize, dims: (usize, usize, usize)) -> Result<Tensor3> {
    let (n1, n2, n3) = dims;
    let expected = match mode {
        1 => (n1, n2 * n3),
        2 => (n2, n1 * n3),
        3 => (n3, n1 * n2),
        _ => panic!("fold mode must be 1, 2, or 3, got {mode}"),
    };
    if m.dim() != expected {
        return Err(Error::DimensionMismatch(format!(
            "fold mode {mode}: matrix shape {:?} does not match dims {dims:?}",
            m.dim()
        )));
    }
    let mut t = Tensor3::zeros(dims);
    for k in 0..n3 {
        for j in 0..n2 {
            for i in 0..n1 {
                let v = match mode {
                    1 => m[[i, j + n2 * k]],
                    2 => m[[j, i + n1 * k]],
                    _ => m[[k, i + n1 * j]],
                };
                t.set(i, j, k, v);
            }
        }
    }
    Ok(t)
}

/// Reconstruct `Z[i,j,k] = sum_t A[i,t] H[j,t] P[k,t]` from CP factors.
pub fn cp_reconstruct(a: &Array2<f64>, h: &Array2<f64>, p: &Array2<f64>) -> Result<Tensor3> {
    let (n1, ra) = a.dim();
    let (n2, rh) = h.dim();
    let (n3, rp) = p.dim();
    if ra != rh || ra != rp {
        return Err(Error::DimensionMismatch(format!(
            "cp_reconstruct rank mismatch: A has {ra}, H has {rh}, P has {rp}"
        )));
    }
    let mut z = Tensor3::zeros((n1, n2, n3));
    for k in 0..n3 {
        for j in 0..n2 {
            for i in 0..n1 {
                let mut acc = 0.0;
                for t in 0..ra {
                    acc += a[[i, t]] * h[[j, t]] * p[[k, t]];
                }
                z.set(i, j, k, acc);
            }
        }
    }
    Ok(z)
}

/// Stack `V` equal-shape matrices into a tensor with frontal slice `v`
/// scaled by `omega[v]^(gamma/2)`.
pub fn stack_weighted(slices: &[Array2<f64>], omega: &[f64], gamma: f64) -> Result<Tensor3> {
    if slices.len() != omega.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} slices but {} weights",
            slices.len(),
            omega.len()
        )));
    }
    let sum: f64 = omega.iter().sum();
    if omega.iter().any(|&w| w < 0.0) || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!(
            "weights must be nonnegative and sum to 1, got sum {sum}"
        )));
    }
    let scaled: Vec<Array2<f64>> = slices
        .iter()
        .zip(omega)
        .map(|(z, &w)| z * w.powf(gamma / 2.0))
        .collect();
    Tensor3::from_slices(&scaled)
}
