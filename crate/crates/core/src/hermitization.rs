//! Shifted matrices X − zI, Hermitian dilations and product linearizations.

use crate::{CMat, LabError, Result, C64, ZERO};

/// `[[0, X_z], [X_z*, 0]]`, stored densely.
#[derive(Debug, Clone)]
pub struct DilationMatrix {
    values: CMat,
    shift: C64,
    n: usize,
}

impl DilationMatrix {
    pub fn values(&self) -> &CMat {
        &self.values
    }

    pub fn shift(&self) -> C64 {
        self.shift
    }

    /// Dimension n of the source matrix; the dilation is 2n × 2n.
    pub fn source_dim(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    /// Records the shift that produced the source block.
    pub fn with_shift(mut self, z: C64) -> Self {
        self.shift = z;
        self
    }
}

/// Block-cyclic (n·m)×(n·m) matrix with X₂..X_m on the block superdiagonal
/// and X₁ in the bottom-left corner.
#[derive(Debug, Clone)]
pub struct LinearizationMatrix {
    values: CMat,
    block_size: usize,
    block_count: usize,
}

impl LinearizationMatrix {
    pub fn values(&self) -> &CMat {
        &self.values
    }

    pub fn into_values(self) -> CMat {
        self.values
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn block_count(&self) -> usize {
        self.block_count
    }
}

fn ensure_square(x: &CMat, what: &str) -> Result<usize> {
    if x.nrows() != x.ncols() {
        return Err(LabError::DimensionMismatch(format!(
            "{what} must be square, got {}x{}",
            x.nrows(),
            x.ncols()
        )));
    }
    Ok(x.nrows())
}

/// X − zI.
pub fn shift(x: &CMat, z: C64) -> Result<CMat> {
    let n = ensure_square(x, "shifted matrix")?;
    let mut out = x.clone();
    for i in 0..n {
        out[(i, i)] -= z;
    }
    Ok(out)
}

/// Hermitian dilation of a square matrix. Both blocks are written from the
/// same entries, so Hermiticity is exact.
pub fn dilate(xz: &CMat) -> Result<DilationMatrix> {
    let n = ensure_square(xz, "dilated matrix")?;
    let mut values = CMat::zeros(2 * n, 2 * n);
    for j in 0..n {
        for i in 0..n {
            let v = xz[(i, j)];
            values[(i, n + j)] = v;
            values[(n + j, i)] = v.conj();
        }
    }
    Ok(DilationMatrix {
        values,
        shift: ZERO,
        n,
    })
}

/// Dilation of X − zI.
pub fn dilate_shifted(x: &CMat, z: C64) -> Result<DilationMatrix> {
    Ok(dilate(&shift(x, z)?)?.with_shift(z))
}

/// Linearization ℒ of the product X₁X₂···X_m.
///
/// ℒ^m is block diagonal with cyclic products on the diagonal (the last
/// block is X₁X₂···X_m), so every eigenvalue λ of ℒ has λ^m in the spectrum
/// of the product.
pub fn linearize_product(blocks: &[CMat]) -> Result<LinearizationMatrix> {
    let m = blocks.len();
    if m == 0 {
        return Err(LabError::invalid_arg("linearization needs at least one block"));
    }
    let n = ensure_square(&blocks[0], "block X_1")?;
    for (k, b) in blocks.iter().enumerate() {
        if b.nrows() != n || b.ncols() != n {
            return Err(LabError::DimensionMismatch(format!(
                "block X_{} is {}x{}, expected {n}x{n}",
                k + 1,
                b.nrows(),
                b.ncols()
            )));
        }
    }
    let mut values = CMat::zeros(n * m, n * m);
    for row_block in 0..m {
        let col_block = (row_block + 1) % m;
        // X_{k+2} at (k, k+1) for k < m−1, X_1 at (m−1, 0)
        let src = &blocks[(row_block + 1) % m];
        for j in 0..n {
            for i in 0..n {
                values[(row_block * n + i, col_block * n + j)] = src[(i, j)];
            }
        }
    }
    Ok(LinearizationMatrix {
        values,
        block_size: n,
        block_count: m,
    })
}

/// Split a linearization back into X₁..X_m.
pub fn product_blocks(lin: &LinearizationMatrix) -> Vec<CMat> {
    let (n, m) = (lin.block_size, lin.block_count);
    let mut blocks = vec![CMat::zeros(n, n); m];
    for row_block in 0..m {
        let col_block = (row_block + 1) % m;
        let dst = &mut blocks[(row_block + 1) % m];
        for j in 0..n {
            for i in 0..n {
                dst[(i, j)] = lin.values[(row_block * n + i, col_block * n + j)];
            }
        }
    }
    blocks
}

/// Interpret a sampled (n·m)-square matrix as a linearization with `m` blocks.
pub fn as_linearization(values: CMat, block_count: usize) -> Result<LinearizationMatrix> {
    let dim = ensure_square(&values, "linearization")?;
    if block_count == 0 || dim % block_count != 0 {
        return Err(LabError::DimensionMismatch(format!(
            "{dim} is not a multiple of the block count {block_count}"
        )));
    }
    Ok(LinearizationMatrix {
        values,
        block_size: dim / block_count,
        block_count,
    })
}

/// Greedy nearest-neighbour pairing of two complex multisets.
///
/// Returns the largest distance used by the pairing, or `None` when the
/// lengths differ. Each element of `a` (in order) takes the closest unused
/// element of `b`.
pub fn multiset_match_distance(a: &[C64], b: &[C64]) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for x in a {
        let mut best: Option<(usize, f64)> = None;
        for (k, y) in b.iter().enumerate() {
            if used[k] {
                continue;
            }
            let d = (x - y).norm();
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((k, d));
            }
        }
        let (k, d) = best?;
        used[k] = true;
        worst = worst.max(d);
    }
    Some(worst)
}
