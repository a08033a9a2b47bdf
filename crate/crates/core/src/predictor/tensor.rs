//! Row-major dense kernels used by the forward and backward passes.

/// `out = a * b` with `a: rows x inner`, `b: inner x cols`.
pub fn matmul(a: &[f64], b: &[f64], rows: usize, inner: usize, cols: usize, out: &mut [f64]) {
    debug_assert_eq!(a.len(), rows * inner);
    debug_assert_eq!(b.len(), inner * cols);
    debug_assert_eq!(out.len(), rows * cols);
    out.fill(0.0);
    for i in 0..rows {
        let o = &mut out[i * cols..(i + 1) * cols];
        for (k, &aik) in a[i * inner..(i + 1) * inner].iter().enumerate() {
            if aik == 0.0 {
                continue;
            }
            let brow = &b[k * cols..(k + 1) * cols];
            for (x, &y) in o.iter_mut().zip(brow) {
                *x += aik * y;
            }
        }
    }
}

/// `out += a^T * b` with `a: rows x m`, `b: rows x cols`, `out: m x cols`.
pub fn add_at_b(a: &[f64], b: &[f64], rows: usize, m: usize, cols: usize, out: &mut [f64]) {
    debug_assert_eq!(out.len(), m * cols);
    for r in 0..rows {
        let brow = &b[r * cols..(r + 1) * cols];
        for (i, &ari) in a[r * m..(r + 1) * m].iter().enumerate() {
            if ari == 0.0 {
                continue;
            }
            let o = &mut out[i * cols..(i + 1) * cols];
            for (x, &y) in o.iter_mut().zip(brow) {
                *x += ari * y;
            }
        }
    }
}

/// `out = a * b^T` with `a: rows x inner`, `b: cols x inner`.
pub fn matmul_bt(a: &[f64], b: &[f64], rows: usize, inner: usize, cols: usize, out: &mut [f64]) {
    debug_assert_eq!(out.len(), rows * cols);
    for i in 0..rows {
        let arow = &a[i * inner..(i + 1) * inner];
        for j in 0..cols {
            let brow = &b[j * inner..(j + 1) * inner];
            out[i * cols + j] = arow.iter().zip(brow).map(|(x, y)| x * y).sum();
        }
    }
}
