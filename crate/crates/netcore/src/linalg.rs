//! The three dense kernels the engine is built on. All operands are
//! row-major slices; loops are arranged so the innermost walk is always
//! contiguous.

/// out[i][j] += dot(a[i,:], b[j,:]) for a: m×k, b: n×k ("B transposed" GEMM).
/// This is the forward product `activations · Wᵀ`.
pub fn matmul_nt(a: &[f64], m: usize, b: &[f64], n: usize, k: usize, out: &mut [f64]) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), n * k);
    debug_assert_eq!(out.len(), m * n);
    for i in 0..m {
        let ar = &a[i * k..(i + 1) * k];
        let or = &mut out[i * n..(i + 1) * n];
        for (j, o) in or.iter_mut().enumerate() {
            let br = &b[j * k..(j + 1) * k];
            let mut acc = 0.0;
            for (x, y) in ar.iter().zip(br) {
                acc += x * y;
            }
            *o += acc;
        }
    }
}

/// out[i][j] += Σ_l a[i][l] · b[l][j] for a: m×k, b: k×n (plain GEMM).
/// This is the input-gradient product `dZ · W`.
pub fn matmul_nn(a: &[f64], m: usize, b: &[f64], k: usize, n: usize, out: &mut [f64]) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(out.len(), m * n);
    for i in 0..m {
        let ar = &a[i * k..(i + 1) * k];
        let or = &mut out[i * n..(i + 1) * n];
        for (l, &al) in ar.iter().enumerate() {
            if al == 0.0 {
                continue;
            }
            let br = &b[l * n..(l + 1) * n];
            for (o, &bv) in or.iter_mut().zip(br) {
                *o += al * bv;
            }
        }
    }
}

/// dw[o][i] += Σ_b dz[b][o] · act[b][i] for dz: m×n_out, act: m×n_in.
/// This is the weight-gradient outer-product accumulation.
pub fn accum_outer(dz: &[f64], act: &[f64], m: usize, n_out: usize, n_in: usize, dw: &mut [f64]) {
    debug_assert_eq!(dz.len(), m * n_out);
    debug_assert_eq!(act.len(), m * n_in);
    debug_assert_eq!(dw.len(), n_out * n_in);
    for b in 0..m {
        let dzr = &dz[b * n_out..(b + 1) * n_out];
        let ar = &act[b * n_in..(b + 1) * n_in];
        for (o, &g) in dzr.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            let dwr = &mut dw[o * n_in..(o + 1) * n_in];
            for (w, &x) in dwr.iter_mut().zip(ar) {
                *w += g * x;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernels_agree_with_naive_products() {
        // a: 2×3, b(nt): 4×3, b(nn): 3×4
        let a = [1.0, 2.0, 3.0, -1.0, 0.5, 2.0];
        let bt = [
            1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0,
        ];
        let mut out = vec![0.0; 2 * 4];
        matmul_nt(&a, 2, &bt, 4, 3, &mut out);
        assert_eq!(out, vec![1.0, 2.0, 3.0, 6.0, -1.0, 0.5, 2.0, 1.5]);

        let b = [
            1.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0,
        ];
        let mut out2 = vec![0.0; 2 * 4];
        matmul_nn(&a, 2, &b, 3, 4, &mut out2);
        assert_eq!(out2, out);

        // dw = dzᵀ · act with dz: 2×2, act: 2×3
        let dz = [1.0, 0.0, 0.0, 2.0];
        let act = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let mut dw = vec![0.0; 2 * 3];
        accum_outer(&dz, &act, 2, 2, 3, &mut dw);
        assert_eq!(dw, vec![1.0, 2.0, 3.0, 8.0, 10.0, 12.0]);
    }
}
