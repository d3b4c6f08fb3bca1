use nalgebra::DMatrix;
use num_complex::Complex64;

/// Thin Householder QR of a tall `m x n` matrix.
///
/// Returns `Q` (`m x n`, orthonormal columns) and the diagonal of `R`, with
/// the convention that every diagonal entry is real and non-negative (the
/// phase is pushed into the matching column of `Q`). A column that is
/// already zero below the diagonal produces an identity reflector.
pub fn thin_qr(a: &DMatrix<Complex64>) -> (DMatrix<Complex64>, Vec<f64>) {
    let (m, n) = a.shape();
    assert!(n <= m, "thin QR needs a tall matrix");
    let mut r = a.clone();
    // Householder vectors, each normalized to unit length (or empty).
    let mut reflectors: Vec<Option<Vec<Complex64>>> = Vec::with_capacity(n);
    let mut diag = Vec::with_capacity(n);

    for k in 0..n {
        let norm_x = (k..m).map(|i| r[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if norm_x == 0.0 {
            reflectors.push(None);
            diag.push(Complex64::new(0.0, 0.0));
            continue;
        }
        let x0 = r[(k, k)];
        let phase = if x0.norm() > 0.0 {
            x0 / x0.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        // alpha = -phase * |x|  avoids cancellation in v0 = x0 - alpha
        let alpha = -phase * norm_x;
        let mut v: Vec<Complex64> = (k..m).map(|i| r[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            reflectors.push(None);
            diag.push(x0);
            continue;
        }
        for c in v.iter_mut() {
            *c /= vnorm;
        }
        // R <- (I - 2 v v^H) R on rows k.., columns k..
        for j in k..n {
            let dot: Complex64 = v
                .iter()
                .enumerate()
                .map(|(i, vi)| vi.conj() * r[(k + i, j)])
                .sum();
            let s = dot * 2.0;
            for (i, vi) in v.iter().enumerate() {
                r[(k + i, j)] -= vi * s;
            }
        }
        diag.push(r[(k, k)]);
        reflectors.push(Some(v));
    }

    // Q = H_0 H_1 ... H_{n-1} [I_n; 0]
    let mut q = DMatrix::<Complex64>::identity(m, n);
    for k in (0..n).rev() {
        if let Some(v) = &reflectors[k] {
            for j in 0..n {
                let dot: Complex64 = v
                    .iter()
                    .enumerate()
                    .map(|(i, vi)| vi.conj() * q[(k + i, j)])
                    .sum();
                let s = dot * 2.0;
                for (i, vi) in v.iter().enumerate() {
                    q[(k + i, j)] -= vi * s;
                }
            }
        }
    }

    let mut rdiag = Vec::with_capacity(n);
    for (k, d) in diag.into_iter().enumerate() {
        let mag = d.norm();
        if mag > 0.0 {
            let ph = d / mag;
            for i in 0..m {
                q[(i, k)] *= ph;
            }
        }
        rdiag.push(mag);
    }
    (q, rdiag)
}
