use crate::error::{Error, Result};

/// Output of the MDL detector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MdlRank {
    pub rank: usize,
    /// Set when every input value was zero; `rank` is then 1.
    pub degenerate: bool,
}

// Values below this fraction of the largest one are lifted to it, so exact
// zeros do not make the log-likelihood term infinite.
const RELATIVE_FLOOR: f64 = 1e-15;

/// Wax-Kailath minimum description length rank detector.
///
/// Treats `values` as eigenvalue estimates from `effective_samples`
/// snapshots and returns the `k` in `1..values.len()` minimizing
///
/// ```text
/// MDL(k) = -N (p - k) ln( geo_mean(tail_k) / arith_mean(tail_k) )
///          + k (2p - k) ln(N) / 2
/// ```
///
/// where `tail_k` are the `p - k` smallest values.
pub fn mdl_rank(values: &[f64], effective_samples: f64) -> Result<MdlRank> {
    let p = values.len();
    if p < 2 {
        return Err(Error::InvalidConfig(format!(
            "MDL needs at least 2 values, got {p}"
        )));
    }
    if !(effective_samples > 1.0 && effective_samples.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "MDL needs more than one snapshot, got {effective_samples}"
        )));
    }
    if values.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
        return Err(Error::InvalidConfig(
            "MDL values must be finite and >= 0".into(),
        ));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let top = sorted[0];
    if top == 0.0 {
        return Ok(MdlRank {
            rank: 1,
            degenerate: true,
        });
    }
    let floor = top * RELATIVE_FLOOR;
    for v in sorted.iter_mut() {
        *v = v.max(floor);
    }

    let n = effective_samples;
    let ln_n = n.ln();
    // suffix sums of v and ln v
    let mut sum = vec![0.0; p + 1];
    let mut sum_ln = vec![0.0; p + 1];
    for i in (0..p).rev() {
        sum[i] = sum[i + 1] + sorted[i];
        sum_ln[i] = sum_ln[i + 1] + sorted[i].ln();
    }
    let mut best = (f64::INFINITY, 1);
    for k in 1..p {
        let m = (p - k) as f64;
        let ln_geo = sum_ln[k] / m;
        let ln_arith = (sum[k] / m).ln();
        let crit = -n * m * (ln_geo - ln_arith) + 0.5 * (k * (2 * p - k)) as f64 * ln_n;
        if crit < best.0 {
            best = (crit, k);
        }
    }
    Ok(MdlRank {
        rank: best.1.max(1),
        degenerate: false,
    })
}
