use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scores closer than this are treated as tied.
pub const TIE_TOL: f64 = 1e-12;

/// Admissible sets beyond this count are counted but not listed.
pub const MAX_LISTED_SETS: usize = 1000;

/// The admissible top-`m` sets of a score vector (0-based node indices).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopMSelection {
    pub m: usize,
    /// Admissible sets, each sorted ascending; at most [`MAX_LISTED_SETS`].
    pub sets: Vec<Vec<usize>>,
    /// Total number of admissible sets (saturating).
    pub set_count: u128,
    /// `x_(m) − x_(m+1)`; defined only when the top-`m` set is unique.
    pub margin: Option<f64>,
}

impl TopMSelection {
    pub fn is_unique(&self) -> bool {
        self.set_count == 1
    }

    pub fn unique_set(&self) -> Option<&[usize]> {
        self.is_unique().then(|| self.sets[0].as_slice())
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

fn combinations(pool: &[usize], choose: usize, limit: usize) -> Vec<Vec<usize>> {
    let len = pool.len();
    let mut out = Vec::new();
    if choose > len {
        return out;
    }
    let mut idx: Vec<usize> = (0..choose).collect();
    loop {
        out.push(idx.iter().map(|&i| pool[i]).collect());
        if out.len() >= limit {
            return out;
        }
        let Some(i) = (0..choose).rev().find(|&i| idx[i] != i + len - choose) else {
            return out;
        };
        idx[i] += 1;
        for j in (i + 1)..choose {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Enumerates the sets of `m` largest scores. A set is unique exactly when no
/// score outside it lies within [`TIE_TOL`] of the `m`-th largest.
pub fn top_m_selection(x: &[f64], m: usize) -> Result<TopMSelection> {
    let n = x.len();
    if m == 0 || m >= n {
        return Err(Error::InvalidInput(format!("selection size {m} must be in 1..={}", n.saturating_sub(1))));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("scores must be finite".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[b].total_cmp(&x[a]).then(a.cmp(&b)));
    let threshold = x[order[m - 1]];

    let above: Vec<usize> = (0..n).filter(|&i| x[i] > threshold + TIE_TOL).collect();
    let tied: Vec<usize> = (0..n).filter(|&i| (x[i] - threshold).abs() <= TIE_TOL).collect();
    let need = m - above.len();
    let set_count = binomial(tied.len(), need);

    let sets = combinations(&tied, need, MAX_LISTED_SETS)
        .into_iter()
        .map(|chosen| {
            let mut s: Vec<usize> = above.iter().copied().chain(chosen).collect();
            s.sort_unstable();
            s
        })
        .collect();
    let margin = (set_count == 1).then(|| threshold - x[order[m]]);
    Ok(TopMSelection { m, sets, set_count, margin })
}

/// Outcome of the margin test `Γ̂_m > 2Lq`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityCertificate {
    pub m: usize,
    pub observed_margin: Option<f64>,
    pub threshold: f64,
    pub certified: bool,
    pub selected_set: Option<Vec<usize>>,
}

pub fn stability_certificate(x_hat: &[f64], m: usize, l: f64, q: f64) -> Result<StabilityCertificate> {
    if !(l >= 0.0) || !(q >= 0.0) {
        return Err(Error::InvalidInput(format!("modulus {l} and deviation bound {q} must be ≥ 0")));
    }
    let sel = top_m_selection(x_hat, m)?;
    let threshold = 2.0 * l * q;
    let certified = sel.margin.is_some_and(|g| g > threshold);
    Ok(StabilityCertificate {
        m,
        observed_margin: sel.margin,
        threshold,
        certified,
        selected_set: sel.unique_set().map(<[usize]>::to_vec),
    })
}
