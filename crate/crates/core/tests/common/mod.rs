//! Independent reference implementations. Nothing here calls the library's
//! solvers; the point is to disagree with them if they are wrong.

#![allow(dead_code)]

/// Weighted isotonic least squares by exhaustive search over contiguous
/// partitions: every admissible partition with nondecreasing block means is
/// scored and the cheapest wins.
pub fn isotonic_brute_force(values: &[f64], weights: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1 << (n - 1)) {
        // bit j set = a block boundary after position j
        let mut fitted = Vec::with_capacity(n);
        let mut start = 0;
        let mut prev_mean = f64::NEG_INFINITY;
        let mut ok = true;
        for end in 1..=n {
            if end == n || mask & (1 << (end - 1)) != 0 {
                let w: f64 = weights[start..end].iter().sum();
                let s: f64 = values[start..end]
                    .iter()
                    .zip(&weights[start..end])
                    .map(|(v, w)| v * w)
                    .sum();
                let mean = s / w;
                if mean < prev_mean - 1e-12 {
                    ok = false;
                    break;
                }
                prev_mean = mean;
                fitted.extend(std::iter::repeat_n(mean, end - start));
                start = end;
            }
        }
        if !ok {
            continue;
        }
        let cost: f64 = fitted
            .iter()
            .zip(values)
            .zip(weights)
            .map(|((f, v), w)| w * (f - v) * (f - v))
            .sum();
        if best.as_ref().is_none_or(|(c, _)| cost < *c - 1e-15) {
            best = Some((cost, fitted));
        }
    }
    best.expect("the all-pooled partition is always admissible").1
}

/// Inductive Venn-Abers pair from first principles: group the augmented
/// calibration set by distinct score, fit by brute force, read the group of
/// the test score.
pub fn ivap_oracle(cal_scores: &[f64], cal_labels: &[u8], test: f64) -> (f64, f64) {
    let fit_with = |label: u8| {
        let mut pts: Vec<(f64, f64)> = cal_scores
            .iter()
            .zip(cal_labels)
            .map(|(&s, &l)| (s, f64::from(l)))
            .collect();
        pts.push((test, f64::from(label)));
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut keys: Vec<f64> = Vec::new();
        let mut sums: Vec<f64> = Vec::new();
        let mut counts: Vec<f64> = Vec::new();
        for (s, l) in pts {
            if keys.last() == Some(&s) {
                *sums.last_mut().unwrap() += l;
                *counts.last_mut().unwrap() += 1.0;
            } else {
                keys.push(s);
                sums.push(l);
                counts.push(1.0);
            }
        }
        let means: Vec<f64> = sums.iter().zip(&counts).map(|(s, c)| s / c).collect();
        let fitted = isotonic_brute_force(&means, &counts);
        fitted[keys.iter().position(|&k| k == test).unwrap()]
    };
    (fit_with(0), fit_with(1))
}

/// KS distance evaluating both ECDFs at every observed point.
pub fn ks_oracle(a: &[f64], b: &[f64]) -> f64 {
    let ecdf = |s: &[f64], x: f64| s.iter().filter(|&&v| v <= x).count() as f64 / s.len() as f64;
    a.iter()
        .chain(b)
        .map(|&x| (ecdf(a, x) - ecdf(b, x)).abs())
        .fold(0.0, f64::max)
}

/// Mean ranks by counting, then the Pearson formula on the ranks.
pub fn spearman_oracle(x: &[f64], y: &[f64]) -> f64 {
    let ranks = |v: &[f64]| -> Vec<f64> {
        v.iter()
            .map(|&a| {
                let less = v.iter().filter(|&&b| b < a).count() as f64;
                let equal = v.iter().filter(|&&b| b == a).count() as f64;
                less + (equal + 1.0) / 2.0
            })
            .collect()
    };
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

/// Ridge by plain gradient descent on `mean sq error + penalty/n * |w|^2`
/// (scaled so the minimizer matches the unscaled objective).
pub fn ridge_gd_oracle(rows: &[Vec<f64>], y: &[f64], penalty: f64, iters: usize, step: f64) -> (Vec<f64>, f64) {
    let n = rows.len() as f64;
    let d = rows[0].len();
    let (mut w, mut b) = (vec![0.0; d], 0.0);
    for _ in 0..iters {
        let mut gw = vec![0.0; d];
        let mut gb = 0.0;
        for (r, &t) in rows.iter().zip(y) {
            let e = r.iter().zip(&w).map(|(a, c)| a * c).sum::<f64>() + b - t;
            for j in 0..d {
                gw[j] += 2.0 * e * r[j] / n;
            }
            gb += 2.0 * e / n;
        }
        for j in 0..d {
            w[j] -= step * (gw[j] + 2.0 * penalty * w[j] / n);
        }
        b -= step * gb;
    }
    (w, b)
}

/// Logistic regression by tiny-step full-batch gradient descent; returns
/// the final mean log-loss.
pub fn logistic_gd_oracle(rows: &[Vec<f64>], labels: &[u8], iters: usize, step: f64) -> f64 {
    let n = rows.len() as f64;
    let d = rows[0].len();
    let (mut w, mut b) = (vec![0.0; d], 0.0);
    let score = |w: &[f64], b: f64, r: &[f64]| r.iter().zip(w).map(|(a, c)| a * c).sum::<f64>() + b;
    for _ in 0..iters {
        let mut gw = vec![0.0; d];
        let mut gb = 0.0;
        for (r, &l) in rows.iter().zip(labels) {
            let p = 1.0 / (1.0 + (-score(&w, b, r)).exp());
            let e = p - f64::from(l);
            for j in 0..d {
                gw[j] += e * r[j] / n;
            }
            gb += e / n;
        }
        for j in 0..d {
            w[j] -= step * gw[j];
        }
        b -= step * gb;
    }
    rows.iter()
        .zip(labels)
        .map(|(r, &l)| {
            let p = 1.0 / (1.0 + (-score(&w, b, r)).exp());
            -(f64::from(l) * p.ln() + (1.0 - f64::from(l)) * (1.0 - p).ln())
        })
        .sum::<f64>()
        / n
}

/// k nearest by full sort on (distance, index).
pub fn knn_oracle(rows: &[Vec<f64>], targets: &[f64], k: usize, q: &[f64]) -> f64 {
    let mut d: Vec<(f64, usize)> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| (r.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum(), i))
        .collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    d[..k].iter().map(|&(_, i)| targets[i]).sum::<f64>() / k as f64
}

/// `k`-th smallest (1-based) by full sort; `None` outside `1..=n`.
pub fn order_stat(v: &[f64], k: usize) -> Option<f64> {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    (1..=s.len()).contains(&k).then(|| s[k - 1])
}
