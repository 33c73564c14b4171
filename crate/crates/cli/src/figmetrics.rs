//! Structural metrics for the figure presets: local-maxima detection and
//! angular symmetry correlation on polar resamplings.

use ncs_core::Field;

/// Strict local maxima over the 8-neighborhood with value above
/// `threshold_frac` times the field maximum. Returns (q, p, value).
pub fn local_maxima(field: &Field, threshold_frac: f64) -> Vec<(f64, f64, f64)> {
    let g = &field.grid;
    let max = field.values.iter().fold(f64::MIN, |m, &v| m.max(v));
    let thresh = threshold_frac * max;
    let mut out = Vec::new();
    for i in 1..g.nq - 1 {
        for j in 1..g.np - 1 {
            let v = field.at(i, j);
            if v < thresh {
                continue;
            }
            let mut is_max = true;
            for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let ni = (i as i64 + di) as usize;
                    let nj = (j as i64 + dj) as usize;
                    if field.at(ni, nj) >= v {
                        is_max = false;
                    }
                }
            }
            if is_max {
                out.push((g.q_at(i), g.p_at(j), v));
            }
        }
    }
    out
}

fn bilinear(field: &Field, q: f64, p: f64) -> f64 {
    let g = &field.grid;
    let fq = (q - g.q_min) / (g.q_max - g.q_min) * (g.nq - 1) as f64;
    let fp = (p - g.p_min) / (g.p_max - g.p_min) * (g.np - 1) as f64;
    if fq < 0.0 || fp < 0.0 || fq > (g.nq - 1) as f64 || fp > (g.np - 1) as f64 {
        return 0.0;
    }
    let i = (fq.floor() as usize).min(g.nq - 2);
    let j = (fp.floor() as usize).min(g.np - 2);
    let tq = fq - i as f64;
    let tp = fp - j as f64;
    field.at(i, j) * (1.0 - tq) * (1.0 - tp)
        + field.at(i + 1, j) * tq * (1.0 - tp)
        + field.at(i, j + 1) * (1.0 - tq) * tp
        + field.at(i + 1, j + 1) * tq * tp
}

/// Pearson correlation between the field and its rotation by `delta`
/// radians, sampled on a polar grid inside the largest inscribed circle.
pub fn angular_correlation(field: &Field, delta: f64) -> f64 {
    let g = &field.grid;
    let r_max = 0.95
        * (g.q_max - g.q_min).min(g.p_max - g.p_min)
        / 2.0;
    let n_r = 48;
    let n_theta = 192;
    let mut xs = Vec::with_capacity(n_r * n_theta);
    let mut ys = Vec::with_capacity(n_r * n_theta);
    for ir in 1..=n_r {
        let r = r_max * ir as f64 / n_r as f64;
        for it in 0..n_theta {
            let th = 2.0 * std::f64::consts::PI * it as f64 / n_theta as f64;
            xs.push(bilinear(field, r * th.cos(), r * th.sin()));
            let th2 = th + delta;
            ys.push(bilinear(field, r * th2.cos(), r * th2.sin()));
        }
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (x, y) in xs.iter().zip(ys.iter()) {
        cov += (x - mx) * (y - my);
        vx += (x - mx) * (x - mx);
        vy += (y - my) * (y - my);
    }
    cov / (vx * vy).sqrt()
}
