//! Reference implementations used by the integration tests. Each is a
//! direct transcription of the defining formula, kept deliberately naive.
#![allow(dead_code)]

use econfit::matrix::BinaryMatrix;
use rand::Rng;

/// Straight-loop fitness/complexity: sequential updates, mean
/// normalization, `Q⁰ = q0`. Stops after `max_sweeps` or once the largest
/// relative change of both vectors is at most `tol`.
pub fn fitness_oracle(m: &[Vec<u8>], q0: &[f64], max_sweeps: usize, tol: f64) -> (Vec<f64>, Vec<f64>, usize) {
    let nc = m.len();
    let np = m[0].len();
    let mut f = vec![1.0; nc];
    let mut q = q0.to_vec();
    for sweep in 1..=max_sweeps {
        let mut f_new = vec![0.0; nc];
        for c in 0..nc {
            for p in 0..np {
                if m[c][p] == 1 {
                    f_new[c] += q[p];
                }
            }
        }
        let mean_f: f64 = f_new.iter().sum::<f64>() / nc as f64;
        for v in f_new.iter_mut() {
            *v /= mean_f;
        }
        let mut q_new = vec![0.0; np];
        for p in 0..np {
            let mut s = 0.0;
            for c in 0..nc {
                if m[c][p] == 1 {
                    s += 1.0 / f_new[c].max(1e-300);
                }
            }
            q_new[p] = 1.0 / s;
        }
        let mean_q: f64 = q_new.iter().sum::<f64>() / np as f64;
        for v in q_new.iter_mut() {
            *v /= mean_q;
        }
        let change = |a: &[f64], b: &[f64]| {
            a.iter()
                .zip(b)
                .map(|(x, y)| ((x - y) / y).abs())
                .fold(0.0, f64::max)
        };
        let done = change(&f_new, &f) <= tol && change(&q_new, &q) <= tol;
        f = f_new;
        q = q_new;
        if done {
            return (f, q, sweep);
        }
    }
    (f, q, max_sweeps)
}

pub fn to_u8(m: &BinaryMatrix) -> Vec<Vec<u8>> {
    m.rows().map(|r| r.iter().map(|&b| b as u8).collect()).collect()
}

/// Balassa index with four explicit loops.
pub fn rca_oracle(x: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let nc = x.len();
    let np = x[0].len();
    let mut out = vec![vec![0.0; np]; nc];
    for c in 0..nc {
        for p in 0..np {
            let mut row = 0.0;
            for q in 0..np {
                row += x[c][q];
            }
            let mut col = 0.0;
            let mut total = 0.0;
            for d in 0..nc {
                col += x[d][p];
                for q in 0..np {
                    total += x[d][q];
                }
            }
            out[c][p] = if row > 0.0 && col > 0.0 {
                (x[c][p] / row) / (col / total)
            } else {
                0.0
            };
        }
    }
    out
}

/// Plain `Σ w y / Σ w` with a product Gaussian kernel.
pub fn nw_oracle(points: &[([f64; 2], f64)], q: [f64; 2], h: [f64; 2]) -> Option<f64> {
    let mut sw = 0.0;
    let mut swy = 0.0;
    for (x, y) in points {
        let a = (q[0] - x[0]) / h[0];
        let b = (q[1] - x[1]) / h[1];
        let w = (-0.5 * a * a).exp() * (-0.5 * b * b).exp();
        sw += w;
        swy += w * y;
    }
    (sw > 0.0).then(|| swy / sw)
}

/// Gauss-Jordan inverse with partial pivoting.
pub fn invert(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        m.swap(col, piv);
        let d = m[col][col];
        for v in m[col].iter_mut() {
            *v /= d;
        }
        for i in 0..n {
            if i != col {
                let f = m[i][col];
                if f != 0.0 {
                    for j in 0..2 * n {
                        m[i][j] -= f * m[col][j];
                    }
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// OLS coefficients and HC1 standard errors from the textbook formulas.
pub fn ols_hc1_oracle(x: &[Vec<f64>], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let k = x[0].len();
    let mut xtx = vec![vec![0.0; k]; k];
    let mut xty = vec![0.0; k];
    for i in 0..n {
        for a in 0..k {
            xty[a] += x[i][a] * y[i];
            for b in 0..k {
                xtx[a][b] += x[i][a] * x[i][b];
            }
        }
    }
    let inv = invert(&xtx);
    let beta: Vec<f64> = (0..k).map(|a| (0..k).map(|b| inv[a][b] * xty[b]).sum()).collect();
    let e: Vec<f64> = (0..n)
        .map(|i| y[i] - (0..k).map(|a| x[i][a] * beta[a]).sum::<f64>())
        .collect();
    let mut meat = vec![vec![0.0; k]; k];
    for i in 0..n {
        for a in 0..k {
            for b in 0..k {
                meat[a][b] += e[i] * e[i] * x[i][a] * x[i][b];
            }
        }
    }
    let scale = n as f64 / (n - k) as f64;
    let mut se = vec![0.0; k];
    for (a, s) in se.iter_mut().enumerate() {
        let mut v = 0.0;
        for b in 0..k {
            for c in 0..k {
                v += inv[a][b] * meat[b][c] * inv[c][a];
            }
        }
        *s = (v * scale).sqrt();
    }
    (beta, se)
}

pub fn random_binary<R: Rng>(rng: &mut R, nc: usize, np: usize, density: f64) -> Vec<Vec<bool>> {
    (0..nc)
        .map(|_| (0..np).map(|_| rng.random::<f64>() < density).collect())
        .collect()
}

pub fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / y.abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

use econfit::econometrics::{GrowthPanel, GrowthRow};

pub const TRUE_BETA: [f64; 8] = [0.3, -0.02, 0.01, 0.004, 0.015, -0.05, 0.02, -0.03];

/// Regressors of one row computed directly from the levels:
/// const, ln GDPpc, ln K/EMP, ln EMP, ln TFP/GDPpc, ln 1/LifeExp, ln School, rank.
pub fn regressors(r: &GrowthRow) -> [f64; 8] {
    [
        1.0,
        r.gdp_pc.ln(),
        r.k_emp.ln(),
        r.emp.ln(),
        (r.tfp / r.gdp_pc).ln(),
        -r.life_exp.ln(),
        r.school.ln(),
        r.fitness_rank,
    ]
}

/// Random panel whose growth is `x·β + α_country + σ ε`.
pub fn synthetic_growth_panel<R: Rng>(
    rng: &mut R,
    n_countries: usize,
    years: usize,
    beta: &[f64; 8],
    country_effects: bool,
    sigma: f64,
) -> GrowthPanel {
    use rand_distr::{Distribution, StandardNormal};
    let mut rows = Vec::new();
    for c in 0..n_countries {
        let alpha = if country_effects { rng.random_range(-0.05..0.05) } else { 0.0 };
        for t in 0..years {
            let mut r = GrowthRow {
                country: format!("K{c:03}"),
                year: 1970 + 5 * t as i32,
                growth: 0.0,
                gdp_pc: rng.random_range(6.0f64..10.5).exp(),
                k_emp: rng.random_range(8.0f64..12.0).exp(),
                emp: rng.random_range(12.0f64..18.0).exp(),
                pop: rng.random_range(14.0f64..19.0).exp(),
                tfp: rng.random_range(6.0f64..10.5).exp(),
                life_exp: rng.random_range(40.0..82.0),
                school: rng.random_range(0.5..13.0),
                fitness: rng.random_range(0.01..5.0),
                fitness_rank: rng.random_range(0.0..1.0),
            };
            let x = regressors(&r);
            let noise: f64 = StandardNormal.sample(rng);
            r.growth = x.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>() + alpha + sigma * noise;
            rows.push(r);
        }
    }
    GrowthPanel::from_rows(rows)
}
