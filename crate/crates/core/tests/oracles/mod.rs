//! Independent reference computations shared by integration tests.
#![allow(dead_code, clippy::needless_range_loop)]

use num_complex::Complex64 as C;

pub const SLOTS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];

pub type Mat = [[C; 9]; 9];

/// Generator of the per-mode linear system for the state
/// `(u₁, u₂, u₃, τ₁₁, τ₂₂, τ₃₃, τ₁₂, τ₁₃, τ₂₃)`, with general `Re`, `We`.
pub fn mode_generator(xi: [f64; 3], omega: f64, re: f64, we: f64) -> Mat {
    let mut m = [[C::default(); 9]; 9];
    let s2: f64 = xi.iter().map(|x| x * x).sum();
    let proj = |j: usize, k: usize| -> f64 {
        let d = if j == k { 1.0 } else { 0.0 };
        if s2 == 0.0 {
            d
        } else {
            d - xi[j] * xi[k] / s2
        }
    };
    for j in 0..3 {
        m[j][j] = C::new(-(1.0 - omega) * s2 / re, 0.0);
        // (ℙ div τ)_j = i Σ_k P_jk Σ_l ξ_l τ_kl
        for (slot, &(a, b)) in SLOTS.iter().enumerate() {
            let mut coef = proj(j, a) * xi[b];
            if a != b {
                coef += proj(j, b) * xi[a];
            }
            m[j][3 + slot] = C::new(0.0, coef / re);
        }
    }
    for (slot, &(a, b)) in SLOTS.iter().enumerate() {
        let row = 3 + slot;
        m[row][row] = C::new(-1.0 / we, 0.0);
        // 2ω D_ab = iω(ξ_a u_b + ξ_b u_a)
        m[row][b] += C::new(0.0, omega * xi[a] / we);
        m[row][a] += C::new(0.0, omega * xi[b] / we);
    }
    m
}

fn matmul(a: &Mat, b: &Mat) -> Mat {
    let mut c = [[C::default(); 9]; 9];
    for i in 0..9 {
        for k in 0..9 {
            let aik = a[i][k];
            if aik == C::default() {
                continue;
            }
            for j in 0..9 {
                c[i][j] += aik * b[k][j];
            }
        }
    }
    c
}

/// `exp(A)` by scaling and squaring of a truncated Taylor series.
pub fn expm(a: &Mat) -> Mat {
    let norm = a.iter().map(|r| r.iter().map(|x| x.norm()).sum::<f64>()).fold(0.0, f64::max);
    let mut k = 0;
    while norm / 2f64.powi(k) > 0.25 {
        k += 1;
    }
    let scale = 2f64.powi(-k);
    let mut x = [[C::default(); 9]; 9];
    for i in 0..9 {
        for j in 0..9 {
            x[i][j] = a[i][j] * scale;
        }
    }
    let mut result = [[C::default(); 9]; 9];
    let mut term = [[C::default(); 9]; 9];
    for i in 0..9 {
        result[i][i] = C::new(1.0, 0.0);
        term[i][i] = C::new(1.0, 0.0);
    }
    for n in 1..=24 {
        term = matmul(&term, &x);
        for row in term.iter_mut() {
            for v in row.iter_mut() {
                *v /= n as f64;
            }
        }
        for i in 0..9 {
            for j in 0..9 {
                result[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..k {
        result = matmul(&result, &result);
    }
    result
}

/// Reference propagation of one mode by the dense matrix exponential.
pub fn propagate_dense(
    u0: &[C; 3],
    tau0: &[C; 6],
    xi: [f64; 3],
    t: f64,
    omega: f64,
    re: f64,
    we: f64,
) -> ([C; 3], [C; 6]) {
    let mut g = mode_generator(xi, omega, re, we);
    for row in g.iter_mut() {
        for v in row.iter_mut() {
            *v *= t;
        }
    }
    let e = expm(&g);
    let x: Vec<C> = u0.iter().chain(tau0.iter()).copied().collect();
    let y: Vec<C> = (0..9).map(|i| (0..9).map(|j| e[i][j] * x[j]).sum()).collect();
    ([y[0], y[1], y[2]], [y[3], y[4], y[5], y[6], y[7], y[8]])
}

/// Largest entry difference relative to the largest entry of `b`.
pub fn mode_rel_diff(a: &([C; 3], [C; 6]), b: &([C; 3], [C; 6])) -> f64 {
    let da = a.0.iter().zip(&b.0).chain(a.1.iter().zip(&b.1)).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    let scale = b.0.iter().chain(b.1.iter()).map(|x| x.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        da
    } else {
        da / scale
    }
}

/// Project a complex vector onto the plane orthogonal to `xi`.
pub fn solenoidal(v: [C; 3], xi: [f64; 3]) -> [C; 3] {
    let s2: f64 = xi.iter().map(|x| x * x).sum();
    if s2 == 0.0 {
        return v;
    }
    let d = v[0] * xi[0] + v[1] * xi[1] + v[2] * xi[2];
    std::array::from_fn(|j| v[j] - d * xi[j] / s2)
}

/// Ordinary least-squares slope of `y` against `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Geometric grid of `n` points on `[lo, hi]`.
pub fn geometric(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

/// A handful of Fourier modes given by integer index, velocity and stress.
pub type ModeList = Vec<([i64; 3], [C; 3], [C; 6])>;

fn full(t: &[C; 6]) -> [[C; 3]; 3] {
    [[t[0], t[3], t[4]], [t[3], t[1], t[5]], [t[4], t[5], t[2]]]
}

/// Brute-force convolution of `-(u·∇)u` (unprojected) and
/// `-(u·∇τ + τW - Wτ - a(Dτ + τD))` over every pair of listed modes, with
/// wavevector `j/m` for integer index `j`.
pub fn convolve_nonlinear(modes: &ModeList, m: f64, a: f64) -> std::collections::BTreeMap<[i64; 3], ([C; 3], [C; 6])> {
    let mut out = std::collections::BTreeMap::new();
    let i = C::new(0.0, 1.0);
    for (jp, up, tp) in modes {
        for (jq, uq, tq) in modes {
            let q = jq.map(|x| x as f64 / m);
            let key = [jp[0] + jq[0], jp[1] + jq[1], jp[2] + jq[2]];
            let entry = out.entry(key).or_insert(([C::default(); 3], [C::default(); 6]));
            // u_p · (i q)
            let uq_dot: C = (0..3).map(|l| up[l] * i * q[l]).sum();
            for j in 0..3 {
                entry.0[j] -= uq_dot * uq[j];
            }
            for c in 0..6 {
                entry.1[c] -= uq_dot * tq[c];
            }
            // stress at p, velocity gradient at q: G_jl = i q_l u_j
            let g: [[C; 3]; 3] = std::array::from_fn(|j| std::array::from_fn(|l| i * q[l] * uq[j]));
            let d: [[C; 3]; 3] = std::array::from_fn(|j| std::array::from_fn(|l| 0.5 * (g[j][l] + g[l][j])));
            let w: [[C; 3]; 3] = std::array::from_fn(|j| std::array::from_fn(|l| 0.5 * (g[j][l] - g[l][j])));
            let t = full(tp);
            for (c, &(r, s)) in SLOTS.iter().enumerate() {
                let mut v = C::default();
                for k in 0..3 {
                    v += t[r][k] * w[k][s] - w[r][k] * t[k][s] - a * (d[r][k] * t[k][s] + t[r][k] * d[k][s]);
                }
                entry.1[c] -= v;
            }
        }
    }
    out
}

/// `v - (v·n)n` for a wavevector `k`; identity at `k = 0`.
pub fn project(v: [C; 3], k: [f64; 3]) -> [C; 3] {
    let s2: f64 = k.iter().map(|x| x * x).sum();
    if s2 == 0.0 {
        return v;
    }
    let kv: C = (0..3).map(|j| v[j] * k[j]).sum();
    std::array::from_fn(|j| v[j] - kv * k[j] / s2)
}
