//! Independent oracles shared by the integration suites.
#![allow(dead_code)]

/// Integer monomial coefficients of 2^n L_n for n = 0..=max, from
/// (n + 1) L_{n+1} = (2n + 1) s L_n - n L_{n-1}.
pub fn legendre_scaled(max: usize) -> Vec<Vec<i128>> {
    let mut out: Vec<Vec<i128>> = vec![vec![1], vec![0, 2]];
    for n in 1..max {
        let mut next = vec![0i128; n + 2];
        for (i, c) in out[n].iter().enumerate() {
            next[i + 1] += 2 * (2 * n as i128 + 1) * c;
        }
        for (i, c) in out[n - 1].iter().enumerate() {
            next[i] -= 4 * n as i128 * c;
        }
        for c in next.iter_mut() {
            assert_eq!(*c % (n as i128 + 1), 0);
            *c /= n as i128 + 1;
        }
        out.push(next);
    }
    out.truncate(max + 1);
    out
}

/// Integer monomial coefficients of 2^n K_n, K_n = -(1 + s) L_n' + (n^2 + n + 1) L_n.
pub fn koornwinder_scaled(max: usize) -> Vec<Vec<i128>> {
    legendre_scaled(max)
        .into_iter()
        .enumerate()
        .map(|(n, l)| {
            let lam = (n * n + n + 1) as i128;
            let mut out = vec![0i128; l.len()];
            for (i, c) in l.iter().enumerate() {
                out[i] += lam * c;
                if i > 0 {
                    out[i - 1] -= i as i128 * c;
                    out[i] -= i as i128 * c;
                }
            }
            out
        })
        .collect()
}

fn lcm_odd(up_to: usize) -> i128 {
    fn gcd(a: i128, b: i128) -> i128 {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    (1..=up_to as i128)
        .step_by(2)
        .fold(1, |l, k| l / gcd(l, k) * k)
}

/// <K_m, K_n> = (1/2) int_{-1}^{1} K_m K_n ds + K_m(1) K_n(1) as an exact
/// fraction (numerator, denominator).
pub fn koornwinder_inner_exact(polys: &[Vec<i128>], m: usize, n: usize) -> (i128, i128) {
    let (p, q) = (&polys[m], &polys[n]);
    let deg = m + n;
    let lcm = lcm_odd(deg + 1);
    let mut num = 0i128;
    for (i, a) in p.iter().enumerate() {
        for (j, b) in q.iter().enumerate() {
            if (i + j) % 2 == 0 {
                num += a * b * (lcm / (i + j + 1) as i128);
            }
        }
    }
    let den = lcm << deg;
    let at_one = |c: &Vec<i128>| c.iter().sum::<i128>();
    (num + lcm * at_one(p) * at_one(q), den)
}

/// Value of the scaled polynomial c / 2^n at s.
pub fn scaled_eval(c: &[i128], n: usize, s: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, v| acc * s + *v as f64) / (n as f64).exp2()
}

/// Exact value of c / 2^n at the dyadic point s = j / 64, rounded once.
pub fn scaled_eval_dyadic(c: &[i128], n: usize, j: i64) -> f64 {
    let deg = c.len() - 1;
    let mut num = 0i128;
    for (i, v) in c.iter().enumerate() {
        num += v * (j as i128).pow(i as u32) * 64i128.pow((deg - i) as u32);
    }
    let den = 64i128.pow(deg as u32) << n;
    num as f64 / den as f64
}

pub fn scaled_derivative(c: &[i128]) -> Vec<i128> {
    if c.len() <= 1 {
        return vec![0];
    }
    c.iter()
        .enumerate()
        .skip(1)
        .map(|(k, v)| k as i128 * v)
        .collect()
}

/// Backward RK4 sweep of the Riccati equation
///   P' = -(d d^T + K^T P + P K - P a a^T P / mu),  P(T) = 0,
/// returning P at t_i = i T / steps for i = 0..=steps.
pub fn riccati_path(
    k: &[[f64; 2]; 2],
    a: [f64; 2],
    d: [f64; 2],
    mu: f64,
    t_final: f64,
    steps: usize,
) -> Vec<[[f64; 2]; 2]> {
    let rhs = |p: &[[f64; 2]; 2]| -> [[f64; 2]; 2] {
        let mut out = [[0.0; 2]; 2];
        let pa = [
            p[0][0] * a[0] + p[0][1] * a[1],
            p[1][0] * a[0] + p[1][1] * a[1],
        ];
        for i in 0..2 {
            for j in 0..2 {
                let ktp: f64 = (0..2).map(|m| k[m][i] * p[m][j]).sum();
                let pk: f64 = (0..2).map(|m| p[i][m] * k[m][j]).sum();
                out[i][j] = -(d[i] * d[j] + ktp + pk - pa[i] * pa[j] / mu);
            }
        }
        out
    };
    let h = -t_final / steps as f64;
    let add = |p: &[[f64; 2]; 2], s: f64, q: &[[f64; 2]; 2]| {
        let mut o = *p;
        for i in 0..2 {
            for j in 0..2 {
                o[i][j] += s * q[i][j];
            }
        }
        o
    };
    let mut p = [[0.0; 2]; 2];
    let mut path = vec![p];
    for _ in 0..steps {
        let k1 = rhs(&p);
        let k2 = rhs(&add(&p, 0.5 * h, &k1));
        let k3 = rhs(&add(&p, 0.5 * h, &k2));
        let k4 = rhs(&add(&p, h, &k3));
        for i in 0..2 {
            for j in 0..2 {
                p[i][j] += h / 6.0 * (k1[i][j] + 2.0 * k2[i][j] + 2.0 * k3[i][j] + k4[i][j]);
            }
        }
        path.push(p);
    }
    path.reverse();
    path
}

/// P(0) of [`riccati_path`]; v(0, x) = x^T P(0) x / 2 for the linear-quadratic problem.
pub fn riccati_p0(
    k: &[[f64; 2]; 2],
    a: [f64; 2],
    d: [f64; 2],
    mu: f64,
    t_final: f64,
    steps: usize,
) -> [[f64; 2]; 2] {
    riccati_path(k, a, d, mu, t_final, steps)[0]
}

/// Optimal LQR control u(t_i) = -(a . P(t_i) x(t_i)) / mu on the grid
/// t_i = i T / n, with the closed loop integrated by RK4 on P sampled at
/// half steps.
pub fn riccati_control(
    k: &[[f64; 2]; 2],
    a: [f64; 2],
    d: [f64; 2],
    mu: f64,
    t_final: f64,
    x0: [f64; 2],
    n: usize,
) -> Vec<f64> {
    let path = riccati_path(k, a, d, mu, t_final, 2 * n);
    let u_of = |p: &[[f64; 2]; 2], x: [f64; 2]| {
        let px = [
            p[0][0] * x[0] + p[0][1] * x[1],
            p[1][0] * x[0] + p[1][1] * x[1],
        ];
        -(a[0] * px[0] + a[1] * px[1]) / mu
    };
    let f = |p: &[[f64; 2]; 2], x: [f64; 2]| {
        let u = u_of(p, x);
        [
            k[0][0] * x[0] + k[0][1] * x[1] + a[0] * u,
            k[1][0] * x[0] + k[1][1] * x[1] + a[1] * u,
        ]
    };
    let h = t_final / n as f64;
    let mut x = x0;
    let mut out = vec![u_of(&path[0], x)];
    for i in 0..n {
        let (p0, pm, p1) = (&path[2 * i], &path[2 * i + 1], &path[2 * i + 2]);
        let k1 = f(p0, x);
        let k2 = f(pm, [x[0] + 0.5 * h * k1[0], x[1] + 0.5 * h * k1[1]]);
        let k3 = f(pm, [x[0] + 0.5 * h * k2[0], x[1] + 0.5 * h * k2[1]]);
        let k4 = f(p1, [x[0] + h * k3[0], x[1] + h * k3[1]]);
        for j in 0..2 {
            x[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        out.push(u_of(p1, x));
    }
    out
}

/// min over a uniform u-grid on [-10, 10] with step 1e-4 of
/// running + drift . p + (alpha . p) u + mu u^2 / 2.
pub fn brute_force_hamiltonian(
    running: f64,
    drift: [f64; 2],
    alpha: [f64; 2],
    mu: f64,
    p: [f64; 2],
) -> f64 {
    let fp = drift[0] * p[0] + drift[1] * p[1];
    let ap = alpha[0] * p[0] + alpha[1] * p[1];
    let mut best = f64::INFINITY;
    for k in 0..=200_000 {
        let u = -10.0 + k as f64 * 1e-4;
        best = best.min(running + fp + ap * u + 0.5 * mu * u * u);
    }
    best
}

/// Central difference quotient of f at x.
pub fn central_difference<F: Fn(f64) -> f64>(f: F, x: f64, eps: f64) -> f64 {
    (f(x + eps) - f(x - eps)) / (2.0 * eps)
}
