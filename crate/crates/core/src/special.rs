//! Modified Bessel functions of complex argument, Hermite functions, sine-integral tails.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

/// `I_m(z)` for integer order, by Miller backward recurrence normalized with
/// `e^{z} = I_0 + 2 sum I_k` (or the alternating sum for `e^{-z}` when `Re z < 0`).
pub fn bessel_i(m: i32, z: C64) -> C64 {
    let m = m.unsigned_abs() as usize;
    if z.norm() <= 2.0 {
        return bessel_i_series(m, z);
    }
    let start = 2 * ((m.max(z.norm().ceil() as usize) + 40 + (z.norm().sqrt() * 6.0) as usize) / 2);
    let two_over_z = C64::new(2.0, 0.0) / z;
    let alternate = z.re < 0.0;
    let mut next = C64::new(0.0, 0.0);
    let mut cur = C64::new(1.0, 0.0);
    let mut sum = C64::new(0.0, 0.0);
    let mut want = C64::new(0.0, 0.0);
    for k in (1..=start).rev() {
        let prev = two_over_z * k as f64 * cur + next;
        next = cur;
        cur = prev;
        // now cur ~ I_{k-1}, next ~ I_k
        let sign = if alternate && k % 2 == 1 { -1.0 } else { 1.0 };
        sum += next * (2.0 * sign);
        if k == m {
            want = next;
        }
        if cur.norm() > 1e200 {
            cur *= 1e-200;
            next *= 1e-200;
            sum *= 1e-200;
            want *= 1e-200;
        }
    }
    sum += cur;
    if m == 0 {
        want = cur;
    }
    let norm = if alternate { (-z).exp() } else { z.exp() };
    let scale = sum.norm();
    (want / scale) / (sum / scale) * norm
}

pub fn bessel_i_series(m: usize, z: C64) -> C64 {
    let half = z * 0.5;
    let h2 = half * half;
    let mut term = half.powu(m as u32) / factorial(m);
    let mut sum = term;
    for k in 1..400 {
        term *= h2 / (k as f64 * (k + m) as f64);
        sum += term;
        if term.norm() <= 1e-17 * sum.norm() {
            break;
        }
    }
    sum
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Orthonormal Hermite functions `h_0..h_{n-1}` at `x`.
pub fn hermite_functions(n: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    if n == 0 {
        return out;
    }
    out.push(PI.powf(-0.25) * (-0.5 * x * x).exp());
    if n > 1 {
        out.push(2f64.sqrt() * x * out[0]);
    }
    for k in 1..n.saturating_sub(1) {
        let v = (2.0 / (k + 1) as f64).sqrt() * x * out[k] - (k as f64 / (k + 1) as f64).sqrt() * out[k - 1];
        out.push(v);
    }
    out
}

/// `int_x^inf sin(t)/t dt` for `x >= 20` from the asymptotic auxiliary functions,
/// truncated at the smallest term.
pub fn sine_integral_tail(x: f64) -> Option<f64> {
    if x < 20.0 {
        return None;
    }
    let x2 = x * x;
    let (mut f, mut g) = (0.0, 0.0);
    let (mut tf, mut tg) = (1.0 / x, 1.0 / x2);
    let (mut last_f, mut last_g) = (f64::INFINITY, f64::INFINITY);
    for k in 0..60 {
        if tf.abs() < last_f {
            f += tf;
            last_f = tf.abs();
        }
        if tg.abs() < last_g {
            g += tg;
            last_g = tg.abs();
        }
        let kf = k as f64;
        tf *= -(2.0 * kf + 1.0) * (2.0 * kf + 2.0) / x2;
        tg *= -(2.0 * kf + 2.0) * (2.0 * kf + 3.0) / x2;
    }
    Some(f * x.cos() + g * x.sin())
}

/// `Si(x) = int_0^x sin(t)/t dt`: Gauss-Legendre below 20, asymptotic tail above.
pub fn sine_integral(x: f64) -> f64 {
    let ax = x.abs();
    let v = match sine_integral_tail(ax) {
        Some(tail) => PI / 2.0 - tail,
        None if ax == 0.0 => 0.0,
        None => crate::quad::GaussLegendre::cached(16).integrate(0.0, ax, (ax.ceil() as usize).max(1), |t| {
            if t == 0.0 {
                1.0
            } else {
                t.sin() / t
            }
        }),
    };
    v.copysign(x)
}

/// Generalized Laguerre `L_n^{(a)}(x)` by the three-term recurrence.
pub fn laguerre(n: usize, a: f64, x: f64) -> f64 {
    let (mut l0, mut l1) = (1.0, 1.0 + a - x);
    if n == 0 {
        return l0;
    }
    for k in 1..n {
        let kf = k as f64;
        let l2 = ((2.0 * kf + 1.0 + a - x) * l1 - (kf + a) * l0) / (kf + 1.0);
        l0 = l1;
        l1 = l2;
    }
    l1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bessel_real_values() {
        // I_0(1), I_1(5), I_3(10)
        assert!((bessel_i(0, C64::new(1.0, 0.0)).re - 1.266_065_877_752_008_4).abs() < 1e-14);
        assert!((bessel_i(1, C64::new(5.0, 0.0)).re - 24.335_642_142_450_524).abs() < 1e-11);
        assert!((bessel_i(3, C64::new(10.0, 0.0)).re - 1758.380_716_610_853_5).abs() < 1e-8);
    }

    #[test]
    fn recurrence_agrees_with_series() {
        for &(re, im) in &[(3.0, 4.0), (-6.0, 1.0), (0.5, 9.0), (-2.5, -3.5)] {
            let z = C64::new(re, im);
            for m in [0, 1, 2, 7, 15] {
                let a = bessel_i(m, z);
                let b = bessel_i_series(m as usize, z);
                assert!((a - b).norm() <= 1e-12 * b.norm().max(1.0), "m={m} z={z}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn hermite_orthonormal() {
        let rule = crate::quad::GaussLegendre::new(40);
        let (xs, ws) = rule.composite(-12.0, 12.0, 8);
        let mut g = [[0.0; 6]; 6];
        for (&x, &w) in xs.iter().zip(&ws) {
            let h = hermite_functions(6, x);
            for i in 0..6 {
                for j in 0..6 {
                    g[i][j] += w * h[i] * h[j];
                }
            }
        }
        for (i, row) in g.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let t = if i == j { 1.0 } else { 0.0 };
                assert!((v - t).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn si_values() {
        // Si(1), Si(-5), Si(19.5) straddling the switch
        assert!((sine_integral(1.0) - 0.946_083_070_367_183).abs() < 1e-14);
        assert!((sine_integral(-5.0) + 1.549_931_244_944_674).abs() < 1e-14);
        assert!((sine_integral(19.999) - sine_integral(20.0)).abs() < 1e-4);
        assert!((sine_integral(19.999_999_9) - sine_integral(20.0)).abs() < 1e-8);
    }

    #[test]
    fn laguerre_closed() {
        // L_2^{(1)}(x) = (x^2 - 6x + 6)/2
        let x = 0.7;
        assert!((laguerre(2, 1.0, x) - (x * x - 6.0 * x + 6.0) / 2.0).abs() < 1e-15);
        assert_eq!(laguerre(0, 3.0, 2.0), 1.0);
    }

    #[test]
    fn si_tail() {
        // Si(30) = 1.566756540030351
        let tail = sine_integral_tail(30.0).unwrap();
        assert!((PI / 2.0 - tail - 1.566_756_540_030_351).abs() < 1e-13);
    }
}
