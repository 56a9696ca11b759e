//! Eigenvalues of 3×3 real matrices through the characteristic cubic.

use num_complex::Complex64;

/// Coefficients `(a, b, c)` of the monic characteristic polynomial
/// `λ³ + aλ² + bλ + c` of `m`.
pub fn characteristic_cubic(m: &[[f64; 3]; 3]) -> (f64, f64, f64) {
    let trace = m[0][0] + m[1][1] + m[2][2];
    let minors = m[0][0] * m[1][1] - m[0][1] * m[1][0] + m[0][0] * m[2][2] - m[0][2] * m[2][0]
        + m[1][1] * m[2][2]
        - m[1][2] * m[2][1];
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    (-trace, minors, -det)
}

fn cubic(a: f64, b: f64, c: f64, x: f64) -> f64 {
    ((x + a) * x + b) * x + c
}

/// Newton polishing of a real root; keeps the best iterate seen.
fn polish(a: f64, b: f64, c: f64, mut x: f64) -> f64 {
    let mut best = x;
    let mut best_res = cubic(a, b, c, x).abs();
    for _ in 0..8 {
        let d = (3.0 * x + 2.0 * a) * x + b;
        if d == 0.0 {
            break;
        }
        x -= cubic(a, b, c, x) / d;
        let res = cubic(a, b, c, x).abs();
        if res < best_res {
            best = x;
            best_res = res;
        } else {
            break;
        }
    }
    best
}

/// One real root of `λ³ + aλ² + bλ + c`, the one of largest magnitude
/// when all three are real.
fn dominant_real_root(a: f64, b: f64, c: f64) -> f64 {
    let shift = a / 3.0;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);

    let t = if disc > 0.0 {
        let s = disc.sqrt();
        let u = (-q / 2.0 - q.signum() * s).cbrt();
        if u == 0.0 {
            0.0
        } else {
            u - p / (3.0 * u)
        }
    } else if p == 0.0 {
        0.0
    } else {
        let r = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * r)).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        (0..3)
            .map(|k| r * (phi - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos())
            .max_by(|l: &f64, r: &f64| (l - shift).abs().total_cmp(&(r - shift).abs()))
            .unwrap_or(0.0)
    };
    polish(a, b, c, t - shift)
}

/// Roots of `x² + px + q`.
fn quadratic_roots(p: f64, q: f64) -> [Complex64; 2] {
    let disc = p * p - 4.0 * q;
    if disc < 0.0 {
        let re = -p / 2.0;
        let im = (-disc).sqrt() / 2.0;
        [Complex64::new(re, im), Complex64::new(re, -im)]
    } else {
        let s = disc.sqrt();
        let big = -(p + p.signum() * s) / 2.0;
        if big == 0.0 {
            [Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)]
        } else {
            [Complex64::new(big, 0.0), Complex64::new(q / big, 0.0)]
        }
    }
}

/// Eigenvalues of a 3×3 real matrix.
///
/// Diagonal matrices return their diagonal, in order, exactly. Otherwise
/// the roots are sorted by decreasing real part, then decreasing imaginary part.
pub fn eigenvalues(m: &[[f64; 3]; 3]) -> [Complex64; 3] {
    let off_diagonal_zero = (0..3).all(|i| (0..3).all(|j| i == j || m[i][j] == 0.0));
    if off_diagonal_zero {
        return [0, 1, 2].map(|i| Complex64::new(m[i][i], 0.0));
    }

    let (a, b, c) = characteristic_cubic(m);
    let first = dominant_real_root(a, b, c);
    // deflate: λ³ + aλ² + bλ + c = (λ − first)(λ² + pλ + q)
    let p = a + first;
    let q = b + p * first;
    let [second, third] = quadratic_roots(p, q).map(|r| {
        if r.im == 0.0 {
            Complex64::new(polish(a, b, c, r.re), 0.0)
        } else {
            r
        }
    });

    let mut roots = [Complex64::new(first, 0.0), second, third];
    roots.sort_by(|l, r| {
        r.re.partial_cmp(&l.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(r.im.partial_cmp(&l.im).unwrap_or(std::cmp::Ordering::Equal))
    });
    roots
}

/// `det(m − λI)` evaluated in complex arithmetic.
pub fn shifted_determinant(m: &[[f64; 3]; 3], lambda: Complex64) -> Complex64 {
    let e = |i: usize, j: usize| {
        let v = Complex64::new(m[i][j], 0.0);
        if i == j {
            v - lambda
        } else {
            v
        }
    };
    e(0, 0) * (e(1, 1) * e(2, 2) - e(1, 2) * e(2, 1))
        - e(0, 1) * (e(1, 0) * e(2, 2) - e(1, 2) * e(2, 0))
        + e(0, 2) * (e(1, 0) * e(2, 1) - e(1, 1) * e(2, 0))
}
