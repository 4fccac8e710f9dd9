//! Small complex helpers shared by the solvers.

use num_complex::Complex64;

pub type C64 = Complex64;
pub type Mat2 = [[C64; 2]; 2];

pub const I: C64 = C64 { re: 0.0, im: 1.0 };
pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// (e^z − 1)/z, accurate near z = 0.
pub fn phi1(z: C64) -> C64 {
    if z.norm() < 1e-3 {
        ONE + z * (0.5 + z * (1.0 / 6.0 + z * (1.0 / 24.0 + z / 120.0)))
    } else {
        (z.exp() - 1.0) / z
    }
}

/// ∫_s^e e^{ipr} dr, regular at p = 0. Returns 0 for empty intervals.
pub fn exp_integral(p: C64, s: f64, e: f64) -> C64 {
    if e <= s {
        return ZERO;
    }
    let w = e - s;
    (I * p * s).exp() * w * phi1(I * p * w)
}

pub fn mat2_identity() -> Mat2 {
    [[ONE, ZERO], [ZERO, ONE]]
}

pub fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn mat2_add(a: &Mat2, b: &Mat2) -> Mat2 {
    [[a[0][0] + b[0][0], a[0][1] + b[0][1]], [a[1][0] + b[1][0], a[1][1] + b[1][1]]]
}

pub fn mat2_det(a: &Mat2) -> C64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

pub fn mat2_inv(a: &Mat2) -> Option<Mat2> {
    let det = mat2_det(a);
    let scale = a.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
    if !det.is_finite() || det.norm() <= 1e-300 || det.norm() <= 1e-15 * scale * scale {
        return None;
    }
    Some([[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]])
}

pub fn mat2_adjoint(a: &Mat2) -> Mat2 {
    [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]]
}

pub fn mat2_frobenius(a: &Mat2) -> f64 {
    a.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn mat2_scale(a: &Mat2, s: C64) -> Mat2 {
    [[a[0][0] * s, a[0][1] * s], [a[1][0] * s, a[1][1] * s]]
}

pub fn mat2_sub(a: &Mat2, b: &Mat2) -> Mat2 {
    [[a[0][0] - b[0][0], a[0][1] - b[0][1]], [a[1][0] - b[1][0], a[1][1] - b[1][1]]]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_integral_matches_closed_form() {
        let p = C64::new(3.0, 0.1);
        let direct = ((I * p * 2.0).exp() - (I * p * 0.5).exp()) / (I * p);
        assert!((exp_integral(p, 0.5, 2.0) - direct).norm() < 1e-14);
        assert!((exp_integral(ZERO, 0.5, 2.0) - 1.5).norm() < 1e-15);
        let tiny = C64::new(1e-9, 0.0);
        assert!((exp_integral(tiny, 0.0, 1.0) - 1.0).norm() < 1e-8);
    }

    #[test]
    fn inverse_of_2x2() {
        let a = [[C64::new(1.0, 2.0), c(3.0)], [C64::new(0.0, -1.0), c(4.0)]];
        let inv = mat2_inv(&a).unwrap();
        let id = mat2_mul(&a, &inv);
        assert!(mat2_frobenius(&mat2_sub(&id, &mat2_identity())) < 1e-14);
    }
}
