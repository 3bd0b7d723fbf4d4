//! Exactly known eigenvalues used as references.

/// `J_m(x)` by its power series; accurate to ~1e-15 for `x` below about 10.
pub fn bessel_j(m: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = half.powi(m as i32) / (1..=m).map(f64::from).product::<f64>();
    let mut sum = term;
    for j in 1..300 {
        term *= -half * half / (j as f64 * (j as f64 + m as f64));
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

/// First positive zero of `J_m`: scan for a sign change, then bisect.
pub fn bessel_first_zero(m: u32) -> f64 {
    let step = 0.05;
    let mut lo = 0.5 + m as f64;
    while bessel_j(m, lo).signum() == bessel_j(m, lo + step).signum() {
        lo += step;
    }
    let mut hi = lo + step;
    let sign = bessel_j(m, lo).signum();
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if bessel_j(m, mid).signum() == sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `(λ1, λ2)` of the flat disc of radius `r` with `V = 0`: `j_{0,1}^2/r^2`, `j_{1,1}^2/r^2`.
pub fn flat_disc_eigenvalues(r: f64) -> (f64, f64) {
    let (a, b) = (bessel_first_zero(0), bessel_first_zero(1));
    (a * a / (r * r), b * b / (r * r))
}

/// `(λ1, λ2)` of the hemisphere of curvature `k`, eigenfunctions `cos r` and
/// `sin r cos r cos θ` (in units where `k = 1`).
pub fn hemisphere_eigenvalues(k: f64) -> (f64, f64) {
    (2.0 * k, 6.0 * k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_zeros() {
        assert!((bessel_first_zero(0) - 2.404825557695773).abs() < 1e-13);
        assert!((bessel_first_zero(1) - 3.8317059702075125).abs() < 1e-13);
        assert!(bessel_j(0, 0.0) == 1.0 && bessel_j(1, 0.0) == 0.0);
    }
}
