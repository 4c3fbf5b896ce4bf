//! Composite Gauss-Legendre quadrature and local polynomial interpolation.

/// 16-point Gauss-Legendre nodes and weights on [-1, 1].
pub const GL16: [(f64, f64); 16] = [
    (-0.989400934991649933, 0.0271524594117540949),
    (-0.944575023073232576, 0.0622535239386478929),
    (-0.865631202387831744, 0.0951585116824927848),
    (-0.755404408355003034, 0.124628971255533872),
    (-0.617876244402643748, 0.149595988816576732),
    (-0.458016777657227386, 0.169156519395002538),
    (-0.281603550779258913, 0.182603415044923589),
    (-0.0950125098376374402, 0.189450610455068496),
    (0.0950125098376374402, 0.189450610455068496),
    (0.281603550779258913, 0.182603415044923589),
    (0.458016777657227386, 0.169156519395002538),
    (0.617876244402643748, 0.149595988816576732),
    (0.755404408355003034, 0.124628971255533872),
    (0.865631202387831744, 0.0951585116824927848),
    (0.944575023073232576, 0.0622535239386478929),
    (0.989400934991649933, 0.0271524594117540949),
];

/// Composite 16-point Gauss-Legendre integral of f over [lo, hi] with the
/// given number of uniform panels.
pub fn integrate<F, E>(mut f: F, lo: f64, hi: f64, panels: usize) -> Result<f64, E>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    if hi <= lo {
        return Ok(0.0);
    }
    let width = (hi - lo) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let a = lo + p as f64 * width;
        let mid = a + 0.5 * width;
        let half = 0.5 * width;
        let mut acc = 0.0;
        for &(x, w) in &GL16 {
            acc += w * f(mid + half * x)?;
        }
        total += acc * half;
    }
    Ok(total)
}

/// Local Lagrange interpolation on a uniform grid: picks a window of
/// `order` points around x and evaluates the interpolating polynomial.
pub fn lagrange_uniform(grid: &[f64], values: &[f64], x: f64, order: usize) -> f64 {
    let n = grid.len();
    debug_assert!(n >= 2 && values.len() == n);
    let order = order.min(n);
    let h = grid[1] - grid[0];
    let idx = ((x - grid[0]) / h).floor() as isize;
    let lo = (idx - (order as isize - 1) / 2)
        .clamp(0, n as isize - order as isize) as usize;
    let xs = &grid[lo..lo + order];
    let ys = &values[lo..lo + order];
    let mut total = 0.0;
    for i in 0..order {
        let mut term = ys[i];
        for j in 0..order {
            if i != j {
                term *= (x - xs[j]) / (xs[i] - xs[j]);
            }
        }
        total += term;
    }
    total
}

/// Fornberg weights for a one-sided finite-difference approximation of the
/// `deriv`-th derivative at `x0` from samples at `points`.
pub fn fd_weights(x0: f64, points: &[f64], deriv: usize) -> Vec<f64> {
    let n = points.len();
    debug_assert!(deriv < n);
    let mut c = vec![vec![0.0; deriv + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = points[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mi = i.min(deriv);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = points[i] - x0;
        for j in 0..i {
            let c3 = points[i] - points[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mi).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mi).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    (0..n).map(|i| c[i][deriv]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    fn int<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, panels: usize) -> f64 {
        integrate::<_, Infallible>(|x| Ok(f(x)), lo, hi, panels).unwrap()
    }

    #[test]
    fn polynomial_exactness() {
        // GL16 is exact through degree 31
        let v = int(|x| x.powi(20) - 3.0 * x.powi(7) + 2.0, 0.0, 1.0, 1);
        let want = 1.0 / 21.0 - 3.0 / 8.0 + 2.0;
        assert!((v - want).abs() < 1e-15);
    }

    #[test]
    fn smooth_integrand_converges_with_doubling() {
        let a = int(f64::sin, 0.0, 3.0, 2);
        let b = int(f64::sin, 0.0, 3.0, 4);
        assert!((a - b).abs() < 1e-14);
        assert!((b - (1.0 - 3.0f64.cos())).abs() < 1e-14);
    }

    #[test]
    fn lagrange_reproduces_polynomials() {
        let grid: Vec<f64> = (0..=50).map(|i| i as f64 / 50.0).collect();
        let vals: Vec<f64> = grid.iter().map(|&t| t.powi(5) - t + 0.3).collect();
        for &x in &[0.013, 0.5, 0.721, 0.999] {
            let got = lagrange_uniform(&grid, &vals, x, 8);
            let want = x.powi(5) - x + 0.3;
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn fornberg_one_sided_second_derivative() {
        // d2/dx2 exp at 0 from one-sided samples
        let h = 1e-2;
        let pts: Vec<f64> = (0..7).map(|i| i as f64 * h).collect();
        let w = fd_weights(0.0, &pts, 2);
        let val: f64 = pts
            .iter()
            .zip(&w)
            .map(|(&x, &wi)| wi * x.exp())
            .sum();
        assert!((val - 1.0).abs() < 1e-8, "got {val}");
    }
}
