//! Central finite differences with one level of Richardson extrapolation.

/// Default steps per derivative order (orders 1, 2, 3).
pub const STEP_ORDER1: f64 = 1e-5;
pub const STEP_ORDER2: f64 = 1e-4;
pub const STEP_ORDER3: f64 = 5e-3;

pub fn default_step(order: usize) -> f64 {
    match order {
        0 | 1 => STEP_ORDER1,
        2 => STEP_ORDER2,
        _ => STEP_ORDER3,
    }
}

/// Plain central-difference stencil of order 1..=3 for `g(t)` at `t = 0`.
fn stencil(g: &dyn Fn(f64) -> f64, order: usize, h: f64) -> f64 {
    match order {
        1 => (g(h) - g(-h)) / (2.0 * h),
        2 => (g(h) - 2.0 * g(0.0) + g(-h)) / (h * h),
        3 => (g(2.0 * h) - 2.0 * g(h) + 2.0 * g(-h) - g(-2.0 * h)) / (2.0 * h * h * h),
        _ => panic!("finite-difference order must be 1..=3, got {order}"),
    }
}

/// `d^k/dt^k g(t)|_{t=0}` by central differences at steps `h` and `h/2`, combined
/// as `(4 D(h/2) - D(h)) / 3` to cancel the leading `O(h²)` error.
pub fn richardson(g: &dyn Fn(f64) -> f64, order: usize, h: f64) -> f64 {
    let coarse = stencil(g, order, h);
    let fine = stencil(g, order, 0.5 * h);
    (4.0 * fine - coarse) / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn richardson_recovers_polynomial_derivatives() {
        let g = |t: f64| (1.3 + t).powi(4);
        assert!((richardson(&g, 1, STEP_ORDER1) - 4.0 * 1.3_f64.powi(3)).abs() < 1e-9);
        assert!((richardson(&g, 2, STEP_ORDER2) - 12.0 * 1.3_f64.powi(2)).abs() < 1e-6);
        assert!((richardson(&g, 3, STEP_ORDER3) - 24.0 * 1.3).abs() < 1e-6);
    }
}
