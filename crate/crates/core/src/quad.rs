//! Trapezoidal quadrature.
//!
//! For smooth integrands that decay like Gaussians the trapezoid rule on a
//! wide enough interval converges geometrically in the step size, which is
//! all the Gaussian integrals in this crate need.

pub fn trapezoid(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    assert!(intervals > 0);
    let h = (b - a) / intervals as f64;
    let interior: f64 = (1..intervals).map(|i| f(a + i as f64 * h)).sum();
    h * (0.5 * (f(a) + f(b)) + interior)
}

pub fn trapezoid_2d(
    f: impl Fn(f64, f64) -> f64,
    (ax, bx): (f64, f64),
    (ay, by): (f64, f64),
    intervals: usize,
) -> f64 {
    trapezoid(
        |x| trapezoid(|y| f(x, y), ay, by, intervals),
        ax,
        bx,
        intervals,
    )
}
