//! Thin wrappers over `libm` so the numerical code reads like `std`.

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

/// Relative-or-absolute closeness with unit floor on the scale.
#[inline]
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    let scale = 1.0f64.max(abs(a)).max(abs(b));
    abs(a - b) <= tol * scale
}

/// Gauss-Legendre nodes and weights on [-1, 1], five points.
pub(crate) const GL5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

/// Integrates `f` over `[a, b]` with a composite five-point rule.
pub(crate) fn gauss_legendre(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let panels = panels.max(1);
    let w = (b - a) / panels as f64;
    let mut acc = 0.0;
    for k in 0..panels {
        let lo = a + w * k as f64;
        let mid = lo + 0.5 * w;
        let half = 0.5 * w;
        for &(x, wt) in GL5.iter() {
            acc += wt * half * f(mid + half * x);
        }
    }
    acc
}
