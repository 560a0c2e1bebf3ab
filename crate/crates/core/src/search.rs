//! One-dimensional maximization helpers.

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
///
/// Stops once the bracket is narrower than `tol`; returns `(x, f(x))` for
/// the better interior point.
pub fn golden_section_max<F>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Scans `samples + 1` evenly spaced points, then polishes the best one
/// by golden-section search inside its neighbouring cells. Suitable for
/// objectives that are smooth but not globally unimodal.
pub fn bracketed_max<F>(mut f: F, lo: f64, hi: f64, samples: usize, tol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let samples = samples.max(2);
    let step = (hi - lo) / samples as f64;
    let mut best = (lo, f(lo));
    for i in 1..=samples {
        let x = if i == samples { hi } else { lo + step * i as f64 };
        let fx = f(x);
        if fx > best.1 {
            best = (x, fx);
        }
    }
    let a = (best.0 - step).max(lo);
    let b = (best.0 + step).min(hi);
    let polished = golden_section_max(&mut f, a, b, tol);
    if polished.1 >= best.1 {
        polished
    } else {
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_parabola_peak() {
        let (x, fx) = golden_section_max(|x| -(x - 0.3) * (x - 0.3) + 2.0, 0.0, 1.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-7);
        assert!((fx - 2.0).abs() < 1e-15);
    }

    #[test]
    fn bracketed_search_skips_side_lobe() {
        // Main peak at 0.2, weaker local peak at 0.9.
        let f = |x: f64| (-(x - 0.2) * (x - 0.2) * 50.0).exp() + 0.5 * (-(x - 0.9) * (x - 0.9) * 400.0).exp();
        let (x, _) = bracketed_max(f, 0.0, 1.0, 50, 1e-10);
        assert!((x - 0.2).abs() < 1e-6);
    }

    #[test]
    fn peak_on_boundary() {
        let (x, _) = bracketed_max(|x| x, 0.0, 1.0, 10, 1e-10);
        assert!((x - 1.0).abs() < 1e-9);
    }
}
