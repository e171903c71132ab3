//! Small numeric helpers shared by the risk sums and block distributions.

/// Natural log of the gamma function.
pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// log C(n, k), exact 0.0 at the endpoints.
pub fn ln_choose(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    if k == 0 || k == n {
        return 0.0;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// x log x with the 0 log 0 = 0 convention.
pub fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values from an arbitrary-precision evaluation (40 digits),
    // rounded to f64. Tolerance is relative 1e-14 to allow one ulp of slack
    // in the library's Lanczos kernel.
    const LN_GAMMA_TABLE: [(f64, f64); 20] = [
        (0.25, 1.2880225246980775),
        (0.5, 0.57236494292470009),
        (1.0, 0.0),
        (1.5, -0.12078223763524522),
        (2.0, 0.0),
        (3.75, 1.4868155785934171),
        (5.0, 3.1780538303479456),
        (10.25, 13.368023671476046),
        (20.0, 39.339884187199494),
        (50.5, 146.51925549072063),
        (100.0, 359.13420536957540),
        (500.123, 2605.8801392597360),
        (1000.0, 5905.2204232091812),
        (5000.0, 37582.626315685350),
        (10000.75, 82106.625242346438),
        (50000.0, 490984.42327157182),
        (100000.5, 1051293.4654351394),
        (1000000.0, 12815504.569147612),
        (10000000.25, 151180953.39899782),
        (100000000.0, 1742068066.1038347),
    ];

    #[test]
    fn ln_gamma_matches_reference_table() {
        for &(x, want) in &LN_GAMMA_TABLE {
            let got = ln_gamma(x);
            let tol = 4e-15 + want.abs() * 1e-14;
            assert!(
                (got - want).abs() <= tol,
                "ln_gamma({x}) = {got}, want {want}"
            );
        }
    }

    #[test]
    fn ln_choose_small_cases() {
        assert_eq!(ln_choose(5, 0), 0.0);
        assert_eq!(ln_choose(5, 5), 0.0);
        assert!((ln_choose(5, 2) - 10.0_f64.ln()).abs() < 1e-12);
        assert!((ln_choose(52, 5) - 2598960.0_f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn xlogx_zero_convention() {
        assert_eq!(xlogx(0.0), 0.0);
        assert!((xlogx(1.0)).abs() < 1e-15);
        assert!((xlogx(0.5) + 0.5 * 2.0_f64.ln()).abs() < 1e-15);
    }
}
