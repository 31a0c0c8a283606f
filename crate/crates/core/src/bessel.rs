//! Modified Bessel function of the first kind, order zero, in the log
//! domain.
//!
//! The Rician power likelihood needs `I0(x)` for arguments up to a few
//! thousand, where `I0` itself overflows f64. All likelihood code therefore
//! works with `ln I0(x)`.

/// Crossover between the power series and the asymptotic expansion.
const SERIES_LIMIT: f64 = 20.0;

/// Natural log of the modified Bessel function `I0(x)`.
///
/// Power series for `|x| <= 20`, asymptotic expansion beyond. Relative
/// accuracy is better than 1e-12 over the whole range, comfortably inside
/// the 1e-9 needed by the likelihood evaluations.
pub fn log_bessel_i0(x: f64) -> f64 {
    let x = x.abs();
    if x <= SERIES_LIMIT {
        series_i0(x).ln()
    } else {
        // I0(x) ~ e^x / sqrt(2 pi x) * sum_k a_k, a_0 = 1,
        // a_{k+1} = a_k * (2k+1)^2 / (8 x (k+1))
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 0..30u32 {
            let kf = f64::from(k);
            term *= (2.0 * kf + 1.0) * (2.0 * kf + 1.0) / (8.0 * x * (kf + 1.0));
            sum += term;
            if term < 1e-18 * sum {
                break;
            }
        }
        x - 0.5 * (2.0 * std::f64::consts::PI * x).ln() + sum.ln()
    }
}

/// `I0(x)` by its power series; valid for moderate `x` (all terms positive,
/// no cancellation).
fn series_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    while term > 1e-18 * sum {
        term *= q / (k * k);
        sum += term;
        k += 1.0;
    }
    sum
}

/// `I0(x)` evaluated directly. Overflows for `x` beyond roughly 709; used
/// by tests as the direct-evaluation reference and by callers that know
/// their argument is small.
pub fn bessel_i0(x: f64) -> f64 {
    log_bessel_i0(x).exp()
}
