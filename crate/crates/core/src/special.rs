//! Special functions needed by the radial convolution formulas.

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SERIES_LIMIT: f64 = 25.0;

/// Exponentially scaled modified Bessel function `e^{-x} I_nu(x)`, nu in {0, 1}, x >= 0.
fn bessel_ie(nu: u32, x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x <= SERIES_LIMIT {
        // I_nu(x) = sum (x/2)^{2k+nu} / (k! (k+nu)!)
        let q = 0.25 * x * x;
        let mut term = if nu == 0 { 1.0 } else { 0.5 * x };
        let mut sum = term;
        let mut k = 1.0;
        while term > 1e-17 * sum {
            term *= q / (k * (k + nu as f64));
            sum += term;
            k += 1.0;
        }
        sum * (-x).exp()
    } else {
        // Hankel asymptotic expansion
        let mu = 4.0 * (nu * nu) as f64;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k: f64 = 1.0;
        loop {
            let next = -term * (mu - (2.0 * k - 1.0).powi(2)) / (k * 8.0 * x);
            if next.abs() >= term.abs() || next.abs() < 1e-17 {
                if next.abs() < term.abs() {
                    sum += next;
                }
                break;
            }
            sum += next;
            term = next;
            k += 1.0;
        }
        sum / (2.0 * std::f64::consts::PI * x).sqrt()
    }
}

pub(crate) fn bessel_i0e(x: f64) -> f64 {
    bessel_ie(0, x)
}

pub(crate) fn bessel_i1e(x: f64) -> f64 {
    bessel_ie(1, x)
}

/// `E1(u) + ln(u)`, finite at u = 0 where it equals `-gamma`.
pub(crate) fn exp_integral_e1_plus_log(u: f64) -> f64 {
    debug_assert!(u >= 0.0);
    if u <= 1.0 {
        // E1(u) = -gamma - ln u + sum_{k>=1} (-1)^{k+1} u^k / (k k!)
        let mut sum = 0.0;
        let mut pow_fact = 1.0;
        let mut k = 1.0;
        loop {
            pow_fact *= u / k;
            let term = pow_fact / k;
            if k as i32 % 2 == 1 {
                sum += term;
            } else {
                sum -= term;
            }
            if term < 1e-17 {
                break;
            }
            k += 1.0;
        }
        -EULER_GAMMA + sum
    } else {
        exp_integral_e1(u) + u.ln()
    }
}

/// Exponential integral `E1(u)` for u > 0.
pub(crate) fn exp_integral_e1(u: f64) -> f64 {
    if u <= 1.0 {
        return exp_integral_e1_plus_log(u) - u.ln();
    }
    // modified Lentz continued fraction
    let tiny = 1e-300;
    let mut b = u + 1.0;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..300 {
        let a = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h * (-u).exp()
}
