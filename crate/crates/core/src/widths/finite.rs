use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::sum::PowerSum;

fn check_prefix(prefix: &[f64], n: usize) -> Result<()> {
    if n >= prefix.len() {
        return Err(Error::invalid("n", format!("n = {n} must be below the prefix length {}", prefix.len())));
    }
    for (i, &v) in prefix.iter().enumerate() {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::invalid("lambda", format!("entry {} = {v} is not positive", i + 1)));
        }
        if i > 0 && v > prefix[i - 1] {
            return Err(Error::invalid("lambda", format!("entry {} increases", i + 1)));
        }
    }
    Ok(())
}

/// `σ_n` of the truncated operator `T_λ^M: ℓ_p^M → ℓ_q^M`, `M = prefix.len()`.
///
/// For `p ≤ q` this is the maximum over `n < m ≤ M` of
/// `(m-n)^{1/q} (Σ_{k≤m} λ_k^{-p})^{-1/p}`. For `q < p` the index
/// `n_*` is capped at `M` and the tail sum stops at `M`.
pub fn sigma_finite(p: Exponent, q: Exponent, prefix: &[f64], n: usize) -> Result<f64> {
    check_prefix(prefix, n)?;
    let big_m = prefix.len();
    if p.is_infinite() {
        if q.is_infinite() {
            return Ok(prefix[n]);
        }
        let mut acc = PowerSum::new();
        for &v in &prefix[n..] {
            acc.push_pow(v, v.ln(), q.value());
        }
        return Ok((acc.ln_value() / q.value()).exp());
    }
    let pv = p.value();
    let mut acc = PowerSum::new();
    for &v in &prefix[..n] {
        acc.push_pow(v, v.ln(), -pv);
    }
    if q.is_infinite() || pv <= q.value() {
        let mut best = f64::NEG_INFINITY;
        for m in n + 1..=big_m {
            let v = prefix[m - 1];
            acc.push_pow(v, v.ln(), -pv);
            let ln_r = q.recip() * ((m - n) as f64).ln() - acc.ln_value() / pv;
            best = best.max(ln_r);
        }
        return Ok(best.exp());
    }
    let qv = q.value();
    let alpha = pv * qv / (pv - qv);
    let mut star = n;
    let mut ln_s_star = f64::NEG_INFINITY;
    for m in n + 1..=big_m {
        let v = prefix[m - 1];
        acc.push_pow(v, v.ln(), -pv);
        let ln_s = acc.ln_value();
        if ((m - n) as f64).ln() - pv * v.ln() > ln_s + 1e-15 {
            break;
        }
        star = m;
        ln_s_star = ln_s;
    }
    let mut total = PowerSum::new();
    total.push_ln(pv / (pv - qv) * ((star - n) as f64).ln() - qv / (pv - qv) * ln_s_star);
    for &v in &prefix[star..] {
        total.push_pow(v, v.ln(), alpha);
    }
    Ok((total.ln_value() / alpha).exp())
}
