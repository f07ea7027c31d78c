//! Small numeric helpers shared across modules: slack budgets, log-space
//! factorials, compensated summation and grid constructors.

use statrs::function::gamma::ln_gamma;

/// Relative float-noise slack applied to every inequality margin.
pub const CHECK_RELATIVE: f64 = 1e-9;

/// `ε_check` for a margin whose operands have magnitude `scale`.
pub fn eps_check(scale: f64) -> f64 {
    CHECK_RELATIVE * (1.0 + scale.abs())
}

/// `ln k!`, exact summation up to 20 and log-Γ beyond.
pub fn ln_factorial(k: u64) -> f64 {
    if k <= 20 {
        (2..=k).map(|i| i as f64).product::<f64>().ln()
    } else {
        ln_gamma(k as f64 + 1.0)
    }
}

/// `ln α!` for a multi-index, `α! = α_1! ⋯ α_n!`.
pub fn ln_multi_factorial(alpha: &[u32]) -> f64 {
    alpha.iter().map(|&a| ln_factorial(a as u64)).sum()
}

/// `ln C(n, k)`.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// `t ln t` with the continuous extension `0 ln 0 = 0`.
pub fn xlogx(t: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t * t.ln()
    }
}

/// `ln(e^a + e^b)` without overflow.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Fixed-order pairwise sum of complex values.
pub fn pairwise_sum(values: &[num_complex::Complex64]) -> num_complex::Complex64 {
    match values.len() {
        0 => num_complex::Complex64::new(0.0, 0.0),
        1 => values[0],
        n if n <= 8 => values.iter().fold(num_complex::Complex64::new(0.0, 0.0), |a, b| a + b),
        n => {
            let (l, r) = values.split_at(n / 2);
            pairwise_sum(l) + pairwise_sum(r)
        }
    }
}

/// `n` points geometrically spaced on `[lo, hi]`, both ends included.
pub fn geometric_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let ratio = (hi / lo).ln() / (n - 1) as f64;
    let mut out: Vec<f64> = (0..n).map(|i| lo * (ratio * i as f64).exp()).collect();
    out[n - 1] = hi;
    out
}

/// `n` points uniformly spaced on `[lo, hi]`, both ends included.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(hi > lo && n >= 2);
    let h = (hi - lo) / (n - 1) as f64;
    let mut out: Vec<f64> = (0..n).map(|i| lo + h * i as f64).collect();
    out[n - 1] = hi;
    out
}

/// Default verification grid: `x = 0` followed by 2047 geometric points on
/// `[1e-3, 1e3]`.
pub fn default_verification_grid() -> Vec<f64> {
    let mut g = vec![0.0];
    g.extend(geometric_grid(1e-3, 1e3, 2047));
    g
}

/// All multi-indices of `n` components with `|α| = k`, graded lexicographic
/// order (first component largest first).
pub fn multi_indices_of_order(n: usize, k: u32) -> Vec<Vec<u32>> {
    fn rec(n: usize, k: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if n == 1 {
            prefix.push(k);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in (0..=k).rev() {
            prefix.push(first);
            rec(n - 1, k - first, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    rec(n, k, &mut Vec::with_capacity(n), &mut out);
    out
}

/// All multi-indices with `|α| ≤ k_max`, shell by shell.
pub fn multi_indices_up_to(n: usize, k_max: u32) -> Vec<Vec<u32>> {
    (0..=k_max).flat_map(|k| multi_indices_of_order(n, k)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorials_match_products() {
        assert_eq!(ln_factorial(0), 0.0);
        assert!((ln_factorial(5) - 120f64.ln()).abs() < 1e-15);
        let direct: f64 = (1..=30).map(|i| (i as f64).ln()).sum();
        assert!((ln_factorial(30) - direct).abs() < 1e-12);
    }

    #[test]
    fn multi_index_counts() {
        // C(k+n-1, n-1)
        assert_eq!(multi_indices_of_order(2, 4).len(), 5);
        assert_eq!(multi_indices_of_order(3, 3).len(), 10);
        assert_eq!(multi_indices_up_to(2, 3).len(), 10);
        assert_eq!(multi_indices_of_order(2, 2), vec![vec![2, 0], vec![1, 1], vec![0, 2]]);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::default();
        s.add(1e16);
        s.add(1.0);
        s.add(-1e16);
        assert_eq!(s.value(), 1.0);
    }

    #[test]
    fn default_grid_shape() {
        let g = default_verification_grid();
        assert_eq!(g.len(), 2048);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[1], 1e-3);
        assert_eq!(*g.last().unwrap(), 1e3);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn log_add_exp_is_stable() {
        assert!((log_add_exp(1000.0, 1000.0) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_add_exp(f64::NEG_INFINITY, 3.0), 3.0);
    }
}
