//! Numerical checks of the criterion's asymptotics.

use ebic_core::ebic::{ceil_power, chi2_tail_ratio, ebic_score, gamma_sc, gamma_threshold, lemma1_ratio};

pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

fn binomial_ratio(delta: f64, label: &str) -> Check {
    let ratios: Vec<f64> = [6u32, 9, 12, 15]
        .iter()
        .map(|&m| {
            let p = 10u64.pow(m);
            lemma1_ratio(p, ceil_power(p, delta)).unwrap_or(f64::NAN)
        })
        .collect();
    let decreasing = ratios.windows(2).all(|w| w[1] < w[0]);
    let last = ratios[ratios.len() - 1];
    Check {
        name: format!("binomial log-ratio, delta = {label}"),
        pass: decreasing && last < 1.06,
        detail: format!(
            "p = 1e6, 1e9, 1e12, 1e15: {}",
            ratios.iter().map(|r| format!("{r:.5}")).collect::<Vec<_>>().join(", ")
        ),
    }
}

fn chi2() -> Check {
    let mut worst = 0.0f64;
    let mut shrinks = true;
    for k in 1..=20 {
        let e800 = (chi2_tail_ratio(k, 800.0) - 1.0).abs();
        let e1600 = (chi2_tail_ratio(k, 1600.0) - 1.0).abs();
        // k = 2 is exact (the tail is e^{-m/2}), so there is no error to shrink.
        shrinks &= e1600 < e800 || (k == 2 && e800 == 0.0 && e1600 == 0.0);
        worst = worst.max(e800);
    }
    Check {
        name: "chi-square tail approximation, k <= 20".into(),
        pass: worst < 0.05 && shrinks,
        detail: format!("max |ratio - 1| at m = 800: {worst:.4}; smaller at m = 1600 for every k: {shrinks}"),
    }
}

fn thresholds() -> Check {
    let settings = [(100usize, 150usize), (200, 595), (500, 6655), (1000, 74622)];
    let mut pass = true;
    let mut parts = Vec::new();
    for (n, p) in settings {
        let bound = gamma_threshold(n, p, 0.0).unwrap_or(f64::NAN);
        let closed = 1.0 - (n as f64).ln() / (2.0 * (p as f64).ln());
        let sc = gamma_sc(n, p, 4.0);
        pass &= bound == closed && sc > bound;
        parts.push(format!("n={n}: bound {bound:.4}, SC {sc:.4}"));
    }
    let rss = 37.5;
    let bic = 100.0 * (rss / 100.0f64).ln() + 4.0 * 100.0f64.ln();
    pass &= ebic_score(rss, 100, 150, 4, 0.0).map(|v| v == bic).unwrap_or(false);
    Check {
        name: "gamma lower bound at delta = 0".into(),
        pass,
        detail: parts.join("; "),
    }
}

pub fn run_checks() -> Vec<Check> {
    vec![
        binomial_ratio(0.1, "0.1"),
        binomial_ratio(1.0 / 3.0, "1/3"),
        binomial_ratio(0.5, "0.5"),
        chi2(),
        thresholds(),
    ]
}
