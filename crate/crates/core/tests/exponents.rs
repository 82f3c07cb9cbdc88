use std::sync::OnceLock;

use sirw::diagnostics::{alpha, estimate_asymptotic_range, Side};
use sirw::graph::build_line;
use sirw::rng::StreamKey;
use sirw::walk::{run, Mode};
use sirw::weights::WeightFunction;

const STEPS: u64 = 1_000_000;
const RUNS: u64 = 60;

struct Localized {
    /// `log Z_N(x∓2) / log Z_N(x)`.
    ratios: [f64; 2],
    /// `α_N^∓(x)`.
    alpha: [f64; 2],
    /// `log(Z_N(x∓2) / Z_{N/4}(x∓2)) / log 4`.
    slopes: [f64; 2],
}

/// VRRW runs whose tail range is five sites, centred at `x`.
fn localized() -> &'static [Localized] {
    static RUNS_CACHE: OnceLock<Vec<Localized>> = OnceLock::new();
    RUNS_CACHE.get_or_init(|| {
        let w = WeightFunction::power(0.0, 1.0).unwrap();
        let mut out = Vec::new();
        for r in 0..RUNS {
            let rng = StreamKey::derive(23, "exponents", r, "walk").rng();
            let t = run(&build_line(0), &w, 0, STEPS, Mode::Vertex, rng, &mut []).unwrap();
            let range = estimate_asymptotic_range(&t.positions, 0.5).unwrap();
            if range.len() != 5 {
                continue;
            }
            let x = range.first().unwrap() + 2;
            let s = &t.final_state;
            let z = |v: i64| s.vertex_count(v) as f64;
            let quarter = &t.positions[..=STEPS as usize / 4];
            let zq = |v: i64| 1.0 + quarter.iter().filter(|&&p| p == v).count() as f64;
            let slope = |v: i64| (z(v) / zq(v)).ln() / 4f64.ln();
            out.push(Localized {
                ratios: [z(x - 2).ln() / z(x).ln(), z(x + 2).ln() / z(x).ln()],
                alpha: [alpha(s, x, Side::Minus), alpha(s, x, Side::Plus)],
                slopes: [slope(x - 2), slope(x + 2)],
            });
        }
        out
    })
}

fn share(f: impl Fn(&Localized) -> bool) -> f64 {
    let runs = localized();
    runs.iter().filter(|r| f(r)).count() as f64 / runs.len() as f64
}

#[test]
fn log_ratio_gap_below_a_tenth() {
    let s = share(|r| (0..2).all(|i| (r.ratios[i] - r.alpha[i]).abs() < 0.1));
    eprintln!("{} localized runs, gap < 0.1 in {s:.3}", localized().len());
    assert!(s >= 0.8, "gap < 0.1 in {s:.3} of localized runs");
}

#[test]
fn log_ratio_over_alpha_within_fifteen_percent() {
    let s = share(|r| (0..2).all(|i| (r.ratios[i] / r.alpha[i] - 1.0).abs() < 0.15));
    eprintln!("relative error < 15% in {s:.3}");
    assert!(s >= 0.8, "relative error < 15% in {s:.3} of localized runs");
}

#[test]
fn growth_rate_of_the_busier_outer_site_is_alpha() {
    // the constant in Z(x±2) ~ C n^α cancels in the slope between N/4 and N
    let s = share(|r| {
        let i = if r.alpha[0] >= r.alpha[1] { 0 } else { 1 };
        (r.slopes[i] - r.alpha[i]).abs() < 0.1
    });
    assert!(localized().len() >= 30);
    assert!(s >= 0.8, "slope within 0.1 of α in {s:.3} of localized runs");
}
