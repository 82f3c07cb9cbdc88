use std::collections::{BTreeMap, HashMap};

use num_rational::BigRational;
use proptest::prelude::*;
use sirw::graph::{build_cycle, build_edge_list, build_grid, build_line, Graph, Vertex};
use sirw::rng::SimRng;
use sirw::urns::{exact_colour_sequences, Colour, UrnState};
use sirw::walk::{exact_path_distribution, run, Mode};
use sirw::weights::{rational_to_f64, WeightFunction};

/// Path law by direct recursion over the definition, in floating point and
/// with its own counters.
fn oracle(g: &Graph, w: impl Fn(u64) -> f64 + Copy, x0: Vertex, k: usize, mode: Mode) -> BTreeMap<Vec<Vertex>, f64> {
    fn go(
        g: &Graph,
        w: impl Fn(u64) -> f64 + Copy,
        path: &mut Vec<Vertex>,
        visits: &mut HashMap<Vertex, u64>,
        crossings: &mut HashMap<(Vertex, Vertex), u64>,
        p: f64,
        left: usize,
        mode: Mode,
        out: &mut BTreeMap<Vec<Vertex>, f64>,
    ) {
        if left == 0 {
            out.insert(path.clone(), p);
            return;
        }
        let at = *path.last().unwrap();
        let key = |a: Vertex, b: Vertex| (a.min(b), a.max(b));
        let options: Vec<(Vertex, f64)> = g
            .neighbors(at)
            .map(|nb| {
                let z = match mode {
                    Mode::Vertex => 1 + visits.get(&nb.vertex).copied().unwrap_or(0),
                    Mode::Edge => 1 + crossings.get(&key(at, nb.vertex)).copied().unwrap_or(0),
                };
                (nb.vertex, nb.propensity * w(z))
            })
            .collect();
        let total: f64 = options.iter().map(|o| o.1).sum();
        for (j, a) in options {
            path.push(j);
            *visits.entry(j).or_default() += 1;
            *crossings.entry(key(at, j)).or_default() += 1;
            go(g, w, path, visits, crossings, p * a / total, left - 1, mode, out);
            *crossings.get_mut(&key(at, j)).unwrap() -= 1;
            *visits.get_mut(&j).unwrap() -= 1;
            path.pop();
        }
    }
    let mut out = BTreeMap::new();
    let mut visits = HashMap::from([(x0, 1)]);
    go(g, w, &mut vec![x0], &mut visits, &mut HashMap::new(), 1.0, k, mode, &mut out);
    out
}

fn marginal(law: &BTreeMap<Vec<Vertex>, BigRational>, time: usize, at: Vertex) -> f64 {
    law.iter().filter(|(p, _)| p[time] == at).map(|(_, q)| rational_to_f64(q)).sum()
}

#[test]
fn two_step_laws_on_the_line() {
    let line = build_line(0);
    let vrrw = exact_path_distribution(&line, &WeightFunction::power(0.0, 1.0).unwrap(), 0, 2, Mode::Vertex).unwrap();
    let r = |n: i64, d: i64| BigRational::new(n.into(), d.into());
    assert_eq!(vrrw[&vec![0, 1, 2]], r(1, 6));
    assert_eq!(vrrw[&vec![0, 1, 0]], r(1, 3));
    assert_eq!(vrrw[&vec![0, -1, -2]], r(1, 6));
    assert!((marginal(&vrrw, 2, 2) - 1.0 / 6.0).abs() < 1e-15);
    assert!((marginal(&vrrw, 2, 0) - 2.0 / 3.0).abs() < 1e-15);

    let esirw = exact_path_distribution(&line, &WeightFunction::power(0.0, 1.0).unwrap(), 0, 2, Mode::Edge).unwrap();
    assert!((marginal(&esirw, 2, 0) - 2.0 / 3.0).abs() < 1e-15);
}

#[test]
fn enumeration_matches_recursive_oracle() {
    let triangle = build_edge_list(&[(0, 1, 1.0), (1, 2, 2.0), (0, 2, 3.0)]).unwrap();
    let looped = build_edge_list(&[(0, 0, 1.5), (0, 1, 1.0), (1, 2, 1.0)]).unwrap();
    let graphs = [build_line(0), build_cycle(4).unwrap(), triangle, looped];
    let weights = [(0.0, 1.0), (1.0, 1.0), (0.0, 2.0), (0.5, -1.0), (0.0, 0.0)];
    for g in &graphs {
        for &(d, r) in &weights {
            let w = WeightFunction::power(d, r).unwrap();
            for mode in [Mode::Vertex, Mode::Edge] {
                let ours = exact_path_distribution(g, &w, 0, 6, mode).unwrap();
                let theirs = oracle(g, |n| (d + n as f64).powf(r), 0, 6, mode);
                assert_eq!(ours.len(), theirs.len());
                let total: BigRational = ours.values().sum();
                assert_eq!(total, BigRational::from_integer(1.into()));
                for (path, p) in &ours {
                    let q = theirs[path];
                    assert!((rational_to_f64(p) - q).abs() < 1e-12, "{path:?}: {p} vs {q}");
                }
            }
        }
    }
}

#[test]
fn monte_carlo_prefixes_within_four_sigma() {
    let line = build_line(0);
    let w = WeightFunction::power(0.0, 1.0).unwrap();
    let reps = 100_000u64;
    for mode in [Mode::Vertex, Mode::Edge] {
        let exact = exact_path_distribution(&line, &w, 0, 4, mode).unwrap();
        let mut counts: BTreeMap<Vec<Vertex>, u64> = BTreeMap::new();
        for seed in 0..reps {
            let t = run(&line, &w, 0, 4, mode, SimRng::from_seed(seed), &mut []).unwrap();
            *counts.entry(t.positions).or_default() += 1;
        }
        assert!(counts.keys().all(|k| exact.contains_key(k)));
        for (path, p) in &exact {
            let p = rational_to_f64(p);
            let got = counts.get(path).copied().unwrap_or(0) as f64 / reps as f64;
            let sigma = (p * (1.0 - p) / reps as f64).sqrt();
            assert!((got - p).abs() < 4.0 * sigma, "{mode:?} {path:?}: {got} vs {p}");
        }
    }
}

#[test]
fn three_vertex_path_at_even_times_is_the_w_urn() {
    let path = build_edge_list(&[(-1, 0, 1.0), (0, 1, 1.0)]).unwrap();
    for (d, r) in [(0.0, 1.0), (0.0, 2.0), (1.0, 1.0), (0.5, -1.0)] {
        let w = WeightFunction::power(d, r).unwrap();
        let k = 5;
        let walk = exact_path_distribution(&path, &w, 0, 2 * k, Mode::Vertex).unwrap();
        let mut folded: BTreeMap<Vec<Colour>, BigRational> = BTreeMap::new();
        for (p, q) in walk {
            let colours = (0..k).map(|i| if p[2 * i + 1] == 1 { Colour::Plus } else { Colour::Minus }).collect();
            *folded.entry(colours).or_insert_with(|| BigRational::from_integer(0.into())) += q;
        }
        let urn = exact_colour_sequences(&w, &UrnState::new(1, 1, 1.0, 1.0).unwrap(), k).unwrap();
        assert_eq!(folded, urn);
    }
}

#[test]
fn constant_weight_is_simple_random_walk() {
    let line = build_line(0);
    let w = WeightFunction::power(0.0, 0.0).unwrap();
    let reps = 20_000;
    let right = (0..reps)
        .filter(|&s| run(&line, &w, 0, 1, Mode::Vertex, SimRng::from_seed(s), &mut []).unwrap().positions[1] == 1)
        .count() as f64
        / reps as f64;
    assert!((right - 0.5).abs() < 4.0 * (0.25f64 / reps as f64).sqrt());
}

#[test]
fn vrrw_stays_in_a_small_window() {
    let line = build_line(0);
    let w = WeightFunction::power(0.0, 1.0).unwrap();
    for seed in 0..100 {
        let t = run(&line, &w, 0, 10_000, Mode::Vertex, SimRng::from_seed(seed), &mut []).unwrap();
        let lo = t.positions.iter().min().unwrap();
        let hi = t.positions.iter().max().unwrap();
        assert!(hi - lo + 1 < 100, "seed {seed}: range {lo}..{hi}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn counters_are_conserved(
        seed in any::<u64>(),
        delta in 0.0f64..2.0,
        rho in -1.0f64..3.0,
        n in 0u64..2000,
        which in 0usize..4,
        edge in any::<bool>(),
    ) {
        let g = match which {
            0 => build_line(0),
            1 => build_cycle(5).unwrap(),
            2 => build_grid(),
            _ => build_edge_list(&[(0, 0, 1.0), (0, 1, 2.0), (1, 2, 1.0), (2, 0, 0.5)]).unwrap(),
        };
        let w = WeightFunction::power(delta, rho).unwrap();
        let mode = if edge { Mode::Edge } else { Mode::Vertex };
        let t = run(&g, &w, 0, n, mode, SimRng::from_seed(seed), &mut []).unwrap();
        prop_assert_eq!(t.positions.len() as u64, n + 1);
        prop_assert!(t.is_path_in(&g));
        prop_assert!(t.final_state.conservation_holds());
        let again = run(&g, &w, 0, n, mode, SimRng::from_seed(seed), &mut []).unwrap();
        prop_assert_eq!(again, t);
    }
}
