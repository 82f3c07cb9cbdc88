//! Exhaustive reference implementations of the graph predicates, used by
//! the predicate-suite experiment.

use std::collections::BTreeSet;

use crate::graph::{Graph, OccupationVector, Vertex};

/// Calls `f` on every set partition of `items` (restricted growth strings).
pub fn for_each_partition(items: &[Vertex], mut f: impl FnMut(&[Vec<Vertex>]) -> bool) {
    let n = items.len();
    if n == 0 {
        return;
    }
    let mut label = vec![0usize; n];
    loop {
        let d = label.iter().max().unwrap() + 1;
        let mut parts = vec![Vec::new(); d];
        for (i, &l) in label.iter().enumerate() {
            parts[l].push(items[i]);
        }
        if f(&parts) {
            return;
        }
        // next restricted growth string
        let mut i = n - 1;
        loop {
            if i == 0 {
                return;
            }
            let prefix_max = label[..i].iter().copied().max().unwrap();
            if label[i] <= prefix_max {
                label[i] += 1;
                for l in &mut label[i + 1..] {
                    *l = 0;
                }
                break;
            }
            i -= 1;
        }
    }
}

fn partition_fits(g: &Graph, parts: &[Vec<Vertex>]) -> bool {
    let d = parts.len();
    let mut value: Vec<Option<f64>> = vec![None; d * d];
    for (p, pp) in parts.iter().enumerate() {
        for (q, qq) in parts.iter().enumerate() {
            for &i in pp {
                for &j in qq {
                    let a = g.try_propensity(i, j);
                    let must = if i == j {
                        // loops are allowed only on singleton parts
                        if a.is_some() && pp.len() > 1 {
                            return false;
                        }
                        a.is_some()
                    } else {
                        p != q
                    };
                    if a.is_some() != must {
                        return false;
                    }
                    if let Some(a) = a {
                        let slot = &mut value[p * d + q];
                        match slot {
                            None => *slot = Some(a),
                            Some(b) if *b != a => return false,
                            _ => {}
                        }
                    }
                }
            }
        }
    }
    true
}

/// Searches all partitions of `set` for a complete multipartite structure
/// with loops on singleton parts and propensities constant per part pair.
pub fn brute_force_multipartite(g: &Graph, set: &BTreeSet<Vertex>) -> Option<Vec<Vec<Vertex>>> {
    let items: Vec<Vertex> = set.iter().copied().collect();
    let mut found = None;
    for_each_partition(&items, |parts| {
        if partition_fits(g, parts) {
            let mut p = parts.to_vec();
            for part in &mut p {
                part.sort_unstable();
            }
            p.sort();
            found = Some(p);
            true
        } else {
            false
        }
    });
    found
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn determinant(mut a: Vec<Vec<f64>>) -> f64 {
    let n = a.len();
    let mut det = 1.0;
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))
            .unwrap();
        if a[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            a.swap(p, c);
            det = -det;
        }
        det *= a[c][c];
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
        }
    }
    det
}

/// `(P)_x` by definition: every principal minor of `tol I - [a_ij - 2H]`
/// is nonnegative (all eigenvalues `<= tol`), and `N_i - H < -tol` off the
/// support, with `N` and `H` summed pairwise over all vertices.
pub fn brute_force_px(g: &Graph, x: &OccupationVector, tol: f64, vertices: &[Vertex]) -> bool {
    let support: Vec<Vertex> = x.iter().map(|(v, _)| v).collect();
    let a = |i: Vertex, j: Vertex| g.try_propensity(i, j).unwrap_or(0.0);
    let h: f64 = support
        .iter()
        .flat_map(|&i| support.iter().map(move |&j| (i, j)))
        .map(|(i, j)| x.get(i) * a(i, j) * x.get(j))
        .sum();
    let m = support.len();
    for mask in 1u32..(1 << m) {
        let idx: Vec<usize> = (0..m).filter(|k| mask >> k & 1 == 1).collect();
        let minor: Vec<Vec<f64>> = idx
            .iter()
            .map(|&r| {
                idx.iter()
                    .map(|&c| {
                        let diag = if r == c { tol } else { 0.0 };
                        diag - (a(support[r], support[c]) - 2.0 * h)
                    })
                    .collect()
            })
            .collect();
        // a relative slack absorbs rounding in the elimination
        if determinant(minor) < -1e-12 {
            return false;
        }
    }
    vertices
        .iter()
        .filter(|v| x.get(**v) == 0.0)
        .filter(|&&v| support.iter().any(|&j| g.adjacent(v, j)))
        .all(|&v| {
            let n: f64 = support.iter().map(|&j| a(v, j) * x.get(j)).sum();
            n - h < -tol
        })
}

/// Solves `A y = b` by Gaussian elimination; `None` when singular.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-12 {
            return None;
        }
        a.swap(p, c);
        b.swap(p, c);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// The point of the simplex on `support` where every `N_i` is equal, if it
/// exists and is positive.
pub fn interior_equilibrium(g: &Graph, support: &[Vertex]) -> Option<OccupationVector> {
    let m = support.len();
    // unknowns x_1..x_m and the common value c
    let mut a = vec![vec![0.0; m + 1]; m + 1];
    let mut b = vec![0.0; m + 1];
    for (r, &i) in support.iter().enumerate() {
        for (c, &j) in support.iter().enumerate() {
            a[r][c] = g.try_propensity(i, j).unwrap_or(0.0);
        }
        a[r][m] = -1.0;
    }
    for c in 0..m {
        a[m][c] = 1.0;
    }
    b[m] = 1.0;
    let y = solve(a, b)?;
    if y[..m].iter().any(|v| !(*v > 1e-9)) {
        return None;
    }
    let total: f64 = y[..m].iter().sum();
    OccupationVector::new(support.iter().zip(&y).map(|(&v, &x)| (v, x / total))).ok()
}
