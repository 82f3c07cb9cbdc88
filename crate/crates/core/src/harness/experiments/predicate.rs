use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::Result;
use crate::graph::{
    build_edge_list, check_px, is_complete_d_partite_with_loops, Graph, OccupationVector, Vertex,
    DEFAULT_PREDICATE_TOL,
};
use crate::harness::oracle::{brute_force_multipartite, brute_force_px, interior_equilibrium};
use crate::harness::{Ctx, Outcome, Relation, Table};
use crate::rng::SimRng;

pub(crate) const THRESHOLDS: &[(&str, Relation, f64)] = &[
    ("px_disagreements", Relation::Eq, 0.0),
    ("recognizer_disagreements", Relation::Eq, 0.0),
    ("descr_violations", Relation::Eq, 0.0),
];

const MAX_VERTICES: u64 = 8;

fn below(rng: &mut SimRng, n: u64) -> u64 {
    (rng.uniform() * n as f64) as u64
}

fn coin(rng: &mut SimRng, p: f64) -> bool {
    rng.uniform() < p
}

fn propensity(rng: &mut SimRng) -> f64 {
    if coin(rng, 0.25) {
        2.0
    } else {
        1.0
    }
}

fn random_graph(rng: &mut SimRng) -> Result<Graph> {
    let n = 2 + below(rng, MAX_VERTICES - 1) as Vertex;
    let p = [0.3, 0.6, 0.9][below(rng, 3) as usize];
    let mut edges = Vec::new();
    for i in 0..n {
        if coin(rng, 0.15) {
            edges.push((i, i, propensity(rng)));
        }
        for j in i + 1..n {
            if coin(rng, p) {
                edges.push((i, j, propensity(rng)));
            }
        }
    }
    if edges.is_empty() {
        edges.push((0, 1, 1.0));
    }
    build_edge_list(&edges)
}

/// Complete multipartite core on at most eight vertices, with constant
/// propensities per part pair, loops on some singleton parts, and a few
/// extra vertices hanging off it.
fn random_multipartite(rng: &mut SimRng) -> Result<(Graph, Vec<Vertex>)> {
    let d = 2 + below(rng, 3) as usize;
    let core = d as u64 + below(rng, MAX_VERTICES - d as u64 + 1);
    let mut part_of: Vec<usize> = (0..d).collect();
    for _ in d as u64..core {
        part_of.push(below(rng, d as u64) as usize);
    }
    let mut pair = vec![vec![0.0; d]; d];
    for p in 0..d {
        for q in p..d {
            let a = propensity(rng);
            pair[p][q] = a;
            pair[q][p] = a;
        }
    }
    let mut edges = Vec::new();
    let core_vertices: Vec<Vertex> = (0..core as Vertex).collect();
    for (i, &pi) in part_of.iter().enumerate() {
        let singleton = part_of.iter().filter(|&&p| p == pi).count() == 1;
        if singleton && coin(rng, 0.5) {
            edges.push((i as Vertex, i as Vertex, pair[pi][pi]));
        }
        for (j, &pj) in part_of.iter().enumerate().skip(i + 1) {
            if pi != pj {
                edges.push((i as Vertex, j as Vertex, pair[pi][pj]));
            }
        }
    }
    let extra = below(rng, MAX_VERTICES - core + 1).min(2);
    for e in 0..extra {
        let v = (core + e) as Vertex;
        let mut any = false;
        for &u in &core_vertices {
            if coin(rng, 0.4) {
                edges.push((v, u, propensity(rng)));
                any = true;
            }
        }
        if !any {
            edges.push((v, below(rng, core) as Vertex, 1.0));
        }
    }
    Ok((build_edge_list(&edges)?, core_vertices))
}

fn random_subset(rng: &mut SimRng, vs: &[Vertex]) -> Vec<Vertex> {
    let mut s: Vec<Vertex> = vs.iter().copied().filter(|_| coin(rng, 0.5)).collect();
    if s.is_empty() {
        s.push(vs[below(rng, vs.len() as u64) as usize]);
    }
    s
}

fn uniform_on(support: &[Vertex]) -> Result<OccupationVector> {
    OccupationVector::normalized(support.iter().map(|&v| (v, 1.0)))
}

#[derive(Serialize, Default)]
struct Instance {
    kind: u64,
    vertices: usize,
    support: usize,
    accepted: bool,
    px_agree: bool,
    recognizer_agree: bool,
    descr_ok: bool,
}

fn recognizers_agree(g: &Graph, set: &[Vertex]) -> bool {
    let s: BTreeSet<Vertex> = set.iter().copied().collect();
    is_complete_d_partite_with_loops(g, &s) == brute_force_multipartite(g, &s)
}

pub(crate) fn run(ctx: &Ctx) -> Result<Outcome> {
    let cfg = ctx.config;
    let tol = DEFAULT_PREDICATE_TOL;
    let instances = ctx.replicate("instance", cfg.replications, |rep, key| {
        let mut rng = key.rng();
        let kind = rep % 3;
        let (g, x, extra_set) = match kind {
            0 => {
                let g = random_graph(&mut rng)?;
                let support = random_subset(&mut rng, g.vertices().unwrap());
                let x = OccupationVector::normalized(support.iter().map(|&v| (v, 0.05 + rng.uniform())))?;
                (g, x, None)
            }
            1 => {
                let g = random_graph(&mut rng)?;
                let support = random_subset(&mut rng, g.vertices().unwrap());
                let x = match interior_equilibrium(&g, &support) {
                    Some(x) => x,
                    None => uniform_on(&support)?,
                };
                (g, x, None)
            }
            _ => {
                let (g, core) = random_multipartite(&mut rng)?;
                let x = match interior_equilibrium(&g, &core) {
                    Some(x) => x,
                    None => uniform_on(&core)?,
                };
                (g, x, Some(core))
            }
        };
        let vertices = g.vertices().unwrap().to_vec();
        let support: Vec<Vertex> = x.iter().map(|(v, _)| v).collect();
        let accepted = check_px(&g, &x, tol);
        let px_agree = accepted == brute_force_px(&g, &x, tol, &vertices);
        let other = random_subset(&mut rng, &vertices);
        let recognizer_agree = recognizers_agree(&g, &support)
            && recognizers_agree(&g, &other)
            && extra_set.as_deref().map_or(true, |s| recognizers_agree(&g, s));
        let descr_ok = !accepted || is_complete_d_partite_with_loops(&g, &x.support()).is_some();
        Ok(Instance {
            kind,
            vertices: vertices.len(),
            support: support.len(),
            accepted,
            px_agree,
            recognizer_agree,
            descr_ok,
        })
    })?;

    let count = |f: &dyn Fn(&Instance) -> bool| instances.iter().filter(|i| f(i)).count();
    let mut out = Outcome::default();
    out.checks.push(ctx.check("px_disagreements", count(&|i| !i.px_agree) as f64));
    out.checks
        .push(ctx.check("recognizer_disagreements", count(&|i| !i.recognizer_agree) as f64));
    out.checks.push(ctx.check("descr_violations", count(&|i| !i.descr_ok) as f64));
    out.aggregate("accepted_instances", count(&|i| i.accepted));
    out.aggregate(
        "accepted_by_kind",
        (0..3).map(|k| count(&|i| i.kind == k && i.accepted)).collect::<Vec<_>>(),
    );
    let mut t = Table::new(
        "predicate_suite",
        &["replication", "kind", "vertices", "support", "accepted", "px_agree", "recognizer_agree", "descr_ok"],
    );
    for (r, i) in instances.iter().enumerate() {
        t.push(vec![
            r.to_string(),
            i.kind.to_string(),
            i.vertices.to_string(),
            i.support.to_string(),
            i.accepted.to_string(),
            i.px_agree.to_string(),
            i.recognizer_agree.to_string(),
            i.descr_ok.to_string(),
        ]);
    }
    out.tables.push(t);
    Ok(out)
}
