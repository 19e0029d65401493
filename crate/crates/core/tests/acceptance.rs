//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_bigint::BigUint;

use howson::bounds::{boho_bound, hnc_bound, shnil_bound, showvf_beats_zak, showvf_bound};
use howson::chains::{cefr_chain, fix_stage_exponent, fix_chain, stabilization, Stabilization};
use howson::dynamics::{direct_period, periodic_search, Endomorphism, SearchBudget};
use howson::experiment::{confluence_suite, hnc_suite, rsa_suite, showvf_suite, ExperimentConfig};
use howson::extension::{ExtensionData, ExtensionElement, FiniteGroupTable};
use howson::vfsub::{close_subgroup, intersection_report, product_member, zakharov_n, ZakharovConfig};
use howson::{Alphabet, StallingsAutomaton};

type Outcome = Result<(), String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, message: impl FnOnce() -> String) -> Outcome {
    if cond {
        Ok(())
    } else {
        Err(message())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Outcome {
    ensure(elapsed < limit, || format!("took {elapsed:?}, limit {limit:?}"))
}

fn worked_example() -> Outcome {
    let start = Instant::now();
    let data = ExtensionData::direct_product(Alphabet::standard(3), FiniteGroupTable::cyclic(2));
    let el = |s: &str| data.parse_element(s).map_err(|e| e.to_string());
    let h1 = close_subgroup(&data, &[el("(a, 1)")?, el("(bc, 1)")?]).map_err(|e| e.to_string())?;
    let h2 = close_subgroup(&data, &[el("(ab, 1)")?, el("(c, 0)")?]).map_err(|e| e.to_string())?;
    let config = ZakharovConfig::default();
    let report = intersection_report(&h1, &h2, &config).map_err(|e| e.to_string())?;
    ensure(report.intersection.generators == ["(a b c a b c, 0)"], || {
        format!("intersection generators {:?}", report.intersection.generators)
    })?;
    ensure(report.exact_rank == Some(1), || format!("exact rank {:?}", report.exact_rank))?;
    ensure(report.layers.len() == 1 && !report.layers[0].nonempty, || "layer q=1 should be empty".into())?;
    ensure(report.bounds.showvf.as_deref() == Some("6"), || format!("showvf {:?}", report.bounds.showvf))?;
    ensure(report.bounds.zakharov_second.as_deref() == Some("13"), || {
        format!("second Zakharov bound {:?}", report.bounds.zakharov_second)
    })?;
    let z = zakharov_n(&h1, &h2, &config).map_err(|e| e.to_string())?;
    let p = vec![ExtensionElement::identity(), el("(1, 1)")?];
    let hit = z.subgroups.iter().find(|s| s.elements == p).map(|s| s.in_product);
    ensure(hit == Some(2), || format!("|P ∩ H1H2| for P = {{1}} x C2 is {hit:?}"))?;
    ensure(product_member(&h1, &h2, &el("(1, 1)")?).map_err(|e| e.to_string())?, || {
        "(1, 1) not found in H1H2".into()
    })?;
    within(start.elapsed(), Duration::from_secs(1))
}

fn free_intersection() -> Outcome {
    let start = Instant::now();
    let al = Alphabet::standard(3);
    let w = |s: &str| al.parse(s).unwrap();
    let h = StallingsAutomaton::from_generators(&al, &[w("a"), w("bc")]).map_err(|e| e.to_string())?;
    let k = StallingsAutomaton::from_generators(&al, &[w("ab"), w("c")]).map_err(|e| e.to_string())?;
    let basis = h.intersect(&k).map_err(|e| e.to_string())?.basis();
    ensure(basis == [w("abc")] || basis == [w("abc").inv()], || format!("basis {basis:?}"))?;
    within(start.elapsed(), Duration::from_millis(100))
}

fn cefr_chains() -> Outcome {
    for n in 2..=8 {
        let start = Instant::now();
        let chain = cefr_chain(n).map_err(|e| e.to_string())?;
        ensure(chain.len() == n, || format!("n={n}: {} stages", chain.len()))?;
        ensure(chain.ranks().iter().all(|&r| r == 4), || format!("n={n}: ranks {:?}", chain.ranks()))?;
        let s1 = &chain.stages()[0].automaton;
        ensure((s1.vertex_count(), s1.edge_count()) == (3, 6), || {
            format!("S(H1) has (v, e) = ({}, {})", s1.vertex_count(), s1.edge_count())
        })?;
        for (i, pair) in chain.stages().windows(2).enumerate() {
            let strict = pair[1]
                .automaton
                .basis()
                .iter()
                .any(|g| !pair[0].automaton.member(g).unwrap_or(true));
            ensure(strict, || format!("n={n}: stage {} equals stage {}", i + 1, i + 2))?;
        }
        ensure(stabilization(&chain) == Ok(Stabilization::NotWithin(n)), || format!("n={n}: chain stabilizes"))?;
        within(start.elapsed(), Duration::from_secs(1)).map_err(|e| format!("n={n}: {e}"))?;
    }
    Ok(())
}

fn finite_index_ranks() -> Outcome {
    for k in [2, 3] {
        let report = rsa_suite(&ExperimentConfig::new(2024 + k as u64, 100, k, 4)).map_err(|e| e.to_string())?;
        ensure(report.violations == 0, || format!("F{k}: {} violations", report.violations))?;
        ensure(report.records.len() == 100, || format!("F{k}: {} trials", report.records.len()))?;
    }
    Ok(())
}

fn hnc_property() -> Outcome {
    let start = Instant::now();
    let report = hnc_suite(&ExperimentConfig::new(1, 500, 2, 6)).map_err(|e| e.to_string())?;
    ensure(report.violations == 0, || format!("{} violations", report.violations))?;
    within(start.elapsed(), Duration::from_secs(30))
}

fn swap_extension() -> ExtensionData {
    ExtensionData::parse("alphabet a b\ncyclic 2\naction 1: a -> b, b -> a\n").expect("valid extension")
}

fn showvf_property() -> Outcome {
    let start = Instant::now();
    let config = ExperimentConfig::new(2, 200, 2, 4);
    let direct = ExtensionData::direct_product(Alphabet::standard(2), FiniteGroupTable::cyclic(2));
    for (name, data) in [("F2 x C2", direct), ("F2 x| C2", swap_extension())] {
        let report = showvf_suite(&config, &data).map_err(|e| e.to_string())?;
        let bad = report.records.iter().filter(|r| r.showvf.is_none() || !r.pass).count();
        ensure(bad == 0, || format!("{name}: {bad} violations"))?;
    }
    within(start.elapsed(), Duration::from_secs(60))
}

fn closed_subgroup_ranks() -> Outcome {
    let free = hnc_suite(&ExperimentConfig::new(1, 500, 2, 6)).map_err(|e| e.to_string())?;
    let bad = free.records.iter().filter(|r| !r.newrankfi_ok).count();
    ensure(bad == 0, || format!("free suite: {bad} violations"))?;
    let config = ExperimentConfig::new(2, 200, 2, 4);
    let direct = ExtensionData::direct_product(Alphabet::standard(2), FiniteGroupTable::cyclic(2));
    for data in [direct, swap_extension()] {
        let report = showvf_suite(&config, &data).map_err(|e| e.to_string())?;
        for r in &report.records {
            for j in 0..2 {
                let bound = BigUint::from(2 * (r.generators[j] - 1) + 1);
                ensure(BigUint::from(r.k_ranks[j]) <= bound, || {
                    format!("trial {}: rk(K) = {} > {bound}", r.trial, r.k_ranks[j])
                })?;
            }
        }
    }
    Ok(())
}

fn bounds_grid() -> Outcome {
    for n1 in 2..=6u64 {
        for n2 in 2..=6u64 {
            for m in 2..=6u64 {
                let composed = boho_bound(hnc_bound, n1, n2, m).map_err(|e| e.to_string())?;
                let direct = showvf_bound(n1, n2, m).map_err(|e| e.to_string())?;
                ensure(composed == direct, || format!("({n1},{n2},{m}): {composed} != {direct}"))?;
                let beats = showvf_beats_zak(n1, n2, m).map_err(|e| e.to_string())?;
                ensure(beats == (m < 6), || format!("({n1},{n2},{m}): comparison says {beats}"))?;
            }
        }
    }
    for p in 2..=5u64 {
        for m in 1..=3u64 {
            for class in 1..=4u32 {
                let k = BigUint::from(m * (p - 1) + 1);
                let sum: BigUint = (1..=class).map(|i| k.pow(i)).sum();
                let expected = sum + m - 1u32;
                for n2 in [p, p + 2] {
                    let got = shnil_bound(p, n2, m, class as u64).map_err(|e| e.to_string())?;
                    ensure(got == expected, || format!("(p={p},m={m},n={class}): {got} != {expected}"))?;
                }
            }
        }
    }
    Ok(())
}

fn confluence() -> Outcome {
    let report = confluence_suite(&ExperimentConfig::new(3, 200, 3, 6), 5).map_err(|e| e.to_string())?;
    ensure(report.violations == 0, || format!("{} generator sets fold differently", report.violations))
}

fn dynamics() -> Outcome {
    let start = Instant::now();
    let al = Alphabet::standard(2);
    let budget = SearchBudget::new(8);
    let k_max = 6;
    let maps = [("swap", "a -> b\nb -> a"), ("a -> ab", "a -> ab\nb -> b")];
    for (name, text) in maps {
        let phi = Endomorphism::parse(&al, text).map_err(|e| e.to_string())?;
        let report = periodic_search(&phi, k_max, &budget, None).map_err(|e| e.to_string())?;
        for (x, p) in &report.found {
            ensure(direct_period(&phi, x, k_max) == Some(*p), || format!("{name}: period of {x} is not {p}"))?;
        }
        let chain = fix_chain(&phi, k_max, &budget).map_err(|e| e.to_string())?;
        let stages = chain.stages();
        for (i, stage) in stages.iter().enumerate() {
            for (j, later) in stages.iter().enumerate().skip(i + 1) {
                let contained = later.automaton.contains(&stage.automaton).map_err(|e| e.to_string())?;
                ensure(contained, || format!("{name}: stage {} not inside stage {}", i + 1, j + 1))?;
                let exponent = fix_stage_exponent(j as u64 + 1);
                for g in stage.automaton.basis() {
                    ensure(phi.apply(&g, exponent) == g, || {
                        format!("{name}: {g} from stage {} not fixed by power {exponent}", i + 1)
                    })?;
                }
            }
        }
    }
    let id = Endomorphism::identity(&al);
    let report = periodic_search(&id, k_max, &budget, None).map_err(|e| e.to_string())?;
    ensure(report.r_phi_estimate == 1, || format!("identity: estimate {}", report.r_phi_estimate))?;
    within(start.elapsed(), Duration::from_secs(60))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("worked example in F{a,b,c} x C2", worked_example),
        ("free intersection <a,bc> & <ab,c>", free_intersection),
        ("strictly ascending rank-4 chains, n = 2..8", cefr_chains),
        ("rank of finite-index subgroups", finite_index_ranks),
        ("Hanna Neumann bound on 500 pairs in F2", hnc_property),
        ("virtually free bound on 200 pairs each", showvf_property),
        ("rank of K = H & F for closed subgroups", closed_subgroup_ranks),
        ("bound identities on grids", bounds_grid),
        ("folding confluence", confluence),
        ("fixed and periodic words", dynamics),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(()) => println!("[{:>2}] PASS  {name} ({secs:.3} s)", i + 1),
            Err(why) => {
                failed += 1;
                println!("[{:>2}] FAIL  {name} ({secs:.3} s): {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
