//! Acceptance suite: one PASS/FAIL line per criterion.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use snp_core::equiv::Expectation;
use snp_core::fixtures::load;
use snp_core::rewrite::insert_normalizer;
use snp_core::{
    compare, initial_configuration, lost_spike_count, matrix_run, normalize_guard, run, sink_schedule, step, transform,
    SystemDescription, TransformOutput, UnaryGuard,
};

use common::{random_guard, sim_vectors, sink_total, RegexOracle};

/// Allowed distance between a measured runtime and the published figure.
const RUNTIME_TOLERANCE: i64 = 1;
const COMPOSITE_HORIZON: u64 = 30;
const MATRIX_STEPS: u64 = 50;
const GUARD_SAMPLES: usize = 30;
const GUARD_DEPTH: usize = 4;
const GUARD_K_MAX: u64 = 200;
const GUARD_SEED: u64 = 0x5eed_5a9e;
const DS: std::ops::RangeInclusive<i64> = 1..=5;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rewrite(system: &SystemDescription) -> Result<TransformOutput, String> {
    transform(system).map_err(|e| e.to_string())
}

fn fixture(name: &str, params: &[(&str, i64)]) -> Result<SystemDescription, String> {
    load(name, params).map_err(|e| format!("{name}: {e}"))
}

fn reservoir_spikes(system: &SystemDescription) -> u64 {
    system.neurons.iter().filter(|n| system.in_degree(&n.id) == 0).map(|n| n.initial_spikes).sum()
}

struct Suite {
    failed: usize,
    delay_free: Vec<(String, SystemDescription)>,
}

impl Suite {
    fn criterion(&mut self, n: usize, name: &str, limit: Option<Duration>, f: impl FnOnce(&mut Self) -> Check) {
        let start = Instant::now();
        let mut result = f(self);
        let elapsed = start.elapsed();
        if let (Ok(_), Some(limit)) = (&result, limit) {
            if elapsed > limit {
                result = Err(format!("took {elapsed:?}, limit {limit:?}"));
            }
        }
        match result {
            Ok(detail) => println!("criterion {n:>2} {name}: PASS ({detail}) [{} ms]", elapsed.as_millis()),
            Err(detail) => {
                self.failed += 1;
                println!("criterion {n:>2} {name}: FAIL ({detail}) [{} ms]", elapsed.as_millis());
            }
        }
    }

    fn keep(&mut self, label: String, out: &TransformOutput) {
        self.delay_free.push((label, out.system.clone()));
    }
}

fn walkthrough() -> Check {
    let x = 5u64;
    let sys = fixture("walkthrough", &[("x", x as i64)])?;
    let expected = [
        format!("{x}/0 0/0 0/0"),
        format!("{}/2 0/0 0/0", x - 1),
        format!("{}/1 0/0 0/0", x - 1),
        format!("{}/0 1/0 0/0", x - 1),
        format!("{}/2 0/0 1/0", x - 2),
    ];
    let mut c = initial_configuration(&sys);
    for (i, want) in expected.iter().enumerate() {
        if i > 0 {
            c = step(&sys, &c).map_err(|e| e.to_string())?.0;
        }
        ensure(c.to_string() == *want, || format!("configuration {i}: got {c}, want {want}"))?;
    }
    Ok("5 configurations exact".into())
}

fn sequential(s: &mut Suite) -> Check {
    let mut measured = Vec::new();
    for d in DS {
        let sys = fixture("seq1", &[("d", d)])?;
        let out = rewrite(&sys)?;
        s.keep(format!("seq1 d={d}"), &out);
        let du = d as u64;
        ensure(reservoir_spikes(&out.system) == 1 + du, || {
            format!("d={d}: initial spikes {}", reservoir_spikes(&out.system))
        })?;
        let r = run(&out.system, sys.default_horizon()).map_err(|e| e.to_string())?;
        ensure(r.sinks.count_at("s12") == 1, || format!("d={d}: sink count {}", r.sinks.count_at("s12")))?;
        let v = compare(&sys, &out.system, sys.default_horizon(), Some(&Expectation::from_transform(&out)))
            .map_err(|e| e.to_string())?;
        ensure(v.accepted && v.offset.is_some(), || format!("d={d}: {v}"))?;
        let runtime = r.sinks.last_arrival_at("s12").unwrap_or(0) as i64;
        let delta = runtime - (1 + d);
        ensure(delta.abs() <= RUNTIME_TOLERANCE, || format!("d={d}: runtime {runtime} vs {}", 1 + d))?;
        measured.push(delta);
    }
    let mut measured2 = Vec::new();
    for d1 in 1..=4i64 {
        for d2 in 1..=d1 {
            let sys = fixture("seq2", &[("d1", d1), ("d2", d2)])?;
            let out = rewrite(&sys)?;
            s.keep(format!("seq2 d1={d1} d2={d2}"), &out);
            let product = ((1 + d1) * (1 + d2)) as u64;
            ensure(reservoir_spikes(&out.system) == product, || format!("({d1},{d2}): initial spikes"))?;
            let r = run(&out.system, sys.default_horizon()).map_err(|e| e.to_string())?;
            ensure(r.sinks.count_at("s13") == 1, || format!("({d1},{d2}): sink count {}", r.sinks.count_at("s13")))?;
            let v = compare(&sys, &out.system, sys.default_horizon(), Some(&Expectation::from_transform(&out)))
                .map_err(|e| e.to_string())?;
            ensure(v.accepted && v.offset.is_some(), || format!("({d1},{d2}): {v}"))?;
            let runtime = r.sinks.last_arrival_at("s13").unwrap_or(0) as i64;
            let delta = runtime - (product as i64 + 2);
            ensure(delta.abs() <= RUNTIME_TOLERANCE, || format!("({d1},{d2}): runtime {runtime}"))?;
            measured2.push(delta);
        }
    }
    measured.dedup();
    measured2.dedup();
    Ok(format!("runtime minus published: single {measured:?}, two-delay {measured2:?}"))
}

fn iteration(s: &mut Suite) -> Check {
    let mut deltas = Vec::new();
    for d in DS {
        let horizon = (4 * (1 + d) + 10) as u64;
        let sys = fixture("iter1", &[("d", d)])?;
        let alt = fixture("iter1_alt", &[("d", d)])?;
        let out = rewrite(&sys)?;
        let out_alt = rewrite(&alt)?;
        s.keep(format!("iter1 d={d}"), &out);
        ensure(out.system == out_alt.system, || format!("d={d}: rewrites differ by delay position"))?;
        for (name, orig) in [("iter1", &sys), ("iter1_alt", &alt)] {
            let v = compare(orig, &out.system, horizon, Some(&Expectation::from_transform(&out)))
                .map_err(|e| e.to_string())?;
            ensure(v.accepted, || format!("{name} d={d}: {v}"))?;
        }
        let r = run(&out.system, horizon).map_err(|e| e.to_string())?;
        let first = r.sinks.first_arrival_at("s13").ok_or(format!("d={d}: no tap arrival"))? as i64;
        let delta = first - (2 + d);
        ensure(delta.abs() <= RUNTIME_TOLERANCE, || format!("d={d}: first tap arrival {first}"))?;
        deltas.push(delta);
    }
    deltas.dedup();
    Ok(format!("first tap arrival minus 2+d: {deltas:?}"))
}

fn split(s: &mut Suite) -> Check {
    for d in DS {
        let du = d as u64;
        let sys = fixture("split_parent", &[("d", d)])?;
        let out = rewrite(&sys)?;
        s.keep(format!("split_parent d={d}"), &out);
        let h = sys.default_horizon();
        for sink in ["s13", "s14"] {
            ensure(sink_total(&out.system, sink, h) == 1, || format!("parent d={d}: {sink} count"))?;
        }
        let v = compare(&sys, &out.system, h, Some(&Expectation::from_transform(&out))).map_err(|e| e.to_string())?;
        ensure(v.accepted && v.offset == Some(0), || format!("parent d={d}: {v}"))?;

        let sys = fixture("split_child", &[("d", d)])?;
        let out = rewrite(&sys)?;
        s.keep(format!("split_child d={d}"), &out);
        let h = sys.default_horizon();
        ensure(sink_total(&out.system, "s15", h) == 1, || format!("child d={d}: delayed branch count"))?;
        ensure(sink_total(&out.system, "s14", h) == 1 + du, || format!("child d={d}: other branch count"))?;
        let v = compare(&sys, &out.system, h, Some(&Expectation::from_transform(&out))).map_err(|e| e.to_string())?;
        ensure(v.accepted, || format!("child d={d}: {v}"))?;

        let before = run(&out.system, h).map_err(|e| e.to_string())?;
        let normalized = insert_normalizer(&out.system, "s14", du);
        let after = run(&normalized, h).map_err(|e| e.to_string())?;
        ensure(after.sinks.count_at("s14") == 1, || {
            format!("normalized d={d}: count {}", after.sinks.count_at("s14"))
        })?;
        let last = before.sinks.last_arrival_at("s14").unwrap_or(0);
        let arrival = after.sinks.first_arrival_at("s14").unwrap_or(0);
        ensure(arrival == last + 1, || format!("normalized d={d}: arrival {arrival}, stream ended {last}"))?;
    }
    Ok("parent k=0 counts 1/1; child counts 1/1+d; normalizer +1 step".into())
}

fn join(s: &mut Suite) -> Check {
    for d in DS {
        for (name, k) in [("join_parent", 1), ("join_junction", 0)] {
            let sys = fixture(name, &[("d", d)])?;
            let out = rewrite(&sys)?;
            s.keep(format!("{name} d={d}"), &out);
            let h = sys.default_horizon();
            ensure(sink_total(&out.system, "s14", h) == 1, || format!("{name} d={d}: sink count"))?;
            let v =
                compare(&sys, &out.system, h, Some(&Expectation::from_transform(&out))).map_err(|e| e.to_string())?;
            ensure(v.accepted && v.offset == Some(k), || format!("{name} d={d}: {v}"))?;
        }
    }
    Ok("parent k=1, junction k=0, counts 1".into())
}

fn composite(s: &mut Suite) -> Check {
    for d in DS {
        for name in ["fig1_junction", "fig1_split_child"] {
            let sys = fixture(name, &[("d", d)])?;
            let out = rewrite(&sys)?;
            s.keep(format!("{name} d={d}"), &out);
            let v = compare(&sys, &out.system, COMPOSITE_HORIZON, Some(&Expectation::from_transform(&out)))
                .map_err(|e| e.to_string())?;
            ensure(v.accepted, || format!("{name} d={d}: {v}"))?;
        }
    }
    Ok(format!("both placements accepted over horizon {COMPOSITE_HORIZON}"))
}

fn matrix_oracle(s: &mut Suite) -> Check {
    for (label, sys) in &s.delay_free {
        let m = matrix_run(sys, MATRIX_STEPS).map_err(|e| format!("{label}: {e}"))?;
        let sim = sim_vectors(sys, MATRIX_STEPS);
        ensure(m == sim, || format!("{label}: matrix and simulator traces differ"))?;
    }
    Ok(format!("{} systems, {MATRIX_STEPS} steps", s.delay_free.len()))
}

fn guards() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(GUARD_SEED);
    for i in 0..GUARD_SAMPLES {
        let e = random_guard(&mut rng, GUARD_DEPTH);
        let oracle = RegexOracle::new(&e);
        let g = UnaryGuard::new(e.clone());
        let normal = normalize_guard(&g);
        for k in 0..=GUARD_K_MAX {
            let want = oracle.contains(k);
            ensure(g.contains(k) == want, || format!("guard {i} `{e}` at k={k}: tree says {}", !want))?;
            let via_normal = normal.iter().any(|p| p.contains(k));
            ensure(via_normal == want, || format!("guard {i} `{e}` at k={k}: normal form says {}", !want))?;
        }
    }
    Ok(format!("{GUARD_SAMPLES} guards, k <= {GUARD_K_MAX}"))
}

fn lost_spikes() -> Check {
    let sys = fixture("lost_spikes", &[])?;
    let r = run(&sys, sys.default_horizon()).map_err(|e| e.to_string())?;
    let lost = lost_spike_count(&r.trace);
    ensure(lost >= 1, || "increasing-delay fixture lost nothing".into())?;
    let mut checked = 0;
    for d in DS {
        for name in [
            "seq1",
            "iter1",
            "iter1_alt",
            "split_parent",
            "split_child",
            "join_parent",
            "join_junction",
            "fig1_junction",
            "fig1_split_child",
        ] {
            let sys = fixture(name, &[("d", d)])?;
            let r = run(&sys, (4 * (1 + d) + 10) as u64).map_err(|e| e.to_string())?;
            ensure(lost_spike_count(&r.trace) == 0, || format!("{name} d={d} lost spikes"))?;
            checked += 1;
        }
    }
    for d1 in DS {
        for d2 in 1..=d1 {
            for name in ["seq2", "iter2"] {
                let sys = fixture(name, &[("d1", d1), ("d2", d2)])?;
                let r = run(&sys, (4 * (1 + d1) * (1 + d2) + 10) as u64).map_err(|e| e.to_string())?;
                ensure(lost_spike_count(&r.trace) == 0, || format!("{name} ({d1},{d2}) lost spikes"))?;
                checked += 1;
            }
        }
    }
    Ok(format!("{lost} lost with d1 < d2; 0 lost in {checked} fixtures with d1 >= d2"))
}

fn with_sink_relays(sys: &SystemDescription) -> SystemDescription {
    sys.resolved_sinks().iter().fold(sys.clone(), |acc, sink| acc.with_relay_before(sink, &format!("{sink}_shift")))
}

fn shifted(a: &snp_core::equiv::SinkSchedule) -> Vec<(String, Vec<(u64, u64)>)> {
    a.sinks.iter().map(|(s, arr)| (s.clone(), arr.iter().map(|(t, n)| (t + 1, *n)).collect())).collect()
}

fn relay_shift() -> Check {
    let cases: Vec<(&str, Vec<(&str, i64)>)> = DS
        .flat_map(|d| {
            ["seq1", "iter1", "iter1_alt", "split_parent", "split_child", "join_parent", "join_junction"]
                .into_iter()
                .map(move |n| (n, vec![("d", d)]))
        })
        .chain([("seq2", vec![("d1", 2), ("d2", 1)]), ("iter2", vec![("d1", 2), ("d2", 1)])])
        .collect();
    for (name, params) in &cases {
        let sys = fixture(name, params)?;
        let out = rewrite(&sys)?;
        let exp = Expectation::from_transform(&out);
        let h = sys.default_horizon();
        let (sys2, cand2) = (with_sink_relays(&sys), with_sink_relays(&out.system));
        for (a, b) in [(&sys, &sys2), (&out.system, &cand2)] {
            let before = sink_schedule(a, h).map_err(|e| e.to_string())?;
            let after = sink_schedule(b, h + 1).map_err(|e| e.to_string())?;
            ensure(shifted(&before) == after.sinks, || format!("{name} {params:?}: schedule not shifted by 1"))?;
        }
        let v1 = compare(&sys, &out.system, h, Some(&exp)).map_err(|e| e.to_string())?;
        let v2 = compare(&sys2, &cand2, h + 1, Some(&exp)).map_err(|e| e.to_string())?;
        ensure(v1.accepted == v2.accepted && v1.offset == v2.offset && v1.sink_offsets == v2.sink_offsets, || {
            format!("{name} {params:?}: verdict changed")
        })?;
    }
    Ok(format!("{} fixture instances", cases.len()))
}

fn main() -> ExitCode {
    let mut s = Suite { failed: 0, delay_free: Vec::new() };
    let secs = Duration::from_secs;
    s.criterion(1, "walkthrough golden trace", Some(secs(1)), |_| walkthrough());
    s.criterion(2, "sequential contract", Some(secs(5)), sequential);
    s.criterion(3, "iteration contract", Some(secs(5)), iteration);
    s.criterion(4, "split contract", Some(secs(5)), split);
    s.criterion(5, "join contract", Some(secs(5)), join);
    s.criterion(6, "composite split/join", None, composite);
    s.criterion(7, "matrix engine vs simulator", Some(secs(10)), matrix_oracle);
    s.criterion(8, "guard membership vs regex oracle", None, |_| guards());
    s.criterion(9, "lost-spike demonstration", None, |_| lost_spikes());
    s.criterion(10, "relay-shift invariance", None, |_| relay_shift());
    println!("{} of 10 criteria passed", 10 - s.failed);
    if s.failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
