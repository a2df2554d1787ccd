//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and fails if any criterion fails.

mod support;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use refract_core::fixtures::{self, Fixture};
use refract_core::hierarchy::Hierarchy;
use refract_core::ir::{parse_program, Operand, Program, ReflectiveKind, StmtKind};
use refract_core::oracle::generate::{GenConfig, ENV_METHOD};
use refract_core::oracle::Oracle;
use refract_core::pta::{analyze_plain, AbstractObject};
use refract_core::reflect::{run_stratified, Analysis, Mode, Options, SiteReport};
use refract_core::report::{analyze, Request};
use refract_core::taint::{analyze_taint, TaintConfig};
use support::Facts;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn load(f: &Fixture) -> (Program, Hierarchy) {
    let p = parse_program(f.source).unwrap_or_else(|e| panic!("{}: {e}", f.name));
    let h = Hierarchy::new(&p);
    (p, h)
}

fn run<'p>(p: &'p Program, h: &'p Hierarchy, f: &Fixture, mode: Mode) -> Analysis<'p> {
    run_stratified(p, h, f.entry, &Options::new(mode)).unwrap()
}

fn site(a: &Analysis<'_>, kind: ReflectiveKind) -> Vec<SiteReport> {
    a.site_reports().into_iter().filter(|r| r.kind == kind).collect()
}

/// Heap objects created by the single newInstance site of a fixture.
fn new_instance_count(f: &Fixture, mode: Mode) -> Result<usize, String> {
    let (p, h) = load(f);
    let a = run(&p, &h, f, mode);
    let sites = site(&a, ReflectiveKind::NewInstance);
    check(sites.len() == 1, format!("{} newInstance sites", sites.len()))?;
    Ok(sites[0].targets.len())
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed())
}

fn c1() -> Outcome {
    let (n, dt) = timed(|| new_instance_count(&fixtures::ACTIVITIES, Mode::Ripple));
    let n = n?;
    let s = new_instance_count(&fixtures::ACTIVITIES, Mode::Strinf)?;
    check(n == 5 && s == 0 && dt < Duration::from_secs(1), format!("ripple {n}, strinf {s}, {dt:?}"))?;
    Ok(format!("ripple 5 objects, strinf 0, {dt:?}"))
}

fn c2() -> Outcome {
    let f = &fixtures::LOGGER;
    let (p, h) = load(f);
    let cfg = TaintConfig::parse(f.taint.unwrap()).unwrap().resolve(&p).unwrap();
    check(cfg.sources.len() == 2 && cfg.sinks.len() == 6, "taint config is not 2 sources x 6 sinks")?;
    let mut out = Vec::new();
    for mode in [Mode::Ripple, Mode::Strinf] {
        let a = run(&p, &h, f, mode);
        let inv = site(&a, ReflectiveKind::Invoke);
        let targets: usize = inv.iter().map(|r| r.targets.len()).sum();
        let leaks = analyze_taint(&a, &cfg).leaks.len();
        out.push((targets, leaks));
    }
    check(out == [(6, 12), (0, 0)], format!("(targets, leaks) ripple {:?}, strinf {:?}", out[0], out[1]))?;
    Ok("ripple 6 targets / 12 leaks, strinf 0 / 0".into())
}

fn c3() -> Outcome {
    let n = new_instance_count(&fixtures::MEDIA, Mode::Ripple)?;
    check(n == 8, format!("ripple {n}"))?;
    Ok("ripple 8 objects".into())
}

fn c4() -> Outcome {
    // Hidden getDefault: the second invoke's receiver is synthesized.
    let f = &fixtures::TELEPHONY;
    let (p, h) = load(f);
    let a = run(&p, &h, f, Mode::Ripple);
    let inv = site(&a, ReflectiveKind::Invoke);
    let second = inv.last().ok_or("no invoke site")?;
    let stmt = p.stmt(second.site).unwrap();
    let StmtKind::Invoke { recv: Operand::Var(recv), .. } = &stmt.kind else { return Err("unexpected statement".into()) };
    let objs = a.pta.var_set(*recv);
    let synth: Vec<&AbstractObject> = objs.iter().filter(|o| matches!(o, AbstractObject::SynthRecv { .. })).collect();
    check(synth.len() == 1 && objs.len() == 1, format!("receiver objects {objs:?}"))?;
    check(synth[0].label(&p).starts_with("synth-recv android.telephony.TelephonyManager"), "wrong receiver type")?;
    let edges: Vec<String> = a.calls.iter().filter(|e| e.site == second.site).map(|e| p.method_sig(e.callee)).collect();
    check(
        edges == ["android.telephony.TelephonyManager.getSubscriberId()"],
        format!("edges at second invoke {edges:?}"),
    )?;

    // Declared but unmodeled getDefault: its return is synthesized instead.
    let f = &fixtures::TELEPHONY_UNMODELED;
    let (p, h) = load(f);
    let a = run(&p, &h, f, Mode::Ripple);
    let inv = site(&a, ReflectiveKind::Invoke);
    let (first, second) = (&inv[0], &inv[inv.len() - 1]);
    let StmtKind::Invoke { lhs: Some(tm), .. } = &p.stmt(first.site).unwrap().kind else {
        return Err("unexpected statement".into());
    };
    let objs = a.pta.var_set(*tm);
    let ok = objs.len() == 1
        && matches!(objs.iter().next(), Some(AbstractObject::SynthRet { site, ty })
            if *site == first.site && p.type_name(*ty) == "android.telephony.TelephonyManager");
    check(ok, format!("pts(telephonyManager) = {objs:?}"))?;
    let edges: Vec<String> = a.calls.iter().filter(|e| e.site == second.site).map(|e| p.method_sig(e.callee)).collect();
    check(edges == ["android.telephony.TelephonyManager.getSubscriberId()"], format!("variant edges {edges:?}"))?;
    Ok("one synthesized receiver and edge to getSubscriberId; variant: one synthesized return".into())
}

fn c5() -> Outcome {
    let n = new_instance_count(&fixtures::RECEIVERS, Mode::Ripple)?;
    check(n == 17, format!("ripple {n}"))?;
    Ok("ripple 17 objects".into())
}

fn chain_violations(p: &Program, h: &Hierarchy, entry: &str, taint: Option<&refract_core::ResolvedConfig>) -> Vec<String> {
    let facts: Vec<Facts> =
        Mode::ALL.iter().map(|&m| Facts::of(&run_stratified(p, h, entry, &Options::new(m)).unwrap(), taint)).collect();
    let mut v = Vec::new();
    for w in facts.windows(2) {
        v.extend(w[0].missing_from(&w[1]));
    }
    v
}

fn c6() -> Outcome {
    let mut bad = Vec::new();
    for f in &fixtures::ALL {
        let (p, h) = load(f);
        let cfg = f.taint.map(|t| TaintConfig::parse(t).unwrap().resolve(&p).unwrap());
        for v in chain_violations(&p, &h, f.entry, cfg.as_ref()) {
            bad.push(format!("{}: {v}", f.name));
        }
    }
    let mut grew = 0;
    for seed in 0..500 {
        let (_, g) = support::reflective(seed);
        let p = parse_program(&g.source).unwrap();
        let h = Hierarchy::new(&p);
        let cfg = support::generated_taint(&p);
        for v in chain_violations(&p, &h, g.entry, Some(&cfg)) {
            bad.push(format!("seed {seed}: {v}"));
        }
        let s = Facts::of(&run_stratified(&p, &h, g.entry, &Options::new(Mode::Strinf)).unwrap(), Some(&cfg));
        let r = Facts::of(&run_stratified(&p, &h, g.entry, &Options::new(Mode::Ripple)).unwrap(), Some(&cfg));
        grew += usize::from(s != r);
    }
    check(bad.is_empty(), format!("{} violations, first: {:?}", bad.len(), bad.first()))?;
    Ok(format!("{} fixtures + 500 programs, 0 violations; ripple strictly larger on {grew}", fixtures::ALL.len()))
}

fn c7() -> Outcome {
    let (mut exhausted, mut seed, mut witnesses) = (0, 0u64, Vec::new());
    let mut bad = Vec::new();
    while exhausted < 500 {
        check(seed < 1000, format!("only {exhausted} fully explored programs in {seed} seeds"))?;
        let (cfg, g) = support::reflective(seed);
        let p = parse_program(&g.source).unwrap();
        let h = Hierarchy::new(&p);
        let mut o = Oracle::new(&p, &h);
        if cfg.env {
            o = o.with_env(ENV_METHOD, g.env.clone()).unwrap();
        }
        let t = o.run(g.entry).unwrap();
        let ripple = run_stratified(&p, &h, g.entry, &Options::new(Mode::Ripple)).unwrap();
        for v in t.violations(&ripple) {
            bad.push(format!("seed {seed}: {v}"));
        }
        if t.exhausted {
            exhausted += 1;
            let strinf = run_stratified(&p, &h, g.entry, &Options::new(Mode::Strinf)).unwrap();
            if !t.reflective.is_empty() && !t.violations(&strinf).is_empty() {
                witnesses.push(seed);
            }
        }
        seed += 1;
    }
    check(bad.is_empty(), format!("{} violations, first: {:?}", bad.len(), bad.first()))?;
    check(!witnesses.is_empty(), "no program where strinf misses a dynamic fact")?;
    Ok(format!(
        "{exhausted} fully explored programs ({seed} drawn), 0 violations; strinf misses facts in {} (e.g. seed {})",
        witnesses.len(),
        witnesses[0]
    ))
}

fn c8() -> Outcome {
    let mut mismatched = Vec::new();
    for seed in 0..200 {
        let g = support::program(&GenConfig::plain(), seed);
        check(g.stmt_count <= 50, format!("seed {seed} has {} statements", g.stmt_count))?;
        let p = parse_program(&g.source).unwrap();
        let h = Hierarchy::new(&p);
        let (pts, _) = analyze_plain(&p, &h, g.entry).unwrap();
        let mut fast = pts.var_objects();
        fast.retain(|_, s| !s.is_empty());
        if fast != support::naive_pta::solve(&p, &h, g.entry).vars {
            mismatched.push(seed);
        }
    }
    check(mismatched.is_empty(), format!("mismatches at seeds {mismatched:?}"))?;
    Ok("200 programs, varPts identical".into())
}

fn c9() -> Outcome {
    for f in &fixtures::ALL {
        let (p, h) = load(f);
        let cfg = f.taint.map(|t| TaintConfig::parse(t).unwrap().resolve(&p).unwrap());
        let mut outputs = BTreeSet::new();
        for seed in [None, Some(1), Some(2), Some(3), Some(99)] {
            for mode in Mode::ALL {
                let req = Request {
                    source: f.source,
                    entry: f.entry,
                    options: Options { seed, ..Options::new(mode) },
                    taint: cfg.as_ref(),
                    dump_pts: true,
                };
                outputs.insert((mode, analyze(&p, &h, &req).unwrap().to_json()));
            }
        }
        check(outputs.len() == Mode::ALL.len(), format!("{}: reports differ across seeds", f.name))?;
    }
    Ok(format!("{} fixtures x 3 modes x 5 seeds byte-identical", fixtures::ALL.len()))
}

fn c10(suites: Duration) -> Outcome {
    let mut slowest = Duration::ZERO;
    for f in &fixtures::ALL {
        let (p, h) = load(f);
        let req = Request { source: f.source, entry: f.entry, options: Options::new(Mode::Ripple), taint: None, dump_pts: true };
        let (_, dt) = timed(|| analyze(&p, &h, &req).unwrap());
        check(dt < Duration::from_secs(1), format!("{} took {dt:?}", f.name))?;
        slowest = slowest.max(dt);
    }
    check(suites < Duration::from_secs(300), format!("property suites took {suites:?}"))?;
    Ok(format!("slowest fixture {slowest:?}; property suites {suites:?}"))
}

fn report(n: usize, outcome: std::thread::Result<Outcome>) -> bool {
    let outcome = outcome.unwrap_or_else(|e| {
        let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
        Err(format!("panicked: {}", msg.unwrap_or_default()))
    });
    match &outcome {
        Ok(detail) => println!("criterion {n:>2}: PASS  {detail}"),
        Err(detail) => println!("criterion {n:>2}: FAIL  {detail}"),
    }
    outcome.is_ok()
}

#[test]
fn acceptance() {
    let mut passed = Vec::new();
    let fixed: [fn() -> Outcome; 5] = [c1, c2, c3, c4, c5];
    for (i, f) in fixed.into_iter().enumerate() {
        passed.push(report(i + 1, catch_unwind(f)));
    }
    let start = Instant::now();
    passed.push(report(6, catch_unwind(c6)));
    passed.push(report(7, catch_unwind(c7)));
    let suites = start.elapsed();
    passed.push(report(8, catch_unwind(c8)));
    passed.push(report(9, catch_unwind(c9)));
    passed.push(report(10, catch_unwind(AssertUnwindSafe(|| c10(suites)))));
    let failed: Vec<usize> = passed.iter().enumerate().filter(|(_, ok)| !**ok).map(|(i, _)| i + 1).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
