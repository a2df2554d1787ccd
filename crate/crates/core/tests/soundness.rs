mod support;

use refract_core::fixtures;
use refract_core::hierarchy::Hierarchy;
use refract_core::ir::parse_program;
use refract_core::oracle::generate::ENV_METHOD;
use refract_core::oracle::Oracle;
use refract_core::reflect::{run_stratified, Mode, Options};

#[test]
fn fixtures_contain_every_concrete_fact() {
    for f in &fixtures::ALL {
        let p = parse_program(f.source).unwrap();
        let h = Hierarchy::new(&p);
        let Ok(t) = Oracle::new(&p, &h).run(f.entry) else { continue };
        let a = run_stratified(&p, &h, f.entry, &Options::new(Mode::Ripple)).unwrap();
        assert_eq!(t.violations(&a), Vec::<String>::new(), "{}", f.name);
    }
}

#[test]
fn env_names_are_covered_by_ripple_only() {
    let (mut seen, mut missed_by_strinf) = (0, 0);
    for seed in (1..200).step_by(2) {
        let (cfg, g) = support::reflective(seed);
        assert!(cfg.env);
        let p = parse_program(&g.source).unwrap();
        let h = Hierarchy::new(&p);
        let t = Oracle::new(&p, &h).with_env(ENV_METHOD, g.env.clone()).unwrap().run(g.entry).unwrap();
        let ripple = run_stratified(&p, &h, g.entry, &Options::new(Mode::Ripple)).unwrap();
        assert!(t.violations(&ripple).is_empty(), "seed {seed}: {:?}", t.violations(&ripple));
        if !t.reflective.is_empty() {
            seen += 1;
            let strinf = run_stratified(&p, &h, g.entry, &Options::new(Mode::Strinf)).unwrap();
            missed_by_strinf += usize::from(!t.violations(&strinf).is_empty());
        }
    }
    assert!(seen > 20 && missed_by_strinf > 0, "{seen} reflective programs, strinf missed {missed_by_strinf}");
}
