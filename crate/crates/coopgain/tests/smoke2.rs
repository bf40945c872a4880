use coopgain::bounds::SolveOpts;
use coopgain::channel::{make_builtin, Builtin, CausalityTag};
use coopgain::gain::*;

#[test]
fn smoke_gain_module() {
    let mac = make_builtin(&Builtin::Mod3Adder).unwrap();
    let opts = SolveOpts::default();

    let t0 = std::time::Instant::now();
    let rep = check_class(&mac, CausalityTag::NoState, &opts).unwrap();
    println!("class tau=0: member={} i0={} j*={} margin={} in {:?}", rep.member, rep.i0, rep.j_star, rep.margin, t0.elapsed());
    println!("witness: {:?}", rep.support_certificate.first());
    assert!(rep.member && (rep.j_star - 2.0).abs() < 1e-6 && (rep.margin - 0.5).abs() < 1e-4);

    let t0 = std::time::Instant::now();
    let rep_t = check_class(&mac, CausalityTag::Causal, &opts).unwrap();
    println!("class tau=T: member={} i0={} j*={} in {:?}", rep_t.member, rep_t.i0, rep_t.j_star, t0.elapsed());

    let rep_sc = check_class(&mac, CausalityTag::NoncausalStateCoop, &opts).unwrap();
    println!("class (inf,s): member={} j*={}", rep_sc.member, rep_sc.j_star);

    // marginalized channel: no gain possible
    let flat = mac.marginalize_state();
    let rep_f = check_class(&flat, CausalityTag::NoState, &opts).unwrap();
    println!("class marginalized: member={} i0={} j*={}", rep_f.member, rep_f.i0, rep_f.j_star);
    assert!(!rep_f.member && rep_f.i0 < 1e-6 && rep_f.j_star < 1e-6);

    // trivial identity: margin zero
    let triv = make_builtin(&Builtin::TrivialIdentity).unwrap();
    let rep_t2 = check_class(&triv, CausalityTag::NoState, &opts).unwrap();
    println!("class trivial: member={} i0={} j*={} margin={}", rep_t2.member, rep_t2.i0, rep_t2.j_star, rep_t2.margin);
    assert!(!rep_t2.member && rep_t2.margin.abs() < 1e-6);

    // derivative check
    let p0 = rep.p0.clone();
    let p1 = rep.witness_p1.clone();
    let t0 = std::time::Instant::now();
    let d = derivative_check(&mac, &p0, &p1).unwrap();
    println!("derivs: state1={:.2e} state2={:.2e} pair={:.2e} channel={} rhs={} central={} in {:?}",
        d.d_state1, d.d_state2, d.d_pair, d.d_channel_mi, d.rhs_bound, d.central, t0.elapsed());
    assert!(d.state_derivatives_vanish(1e-3));
    assert!((d.d_channel_mi - 0.5).abs() < 1e-3, "channel deriv {}", d.d_channel_mi);
    assert!((d.rhs_bound - 0.5).abs() < 1e-6);

    // lambda path with eps = 0.1: slope at h -> 0 is 1/eps
    let path = lambda_star_path(&mac, &p0, &p1, (1.0, 1.0), 0.1, &[1e-8]).unwrap();
    let (h, l) = path.samples[0];
    println!("lambda*(1e-8) = {l:.6e}, slope = {}", l / h);
    assert!((l / h - 10.0).abs() / 10.0 < 0.01);

    // FRL worked example
    let k = coopgain::prob::CondKernel::new(
        vec![coopgain::prob::Axis::S1], vec![2],
        vec![coopgain::prob::Axis::X1], vec![2],
        vec![0.7, 0.3, 0.3, 0.7],
    ).unwrap();
    let rep_frl = functional_representation(&k).unwrap();
    println!("FRL u = {:?}", rep_frl.u.probs());
    assert_eq!(rep_frl.u.len(), 3);
    assert!((rep_frl.u.probs()[0] - 0.3).abs() < 1e-12);
    assert!((rep_frl.u.probs()[1] - 0.4).abs() < 1e-12);
    for s in 0..2 {
        let r = rep_frl.reconstruct(s, 2);
        for x in 0..2 {
            assert!((r[x] - k.row(s)[x]).abs() < 1e-12);
        }
    }

    // slope profile on mod3
    let t0 = std::time::Instant::now();
    let prof = slope_profile(&mac, CausalityTag::NoState, (1.0, 1.0), 0.015625, 10, &opts).unwrap();
    println!("slope profile in {:?}: verdict {:?}", t0.elapsed(), prof.verdict);
    for k in 0..prof.grid.len() {
        println!("  h={:.3e} gain={:.6e} ratio={:.3}", prof.grid[k], prof.gains[k], prof.ratios[k]);
    }
    assert_eq!(prof.verdict, SlopeVerdict::Diverges);
    assert!(prof.ratios[10] >= 10.0 * prof.ratios[0]);
}
