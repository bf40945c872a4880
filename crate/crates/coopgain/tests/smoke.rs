use coopgain::bounds::{baseline_sum_capacity, inner_sum_rate, CoutBudget, SolveOpts};
use coopgain::channel::{make_builtin, Builtin, CausalityTag};

#[test]
fn smoke_mod3_baseline_and_inner() {
    let mac = make_builtin(&Builtin::Mod3Adder).unwrap();
    let opts = SolveOpts::default();
    let t0 = std::time::Instant::now();
    let b = baseline_sum_capacity(&mac, CausalityTag::NoState, &opts).unwrap();
    println!("baseline tau=0: {} in {:?} (iters {})", b.value, t0.elapsed(), b.report.iterations);
    assert!((b.value - 1.5).abs() < 1e-4, "baseline {}", b.value);

    let t0 = std::time::Instant::now();
    let inner = inner_sum_rate(&mac, CausalityTag::NoState, CoutBudget::new(0.045, 0.045), &opts).unwrap();
    println!("inner tau=0 budget 0.09: {} in {:?}", inner.value, t0.elapsed());
    println!("slacks: {:?}", inner.constraint_slacks);
    assert!(inner.value >= 1.58, "inner {}", inner.value);

    let t0 = std::time::Instant::now();
    let z = inner_sum_rate(&mac, CausalityTag::NoState, CoutBudget::zero(), &opts).unwrap();
    println!("inner tau=0 budget 0: {} in {:?}", z.value, t0.elapsed());
    assert!((z.value - 1.5).abs() < 1e-5, "zero-budget {}", z.value);

    let t0 = std::time::Instant::now();
    let sc = inner_sum_rate(&mac, CausalityTag::NoncausalStateCoop, CoutBudget::zero(), &opts).unwrap();
    println!("inner (inf,s) budget 0: {} in {:?}", sc.value, t0.elapsed());
    assert!((sc.value - 1.5).abs() < 1e-5, "state-coop zero {}", sc.value);

    let t0 = std::time::Instant::now();
    let t = baseline_sum_capacity(&mac, CausalityTag::Causal, &opts).unwrap();
    println!("baseline tau=T: {} in {:?}", t.value, t0.elapsed());
    assert!((t.value - 1.5).abs() < 1e-4);

    let t0 = std::time::Instant::now();
    let st = inner_sum_rate(&mac, CausalityTag::Causal, CoutBudget::new(0.045, 0.045), &opts).unwrap();
    println!("inner tau=T budget 0.09: {} in {:?}", st.value, t0.elapsed());
    assert!(st.value >= 1.58 - 2e-3, "shannon inner {}", st.value);
}
