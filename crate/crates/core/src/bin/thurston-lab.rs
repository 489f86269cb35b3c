fn main() {
    // placeholder during bring-up: run the acceptance suite with timings
    let cfg = thurston_lab::accept::AcceptanceConfig::default();
    let args: Vec<String> = std::env::args().collect();
    let only: Option<usize> = args.get(1).and_then(|s| s.parse().ok());
    let mut all_pass = true;
    for i in 1..=11 {
        if let Some(k) = only {
            if k != i {
                continue;
            }
        }
        let t0 = std::time::Instant::now();
        let r = thurston_lab::accept::run_one(i, &cfg);
        all_pass &= r.pass;
        println!("{}   ({:.2?})", r.line(), t0.elapsed());
    }
    std::process::exit(if all_pass { 0 } else { 1 });
}
