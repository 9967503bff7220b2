use zkmip::suite::{run_all, SuiteConfig};

#[test]
fn all_criteria() {
    let cfg = SuiteConfig::bundled().expect("bundled fixtures parse");
    let reports = run_all(&cfg);
    for r in &reports {
        println!("{r}");
    }
    let failed: Vec<usize> = reports.iter().filter(|r| !r.pass).map(|r| r.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
