use std::io::Write;

use zboundary::verify::{run, VerifyContext};

#[test]
fn acceptance() {
    let outcomes = run(&VerifyContext::default(), None);
    // written to the raw handle so the lines survive libtest's capture
    let mut err = std::io::stderr().lock();
    writeln!(err).unwrap();
    for o in &outcomes {
        writeln!(err, "{}", o.line()).unwrap();
    }
    let failed: Vec<_> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    assert_eq!(outcomes.len(), 14);
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
