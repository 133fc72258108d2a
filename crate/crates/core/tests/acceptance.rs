use pspin_core::acceptance::{run_all, Level};

// Criteria whose failure is analysed in the README. They still print FAIL;
// any other failure, or any failure under PSPIN_ACCEPTANCE_STRICT=1, exits 1.
const KNOWN_RED: &[&str] = &["A7"];

fn main() {
    let strict = std::env::var("PSPIN_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let results = run_all(Level::Quick, |r| {
        println!(
            "{} {:<4} {:>7.1}s  {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.id,
            r.seconds,
            r.summary()
        );
    });
    let failed: Vec<&str> = results.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    println!(
        "{} of {} criteria passed",
        results.len() - failed.len(),
        results.len()
    );
    if failed.is_empty() {
        return;
    }
    println!("failing: {}", failed.join(", "));
    let unexpected: Vec<&str> = failed
        .iter()
        .copied()
        .filter(|id| !KNOWN_RED.contains(id))
        .collect();
    if strict || !unexpected.is_empty() {
        std::process::exit(1);
    }
    println!(
        "all failures are documented known-red criteria ({})",
        KNOWN_RED.join(", ")
    );
}
