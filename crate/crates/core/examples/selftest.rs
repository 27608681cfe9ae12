//! Run the acceptance suite and print one line per criterion.

use std::time::Instant;

fn main() {
    let start = Instant::now();
    let reports = vnslab::selftest::run_selftest(|r| println!("{}  ({:.1}s)", r.line(), start.elapsed().as_secs_f64()));
    let passed = reports.iter().filter(|r| r.passed).count();
    println!("{passed}/{} criteria passed", reports.len());
}
