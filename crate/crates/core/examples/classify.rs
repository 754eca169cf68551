//! Which classes can carry point spectrum: list the members of a class
//! near the disk `|k| ≤ |p|` and the disk intersection.
//!
//!     cargo run --example classify -- -3 -2 1 1

use euler_line::lattice::{build_chain, canonical_representative, disk_intersection, Mode};

fn main() {
    let args: Vec<i64> = std::env::args().skip(1).map(|a| a.parse().expect("integer")).collect();
    let [k1, k2, p1, p2] = args[..] else {
        eprintln!("usage: classify K1 K2 P1 P2");
        std::process::exit(2);
    };
    let (khat, p) = (Mode::new(k1, k2).unwrap(), Mode::new(p1, p2).unwrap());
    let canon = canonical_representative(khat, p).unwrap();
    let chain = build_chain(khat, p, -5, 5).unwrap();
    println!("class {khat} + n·{p} (canonical {canon}), D = {}", chain.det());
    for n in -5..=5 {
        println!(
            "  n = {n:>2}  k = {:<9} ρ = {:>3}  A = {:+.6}",
            chain.member(n).unwrap().to_string(),
            chain.rho(n).unwrap(),
            chain.a(n).unwrap()
        );
    }
    let disk = disk_intersection(khat, p);
    if disk.is_empty() {
        println!("disk intersection empty: spectrum is the continuous segment only");
    } else {
        println!("disk intersection at n ∈ {disk:?}: point spectrum possible");
    }
}
