//! The closed-form constants of the single-scale test and its decision rule
//! just around the threshold.

use hamcert::certifier::{decide, Profile, SubroutineConstants};

fn main() {
    let k = SubroutineConstants::analytic();
    let unit = k.analytic_unit();
    println!("{:#?}", Profile::Analytic.constants());
    println!("unit 1/(2400 e^6 C^2) = {unit:.6e}");
    for offset in [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0] {
        let estimate = k.far_threshold + offset * unit;
        println!("threshold {offset:+.1} unit -> {:?}", decide(estimate, k.far_threshold));
    }
    for eps in [0.1, 0.05, 0.01] {
        println!(
            "eps {eps:<5} t(eps) {:.4e}  evolution time bound {:.3e}",
            k.time(eps),
            k.evolution_time_bound(eps, 0.1, 1.0)
        );
    }
    let c = SubroutineConstants::calibrated();
    println!("calibrated bound at eps 0.05: {:.1}", c.evolution_time_bound(0.05, 0.1, 2.0));
}
