use soslyap::corpus;
use soslyap::poly::parse;
use soslyap::sdp::SolverSettings;
use soslyap::synth::{check_sos, SosCheck};

fn main() {
    let s = SolverSettings::default();
    let mtc = &parse("x1^2 + x2^2").unwrap() * &corpus::motzkin();
    match check_sos(&mtc, false, &s).unwrap() {
        SosCheck::Feasible(g) => println!("FEASIBLE margin {:.3e}", g.margin),
        other => println!("{other:?}"),
    }
}
