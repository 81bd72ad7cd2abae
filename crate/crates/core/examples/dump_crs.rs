use ircost_core::energy::{EnergyModel, GroupModel};
use ircost_core::parse_module;
use ircost_core::pipeline::analyze;

fn main() {
    let path = std::env::args().nth(1).expect("path");
    let m = parse_module(&std::fs::read_to_string(path).unwrap()).unwrap();
    let a = analyze(&m, &EnergyModel::Group(GroupModel::unit())).unwrap();
    print!("{}", a.crs);
    for w in &a.crs.warnings {
        println!("# warning: {}", w);
    }
    if std::env::args().any(|a| a == "--solve") {
        println!("----");
        print!("{}", ircost_core::solver::solve(&a.crs));
    }
}
