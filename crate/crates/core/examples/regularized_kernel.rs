//! K_delta = K * psi_delta through each backend: closed forms for the
//! Newtonian kernel, passthrough for low even powers, tables otherwise.

use blob_aggregation::mollifiers::{Builtin, MollifierSpec};
use blob_aggregation::regkernel::{build, TableConfig};
use blob_aggregation::Kernel;

fn main() -> blob_aggregation::Result<()> {
    let delta = 0.1;
    let m1 = MollifierSpec::builtin(Builtin::Psi4_1d).scaled(delta)?;
    let m2 = MollifierSpec::builtin(Builtin::Psi4_2d).scaled(delta)?;
    let cases = [
        ("newtonian 1d", build(&Kernel::newtonian(1)?, &m1, &TableConfig::default())?),
        ("newtonian 2d", build(&Kernel::newtonian(2)?, &m2, &TableConfig::default())?),
        ("|x|^2/2", build(&Kernel::quadratic(2)?, &m2, &TableConfig::default())?),
        ("|x|^4/4 - |x|^1.5/1.5", build(&Kernel::attractive_repulsive(4.0, 1.5, 2)?, &m2, &TableConfig::with_size(2.5, 2000))?),
    ];
    for (name, rk) in &cases {
        println!("{name}: backends {:?}", rk.backends());
        println!("  {:>6} {:>14} {:>14} {:>14}", "r", "k'(r)", "k_delta'(r)", "lap k_delta");
        for r in [0.0, 0.05, 0.1, 0.2, 0.5, 1.0] {
            let raw = rk.kernel().radial_derivative(r).map_or("singular".to_string(), |v| format!("{v:.6}"));
            let p = rk.profile(r)?;
            println!("  {r:>6.2} {raw:>14} {:>14.6} {:>14.6}", p.gradient, p.laplacian);
        }
    }
    Ok(())
}
