//! Radial profiles and regularity exponents of the supported kernels.

use blob_aggregation::{Kernel, KernelTerm};

fn main() -> blob_aggregation::Result<()> {
    let kernels = [
        ("newtonian 1d", Kernel::newtonian(1)?),
        ("newtonian 2d", Kernel::newtonian(2)?),
        ("|x|^2/2", Kernel::quadratic(2)?),
        ("|x|^4/4 - |x|^1.5/1.5", Kernel::attractive_repulsive(4.0, 1.5, 2)?),
        (
            "e^-r - 2 e^-r/2",
            Kernel::new(vec![KernelTerm::morse(1.0, 1.0, 1.0), KernelTerm::morse(2.0, 2.0, -1.0)], 2)?,
        ),
    ];
    println!("{:<24} {:>6} {:>6} {:>12} {:>12} {:>12}", "kernel", "s", "S", "k(0.5)", "k'(0.5)", "lap(0.5)");
    for (name, k) in &kernels {
        println!(
            "{:<24} {:>6.2} {:>6.2} {:>12.6} {:>12.6} {:>12}",
            name,
            k.singularity_order(),
            k.growth_order(),
            k.radial_value(0.5)?,
            k.radial_derivative(0.5)?,
            k.radial_laplacian(0.5).map_or("dirac".to_string(), |v| format!("{v:.6}"))
        );
    }
    // gradients are radial: grad K(x) = k'(|x|) x/|x|
    let k = &kernels[3].1;
    println!("grad K(0.3, 0.4) = {:?}", k.eval_grad(&[0.3, 0.4])?);
    Ok(())
}
