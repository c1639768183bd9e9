//! The builtin Gaussian-mixture mollifiers and their vanishing moments.

use blob_aggregation::mollifiers::{multi_indices, Builtin, MollifierSpec};

fn main() -> blob_aggregation::Result<()> {
    for b in [Builtin::Psi4_1d, Builtin::Psi6_1d, Builtin::Psi4_2d] {
        let spec = MollifierSpec::builtin(b);
        println!("{} (d = {}), psi(0) = {:.6}", b.name(), spec.dim(), spec.radial(0.0));
        for total in 0..=spec.order() {
            let worst = multi_indices(spec.dim(), total)
                .iter()
                .map(|g| spec.moment(g).map(f64::abs))
                .collect::<blob_aggregation::Result<Vec<_>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            println!("  |moment| of order {total}: {worst:.3e}");
        }
        println!("  certified order m = {}", spec.verify_order()?);
    }

    // psi_delta(x) = delta^-d psi(x / delta)
    let scaled = MollifierSpec::builtin(Builtin::Psi4_1d).scaled(0.1)?;
    println!("psi_0.1(0) = {:.6}, effective radius {:.3}", scaled.radial(0.0), scaled.effective_radius());
    Ok(())
}
