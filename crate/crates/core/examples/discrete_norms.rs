//! Grid norms of a sampled function: L^p_h, W^{1,p}_h and the discrete
//! negative Sobolev norm, which never exceeds L^2_h.

use blob_aggregation::norms::{dual_norm_2, lp_norm, w1p_norm, GridFunction, DEFAULT_MARGIN};

fn main() -> blob_aggregation::Result<()> {
    for h in [0.1, 0.05, 0.025] {
        let mut u = GridFunction::new(h, 1)?;
        let n = (1.0 / h).round() as i64;
        for i in -n..=n {
            let x = i as f64 * h;
            u.set(vec![i], (3.0 * x).sin() * (1.0 - x * x));
        }
        println!(
            "h = {h:<6} L1 {:.5}  L2 {:.5}  Linf {:.5}  W1,2 {:.5}  dual2 {:.5}",
            lp_norm(&u, 1.0, None)?,
            lp_norm(&u, 2.0, None)?,
            lp_norm(&u, f64::INFINITY, None)?,
            w1p_norm(&u, 2.0)?,
            dual_norm_2(&u, DEFAULT_MARGIN)?
        );
    }
    // a single spike in 2D: L2 = h, the dual norm is much smaller
    for h in [0.1, 0.01] {
        let mut spike = GridFunction::new(h, 2)?;
        spike.set(vec![0, 0], 1.0);
        println!("spike h = {h}: L2 {:.3e}, dual2 {:.3e}", lp_norm(&spike, 2.0, None)?, dual_norm_2(&spike, DEFAULT_MARGIN)?);
    }
    Ok(())
}
