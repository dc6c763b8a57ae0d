//! Tour of the distance zoo on a pair of discrete mixing measures.
//!
//! Computes W_k by the 1-D quantile formula and cross-checks it against a
//! linear-program transport oracle, then compares the induced Laplace
//! mixtures in Hellinger, L_q, and KL, and finishes with the two upper
//! bounds (coupling and smoothing) that sandwich W_1 from above.

use laplace_deconv::approximation::l1_locality_bound;
use laplace_deconv::distances::{
    contraction_discrepancy, coupling_bound, hellinger, hellinger_sq_laplace_shift,
    kl_divergences, lq_distance, monotone_pairing, smoothing_bound, wasserstein_1d,
};
use laplace_deconv::kernels::{Kernel, MixtureDensity};
use laplace_deconv::linprog::transport_lp;
use laplace_deconv::measures::DiscreteMeasure;

fn main() -> laplace_deconv::Result<()> {
    let g = DiscreteMeasure::new(vec![-0.7, -0.1, 0.4, 0.8], vec![0.3, 0.3, 0.2, 0.2], 1.0)?;
    let gp = DiscreteMeasure::new(vec![-0.5, 0.2, 0.6], vec![0.4, 0.4, 0.2], 1.0)?;

    println!("Wasserstein (quantile formula vs LP transport oracle):");
    for k in [1.0, 2.0, 4.0] {
        let quick = wasserstein_1d(&g, &gp, k)?;
        let oracle = transport_lp(&g, &gp, k)?;
        println!("  W_{k}: {quick:.12}  lp: {oracle:.12}  gap: {:.2e}", (quick - oracle).abs());
    }

    let p = MixtureDensity::new(Kernel::Laplace, g.clone());
    let q = MixtureDensity::new(Kernel::Laplace, gp.clone());
    println!("\nMixture-level distances (Laplace kernel):");
    println!("  hellinger: {:.10}", hellinger(&p, &q)?);
    for order in [1.0, 2.0] {
        println!("  l{order}: {:.10}", lq_distance(&p, &q, order)?);
    }
    let (k1, k2) = kl_divergences(&p, &q)?;
    println!("  kl: {k1:.10}  second-order: {k2:.10}");

    // Shifting a Laplace by theta has a closed-form squared Hellinger,
    // giving the quadrature an exact target.
    println!("\nClosed-form check on shifted Laplace kernels:");
    for theta in [0.5, 1.0] {
        let a = 2.0;
        let s = MixtureDensity::new(Kernel::Laplace, DiscreteMeasure::point_mass(0.0, a)?);
        let t = MixtureDensity::new(Kernel::Laplace, DiscreteMeasure::point_mass(theta, a)?);
        let measured = hellinger(&s, &t)?.powi(2);
        let exact = hellinger_sq_laplace_shift(theta);
        println!("  theta={theta}: quadrature {measured:.12}, closed form {exact:.12}");
    }

    println!("\nUpper bounds on W_1:");
    let w1 = wasserstein_1d(&g, &gp, 1.0)?;
    let pairing = monotone_pairing(&g, &gp);
    let coup = coupling_bound(&g, &gp, &pairing, 1.0, 2.0 * g.halfwidth())?;
    let smooth = smoothing_bound(&p, &q, 1.0, 2.0)?;
    println!("  W_1 = {w1:.6}");
    println!("  coupling bound (monotone pairing): {coup:.6}");
    println!(
        "  smoothing bound: {:.6}  (M = {:.3}, delta = {:.3}, hellinger = {:.6})",
        smooth.bound, smooth.big_m, smooth.delta, smooth.hellinger
    );

    let d = contraction_discrepancy(&p, &q, 1.0)?;
    println!("  testing-rate discrepancy W^3 (log 1/W)^(-3/2) = {d:.6e}");

    // L1 between the mixtures only sees how G distributes mass near each
    // atom of G'; the locality bound makes that quantitative.
    let eps = 0.15;
    let l1 = lq_distance(&p, &q, 1.0)?;
    let local = l1_locality_bound(&g, &gp, eps)?;
    println!("\nL1 locality: measured |p - q|_1 = {l1:.6} <= bound {local:.6} (eps = {eps})");
    Ok(())
}
