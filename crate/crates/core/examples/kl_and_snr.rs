//! Information per call between two Gaussian score laws.

use benchlab::discrim::{kl_gaussian, kl_product, misrank_bound, snr, GaussianKernelParams};

pub fn run_example() -> benchlab::Result<()> {
    let p = GaussianKernelParams::new(0.62, 0.04)?;
    let q = GaussianKernelParams::new(0.58, 0.05)?;
    let kl = kl_gaussian(p, q)?;
    let s = snr(p.mean, p.variance, q.mean, q.variance)?;
    println!("KL(p||q) per call {kl:.5}, over 100 calls {:.4}", kl_product(kl, 100)?);
    println!("SNR {s:.5}");
    for n in [10, 100, 1000] {
        println!("n={n:<5} misranking bound {:.4}", misrank_bound(0.04, 0.2, n)?);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> benchlab::Result<()> {
    run_example()
}
