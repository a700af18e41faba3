//! Build a dependence pair from derivatives and inspect the downtime process it implies.

use depvac::dependence::{DependencePair, IncrementForm, PRODUCT_TOL};
use num_complex::Complex64;

fn main() -> depvac::Result<()> {
    for form in [IncrementForm::CompoundPoisson, IncrementForm::LogLst] {
        let pair = DependencePair::from_derivatives_with(-1.2, 3.0, 0.4, -0.5, form)?;
        let stats = pair.lag1_stats();
        println!("{form:?}: g = {}", pair.g().tag());
        println!("  mean {:.6}, second moment {:.6}", stats.mean, stats.second_moment);
        println!("  lag-1 covariance {:.6}, correlation {:.6}", stats.covariance, stats.correlation);
        let s = Complex64::new(0.7, 0.3);
        let d = pair.stationary_lst_bounded(s, PRODUCT_TOL)?;
        println!("  stationary transform at {s}: {:.10} ({} factors)", d.value, d.terms);
    }
    Ok(())
}
