//! How much the lag-1 dependence between downtimes raises the mean queue length.

use depvac::experiments::figures::figure3;

fn main() -> depvac::Result<()> {
    let table = figure3(10)?;
    for (rate, delta) in table.values("phase_rate").iter().zip(table.values("delta_percent")) {
        println!("phase rate {rate:>10.4}: mean up {delta:>8.3}%");
    }
    Ok(())
}
