use pumpstation::features::{build_matrix, resample_uniform};
use pumpstation::forecast::*;
use pumpstation::plant::*;
use std::time::Instant;

fn main() {
    let cfg = PlantConfig::default();
    let intake = generate_intake(&cfg, 30).unwrap();
    let mut controller = BaselineController::new(cfg.clone());
    let sim = simulate_plant(&intake, &mut controller, &cfg).unwrap();
    let records = irregularize(&sim.records, &cfg);
    let series = IntakeSeries::from_records(&records).unwrap();
    let (uniform, _) = resample_uniform(&series, 2).unwrap();
    let t0 = Instant::now();
    let tables = build_matrix(&uniform, 20).unwrap();
    println!("build_matrix: {:?}; rows/table ~{}", t0.elapsed(), tables[0].len());
    let table = &tables[0];
    let upto = (table.len() as f64 * 0.8) as usize;

    let t0 = Instant::now();
    let binned = BinnedDataset::new(&table.rows[..upto]);
    println!("binning: {:?}", t0.elapsed());

    let t0 = Instant::now();
    for permille in [50u16, 500, 950] {
        let _ = pumpstation::forecast::gbt::fit_gbt_binned(
            &binned, &table.targets[..upto], GbtLoss::Quantile(permille as f64 / 1000.0), &GbtParams::default()).unwrap();
    }
    println!("3 gbt quantile fits: {:?} (x{} more to go)", t0.elapsed(), 20 * 19 - 3);

    let t0 = Instant::now();
    for permille in [50u16, 500, 950] {
        let _ = fit_lqr(&table.rows[..upto], &table.targets[..upto], permille as f64 / 1000.0).unwrap();
    }
    println!("3 lqr fits: {:?}", t0.elapsed());
}
