//! From raw exports to the pruned binary country-product matrix.

use econfit::matrix::ExportMatrix;
use econfit::rca::{binarize, compute_rca, prune};

fn main() -> econfit::Result<()> {
    let x = ExportMatrix::from_rows(&[
        vec![10.0, 0.0, 5.0, 0.0],
        vec![1.0, 8.0, 0.0, 0.0],
        vec![0.0, 0.0, 0.0, 0.0],
        vec![4.0, 4.0, 4.0, 0.0],
    ])?;
    let r = compute_rca(&x)?;
    print!("RCA\n{}", r.to_csv_string());

    let m = binarize(&r, 1.0)?;
    let (pruned, report) = prune(&m)?;
    println!(
        "removed countries {:?}, products {:?}",
        report.removed_countries, report.removed_products
    );
    print!("M\n{}", pruned.to_csv_string());
    Ok(())
}
