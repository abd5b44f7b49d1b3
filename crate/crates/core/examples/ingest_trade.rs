//! Parse a trade-flow file, report rejected rows, and build the export
//! matrix for one year.

use econfit::ingest::{build_export_matrix, parse_trade_flows, TradeSchema};

const TRADE: &str = "\
year,exporter,product,value
2000,ITA,0101,120.5
2000,ITA,0102,30
2000,DEU,0101,80
2000,DEU,0103,410
2000,DEU,0103,15
2000,FRA,0102,-4
2000,FRA,0103,55
2001,ITA,0101,130
";

fn main() -> econfit::Result<()> {
    let parsed = parse_trade_flows(TRADE.as_bytes(), &TradeSchema::default())?;
    for r in &parsed.rejections {
        println!("rejected line {}: {}", r.line, r.reason);
    }
    // Duplicate (DEU, 0103) rows are summed.
    let x = build_export_matrix(&parsed.flows, 2000)?;
    print!("{}", x.to_csv_string());
    Ok(())
}
