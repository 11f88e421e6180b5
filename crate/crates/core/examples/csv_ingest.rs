// Loading CSV files with different calendars and aligning them into a
// panel, first by intersection and then with bounded forward fill.

use apt_roll::panel::{align, excess_series, annual_to_period, read_csv, to_returns, AlignAction, CalendarPolicy, CsvSchema, ReturnKind, TaggedSeries};

const PRICES: &str = "\
date,SONY,TOYOTA
2024-01-04,13000,2800
2024-01-05,13150,2815
2024-01-09,13020,2790
2024-01-10,13300,2850
2024-01-11,13420,2861
2024-01-12,13390,2877
";

const MACRO: &str = "\
Date;GENSAKI
2024-01-04;0.0010
2024-01-05;0.0010
2024-01-09;0.0010
2024-01-10;0.0011
2024-01-11;0.0011
2024-01-12;0.0011
";

// the factor misses 2024-01-10
const FACTOR: &str = "\
date,MKT
2024-01-05,0.004
2024-01-09,-0.006
2024-01-11,0.012
2024-01-12,0.001
";

pub fn run_example() -> apt_roll::Result<()> {
    let prices = read_csv(PRICES.as_bytes(), &CsvSchema::default())?;
    let schema = CsvSchema {
        delimiter: b';',
        ..CsvSchema::with_date_column("Date")
    };
    let macro_ = read_csv(MACRO.as_bytes(), &schema)?;
    let rf = annual_to_period(&macro_[0], 245.0)?;

    let mut tagged = Vec::new();
    for p in &prices {
        let r = to_returns(p, ReturnKind::Log)?;
        tagged.push(TaggedSeries::asset(excess_series(&r, &rf)?.renamed(p.id())));
    }
    let factor = read_csv(FACTOR.as_bytes(), &CsvSchema::default())?;
    tagged.push(TaggedSeries::factor(factor[0].clone()));

    for policy in [CalendarPolicy::intersection(), CalendarPolicy::forward_fill(3)] {
        let (panel, report) = align(&tagged, policy)?;
        println!("{:?}: {} rows", policy.join_mode, panel.len());
        for (d, row) in panel.dates().iter().zip(panel.excess_returns().row_iter()) {
            let cells: Vec<String> = row.iter().map(|x| format!("{x:+.5}")).collect();
            println!("  {d} {}", cells.join(" "));
        }
        for e in report.entries.iter().filter(|e| e.action != AlignAction::Kept) {
            println!("  {} {} {}", e.date, e.series, e.action.as_str());
        }
    }

    let bad = "date,X\n2024-01-04,1\n2024-01-04,2\n";
    match read_csv(bad.as_bytes(), &CsvSchema::default()) {
        Err(e) => println!("rejected: {e}"),
        Ok(_) => println!("unexpectedly accepted"),
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
