//! Build instances on top of a base-station cell table.
//!
//! The table needs `lat`, `lon` and `samples` columns. Cells with too few
//! users are dropped, as are malformed rows.
//!
//! ```bash
//! cargo run --release --example cell_ingest -- cells.csv 20
//! ```

use std::io::Write;
use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sccmoco::instance::{generate_instance, ingest_cells, GeneratorConfig, LocationSource};

const DEMO: &str = "radio,lat,lon,samples
LTE,37.3382,-121.8863,120
LTE,37.3541,-121.9552,45
LTE,37.3688,-122.0363,300
UMTS,37.4419,-122.1430,12
LTE,37.3230,-122.0322,80
LTE,37.2872,-121.9500,64
LTE,not-a-number,-121.9,99
GSM,37.4030,-121.9700,210
";

fn main() -> sccmoco::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = tempfile::tempdir().expect("temp dir");
    let path = match args.next() {
        Some(p) => PathBuf::from(p),
        None => {
            let p = dir.path().join("cells.csv");
            std::fs::File::create(&p)
                .and_then(|mut f| f.write_all(DEMO.as_bytes()))
                .expect("write demo table");
            p
        }
    };
    let min_users: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(20);

    let ingest = ingest_cells(&path, min_users)?;
    println!("{} cells kept, {} rows skipped", ingest.records.len(), ingest.skipped);

    let cfg = GeneratorConfig {
        num_mecs: ingest.records.len().min(4),
        locations: LocationSource::Cells(ingest.records),
        ..GeneratorConfig::desk()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for i in 0..3 {
        let inst = generate_instance(&cfg, &format!("cells-{i}"), &mut rng)?;
        let sites: Vec<String> = inst
            .mecs
            .iter()
            .map(|m| format!("({:.3}, {:.3})", m.location.lat, m.location.lon))
            .collect();
        println!(
            "{}: {} pairs, mean inter-cell {:.1} km, sites {}",
            inst.id,
            inst.num_pairs(),
            inst.mean_intercell_km(),
            sites.join(" ")
        );
    }
    Ok(())
}
