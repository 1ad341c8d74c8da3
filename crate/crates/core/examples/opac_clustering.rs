//! Cluster the tokens of a generated warehouse, inspect partition quality,
//! and turn the chosen partition into a new hierarchy level.
//!
//! ```text
//! cargo run -p xdw --example opac_clustering [k]
//! ```

use xdw::cube::{build_cube, roll_up, Aggregate, AxisSpec};
use xdw::evolution::apply_ruleset;
use xdw::fixtures::generate_fixture;
use xdw::mining::opac::{cut_partition, opac, partition_to_rules, OpacParams};

fn main() -> xdw::Result<()> {
    let k: usize = std::env::args().nth(1).map(|a| a.parse().expect("k")).unwrap_or(3);
    let w = generate_fixture("clapi-small", 1)?;
    let axes = [
        AxisSpec::new("transcription-d", "token"),
        AxisSpec::new("time-d", "location-in-transcription"),
    ];
    let cube = build_cube(&w, &axes, "frequency", Aggregate::Sum)?;

    let result = opac(&cube, "transcription-d", Some(&w), &OpacParams::default())?;
    for m in &result.dendrogram.merges {
        println!("merge {:>2} + {:>2}  height {:.4}  size {}", m.left, m.right, m.height, m.size);
    }
    println!("k   within   between  ratio");
    for q in &result.quality {
        println!("{:<3} {:<8.4} {:<8.4} {:.4}", q.k, q.within, q.between, q.ratio);
    }

    let partition = cut_partition(&result.dendrogram, k)?;
    let names: Vec<String> = (1..=k).map(|i| format!("cluster-{}", i)).collect();
    for (n, c) in names.iter().zip(&partition.clusters) {
        println!("{}: {}", n, c.join(" "));
    }
    let rules = partition_to_rules(&partition, &cube, &w, "transcription-d", "token-cluster", "cluster", &names)?;
    print!("{}", rules);

    // Tokens of one cluster may belong to different transcriptions, in which
    // case the new level cannot sit below `transcription` and apply refuses.
    match apply_ruleset(&w, &rules) {
        Ok((evolved, _)) => {
            let cube = build_cube(&evolved, &axes, "frequency", Aggregate::Sum)?;
            print!("{}", roll_up(&cube, &evolved, "transcription-d", "token-cluster")?.to_table());
        }
        Err(e) => println!("not applied ({}): {}", e.code(), e),
    }
    Ok(())
}
