//! Reorder a sparse cube by test-values so full cells gather together.
//!
//! ```text
//! cargo run -p xdw --example mca_arrangement [seed]
//! ```

use xdw::cube::{build_cube, switch, Aggregate, AxisSpec, Cube};
use xdw::fixtures::generate_fixture;
use xdw::mining::mca::arrange;

fn grid(cube: &Cube) {
    let (rows, cols) = (&cube.axes[0].members, &cube.axes[1].members);
    print!("{:>5}", "");
    for c in cols {
        print!("{:>5}", c);
    }
    println!();
    for r in rows {
        print!("{:>5}", r);
        for c in cols {
            match cube.value(&[r, c]) {
                Some(v) => print!("{:>5}", v),
                None => print!("{:>5}", "."),
            }
        }
        println!();
    }
}

fn main() -> xdw::Result<()> {
    let seed: u64 = std::env::args().nth(1).map(|a| a.parse().expect("seed")).unwrap_or(1);
    let w = generate_fixture("figure5-blocks", seed)?;
    let axes = [
        AxisSpec::new("transcription-d", "token"),
        AxisSpec::new("time-d", "location-in-transcription"),
    ];
    let mut cube = build_cube(&w, &axes, "frequency", Aggregate::Sum)?;
    for a in &axes {
        let mut order = cube.axis(&a.dim_id).unwrap().members.clone();
        order.sort();
        cube = switch(&cube, &a.dim_id, &order)?;
    }

    let result = arrange(&w, &cube)?;
    let explained: Vec<String> = result.factorial.explained().iter().map(|e| format!("{:.3}", e)).collect();
    println!("eigenvalues {:?}", result.factorial.eigenvalues);
    println!("explained   [{}]", explained.join(", "));

    grid(&cube);
    println!("homogeneity {:.4}\n", result.before.value);
    grid(&result.cube);
    println!("homogeneity {:.4}", result.after.value);
    Ok(())
}
