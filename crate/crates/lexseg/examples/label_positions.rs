//! Stretches each document's label sequence onto a fixed number of bins and
//! prints the label mix at a few relative positions.
//!
//! cargo run --example label_positions

use lexseg::analysis::label_position_distribution;
use lexseg::corpus::Label;
use lexseg::synthetic::{generate, SyntheticSpec};

fn main() -> lexseg::Result<()> {
    let docs = generate(&SyntheticSpec::default());
    let grid = label_position_distribution(&docs, 20)?;
    for (context, rows) in &grid.contexts {
        print!("{context:<6}");
        for bin in [0, 5, 10, 15, 19] {
            let mut counts = [0usize; 3];
            rows.iter().for_each(|(_, labels)| counts[labels[bin].index()] += 1);
            let share = |l: Label| counts[l.index()] as f64 / rows.len() as f64;
            print!(
                "  bin {bin:>2}: B {:.2} A {:.2} O {:.2}",
                share(Label::Background),
                share(Label::Analysis),
                share(Label::Outcome)
            );
        }
        println!();
    }
    let svg = lexseg::svg::label_heatmap(&grid, "alpha").expect("context exists");
    println!("alpha heatmap: {} bytes of SVG", svg.len());
    Ok(())
}
