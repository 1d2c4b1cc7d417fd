//! SSMD, chroma, grooving and note-density metrics on small constructed rolls.
//!
//! `cargo run --example music_metrics -- [target.json pred.json]`

use stripes::metrics::evaluate;
use stripes::pianoroll::{load_pianoroll, Pianoroll};

fn arpeggio(pitches: &[usize], length: usize) -> stripes::Result<Pianoroll> {
    let mut roll = Pianoroll::zeros(1, 4, length)?;
    for t in (0..length).step_by(2) {
        let p = pitches[(t / 2) % pitches.len()];
        roll.add_note(0, p, t, t + 2)?;
    }
    Ok(roll)
}

fn main() -> stripes::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if let [target, pred] = args.as_slice() {
        let b = evaluate(&load_pianoroll(&std::fs::read(target)?)?, &load_pianoroll(&std::fs::read(pred)?)?)?;
        println!("{}", serde_json::to_string(&b)?);
        return Ok(());
    }

    let target = arpeggio(&[60, 64, 67, 72], 32)?;
    let cases = [
        ("identical", target.clone()),
        ("transposed by a fifth", arpeggio(&[67, 71, 74, 79], 32)?),
        ("half the notes", arpeggio(&[60, 67], 32)?),
        ("empty", Pianoroll::zeros(1, 4, 32)?),
    ];
    println!("{:<22} {:>8} {:>8} {:>8} {:>8}", "prediction", "SSMD", "CS", "GS", "NDD");
    for (name, pred) in &cases {
        let b = evaluate(&target, pred)?;
        println!("{name:<22} {:>8.2} {:>8.2} {:>8.2} {:>8.2}", b.ssmd, b.cs, b.gs, b.ndd);
    }

    let tiled = evaluate(&target.tiled(3)?, &cases[1].1.tiled(3)?)?;
    println!("\ntransposed, tiled 3x: {tiled:?}");
    Ok(())
}
