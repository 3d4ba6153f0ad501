//! How alike the responses at different angles are, for the head alone,
//! the talker alone and both together.

use binaural_orient::directivity::{synth_hrtf, synth_vdp};
use binaural_orient::harness::correlation_diagnostic;
use binaural_orient::NearFieldParams;

fn main() -> binaural_orient::Result<()> {
    let (l, r) = synth_hrtf(&NearFieldParams::default(), 5.0, 257, 31.25)?;
    let v = synth_vdp(0.8, 257, 31.25)?;
    let m = correlation_diagnostic(&l, &r, &v, 30.0)?;
    println!("angles: {:?}", m.angles_deg);
    for (name, mat) in [("head", &m.hrtf), ("talker", &m.vdp)] {
        // the frontal talker response is flat
        let side = m.angles_deg.iter().position(|&a| a == 90.0).unwrap();
        println!("{name}, correlation with the response at 90 degrees:");
        let row: Vec<String> = mat[side].iter().map(|c| format!("{c:.2}")).collect();
        println!("  {}", row.join(" "));
    }
    let n = m.combined.len();
    let off: f64 = m.combined.iter().enumerate().flat_map(|(i, r)| r.iter().enumerate().filter(move |(j, _)| *j != i).map(|(_, c)| *c)).sum();
    println!("combined: {n} x {n}, mean off-diagonal correlation {:.3}", off / (n * (n - 1)) as f64);
    let dir = std::env::temp_dir().join("binaural-orient-corr");
    m.write_csv(&dir)?;
    println!("matrices in {}", dir.display());
    Ok(())
}
