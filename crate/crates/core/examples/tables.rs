//! Synthesize a head and a talker, store the tables and inspect them.

use binaural_orient::directivity::{read_table, synth_hrtf_model, synth_vdp, write_table, HeadModel};
use binaural_orient::NearFieldParams;

fn db(x: f64) -> f64 {
    20.0 * x.log10()
}

fn main() -> binaural_orient::Result<()> {
    let head = HeadModel {
        near_field: NearFieldParams::default().with_ear_azimuth(100.0)?,
        pinna_shadow: 0.6,
    };
    let (left, right) = synth_hrtf_model(&head, 5.0, 257, 31.25)?;
    let vdp = synth_vdp(0.9, 257, 31.25)?;

    let dir = std::env::temp_dir().join("binaural-orient-tables");
    std::fs::create_dir_all(&dir)?;
    write_table(&right, dir.join("hrtf_right.dirt"))?;
    let right = read_table(dir.join("hrtf_right.dirt"))?;
    println!("tables written to {}", dir.display());

    let k = 128; // 4 kHz
    println!("{:>6} {:>10} {:>10} {:>10}", "az", "ILD dB", "VDP dB", "|right|");
    for az in [0.0, 30.0, 60.0, 90.0, 120.0, 150.0, -180.0] {
        let l = left.lookup(az).bins[k].norm();
        let r = right.lookup(az).bins[k].norm();
        let v = vdp.lookup(az).bins[k].norm();
        println!("{az:>6.0} {:>10.2} {:>10.2} {:>10.3}", db(l / r), db(v), r);
    }
    Ok(())
}
