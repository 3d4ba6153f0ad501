//! Which part of the talker's directivity pattern each ear hears, as the
//! talker moves closer.

use binaural_orient::directivity::parallax_adjust;
use binaural_orient::SceneGeometry;

fn main() -> binaural_orient::Result<()> {
    println!("{:>8} {:>8} {:>8} {:>10} {:>10}", "dir", "ori", "r (m)", "left", "right");
    for r in [0.5, 1.0, 1.5, 5.0] {
        for dir in [-60.0, 0.0, 45.0, 90.0] {
            let g = SceneGeometry::new(dir, 0.0, r, 0.18)?;
            let (l, rt) = parallax_adjust(&g);
            println!("{dir:>8.1} {:>8.1} {r:>8.2} {l:>10.3} {rt:>10.3}", g.theta_ori_deg);
        }
    }
    Ok(())
}
