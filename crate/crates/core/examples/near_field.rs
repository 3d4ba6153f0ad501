//! How much a close talker changes what each ear hears, relative to a
//! distant one.

use binaural_orient::directivity::Sphere;

fn main() {
    let head = Sphere {
        radius_m: 0.0875,
        speed_of_sound_mps: 343.0,
    };
    let freqs = [250.0, 1000.0, 4000.0, 8000.0];
    print!("{:>10} {:>8}", "incidence", "r (m)");
    for f in freqs {
        print!(" {:>9}", format!("{f} Hz"));
    }
    println!();
    for incidence in [0.0, 90.0, 150.0, 180.0] {
        for r in [0.25, 0.5, 1.0, 2.0] {
            print!("{incidence:>10.0} {r:>8.2}");
            for f in freqs {
                let dvf = head.dvf(f, incidence, r, f64::INFINITY);
                print!(" {:>9.2}", 20.0 * dvf.norm().log10());
            }
            println!();
        }
    }
}
