//! Write the built-in room presets out as scene files.
//!
//! ```sh
//! cargo run -p owc-sim-cli --example export_presets -- scenes/
//! ```

use owc_sim::scene::{build_room_a, build_room_b, serialize_scene};

fn main() -> std::io::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "scenes".into());
    std::fs::create_dir_all(&dir)?;
    for (name, scene) in [("room-a", build_room_a()), ("room-b", build_room_b())] {
        let path = std::path::Path::new(&dir).join(format!("{name}.scene"));
        std::fs::write(&path, serialize_scene(&scene))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
