//! Writes the example models as TOML files, one per model:
//!
//! ```text
//! cargo run -p affine-pricer-core --example emit_models -- models/
//! ```

use affine_pricer_core::{builtin_models, ModelDocument};

fn main() {
    let dir = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "models".to_string());
    std::fs::create_dir_all(&dir).expect("create output directory");
    for model in builtin_models() {
        let path = format!("{dir}/{}.toml", model.name);
        ModelDocument::from_instance(&model)
            .save(std::path::Path::new(&path))
            .expect("write model file");
        println!("wrote {path}");
    }
}
