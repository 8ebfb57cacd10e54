use std::path::PathBuf;

/// Directory holding the raw MNIST IDX files: `$KSPECTRA_MNIST_DIR`, else
/// `<workspace>/data`. `None` when the training files are not there.
pub fn mnist_dir() -> Option<PathBuf> {
    let dir = std::env::var_os("KSPECTRA_MNIST_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data"));
    let present = ["train-images-idx3-ubyte", "train-labels-idx1-ubyte"]
        .iter()
        .all(|f| dir.join(f).exists() || dir.join(format!("{f}.gz")).exists());
    present.then_some(dir)
}

/// Resolves `name` inside `dir`, preferring the uncompressed file.
pub fn idx_file(dir: &std::path::Path, name: &str) -> PathBuf {
    let plain = dir.join(name);
    if plain.exists() {
        plain
    } else {
        dir.join(format!("{name}.gz"))
    }
}
