//! Write a small dataset in the on-disk formats and read it back.

use std::fs;

use d3_encoding::io::{self, Manifest, ManifestEntry};
use ndarray::array;

fn main() -> anyhow::Result<()> {
    let dir = tempfile::tempdir()?;
    let sets = [(0, array![[1.0f32, 2.0], [3.0, 4.0]]), (1, array![[-1.0f32, 0.5]])];
    let mut manifest = Manifest::default();
    for (i, (label, m)) in sets.iter().enumerate() {
        let path = dir.path().join(format!("set{i}.svec"));
        io::write_svec(&path, m)?;
        manifest.entries.push(ManifestEntry { label: *label, path });
    }
    let manifest_path = dir.path().join("manifest.tsv");
    fs::write(&manifest_path, format!("# label<TAB>path\n{}", manifest.render(dir.path())))?;
    print!("{}", fs::read_to_string(&manifest_path)?);

    let bytes = fs::read(dir.path().join("set0.svec"))?;
    let hex: Vec<String> = bytes.iter().map(|b| format!("{b:02x}")).collect();
    println!("set0.svec ({} bytes): {}", bytes.len(), hex.join(" "));

    let loaded = Manifest::read(&manifest_path)?.load_sets()?;
    for s in &loaded {
        println!("label {:?}: {} vectors of dim {}", s.label(), s.len(), s.dim());
    }

    let mut corrupt = bytes.clone();
    corrupt[0] = b'X';
    println!("corrupted: {}", io::decode_svec(&corrupt).unwrap_err());
    println!("truncated: {}", io::decode_svec(&bytes[..bytes.len() - 1]).unwrap_err());
    Ok(())
}
