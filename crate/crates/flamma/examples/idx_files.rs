//! Writing and reading the big-endian IDX image/label format.
//!
//! The image file carries magic 0x00000803, a count, row and column sizes,
//! then raw `u8` pixels; the label file carries magic 0x00000801, a count,
//! then raw labels. The loader validates magics, dimensions, and that the
//! two files agree on the number of items, and scales pixels to [0, 1].

use flamma::datasets::{load_idx, write_idx_images, write_idx_labels};

fn main() -> flamma::Result<()> {
    let dir = std::env::temp_dir().join("flamma_idx_example");
    std::fs::create_dir_all(&dir).map_err(|e| flamma::Error::io(&dir, e))?;
    let images_path = dir.join("digits-images.idx3-ubyte");
    let labels_path = dir.join("digits-labels.idx1-ubyte");

    // Three 2x3 "images" with easy-to-spot pixel values.
    let images = vec![
        vec![0, 51, 102, 153, 204, 255],
        vec![255, 204, 153, 102, 51, 0],
        vec![0, 0, 0, 255, 255, 255],
    ];
    write_idx_images(&images_path, 2, 3, &images)?;
    write_idx_labels(&labels_path, &[0, 1, 1])?;

    let dataset = load_idx(&images_path, &labels_path)?;
    println!(
        "loaded {} images of {} pixels, {} classes",
        dataset.rows(),
        dataset.dim(),
        dataset.num_classes()
    );
    for i in 0..dataset.rows() {
        let pixels: Vec<String> = dataset.row(i).iter().map(|p| format!("{p:.2}")).collect();
        println!("  image {i}: label {} pixels [{}]", dataset.label(i), pixels.join(", "));
    }
    assert_eq!(dataset.row(0)[5], 1.0); // 255 scales to exactly 1

    // Corruption is caught with a pointed error, not a mangled dataset.
    let mut bytes = std::fs::read(&images_path).map_err(|e| flamma::Error::io(&images_path, e))?;
    bytes[3] = 0x07;
    let bad_path = dir.join("corrupt.idx3-ubyte");
    std::fs::write(&bad_path, &bytes).map_err(|e| flamma::Error::io(&bad_path, e))?;
    let err = load_idx(&bad_path, &labels_path).unwrap_err();
    println!();
    println!("corrupted magic rejected: {err}");

    write_idx_labels(&labels_path, &[0, 1])?;
    let err = load_idx(&images_path, &labels_path).unwrap_err();
    println!("count mismatch rejected: {err}");
    Ok(())
}
