use pseudobox::{BoundingBox, ClassLabel, Dataset, Detection, GtObject, ImageRecord, ImageSize};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_box(rng: &mut impl Rng, w: i32, h: i32, min_side: i32) -> BoundingBox {
    let bw = rng.random_range(min_side..=w / 2);
    let bh = rng.random_range(min_side..=h / 2);
    let x = rng.random_range(1..=w - bw);
    let y = rng.random_range(1..=h - bh);
    BoundingBox::new(x, y, x + bw, y + bh).unwrap()
}

/// A VOC-shaped dataset: 500x375 images with 1 to 4 objects each, classes
/// drawn over all 20 categories, about 10% difficult.
pub fn voc_like(n_images: usize, seed: u64) -> Dataset {
    let mut rng = rng(seed);
    let images = (0..n_images)
        .map(|i| {
            let n = rng.random_range(1..=4);
            let objects = (0..n)
                .map(|_| GtObject {
                    class: ClassLabel::ALL[rng.random_range(0..20)],
                    bbox: random_box(&mut rng, 500, 375, 20),
                    difficult: rng.random_bool(0.1),
                })
                .collect();
            ImageRecord {
                image_id: format!("{:06}", i + 1),
                size: Some(ImageSize {
                    width: 500,
                    height: 375,
                }),
                objects,
            }
        })
        .collect();
    Dataset::new("synthetic", images).unwrap()
}

/// A desk-scale evaluation instance: at most 3 images with at most 4 objects
/// each, and at most 6 detections per class, all inside a 40x40 canvas so
/// overlaps are frequent. Classes come from a 3-class pool; scores are on a
/// coarse grid so ties occur.
pub fn small_instance(rng: &mut impl Rng) -> (Dataset, Vec<Detection>) {
    let pool = [ClassLabel::Cat, ClassLabel::Dog, ClassLabel::Person];
    let n_images = rng.random_range(1..=3);
    let images: Vec<ImageRecord> = (0..n_images)
        .map(|i| {
            let n = rng.random_range(0..=4);
            ImageRecord {
                image_id: format!("img{i}"),
                size: None,
                objects: (0..n)
                    .map(|_| GtObject {
                        class: pool[rng.random_range(0..pool.len())],
                        bbox: random_box(rng, 40, 40, 4),
                        difficult: rng.random_bool(0.2),
                    })
                    .collect(),
            }
        })
        .collect();

    let mut dets = Vec::new();
    for class in pool {
        let n = rng.random_range(0..=6);
        for _ in 0..n {
            let img = &images[rng.random_range(0..images.len())];
            // half the time start from a ground-truth box of this class
            let same: Vec<&GtObject> = img.objects.iter().filter(|o| o.class == class).collect();
            let bbox = if !same.is_empty() && rng.random_bool(0.5) {
                let o = same[rng.random_range(0..same.len())].bbox;
                let dx = rng.random_range(-3..=3);
                let dy = rng.random_range(-3..=3);
                BoundingBox::new(o.xmin() + dx, o.ymin() + dy, o.xmax() + dx, o.ymax() + dy)
                    .unwrap()
            } else {
                random_box(rng, 40, 40, 4)
            };
            let score = rng.random_range(0..=10) as f64 / 10.0;
            dets.push(Detection::new(img.image_id.clone(), class, score, bbox).unwrap());
        }
    }
    // shuffle so that ingestion order is unrelated to class
    for i in (1..dets.len()).rev() {
        let j = rng.random_range(0..=i);
        dets.swap(i, j);
    }
    (Dataset::new("small", images).unwrap(), dets)
}

/// Write `dataset` as a devkit tree under `root` with split file `<split>.txt`.
pub fn write_devkit(root: &std::path::Path, split: &str, dataset: &Dataset) {
    let ann = root.join("Annotations");
    let sets = root.join("ImageSets").join("Main");
    std::fs::create_dir_all(&ann).unwrap();
    std::fs::create_dir_all(&sets).unwrap();
    let mut ids = String::new();
    for r in dataset.iter() {
        std::fs::write(
            ann.join(format!("{}.xml", r.image_id)),
            pseudobox::pseudo_labels::write_annotation(r),
        )
        .unwrap();
        ids.push_str(&r.image_id);
        ids.push('\n');
    }
    std::fs::write(sets.join(format!("{split}.txt")), ids).unwrap();
}
