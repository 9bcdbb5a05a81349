//! Regenerates the bundled regression suite under `fixtures/suite`.
//!
//! Inputs and ground truth are produced by the reference oracles in
//! `tests/common/oracle.rs`, never by the engine itself.
//!
//!     cargo run -p boostlet-core --example gen_fixtures

#[path = "../tests/common/oracle.rs"]
mod oracle;

use std::fs;
use std::path::Path;

use oracle::Raw;

const BLUR_3X3: [f64; 9] = [
    0.0625, 0.125, 0.0625, //
    0.125, 0.25, 0.125, //
    0.0625, 0.125, 0.0625,
];
const ROI: [usize; 4] = [64, 72, 128, 96];

fn main() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/suite");
    for sub in ["inputs", "truth", "manifests"] {
        fs::create_dir_all(root.join(sub)).unwrap();
    }

    let (w, h) = (256, 256);
    let rgb = oracle::phantom(w, h);
    fs::write(root.join("inputs/phantom.png"), oracle::png_bytes(w, h, 2, &rgb)).unwrap();
    let phantom = Raw::new(
        w,
        h,
        4,
        rgb.chunks(3).flat_map(|p| [p[0], p[1], p[2], 255]).collect(),
    );

    let small = oracle::phantom(96, 80);
    let gray = Raw::new(96, 80, 1, small.chunks(3).map(|p| p[0]).collect());
    oracle::write_png(&root.join("inputs/phantom-gray.png"), &gray);

    let truth = |name: &str, img: &Raw| oracle::write_png(&root.join(format!("truth/{name}.png")), img);

    truth("sobel-phantom", &oracle::convolve(&phantom, 3, &oracle::SOBEL_X));
    truth("invert-phantom", &oracle::invert(&phantom));
    let mask: Vec<bool> = oracle::luma(&phantom).data.iter().map(|&g| g >= 128).collect();
    truth("threshold-mask-phantom", &oracle::overlay(&phantom, &mask, [255, 0, 0], 0.5));
    truth("histogram-phantom", &phantom);
    let [x, y, rw, rh] = ROI;
    let blurred = oracle::convolve(&oracle::crop(&phantom, x, y, rw, rh), 3, &BLUR_3X3);
    truth("roi-blur-phantom", &oracle::paste(&phantom, &blurred, x, y));
    truth(
        "sobel-gray",
        &oracle::convolve(&oracle::gray_to_rgba(&gray), 3, &oracle::SOBEL_X),
    );

    let manifest = serde_json::json!({
        "id": "roi-blur",
        "name": "ROI Blur",
        "category": "filters",
        "description": "Gaussian blur restricted to a selected box",
        "pipeline": [
            { "op": "crop", "hint": { "message": "cropping to selection", "duration_ms": 1000 } },
            { "op": "filter", "params": { "size": 3, "weights": BLUR_3X3 } }
        ],
        "interactions": ["box", { "seeds": 1 }]
    });
    write_json(&root.join("manifests/roi-blur.json"), &manifest);

    let case = |name: &str, input: &str, plugin: &str, interactions: serde_json::Value| {
        let doc = serde_json::json!({
            "name": name,
            "input": format!("inputs/{input}"),
            "manifest": plugin,
            "interactions": interactions,
            "ground_truth": format!("truth/{name}.png"),
        });
        write_json(&root.join(format!("{name}.case.json")), &doc);
    };
    let none = serde_json::json!([]);
    case("sobel-phantom", "phantom.png", "sobel-edge", none.clone());
    case("invert-phantom", "phantom.png", "invert", none.clone());
    case("threshold-mask-phantom", "phantom.png", "threshold-mask", none.clone());
    case("histogram-phantom", "phantom.png", "histogram", none.clone());
    case(
        "roi-blur-phantom",
        "phantom.png",
        "manifests/roi-blur.json",
        serde_json::json!([{ "box": ROI }, { "seed": [100, 100] }]),
    );
    case("sobel-gray", "phantom-gray.png", "sobel-edge", none);
    println!("wrote fixtures to {}", root.display());
}

fn write_json(path: &Path, value: &serde_json::Value) {
    let mut text = serde_json::to_string_pretty(value).unwrap();
    text.push('\n');
    fs::write(path, text).unwrap();
}
