#![allow(dead_code)]

use std::path::{Path, PathBuf};

use nccut_core::image::encode_rgb_png;
use nccut_core::pipeline::Polygon;
use nccut_core::{Mask, RgbImage};

pub const LIGHT: [u8; 3] = [205, 195, 170];
pub const DARK: [u8; 3] = [55, 45, 80];

fn inside(x: usize, y: usize) -> bool {
    (30..70).contains(&x) && (25..60).contains(&y)
}

/// Dark rectangle on a light ground, with its ground truth and a loose quadrilateral ROI.
pub fn two_tone() -> (RgbImage, Mask, Polygon) {
    let image = RgbImage::from_fn(100, 90, |x, y| if inside(x, y) { DARK } else { LIGHT }).unwrap();
    let roi = Polygon::new(vec![[12.0, 8.0], [88.0, 14.0], [84.0, 80.0], [16.0, 76.0]]);
    (image, Mask::from_fn(100, 90, inside), roi)
}

pub fn two_tone_png() -> Vec<u8> {
    encode_rgb_png(&two_tone().0).unwrap()
}

/// Writes the fixture's image, ground truth and ROI into `dir`.
pub fn write_two_tone(dir: &Path) -> (PathBuf, PathBuf, PathBuf) {
    let (_, gt, roi) = two_tone();
    let paths = (dir.join("two_tone.png"), dir.join("two_tone_gt.png"), dir.join("two_tone_roi.json"));
    std::fs::write(&paths.0, two_tone_png()).unwrap();
    std::fs::write(&paths.1, gt.to_png().unwrap()).unwrap();
    std::fs::write(&paths.2, roi.to_json().unwrap()).unwrap();
    paths
}
