use std::path::Path;

use image::{Rgb, RgbImage};

use crate::{Error, Result};

const W: u32 = 480;
const H: u32 = 320;
const MARGIN: f64 = 32.0;

fn put(img: &mut RgbImage, x: i64, y: i64, c: Rgb<u8>) {
    if (0..W as i64).contains(&x) && (0..H as i64).contains(&y) {
        img.put_pixel(x as u32, y as u32, c);
    }
}

fn line(img: &mut RgbImage, (x0, y0): (f64, f64), (x1, y1): (f64, f64), c: Rgb<u8>) {
    let steps = (x1 - x0).abs().max((y1 - y0).abs()).ceil().max(1.0) as i64;
    for i in 0..=steps {
        let t = i as f64 / steps as f64;
        put(img, (x0 + t * (x1 - x0)).round() as i64, (y0 + t * (y1 - y0)).round() as i64, c);
    }
}

/// Polyline of `ys` against `xs` with axes and point markers, written as PNG.
/// Non-finite points are skipped.
pub fn line_plot_png(path: &Path, xs: &[f64], ys: &[f64]) -> Result<()> {
    let mut img = RgbImage::from_pixel(W, H, Rgb([255, 255, 255]));
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .map(|(&x, &y)| (x, y))
        .collect();
    let axis = Rgb([0, 0, 0]);
    let (w, h) = (f64::from(W), f64::from(H));
    line(&mut img, (MARGIN, h - MARGIN), (w - MARGIN, h - MARGIN), axis);
    line(&mut img, (MARGIN, MARGIN), (MARGIN, h - MARGIN), axis);
    if !pts.is_empty() {
        let span = |v: &mut dyn Iterator<Item = f64>| {
            let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
            if hi > lo {
                (lo, hi)
            } else {
                (lo - 0.5, hi + 0.5)
            }
        };
        let (x0, x1) = span(&mut pts.iter().map(|p| p.0));
        let (y0, y1) = span(&mut pts.iter().map(|p| p.1));
        let map = |(x, y): (f64, f64)| {
            (
                MARGIN + (x - x0) / (x1 - x0) * (w - 2.0 * MARGIN),
                h - MARGIN - (y - y0) / (y1 - y0) * (h - 2.0 * MARGIN),
            )
        };
        let blue = Rgb([31, 119, 180]);
        for pair in pts.windows(2) {
            line(&mut img, map(pair[0]), map(pair[1]), blue);
        }
        for &p in &pts {
            let (cx, cy) = map(p);
            for dy in -2..=2 {
                for dx in -2..=2 {
                    put(&mut img, cx.round() as i64 + dx, cy.round() as i64 + dy, blue);
                }
            }
        }
    }
    img.save_with_format(path, image::ImageFormat::Png).map_err(|e| match e {
        image::ImageError::IoError(io) => Error::io(path, io),
        other => Error::InvalidState(format!("cannot encode plot: {other}")),
    })
}
