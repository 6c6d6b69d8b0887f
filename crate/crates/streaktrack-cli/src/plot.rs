//! Static plot rendering: per-frame overlays with ground truth in green
//! and predictions in red, per-sequence intensity histograms comparing
//! streak pixels against the background, and a metric bar chart for
//! evaluation reports.

use std::path::Path;

use image::{Rgb, RgbImage};

use streaktrack::domain::Bbox;
use streaktrack::grid::Grid2D;
use streaktrack::io::{list_sequence_dirs, read_predictions, read_sequence, PredRow};
use streaktrack::metrics::EvalReport;
use streaktrack::sim::paint_mask;

use crate::commands::CliError;
use crate::font::{draw_text, text_width};

const GREEN: Rgb<u8> = Rgb([40, 220, 70]);
const RED: Rgb<u8> = Rgb([230, 60, 50]);
const GRAY: Rgb<u8> = Rgb([150, 150, 150]);
const WHITE: Rgb<u8> = Rgb([235, 235, 235]);
const DARK: Rgb<u8> = Rgb([20, 20, 26]);

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn save(img: &RgbImage, path: &Path) -> Result<(), CliError> {
    img.save(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn draw_rect(img: &mut RgbImage, b: &Bbox, color: Rgb<u8>) {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let x0 = b.x_min.floor() as i64;
    let x1 = b.x_max.ceil() as i64;
    let y0 = b.y_min.floor() as i64;
    let y1 = b.y_max.ceil() as i64;
    let mut put = |x: i64, y: i64| {
        if x >= 0 && y >= 0 && x < w && y < h {
            img.put_pixel(x as u32, y as u32, color);
        }
    };
    for x in x0..=x1 {
        put(x, y0);
        put(x, y1);
    }
    for y in y0..=y1 {
        put(x0, y);
        put(x1, y);
    }
}

fn gray_to_rgb(frame: &Grid2D) -> RgbImage {
    let (w, h) = (frame.width() as u32, frame.height() as u32);
    let mut img = RgbImage::new(w, h);
    for y in 0..h {
        for x in 0..w {
            let v = frame.get(x as usize, y as usize, 0).clamp(0.0, 255.0) as u8;
            img.put_pixel(x, y, Rgb([v, v, v]));
        }
    }
    img
}

/// Plot a dataset split (or a single sequence directory): overlays and
/// intensity histograms.
pub fn plot_dataset(
    dataset: &Path,
    pred: Option<&Path>,
    out: &Path,
    max_frames: usize,
) -> Result<(), CliError> {
    let sequences = if dataset.join("meta.json").is_file() {
        let name = dataset
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "sequence".to_string());
        vec![(name, dataset.to_path_buf())]
    } else {
        list_sequence_dirs(dataset)?
    };
    if sequences.is_empty() {
        println!("no sequences found under {}; nothing to plot", dataset.display());
        return Ok(());
    }

    for (name, dir) in &sequences {
        let (frames, ann, _meta) = read_sequence(dir)?;
        let pred_rows: Vec<PredRow> = match pred {
            Some(p) => {
                let csv = p.join(format!("{name}.csv"));
                if csv.is_file() {
                    read_predictions(&csv)?
                } else {
                    Vec::new()
                }
            }
            None => Vec::new(),
        };

        let seq_out = out.join(name);
        std::fs::create_dir_all(&seq_out).map_err(|e| io_err(&seq_out, e))?;

        let limit = if max_frames == 0 {
            frames.len()
        } else {
            max_frames.min(frames.len())
        };
        for (t, frame) in frames.iter().enumerate().take(limit) {
            let mut img = gray_to_rgb(frame);
            for obj in ann.objects(t + 1) {
                draw_rect(&mut img, &obj.bbox, GREEN);
            }
            for row in pred_rows.iter().filter(|r| r.frame == t + 1) {
                let b = Bbox::new(row.bb_x, row.bb_y, row.bb_x + row.bb_w, row.bb_y + row.bb_h);
                draw_rect(&mut img, &b, RED);
            }
            save(&img, &seq_out.join(format!("overlay_{:06}.png", t + 1)))?;
        }

        let hist = intensity_histogram(&frames, &ann);
        save(&hist, &seq_out.join("intensity_hist.png"))?;
    }
    println!(
        "wrote plots for {} sequences to {}",
        sequences.len(),
        out.display()
    );
    Ok(())
}

/// Two overlaid intensity histograms: streak pixels (red) against
/// background pixels (gray), both normalized to their own peak.
fn intensity_histogram(frames: &[Grid2D], ann: &streaktrack::domain::SequenceAnnotation) -> RgbImage {
    let mut debris = [0u64; 256];
    let mut background = [0u64; 256];
    for (t, frame) in frames.iter().enumerate() {
        let mut mask = Grid2D::new(frame.width(), frame.height(), 1);
        for obj in ann.objects(t + 1) {
            paint_mask(&mut mask, &obj.state);
        }
        for y in 0..frame.height() {
            for x in 0..frame.width() {
                let v = frame.get(x, y, 0).clamp(0.0, 255.0) as usize;
                if mask.get(x, y, 0) > 0.0 {
                    debris[v.min(255)] += 1;
                } else {
                    background[v.min(255)] += 1;
                }
            }
        }
    }

    let (w, h) = (560u32, 320u32);
    let (ml, mb, mt) = (40i64, 30i64, 14i64);
    let mut img = RgbImage::from_pixel(w, h, DARK);
    let plot_w = w as i64 - ml - 10;
    let plot_h = h as i64 - mb - mt;

    let dmax = *debris.iter().max().unwrap_or(&1);
    let bmax = *background.iter().max().unwrap_or(&1);
    let mut draw_series = |counts: &[u64; 256], max: u64, color: Rgb<u8>| {
        if max == 0 {
            return;
        }
        let mut prev: Option<(i64, i64)> = None;
        for (v, &c) in counts.iter().enumerate() {
            let x = ml + v as i64 * plot_w / 255;
            let y = mt + plot_h - ((c as f64 / max as f64) * plot_h as f64) as i64;
            if let Some((px, py)) = prev {
                draw_segment(&mut img, px, py, x, y, color);
            }
            prev = Some((x, y));
        }
    };
    draw_series(&background, bmax, GRAY);
    draw_series(&debris, dmax, RED);

    // Axes and labels.
    draw_segment(&mut img, ml, mt, ml, mt + plot_h, WHITE);
    draw_segment(&mut img, ml, mt + plot_h, ml + plot_w, mt + plot_h, WHITE);
    draw_text(&mut img, ml, mt + plot_h + 8, "0", 1, WHITE);
    draw_text(
        &mut img,
        ml + plot_w - text_width("255", 1) as i64,
        mt + plot_h + 8,
        "255",
        1,
        WHITE,
    );
    draw_text(&mut img, ml + 8, mt, "STREAK", 1, RED);
    draw_text(&mut img, ml + 8 + text_width("STREAK ", 1) as i64, mt, "BACKGROUND", 1, GRAY);
    img
}

fn draw_segment(img: &mut RgbImage, x0: i64, y0: i64, x1: i64, y1: i64, color: Rgb<u8>) {
    // Bresenham.
    let (mut x, mut y) = (x0, y0);
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
            img.put_pixel(x as u32, y as u32, color);
        }
        if x == x1 && y == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

/// Bar chart of the aggregate metrics in an evaluation report.
pub fn plot_report(report_path: &Path, out: &Path) -> Result<(), CliError> {
    let bytes = std::fs::read(report_path).map_err(|e| io_err(report_path, e))?;
    let report: EvalReport = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::Validation(format!("{}: {e}", report_path.display())))?;

    std::fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    let s = &report.aggregate;
    let bars = [
        ("IDF1", s.idf1),
        ("MOTA", s.mota),
        ("HOTA", s.hota),
        ("DETA", s.deta),
        ("ASSA", s.assa),
    ];

    let (w, h) = (560u32, 320u32);
    let (ml, mb, mt) = (40i64, 46i64, 20i64);
    let mut img = RgbImage::from_pixel(w, h, DARK);
    let plot_w = w as i64 - ml - 16;
    let plot_h = h as i64 - mb - mt;
    let slot = plot_w / bars.len() as i64;

    for (i, (name, value)) in bars.iter().enumerate() {
        let x0 = ml + i as i64 * slot + slot / 6;
        let bar_w = slot * 2 / 3;
        let clamped = if value.is_nan() { 0.0 } else { value.clamp(0.0, 1.0) };
        let bar_h = (clamped * plot_h as f64) as i64;
        let color = if value.is_nan() { GRAY } else { GREEN };
        for x in x0..x0 + bar_w {
            for y in (mt + plot_h - bar_h)..(mt + plot_h) {
                if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
                    img.put_pixel(x as u32, y as u32, color);
                }
            }
        }
        draw_text(&mut img, x0, mt + plot_h + 8, name, 1, WHITE);
        let label = if value.is_nan() {
            "N/A".to_string()
        } else {
            format!("{:.1}", value * 100.0)
        };
        draw_text(&mut img, x0, mt + plot_h + 24, &label, 1, WHITE);
    }
    draw_segment(&mut img, ml, mt, ml, mt + plot_h, WHITE);
    draw_segment(&mut img, ml, mt + plot_h, ml + plot_w, mt + plot_h, WHITE);
    draw_text(
        &mut img,
        ml,
        4,
        &format!("IDS = {}", s.id_switches),
        1,
        WHITE,
    );

    let path = out.join("report.png");
    save(&img, &path)?;
    println!("wrote {}", path.display());
    Ok(())
}
