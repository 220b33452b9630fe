use std::io::Write;
use std::path::Path;

use plotters::prelude::*;

use super::ExperimentRow;
use crate::error::{Error, Result};

/// Writes the header and one line per row.
pub fn write_csv<W: Write>(rows: &[ExperimentRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record([
            "experiment",
            "method",
            "compression_ratio",
            "sketch_dims",
            "replicas",
            "seed",
            "compress_time_ns",
            "recover_time_ns",
            "hash_entries",
            "output_entries",
            "relative_error",
            "stored_hash_entries",
        ])
        .map_err(|e| Error::Parse(e.to_string()))?;
    }
    for row in rows {
        w.serialize(row).map_err(|e| Error::Parse(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(())
}

const METHOD_COLORS: [(&str, RGBColor); 3] = [
    ("cs", RGBColor(31, 119, 180)),
    ("hcs", RGBColor(214, 39, 40)),
    ("hcs-reshuffled", RGBColor(44, 160, 44)),
];

type Metric = fn(&ExperimentRow) -> f64;

/// Error, time and memory against compression ratio, one panel each, as SVG.
pub fn plot_rows(rows: &[ExperimentRow], path: &Path) -> Result<()> {
    let draw_err = |e: &dyn std::fmt::Display| Error::Parse(format!("plot: {e}"));
    let root = SVGBackend::new(path, (1500, 450)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| draw_err(&e))?;
    let panels = root.split_evenly((1, 3));
    let metrics: [(&str, Metric); 3] = [
        ("relative error", |r| r.relative_error),
        ("compress time (ms)", |r| r.compress_time_ns as f64 / 1e6),
        ("hash + output entries", |r| (r.hash_entries + r.output_entries) as f64),
    ];
    let title = rows.first().map_or("", |r| r.experiment.as_str());
    for (panel, (label, metric)) in panels.iter().zip(metrics) {
        let x_max = rows.iter().map(|r| r.compression_ratio).fold(1.0, f64::max) * 1.05;
        let y_max = rows.iter().map(metric).fold(0.0, f64::max).max(1e-12) * 1.1;
        let mut chart = ChartBuilder::on(panel)
            .caption(format!("{title}: {label}"), ("sans-serif", 18))
            .margin(12)
            .x_label_area_size(35)
            .y_label_area_size(60)
            .build_cartesian_2d(0.0..x_max, 0.0..y_max)
            .map_err(|e| draw_err(&e))?;
        chart
            .configure_mesh()
            .x_desc("compression ratio")
            .draw()
            .map_err(|e| draw_err(&e))?;
        for (method, color) in METHOD_COLORS {
            let mut pts: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r.method == method)
                .map(|r| (r.compression_ratio, metric(r)))
                .collect();
            if pts.is_empty() {
                continue;
            }
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            chart
                .draw_series(LineSeries::new(pts.clone(), color.stroke_width(2)))
                .map_err(|e| draw_err(&e))?
                .label(method)
                .legend(move |(x, y)| PathElement::new([(x, y), (x + 16, y)], color));
            chart
                .draw_series(pts.into_iter().map(|p| Circle::new(p, 3, color.filled())))
                .map_err(|e| draw_err(&e))?;
        }
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()
            .map_err(|e| draw_err(&e))?;
    }
    root.present().map_err(|e| draw_err(&e))?;
    Ok(())
}
