use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use plotters::prelude::*;

use super::{GenerationRecord, HarnessError};

type Accessor = fn(&GenerationRecord) -> f64;

/// Metric columns of a [`GenerationRecord`], in CSV order.
pub const METRICS: [(&str, Accessor); 11] = [
    ("best_score", |r| r.best_score as f64),
    ("avg_score", |r| r.avg_score),
    ("best_total_coins", |r| f64::from(r.best_total_coins)),
    ("avg_total_coins", |r| r.avg_total_coins),
    ("best_own_coins", |r| f64::from(r.best_own_coins)),
    ("avg_own_coins", |r| r.avg_own_coins),
    ("best_own_coin_rate", |r| r.best_own_coin_rate),
    ("avg_own_coin_rate", |r| r.avg_own_coin_rate),
    ("best_gates_total", |r| r.best_gates_total as f64),
    ("best_gates_parameterized", |r| r.best_gates_parameterized as f64),
    ("best_param_count", |r| r.best_param_count as f64),
];

/// Chart file name, title, and the two metric columns drawn per run.
pub const CHART_FILES: [(&str, &str, [&str; 2]); 5] = [
    ("score.svg", "Score", ["best_score", "avg_score"]),
    ("total_coins.svg", "Total coins", ["best_total_coins", "avg_total_coins"]),
    ("own_coins.svg", "Own coins", ["best_own_coins", "avg_own_coins"]),
    ("own_coin_rate.svg", "Own coin rate", ["best_own_coin_rate", "avg_own_coin_rate"]),
    ("gate_count.svg", "Gate count of best agent", ["best_gates_total", "best_gates_parameterized"]),
];

/// Cross-seed mean and (population) standard deviation of every metric at
/// one generation. `mean[i]` and `std[i]` refer to `METRICS[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub generation: usize,
    pub seeds: usize,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl AggregateRow {
    pub fn metric(&self, name: &str) -> Option<(f64, f64)> {
        let i = METRICS.iter().position(|(n, _)| *n == name)?;
        Some((self.mean[i], self.std[i]))
    }
}

pub fn aggregate(records: &[GenerationRecord]) -> Result<Vec<AggregateRow>, HarnessError> {
    let mut by_seed: BTreeMap<u64, Vec<&GenerationRecord>> = BTreeMap::new();
    for r in records {
        by_seed.entry(r.seed).or_default().push(r);
    }
    let mut expected: Option<Vec<usize>> = None;
    for (seed, rows) in &mut by_seed {
        rows.sort_by_key(|r| r.generation);
        let generations: Vec<usize> = rows.iter().map(|r| r.generation).collect();
        if generations.windows(2).any(|w| w[0] == w[1]) {
            return Err(HarnessError::Ragged(format!("seed {seed} repeats a generation")));
        }
        match &expected {
            None => expected = Some(generations),
            Some(e) if *e != generations => {
                return Err(HarnessError::Ragged(format!(
                    "seed {seed} has {} generations, expected {}",
                    generations.len(),
                    e.len()
                )))
            }
            Some(_) => {}
        }
    }
    let Some(generations) = expected else {
        return Ok(Vec::new());
    };
    let seeds = by_seed.len() as f64;
    Ok(generations
        .iter()
        .enumerate()
        .map(|(k, &generation)| {
            let (mean, std) = METRICS
                .iter()
                .map(|(_, get)| {
                    let values: Vec<f64> = by_seed.values().map(|rows| get(rows[k])).collect();
                    let mean = values.iter().sum::<f64>() / seeds;
                    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / seeds;
                    (mean, var.sqrt())
                })
                .unzip();
            AggregateRow {
                generation,
                seeds: by_seed.len(),
                mean,
                std,
            }
        })
        .collect())
}

pub fn read_records(path: &Path) -> Result<Vec<GenerationRecord>, HarnessError> {
    let mut reader = csv::Reader::from_path(path)?;
    Ok(reader.deserialize().collect::<Result<_, _>>()?)
}

/// Columns: `generation,seeds`, then `<metric>_mean,<metric>_std` per metric.
pub fn write_aggregate(path: &Path, rows: &[AggregateRow]) -> Result<(), HarnessError> {
    let mut writer = csv::Writer::from_path(path)?;
    let mut header = vec!["generation".to_string(), "seeds".to_string()];
    for (name, _) in METRICS {
        header.push(format!("{name}_mean"));
        header.push(format!("{name}_std"));
    }
    writer.write_record(&header)?;
    for row in rows {
        let mut fields = vec![row.generation.to_string(), row.seeds.to_string()];
        for (m, s) in row.mean.iter().zip(&row.std) {
            fields.push(m.to_string());
            fields.push(s.to_string());
        }
        writer.write_record(&fields)?;
    }
    writer.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn read_aggregate(path: &Path) -> Result<Vec<AggregateRow>, HarnessError> {
    let mut reader = csv::Reader::from_path(path)?;
    let header = reader.headers()?.clone();
    let column = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| HarnessError::Ragged(format!("{}: missing column {name}", path.display())))
    };
    let generation_col = column("generation")?;
    let seeds_col = column("seeds")?;
    let mut metric_cols = Vec::new();
    for (name, _) in METRICS {
        metric_cols.push((column(&format!("{name}_mean"))?, column(&format!("{name}_std"))?));
    }
    let parse = |field: Option<&str>| -> Result<f64, HarnessError> {
        field
            .and_then(|f| f.parse().ok())
            .ok_or_else(|| HarnessError::Ragged(format!("{}: malformed number", path.display())))
    };
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let (mean, std) = metric_cols
            .iter()
            .map(|&(m, s)| Ok((parse(record.get(m))?, parse(record.get(s))?)))
            .collect::<Result<Vec<_>, HarnessError>>()?
            .into_iter()
            .unzip();
        rows.push(AggregateRow {
            generation: parse(record.get(generation_col))? as usize,
            seeds: parse(record.get(seeds_col))? as usize,
            mean,
            std,
        });
    }
    Ok(rows)
}

/// Draw one SVG line chart per entry of [`CHART_FILES`], with two series per
/// labelled run. Returns the written paths; nothing is written when every
/// run is empty.
pub fn render_plots(runs: &[(String, Vec<AggregateRow>)], out_dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    if runs.iter().all(|(_, rows)| rows.is_empty()) {
        return Ok(Vec::new());
    }
    fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;
    let mut written = Vec::new();
    for (file, title, metrics) in CHART_FILES {
        let path = out_dir.join(file);
        draw_chart(&path, title, &metrics, runs).map_err(|e| HarnessError::Plot(format!("{file}: {e}")))?;
        written.push(path);
    }
    Ok(written)
}

fn draw_chart(
    path: &Path,
    title: &str,
    metrics: &[&str; 2],
    runs: &[(String, Vec<AggregateRow>)],
) -> Result<(), Box<dyn std::error::Error>> {
    let series: Vec<(String, Vec<(f64, f64)>)> = runs
        .iter()
        .flat_map(|(label, rows)| {
            metrics.iter().map(move |metric| {
                let points = rows
                    .iter()
                    .filter_map(|r| r.metric(metric).map(|(m, _)| (r.generation as f64, m)))
                    .collect();
                (format!("{label} {metric}"), points)
            })
        })
        .collect();
    let all = series.iter().flat_map(|(_, p)| p.iter());
    let (mut x_max, mut y_min, mut y_max) = (1.0f64, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x_max = x_max.max(x);
        y_min = y_min.min(y);
        y_max = y_max.max(y);
    }
    if y_min >= y_max {
        y_min -= 1.0;
        y_max += 1.0;
    }

    let root = SVGBackend::new(path, (800, 500)).into_drawing_area();
    root.fill(&WHITE)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 22))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(50)
        .build_cartesian_2d(0.0..x_max, y_min..y_max)?;
    chart.configure_mesh().x_desc("generation").draw()?;
    for (i, (label, points)) in series.into_iter().enumerate() {
        let color = Palette99::pick(i).to_rgba();
        chart
            .draw_series(LineSeries::new(points, color.stroke_width(2)))?
            .label(label)
            .legend(move |(x, y)| Rectangle::new([(x, y - 4), (x + 16, y + 4)], color.filled()));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()?;
    root.present()?;
    Ok(())
}
