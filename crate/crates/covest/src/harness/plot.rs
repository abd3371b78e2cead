//! Line-chart emission as standalone SVG, with error bars and a data CSV
//! written alongside.

use super::summary::SummaryRow;
use super::HarnessError;
use serde::Deserialize;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

const PALETTE: &[&str] = &[
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlotSpec {
    /// Grid key plotted on the x axis (e.g. "n", "p", "lambda_rel", "c"),
    /// or "epe_d" to sweep the subspace dimension of the epe_* metrics.
    pub x: String,
    /// Metric to plot (e.g. "operator", "enf", "epe_4"); ignored when
    /// x = "epe_d".
    pub metric: String,
    pub output: String,
    pub title: Option<String>,
    pub x_label: Option<String>,
    pub y_label: Option<String>,
    pub log_y: Option<bool>,
    pub log_x: Option<bool>,
}

impl PlotSpec {
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| HarnessError::Config(e.to_string()))
    }
}

fn parse_grid(label: &str) -> BTreeMap<String, String> {
    label
        .split(';')
        .filter_map(|kv| kv.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

#[derive(Debug, Clone)]
struct Series {
    name: String,
    points: Vec<(f64, f64, f64)>, // x, mean, stderr
}

/// Renders the summarized table as an SVG line chart with ±1 standard
/// error bars; the plotted points are also written to
/// `<output>.data.csv`. Errors with `Empty` when no rows match.
pub fn emit_plot(summary: &[SummaryRow], spec: &PlotSpec) -> Result<PathBuf, HarnessError> {
    let epe_sweep = spec.x == "epe_d";
    let relevant: Vec<&SummaryRow> = summary
        .iter()
        .filter(|r| {
            if epe_sweep {
                r.metric.starts_with("epe_")
            } else {
                r.metric == spec.metric
            }
        })
        .collect();
    if relevant.is_empty() {
        return Err(HarnessError::Empty);
    }

    // keys whose value varies across the table become part of the series
    // name; the x key never does
    let mut value_sets: BTreeMap<String, std::collections::BTreeSet<String>> = BTreeMap::new();
    for row in &relevant {
        for (k, v) in parse_grid(&row.grid) {
            value_sets.entry(k).or_default().insert(v);
        }
    }
    let series_keys: Vec<String> = value_sets
        .iter()
        .filter(|(k, vals)| **k != spec.x && vals.len() > 1)
        .map(|(k, _)| k.clone())
        .collect();

    let mut series_map: BTreeMap<String, Vec<(f64, f64, f64)>> = BTreeMap::new();
    for row in &relevant {
        let grid = parse_grid(&row.grid);
        let x: f64 = if epe_sweep {
            row.metric["epe_".len()..].parse().map_err(|e| {
                HarnessError::Config(format!("metric '{}' has no numeric d: {e}", row.metric))
            })?
        } else {
            grid.get(&spec.x)
                .ok_or_else(|| HarnessError::Config(format!("grid key '{}' not found", spec.x)))?
                .parse()
                .map_err(|e| {
                    HarnessError::Config(format!("grid key '{}' is not numeric: {e}", spec.x))
                })?
        };
        let mut name = row.estimator.clone();
        for key in &series_keys {
            if let Some(v) = grid.get(key) {
                name.push_str(&format!(" {key}={v}"));
            }
        }
        series_map.entry(name).or_default().push((x, row.mean, row.stderr));
    }
    let mut series: Vec<Series> = series_map
        .into_iter()
        .map(|(name, mut points)| {
            points.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            Series { name, points }
        })
        .collect();
    series.retain(|s| !s.points.is_empty());
    if series.is_empty() {
        return Err(HarnessError::Empty);
    }

    let out_path = PathBuf::from(&spec.output);
    if let Some(dir) = out_path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    write_svg(&series, spec, &out_path)?;

    // plotted data alongside, for regression-friendly inspection
    let mut data_path = out_path.as_os_str().to_owned();
    data_path.push(".data.csv");
    let mut w = csv::WriterBuilder::new().from_path(PathBuf::from(data_path))?;
    w.write_record(["series", "x", "mean", "stderr"])?;
    for s in &series {
        for (x, mean, se) in &s.points {
            w.write_record([&s.name, &x.to_string(), &mean.to_string(), &se.to_string()])?;
        }
    }
    w.flush()?;
    Ok(out_path)
}

fn nice_linear_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = (hi - lo).max(1e-300);
    let raw_step = span / 5.0;
    let mag = 10f64.powf(raw_step.log10().floor());
    let norm = raw_step / mag;
    let step = if norm < 1.5 {
        mag
    } else if norm < 3.5 {
        2.0 * mag
    } else if norm < 7.5 {
        5.0 * mag
    } else {
        10.0 * mag
    };
    let start = (lo / step).ceil() * step;
    let mut ticks = Vec::new();
    let mut t = start;
    while t <= hi + 1e-9 * span {
        ticks.push(t);
        t += step;
    }
    ticks
}

fn log_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let mut ticks = Vec::new();
    let mut e = lo.log10().floor() as i32;
    while 10f64.powi(e) <= hi * (1.0 + 1e-9) {
        let t = 10f64.powi(e);
        if t >= lo * (1.0 - 1e-9) {
            ticks.push(t);
        }
        e += 1;
    }
    if ticks.len() < 2 {
        ticks = vec![lo, hi];
    }
    ticks
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-3..1e4).contains(&a) {
        let s = format!("{v:.4}");
        let s = s.trim_end_matches('0').trim_end_matches('.').to_string();
        if s.is_empty() {
            "0".into()
        } else {
            s
        }
    } else {
        format!("{v:.1e}")
    }
}

fn write_svg(series: &[Series], spec: &PlotSpec, path: &Path) -> Result<(), HarnessError> {
    let log_y = spec.log_y.unwrap_or(false);
    let log_x = spec.log_x.unwrap_or(false);

    let (width, height) = (860.0, 560.0);
    let (ml, mr, mt, mb) = (78.0, 180.0, 48.0, 64.0);
    let plot_w = width - ml - mr;
    let plot_h = height - mt - mb;

    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for s in series {
        for (x, mean, se) in &s.points {
            xs.push(*x);
            ys.push(mean - se);
            ys.push(mean + se);
        }
    }
    if log_y {
        ys.retain(|v| *v > 0.0);
        if ys.is_empty() {
            return Err(HarnessError::Config("log_y needs positive values".into()));
        }
    }
    if log_x {
        xs.retain(|v| *v > 0.0);
        if xs.is_empty() {
            return Err(HarnessError::Config("log_x needs positive values".into()));
        }
    }
    let (x_lo, x_hi) = bounds(&xs);
    let (y_lo, y_hi) = bounds(&ys);

    let map_x = |x: f64| -> f64 {
        let t = if log_x {
            (x.ln() - x_lo.ln()) / (x_hi.ln() - x_lo.ln()).max(1e-300)
        } else {
            (x - x_lo) / (x_hi - x_lo).max(1e-300)
        };
        ml + t * plot_w
    };
    let map_y = |y: f64| -> f64 {
        let t = if log_y {
            (y.max(y_lo).ln() - y_lo.ln()) / (y_hi.ln() - y_lo.ln()).max(1e-300)
        } else {
            (y - y_lo) / (y_hi - y_lo).max(1e-300)
        };
        mt + (1.0 - t) * plot_h
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\" font-family=\"Helvetica, Arial, sans-serif\">\n"
    ));
    svg.push_str(&format!(
        "<rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>\n"
    ));
    if let Some(title) = &spec.title {
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"26\" font-size=\"17\" text-anchor=\"middle\">{}</text>\n",
            ml + plot_w / 2.0,
            xml_escape(title)
        ));
    }

    // frame
    svg.push_str(&format!(
        "<rect x=\"{ml}\" y=\"{mt}\" width=\"{plot_w}\" height=\"{plot_h}\" fill=\"none\" stroke=\"#333\"/>\n"
    ));

    // ticks and grid lines
    let xticks = if log_x { log_ticks(x_lo, x_hi) } else { nice_linear_ticks(x_lo, x_hi) };
    for t in &xticks {
        let x = map_x(*t);
        svg.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{mt}\" x2=\"{x}\" y2=\"{}\" stroke=\"#ddd\"/>\n",
            mt + plot_h
        ));
        svg.push_str(&format!(
            "<text x=\"{x}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
            mt + plot_h + 18.0,
            fmt_tick(*t)
        ));
    }
    let yticks = if log_y { log_ticks(y_lo, y_hi) } else { nice_linear_ticks(y_lo, y_hi) };
    for t in &yticks {
        let y = map_y(*t);
        svg.push_str(&format!(
            "<line x1=\"{ml}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"#ddd\"/>\n",
            ml + plot_w
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"end\">{}</text>\n",
            ml - 8.0,
            y + 4.0,
            fmt_tick(*t)
        ));
    }

    // axis labels
    let x_label = spec.x_label.clone().unwrap_or_else(|| spec.x.clone());
    let y_label = spec.y_label.clone().unwrap_or_else(|| spec.metric.clone());
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"14\" text-anchor=\"middle\">{}</text>\n",
        ml + plot_w / 2.0,
        height - 16.0,
        xml_escape(&x_label)
    ));
    svg.push_str(&format!(
        "<text x=\"20\" y=\"{}\" font-size=\"14\" text-anchor=\"middle\" \
         transform=\"rotate(-90 20 {})\">{}</text>\n",
        mt + plot_h / 2.0,
        mt + plot_h / 2.0,
        xml_escape(&y_label)
    ));

    // series
    for (idx, s) in series.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let mut d = String::new();
        for (i, (x, mean, _)) in s.points.iter().enumerate() {
            let (px, py) = (map_x(*x), map_y(*mean));
            d.push_str(if i == 0 { "M" } else { "L" });
            d.push_str(&format!("{px:.2},{py:.2} "));
        }
        svg.push_str(&format!(
            "<path d=\"{d}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"/>\n"
        ));
        for (x, mean, se) in &s.points {
            let px = map_x(*x);
            let py = map_y(*mean);
            svg.push_str(&format!(
                "<circle cx=\"{px:.2}\" cy=\"{py:.2}\" r=\"2.6\" fill=\"{color}\"/>\n"
            ));
            if *se > 0.0 {
                let (lo, hi) = (mean - se, mean + se);
                let (ylo, yhi) =
                    (map_y(lo.max(if log_y { y_lo } else { f64::NEG_INFINITY })), map_y(hi));
                svg.push_str(&format!(
                    "<line x1=\"{px:.2}\" y1=\"{ylo:.2}\" x2=\"{px:.2}\" y2=\"{yhi:.2}\" \
                     stroke=\"{color}\" stroke-width=\"1\"/>\n"
                ));
                for yy in [ylo, yhi] {
                    svg.push_str(&format!(
                        "<line x1=\"{:.2}\" y1=\"{yy:.2}\" x2=\"{:.2}\" y2=\"{yy:.2}\" \
                         stroke=\"{color}\" stroke-width=\"1\"/>\n",
                        px - 3.0,
                        px + 3.0
                    ));
                }
            }
        }
        // legend entry
        let ly = mt + 14.0 + idx as f64 * 20.0;
        let lx = ml + plot_w + 12.0;
        svg.push_str(&format!(
            "<line x1=\"{lx}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/>\n",
            lx + 22.0
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"12\">{}</text>\n",
            lx + 28.0,
            ly + 4.0,
            xml_escape(&s.name)
        ));
    }
    svg.push_str("</svg>\n");

    let mut f = std::fs::File::create(path)?;
    f.write_all(svg.as_bytes())?;
    Ok(())
}

fn bounds(values: &[f64]) -> (f64, f64) {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        (lo - 0.5 * lo.abs().max(1.0), hi + 0.5 * hi.abs().max(1.0))
    } else {
        (lo, hi)
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn srow(grid: &str, est: &str, metric: &str, mean: f64, stderr: f64) -> SummaryRow {
        SummaryRow {
            grid: grid.into(),
            estimator: est.into(),
            metric: metric.into(),
            mean,
            stderr,
            count: 10,
            failures: 0,
        }
    }

    #[test]
    fn empty_series_is_an_error() {
        let spec = PlotSpec {
            x: "n".into(),
            metric: "operator".into(),
            output: "/tmp/never.svg".into(),
            title: None,
            x_label: None,
            y_label: None,
            log_y: None,
            log_x: None,
        };
        assert!(matches!(emit_plot(&[], &spec), Err(HarnessError::Empty)));
        let rows = vec![srow("p=2;n=4", "sample", "frobenius", 1.0, 0.1)];
        assert!(matches!(emit_plot(&rows, &spec), Err(HarnessError::Empty)));
    }

    #[test]
    fn renders_three_series_for_three_c_values() {
        let mut rows = Vec::new();
        for c in ["0.5", "0.9", "0.99"] {
            for (n, v) in [(10, 3.0), (50, 1.5), (100, 1.0)] {
                rows.push(srow(&format!("p=20;n={n};c={c}"), "sign", "operator", v, 0.05));
            }
        }
        let dir = std::env::temp_dir().join(format!("covest-plot-test-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let out = dir.join("fig4.svg");
        let spec = PlotSpec {
            x: "n".into(),
            metric: "operator".into(),
            output: out.to_string_lossy().into_owned(),
            title: Some("fig4".into()),
            x_label: None,
            y_label: None,
            log_y: Some(true),
            log_x: None,
        };
        let path = emit_plot(&rows, &spec).unwrap();
        let svg = std::fs::read_to_string(&path).unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("sign c=0.5"));
        assert!(svg.contains("sign c=0.9"));
        assert!(svg.contains("sign c=0.99"));
        let data = std::fs::read_to_string(dir.join("fig4.svg.data.csv")).unwrap();
        assert!(data.lines().count() == 10); // header + 9 points
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn epe_sweep_uses_subspace_dimension_as_x() {
        let mut rows = Vec::new();
        for est in ["nnls", "sample"] {
            for (d, v) in [(1, 0.4), (2, 0.3), (4, 0.2), (8, 0.1)] {
                rows.push(srow("p=32;n=16", est, &format!("epe_{d}"), v, 0.01));
            }
        }
        let dir = std::env::temp_dir().join(format!("covest-epe-plot-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let out = dir.join("epe.svg");
        let spec = PlotSpec {
            x: "epe_d".into(),
            metric: "epe".into(),
            output: out.to_string_lossy().into_owned(),
            title: None,
            x_label: None,
            y_label: None,
            log_y: None,
            log_x: None,
        };
        emit_plot(&rows, &spec).unwrap();
        let data = std::fs::read_to_string(dir.join("epe.svg.data.csv")).unwrap();
        assert_eq!(data.lines().count(), 9);
        assert!(data.contains("nnls,1,0.4"));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn tick_helpers_behave() {
        let t = nice_linear_ticks(0.0, 10.0);
        assert!(t.contains(&0.0) && t.contains(&10.0));
        let lt = log_ticks(0.05, 500.0);
        assert!(lt.contains(&0.1) && lt.contains(&100.0));
    }
}
