//! Builds line, CDF and bar charts from hand-made data and writes them as
//! SVG files.
//!
//! `cargo run --example render_charts`

use slicesched::constraint::delay_cdf;
use slicesched::plot::{render_svg, ChartKind, ChartSpec, Series};

fn main() -> slicesched::Result<()> {
    let dir = std::env::temp_dir();
    let curve: Vec<f64> = (0..100).map(|i| -100.0 * (-(i as f64) / 25.0).exp()).collect();
    let line = ChartSpec::new(ChartKind::Line, "Return", "episode", "return").with_series(Series::indexed("run", &curve));

    let delays: Vec<f64> = (0..200).map(|i| 0.005 + (i % 23) as f64 * 1e-3).collect();
    let cdf = ChartSpec::new(ChartKind::Cdf, "Delay CDF", "delay (s)", "CDF")
        .with_series(Series::new("example", delay_cdf(&delays)?))
        .with_ref_x(0.02, "D_max")
        .with_ref_y(0.98, "target");

    let mut bars = ChartSpec::new(ChartKind::Bar, "Per-user PRBs", "user", "PRBs")
        .with_series(Series::indexed("mean", &[4.0, 3.5, 3.0]))
        .with_series(Series::indexed("peak", &[6.0, 5.0, 4.0]));
    bars.categories = vec!["h0".into(), "h1".into(), "h2".into()];

    for (name, spec) in [("line", line), ("cdf", cdf), ("bar", bars)] {
        let path = dir.join(format!("slicesched-{name}.svg"));
        std::fs::write(&path, render_svg(&spec)?)?;
        println!("{}", path.display());
    }
    Ok(())
}
