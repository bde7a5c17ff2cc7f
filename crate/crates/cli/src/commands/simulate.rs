use crate::config::{DriverSpec, ExperimentConfig};
use crate::output::{Cell, Csv, Header};

use super::{driver_for, trajectory};

/// One trajectory as rows `t, y[i]…, dy[i][k]…`.
pub fn run(cfg: &ExperimentConfig) -> anyhow::Result<String> {
    let solver = cfg.solver()?;
    let drp = driver_for(cfg, cfg.seed, cfg.driver)?;
    let mut header = Header::new("simulate", cfg);
    if let DriverSpec::Mollified { .. } = cfg.driver {
        if let Some(e) = cfg.driver_config(cfg.seed, cfg.driver).snapped_epsilon()? {
            header = header.snap("epsilon", e);
        }
    }
    let (w, d) = (cfg.field.state_dim(), cfg.dim);
    let mut cols = vec!["t".to_string()];
    cols.extend((0..w).map(|i| format!("y{i}")));
    for i in 0..w {
        cols.extend((0..d).map(|k| format!("dy{i}_{k}")));
    }
    let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut csv = Csv::new(&header, &cols);
    let grid = drp.grid();
    for (n, seg) in trajectory(cfg, &solver, &drp)?.iter().enumerate() {
        // windows share endpoints; print each grid point once
        let first = usize::from(n > 0);
        for row in first..=seg.delay_steps() {
            let mut cells = vec![Cell::F(grid.time(seg.base_index() + row))];
            cells.extend(seg.values().row(row).iter().map(|v| Cell::F(*v)));
            for i in 0..w {
                cells.extend((0..d).map(|k| Cell::F(seg.gubinelli()[[row, i, k]])));
            }
            csv.row(&cells);
        }
    }
    Ok(csv.finish())
}
