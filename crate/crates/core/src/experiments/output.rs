//! Result files. Reals are written with 17 significant digits so reruns can
//! be compared byte for byte.

use std::fs;
use std::io;
use std::path::Path;

use super::{DegradationCurve, StrategyTable, SweepResult};

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

/// `index,w_1..w_m,deviation,equivalent,failed`
pub fn sweep_csv(result: &SweepResult) -> String {
    let m = result.w_star.len();
    let mut header: Vec<String> = vec!["index".into()];
    header.extend((1..=m).map(|l| format!("w_{l}")));
    header.extend(["deviation".into(), "equivalent".into(), "failed".into()]);
    let mut out = header.join(",") + "\n";
    for (k, (w, dev)) in result.grid.iter().zip(&result.deviation).enumerate() {
        let mut cells = vec![k.to_string()];
        cells.extend(w.iter().map(|v| real(*v)));
        cells.push(dev.map(real).unwrap_or_default());
        cells.push(u8::from(result.equivalent_set.contains(&k)).to_string());
        cells.push(u8::from(dev.is_none()).to_string());
        out += &(cells.join(",") + "\n");
    }
    out
}

/// `k,attribute,mean,std,normalized_mean,normalized_std`
pub fn degradation_csv(curve: &DegradationCurve) -> String {
    let mut out = String::from("k,attribute,mean,std,normalized_mean,normalized_std\n");
    for (a, name) in curve.attributes.iter().enumerate() {
        for (j, k) in curve.ks.iter().enumerate() {
            out += &format!(
                "{k},{name},{},{},{},{}\n",
                real(curve.mean[a][j]),
                real(curve.std[a][j]),
                real(curve.normalized_mean[a][j]),
                real(curve.normalized_std[a][j]),
            );
        }
    }
    out
}

/// `strategy,rho_1,rho_1_se,..,accuracy,accuracy_se,F,F_se`
pub fn strategies_csv(table: &StrategyTable) -> String {
    let m = table.attributes.len();
    let mut header = vec!["strategy".to_string()];
    for l in 1..=m {
        header.push(format!("rho_{l}"));
        header.push(format!("rho_{l}_se"));
    }
    header.extend(["accuracy", "accuracy_se", "F", "F_se"].map(String::from));
    let mut out = header.join(",") + "\n";
    for row in &table.rows {
        let mut cells = vec![row.strategy.to_string()];
        for l in 0..m {
            cells.push(real(row.rho_mean[l]));
            cells.push(real(row.rho_se[l]));
        }
        cells.extend([row.accuracy_mean, row.accuracy_se, row.f_mean, row.f_se].map(real));
        out += &(cells.join(",") + "\n");
    }
    out
}

/// `replication,split_seed,strategy,rho_1..rho_m,accuracy,F`
pub fn replications_csv(table: &StrategyTable) -> String {
    let m = table.attributes.len();
    let mut header = vec!["replication".to_string(), "split_seed".into(), "strategy".into()];
    header.extend((1..=m).map(|l| format!("rho_{l}")));
    header.extend(["accuracy".into(), "F".into()]);
    let mut out = header.join(",") + "\n";
    for r in &table.records {
        let mut cells = vec![r.replication.to_string(), r.split_seed.to_string(), r.strategy.to_string()];
        cells.extend(r.rho.iter().map(|v| real(*v)));
        cells.push(real(r.accuracy));
        cells.push(real(r.f));
        out += &(cells.join(",") + "\n");
    }
    out
}

/// Run manifest as `key = value` lines.
#[derive(Debug, Clone, Default)]
pub struct Manifest {
    pub entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.push((key.into(), value.to_string()));
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(e) => e.1 = value.to_string(),
            None => self.push(key, value),
        }
    }

    pub fn render(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    pub fn write(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("manifest.txt"), self.render())
    }
}
