//! The `report` subcommand: a comparison table over finished run
//! directories, as plain text on stdout and optionally as CSV. Output is
//! byte-identical across reruns over the same inputs.

use std::fs;
use std::path::Path;

use serde::Deserialize;

use gblend_core::Error;

#[derive(Deserialize)]
struct SummaryView {
    mode: String,
    final_metrics: FinalView,
    ogr_windows: Vec<WindowView>,
}

#[derive(Deserialize)]
struct FinalView {
    val_acc: f64,
    test_acc: Option<f64>,
    train_val_gap: f64,
}

#[derive(Deserialize)]
struct WindowView {
    ogr: Option<f64>,
}

struct Row {
    run: String,
    mode: String,
    val_acc: f64,
    test_acc: Option<f64>,
    train_val_gap: f64,
    final_ogr: Option<f64>,
}

fn load_row(dir: &Path) -> Result<Row, Error> {
    let summary_path = dir.join("summary.json");
    let text = fs::read_to_string(&summary_path).map_err(|_| {
        Error::Numeric(format!(
            "missing summary file in run directory {}",
            dir.display()
        ))
    })?;
    let summary: SummaryView = serde_json::from_str(&text)
        .map_err(|e| Error::Numeric(format!("{}: {}", summary_path.display(), e)))?;
    Ok(Row {
        run: dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| dir.display().to_string()),
        mode: summary.mode,
        val_acc: summary.final_metrics.val_acc,
        test_acc: summary.final_metrics.test_acc,
        train_val_gap: summary.final_metrics.train_val_gap,
        final_ogr: summary.ogr_windows.last().and_then(|w| w.ogr),
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| format!("{:.4}", v)).unwrap_or_else(|| "-".into())
}

pub fn cmd_report(dirs: &[std::path::PathBuf], csv: Option<&Path>) -> Result<(), Error> {
    let rows = dirs.iter().map(|d| load_row(d)).collect::<Result<Vec<_>, _>>()?;

    let header = ["run", "mode", "val_acc", "test_acc", "train_val_gap", "final_ogr"];
    let mut table: Vec<[String; 6]> = vec![header.map(String::from)];
    for r in &rows {
        table.push([
            r.run.clone(),
            r.mode.clone(),
            format!("{:.4}", r.val_acc),
            fmt_opt(r.test_acc),
            format!("{:.4}", r.train_val_gap),
            fmt_opt(r.final_ogr),
        ]);
    }
    let widths: Vec<usize> = (0..6)
        .map(|c| table.iter().map(|row| row[c].len()).max().unwrap_or(0))
        .collect();
    for row in &table {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(cell, w)| format!("{:width$}", cell, width = w))
            .collect();
        println!("{}", line.join("  ").trim_end());
    }

    if let Some(path) = csv {
        let mut out = String::from("run,mode,val_acc,test_acc,train_val_gap,final_ogr\n");
        for r in &rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.run,
                r.mode,
                r.val_acc,
                r.test_acc.map(|v| v.to_string()).unwrap_or_default(),
                r.train_val_gap,
                r.final_ogr.map(|v| v.to_string()).unwrap_or_default(),
            ));
        }
        fs::write(path, out)?;
    }
    Ok(())
}
