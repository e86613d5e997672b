use serde_json::json;

use crate::regions::Region;

/// One row per region, one column per place, columns right-aligned.
pub fn region_table_text(places: &[String], regions: &[Region]) -> String {
    let mut rows: Vec<Vec<String>> = vec![std::iter::once("region".to_string())
        .chain(places.iter().cloned())
        .collect()];
    for (i, r) in regions.iter().enumerate() {
        rows.push(
            std::iter::once(format!("r{}", i + 1))
                .chain(places.iter().map(|p| r.get(p).to_string()))
                .collect(),
        );
    }
    let widths: Vec<usize> = (0..=places.len())
        .map(|c| {
            rows.iter()
                .map(|row| row[c].chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for row in rows {
        let cells: Vec<String> = row
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(c, (cell, &w))| {
                if c == 0 {
                    format!("{cell:<w$}")
                } else {
                    format!("{cell:>w$}")
                }
            })
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}

/// `{"places": [...], "regions": [[...], ...], "truncated": bool}`.
pub fn region_table_json(places: &[String], regions: &[Region], truncated: bool) -> String {
    let rows: Vec<Vec<u64>> = regions
        .iter()
        .map(|r| places.iter().map(|p| r.get(p)).collect())
        .collect();
    let value = json!({ "places": places, "regions": rows, "truncated": truncated });
    serde_json::to_string_pretty(&value).expect("plain data serializes") + "\n"
}
