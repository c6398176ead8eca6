use std::fmt::Write;

use super::SimResult;

/// One row per patch and round: `round,patch,label`.
pub fn trace_csv(r: &SimResult) -> String {
    let mut out = String::from("round,patch,label\n");
    let mut spans: Vec<_> = r.trace.iter().collect();
    spans.sort_by_key(|s| (s.start, s.patch));
    let mut rows: Vec<(u64, (u32, u32), &str)> = Vec::new();
    for s in spans {
        for t in s.start..s.end {
            rows.push((t, (s.patch.row, s.patch.col), s.label));
        }
    }
    rows.sort_unstable();
    for (t, (row, col), label) in rows {
        let _ = writeln!(out, "{t},{row}:{col},{label}");
    }
    out
}

fn color(label: &str) -> &'static str {
    match label {
        "idle" => "#d9d9d9",
        "stall" => "#e8474c",
        "t_teleport" => "#f2a541",
        "s_gate" => "#7fb069",
        "merge_zz" | "merge_xx" | "split" => "#4f86c6",
        "measure" | "y_measure" => "#8e6bbf",
        _ => "#6c757d",
    }
}

/// Gantt-style chart of patch activity with one row per patch.
pub fn trace_svg(r: &SimResult) -> String {
    let mut patches: Vec<(u32, u32)> = r.trace.iter().map(|s| (s.patch.row, s.patch.col)).collect();
    patches.sort_unstable();
    patches.dedup();
    let end = r.trace.iter().map(|s| s.end).max().unwrap_or(0).max(1);
    let (left, row_h, width) = (60.0, 18.0, 1000.0);
    let scale = width / end as f64;
    let height = row_h * patches.len() as f64 + 30.0;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{height}" font-family="monospace" font-size="11">"#,
        left + width + 10.0
    );
    for (k, &(row, col)) in patches.iter().enumerate() {
        let y = k as f64 * row_h + 5.0;
        let _ = writeln!(out, r#"<text x="2" y="{}">{row}:{col}</text>"#, y + 12.0);
    }
    for s in &r.trace {
        let k = patches.binary_search(&(s.patch.row, s.patch.col)).unwrap_or(0);
        let y = k as f64 * row_h + 5.0;
        let x = left + s.start as f64 * scale;
        let w = ((s.end - s.start) as f64 * scale).max(0.5);
        let _ = writeln!(
            out,
            r#"<rect x="{x:.2}" y="{y}" width="{w:.2}" height="{}" fill="{}"><title>{} [{}, {})</title></rect>"#,
            row_h - 2.0,
            color(s.label),
            s.label,
            s.start,
            s.end
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{left}" y="{}">0 .. {end} rounds (d = {})</text>"#,
        height - 6.0,
        r.distance
    );
    out.push_str("</svg>\n");
    out
}
