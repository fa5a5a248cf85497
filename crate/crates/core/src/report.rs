//! Percentage rendering shared by every table.
//!
//! Shares are computed from raw counts in integer arithmetic and rounded
//! half-up, so the rendered cell never depends on float formatting.

/// `count / total` as a percentage with `decimals` digits, rounded half-up.
///
/// Returns `None` when `total` is zero.
pub fn percent(count: u64, total: u64, decimals: u32) -> Option<String> {
    if total == 0 {
        return None;
    }
    let scale = 10u128.pow(decimals);
    let num = count as u128 * 100 * scale;
    let den = total as u128;
    // half-up: floor((2*num + den) / (2*den))
    let scaled = (2 * num + den) / (2 * den);
    let whole = scaled / scale;
    if decimals == 0 {
        return Some(whole.to_string());
    }
    let frac = scaled % scale;
    Some(format!("{whole}.{frac:0width$}", width = decimals as usize))
}

/// Same as [`percent`] with a trailing `%`; `"n/a"` for an empty total.
pub fn percent_cell(count: u64, total: u64, decimals: u32) -> String {
    percent(count, total, decimals).map_or_else(|| "n/a".to_string(), |p| format!("{p}%"))
}

/// Render rows as a left-aligned first column and right-aligned remaining columns.
pub fn render_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let cols = header.len();
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (i, cell) in row.iter().enumerate().take(cols) {
            widths[i] = widths[i].max(cell.chars().count());
        }
    }
    let fmt_row = |cells: Vec<&str>| -> String {
        let mut line = String::new();
        for (i, cell) in cells.iter().enumerate() {
            let pad = widths[i] - cell.chars().count();
            if i == 0 {
                line.push_str(cell);
                line.push_str(&" ".repeat(pad));
            } else {
                line.push_str("  ");
                line.push_str(&" ".repeat(pad));
                line.push_str(cell);
            }
        }
        line.trim_end().to_string()
    };
    let total_width: usize = widths.iter().sum::<usize>() + 2 * (cols - 1);
    let mut out = String::new();
    out.push_str(&fmt_row(header.to_vec()));
    out.push('\n');
    out.push_str(&"-".repeat(total_width));
    out.push('\n');
    for row in rows {
        out.push_str(&fmt_row(row.iter().map(String::as_str).collect()));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_up_rounding() {
        assert_eq!(percent(1, 8, 2).unwrap(), "12.50");
        assert_eq!(percent(1, 8, 1).unwrap(), "12.5");
        // 0.125 exactly -> 13 at zero decimals (half-up, not banker's)
        assert_eq!(percent(1, 8, 0).unwrap(), "13");
        assert_eq!(percent(1, 3, 2).unwrap(), "33.33");
        assert_eq!(percent(2, 3, 2).unwrap(), "66.67");
        assert_eq!(percent(5, 5, 2).unwrap(), "100.00");
        assert_eq!(percent(0, 5, 2).unwrap(), "0.00");
        assert_eq!(percent(1, 0, 2), None);
    }

    #[test]
    fn registry_counts() {
        // shares computed from the published registry counts
        assert_eq!(percent(15_742, 126_795, 2).unwrap(), "12.42");
        assert_eq!(percent(13_931, 126_795, 1).unwrap(), "11.0");
        assert_eq!(percent(35_767, 112_864, 2).unwrap(), "31.69");
        assert_eq!(percent(98_500, 126_795, 2).unwrap(), "77.68");
        assert_eq!(percent(112_864, 126_795, 2).unwrap(), "89.01");
        assert_eq!(percent(109_292, 112_864, 2).unwrap(), "96.84");
    }

    #[test]
    fn table_alignment() {
        let t = render_table(&["a", "n"], &[vec!["long name".into(), "5".into()]]);
        assert_eq!(t, "a          n\n------------\nlong name  5\n");
    }
}
