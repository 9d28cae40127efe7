use std::fmt::Write;

use super::RankReport;

const WIDTH: f64 = 800.0;
const AXIS_LEFT: f64 = 120.0;
const AXIS_RIGHT: f64 = 680.0;
const AXIS_Y: f64 = 90.0;
const ROW: f64 = 22.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Critical-difference diagram as SVG. Rank 1 sits at the left end of the
/// axis; methods in the better half are labeled on the left, the rest on
/// the right. Each non-singleton clique is drawn as one bold bar
/// (`class="clique"`) below the axis.
pub fn render_cd_diagram(report: &RankReport) -> String {
    let k = report.methods.len().max(2);
    let x = |rank: f64| AXIS_LEFT + (rank - 1.0) / (k as f64 - 1.0) * (AXIS_RIGHT - AXIS_LEFT);

    let mut order: Vec<usize> = (0..report.methods.len()).collect();
    order.sort_by(|&a, &b| report.average_rank[a].total_cmp(&report.average_rank[b]).then(a.cmp(&b)));
    let left_count = order.len().div_ceil(2);
    let drawn: Vec<&Vec<usize>> = report.cliques.iter().filter(|c| c.len() > 1).collect();
    let clique_top = AXIS_Y + 14.0;
    let labels_top = clique_top + drawn.len() as f64 * 8.0 + 16.0;
    let height = labels_top + left_count as f64 * ROW + 20.0;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH:.0}" height="{height:.0}" viewBox="0 0 {WIDTH:.0} {height:.0}" font-family="sans-serif" font-size="13">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);

    if let Some(cd) = report.cd {
        let end = x(1.0 + cd).min(AXIS_RIGHT + 60.0);
        let _ = writeln!(
            s,
            r#"<line class="cd-bar" x1="{:.2}" y1="30.00" x2="{end:.2}" y2="30.00" stroke="black" stroke-width="2"/>"#,
            x(1.0)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="22.00" text-anchor="middle">CD = {cd:.4}</text>"#,
            (x(1.0) + end) / 2.0
        );
    }

    let _ = writeln!(
        s,
        r#"<line class="axis" x1="{AXIS_LEFT:.2}" y1="{AXIS_Y:.2}" x2="{AXIS_RIGHT:.2}" y2="{AXIS_Y:.2}" stroke="black" stroke-width="1.5"/>"#
    );
    for r in 1..=k {
        let tx = x(r as f64);
        let _ = writeln!(
            s,
            r#"<line class="tick" x1="{tx:.2}" y1="{:.2}" x2="{tx:.2}" y2="{AXIS_Y:.2}" stroke="black"/>"#,
            AXIS_Y - 6.0
        );
        let _ = writeln!(s, r#"<text x="{tx:.2}" y="{:.2}" text-anchor="middle">{r}</text>"#, AXIS_Y - 10.0);
    }

    for (row, &m) in order.iter().enumerate() {
        let rank = report.average_rank[m];
        let mx = x(rank);
        let (slot, left) = if row < left_count { (row, true) } else { (order.len() - 1 - row, false) };
        let y = labels_top + slot as f64 * ROW;
        let (ex, anchor, tx) = if left { (AXIS_LEFT - 10.0, "end", AXIS_LEFT - 14.0) } else { (AXIS_RIGHT + 10.0, "start", AXIS_RIGHT + 14.0) };
        let _ = writeln!(
            s,
            r#"<polyline class="method" points="{mx:.2},{AXIS_Y:.2} {mx:.2},{y:.2} {ex:.2},{y:.2}" fill="none" stroke="black"/>"#
        );
        let _ = writeln!(
            s,
            r#"<text x="{tx:.2}" y="{:.2}" text-anchor="{anchor}">{} ({rank:.2})</text>"#,
            y + 4.0,
            escape(&report.methods[m])
        );
    }

    for (i, clique) in drawn.iter().enumerate() {
        let lo = clique.iter().map(|&m| report.average_rank[m]).fold(f64::INFINITY, f64::min);
        let hi = clique.iter().map(|&m| report.average_rank[m]).fold(f64::NEG_INFINITY, f64::max);
        let y = clique_top + i as f64 * 8.0;
        let _ = writeln!(
            s,
            r#"<line class="clique" x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="black" stroke-width="4" stroke-linecap="round"/>"#,
            x(lo) - 3.0,
            x(hi) + 3.0
        );
    }
    s.push_str("</svg>\n");
    s
}
