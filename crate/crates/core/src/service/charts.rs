//! Static SVG charts for a scoring report: concept frequencies (bar),
//! reasoning-model distribution (pie) and key/naive totals (bubble).

use std::f64::consts::PI;
use std::fmt::Write as _;

use super::report::Report;
use super::ServiceError;
use crate::corpus::{ConceptId, ConceptKind};
use crate::reasoning::ReasoningModel;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const KEY_COLOR: &str = "#2b6cb0";
const NAIVE_COLOR: &str = "#c05621";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Charts {
    pub bar: String,
    pub pie: String,
    pub bubble: String,
}

fn open_svg(title: &str) -> String {
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">"#
    )
    .unwrap();
    writeln!(s, "<title>{title}</title>").unwrap();
    writeln!(s, r##"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>"##).unwrap();
    writeln!(s, r#"<text x="{}" y="24" font-size="16" text-anchor="middle">{title}</text>"#, WIDTH / 2.0).unwrap();
    s
}

fn model_color(m: ReasoningModel) -> &'static str {
    match m {
        ReasoningModel::PureScientific => "#2f855a",
        ReasoningModel::Mixed => "#d69e2e",
        ReasoningModel::PureNaive => "#c53030",
        ReasoningModel::NoModel => "#a0aec0",
    }
}

/// One bar per concept, height = percent of responses where it was detected.
pub fn render_bar_chart(report: &Report) -> Result<String, ServiceError> {
    if report.summary.n_responses == 0 {
        return Err(ServiceError::EmptyRows);
    }
    let mut s = open_svg("Concept frequency (%)");
    let (left, right, top, bottom) = (60.0, 20.0, 40.0, 60.0);
    let plot_w = WIDTH - left - right;
    let plot_h = HEIGHT - top - bottom;
    let base = top + plot_h;
    for tick in (0..=100).step_by(25) {
        let y = base - plot_h * f64::from(tick) / 100.0;
        writeln!(s, r##"<line x1="{left}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e2e8f0"/>"##, left + plot_w).unwrap();
        writeln!(s, r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{tick}</text>"#, left - 6.0, y + 4.0).unwrap();
    }
    let slot = plot_w / ConceptId::COUNT as f64;
    for (i, p) in report.summary.concept_presence.iter().enumerate() {
        let h = plot_h * p.pct / 100.0;
        let x = left + slot * i as f64 + slot * 0.15;
        let color = match p.concept.kind() {
            ConceptKind::KeyConcept => KEY_COLOR,
            ConceptKind::NaiveIdea => NAIVE_COLOR,
        };
        writeln!(
            s,
            r#"<rect x="{x:.2}" y="{:.2}" width="{:.2}" height="{h:.2}" fill="{color}"><title>{}: {:.1}%</title></rect>"#,
            base - h,
            slot * 0.7,
            p.concept,
            p.pct
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">{}</text>"#,
            x + slot * 0.35,
            base + 18.0,
            p.concept.symbol()
        )
        .unwrap();
    }
    writeln!(s, r##"<line x1="{left}" y1="{base:.2}" x2="{:.2}" y2="{base:.2}" stroke="#1a202c"/>"##, left + plot_w).unwrap();
    s.push_str("</svg>\n");
    Ok(s)
}

/// Share of each reasoning model. Empty classes are omitted; a class holding
/// every response is drawn as a full disc.
pub fn render_pie_chart(report: &Report) -> Result<String, ServiceError> {
    let dist = &report.summary.model_distribution;
    let total = dist.total();
    if total == 0 {
        return Err(ServiceError::EmptyRows);
    }
    let mut s = open_svg("Reasoning models");
    let (cx, cy, r) = (220.0, 215.0, 150.0);
    let mut angle = -PI / 2.0;
    for m in ReasoningModel::ALL {
        let count = dist.get(m);
        if count == 0 {
            continue;
        }
        let frac = count as f64 / total as f64;
        if count == total {
            writeln!(s, r#"<circle cx="{cx}" cy="{cy}" r="{r}" fill="{}"><title>{m}: {count}</title></circle>"#, model_color(m)).unwrap();
            continue;
        }
        let end = angle + frac * 2.0 * PI;
        let large = u8::from(frac > 0.5);
        writeln!(
            s,
            r#"<path d="M {cx} {cy} L {:.2} {:.2} A {r} {r} 0 {large} 1 {:.2} {:.2} Z" fill="{}"><title>{m}: {count}</title></path>"#,
            cx + r * angle.cos(),
            cy + r * angle.sin(),
            cx + r * end.cos(),
            cy + r * end.sin(),
            model_color(m)
        )
        .unwrap();
        angle = end;
    }
    for (i, m) in ReasoningModel::ALL.into_iter().enumerate() {
        let y = 120.0 + 28.0 * i as f64;
        let count = dist.get(m);
        writeln!(s, r#"<rect x="420" y="{y}" width="16" height="16" fill="{}"/>"#, model_color(m)).unwrap();
        writeln!(
            s,
            r#"<text x="444" y="{:.2}" font-size="13">{m} ({count}, {:.1}%)</text>"#,
            y + 13.0,
            100.0 * count as f64 / total as f64
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Key-concept total (x, 0..=6) against naive-idea total (y, 0..=3); circle
/// area is proportional to the number of responses in the cell.
pub fn render_bubble_chart(report: &Report) -> Result<String, ServiceError> {
    let bubbles = &report.summary.bubbles;
    let Some(max) = bubbles.iter().map(|b| b.count).max() else {
        return Err(ServiceError::EmptyRows);
    };
    let mut s = open_svg("Key concepts vs naive ideas");
    let (left, top) = (70.0, 50.0);
    let (plot_w, plot_h) = (520.0, 280.0);
    let x_of = |k: u8| left + plot_w * (f64::from(k) + 0.5) / 7.0;
    let y_of = |n: u8| top + plot_h - plot_h * (f64::from(n) + 0.5) / 4.0;
    let max_r = (plot_h / 8.0).min(plot_w / 14.0);
    for k in 0..=6u8 {
        writeln!(s, r##"<line x1="{:.2}" y1="{top}" x2="{:.2}" y2="{:.2}" stroke="#edf2f7"/>"##, x_of(k), x_of(k), top + plot_h).unwrap();
        writeln!(s, r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">{k}</text>"#, x_of(k), top + plot_h + 18.0).unwrap();
    }
    for n in 0..=3u8 {
        writeln!(s, r##"<line x1="{left}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#edf2f7"/>"##, y_of(n), left + plot_w, y_of(n)).unwrap();
        writeln!(s, r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="end">{n}</text>"#, left - 8.0, y_of(n) + 4.0).unwrap();
    }
    writeln!(s, r#"<text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle">key concepts</text>"#, left + plot_w / 2.0, HEIGHT - 20.0).unwrap();
    writeln!(
        s,
        r#"<text x="20" y="{:.2}" font-size="13" text-anchor="middle" transform="rotate(-90 20 {:.2})">naive ideas</text>"#,
        top + plot_h / 2.0,
        top + plot_h / 2.0
    )
    .unwrap();
    for b in bubbles {
        let r = max_r * (b.count as f64 / max as f64).sqrt();
        writeln!(
            s,
            r##"<circle cx="{:.2}" cy="{:.2}" r="{r:.2}" fill="#3182ce" fill-opacity="0.6"><title>key {} / naive {}: {}</title></circle>"##,
            x_of(b.key_total),
            y_of(b.naive_total),
            b.key_total,
            b.naive_total,
            b.count
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn render_charts(report: &Report) -> Result<Charts, ServiceError> {
    Ok(Charts {
        bar: render_bar_chart(report)?,
        pie: render_pie_chart(report)?,
        bubble: render_bubble_chart(report)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::ConceptScores;
    use crate::service::{generate_report, ResultRow};
    use ConceptId::*;

    fn report(rows: &[&[ConceptId]]) -> Report {
        let rows: Vec<_> = rows
            .iter()
            .map(|p| ResultRow::from_scores("s".into(), "q".into(), ConceptScores::with_present(p)))
            .collect();
        generate_report(&rows).unwrap()
    }

    #[test]
    fn single_cell_bubble_has_one_circle() {
        let r = report(&[&[Variation, Heritability, Competition, LimitedResources, DifferentialSurvival]]);
        let svg = render_bubble_chart(&r).unwrap();
        assert_eq!(svg.matches("<circle").count(), 1);
        assert!(svg.contains("key 5 / naive 0: 1"));
    }

    #[test]
    fn bubble_area_tracks_count() {
        let r = report(&[&[Variation], &[Variation], &[Variation], &[Variation], &[NeedsGoals]]);
        let svg = render_bubble_chart(&r).unwrap();
        let radii: Vec<f64> = svg
            .match_indices(" r=\"")
            .map(|(i, _)| {
                let rest = &svg[i + 4..];
                rest[..rest.find('"').unwrap()].parse().unwrap()
            })
            .collect();
        assert_eq!(radii.len(), 2);
        // cells (0,1) count 1 then (1,0) count 4
        assert!((radii[1] / radii[0] - 2.0).abs() < 0.01);
    }

    #[test]
    fn pie_and_bar_render() {
        let r = report(&[&[Variation], &[NeedsGoals], &[Variation, UseDisuse], &[]]);
        let pie = render_pie_chart(&r).unwrap();
        assert_eq!(pie.matches("<path").count(), 4);
        let bar = render_bar_chart(&r).unwrap();
        assert_eq!(bar.matches("<rect").count(), 1 + ConceptId::COUNT);
        assert!(bar.starts_with("<svg"));
        let whole = report(&[&[Variation]]);
        assert_eq!(render_pie_chart(&whole).unwrap().matches("<circle").count(), 1);
    }
}
