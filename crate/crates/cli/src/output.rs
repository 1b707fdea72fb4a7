//! CSV tables and SVG plots.

use std::fmt::Write as _;

use pdmp::classify::InvasionTable;
use pdmp::simulate::Trajectory;

fn header(first: &[&str], n: usize, last: &[&str]) -> String {
    let mut cols: Vec<String> = first.iter().map(|s| s.to_string()).collect();
    cols.extend((1..=n).map(|i| format!("x{i}")));
    cols.extend(last.iter().map(|s| s.to_string()));
    cols.join(",") + "\n"
}

fn push_row(out: &mut String, lead: &[String], x: &[f64], tail: Option<usize>) {
    let cells: Vec<String> = lead.iter().cloned().chain(x.iter().map(|v| v.to_string())).collect();
    out.push_str(&cells.join(","));
    if let Some(k) = tail {
        let _ = write!(out, ",{k}");
    }
    out.push('\n');
}

/// `t,x1,...,xn,k` with 1-based environments.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = header(&["t"], traj.n, &["k"]);
    for s in 0..traj.len() {
        push_row(&mut out, &[traj.times[s].to_string()], traj.state(s), Some(traj.envs[s] + 1));
    }
    out
}

/// `t,from,to,x1,...,xn`.
pub fn jumps_csv(traj: &Trajectory) -> String {
    let mut out = header(&["t", "from", "to"], traj.n, &[]);
    for j in &traj.jumps {
        push_row(&mut out, &[j.t.to_string(), (j.from + 1).to_string(), (j.to + 1).to_string()], &j.x, None);
    }
    out
}

/// Final state of each replicate: `replicate,t,x1,...,xn,k`.
pub fn endpoints_csv(trajs: &[Trajectory]) -> String {
    let n = trajs.first().map_or(0, |t| t.n);
    let mut out = header(&["replicate", "t"], n, &["k"]);
    for tr in trajs {
        let last = tr.len() - 1;
        push_row(
            &mut out,
            &[tr.replicate.to_string(), tr.times[last].to_string()],
            tr.final_state(),
            Some(tr.final_env() + 1),
        );
    }
    out
}

/// Points of all replicates on the grid `m * dt` plus the final time:
/// `replicate,t,x1,...,xn,k`. The extra samples taken at jumps are dropped.
pub fn ensemble_csv(trajs: &[Trajectory], dt: f64) -> String {
    let n = trajs.first().map_or(0, |t| t.n);
    let mut out = header(&["replicate", "t"], n, &["k"]);
    for tr in trajs {
        let mut next = 0.0;
        for s in 0..tr.len() {
            let t = tr.times[s];
            if t < next - 1e-9 * dt && s + 1 < tr.len() {
                continue;
            }
            next = ((t / dt).round() + 1.0) * dt;
            push_row(&mut out, &[tr.replicate.to_string(), tr.times[s].to_string()], tr.state(s), Some(tr.envs[s] + 1));
        }
    }
    out
}

/// `x,h1,h2`.
pub fn density_csv(rows: &[(f64, f64, f64)]) -> String {
    let mut out = String::from("x,h1,h2\n");
    for (x, h1, h2) in rows {
        let _ = writeln!(out, "{x},{h1},{h2}");
    }
    out
}

/// One row per face: `face,exists,method,lambda1..n,se1..n`; faces are
/// 1-based species lists joined by `+`, `0` for the origin.
pub fn invasion_csv(table: &InvasionTable) -> String {
    let mut cols = vec!["face".to_string(), "exists".into(), "method".into()];
    cols.extend((1..=table.n).map(|i| format!("lambda{i}")));
    cols.extend((1..=table.n).map(|i| format!("se{i}")));
    let mut out = cols.join(",") + "\n";
    for row in &table.rows {
        let face = if row.face.is_empty() {
            "0".to_string()
        } else {
            row.face.members().iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join("+")
        };
        let method = row.method.map_or("", |m| m.name());
        let _ = write!(out, "{face},{},{method}", row.exists);
        for v in row.lambdas.iter().chain(&row.se) {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

/// Intervals `[t0, t1)` spent in environment `k` (zero-based).
pub fn env_intervals(traj: &Trajectory, k: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut env = traj.envs.first().copied().unwrap_or(0);
    let mut start = traj.times.first().copied().unwrap_or(0.0);
    for j in &traj.jumps {
        if env == k {
            out.push((start, j.t));
        }
        env = j.to;
        start = j.t;
    }
    if env == k {
        out.push((start, traj.t_max));
    }
    out
}

/// One plotting panel in SVG user units.
pub struct Panel {
    pub left: f64,
    pub top: f64,
    pub width: f64,
    pub height: f64,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub log_y: bool,
}

impl Panel {
    fn sx(&self, x: f64) -> f64 {
        self.left + (x - self.x_range.0) / (self.x_range.1 - self.x_range.0) * self.width
    }

    fn sy(&self, y: f64) -> f64 {
        let y = if self.log_y { y.max(10f64.powf(self.y_range.0)).log10() } else { y };
        let y = y.clamp(self.y_range.0, self.y_range.1);
        self.top + self.height - (y - self.y_range.0) / (self.y_range.1 - self.y_range.0) * self.height
    }

    pub fn shade(&self, svg: &mut String, intervals: &[(f64, f64)]) {
        for &(a, b) in intervals {
            let (x0, x1) = (self.sx(a), self.sx(b));
            let _ = writeln!(
                svg,
                r##"<rect x="{x0:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#d8e4f0"/>"##,
                self.top,
                (x1 - x0).max(0.0),
                self.height
            );
        }
    }

    pub fn line(&self, svg: &mut String, pts: impl Iterator<Item = (f64, f64)>, color: &str, opacity: f64) {
        let mut d = String::new();
        for (i, (x, y)) in pts.enumerate() {
            let _ = write!(d, "{}{:.2},{:.2}", if i == 0 { "M" } else { " L" }, self.sx(x), self.sy(y));
        }
        let _ = writeln!(
            svg,
            r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="1" stroke-opacity="{opacity}"/>"#
        );
    }

    pub fn axes(&self, svg: &mut String, x_label: &str, y_label: &str) {
        let (l, t, w, h) = (self.left, self.top, self.width, self.height);
        let _ = writeln!(svg, r#"<rect x="{l}" y="{t}" width="{w}" height="{h}" fill="none" stroke="black"/>"#);
        for i in 0..=5 {
            let v = self.x_range.0 + (self.x_range.1 - self.x_range.0) * i as f64 / 5.0;
            let x = self.sx(v);
            let _ = writeln!(
                svg,
                r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" font-size="11" text-anchor="middle">{}</text>"#,
                t + h,
                t + h + 4.0,
                t + h + 16.0,
                tick(v)
            );
        }
        for i in 0..=4 {
            let v = self.y_range.0 + (self.y_range.1 - self.y_range.0) * i as f64 / 4.0;
            let y = t + h - h * i as f64 / 4.0;
            let label = if self.log_y { format!("1e{}", v.round()) } else { tick(v) };
            let _ = writeln!(
                svg,
                r#"<line x1="{:.2}" y1="{y:.2}" x2="{l}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{label}</text>"#,
                l - 4.0,
                l - 6.0,
                y + 4.0
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle">{x_label}</text>"#,
            l + w / 2.0,
            t + h + 34.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle" transform="rotate(-90 {:.2} {:.2})">{y_label}</text>"#,
            l - 44.0,
            t + h / 2.0,
            l - 44.0,
            t + h / 2.0
        );
    }
}

fn tick(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-2..1e5).contains(&a) {
        let s = format!("{v:.2}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.1e}")
    }
}

pub fn svg_document(width: f64, height: f64, title: &str, body: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{:.1}\" y=\"20\" font-size=\"14\" text-anchor=\"middle\">{title}</text>\n{body}</svg>\n",
        width / 2.0
    )
}

/// Evenly thinned indices `0..len`, always keeping the last one.
pub fn thin(len: usize, max_points: usize) -> Vec<usize> {
    if len <= max_points || max_points < 2 {
        return (0..len).collect();
    }
    let step = (len - 1) as f64 / (max_points - 1) as f64;
    let mut out: Vec<usize> = (0..max_points).map(|i| (i as f64 * step).round() as usize).collect();
    out.dedup();
    out
}
