//! Deterministic SVG and PGM writers. Coordinates are y-up; the writers
//! flip the y axis while emitting so the files render upright.

use std::fmt::Write as _;
use tiling_billiards::{Color, Point2, Rect, TileAddress, Tiling};

pub struct SvgBuilder {
    body: String,
    bbox: Option<Rect>,
}

fn fmt(v: f64) -> String {
    format!("{v:.6}")
}

impl SvgBuilder {
    pub fn new() -> Self {
        SvgBuilder {
            body: String::new(),
            bbox: None,
        }
    }

    fn grow(&mut self, p: Point2) {
        let b = self.bbox.get_or_insert(Rect::new(p, p));
        b.min = Point2::new(b.min.x.min(p.x), b.min.y.min(p.y));
        b.max = Point2::new(b.max.x.max(p.x), b.max.y.max(p.y));
    }

    pub fn polygon(&mut self, pts: &[Point2], fill: &str, stroke: &str, width: f64) {
        let mut attr = String::new();
        for p in pts {
            self.grow(*p);
            let _ = write!(attr, "{},{} ", fmt(p.x), fmt(-p.y));
        }
        let _ = writeln!(
            self.body,
            r#"<polygon points="{}" fill="{}" stroke="{}" stroke-width="{}"/>"#,
            attr.trim_end(),
            fill,
            stroke,
            fmt(width)
        );
    }

    pub fn polyline(&mut self, pts: &[Point2], stroke: &str, width: f64) {
        if pts.len() < 2 {
            return;
        }
        let mut attr = String::new();
        for p in pts {
            self.grow(*p);
            let _ = write!(attr, "{},{} ", fmt(p.x), fmt(-p.y));
        }
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="{}"/>"#,
            attr.trim_end(),
            stroke,
            width
        );
    }

    pub fn circle(&mut self, c: Point2, r: f64, fill: &str) {
        self.grow(c);
        let _ = writeln!(
            self.body,
            r#"<circle cx="{}" cy="{}" r="{}" fill="{}"/>"#,
            fmt(c.x),
            fmt(-c.y),
            fmt(r),
            fill
        );
    }

    /// Tiles overlapping the box, as a two-colored backdrop.
    pub fn tiling_patch(&mut self, t: &Tiling, window: Rect) {
        let corners = [
            window.min,
            window.max,
            Point2::new(window.min.x, window.max.y),
            Point2::new(window.max.x, window.min.y),
        ];
        let (mut mlo, mut mhi, mut nlo, mut nhi) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for c in corners {
            let (fm, fn_) = t.lattice_coords(c);
            mlo = mlo.min(fm);
            mhi = mhi.max(fm);
            nlo = nlo.min(fn_);
            nhi = nhi.max(fn_);
        }
        for m in (mlo.floor() as i64 - 2)..=(mhi.ceil() as i64 + 2) {
            for n in (nlo.floor() as i64 - 2)..=(nhi.ceil() as i64 + 2) {
                for color in [Color::White, Color::Grey] {
                    let addr = TileAddress::new(m, n, color);
                    let tile = t.tile_at(addr);
                    let c = tile.circumcenter();
                    if c.x < window.min.x - 1.5
                        || c.x > window.max.x + 1.5
                        || c.y < window.min.y - 1.5
                        || c.y > window.max.y + 1.5
                    {
                        continue;
                    }
                    let fill = match color {
                        Color::White => "#ffffff",
                        Color::Grey => "#d9d9d9",
                    };
                    self.polygon(tile.vertices(), fill, "#b0b0b0", 0.004);
                }
            }
        }
    }

    pub fn finish(self) -> String {
        let b = self.bbox.unwrap_or(Rect::new(Point2::ZERO, Point2::new(1.0, 1.0)));
        let w = (b.max.x - b.min.x).max(1e-6);
        let h = (b.max.y - b.min.y).max(1e-6);
        let margin = 0.05 * w.max(h);
        // y flipped: viewBox spans [-max.y, -min.y]
        let view = format!(
            "{} {} {} {}",
            fmt(b.min.x - margin),
            fmt(-b.max.y - margin),
            fmt(w + 2.0 * margin),
            fmt(h + 2.0 * margin)
        );
        format!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" viewBox=\"{view}\">\n{}</svg>\n",
            self.body
        )
    }
}

/// Binary 8-bit PGM (P5).
pub fn write_pgm(path: &std::path::Path, width: usize, height: usize, pixels: &[u8]) -> std::io::Result<()> {
    use std::io::Write;
    let mut f = std::fs::File::create(path)?;
    write!(f, "P5\n{width} {height}\n255\n")?;
    f.write_all(pixels)?;
    Ok(())
}
