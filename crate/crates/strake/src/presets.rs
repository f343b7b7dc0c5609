//! Built-in geometry configurations: symmetric NACA 4-digit sections,
//! rectangular box bodies (walls), and the two-wall corner fixture.

use crate::error::{Error, Result};
use crate::geom::{pt, Point};
use crate::geomkit::{naca_half_thickness, BoundaryLoop, Curve, Geometry, TrailingEdge};

/// Body loops run clockwise so the fluid stays on the left of each curve.
pub struct Body {
    pub boundary: BoundaryLoop,
    pub name: String,
}

/// Symmetric NACA 4-digit section ("0012" etc.) with unit chord, leading edge
/// at the origin. An open trailing edge gets a squared TE face curve.
pub fn naca4(geom: &mut Geometry, digits: &str, te: TrailingEdge) -> Result<Body> {
    if digits.len() != 4 || !digits.chars().all(|c| c.is_ascii_digit()) {
        return Err(Error::Config(format!("invalid NACA digits '{digits}'")));
    }
    if !digits.starts_with("00") {
        return Err(Error::Config(format!(
            "only symmetric (00xx) NACA sections are supported, got '{digits}'"
        )));
    }
    let thickness = digits[2..4].parse::<f64>().unwrap() / 100.0;
    if thickness <= 0.0 {
        return Err(Error::Config("zero-thickness section".into()));
    }
    let upper = geom.add(Curve::naca_surface(
        "aerofoil-upper",
        "aerofoil-upper",
        thickness,
        te,
        true,
    ));
    let mut curves = vec![upper];
    if te == TrailingEdge::Open {
        let y_te = naca_half_thickness(thickness, te, 1.0);
        curves.push(geom.add(Curve::segment(
            "aerofoil-te",
            "aerofoil-te",
            pt(1.0, y_te),
            pt(1.0, -y_te),
        )));
    }
    curves.push(geom.add(
        Curve::naca_surface("aerofoil-lower", "aerofoil-lower", thickness, te, false).reversed(),
    ));
    let boundary = BoundaryLoop {
        curves,
        closed: true,
    };
    boundary.validate(geom, true)?;
    Ok(Body {
        boundary,
        name: format!("naca{digits}"),
    })
}

/// Axis-aligned rectangular body (e.g. a wall block near the wake).
/// Traversed clockwise: left side up, top rightward, right side down, bottom
/// leftward.
pub fn box_body(geom: &mut Geometry, name: &str, min: Point, max: Point) -> Result<Body> {
    if !(max.x > min.x && max.y > min.y) {
        return Err(Error::Config(format!(
            "degenerate box [{},{}] x [{},{}]",
            min.x, max.x, min.y, max.y
        )));
    }
    let e = |side: &str| format!("{name}-{side}");
    let curves = vec![
        geom.add(Curve::segment(
            &e("left"),
            &e("left"),
            pt(min.x, min.y),
            pt(min.x, max.y),
        )),
        geom.add(Curve::segment(
            &e("top"),
            &e("top"),
            pt(min.x, max.y),
            pt(max.x, max.y),
        )),
        geom.add(Curve::segment(
            &e("right"),
            &e("right"),
            pt(max.x, max.y),
            pt(max.x, min.y),
        )),
        geom.add(Curve::segment(
            &e("bottom"),
            &e("bottom"),
            pt(max.x, min.y),
            pt(min.x, min.y),
        )),
    ];
    let boundary = BoundaryLoop {
        curves,
        closed: true,
    };
    boundary.validate(geom, true)?;
    Ok(Body {
        boundary,
        name: name.to_string(),
    })
}

/// Two perpendicular half-walls meeting at the origin; the fluid occupies the
/// first quadrant. Open chain: vertical wall descending x = 0, then
/// horizontal wall along y = 0.
pub fn corner_walls(geom: &mut Geometry, leg: f64) -> Result<Body> {
    if leg <= 0.0 {
        return Err(Error::Config(format!("corner leg must be positive: {leg}")));
    }
    let a = geom.add(Curve::segment(
        "wall-vertical",
        "wall-vertical",
        pt(0.0, leg),
        pt(0.0, 0.0),
    ));
    let b = geom.add(Curve::segment(
        "wall-horizontal",
        "wall-horizontal",
        pt(0.0, 0.0),
        pt(leg, 0.0),
    ));
    Ok(Body {
        boundary: BoundaryLoop {
            curves: vec![a, b],
            closed: false,
        },
        name: "corner".to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn naca0012_te_thickness() {
        let mut geom = Geometry::default();
        let body = naca4(&mut geom, "0012", TrailingEdge::Open).unwrap();
        assert_eq!(body.boundary.curves.len(), 3);
        let te = geom.curve(body.boundary.curves[1]);
        let a = te.eval(0.0).unwrap();
        let b = te.eval(1.0).unwrap();
        assert!((a.dist(b) - 2.0 * 0.00126).abs() < 1e-4);
    }

    #[test]
    fn naca_closed_te_has_two_curves() {
        let mut geom = Geometry::default();
        let body = naca4(&mut geom, "0012", TrailingEdge::Closed).unwrap();
        assert_eq!(body.boundary.curves.len(), 2);
    }

    #[test]
    fn cambered_sections_rejected() {
        let mut geom = Geometry::default();
        assert!(naca4(&mut geom, "2412", TrailingEdge::Open).is_err());
        assert!(naca4(&mut geom, "001x", TrailingEdge::Open).is_err());
    }

    #[test]
    fn box_is_clockwise() {
        let mut geom = Geometry::default();
        let body = box_body(&mut geom, "wall", pt(0.0, 0.0), pt(2.0, 1.0)).unwrap();
        assert!(body.boundary.validate(&geom, true).is_ok());
    }
}
