//! Geometry of the upper half-plane: Möbius maps, unit-speed geodesic rays,
//! horoballs and the passage of a ray through a horoball.
//!
//! Every excursion computation sends the horoball's point of tangency to ∞,
//! where the horoball becomes `{Im w >= Y}` and closest-point projection onto
//! its boundary is vertical. Positions along a geodesic are tracked with the
//! Busemann function of its forward endpoint, which decreases at unit speed
//! along the ray and survives renormalization by an isometry up to an
//! additive shift.

use serde::Serialize;

use crate::error::{Error, Result};

/// Absolute tolerance for geometric predicates.
pub const GEOM_TOL: f64 = 1e-12;

/// Ratio between Teichmüller-metric lengths and curvature −1 lengths on a
/// Teichmüller disc. The diagonal flow moves `i` to `e^{2t} i`.
pub const TEICHMULLER_SCALE: f64 = 0.5;

/// Length convention for times and horocyclic lengths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    /// Curvature −1 hyperbolic arclength.
    Hyperbolic,
    /// Teichmüller metric, half the hyperbolic arclength.
    Teichmuller,
}

impl Units {
    pub fn factor(self) -> f64 {
        match self {
            Units::Hyperbolic => 1.0,
            Units::Teichmuller => TEICHMULLER_SCALE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UhpPoint {
    x: f64,
    y: f64,
}

impl UhpPoint {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if x.is_finite() && y.is_finite() && y > 0.0 {
            Ok(Self { x, y })
        } else {
            Err(Error::NotInHalfPlane { x, y })
        }
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    /// Hyperbolic distance, `2 asinh(|z - w| / (2 sqrt(Im z Im w)))`.
    pub fn distance(&self, other: &UhpPoint) -> f64 {
        let chord = (self.x - other.x).hypot(self.y - other.y);
        2.0 * (chord / (2.0 * (self.y * other.y).sqrt())).asinh()
    }
}

/// A point of `∂ℍ = ℝ ∪ {∞}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Boundary {
    Finite(f64),
    Infinity,
}

impl Boundary {
    pub fn finite(self) -> Option<f64> {
        match self {
            Boundary::Finite(x) => Some(x),
            Boundary::Infinity => None,
        }
    }
}

/// An orientation-preserving isometry `z ↦ (az + b)/(cz + d)` with `ad - bc = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mobius {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
}

impl Mobius {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let det = a * d - b * c;
        if !det.is_finite() || (det - 1.0).abs() > GEOM_TOL {
            return Err(Error::InvalidMatrix(det));
        }
        Ok(Self { a, b, c, d })
    }

    /// Rescales a matrix with positive determinant into the isometry group.
    pub fn normalized(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let det = a * d - b * c;
        if !(det > 0.0) || !det.is_finite() {
            return Err(Error::InvalidMatrix(det));
        }
        let s = det.sqrt().recip();
        Ok(Self {
            a: a * s,
            b: b * s,
            c: c * s,
            d: d * s,
        })
    }

    pub fn identity() -> Self {
        Self { a: 1.0, b: 0.0, c: 0.0, d: 1.0 }
    }

    pub fn translation(t: f64) -> Self {
        Self { a: 1.0, b: t, c: 0.0, d: 1.0 }
    }

    /// `z ↦ -1/(z - t)`, sending `t` to ∞.
    pub fn cusp_to_infinity(t: f64) -> Self {
        Self { a: 0.0, b: -1.0, c: 1.0, d: -t }
    }

    pub fn entries(&self) -> [[f64; 2]; 2] {
        [[self.a, self.b], [self.c, self.d]]
    }

    pub fn inverse(&self) -> Self {
        Self { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Mobius) -> Self {
        Self {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
        }
    }

    pub fn apply(&self, z: UhpPoint) -> UhpPoint {
        let (x, y) = (z.x, z.y);
        let re = self.c * x + self.d;
        let im = self.c * y;
        let den = re * re + im * im;
        let nx = ((self.a * x + self.b) * re + self.a * self.c * y * y) / den;
        let det = self.a * self.d - self.b * self.c;
        UhpPoint { x: nx, y: det * y / den }
    }

    pub fn apply_boundary(&self, p: Boundary) -> Boundary {
        match p {
            Boundary::Infinity => {
                if self.c == 0.0 {
                    Boundary::Infinity
                } else {
                    Boundary::Finite(self.a / self.c)
                }
            }
            Boundary::Finite(x) => {
                let den = self.c * x + self.d;
                if den == 0.0 {
                    Boundary::Infinity
                } else {
                    Boundary::Finite((self.a * x + self.b) / den)
                }
            }
        }
    }
}

/// Applies a 2×2 real matrix of determinant 1 to a point of ℍ.
pub fn mobius_apply(m: [[f64; 2]; 2], z: UhpPoint) -> Result<UhpPoint> {
    Ok(Mobius::new(m[0][0], m[0][1], m[1][0], m[1][1])?.apply(z))
}

/// Busemann function of the boundary point `u`, normalized so that it equals
/// `-ln Im w` for `u = ∞` and `ln(|w - u|² / Im w)` otherwise.
pub fn busemann(u: Boundary, x: f64, y: f64) -> f64 {
    match u {
        Boundary::Infinity => -y.ln(),
        Boundary::Finite(u) => (((x - u) * (x - u) + y * y) / y).ln(),
    }
}

/// Unit-speed geodesic ray `γ: [0, ∞) → ℍ` from `base` to an ideal endpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicRay {
    base: UhpPoint,
    endpoint: Boundary,
    backward: Boundary,
    // Sends backward → 0, endpoint → ∞ and base → i·axis_height.
    to_axis: Mobius,
    axis_height: f64,
}

impl GeodesicRay {
    pub fn base(&self) -> UhpPoint {
        self.base
    }

    pub fn endpoint(&self) -> Boundary {
        self.endpoint
    }

    /// The other ideal endpoint of the complete geodesic through the ray.
    pub fn backward(&self) -> Boundary {
        self.backward
    }

    pub fn point_at(&self, t: f64) -> UhpPoint {
        let on_axis = UhpPoint { x: 0.0, y: self.axis_height * t.exp() };
        self.to_axis.inverse().apply(on_axis)
    }

    /// Image of the ray under an isometry.
    pub fn transform(&self, m: &Mobius) -> Result<GeodesicRay> {
        geodesic_ray(m.apply(self.base), m.apply_boundary(self.endpoint))
    }
}

pub fn geodesic_ray(base: UhpPoint, endpoint: Boundary) -> Result<GeodesicRay> {
    let base = UhpPoint::new(base.x, base.y)?;
    let (x0, y0) = (base.x, base.y);
    match endpoint {
        Boundary::Infinity => Ok(GeodesicRay {
            base,
            endpoint,
            backward: Boundary::Finite(x0),
            to_axis: Mobius::translation(-x0),
            axis_height: y0,
        }),
        Boundary::Finite(u) if !u.is_finite() => Err(Error::Domain(format!("endpoint {u}"))),
        Boundary::Finite(u) if (u - x0).abs() <= GEOM_TOL * (1.0 + u.abs()) => {
            // Straight down to u; ∞ is behind the base.
            Ok(GeodesicRay {
                base,
                endpoint,
                backward: Boundary::Infinity,
                to_axis: Mobius::cusp_to_infinity(u),
                axis_height: 1.0 / y0,
            })
        }
        Boundary::Finite(u) => {
            let center = (x0 * x0 + y0 * y0 - u * u) / (2.0 * (x0 - u));
            let v = 2.0 * center - u;
            let to_axis = if u > v {
                Mobius::normalized(1.0, -v, -1.0, u)?
            } else {
                Mobius::normalized(1.0, -v, 1.0, -u)?
            };
            let w = to_axis.apply(base);
            Ok(GeodesicRay {
                base,
                endpoint,
                backward: Boundary::Finite(v),
                to_axis,
                axis_height: w.x.hypot(w.y),
            })
        }
    }
}

/// A horoball. For a finite tangency it is the closed Euclidean disc of the
/// given diameter tangent to ℝ; for tangency ∞ it is `{y >= 1/diameter}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Horoball {
    tangency: Boundary,
    diameter: f64,
    weight: f64,
    label: String,
}

impl Horoball {
    pub fn new(tangency: Boundary, diameter: f64, weight: f64, label: impl Into<String>) -> Result<Self> {
        if !(diameter > 0.0 && diameter.is_finite()) {
            return Err(Error::InvalidHoroball(format!("diameter {diameter}")));
        }
        if !(weight > 0.0 && weight <= 1.0) {
            return Err(Error::InvalidHoroball(format!("weight {weight}")));
        }
        if let Boundary::Finite(t) = tangency {
            if !t.is_finite() {
                return Err(Error::InvalidHoroball(format!("tangency {t}")));
            }
        }
        Ok(Self { tangency, diameter, weight, label: label.into() })
    }

    pub fn tangency(&self) -> Boundary {
        self.tangency
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Height of the horoball after its tangency is sent to ∞ by
    /// [`Horoball::cusp_frame`].
    pub fn cusp_height(&self) -> f64 {
        1.0 / self.diameter
    }

    /// The isometry sending the tangency to ∞ and the horoball to
    /// `{Im w >= cusp_height}`.
    pub fn cusp_frame(&self) -> Mobius {
        match self.tangency {
            Boundary::Infinity => Mobius::identity(),
            Boundary::Finite(t) => Mobius::cusp_to_infinity(t),
        }
    }

    pub fn contains(&self, z: &UhpPoint) -> bool {
        match self.tangency {
            Boundary::Infinity => z.y * self.diameter >= 1.0,
            Boundary::Finite(t) => {
                let dx = z.x - t;
                dx * dx + z.y * z.y <= self.diameter * z.y
            }
        }
    }

    /// Image under an isometry; weight and label are carried along.
    pub fn transform(&self, m: &Mobius) -> Result<Horoball> {
        let [[_, _], [c, d]] = m.entries();
        let tangency = m.apply_boundary(self.tangency);
        let diameter = match (self.tangency, tangency) {
            (Boundary::Infinity, Boundary::Infinity) => self.diameter * d * d,
            (Boundary::Infinity, Boundary::Finite(_)) => self.diameter / (c * c),
            (Boundary::Finite(_), Boundary::Infinity) => self.diameter * c * c,
            (Boundary::Finite(t), Boundary::Finite(_)) => {
                let s = c * t + d;
                self.diameter / (s * s)
            }
        };
        Horoball::new(tangency, diameter, self.weight, self.label.clone())
    }
}

/// Visual angles at the ray's base: `phi_max` between the ray straight to the
/// tangency and the tangent ray, `phi` between the ray to the tangency and the
/// ray itself. Kept as `ln sin(phi_max)` and `sin(phi)/sin(phi_max)` because
/// deep horoballs subtend angles far below the `f64` range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ViewAngles {
    ln_sin_phi_max: f64,
    sin_ratio: f64,
}

// Below this, asin(x) = x to well under one ulp.
const LN_SMALL_ANGLE: f64 = -30.0;

impl ViewAngles {
    pub fn from_log_sine(ln_sin_phi_max: f64, sin_ratio: f64) -> Result<Self> {
        if !(ln_sin_phi_max < 0.0) || !(0.0..=1.0).contains(&sin_ratio) {
            return Err(Error::Domain(format!(
                "view angles ln sin(phi_max) = {ln_sin_phi_max}, ratio = {sin_ratio}"
            )));
        }
        Ok(Self { ln_sin_phi_max, sin_ratio })
    }

    pub fn from_angles(phi: f64, phi_max: f64) -> Result<Self> {
        if !(phi_max > 0.0 && phi_max < std::f64::consts::FRAC_PI_2) || !(0.0..=phi_max).contains(&phi) {
            return Err(Error::Domain(format!("phi = {phi}, phi_max = {phi_max}")));
        }
        Self::from_log_sine(phi_max.sin().ln(), phi.sin() / phi_max.sin())
    }

    pub fn ln_sin_phi_max(&self) -> f64 {
        self.ln_sin_phi_max
    }

    /// `sin(phi) / sin(phi_max)`.
    pub fn sin_ratio(&self) -> f64 {
        self.sin_ratio
    }

    pub fn phi_max(&self) -> f64 {
        self.ln_sin_phi_max.exp().min(1.0).asin()
    }

    pub fn phi(&self) -> f64 {
        (self.sin_ratio * self.ln_sin_phi_max.exp()).min(1.0).asin()
    }

    pub fn ln_phi_max(&self) -> f64 {
        if self.ln_sin_phi_max < LN_SMALL_ANGLE {
            self.ln_sin_phi_max
        } else {
            self.phi_max().ln()
        }
    }

    pub fn ln_phi(&self) -> f64 {
        let ln_sin_phi = self.ln_sin_phi_max + self.sin_ratio.ln();
        if ln_sin_phi < LN_SMALL_ANGLE {
            ln_sin_phi
        } else {
            self.phi().ln()
        }
    }
}

/// Passage of a ray through a horoball. Times are hyperbolic arclength from
/// the ray's base.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExcursionGeometry {
    pub t_entry: f64,
    /// `None` when the ray converges to the tangency.
    pub t_exit: Option<f64>,
    /// The base lies inside the horoball, so `t_entry` was clipped to 0.
    pub starts_inside: bool,
    /// Horocyclic length (curvature −1) of the projection of `ray ∩ H` onto
    /// `∂H`, when the passage is bounded.
    pub projected_length: Option<f64>,
    /// Absent when the base is inside the horoball.
    pub angles: Option<ViewAngles>,
}

/// A complete geodesic in the cusp frame of a horoball `{Im w >= height}`,
/// with forward endpoint `u` and backward endpoint `v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Chord {
    /// `(x, busemann_u)` at the entry point; `None` if the geodesic comes
    /// down from the cusp.
    pub entry: Option<(f64, f64)>,
    /// `(x, busemann_u)` at the exit point; `None` if the geodesic runs into
    /// the cusp.
    pub exit: Option<(f64, f64)>,
    /// Euclidean radius of the geodesic, `∞` for vertical lines.
    pub radius: f64,
}

impl Chord {
    /// Horocyclic length (curvature −1) between entry and exit projections.
    pub fn span(&self, height: f64) -> Option<f64> {
        match (self.entry, self.exit) {
            (Some((a, _)), Some((b, _))) => Some((a - b).abs() / height),
            _ => None,
        }
    }
}

pub(crate) fn chord(u: Boundary, v: Boundary, height: f64) -> Option<Chord> {
    match (u, v) {
        (Boundary::Infinity, Boundary::Infinity) => None,
        (Boundary::Infinity, Boundary::Finite(v)) => Some(Chord {
            entry: Some((v, -height.ln())),
            exit: None,
            radius: f64::INFINITY,
        }),
        (Boundary::Finite(u), Boundary::Infinity) => Some(Chord {
            entry: None,
            exit: Some((u, height.ln())),
            radius: f64::INFINITY,
        }),
        (Boundary::Finite(u), Boundary::Finite(v)) => {
            let radius = 0.5 * (u - v).abs();
            if radius < height * (1.0 - GEOM_TOL) {
                return None;
            }
            let half = (radius * radius - height * height).max(0.0).sqrt();
            let toward_u = (u - v).signum();
            let center = 0.5 * (u + v);
            // Distances to u written without cancellation.
            let entry_gap = radius + half;
            let exit_gap = height * height / (radius + half);
            let b = |gap: f64| ((gap * gap + height * height) / height).ln();
            Some(Chord {
                entry: Some((center - toward_u * half, b(entry_gap))),
                exit: Some((center + toward_u * half, b(exit_gap))),
                radius,
            })
        }
    }
}

/// Entry and exit of the ray through the open horoball, with the view angles
/// at the base.
pub fn intersect(ray: &GeodesicRay, h: &Horoball) -> Option<ExcursionGeometry> {
    let frame = h.cusp_frame();
    let u = frame.apply_boundary(ray.endpoint);
    let v = frame.apply_boundary(ray.backward);
    let w0 = frame.apply(ray.base);
    let height = h.cusp_height();
    let chord = chord(u, v, height)?;
    let b0 = busemann(u, w0.x, w0.y);
    let t_entry = chord.entry.map_or(f64::NEG_INFINITY, |(_, b)| b0 - b);
    let t_exit = chord.exit.map(|(_, b)| b0 - b);
    if matches!(t_exit, Some(t) if t < 0.0) {
        return None;
    }
    let starts_inside = t_entry < 0.0;
    let projected_length = match (chord.entry, chord.exit) {
        (_, None) => None,
        (Some(_), Some(_)) if !starts_inside => chord.span(height),
        (_, Some((x_exit, _))) => Some((w0.x - x_exit).abs() / height),
    };
    let angles = if starts_inside || w0.y >= height {
        None
    } else {
        let ratio = if chord.radius.is_infinite() { 0.0 } else { height / chord.radius };
        ViewAngles::from_log_sine((w0.y / height).ln(), ratio.min(1.0)).ok()
    };
    Some(ExcursionGeometry {
        t_entry: t_entry.max(0.0),
        t_exit,
        starts_inside,
        projected_length,
        angles,
    })
}

/// Length along `∂H` of the closest-point projection of `ray ∩ H`.
pub fn excursion_exact(ray: &GeodesicRay, h: &Horoball, units: Units) -> Result<f64> {
    let geom = intersect(ray, h).ok_or(Error::NoIntersection)?;
    let length = geom.projected_length.ok_or(Error::UnboundedExcursion)?;
    Ok(units.factor() * length)
}

/// `phi_max / phi`.
pub fn excursion_angle(angles: &ViewAngles) -> Result<f64> {
    if angles.sin_ratio <= 0.0 {
        return Err(Error::UnboundedExcursion);
    }
    Ok((angles.ln_phi_max() - angles.ln_phi()).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pt(x: f64, y: f64) -> UhpPoint {
        UhpPoint::new(x, y).unwrap()
    }

    #[test]
    fn mobius_examples() {
        let i = pt(0.0, 1.0);
        assert_eq!(mobius_apply([[1.0, 0.0], [0.0, 1.0]], i).unwrap(), i);
        assert_eq!(mobius_apply([[1.0, 1.0], [0.0, 1.0]], i).unwrap(), pt(1.0, 1.0));
        let w = mobius_apply([[0.0, -1.0], [1.0, 0.0]], pt(0.0, 2.0)).unwrap();
        assert_relative_eq!(w.x(), 0.0, epsilon = 1e-15);
        assert_relative_eq!(w.y(), 0.5, epsilon = 1e-15);
        assert!(matches!(
            mobius_apply([[2.0, 0.0], [0.0, 1.0]], i),
            Err(Error::InvalidMatrix(_))
        ));
    }

    #[test]
    fn vertical_rays() {
        let up = geodesic_ray(pt(0.0, 1.0), Boundary::Infinity).unwrap();
        let down = geodesic_ray(pt(0.0, 1.0), Boundary::Finite(0.0)).unwrap();
        for t in [0.0, 0.5, 3.0] {
            assert_relative_eq!(up.point_at(t).y(), t.exp(), max_relative = 1e-13);
            assert_relative_eq!(down.point_at(t).y(), (-t).exp(), max_relative = 1e-13);
            assert!(down.point_at(t).x().abs() < 1e-13);
        }
    }

    #[test]
    fn ray_to_one_follows_unit_semicircle() {
        // |i - c| = |1 - c| forces c = 0, so the radius is 1.
        let ray = geodesic_ray(pt(0.0, 1.0), Boundary::Finite(1.0)).unwrap();
        assert_eq!(ray.backward(), Boundary::Finite(-1.0));
        for t in [0.1, 1.0, 4.0, 10.0] {
            let p = ray.point_at(t);
            assert_relative_eq!(p.x().hypot(p.y()), 1.0, max_relative = 1e-12);
            assert!(p.x() > 0.0);
        }
    }

    #[test]
    fn base_on_boundary_rejected() {
        assert!(UhpPoint::new(0.0, 0.0).is_err());
        assert!(UhpPoint::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn intersect_examples() {
        let up = geodesic_ray(pt(0.0, 1.0), Boundary::Infinity).unwrap();
        let top = Horoball::new(Boundary::Infinity, (-1.0f64).exp(), 1.0, "inf").unwrap();
        let g = intersect(&up, &top).unwrap();
        assert_relative_eq!(g.t_entry, 1.0, epsilon = 1e-14);
        assert_eq!(g.t_exit, None);

        let down = geodesic_ray(pt(0.0, 1.0), Boundary::Finite(0.0)).unwrap();
        let ford = Horoball::new(Boundary::Finite(0.0), 1.0, 1.0, "0/1").unwrap();
        let g = intersect(&down, &ford).unwrap();
        assert!(g.t_entry.abs() < 1e-14);
        assert_eq!(g.t_exit, None);

        let to_one = geodesic_ray(pt(0.0, 1.0), Boundary::Finite(1.0)).unwrap();
        let small = Horoball::new(Boundary::Finite(0.0), 0.1, 1.0, "0/1").unwrap();
        assert!(intersect(&to_one, &small).is_none());
    }

    #[test]
    fn chord_in_cusp_frame() {
        // Geodesic from -1 to 1 meets {y >= 1/2} at x = ±√3/2.
        let c = chord(Boundary::Finite(1.0), Boundary::Finite(-1.0), 0.5).unwrap();
        assert_relative_eq!(c.span(0.5).unwrap(), 2.0 * 3f64.sqrt(), max_relative = 1e-14);
        // Entry/exit at (−1, c), (1, c) give 2/c.
        let c = chord(Boundary::Finite(1.0 + 1.0), Boundary::Finite(-2.0), 3f64.sqrt()).unwrap();
        assert_relative_eq!(c.span(3f64.sqrt()).unwrap(), 2.0 / 3f64.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn tangent_ray_has_zero_excursion() {
        // Unit semicircle touches {y >= 1} at its top.
        let ray = geodesic_ray(pt(-0.6, 0.8), Boundary::Finite(1.0)).unwrap();
        let h = Horoball::new(Boundary::Infinity, 1.0, 1.0, "inf").unwrap();
        let g = intersect(&ray, &h).unwrap();
        assert!((g.t_exit.unwrap() - g.t_entry).abs() < 1e-9);
        assert!(excursion_exact(&ray, &h, Units::Hyperbolic).unwrap() < 1e-9);
    }

    #[test]
    fn units_scale_lengths() {
        let ray = geodesic_ray(pt(-0.99, (1.0f64 - 0.99 * 0.99).sqrt()), Boundary::Finite(1.0)).unwrap();
        let h = Horoball::new(Boundary::Infinity, 2.0, 1.0, "inf").unwrap();
        let hyp = excursion_exact(&ray, &h, Units::Hyperbolic).unwrap();
        let teich = excursion_exact(&ray, &h, Units::Teichmuller).unwrap();
        assert_relative_eq!(hyp, 2.0 * 3f64.sqrt(), max_relative = 1e-12);
        assert_relative_eq!(teich, 3f64.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn angle_examples() {
        let a = ViewAngles::from_angles(0.02, 0.1).unwrap();
        assert_relative_eq!(excursion_angle(&a).unwrap(), 5.0, max_relative = 1e-12);
        let a = ViewAngles::from_angles(0.1, 0.1).unwrap();
        assert_relative_eq!(excursion_angle(&a).unwrap(), 1.0, max_relative = 1e-12);
        let a = ViewAngles::from_angles(0.0, 0.1).unwrap();
        assert_eq!(excursion_angle(&a), Err(Error::UnboundedExcursion));
    }

    #[test]
    fn starting_inside_clips_entry() {
        let ray = geodesic_ray(pt(0.0, 3.0), Boundary::Finite(5.0)).unwrap();
        let h = Horoball::new(Boundary::Infinity, 0.5, 1.0, "inf").unwrap();
        let g = intersect(&ray, &h).unwrap();
        assert!(g.starts_inside);
        assert_eq!(g.t_entry, 0.0);
        assert!(g.angles.is_none());
        assert!((ray.point_at(g.t_exit.unwrap()).y() - 2.0).abs() < 1e-9);
    }

    // Independent check of the closed form: project sample points of the
    // chord onto the boundary circle by direct minimization of hyperbolic
    // distance, then integrate |dz|/y along the circle between the
    // extreme projections.
    #[test]
    fn projection_matches_numerical_integration() {
        let (t, diam) = (0.3, 0.5);
        let h = Horoball::new(Boundary::Finite(t), diam, 1.0, "h").unwrap();
        let ray = geodesic_ray(pt(-0.2, 0.05), Boundary::Finite(0.6)).unwrap();
        let g = intersect(&ray, &h).unwrap();
        let (t0, t1) = (g.t_entry, g.t_exit.unwrap());
        let r = 0.5 * diam;
        let circle = |a: f64| (t + r * a.sin(), r - r * a.cos());
        let project = |z: UhpPoint| {
            let dist = |a: f64| {
                let (x, y) = circle(a);
                z.distance(&UhpPoint { x, y })
            };
            let (mut lo, mut hi) = (0.01, 2.0 * std::f64::consts::PI - 0.01);
            // coarse scan, then golden section
            let mut best = lo;
            for k in 0..=2000 {
                let a = lo + (hi - lo) * k as f64 / 2000.0;
                if dist(a) < dist(best) {
                    best = a;
                }
            }
            lo = best - 0.01;
            hi = best + 0.01;
            let gr = 0.5 * (5f64.sqrt() - 1.0);
            for _ in 0..100 {
                let a = hi - gr * (hi - lo);
                let b = lo + gr * (hi - lo);
                if dist(a) < dist(b) {
                    hi = b;
                } else {
                    lo = a;
                }
            }
            0.5 * (lo + hi)
        };
        let a0 = project(ray.point_at(t0 + 1e-9));
        let a1 = project(ray.point_at(t1 - 1e-9));
        let n = 20000;
        let mut len = 0.0;
        for k in 0..n {
            let a = a0 + (a1 - a0) * (k as f64 + 0.5) / n as f64;
            let (_, y) = circle(a);
            len += r * ((a1 - a0) / n as f64).abs() / y;
        }
        let exact = excursion_exact(&ray, &h, Units::Hyperbolic).unwrap();
        assert_relative_eq!(len, exact, max_relative = 1e-5);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn isometry() -> impl Strategy<Value = Mobius> {
            (0.5..2.0f64, -2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b, c)| Mobius::normalized(a, b, c, (1.0 + b * c) / a).unwrap())
        }

        fn horoball() -> impl Strategy<Value = Horoball> {
            prop_oneof![
                (-3.0..3.0f64, 0.05..2.0f64).prop_map(|(t, d)| Horoball::new(Boundary::Finite(t), d, 1.0, "h").unwrap()),
                (0.2..3.0f64).prop_map(|d| Horoball::new(Boundary::Infinity, d, 1.0, "h").unwrap()),
            ]
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(1000))]

            #[test]
            fn excursion_is_isometry_invariant(
                x in -3.0..3.0f64, y in 0.05..3.0f64, u in -5.0..5.0f64, h in horoball(), m in isometry()
            ) {
                let ray = geodesic_ray(pt(x, y), Boundary::Finite(u)).unwrap();
                if let Ok(before) = excursion_exact(&ray, &h, Units::Hyperbolic) {
                    let after = excursion_exact(&ray.transform(&m).unwrap(), &h.transform(&m).unwrap(), Units::Hyperbolic).unwrap();
                    prop_assert!((after - before).abs() <= 1e-9 * before.max(1.0), "{before} {after}");
                }
            }

            #[test]
            fn arclength_parameterization(x in -3.0..3.0f64, y in 0.05..3.0f64, u in -5.0..5.0f64, t in 0.0..30.0f64) {
                let ray = geodesic_ray(pt(x, y), Boundary::Finite(u)).unwrap();
                prop_assert!((ray.base().distance(&ray.point_at(t)) - t).abs() <= 1e-12 * t.max(1.0));
            }

            #[test]
            fn deeper_rays_have_longer_excursions(y in 0.05..0.9f64, r1 in 1.0..50.0f64, r2 in 1.0..50.0f64) {
                // base below {Im >= 1}; chords of radius r reach the same height
                prop_assume!((r1 - r2).abs() > 1e-6);
                let h = Horoball::new(Boundary::Infinity, 1.0, 1.0, "h").unwrap();
                let run = |r: f64| {
                    let u = (r * r - y * y).sqrt() + r;
                    let ray = geodesic_ray(pt(0.0, y), Boundary::Finite(u)).unwrap();
                    let g = intersect(&ray, &h).unwrap();
                    (excursion_exact(&ray, &h, Units::Hyperbolic).unwrap(), excursion_angle(&g.angles.unwrap()).unwrap())
                };
                let (e1, a1) = run(r1);
                let (e2, a2) = run(r2);
                prop_assert_eq!(e1 < e2, r1 < r2);
                prop_assert_eq!(a1 < a2, r1 < r2);
            }
        }
    }
}
