//! Homogeneous Poisson deployments of access points and users on a disc.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};
use crate::seed::{stream_rng, Stream};

/// A position in the plane, in metres.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Euclidean distance between two points.
pub fn pairwise_distance(a: Point, b: Point) -> f64 {
    a.distance(b)
}

/// The disc on which the network is deployed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    center: Point,
    radius: f64,
}

impl Region {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        ensure_positive("radius", radius)?;
        Ok(Region { center, radius })
    }

    /// Disc of the given radius centred at the origin.
    pub fn disc(radius: f64) -> Result<Self> {
        Region::new(Point::ORIGIN, radius)
    }

    pub fn center(&self) -> Point {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn area(&self) -> f64 {
        PI * self.radius * self.radius
    }

    pub fn contains(&self, p: Point) -> bool {
        p.distance(self.center) <= self.radius * (1.0 + 1e-12)
    }

    /// Concentric disc shrunk by `margin`, used to keep measurements away
    /// from the boundary.
    pub fn shrink(&self, margin: f64) -> Result<Self> {
        Region::new(self.center, self.radius - margin)
    }

    /// Uniform point on the disc. The radius is drawn as `R·sqrt(U)` so that
    /// the density is flat in area.
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let r = self.radius * rng.random::<f64>().sqrt();
        let theta = 2.0 * PI * rng.random::<f64>();
        Point::new(self.center.x + r * theta.cos(), self.center.y + r * theta.sin())
    }
}

/// Sample a homogeneous Poisson point process of intensity `lambda` (per m²).
///
/// The count is Poisson with mean `lambda · area`; given the count, points
/// are i.i.d. uniform on the disc.
pub fn sample_ppp<R: Rng + ?Sized>(lambda: f64, region: &Region, rng: &mut R) -> Result<Vec<Point>> {
    ensure_positive("lambda", lambda)?;
    let mean = lambda * region.area();
    let count = Poisson::new(mean)
        .map_err(|e| Error::param("lambda", e.to_string()))?
        .sample(rng) as usize;
    Ok(sample_uniform(count, region, rng))
}

/// [`sample_ppp`] driven by a fresh generator keyed by `seed`.
pub fn sample_ppp_seeded(lambda: f64, region: &Region, seed: u64) -> Result<Vec<Point>> {
    let mut rng = stream_rng(seed, Stream::Deployment, 0);
    sample_ppp(lambda, region, &mut rng)
}

/// Exactly `count` points i.i.d. uniform on the disc.
pub fn sample_uniform<R: Rng + ?Sized>(count: usize, region: &Region, rng: &mut R) -> Vec<Point> {
    (0..count).map(|_| region.sample_point(rng)).collect()
}

/// Square lattice with the given spacing, anchored at the region centre and
/// clipped to the disc. Every interior lattice point owns a cell of area
/// `spacing²`.
pub fn square_lattice(spacing: f64, region: &Region) -> Result<Vec<Point>> {
    ensure_positive("spacing", spacing)?;
    let steps = (region.radius / spacing).floor() as i64;
    let c = region.center;
    let mut points = Vec::new();
    for i in -steps..=steps {
        for j in -steps..=steps {
            let p = Point::new(c.x + i as f64 * spacing, c.y + j as f64 * spacing);
            if region.contains(p) {
                points.push(p);
            }
        }
    }
    Ok(points)
}

/// How a population is placed in a drop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    /// Poisson count, uniform positions.
    #[default]
    Poisson,
    /// Count fixed to the rounded mean `lambda · area`, uniform positions.
    FixedCount,
    /// Square lattice of spacing `1/sqrt(lambda)` (access points only).
    Lattice,
}

/// Sampled positions of one Monte Carlo drop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkRealization {
    pub aps: Vec<Point>,
    pub users: Vec<Point>,
    pub lambda_f: f64,
    pub lambda_u: f64,
    pub region: Region,
}

impl NetworkRealization {
    pub fn ap_count(&self) -> usize {
        self.aps.len()
    }

    pub fn user_count(&self) -> usize {
        self.users.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeploymentConfig {
    pub region_radius: f64,
    pub lambda_f: f64,
    pub lambda_u: f64,
    pub ap_placement: Placement,
    pub user_placement: Placement,
}

impl DeploymentConfig {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("region_radius", self.region_radius)?;
        ensure_positive("lambda_f", self.lambda_f)?;
        ensure_positive("lambda_u", self.lambda_u)?;
        if self.user_placement == Placement::Lattice {
            return Err(Error::param("user_placement", "lattice placement applies to access points only"));
        }
        Ok(())
    }
}

/// Result of [`deploy`]: the realization and how many attempts it took.
#[derive(Debug, Clone)]
pub struct Deployment {
    pub realization: NetworkRealization,
    pub attempts: u64,
}

const MAX_ATTEMPTS: u64 = 1000;

fn place<R: Rng + ?Sized>(placement: Placement, lambda: f64, region: &Region, rng: &mut R) -> Result<Vec<Point>> {
    match placement {
        Placement::Poisson => sample_ppp(lambda, region, rng),
        Placement::FixedCount => {
            let count = (lambda * region.area()).round() as usize;
            Ok(sample_uniform(count, region, rng))
        }
        Placement::Lattice => square_lattice(1.0 / lambda.sqrt(), region),
    }
}

/// Draw the AP and user positions of the drop keyed by `seed`.
///
/// A realization with no APs or no users is discarded and redrawn on the
/// next attempt stream; downstream stages only ever see non-empty networks.
pub fn deploy(cfg: &DeploymentConfig, seed: u64) -> Result<Deployment> {
    cfg.validate()?;
    let region = Region::disc(cfg.region_radius)?;
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = stream_rng(seed, Stream::Deployment, attempt);
        let aps = place(cfg.ap_placement, cfg.lambda_f, &region, &mut rng)?;
        let users = place(cfg.user_placement, cfg.lambda_u, &region, &mut rng)?;
        if aps.is_empty() || users.is_empty() {
            log::warn!(
                "seed {seed}: empty realization ({} APs, {} users), redrawing",
                aps.len(),
                users.len()
            );
            continue;
        }
        return Ok(Deployment {
            realization: NetworkRealization {
                aps,
                users,
                lambda_f: cfg.lambda_f,
                lambda_u: cfg.lambda_u,
                region,
            },
            attempts: attempt + 1,
        });
    }
    Err(Error::param(
        "lambda",
        format!("no non-empty realization after {MAX_ATTEMPTS} attempts"),
    ))
}
