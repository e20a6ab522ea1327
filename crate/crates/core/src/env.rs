//! Physical and virtual spaces, obstacle presets and scenario configuration.
//!
//! Coordinates are centered: the physical room spans
//! `[-width/2, width/2] × [-height/2, height/2]`, x to the right, y up.
//!
//! Obstacle presets are defined as fractions of the room size, so the same
//! layout scales to 5×5, 10×10 or 20×20 m rooms:
//!
//! | preset         | obstacles                                                        |
//! |----------------|------------------------------------------------------------------|
//! | `simple`       | rectangle x∈[-0.20,0.20], y∈[0.10,0.30]                           |
//! | `circle`       | centered disc of radius 0.15·min(w,h) (32-gon)                   |
//! | `four_squares` | squares of side 0.12 centered at (±0.25, ±0.25)                  |
//! | `complex`      | rectangle, bar, triangle and disc (see [`complex_obstacles`])    |
//! | `more`         | `complex` plus a central square of side 0.10                     |
//! | `less`         | `complex` without the disc                                       |

use std::collections::VecDeque;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::geometry::{wrap_angle, Point2, Polygon, Segment};
use crate::locomotion::UserState;
use crate::params::SimParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Empty,
    Simple,
    Circle,
    FourSquares,
    Complex,
    More,
    Less,
}

impl Preset {
    pub const ALL: [Preset; 7] = [
        Preset::Empty,
        Preset::Simple,
        Preset::Circle,
        Preset::FourSquares,
        Preset::Complex,
        Preset::More,
        Preset::Less,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Empty => "empty",
            Preset::Simple => "simple",
            Preset::Circle => "circle",
            Preset::FourSquares => "four_squares",
            Preset::Complex => "complex",
            Preset::More => "more",
            Preset::Less => "less",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == key)
            .ok_or_else(|| Error::Config(format!("unknown obstacle preset '{s}'")))
    }
}

/// The walkable room: a rectangle minus polygonal obstacles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalSpace {
    width: f64,
    height: f64,
    obstacles: Vec<Polygon>,
    preset_name: String,
    #[serde(skip)]
    edges: Vec<Segment>,
}

impl PhysicalSpace {
    /// Validates and builds a room. Obstacles are re-oriented clockwise.
    pub fn new(
        width: f64,
        height: f64,
        obstacles: Vec<Polygon>,
        preset_name: impl Into<String>,
    ) -> Result<Self> {
        if !(width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite()) {
            return Err(domain(format!("room size must be positive, got {width}×{height}")));
        }
        let obstacles: Vec<Polygon> = obstacles.into_iter().map(Polygon::to_clockwise).collect();
        let (hw, hh) = (width / 2.0, height / 2.0);
        for (i, ob) in obstacles.iter().enumerate() {
            if ob.vertices().iter().any(|p| p.x.abs() >= hw || p.y.abs() >= hh) {
                return Err(domain(format!("obstacle {i} is not strictly inside the room")));
            }
        }
        for i in 0..obstacles.len() {
            for j in i + 1..obstacles.len() {
                if polygons_overlap(&obstacles[i], &obstacles[j]) {
                    return Err(domain(format!("obstacles {i} and {j} overlap")));
                }
            }
        }
        let mut space = Self {
            width,
            height,
            obstacles,
            preset_name: preset_name.into(),
            edges: Vec::new(),
        };
        space.rebuild_edges();
        if !space.is_connected(0.1) {
            return Err(domain("free space is not connected"));
        }
        Ok(space)
    }

    pub fn empty(width: f64, height: f64) -> Result<Self> {
        Self::new(width, height, Vec::new(), Preset::Empty.name())
    }

    fn rebuild_edges(&mut self) {
        let (hw, hh) = (self.width / 2.0, self.height / 2.0);
        let corners = [
            Point2::new(-hw, -hh),
            Point2::new(hw, -hh),
            Point2::new(hw, hh),
            Point2::new(-hw, hh),
        ];
        self.edges = (0..4)
            .map(|i| Segment::new(corners[i], corners[(i + 1) % 4]))
            .chain(self.obstacles.iter().flat_map(|o| o.edges()))
            .collect();
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn obstacles(&self) -> &[Polygon] {
        &self.obstacles
    }

    pub fn preset_name(&self) -> &str {
        &self.preset_name
    }

    pub fn center(&self) -> Point2 {
        Point2::ORIGIN
    }

    /// Boundary edges first (4 of them), then every obstacle edge.
    pub fn edges(&self) -> &[Segment] {
        &self.edges
    }

    pub fn diameter(&self) -> f64 {
        self.width.hypot(self.height)
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    pub fn obstacle_area(&self) -> f64 {
        self.obstacles.iter().map(Polygon::area).sum()
    }

    pub fn inside_boundary(&self, p: Point2) -> bool {
        p.x.abs() < self.width / 2.0 && p.y.abs() < self.height / 2.0
    }

    /// Strictly inside the room and outside every obstacle.
    pub fn contains_free(&self, p: Point2) -> bool {
        p.is_finite() && self.inside_boundary(p) && !self.obstacles.iter().any(|o| o.contains(p))
    }

    /// Distance to the nearest wall or obstacle edge.
    pub fn clearance(&self, p: Point2) -> f64 {
        self.edges
            .iter()
            .map(|e| e.distance(p))
            .fold(f64::INFINITY, f64::min)
    }

    /// Uniformly scaled copy (used by scale-invariance checks).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let obstacles = self
            .obstacles
            .iter()
            .map(|o| o.transformed(|p| p * factor))
            .collect();
        Self::new(
            self.width * factor,
            self.height * factor,
            obstacles,
            self.preset_name.clone(),
        )
    }

    /// Copy rotated by `phi` about the room center. Only defined for rooms
    /// whose boundary maps onto itself (square rooms and quarter turns);
    /// obstacles are rotated freely and the boundary is kept.
    pub fn rotated_obstacles(&self, phi: f64) -> Result<Self> {
        let obstacles = self
            .obstacles
            .iter()
            .map(|o| o.transformed(|p| p.rotated(phi)))
            .collect();
        Self::new(self.width, self.height, obstacles, self.preset_name.clone())
    }

    /// Grid flood fill over cells whose centers lie in free space.
    pub fn is_connected(&self, resolution: f64) -> bool {
        let nx = (self.width / resolution).floor() as usize;
        let ny = (self.height / resolution).floor() as usize;
        if nx == 0 || ny == 0 {
            return false;
        }
        let (ox, oy) = (
            -(nx as f64) * resolution / 2.0,
            -(ny as f64) * resolution / 2.0,
        );
        let cell = |i: usize, j: usize| {
            Point2::new(
                ox + (i as f64 + 0.5) * resolution,
                oy + (j as f64 + 0.5) * resolution,
            )
        };
        let free: Vec<bool> = (0..nx * ny)
            .map(|k| self.contains_free(cell(k % nx, k / nx)))
            .collect();
        let total = free.iter().filter(|&&f| f).count();
        let Some(start) = free.iter().position(|&f| f) else {
            return false;
        };
        let mut seen = vec![false; nx * ny];
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        let mut reached = 0;
        while let Some(k) = queue.pop_front() {
            reached += 1;
            let (i, j) = (k % nx, k / nx);
            let mut visit = |ii: usize, jj: usize| {
                let kk = jj * nx + ii;
                if free[kk] && !seen[kk] {
                    seen[kk] = true;
                    queue.push_back(kk);
                }
            };
            if i > 0 {
                visit(i - 1, j);
            }
            if i + 1 < nx {
                visit(i + 1, j);
            }
            if j > 0 {
                visit(i, j - 1);
            }
            if j + 1 < ny {
                visit(i, j + 1);
            }
        }
        reached == total
    }
}

fn polygons_overlap(a: &Polygon, b: &Polygon) -> bool {
    a.edges().any(|ea| b.edges().any(|eb| ea.intersects(&eb)))
        || a.vertices().iter().any(|&p| b.contains(p))
        || b.vertices().iter().any(|&p| a.contains(p))
}

fn rect_frac(w: f64, h: f64, x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Polygon> {
    Polygon::rectangle(Point2::new(x0 * w, y0 * h), Point2::new(x1 * w, y1 * h))
}

fn square_frac(w: f64, h: f64, cx: f64, cy: f64, side: f64) -> Result<Polygon> {
    let s = side / 2.0;
    rect_frac(w, h, cx - s, cy - s, cx + s, cy + s)
}

/// The four obstacles of the `complex` layout, in order: top-left
/// rectangle, bottom-left bar, bottom-right triangle, top-right disc.
pub fn complex_obstacles(w: f64, h: f64) -> Result<Vec<Polygon>> {
    let m = w.min(h);
    Ok(vec![
        rect_frac(w, h, -0.35, 0.12, -0.15, 0.32)?,
        rect_frac(w, h, -0.35, -0.30, -0.10, -0.22)?,
        Polygon::new(vec![
            Point2::new(0.12 * w, -0.35 * h),
            Point2::new(0.35 * w, -0.35 * h),
            Point2::new(0.24 * w, -0.14 * h),
        ])?,
        Polygon::regular(Point2::new(0.25 * w, 0.25 * h), 0.08 * m, 16)?,
    ])
}

/// Builds the named obstacle layout scaled to a `width × height` room.
pub fn build_preset(preset: Preset, width: f64, height: f64) -> Result<PhysicalSpace> {
    if !(width > 0.0 && height > 0.0) {
        return Err(domain(format!("room size must be positive, got {width}×{height}")));
    }
    let (w, h) = (width, height);
    let obstacles = match preset {
        Preset::Empty => Vec::new(),
        Preset::Simple => vec![rect_frac(w, h, -0.20, 0.10, 0.20, 0.30)?],
        Preset::Circle => vec![Polygon::regular(Point2::ORIGIN, 0.15 * w.min(h), 32)?],
        Preset::FourSquares => {
            let mut v = Vec::with_capacity(4);
            for (sx, sy) in [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)] {
                v.push(square_frac(w, h, 0.25 * sx, 0.25 * sy, 0.12)?);
            }
            v
        }
        Preset::Complex => complex_obstacles(w, h)?,
        Preset::More => {
            let mut v = complex_obstacles(w, h)?;
            v.push(square_frac(w, h, 0.0, 0.0, 0.10)?);
            v
        }
        Preset::Less => {
            let mut v = complex_obstacles(w, h)?;
            v.pop();
            v
        }
    };
    PhysicalSpace::new(width, height, obstacles, preset.name())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VirtualSpace {
    pub width: f64,
    pub height: f64,
}

impl VirtualSpace {
    pub fn new(width: f64, height: f64) -> Result<Self> {
        if !(width > 0.0 && height > 0.0 && width.is_finite() && height.is_finite()) {
            return Err(domain(format!(
                "virtual space must have positive size, got {width}×{height}"
            )));
        }
        Ok(Self { width, height })
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x.abs() <= self.width / 2.0 && p.y.abs() <= self.height / 2.0
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R, fraction: f64) -> Point2 {
        let hw = self.width * fraction / 2.0;
        let hh = self.height * fraction / 2.0;
        Point2::new(rng.random_range(-hw..=hw), rng.random_range(-hh..=hh))
    }
}

impl Default for VirtualSpace {
    fn default() -> Self {
        Self {
            width: 100.0,
            height: 100.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SteeringKind {
    #[serde(rename = "s2c", alias = "S2C")]
    S2C,
    #[serde(rename = "apf", alias = "APF")]
    Apf,
    #[serde(rename = "ns", alias = "NS")]
    Ns,
}

impl SteeringKind {
    pub const ALL: [SteeringKind; 3] = [SteeringKind::S2C, SteeringKind::Apf, SteeringKind::Ns];

    pub fn name(self) -> &'static str {
        match self {
            SteeringKind::S2C => "S2C",
            SteeringKind::Apf => "APF",
            SteeringKind::Ns => "NS",
        }
    }

    /// Baseline reset controller paired with this steering algorithm in
    /// the evaluation tables.
    pub fn baseline_reset(self) -> ResetMode {
        match self {
            SteeringKind::Apf => ResetMode::R2G,
            SteeringKind::S2C | SteeringKind::Ns => ResetMode::R2C,
        }
    }
}

impl fmt::Display for SteeringKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SteeringKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "s2c" => Ok(Self::S2C),
            "apf" => Ok(Self::Apf),
            "ns" => Ok(Self::Ns),
            _ => Err(Error::Config(format!("unknown steering algorithm '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ResetMode {
    #[serde(rename = "r2c", alias = "R2C")]
    R2C,
    #[serde(rename = "r2g", alias = "R2G")]
    R2G,
    #[serde(rename = "mrc_greedy", alias = "MRC_GREEDY")]
    MrcGreedy,
    #[serde(rename = "mrc_policy", alias = "MRC_POLICY")]
    MrcPolicy,
}

impl ResetMode {
    pub fn name(self) -> &'static str {
        match self {
            ResetMode::R2C => "R2C",
            ResetMode::R2G => "R2G",
            ResetMode::MrcGreedy => "MRC_GREEDY",
            ResetMode::MrcPolicy => "MRC_POLICY",
        }
    }

    pub fn is_mrc(self) -> bool {
        matches!(self, ResetMode::MrcGreedy | ResetMode::MrcPolicy)
    }
}

impl fmt::Display for ResetMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ResetMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "r2c" => Ok(Self::R2C),
            "r2g" => Ok(Self::R2G),
            "mrc_greedy" | "greedy" => Ok(Self::MrcGreedy),
            "mrc_policy" | "mrc" | "policy" => Ok(Self::MrcPolicy),
            _ => Err(Error::Config(format!("unknown reset controller '{s}'"))),
        }
    }
}

/// Everything needed to run one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub space: PhysicalSpace,
    pub vspace: VirtualSpace,
    pub n_users: usize,
    pub steering: SteeringKind,
    pub reset: ResetMode,
    /// Waypoints each user walks before the episode ends.
    pub path_waypoints: usize,
    pub seed: u64,
    pub params: SimParams,
}

impl ScenarioConfig {
    pub fn new(
        space: PhysicalSpace,
        n_users: usize,
        steering: SteeringKind,
        reset: ResetMode,
    ) -> Self {
        Self {
            space,
            vspace: VirtualSpace::default(),
            n_users,
            steering,
            reset,
            path_waypoints: 200,
            seed: 0,
            params: SimParams::default(),
        }
    }

    pub fn with_waypoints(mut self, n: usize) -> Self {
        self.path_waypoints = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_users == 0 {
            return Err(Error::Config("at least one user is required".into()));
        }
        if self.path_waypoints == 0 {
            return Err(Error::Config("path_waypoints must be positive".into()));
        }
        // Crude packing bound: every user needs a disc of radius
        // min_separation/2 in the free area.
        let sep = self.params.spawn.min_separation;
        let need = self.n_users as f64 * std::f64::consts::PI * (sep / 2.0).powi(2);
        if need >= self.space.area() - self.space.obstacle_area() {
            return Err(Error::Infeasible(format!(
                "{} users do not fit in the free area",
                self.n_users
            )));
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        ScenarioFile::parse(&text)?.into_config()
    }
}

/// On-disk scenario document (TOML). Field names follow the dotted keys
/// `space.preset`, `space.width`, `space.height`, `vspace.width`,
/// `vspace.height`, `users.count`, `steering`, `reset`,
/// `episode.path_waypoints` and `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub steering: SteeringKind,
    pub reset: ResetMode,
    #[serde(default)]
    pub seed: u64,
    pub space: SpaceSection,
    #[serde(default)]
    pub vspace: VirtualSpace,
    pub users: UsersSection,
    pub episode: EpisodeSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceSection {
    pub preset: Preset,
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UsersSection {
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSection {
    pub path_waypoints: usize,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes to TOML")
    }

    pub fn into_config(self) -> Result<ScenarioConfig> {
        let space = build_preset(self.space.preset, self.space.width, self.space.height)?;
        let vspace = VirtualSpace::new(self.vspace.width, self.vspace.height)?;
        let cfg = ScenarioConfig {
            space,
            vspace,
            n_users: self.users.count,
            steering: self.steering,
            reset: self.reset,
            path_waypoints: self.episode.path_waypoints,
            seed: self.seed,
            params: SimParams::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// A pose mapped into the `[-1, 1]` box of the physical room.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizedPose {
    pub u: [f64; 2],
    pub theta: f64,
}

impl NormalizedPose {
    pub fn as_array(&self) -> [f64; 3] {
        [self.u[0], self.u[1], self.theta]
    }
}

pub fn normalize_pose(space: &PhysicalSpace, position: Point2, heading: f64) -> Result<NormalizedPose> {
    let (hw, hh) = (space.width / 2.0, space.height / 2.0);
    if !(position.x.abs() <= hw && position.y.abs() <= hh) || !heading.is_finite() {
        return Err(domain(format!(
            "pose ({:.4}, {:.4}) lies outside the room",
            position.x, position.y
        )));
    }
    Ok(NormalizedPose {
        u: [position.x / hw, position.y / hh],
        theta: wrap_angle(heading) / std::f64::consts::PI,
    })
}

pub fn denormalize_pose(space: &PhysicalSpace, pose: &NormalizedPose) -> (Point2, f64) {
    (
        Point2::new(pose.u[0] * space.width / 2.0, pose.u[1] * space.height / 2.0),
        pose.theta * std::f64::consts::PI,
    )
}

/// Places `n_users` users uniformly over free space by rejection sampling.
///
/// Users keep `spawn.min_clearance` from every edge and `spawn.min_separation`
/// from each other. Virtual positions are drawn from the central half of the
/// virtual space. The returned users have `waypoint == virt_pos`, meaning no
/// waypoint has been assigned yet.
pub fn spawn_users<R: Rng + ?Sized>(config: &ScenarioConfig, rng: &mut R) -> Result<Vec<UserState>> {
    config.validate()?;
    let space = &config.space;
    let spawn = config.params.spawn;
    let (hw, hh) = (space.width() / 2.0, space.height() / 2.0);
    let mut users: Vec<UserState> = Vec::with_capacity(config.n_users);
    let mut attempts = 0usize;
    while users.len() < config.n_users {
        attempts += 1;
        if attempts > spawn.max_attempts {
            return Err(Error::Infeasible(format!(
                "placed {} of {} users after {} attempts",
                users.len(),
                config.n_users,
                spawn.max_attempts
            )));
        }
        let p = Point2::new(rng.random_range(-hw..hw), rng.random_range(-hh..hh));
        if !space.contains_free(p) || space.clearance(p) < spawn.min_clearance {
            continue;
        }
        if users.iter().any(|u| u.phys_pos.distance(p) < spawn.min_separation) {
            continue;
        }
        let phys_heading = wrap_angle(rng.random_range(-std::f64::consts::PI..std::f64::consts::PI));
        let virt_pos = config.vspace.sample_uniform(rng, 0.5);
        let virt_heading = wrap_angle(rng.random_range(-std::f64::consts::PI..std::f64::consts::PI));
        users.push(UserState {
            index: users.len(),
            phys_pos: p,
            phys_heading,
            virt_pos,
            virt_heading,
            dist_since_reset: 0.0,
            waypoint: virt_pos,
        });
    }
    Ok(users)
}
