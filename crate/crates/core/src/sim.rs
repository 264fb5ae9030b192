//! Kinematic simulation of the tour-guide robot and its lab.
//!
//! Config files are `|`-separated, one record per line, `#` comments:
//!
//! * destinations: `id|display name|x|y|description`
//! * items: `id|display name|location id`
//! * topics: `name|body`

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::world::{canonicalize, ActionRegistry, ActionSpec, BehaviorId, Predicate, WorldState};

pub const ARRIVAL_THRESHOLD_M: f64 = 0.05;
pub const DEFAULT_SPEED_MPS: f64 = 1.0;
/// Simulated duration of a pickup or hand-over.
pub const MANIPULATION_MS: u64 = 1000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: expected {expected} `|`-separated fields, found {found}")]
    FieldCount {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: duplicate id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: `{value}` is not a finite number")]
    BadCoordinate { line: usize, value: String },
    #[error("line {line}: empty {field}")]
    EmptyField { line: usize, field: &'static str },
    #[error("line {line}: unknown location `{location}`")]
    UnknownLocation { line: usize, location: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64) -> Self {
        Pose { x, y }
    }

    pub fn distance(&self, other: &Pose) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Destination {
    pub id: String,
    pub display_name: String,
    pub pose: Pose,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Item {
    pub id: String,
    pub display_name: String,
    pub location: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topic {
    pub name: String,
    pub body: String,
}

fn records(content: &str, expected: usize) -> impl Iterator<Item = Result<(usize, Vec<&str>), ConfigError>> {
    content.lines().enumerate().filter_map(move |(i, raw)| {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            return None;
        }
        let fields: Vec<&str> = raw.split('|').map(str::trim).collect();
        if fields.len() != expected {
            return Some(Err(ConfigError::FieldCount {
                line,
                expected,
                found: fields.len(),
            }));
        }
        Some(Ok((line, fields)))
    })
}

fn coordinate(line: usize, s: &str) -> Result<f64, ConfigError> {
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| ConfigError::BadCoordinate {
            line,
            value: s.to_string(),
        })
}

fn nonempty(line: usize, field: &'static str, s: &str) -> Result<(), ConfigError> {
    if s.is_empty() {
        Err(ConfigError::EmptyField { line, field })
    } else {
        Ok(())
    }
}

pub fn load_destinations(content: &str) -> Result<Vec<Destination>, ConfigError> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for rec in records(content, 5) {
        let (line, f) = rec?;
        let id = canonicalize(f[0]);
        nonempty(line, "id", &id)?;
        nonempty(line, "display name", f[1])?;
        let pose = Pose::new(coordinate(line, f[2])?, coordinate(line, f[3])?);
        nonempty(line, "description", f[4])?;
        if !seen.insert(id.clone()) {
            return Err(ConfigError::DuplicateId { line, id });
        }
        out.push(Destination {
            id,
            display_name: f[1].to_string(),
            pose,
            description: f[4].to_string(),
        });
    }
    Ok(out)
}

pub fn load_items(content: &str, destinations: &[Destination]) -> Result<Vec<Item>, ConfigError> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for rec in records(content, 3) {
        let (line, f) = rec?;
        let id = canonicalize(f[0]);
        nonempty(line, "id", &id)?;
        nonempty(line, "display name", f[1])?;
        let location = canonicalize(f[2]);
        if !destinations.iter().any(|d| d.id == location) {
            return Err(ConfigError::UnknownLocation { line, location });
        }
        if !seen.insert(id.clone()) {
            return Err(ConfigError::DuplicateId { line, id });
        }
        out.push(Item {
            id,
            display_name: f[1].to_string(),
            location,
        });
    }
    Ok(out)
}

pub fn load_topics(content: &str) -> Result<Vec<Topic>, ConfigError> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for rec in records(content, 2) {
        let (line, f) = rec?;
        nonempty(line, "name", f[0])?;
        nonempty(line, "body", f[1])?;
        if !seen.insert(f[0].to_lowercase()) {
            return Err(ConfigError::DuplicateId {
                line,
                id: f[0].to_string(),
            });
        }
        out.push(Topic {
            name: f[0].to_string(),
            body: f[1].to_string(),
        });
    }
    Ok(out)
}

/// What a behavior identifier asks the simulator to do.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Behavior {
    DriveTo(String),
    ReturnToUser(String),
    Pickup(String),
    HandOver(String),
}

impl Behavior {
    pub fn id(&self) -> BehaviorId {
        BehaviorId::new(match self {
            Behavior::DriveTo(d) => format!("drive:{d}"),
            Behavior::ReturnToUser(d) => format!("return:{d}"),
            Behavior::Pickup(i) => format!("pickup:{i}"),
            Behavior::HandOver(i) => format!("handover:{i}"),
        })
    }

    pub fn parse(id: &BehaviorId) -> Option<Behavior> {
        let (kind, arg) = id.as_str().split_once(':')?;
        let arg = arg.to_string();
        match kind {
            "drive" => Some(Behavior::DriveTo(arg)),
            "return" => Some(Behavior::ReturnToUser(arg)),
            "pickup" => Some(Behavior::Pickup(arg)),
            "handover" => Some(Behavior::HandOver(arg)),
            _ => None,
        }
    }
}

pub const RETURN_TO_USER: &str = "Return to User";

/// Drives (file order), pickups, hand-overs, then `Return to User`.
pub fn build_registry(
    destinations: &[Destination],
    items: &[Item],
    user_location: &str,
) -> Result<ActionRegistry, crate::world::WorldError> {
    let mut reg = ActionRegistry::new();
    for d in destinations {
        reg.insert(
            ActionSpec::builder(&format!("Drive to {}", d.display_name), Behavior::DriveTo(d.id.clone()).id())
                .adds(&format!("robot_at:{}", d.id))
                .deletes("robot_at:*")
                .build()?,
        )?;
    }
    for it in items {
        reg.insert(
            ActionSpec::builder(&format!("Pickup {}", it.display_name), Behavior::Pickup(it.id.clone()).id())
                .requires(&format!("robot_at:{}", it.location))
                .requires("gripper_empty")
                .adds(&format!("holding:{}", it.id))
                .deletes("gripper_empty")
                .build()?,
        )?;
    }
    for it in items {
        reg.insert(
            ActionSpec::builder(&format!("Hand over {}", it.display_name), Behavior::HandOver(it.id.clone()).id())
                .requires(&format!("holding:{}", it.id))
                .requires(&format!("robot_at:{user_location}"))
                .adds("gripper_empty")
                .adds(&format!("delivered:{}", it.id))
                .deletes(&format!("holding:{}", it.id))
                .build()?,
        )?;
    }
    reg.insert(
        ActionSpec::builder(RETURN_TO_USER, Behavior::ReturnToUser(user_location.to_string()).id())
            .adds(&format!("robot_at:{user_location}"))
            .deletes("robot_at:*")
            .build()?,
    )?;
    Ok(reg)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("unknown behavior `{0}`")]
    UnknownBehavior(String),
    #[error("unknown destination `{0}`")]
    UnknownDestination(String),
    #[error("item `{0}` is not within reach")]
    ItemNotHere(String),
    #[error("gripper already holds `{0}`")]
    GripperFull(String),
    #[error("gripper does not hold `{0}`")]
    NotHolding(String),
    #[error("user location `{0}` is not a destination")]
    BadUserLocation(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "activity", rename_all = "snake_case")]
pub enum Activity {
    Idle,
    Driving { target: String },
    Manipulating { item: String, pickup: bool, remaining_ms: u64 },
}

/// Reported when the running activity finishes during a step.
#[derive(Debug, Clone, PartialEq)]
pub struct Finished;

pub const GRIPPER: &str = "gripper";

#[derive(Debug, Clone, PartialEq)]
pub struct SimWorld {
    robot_pose: Pose,
    robot_speed: f64,
    destinations: Vec<Destination>,
    items: BTreeMap<String, String>,
    gripper: Option<String>,
    user_location: String,
    clock_ms: u64,
    activity: Activity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSnapshot {
    pub robot_pose: Pose,
    pub gripper: Option<String>,
    pub items: BTreeMap<String, String>,
    pub clock_ms: u64,
    pub activity: Activity,
}

impl SimWorld {
    /// The robot starts parked at the user's location with an empty gripper.
    pub fn new(destinations: Vec<Destination>, items: &[Item], user_location: &str) -> Result<Self, SimError> {
        let start = destinations
            .iter()
            .find(|d| d.id == user_location)
            .ok_or_else(|| SimError::BadUserLocation(user_location.to_string()))?
            .pose;
        Ok(SimWorld {
            robot_pose: start,
            robot_speed: DEFAULT_SPEED_MPS,
            destinations,
            items: items.iter().map(|i| (i.id.clone(), i.location.clone())).collect(),
            gripper: None,
            user_location: user_location.to_string(),
            clock_ms: 0,
            activity: Activity::Idle,
        })
    }

    pub fn with_speed(mut self, mps: f64) -> Self {
        self.robot_speed = mps;
        self
    }

    pub fn pose(&self) -> Pose {
        self.robot_pose
    }

    pub fn clock_ms(&self) -> u64 {
        self.clock_ms
    }

    pub fn gripper(&self) -> Option<&str> {
        self.gripper.as_deref()
    }

    pub fn item_location(&self, item: &str) -> Option<&str> {
        self.items.get(item).map(String::as_str)
    }

    pub fn activity(&self) -> &Activity {
        &self.activity
    }

    pub fn destinations(&self) -> &[Destination] {
        &self.destinations
    }

    pub fn destination(&self, id: &str) -> Option<&Destination> {
        self.destinations.iter().find(|d| d.id == id)
    }

    pub fn user_location(&self) -> &str {
        &self.user_location
    }

    /// Destination the robot is parked at, if any.
    pub fn parked_at(&self) -> Option<&Destination> {
        self.destinations
            .iter()
            .find(|d| d.pose.distance(&self.robot_pose) < ARRIVAL_THRESHOLD_M)
    }

    /// Facts consistent with the metric state, used to seed the executor.
    pub fn symbolic_state(&self) -> WorldState {
        let mut s = WorldState::new();
        let p = |a: String| Predicate::new(&a).expect("nonempty atom");
        if let Some(d) = self.parked_at() {
            s.insert(p(format!("robot_at:{}", d.id)));
        }
        match &self.gripper {
            Some(item) => s.insert(p(format!("holding:{item}"))),
            None => s.insert(p("gripper_empty".into())),
        }
        s
    }

    pub fn snapshot(&self) -> SimSnapshot {
        SimSnapshot {
            robot_pose: self.robot_pose,
            gripper: self.gripper.clone(),
            items: self.items.clone(),
            clock_ms: self.clock_ms,
            activity: self.activity.clone(),
        }
    }

    pub fn begin(&mut self, behavior: &BehaviorId) -> Result<(), SimError> {
        let b = Behavior::parse(behavior).ok_or_else(|| SimError::UnknownBehavior(behavior.to_string()))?;
        self.activity = match b {
            Behavior::DriveTo(target) | Behavior::ReturnToUser(target) => {
                if self.destination(&target).is_none() {
                    return Err(SimError::UnknownDestination(target));
                }
                Activity::Driving { target }
            }
            Behavior::Pickup(item) => {
                if let Some(held) = &self.gripper {
                    return Err(SimError::GripperFull(held.clone()));
                }
                let here = self.parked_at().map(|d| d.id.as_str());
                if self.items.get(&item).map(String::as_str) != here || here.is_none() {
                    return Err(SimError::ItemNotHere(item));
                }
                Activity::Manipulating {
                    item,
                    pickup: true,
                    remaining_ms: MANIPULATION_MS,
                }
            }
            Behavior::HandOver(item) => {
                if self.gripper.as_deref() != Some(item.as_str()) {
                    return Err(SimError::NotHolding(item));
                }
                Activity::Manipulating {
                    item,
                    pickup: false,
                    remaining_ms: MANIPULATION_MS,
                }
            }
        };
        Ok(())
    }

    /// Stops the current activity where it is. A half-finished drive keeps
    /// its interpolated pose.
    pub fn halt(&mut self) {
        self.activity = Activity::Idle;
    }

    pub fn step(&mut self, dt_ms: u64) -> Option<Finished> {
        self.clock_ms += dt_ms;
        match &mut self.activity {
            Activity::Idle => None,
            Activity::Driving { target } => {
                let goal = self
                    .destinations
                    .iter()
                    .find(|d| &d.id == target)
                    .expect("validated in begin")
                    .pose;
                let dist = self.robot_pose.distance(&goal);
                let travel = self.robot_speed * dt_ms as f64 / 1000.0;
                if travel >= dist {
                    self.robot_pose = goal;
                } else {
                    let f = travel / dist;
                    self.robot_pose = Pose::new(
                        self.robot_pose.x + (goal.x - self.robot_pose.x) * f,
                        self.robot_pose.y + (goal.y - self.robot_pose.y) * f,
                    );
                }
                if self.robot_pose.distance(&goal) < ARRIVAL_THRESHOLD_M {
                    self.robot_pose = goal;
                    self.activity = Activity::Idle;
                    Some(Finished)
                } else {
                    None
                }
            }
            Activity::Manipulating {
                item,
                pickup,
                remaining_ms,
            } => {
                *remaining_ms = remaining_ms.saturating_sub(dt_ms);
                if *remaining_ms > 0 {
                    return None;
                }
                let item = item.clone();
                if *pickup {
                    self.gripper = Some(item.clone());
                    self.items.insert(item, GRIPPER.to_string());
                } else {
                    self.gripper = None;
                    self.items.insert(item, self.user_location.clone());
                }
                self.activity = Activity::Idle;
                Some(Finished)
            }
        }
    }
}

/// Everything a session needs to know about the environment.
#[derive(Debug, Clone, PartialEq)]
pub struct Lab {
    pub destinations: Vec<Destination>,
    pub items: Vec<Item>,
    pub topics: Vec<Topic>,
    pub user_location: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabError {
    #[error("destinations: {0}")]
    Destinations(ConfigError),
    #[error("items: {0}")]
    Items(ConfigError),
    #[error("topics: {0}")]
    Topics(ConfigError),
    #[error("no destinations configured")]
    NoDestinations,
    #[error("user location `{0}` is not a destination")]
    UnknownUserLocation(String),
    #[error(transparent)]
    Registry(#[from] crate::world::WorldError),
}

impl Lab {
    /// `user_location` defaults to the first destination.
    pub fn parse(
        destinations: &str,
        items: &str,
        topics: &str,
        user_location: Option<&str>,
    ) -> Result<Self, LabError> {
        let destinations = load_destinations(destinations).map_err(LabError::Destinations)?;
        let items = load_items(items, &destinations).map_err(LabError::Items)?;
        let topics = load_topics(topics).map_err(LabError::Topics)?;
        let first = destinations.first().ok_or(LabError::NoDestinations)?;
        let user_location = match user_location {
            Some(u) => canonicalize(u),
            None => first.id.clone(),
        };
        if !destinations.iter().any(|d| d.id == user_location) {
            return Err(LabError::UnknownUserLocation(user_location));
        }
        Ok(Lab {
            destinations,
            items,
            topics,
            user_location,
        })
    }

    pub fn registry(&self) -> Result<ActionRegistry, LabError> {
        Ok(build_registry(&self.destinations, &self.items, &self.user_location)?)
    }

    pub fn sim(&self) -> SimWorld {
        SimWorld::new(self.destinations.clone(), &self.items, &self.user_location)
            .expect("user location validated")
    }
}
