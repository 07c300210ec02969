//! Ground-truth routine generation and synthetic sensor streams.
//!
//! Each user gets a weekly schedule over a small set of places (home,
//! faculty, restaurant, sports hall, a friend's home, shops, a park) with
//! per-day deviations, and a sensor signature per place that stays tight
//! across days so the learner has something to latch onto. Weekdays and
//! weekends differ structurally, and the label distribution is dominated by
//! the home category.

use crate::clock::{SimTime, SLOTS_PER_DAY, SLOT_MINUTES};
use crate::error::{Error, Result};
use crate::sensors::{ActivityKind, BtDevice, SensorData, SensorEvent, SensorKind};
use crate::taxonomy::{Label, Subcategory};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Per-sensor probability that a window's events are dropped entirely.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct MissingnessConfig {
    pub accelerometer: f64,
    pub activities: f64,
    pub step_detector: f64,
    pub orientation: f64,
    pub location: f64,
    pub magnetic_field: f64,
    pub proximity: f64,
    pub bluetooth: f64,
    pub wifi_event: f64,
    pub wifi_networks: f64,
    pub battery_charge: f64,
    pub battery_level: f64,
}

impl MissingnessConfig {
    /// A spread shaped like the in-the-wild distribution: Bluetooth-derived
    /// features worst, the software sensors most reliable.
    pub fn field_like() -> Self {
        MissingnessConfig {
            accelerometer: 0.08,
            activities: 0.12,
            step_detector: 0.12,
            orientation: 0.18,
            location: 0.15,
            magnetic_field: 0.20,
            proximity: 0.25,
            bluetooth: 0.40,
            wifi_event: 0.10,
            wifi_networks: 0.18,
            battery_charge: 0.05,
            battery_level: 0.05,
        }
    }

    pub fn uniform(rate: f64) -> Self {
        MissingnessConfig {
            accelerometer: rate,
            activities: rate,
            step_detector: rate,
            orientation: rate,
            location: rate,
            magnetic_field: rate,
            proximity: rate,
            bluetooth: rate,
            wifi_event: rate,
            wifi_networks: rate,
            battery_charge: rate,
            battery_level: rate,
        }
    }

    pub fn rate(&self, kind: SensorKind) -> f64 {
        match kind {
            SensorKind::Accelerometer => self.accelerometer,
            SensorKind::Activities => self.activities,
            SensorKind::StepDetector => self.step_detector,
            SensorKind::Orientation => self.orientation,
            SensorKind::Location => self.location,
            SensorKind::MagneticField => self.magnetic_field,
            SensorKind::Proximity => self.proximity,
            SensorKind::Bluetooth => self.bluetooth,
            SensorKind::WifiEvent => self.wifi_event,
            SensorKind::WifiNetworks => self.wifi_networks,
            SensorKind::BatteryCharge => self.battery_charge,
            SensorKind::BatteryLevel => self.battery_level,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for kind in SensorKind::ALL {
            let r = self.rate(kind);
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::Config(format!("missingness rate {r} for {kind:?}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldConfig {
    pub days: u64,
    /// Probability that a day deviates from the weekly template.
    pub deviation_rate: f64,
    /// GPS scatter around a place anchor, meters.
    pub gps_scatter_m: f64,
    /// Whole-window sensor blackout probability (device off / no upload).
    pub device_off_rate: f64,
    /// Scale on the day-to-day sensor noise around each place signature;
    /// 1.0 keeps same-context windows tight, larger values blur contexts.
    pub noise_scale: f64,
    pub missingness: MissingnessConfig,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            days: 28,
            deviation_rate: 0.08,
            gps_scatter_m: 5.0,
            device_off_rate: 0.02,
            noise_scale: 1.0,
            missingness: MissingnessConfig::default(),
        }
    }
}

impl WorldConfig {
    pub fn validate(&self) -> Result<()> {
        if self.days == 0 {
            return Err(Error::Config("world needs at least one day".into()));
        }
        if !(0.0..=1.0).contains(&self.deviation_rate)
            || !(0.0..=1.0).contains(&self.device_off_rate)
        {
            return Err(Error::Config("rates must be in [0,1]".into()));
        }
        if !(self.gps_scatter_m >= 0.0) {
            return Err(Error::Config("gps_scatter_m must be >= 0".into()));
        }
        if !(self.noise_scale >= 0.0) {
            return Err(Error::Config("noise_scale must be >= 0".into()));
        }
        self.missingness.validate()
    }
}

/// Place palette indices.
const HOME: usize = 0;
const FACULTY: usize = 1;
const RESTAURANT: usize = 2;
const SPORTS: usize = 3;
const FRIEND: usize = 4;
const SHOP: usize = 5;
const PARK: usize = 6;

#[derive(Debug, Clone)]
struct Place {
    sub: Subcategory,
    lat: f64,
    lon: f64,
    alt: f64,
    wifi_nets: f64,
    /// Network id when this place offers a connection the user joins.
    own_network: Option<String>,
    bt_count: f64,
    bt_rssi: f64,
    /// Spacing of the per-device RSSI ladder; drives a stable RSSI variance.
    bt_spacing: f64,
    /// Resting orientation habit at this place.
    azimuth: f64,
    pitch: f64,
    roll: f64,
    /// Orientation wobble amplitude; drives a stable magnitude variance.
    orient_spread: f64,
    magnetic: [f64; 3],
    /// Relative field inhomogeneity; drives a stable magnitude variance.
    mag_rel: f64,
    /// Steps per window while here.
    steps: f64,
}

/// What the user does in one 30-minute slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SlotPlan {
    At(usize),
    Travel { from: usize, to: usize },
}

/// One user's generated world: truth per slot, the routine's modal label
/// per slot, and the raw sensor stream.
#[derive(Debug, Clone)]
pub struct UserWorld {
    pub user_id: String,
    pub days: u64,
    /// Ground truth label per 30-minute slot.
    pub truth: Vec<Label>,
    /// The weekly template's label per slot (what the routine says).
    pub modal: Vec<Label>,
    pub events: Vec<SensorEvent>,
}

impl UserWorld {
    pub fn slots(&self) -> u64 {
        self.days * SLOTS_PER_DAY
    }
}

/// RNG stream ids per concern, so methods sharing a world see identical
/// draws where they must (and annotator streams stay apart).
mod streams {
    pub const ROUTINE: u64 = 0;
    pub const DEVIATION: u64 = 1;
    pub const SENSOR: u64 = 2;
    pub const MISSING: u64 = 3;
    pub const DIARY: u64 = 4;
    pub const LATENCY: u64 = 5;
    pub const CONTRADICTION: u64 = 6;
    pub const EVALUATION: u64 = 7;
    pub const STREAMS_PER_USER: u64 = 8;
}

/// Independent RNG for one (seed, user, purpose) triple.
pub fn user_rng(seed: u64, user_idx: u32, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(user_idx as u64 * streams::STREAMS_PER_USER + purpose);
    rng
}

pub use streams::{CONTRADICTION, DEVIATION, DIARY, EVALUATION, LATENCY};

fn make_places(user_idx: u32, rng: &mut ChaCha8Rng) -> Vec<Place> {
    let u = user_idx as f64;
    // homes spread over a residential grid; shared city anchors elsewhere
    let home_lat = 45.030 + 0.0020 * (user_idx % 7) as f64 + rng.gen_range(-2e-4..2e-4);
    let home_lon = 8.980 + 0.0025 * (user_idx / 7 % 7) as f64 + rng.gen_range(-2e-4..2e-4);
    let jitter = |rng: &mut ChaCha8Rng| rng.gen_range(-1e-4..1e-4);
    let mag = |rng: &mut ChaCha8Rng| {
        [
            20.0 + rng.gen_range(-15.0..15.0),
            -10.0 + rng.gen_range(-15.0..15.0),
            40.0 + rng.gen_range(-10.0..10.0),
        ]
    };
    vec![
        Place {
            sub: Subcategory::MainHome,
            lat: home_lat,
            lon: home_lon,
            alt: 200.0 + (user_idx % 5) as f64 * 8.0,
            wifi_nets: 6.0 + (user_idx % 3) as f64,
            own_network: Some(format!("net_home_{user_idx}")),
            bt_count: 2.0,
            bt_rssi: -55.0,
            bt_spacing: 1.0,
            azimuth: 40.0 + u % 60.0,
            pitch: 35.0,
            roll: -12.0,
            orient_spread: 2.0,
            magnetic: mag(rng),
            mag_rel: 0.03,
            steps: 4.0,
        },
        Place {
            sub: Subcategory::MyFaculty,
            lat: 45.070 + jitter(rng),
            lon: 9.010 + jitter(rng),
            alt: 230.0,
            wifi_nets: 26.0,
            own_network: Some("net_campus".into()),
            bt_count: 12.0,
            bt_rssi: -70.0,
            bt_spacing: 2.5,
            azimuth: 120.0,
            pitch: 5.0,
            roll: 2.0,
            orient_spread: 6.0,
            magnetic: mag(rng),
            mag_rel: 0.10,
            steps: 6.0,
        },
        Place {
            sub: Subcategory::RestaurantCafePub,
            lat: 45.066 + jitter(rng),
            lon: 9.006 + jitter(rng),
            alt: 228.0,
            wifi_nets: 11.0,
            own_network: None,
            bt_count: 8.0,
            bt_rssi: -65.0,
            bt_spacing: 1.8,
            azimuth: 200.0,
            pitch: 18.0,
            roll: 8.0,
            orient_spread: 10.0,
            magnetic: mag(rng),
            mag_rel: 0.06,
            steps: 25.0,
        },
        Place {
            sub: Subcategory::SportsCenter,
            lat: 45.058 + jitter(rng),
            lon: 9.020 + jitter(rng),
            alt: 215.0,
            wifi_nets: 7.0,
            own_network: None,
            bt_count: 6.0,
            bt_rssi: -68.0,
            bt_spacing: 3.2,
            azimuth: 300.0,
            pitch: 70.0,
            roll: 25.0,
            orient_spread: 25.0,
            magnetic: mag(rng),
            mag_rel: 0.14,
            steps: 90.0,
        },
        Place {
            sub: Subcategory::OtherPeoplesHome,
            lat: 45.041 + 0.001 * (user_idx % 4) as f64 + jitter(rng),
            lon: 8.996 + jitter(rng),
            alt: 205.0,
            wifi_nets: 5.0,
            own_network: Some(format!("net_friend_{user_idx}")),
            bt_count: 3.0,
            bt_rssi: -58.0,
            bt_spacing: 1.3,
            azimuth: 80.0,
            pitch: 28.0,
            roll: -18.0,
            orient_spread: 4.0,
            magnetic: mag(rng),
            mag_rel: 0.045,
            steps: 5.0,
        },
        Place {
            sub: Subcategory::ShoppingCenter,
            lat: 45.052 + jitter(rng),
            lon: 9.002 + jitter(rng),
            alt: 212.0,
            wifi_nets: 14.0,
            own_network: None,
            bt_count: 10.0,
            bt_rssi: -72.0,
            bt_spacing: 2.1,
            azimuth: 250.0,
            pitch: 45.0,
            roll: 15.0,
            orient_spread: 16.0,
            magnetic: mag(rng),
            mag_rel: 0.08,
            steps: 45.0,
        },
        Place {
            sub: Subcategory::StreetSquarePark,
            lat: 45.061 + jitter(rng),
            lon: 8.992 + jitter(rng),
            alt: 208.0,
            wifi_nets: 2.0,
            own_network: None,
            bt_count: 1.0,
            bt_rssi: -75.0,
            bt_spacing: 0.6,
            azimuth: 10.0,
            pitch: 55.0,
            roll: 30.0,
            orient_spread: 20.0,
            magnetic: mag(rng),
            mag_rel: 0.015,
            steps: 55.0,
        },
    ]
}

/// Weekly schedule template plus per-user habits.
struct Routine {
    /// [day_of_week][slot] plan.
    template: Vec<Vec<SlotPlan>>,
    travel_mode: Subcategory,
    /// First slot of overnight charging.
    charge_slot: u64,
}

fn fill(plan: &mut [SlotPlan], from: usize, to: usize, p: SlotPlan) {
    for s in plan.iter_mut().take(to).skip(from) {
        *s = p;
    }
}

fn build_routine(rng: &mut ChaCha8Rng) -> Routine {
    let travel_mode = *[
        Subcategory::TravelFoot,
        Subcategory::TravelBicycle,
        Subcategory::TravelPublicTransport,
        Subcategory::TravelPublicTransport,
        Subcategory::TravelCar,
    ]
    .get(rng.gen_range(0..5))
    .unwrap();
    let wake = 14 + rng.gen_range(0..3); // 07:00–08:00
    let lunch_out = rng.gen_bool(0.7);
    let uni_end = 34 + rng.gen_range(0..3); // 17:00–18:00
    // two sports evenings per week
    let sports_days: [u64; 2] = match rng.gen_range(0..3) {
        0 => [0, 2],
        1 => [1, 3],
        _ => [1, 4],
    };
    let mut template = Vec::with_capacity(7);
    for dow in 0..7u64 {
        let mut plan = vec![SlotPlan::At(HOME); SLOTS_PER_DAY as usize];
        if dow < 5 {
            let depart = wake + 1;
            plan[depart] = SlotPlan::Travel { from: HOME, to: FACULTY };
            fill(&mut plan, depart + 1, 25, SlotPlan::At(FACULTY));
            if lunch_out {
                fill(&mut plan, 25, 27, SlotPlan::At(RESTAURANT));
            } else {
                fill(&mut plan, 25, 27, SlotPlan::At(FACULTY));
            }
            fill(&mut plan, 27, uni_end, SlotPlan::At(FACULTY));
            if sports_days.contains(&dow) {
                plan[uni_end] = SlotPlan::Travel { from: FACULTY, to: SPORTS };
                fill(&mut plan, uni_end + 1, uni_end + 4, SlotPlan::At(SPORTS));
                plan[uni_end + 4] = SlotPlan::Travel { from: SPORTS, to: HOME };
            } else {
                plan[uni_end] = SlotPlan::Travel { from: FACULTY, to: HOME };
            }
        } else if dow == 5 {
            // Saturday: shopping late morning, park mid-afternoon
            plan[22] = SlotPlan::Travel { from: HOME, to: SHOP };
            fill(&mut plan, 23, 26, SlotPlan::At(SHOP));
            plan[26] = SlotPlan::Travel { from: SHOP, to: HOME };
            plan[30] = SlotPlan::Travel { from: HOME, to: PARK };
            fill(&mut plan, 31, 34, SlotPlan::At(PARK));
            plan[34] = SlotPlan::Travel { from: PARK, to: HOME };
        } else {
            // Sunday: visit a friend in the afternoon
            plan[30] = SlotPlan::Travel { from: HOME, to: FRIEND };
            fill(&mut plan, 31, 37, SlotPlan::At(FRIEND));
            plan[37] = SlotPlan::Travel { from: FRIEND, to: HOME };
        }
        template.push(plan);
    }
    Routine {
        template,
        travel_mode,
        charge_slot: 45 + rng.gen_range(0..2), // 22:30 or 23:00
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Deviation {
    None,
    /// Skip the routine and stay home all day.
    StayHome,
    /// Evening visit to the friend's place.
    EveningOut,
    /// Long restaurant outing over the afternoon.
    LongLunch,
}

fn plan_label(plan: SlotPlan, places: &[Place], travel_mode: Subcategory) -> Label {
    match plan {
        SlotPlan::At(p) => Label::from_sub(places[p].sub),
        SlotPlan::Travel { .. } => Label::from_sub(travel_mode),
    }
}

/// Motion context of a slot, driving the activity-dependent sensors.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Motion {
    Still,
    Walking,
    Bicycle,
    Vehicle,
}

fn motion_of(plan: SlotPlan, travel_mode: Subcategory) -> Motion {
    match plan {
        SlotPlan::At(_) => Motion::Still,
        SlotPlan::Travel { .. } => match travel_mode {
            Subcategory::TravelFoot => Motion::Walking,
            Subcategory::TravelBicycle => Motion::Bicycle,
            _ => Motion::Vehicle,
        },
    }
}

fn gauss(rng: &mut ChaCha8Rng, mean: f64, std: f64) -> f64 {
    // Box–Muller; two uniforms per draw keeps the stream simple
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    mean + std * (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// ~1e-5 degrees of latitude per meter.
fn meters_to_deg(m: f64) -> f64 {
    m / 111_190.0
}

/// Generate one user's world. Deterministic in (seed, user_idx, cfg).
pub fn generate_world(seed: u64, user_idx: u32, cfg: &WorldConfig) -> Result<UserWorld> {
    cfg.validate()?;
    let user_id = format!("u{user_idx:03}");
    let mut routine_rng = user_rng(seed, user_idx, streams::ROUTINE);
    let places = make_places(user_idx, &mut routine_rng);
    let routine = build_routine(&mut routine_rng);
    let mut deviation_rng = user_rng(seed, user_idx, streams::DEVIATION);
    let mut sensor_rng = user_rng(seed, user_idx, streams::SENSOR);
    let mut missing_rng = user_rng(seed, user_idx, streams::MISSING);

    let slots = cfg.days * SLOTS_PER_DAY;
    let mut truth = Vec::with_capacity(slots as usize);
    let mut modal = Vec::with_capacity(slots as usize);
    let mut events = Vec::new();
    let mut battery = 88.0f64;
    let mut was_charging = false;

    for day in 0..cfg.days {
        let dow = (day % 7) as usize;
        let template_day = &routine.template[dow];
        let deviation = if deviation_rng.gen_bool(cfg.deviation_rate) {
            match deviation_rng.gen_range(0..3) {
                0 if dow < 5 => Deviation::StayHome,
                1 => Deviation::EveningOut,
                _ => Deviation::LongLunch,
            }
        } else {
            Deviation::None
        };
        let mut day_plan = template_day.clone();
        match deviation {
            Deviation::None => {}
            Deviation::StayHome => fill(&mut day_plan, 0, SLOTS_PER_DAY as usize, SlotPlan::At(HOME)),
            Deviation::EveningOut => {
                day_plan[39] = SlotPlan::Travel { from: HOME, to: FRIEND };
                fill(&mut day_plan, 40, 45, SlotPlan::At(FRIEND));
                day_plan[45] = SlotPlan::Travel { from: FRIEND, to: HOME };
            }
            Deviation::LongLunch => {
                fill(&mut day_plan, 25, 30, SlotPlan::At(RESTAURANT));
                day_plan[30] = SlotPlan::Travel { from: RESTAURANT, to: FACULTY };
            }
        }
        for slot_in_day in 0..SLOTS_PER_DAY {
            let plan = day_plan[slot_in_day as usize];
            truth.push(plan_label(plan, &places, routine.travel_mode));
            modal.push(plan_label(
                template_day[slot_in_day as usize],
                &places,
                routine.travel_mode,
            ));
            let slot = day * SLOTS_PER_DAY + slot_in_day;
            let charging = matches!(plan, SlotPlan::At(HOME))
                && (slot_in_day >= routine.charge_slot || slot_in_day < 13)
                && battery < 99.0;
            let charge_start = charging && !was_charging;
            was_charging = charging;
            synth_window(
                &user_id,
                slot,
                plan,
                &places,
                routine.travel_mode,
                charging,
                charge_start,
                &mut battery,
                cfg,
                &mut sensor_rng,
                &mut missing_rng,
                &mut events,
            );
        }
    }
    events.sort_by_key(|e| e.timestamp);
    Ok(UserWorld {
        user_id,
        days: cfg.days,
        truth,
        modal,
        events,
    })
}

/// Synthesize one window's events (subject to missingness injection).
#[allow(clippy::too_many_arguments)]
fn synth_window(
    user_id: &str,
    slot: u64,
    plan: SlotPlan,
    places: &[Place],
    travel_mode: Subcategory,
    charging: bool,
    charge_start: bool,
    battery: &mut f64,
    cfg: &WorldConfig,
    rng: &mut ChaCha8Rng,
    missing_rng: &mut ChaCha8Rng,
    out: &mut Vec<SensorEvent>,
) {
    let start = slot * SLOT_MINUTES;
    let motion = motion_of(plan, travel_mode);
    let noise = cfg.noise_scale;

    // battery is a day-long state machine; advance it first so the window's
    // readings reflect the transition
    let level_begin = *battery;
    let drain = match motion {
        Motion::Still => 0.9 + gauss(rng, 0.0, 0.03 * noise),
        _ => 1.6 + gauss(rng, 0.0, 0.04 * noise),
    };
    let level_end = if charging {
        (level_begin + 6.5).min(100.0)
    } else {
        (level_begin - drain).max(2.0)
    };
    *battery = level_end;

    // missingness: device off kills the whole window
    let device_off = missing_rng.gen_bool(cfg.device_off_rate);
    let mut keep = [false; 12];
    for (i, kind) in SensorKind::ALL.iter().enumerate() {
        // draw per sensor regardless, keeping the stream aligned across configs
        let dropped = missing_rng.gen_bool(cfg.missingness.rate(*kind));
        keep[i] = !device_off && !dropped;
    }
    let kept = |kind: SensorKind| keep[SensorKind::ALL.iter().position(|k| *k == kind).unwrap()];
    let mut push = |minute: u64, data: SensorData| {
        out.push(SensorEvent::new(
            user_id,
            SimTime::from_minutes(start + minute),
            data,
        ));
    };

    // location: at a place, anchor + scatter; travelling, interpolated hops
    if kept(SensorKind::Location) {
        let scatter = meters_to_deg(cfg.gps_scatter_m) * noise;
        let mut point = |frac: f64| -> (f64, f64, f64) {
            let (lat, lon, alt) = match plan {
                SlotPlan::At(p) => (places[p].lat, places[p].lon, places[p].alt),
                SlotPlan::Travel { from, to } => {
                    let (a, b) = (&places[from], &places[to]);
                    (
                        a.lat + (b.lat - a.lat) * frac,
                        a.lon + (b.lon - a.lon) * frac,
                        a.alt + (b.alt - a.alt) * frac,
                    )
                }
            };
            (
                lat + gauss(rng, 0.0, scatter),
                lon + gauss(rng, 0.0, scatter),
                alt + gauss(rng, 0.0, 1.5),
            )
        };
        for (minute, frac) in [(4u64, 0.15), (14, 0.5), (25, 0.85)] {
            let (latitude, longitude, altitude) = point(frac);
            push(minute, SensorData::Location { latitude, longitude, altitude });
        }
    }

    // accelerometer: gravity plus a motion-typed vibration pattern; the
    // fixed pattern keeps the magnitude variance stable across days
    if kept(SensorKind::Accelerometer) {
        let (mx, my, mz, amp) = match motion {
            Motion::Still => (0.05, 0.03, 9.81, 0.02),
            Motion::Walking => (0.90, 0.55, 9.95, 1.10),
            Motion::Bicycle => (0.60, 0.40, 9.88, 0.65),
            Motion::Vehicle => (0.30, 0.20, 9.83, 0.30),
        };
        let jitter = 0.012 * amp * noise;
        for (minute, p) in [(3u64, -1.0), (13, 0.0), (23, 1.0)] {
            push(
                minute,
                SensorData::Accelerometer {
                    x: mx + p * amp + gauss(rng, 0.0, jitter),
                    y: my + p * amp * 0.6 + gauss(rng, 0.0, jitter),
                    z: mz + p * amp * 0.3 + gauss(rng, 0.0, jitter),
                },
            );
        }
    }

    if kept(SensorKind::Activities) {
        let activity = match motion {
            Motion::Still => ActivityKind::Still,
            Motion::Walking => ActivityKind::Walking,
            Motion::Bicycle => ActivityKind::OnBicycle,
            Motion::Vehicle => ActivityKind::InVehicle,
        };
        for minute in [6u64, 21] {
            push(
                minute,
                SensorData::Activities {
                    activity,
                    confidence: 70 + rng.gen_range(0..30),
                },
            );
        }
        if motion == Motion::Walking {
            push(22, SensorData::Activities { activity: ActivityKind::OnFoot, confidence: 80 });
        }
    }

    if kept(SensorKind::StepDetector) {
        let lambda = match (plan, motion) {
            (_, Motion::Walking) => 150.0,
            (_, Motion::Bicycle) => 25.0,
            (_, Motion::Vehicle) => 8.0,
            (SlotPlan::At(p), _) => places[p].steps,
            _ => 5.0,
        };
        let count = gauss(rng, lambda, (lambda * 0.03).max(0.3) * noise)
            .round()
            .max(0.0) as u64;
        // spread step events over the window
        for k in 0..count.min(400) {
            push(1 + (k * 28) / count.max(1), SensorData::StepDetector {});
        }
    }

    if kept(SensorKind::Orientation) {
        // resting pose habit per place; travel has its own wobbly pose
        let (az, pitch, roll, spread) = match plan {
            SlotPlan::At(p) => {
                let pl = &places[p];
                (pl.azimuth, pl.pitch, pl.roll, pl.orient_spread)
            }
            SlotPlan::Travel { .. } => (180.0, 60.0, 10.0, 35.0),
        };
        let jitter = (0.012 * spread).max(0.04) * noise;
        for (minute, p) in [(8u64, -1.0), (24, 1.0)] {
            push(
                minute,
                SensorData::Orientation {
                    x: az + p * spread + gauss(rng, 0.0, jitter),
                    y: pitch + p * spread * 0.4 + gauss(rng, 0.0, jitter),
                    z: roll + p * spread * 0.25 + gauss(rng, 0.0, jitter),
                },
            );
        }
    }

    if kept(SensorKind::MagneticField) {
        let (m, rel) = match plan {
            SlotPlan::At(p) => (places[p].magnetic, places[p].mag_rel),
            SlotPlan::Travel { .. } => ([22.0, -8.0, 38.0], 0.20),
        };
        let jitter = 0.012 * noise;
        for (minute, p) in [(9u64, -1.0), (26, 1.0)] {
            let s = 1.0 + p * rel;
            push(
                minute,
                SensorData::MagneticField {
                    x: m[0] * s + gauss(rng, 0.0, jitter),
                    y: m[1] * s + gauss(rng, 0.0, jitter),
                    z: m[2] * s + gauss(rng, 0.0, jitter),
                },
            );
        }
    }

    if kept(SensorKind::Proximity) {
        // in a pocket while moving (near), on a surface otherwise (far)
        let near = !matches!(motion, Motion::Still);
        for minute in [11u64, 19] {
            push(
                minute,
                SensorData::Proximity {
                    centimeters: Some(if near { 0.0 } else { 5.0 }),
                    label: None,
                },
            );
        }
    }

    if kept(SensorKind::Bluetooth) {
        // the place's device population sits on a stable RSSI ladder
        let (count, rssi, spacing) = match plan {
            SlotPlan::At(p) => (places[p].bt_count, places[p].bt_rssi, places[p].bt_spacing),
            SlotPlan::Travel { .. } => (2.0, -72.0, 4.0),
        };
        let n = count.round().max(0.0) as usize;
        let pool = match plan {
            SlotPlan::At(p) => format!("p{p}"),
            SlotPlan::Travel { .. } => "tr".to_string(),
        };
        let devices = (0..n)
            .map(|i| BtDevice {
                id: format!("bt_{pool}_{i}"),
                rssi: rssi + (i as f64 - (n as f64 - 1.0) / 2.0) * spacing
                    + gauss(rng, 0.0, 0.03 * noise),
            })
            .collect();
        push(12, SensorData::Bluetooth { devices });
    }

    if kept(SensorKind::WifiEvent) {
        let network = match plan {
            SlotPlan::At(p) => places[p].own_network.clone(),
            SlotPlan::Travel { .. } => None,
        };
        push(
            7,
            SensorData::WifiEvent {
                connected: network.is_some(),
                network_id: network,
            },
        );
    }

    if kept(SensorKind::WifiNetworks) {
        let base = match plan {
            SlotPlan::At(p) => places[p].wifi_nets,
            SlotPlan::Travel { .. } => 3.0,
        };
        let n = base.round().max(0.0) as usize;
        let pool = match plan {
            SlotPlan::At(p) => format!("p{p}"),
            SlotPlan::Travel { .. } => "tr".to_string(),
        };
        let networks = (0..n).map(|i| format!("wifi_{pool}_{i}")).collect();
        push(16, SensorData::WifiNetworks { networks });
    }

    if kept(SensorKind::BatteryLevel) {
        push(2, SensorData::BatteryLevel { level: level_begin });
        push(28, SensorData::BatteryLevel { level: level_end });
    }

    if kept(SensorKind::BatteryCharge) && charge_start {
        // only the plug-in transition window carries a charge event
        push(5, SensorData::BatteryCharge { plugged: true });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{compute_features, windowize, Feature, FeatureConfig, WindowizeConfig};
    use crate::taxonomy::MainCategory;

    #[test]
    fn deterministic_given_seed() {
        let cfg = WorldConfig {
            days: 3,
            ..Default::default()
        };
        let a = generate_world(42, 0, &cfg).unwrap();
        let b = generate_world(42, 0, &cfg).unwrap();
        assert_eq!(a.truth, b.truth);
        assert_eq!(a.events, b.events);
        let c = generate_world(43, 0, &cfg).unwrap();
        assert!(a.events != c.events);
    }

    #[test]
    fn home_share_in_expected_band() {
        let cfg = WorldConfig::default();
        let w = generate_world(7, 0, &cfg).unwrap();
        let home = w
            .truth
            .iter()
            .filter(|l| l.main == MainCategory::Home)
            .count() as f64;
        let share = home / w.truth.len() as f64;
        assert!((0.5..=0.8).contains(&share), "home share {share}");
    }

    #[test]
    fn weekday_weekend_asymmetry() {
        let cfg = WorldConfig {
            deviation_rate: 0.0,
            ..Default::default()
        };
        let w = generate_world(3, 1, &cfg).unwrap();
        let uni_share = |day: u64| {
            let s = (day * 48) as usize;
            w.truth[s..s + 48]
                .iter()
                .filter(|l| l.main == MainCategory::University)
                .count()
        };
        assert!(uni_share(1) > 8, "weekday should be university-heavy");
        assert_eq!(uni_share(5), 0, "saturday has no university slots");
    }

    #[test]
    fn every_slot_has_exactly_one_label() {
        let cfg = WorldConfig { days: 14, ..Default::default() };
        let w = generate_world(11, 2, &cfg).unwrap();
        assert_eq!(w.truth.len(), 14 * 48);
        assert_eq!(w.modal.len(), 14 * 48);
        assert!(w.truth.iter().all(|l| l.sub.is_some()));
    }

    #[test]
    fn travel_slots_have_travel_labels_and_distance() {
        let cfg = WorldConfig {
            days: 7,
            deviation_rate: 0.0,
            device_off_rate: 0.0,
            ..Default::default()
        };
        let w = generate_world(5, 3, &cfg).unwrap();
        let windows = windowize(
            &w.events,
            &WindowizeConfig {
                period_minutes: 30,
                start_index: Some(0),
                end_index: Some(w.slots()),
            },
        )
        .unwrap();
        let mut checked = 0;
        for (slot, label) in w.truth.iter().enumerate() {
            if label.main != MainCategory::Travelling {
                continue;
            }
            let row = compute_features(&windows[slot], &FeatureConfig::default()).unwrap();
            if let Some(total) = row.get(Feature::LocationTotalDistance) {
                assert!(total > 100.0, "slot {slot} total {total}");
                checked += 1;
            }
        }
        assert!(checked > 10, "checked only {checked} travel windows");
    }

    #[test]
    fn nearest_anchor_identifies_place() {
        // sensor-truth consistency: mean GPS of a non-travel window sits
        // closest to the true place's anchor
        let cfg = WorldConfig {
            days: 14,
            device_off_rate: 0.0,
            ..Default::default()
        };
        let seed = 17;
        let user = 4;
        let w = generate_world(seed, user, &cfg).unwrap();
        let mut routine_rng = user_rng(seed, user, streams::ROUTINE);
        let places = make_places(user, &mut routine_rng);
        let windows = windowize(
            &w.events,
            &WindowizeConfig {
                period_minutes: 30,
                start_index: Some(0),
                end_index: Some(w.slots()),
            },
        )
        .unwrap();
        let (mut ok, mut total) = (0u32, 0u32);
        for (slot, label) in w.truth.iter().enumerate() {
            if label.main == MainCategory::Travelling {
                continue;
            }
            let row = compute_features(&windows[slot], &FeatureConfig::default()).unwrap();
            let (Some(lat), Some(lon)) = (
                row.get(Feature::LocationLatitude),
                row.get(Feature::LocationLongitude),
            ) else {
                continue;
            };
            total += 1;
            let nearest = places
                .iter()
                .enumerate()
                .min_by(|(_, a), (_, b)| {
                    let da = (a.lat - lat).powi(2) + (a.lon - lon).powi(2);
                    let db = (b.lat - lat).powi(2) + (b.lon - lon).powi(2);
                    da.partial_cmp(&db).unwrap()
                })
                .map(|(i, _)| i)
                .unwrap();
            if places[nearest].sub == label.sub.unwrap() {
                ok += 1;
            }
        }
        assert!(total > 400);
        let frac = ok as f64 / total as f64;
        assert!(frac >= 0.95, "consistency {frac}");
    }

    #[test]
    fn missingness_injection_drops_families() {
        let cfg = WorldConfig {
            days: 7,
            missingness: MissingnessConfig::uniform(0.9),
            ..Default::default()
        };
        let dense = WorldConfig {
            days: 7,
            missingness: MissingnessConfig::default(),
            ..Default::default()
        };
        let sparse_events = generate_world(9, 0, &cfg).unwrap().events.len();
        let dense_events = generate_world(9, 0, &dense).unwrap().events.len();
        assert!(
            (sparse_events as f64) < 0.25 * dense_events as f64,
            "{sparse_events} vs {dense_events}"
        );
    }
}
