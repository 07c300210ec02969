//! Feature pipeline: raw sensor events → 30-minute windows → engineered
//! feature rows with missingness tracking → standardized model vectors.

pub mod geo;
pub mod standardize;

use crate::clock::SimTime;
use crate::error::{Error, Result};
use crate::sensors::{ActivityKind, SensorData, SensorEvent};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::f64::consts::TAU;

/// The engineered features, in the fixed column order of the feature CSV.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(usize)]
pub enum Feature {
    TimeIsWorkday,
    TimeIsMorning,
    TimeIsNoon,
    TimeIsAfternoon,
    TimeIsEvening,
    TimeIsNight,
    TimeSinHour,
    TimeCosHour,
    BluetoothRssiMean,
    BluetoothRssiVar,
    BluetoothNunique,
    WifiConnectionCount,
    WifiIsConnected,
    WifiNetworksNunique,
    StepCount,
    ActivityInVehicle,
    ActivityOnBicycle,
    ActivityOnFoot,
    ActivityRunning,
    ActivityStill,
    ActivityUnknown,
    ActivityWalking,
    AccelAvgX,
    AccelAvgY,
    AccelAvgZ,
    AccelMagnitudeAvg,
    AccelMagnitudeVar,
    OrientAvgX,
    OrientAvgY,
    OrientAvgZ,
    OrientMagnitudeAvg,
    OrientMagnitudeVar,
    LocationAltitude,
    LocationLongitude,
    LocationLatitude,
    LocationDirectDistance,
    LocationTotalDistance,
    LocationRadiusOfGyration,
    MagneticAvgX,
    MagneticAvgY,
    MagneticAvgZ,
    MagneticMagnitudeAvg,
    MagneticMagnitudeVar,
    ProximityMean,
    ProximityVar,
    BatteryDelta,
    BatteryChargeCount,
}

pub const FEATURE_COUNT: usize = 47;

/// Model vector dimension: every feature plus its missingness bit.
pub const MODEL_DIM: usize = 2 * FEATURE_COUNT;

impl Feature {
    pub const ALL: [Feature; FEATURE_COUNT] = [
        Feature::TimeIsWorkday,
        Feature::TimeIsMorning,
        Feature::TimeIsNoon,
        Feature::TimeIsAfternoon,
        Feature::TimeIsEvening,
        Feature::TimeIsNight,
        Feature::TimeSinHour,
        Feature::TimeCosHour,
        Feature::BluetoothRssiMean,
        Feature::BluetoothRssiVar,
        Feature::BluetoothNunique,
        Feature::WifiConnectionCount,
        Feature::WifiIsConnected,
        Feature::WifiNetworksNunique,
        Feature::StepCount,
        Feature::ActivityInVehicle,
        Feature::ActivityOnBicycle,
        Feature::ActivityOnFoot,
        Feature::ActivityRunning,
        Feature::ActivityStill,
        Feature::ActivityUnknown,
        Feature::ActivityWalking,
        Feature::AccelAvgX,
        Feature::AccelAvgY,
        Feature::AccelAvgZ,
        Feature::AccelMagnitudeAvg,
        Feature::AccelMagnitudeVar,
        Feature::OrientAvgX,
        Feature::OrientAvgY,
        Feature::OrientAvgZ,
        Feature::OrientMagnitudeAvg,
        Feature::OrientMagnitudeVar,
        Feature::LocationAltitude,
        Feature::LocationLongitude,
        Feature::LocationLatitude,
        Feature::LocationDirectDistance,
        Feature::LocationTotalDistance,
        Feature::LocationRadiusOfGyration,
        Feature::MagneticAvgX,
        Feature::MagneticAvgY,
        Feature::MagneticAvgZ,
        Feature::MagneticMagnitudeAvg,
        Feature::MagneticMagnitudeVar,
        Feature::ProximityMean,
        Feature::ProximityVar,
        Feature::BatteryDelta,
        Feature::BatteryChargeCount,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// CSV column name.
    pub fn name(self) -> &'static str {
        match self {
            Feature::TimeIsWorkday => "time_is_workday",
            Feature::TimeIsMorning => "time_is_morning",
            Feature::TimeIsNoon => "time_is_noon",
            Feature::TimeIsAfternoon => "time_is_afternoon",
            Feature::TimeIsEvening => "time_is_evening",
            Feature::TimeIsNight => "time_is_night",
            Feature::TimeSinHour => "time_sin_hour",
            Feature::TimeCosHour => "time_cos_hour",
            Feature::BluetoothRssiMean => "bluetooth_rssi_mean",
            Feature::BluetoothRssiVar => "bluetooth_rssi_var",
            Feature::BluetoothNunique => "bluetooth_nunique",
            Feature::WifiConnectionCount => "wifi_connection_count",
            Feature::WifiIsConnected => "wifi_is_connected",
            Feature::WifiNetworksNunique => "wifi_networks_nunique",
            Feature::StepCount => "step_count",
            Feature::ActivityInVehicle => "activity_in_vehicle",
            Feature::ActivityOnBicycle => "activity_on_bicycle",
            Feature::ActivityOnFoot => "activity_on_foot",
            Feature::ActivityRunning => "activity_running",
            Feature::ActivityStill => "activity_still",
            Feature::ActivityUnknown => "activity_unknown",
            Feature::ActivityWalking => "activity_walking",
            Feature::AccelAvgX => "accelerometer_avg_x",
            Feature::AccelAvgY => "accelerometer_avg_y",
            Feature::AccelAvgZ => "accelerometer_avg_z",
            Feature::AccelMagnitudeAvg => "accelerometer_magnitude_avg",
            Feature::AccelMagnitudeVar => "accelerometer_magnitude_var",
            Feature::OrientAvgX => "orientation_avg_x",
            Feature::OrientAvgY => "orientation_avg_y",
            Feature::OrientAvgZ => "orientation_avg_z",
            Feature::OrientMagnitudeAvg => "orientation_magnitude_avg",
            Feature::OrientMagnitudeVar => "orientation_magnitude_var",
            Feature::LocationAltitude => "location_altitude",
            Feature::LocationLongitude => "location_longitude",
            Feature::LocationLatitude => "location_latitude",
            Feature::LocationDirectDistance => "location_direct_distance",
            Feature::LocationTotalDistance => "location_total_distance",
            Feature::LocationRadiusOfGyration => "location_radius_of_gyration",
            Feature::MagneticAvgX => "magnetic_field_avg_x",
            Feature::MagneticAvgY => "magnetic_field_avg_y",
            Feature::MagneticAvgZ => "magnetic_field_avg_z",
            Feature::MagneticMagnitudeAvg => "magnetic_field_magnitude_avg",
            Feature::MagneticMagnitudeVar => "magnetic_field_magnitude_var",
            Feature::ProximityMean => "proximity_mean",
            Feature::ProximityVar => "proximity_var",
            Feature::BatteryDelta => "battery_delta",
            Feature::BatteryChargeCount => "battery_charge_count",
        }
    }

    /// Booleans bypass standardization (0/1 pass-through).
    pub fn is_boolean(self) -> bool {
        use Feature::*;
        matches!(
            self,
            TimeIsWorkday
                | TimeIsMorning
                | TimeIsNoon
                | TimeIsAfternoon
                | TimeIsEvening
                | TimeIsNight
                | WifiIsConnected
                | ActivityInVehicle
                | ActivityOnBicycle
                | ActivityOnFoot
                | ActivityRunning
                | ActivityStill
                | ActivityUnknown
                | ActivityWalking
        )
    }
}

/// One window's feature values plus the per-feature missingness mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub values: Vec<f64>,
    pub missing: Vec<bool>,
    /// Readings dropped as malformed (non-finite) while aggregating.
    pub malformed_readings: u32,
}

impl FeatureRow {
    pub fn all_missing() -> FeatureRow {
        FeatureRow {
            values: vec![0.0; FEATURE_COUNT],
            missing: vec![true; FEATURE_COUNT],
            malformed_readings: 0,
        }
    }

    pub fn set(&mut self, f: Feature, v: f64) {
        self.values[f.index()] = v;
        self.missing[f.index()] = false;
    }

    pub fn set_bool(&mut self, f: Feature, v: bool) {
        self.set(f, if v { 1.0 } else { 0.0 });
    }

    pub fn get(&self, f: Feature) -> Option<f64> {
        if self.missing[f.index()] {
            None
        } else {
            Some(self.values[f.index()])
        }
    }

    pub fn is_missing(&self, f: Feature) -> bool {
        self.missing[f.index()]
    }

    /// True when every sensor-derived feature is missing (only the clock
    /// contributed): a dark window, carrying no usable example.
    pub fn sensors_all_missing(&self) -> bool {
        Feature::ALL
            .iter()
            .skip(8) // the eight time features
            .all(|f| self.missing[f.index()])
    }
}

/// One aggregation window of raw events.
#[derive(Debug, Clone)]
pub struct Window {
    pub user_id: String,
    pub index: u64,
    pub start: SimTime,
    pub period_minutes: u64,
    pub events: Vec<SensorEvent>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct WindowizeConfig {
    pub period_minutes: u64,
    /// First window index to emit; defaults to 0 (study start).
    pub start_index: Option<u64>,
    /// One past the last window index; defaults to covering the last event.
    pub end_index: Option<u64>,
}

impl Default for WindowizeConfig {
    fn default() -> Self {
        WindowizeConfig {
            period_minutes: 30,
            start_index: None,
            end_index: None,
        }
    }
}

/// Partition one user's events into half-open windows `[t, t+period)`
/// aligned to the period grid. Empty windows are still emitted.
pub fn windowize(events: &[SensorEvent], cfg: &WindowizeConfig) -> Result<Vec<Window>> {
    if cfg.period_minutes == 0 || (24 * 60) % cfg.period_minutes != 0 {
        return Err(Error::Config(
            "window period must divide 24 hours".into(),
        ));
    }
    let user_id = events.first().map(|e| e.user_id.clone()).unwrap_or_default();
    let mut last = None;
    for e in events {
        if e.user_id != user_id {
            return Err(Error::Usage(
                "windowize expects events of a single user; group first".into(),
            ));
        }
        if let Some(prev) = last {
            if e.timestamp < prev {
                return Err(Error::Usage("events must be sorted by timestamp".into()));
            }
        }
        last = Some(e.timestamp);
    }
    let period = cfg.period_minutes;
    let start = cfg.start_index.unwrap_or(0);
    let end = cfg.end_index.unwrap_or_else(|| {
        events
            .last()
            .map(|e| e.timestamp.minutes() / period + 1)
            .unwrap_or(start)
    });
    let mut windows: Vec<Window> = (start..end)
        .map(|index| Window {
            user_id: user_id.clone(),
            index,
            start: SimTime::from_minutes(index * period),
            period_minutes: period,
            events: Vec::new(),
        })
        .collect();
    for e in events {
        let idx = e.timestamp.minutes() / period;
        if idx < start || idx >= end {
            continue;
        }
        windows[(idx - start) as usize].events.push(e.clone());
    }
    Ok(windows)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct FeatureConfig {
    /// Keep the literal documented hour bands (with their gaps) instead of
    /// the contiguous extension.
    pub strict_time_bands: bool,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population variance (divide by n).
fn pop_var(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

fn finite(xs: Vec<f64>, malformed: &mut u32) -> Vec<f64> {
    let before = xs.len();
    let out: Vec<f64> = xs.into_iter().filter(|v| v.is_finite()).collect();
    *malformed += (before - out.len()) as u32;
    out
}

struct TriAxial {
    xs: Vec<f64>,
    ys: Vec<f64>,
    zs: Vec<f64>,
    mags: Vec<f64>,
}

fn tri_axial(readings: &[(f64, f64, f64)], malformed: &mut u32) -> TriAxial {
    let mut t = TriAxial {
        xs: Vec::new(),
        ys: Vec::new(),
        zs: Vec::new(),
        mags: Vec::new(),
    };
    for &(x, y, z) in readings {
        if !(x.is_finite() && y.is_finite() && z.is_finite()) {
            *malformed += 1;
            continue;
        }
        t.xs.push(x);
        t.ys.push(y);
        t.zs.push(z);
        t.mags.push((x * x + y * y + z * z).sqrt());
    }
    t
}

fn set_tri_axial(
    row: &mut FeatureRow,
    t: &TriAxial,
    avg: [Feature; 3],
    mag_avg: Feature,
    mag_var: Feature,
) {
    if t.xs.is_empty() {
        return;
    }
    row.set(avg[0], mean(&t.xs));
    row.set(avg[1], mean(&t.ys));
    row.set(avg[2], mean(&t.zs));
    row.set(mag_avg, mean(&t.mags));
    row.set(mag_var, pop_var(&t.mags));
}

/// Hour-of-day band membership for the five day-part booleans.
fn time_bands(hf: f64, strict: bool) -> [bool; 5] {
    if strict {
        // the literal documented bands, leaving gaps between them
        [
            (6.0..=9.0).contains(&hf),
            (10.0..=13.0).contains(&hf),
            (14.0..=17.0).contains(&hf),
            (18.0..=21.0).contains(&hf),
            hf >= 22.0 || hf <= 5.0,
        ]
    } else {
        // contiguous half-open extension covering every hour exactly once
        [
            (6.0..10.0).contains(&hf),
            (10.0..14.0).contains(&hf),
            (14.0..18.0).contains(&hf),
            (18.0..22.0).contains(&hf),
            hf >= 22.0 || hf < 6.0,
        ]
    }
}

/// Aggregate one window's events into a feature row.
///
/// Time features always come from the window start. A feature family whose
/// source sensor produced zero events stays missing; sub-features whose
/// defining aggregate is empty (e.g. RSSI statistics of an empty scan) stay
/// missing even when the sensor reported.
pub fn compute_features(w: &Window, cfg: &FeatureConfig) -> Result<FeatureRow> {
    let mut row = FeatureRow::all_missing();
    let mut malformed = 0u32;

    // time family
    let t = w.start;
    row.set_bool(Feature::TimeIsWorkday, t.is_workday());
    let hf = t.hour_fraction();
    let bands = time_bands(hf, cfg.strict_time_bands);
    row.set_bool(Feature::TimeIsMorning, bands[0]);
    row.set_bool(Feature::TimeIsNoon, bands[1]);
    row.set_bool(Feature::TimeIsAfternoon, bands[2]);
    row.set_bool(Feature::TimeIsEvening, bands[3]);
    row.set_bool(Feature::TimeIsNight, bands[4]);
    let angle = TAU * hf / 24.0;
    row.set(Feature::TimeSinHour, angle.sin());
    row.set(Feature::TimeCosHour, angle.cos());

    // gather per sensor
    let mut bt_rssi = Vec::new();
    let mut bt_ids = BTreeSet::new();
    let mut bt_scans = 0usize;
    let mut wifi_events = 0usize;
    let mut wifi_connections = 0usize;
    let mut wifi_connected = false;
    let mut wifi_net_scans = 0usize;
    let mut wifi_nets = BTreeSet::new();
    let mut steps = 0usize;
    let mut step_events = false;
    let mut act_events = 0usize;
    let mut act_flags = [false; 7];
    let mut accel = Vec::new();
    let mut orient = Vec::new();
    let mut magnetic = Vec::new();
    let mut gps: Vec<(f64, f64)> = Vec::new();
    let mut alts = Vec::new();
    let mut prox = Vec::new();
    let mut battery_levels = Vec::new();
    let mut charge_events = 0usize;
    let mut charges = 0usize;

    for e in &w.events {
        match &e.data {
            SensorData::Bluetooth { devices } => {
                bt_scans += 1;
                for d in devices {
                    if d.rssi.is_finite() {
                        bt_rssi.push(d.rssi);
                    } else {
                        malformed += 1;
                    }
                    bt_ids.insert(d.id.clone());
                }
            }
            SensorData::WifiEvent { connected, .. } => {
                wifi_events += 1;
                if *connected {
                    wifi_connections += 1;
                    wifi_connected = true;
                }
            }
            SensorData::WifiNetworks { networks } => {
                wifi_net_scans += 1;
                for n in networks {
                    wifi_nets.insert(n.clone());
                }
            }
            SensorData::StepDetector {} => {
                step_events = true;
                steps += 1;
            }
            SensorData::Activities { activity, .. } => {
                act_events += 1;
                match activity {
                    ActivityKind::InVehicle => act_flags[0] = true,
                    ActivityKind::OnBicycle => act_flags[1] = true,
                    ActivityKind::OnFoot => act_flags[2] = true,
                    ActivityKind::Running => act_flags[3] = true,
                    ActivityKind::Still => act_flags[4] = true,
                    ActivityKind::Unknown => act_flags[5] = true,
                    ActivityKind::Walking => act_flags[6] = true,
                    ActivityKind::Tilting => {} // reported but not a feature
                }
            }
            SensorData::Accelerometer { x, y, z } => accel.push((*x, *y, *z)),
            SensorData::Orientation { x, y, z } => orient.push((*x, *y, *z)),
            SensorData::MagneticField { x, y, z } => magnetic.push((*x, *y, *z)),
            SensorData::Location {
                latitude,
                longitude,
                altitude,
            } => {
                if latitude.is_finite() && longitude.is_finite() {
                    gps.push((*latitude, *longitude));
                } else {
                    malformed += 1;
                }
                if altitude.is_finite() {
                    alts.push(*altitude);
                }
            }
            SensorData::Proximity { centimeters, label } => {
                // device heterogeneity: labels map to {near: 0, far: 5} cm
                match (centimeters, label.as_deref()) {
                    (Some(cm), _) if cm.is_finite() => prox.push(*cm),
                    (_, Some("near")) => prox.push(0.0),
                    (_, Some("far")) => prox.push(5.0),
                    _ => malformed += 1,
                }
            }
            SensorData::BatteryLevel { level } => {
                if level.is_finite() {
                    battery_levels.push(*level);
                } else {
                    malformed += 1;
                }
            }
            SensorData::BatteryCharge { plugged } => {
                charge_events += 1;
                if *plugged {
                    charges += 1;
                }
            }
        }
    }

    if bt_scans > 0 {
        row.set(Feature::BluetoothNunique, bt_ids.len() as f64);
        let rssi = finite(bt_rssi, &mut malformed);
        if !rssi.is_empty() {
            row.set(Feature::BluetoothRssiMean, mean(&rssi));
            row.set(Feature::BluetoothRssiVar, pop_var(&rssi));
        }
    }
    if wifi_events > 0 {
        row.set(Feature::WifiConnectionCount, wifi_connections as f64);
        row.set_bool(Feature::WifiIsConnected, wifi_connected);
    }
    if wifi_net_scans > 0 {
        row.set(Feature::WifiNetworksNunique, wifi_nets.len() as f64);
    }
    if step_events {
        row.set(Feature::StepCount, steps as f64);
    }
    if act_events > 0 {
        row.set_bool(Feature::ActivityInVehicle, act_flags[0]);
        row.set_bool(Feature::ActivityOnBicycle, act_flags[1]);
        row.set_bool(Feature::ActivityOnFoot, act_flags[2]);
        row.set_bool(Feature::ActivityRunning, act_flags[3]);
        row.set_bool(Feature::ActivityStill, act_flags[4]);
        row.set_bool(Feature::ActivityUnknown, act_flags[5]);
        row.set_bool(Feature::ActivityWalking, act_flags[6]);
    }

    let acc = tri_axial(&accel, &mut malformed);
    set_tri_axial(
        &mut row,
        &acc,
        [Feature::AccelAvgX, Feature::AccelAvgY, Feature::AccelAvgZ],
        Feature::AccelMagnitudeAvg,
        Feature::AccelMagnitudeVar,
    );
    let ori = tri_axial(&orient, &mut malformed);
    set_tri_axial(
        &mut row,
        &ori,
        [Feature::OrientAvgX, Feature::OrientAvgY, Feature::OrientAvgZ],
        Feature::OrientMagnitudeAvg,
        Feature::OrientMagnitudeVar,
    );
    let mag = tri_axial(&magnetic, &mut malformed);
    set_tri_axial(
        &mut row,
        &mag,
        [
            Feature::MagneticAvgX,
            Feature::MagneticAvgY,
            Feature::MagneticAvgZ,
        ],
        Feature::MagneticMagnitudeAvg,
        Feature::MagneticMagnitudeVar,
    );

    if !gps.is_empty() {
        row.set(
            Feature::LocationLatitude,
            mean(&gps.iter().map(|p| p.0).collect::<Vec<_>>()),
        );
        row.set(
            Feature::LocationLongitude,
            mean(&gps.iter().map(|p| p.1).collect::<Vec<_>>()),
        );
        if !alts.is_empty() {
            row.set(Feature::LocationAltitude, mean(&alts));
        }
        let g = geo::geo_features(&gps)?;
        if let Some(d) = g.direct_distance {
            row.set(Feature::LocationDirectDistance, d);
        }
        if let Some(d) = g.total_distance {
            row.set(Feature::LocationTotalDistance, d);
        }
        if let Some(r) = g.radius_of_gyration {
            row.set(Feature::LocationRadiusOfGyration, r);
        }
    }
    if !prox.is_empty() {
        row.set(Feature::ProximityMean, mean(&prox));
        row.set(Feature::ProximityVar, pop_var(&prox));
    }
    if !battery_levels.is_empty() {
        row.set(
            Feature::BatteryDelta,
            battery_levels.last().unwrap() - battery_levels.first().unwrap(),
        );
    }
    if charge_events > 0 {
        row.set(Feature::BatteryChargeCount, charges as f64);
    }

    row.malformed_readings = malformed;
    Ok(row)
}
