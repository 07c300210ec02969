//! Raw sensor events: the ingest format shared by the world simulator and
//! the feature pipeline.
//!
//! One event per log line, either JSON-lines or CSV (`user_id`,
//! ISO-timestamp, `sensor`, JSON payload).

use crate::clock::{self, SimTime};
use serde::{Deserialize, Serialize};

/// Activities recognized by the phone's activity API. `Tilting` is reported
/// by the sensor but has no derived feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivityKind {
    InVehicle,
    OnBicycle,
    OnFoot,
    Running,
    Still,
    Tilting,
    Unknown,
    Walking,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BtDevice {
    pub id: String,
    pub rssi: f64,
}

/// Sensor reading payloads, tagged with the sensor name in the log format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "sensor", content = "payload", rename_all = "snake_case")]
pub enum SensorData {
    Accelerometer { x: f64, y: f64, z: f64 },
    Activities { activity: ActivityKind, confidence: u8 },
    StepDetector {},
    Orientation { x: f64, y: f64, z: f64 },
    Location { latitude: f64, longitude: f64, altitude: f64 },
    MagneticField { x: f64, y: f64, z: f64 },
    /// Distance head–phone; some devices report centimeters, others labels.
    Proximity {
        #[serde(skip_serializing_if = "Option::is_none")]
        centimeters: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        label: Option<String>,
    },
    /// One scan result, possibly empty.
    Bluetooth { devices: Vec<BtDevice> },
    WifiEvent {
        connected: bool,
        #[serde(skip_serializing_if = "Option::is_none")]
        network_id: Option<String>,
    },
    /// All networks seen by one scan.
    WifiNetworks { networks: Vec<String> },
    /// Edge-triggered: fires when a charger is (dis)connected.
    BatteryCharge { plugged: bool },
    BatteryLevel { level: f64 },
}

/// Sensor identity, used for missingness bookkeeping and injection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensorKind {
    Accelerometer,
    Activities,
    StepDetector,
    Orientation,
    Location,
    MagneticField,
    Proximity,
    Bluetooth,
    WifiEvent,
    WifiNetworks,
    BatteryCharge,
    BatteryLevel,
}

impl SensorKind {
    pub const ALL: [SensorKind; 12] = [
        SensorKind::Accelerometer,
        SensorKind::Activities,
        SensorKind::StepDetector,
        SensorKind::Orientation,
        SensorKind::Location,
        SensorKind::MagneticField,
        SensorKind::Proximity,
        SensorKind::Bluetooth,
        SensorKind::WifiEvent,
        SensorKind::WifiNetworks,
        SensorKind::BatteryCharge,
        SensorKind::BatteryLevel,
    ];
}

impl SensorData {
    pub fn kind(&self) -> SensorKind {
        match self {
            SensorData::Accelerometer { .. } => SensorKind::Accelerometer,
            SensorData::Activities { .. } => SensorKind::Activities,
            SensorData::StepDetector {} => SensorKind::StepDetector,
            SensorData::Orientation { .. } => SensorKind::Orientation,
            SensorData::Location { .. } => SensorKind::Location,
            SensorData::MagneticField { .. } => SensorKind::MagneticField,
            SensorData::Proximity { .. } => SensorKind::Proximity,
            SensorData::Bluetooth { .. } => SensorKind::Bluetooth,
            SensorData::WifiEvent { .. } => SensorKind::WifiEvent,
            SensorData::WifiNetworks { .. } => SensorKind::WifiNetworks,
            SensorData::BatteryCharge { .. } => SensorKind::BatteryCharge,
            SensorData::BatteryLevel { .. } => SensorKind::BatteryLevel,
        }
    }
}

mod iso_time {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &SimTime, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&clock::to_iso(*t))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<SimTime, D::Error> {
        let s = String::deserialize(d)?;
        clock::from_iso(&s).ok_or_else(|| serde::de::Error::custom(format!("bad timestamp {s}")))
    }
}

/// One raw sensor event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorEvent {
    pub user_id: String,
    #[serde(with = "iso_time")]
    pub timestamp: SimTime,
    #[serde(flatten)]
    pub data: SensorData,
}

impl SensorEvent {
    pub fn new(user_id: impl Into<String>, timestamp: SimTime, data: SensorData) -> Self {
        SensorEvent {
            user_id: user_id.into(),
            timestamp,
            data,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_shape() {
        let e = SensorEvent::new(
            "u00",
            SimTime::from_minutes(90),
            SensorData::Location {
                latitude: 45.0,
                longitude: 9.0,
                altitude: 210.0,
            },
        );
        let s = serde_json::to_string(&e).unwrap();
        assert!(s.contains("\"sensor\":\"location\""));
        assert!(s.contains("\"timestamp\":\"2026-01-05T01:30:00Z\""));
        let back: SensorEvent = serde_json::from_str(&s).unwrap();
        assert_eq!(back, e);
    }

    #[test]
    fn step_detector_payload_is_empty_object() {
        let e = SensorEvent::new("u", SimTime(0), SensorData::StepDetector {});
        let s = serde_json::to_string(&e).unwrap();
        assert!(s.contains("\"payload\":{}"), "{s}");
        let back: SensorEvent = serde_json::from_str(&s).unwrap();
        assert_eq!(back.data.kind(), SensorKind::StepDetector);
    }
}
