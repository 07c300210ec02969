//! The location-answer taxonomy: four main categories, eighteen
//! subcategories, and the projection used by the learner.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Main answer categories, in fixed taxonomy order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MainCategory {
    University,
    Home,
    Travelling,
    Other,
}

impl MainCategory {
    pub const ALL: [MainCategory; 4] = [
        MainCategory::University,
        MainCategory::Home,
        MainCategory::Travelling,
        MainCategory::Other,
    ];

    pub fn index(self) -> usize {
        match self {
            MainCategory::University => 0,
            MainCategory::Home => 1,
            MainCategory::Travelling => 2,
            MainCategory::Other => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MainCategory::University => "university",
            MainCategory::Home => "home",
            MainCategory::Travelling => "travelling",
            MainCategory::Other => "other",
        }
    }
}

/// The eighteen answer options of the location question, in fixed order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subcategory {
    // University
    MyFaculty,
    OtherFaculty,
    UniversityOther,
    // Home
    MainHome,
    WeekendHome,
    OtherPeoplesHome,
    // Travelling
    TravelFoot,
    TravelBicycle,
    TravelMoped,
    TravelCar,
    TravelOtherPrivate,
    TravelPublicTransport,
    // Other
    RestaurantCafePub,
    ShoppingCenter,
    Hotel,
    StreetSquarePark,
    SportsCenter,
    OtherPlace,
}

impl Subcategory {
    pub const ALL: [Subcategory; 18] = [
        Subcategory::MyFaculty,
        Subcategory::OtherFaculty,
        Subcategory::UniversityOther,
        Subcategory::MainHome,
        Subcategory::WeekendHome,
        Subcategory::OtherPeoplesHome,
        Subcategory::TravelFoot,
        Subcategory::TravelBicycle,
        Subcategory::TravelMoped,
        Subcategory::TravelCar,
        Subcategory::TravelOtherPrivate,
        Subcategory::TravelPublicTransport,
        Subcategory::RestaurantCafePub,
        Subcategory::ShoppingCenter,
        Subcategory::Hotel,
        Subcategory::StreetSquarePark,
        Subcategory::SportsCenter,
        Subcategory::OtherPlace,
    ];

    pub fn index(self) -> usize {
        Subcategory::ALL.iter().position(|s| *s == self).unwrap()
    }

    pub fn from_index(i: usize) -> Option<Subcategory> {
        Subcategory::ALL.get(i).copied()
    }

    pub fn main(self) -> MainCategory {
        use Subcategory::*;
        match self {
            MyFaculty | OtherFaculty | UniversityOther => MainCategory::University,
            MainHome | WeekendHome | OtherPeoplesHome => MainCategory::Home,
            TravelFoot | TravelBicycle | TravelMoped | TravelCar | TravelOtherPrivate
            | TravelPublicTransport => MainCategory::Travelling,
            RestaurantCafePub | ShoppingCenter | Hotel | StreetSquarePark | SportsCenter
            | OtherPlace => MainCategory::Other,
        }
    }

    pub fn name(self) -> &'static str {
        use Subcategory::*;
        match self {
            MyFaculty => "my_faculty",
            OtherFaculty => "other_faculty",
            UniversityOther => "university_other",
            MainHome => "main_home",
            WeekendHome => "weekend_home",
            OtherPeoplesHome => "other_peoples_home",
            TravelFoot => "travel_foot",
            TravelBicycle => "travel_bicycle",
            TravelMoped => "travel_moped",
            TravelCar => "travel_car",
            TravelOtherPrivate => "travel_other_private",
            TravelPublicTransport => "travel_public_transport",
            RestaurantCafePub => "restaurant_cafe_pub",
            ShoppingCenter => "shopping_center",
            Hotel => "hotel",
            StreetSquarePark => "street_square_park",
            SportsCenter => "sports_center",
            OtherPlace => "other_place",
        }
    }

    pub fn from_name(s: &str) -> Option<Subcategory> {
        Subcategory::ALL.iter().copied().find(|c| c.name() == s)
    }
}

/// A location label as asserted by a user or by the machine.
///
/// Diary answers always carry the subcategory. A machine label produced by a
/// model that learns at main-category granularity carries none.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Label {
    pub main: MainCategory,
    pub sub: Option<Subcategory>,
}

impl Label {
    pub fn from_sub(sub: Subcategory) -> Label {
        Label {
            main: sub.main(),
            sub: Some(sub),
        }
    }

    pub fn main_only(main: MainCategory) -> Label {
        Label { main, sub: None }
    }

    pub fn name(&self) -> String {
        match self.sub {
            Some(s) => format!("{}/{}", self.main.name(), s.name()),
            None => self.main.name().to_string(),
        }
    }
}

/// Index of a class in the learner's output space.
pub type ClassId = usize;

/// Granularity at which the learner's class space is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    #[default]
    MainCategory,
    Subcategory,
}

/// The learner's ordered class space at a chosen granularity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Taxonomy {
    pub granularity: Granularity,
}

impl Taxonomy {
    pub fn new(granularity: Granularity) -> Taxonomy {
        Taxonomy { granularity }
    }

    pub fn num_classes(&self) -> usize {
        match self.granularity {
            Granularity::MainCategory => MainCategory::ALL.len(),
            Granularity::Subcategory => Subcategory::ALL.len(),
        }
    }

    /// Class the given label falls in.
    ///
    /// At subcategory granularity a main-only label (no subcategory) is not
    /// projectable and is a usage error.
    pub fn class_of(&self, label: Label) -> Result<ClassId> {
        match self.granularity {
            Granularity::MainCategory => Ok(label.main.index()),
            Granularity::Subcategory => label
                .sub
                .map(|s| s.index())
                .ok_or_else(|| Error::Usage("label has no subcategory".into())),
        }
    }

    /// Canonical label for a class (main-only at main granularity).
    pub fn label_of(&self, class: ClassId) -> Result<Label> {
        match self.granularity {
            Granularity::MainCategory => MainCategory::ALL
                .get(class)
                .map(|m| Label::main_only(*m))
                .ok_or_else(|| Error::Usage(format!("class {class} out of range"))),
            Granularity::Subcategory => Subcategory::from_index(class)
                .map(Label::from_sub)
                .ok_or_else(|| Error::Usage(format!("class {class} out of range"))),
        }
    }

    pub fn class_name(&self, class: ClassId) -> String {
        match self.granularity {
            Granularity::MainCategory => MainCategory::ALL
                .get(class)
                .map(|m| m.name().to_string())
                .unwrap_or_else(|| format!("class{class}")),
            Granularity::Subcategory => Subcategory::from_index(class)
                .map(|s| s.name().to_string())
                .unwrap_or_else(|| format!("class{class}")),
        }
    }

    pub fn class_names(&self) -> Vec<String> {
        (0..self.num_classes()).map(|c| self.class_name(c)).collect()
    }
}
