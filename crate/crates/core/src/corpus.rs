//! Attribute pools and person sampling.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use chrono::NaiveDate;
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

const BUILTIN_POOL: &str = include_str!("../data/pool.json");

/// Earliest and latest birthdates a profile can carry.
pub const BIRTHDATE_MIN: (i32, u32, u32) = (1950, 1, 1);
pub const BIRTHDATE_MAX: (i32, u32, u32) = (2001, 12, 31);

/// Attributes a biography can state about its person.
///
/// `Birthdate` and `Age` are alternatives: a profile carries exactly one of them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attribute {
    Birthdate,
    Age,
    Birthplace,
    Hobby,
    University,
    Major,
    WorkCity,
}

impl Attribute {
    pub const ALL: [Attribute; 7] = [
        Attribute::Birthdate,
        Attribute::Age,
        Attribute::Birthplace,
        Attribute::Hobby,
        Attribute::University,
        Attribute::Major,
        Attribute::WorkCity,
    ];

    /// Attributes sampled from a pool (everything except the birth field).
    pub const POOLED: [Attribute; 5] = [
        Attribute::Birthplace,
        Attribute::Hobby,
        Attribute::University,
        Attribute::Major,
        Attribute::WorkCity,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Attribute::Birthdate => "birthdate",
            Attribute::Age => "age",
            Attribute::Birthplace => "birthplace",
            Attribute::Hobby => "hobby",
            Attribute::University => "university",
            Attribute::Major => "major",
            Attribute::WorkCity => "work_city",
        }
    }

    /// Wording used in questions ("What is the {label} of ...?").
    pub fn label(self) -> &'static str {
        match self {
            Attribute::Birthdate => "birthday",
            Attribute::Age => "age",
            Attribute::Birthplace => "birthplace",
            Attribute::Hobby => "hobby",
            Attribute::University => "university",
            Attribute::Major => "major",
            Attribute::WorkCity => "working city",
        }
    }

    pub fn from_key(key: &str) -> Option<Attribute> {
        [
            Attribute::Birthdate,
            Attribute::Age,
            Attribute::Birthplace,
            Attribute::Hobby,
            Attribute::University,
            Attribute::Major,
            Attribute::WorkCity,
        ]
        .into_iter()
        .find(|a| a.key() == key)
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FullName {
    pub first: String,
    pub middle: String,
    pub last: String,
}

impl fmt::Display for FullName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.first, self.middle, self.last)
    }
}

/// Whether profiles carry a birthdate or an age.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum BirthMode {
    Birthdate,
    Age { min: u32, max: u32 },
}

impl BirthMode {
    pub const DEFAULT_AGE: BirthMode = BirthMode::Age { min: 20, max: 70 };

    pub fn attribute(self) -> Attribute {
        match self {
            BirthMode::Birthdate => Attribute::Birthdate,
            BirthMode::Age { .. } => Attribute::Age,
        }
    }
}

/// One person's sampled attributes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PersonProfile {
    pub name: FullName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub birthdate: Option<NaiveDate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub age: Option<u32>,
    pub birthplace: String,
    pub hobby: String,
    pub university: String,
    pub major: String,
    pub work_city: String,
}

impl PersonProfile {
    pub fn full_name(&self) -> String {
        self.name.to_string()
    }

    /// The birth attribute this profile carries.
    pub fn birth_attribute(&self) -> Attribute {
        if self.age.is_some() {
            Attribute::Age
        } else {
            Attribute::Birthdate
        }
    }

    /// The six attribute slots in rendering order.
    pub fn attributes(&self) -> [Attribute; 6] {
        [
            self.birth_attribute(),
            Attribute::Birthplace,
            Attribute::Hobby,
            Attribute::University,
            Attribute::Major,
            Attribute::WorkCity,
        ]
    }

    /// Attribute value as it appears in text; dates are ISO `YYYY-MM-DD`.
    pub fn value(&self, attribute: Attribute) -> Option<String> {
        match attribute {
            Attribute::Birthdate => self.birthdate.map(|d| d.format("%Y-%m-%d").to_string()),
            Attribute::Age => self.age.map(|a| a.to_string()),
            Attribute::Birthplace => Some(self.birthplace.clone()),
            Attribute::Hobby => Some(self.hobby.clone()),
            Attribute::University => Some(self.university.clone()),
            Attribute::Major => Some(self.major.clone()),
            Attribute::WorkCity => Some(self.work_city.clone()),
        }
    }

    /// Overwrite a pooled attribute, or the birth field matching its current mode.
    pub fn set_value(&mut self, attribute: Attribute, value: &str) -> Result<()> {
        match attribute {
            Attribute::Birthdate => {
                let date = NaiveDate::parse_from_str(value, "%Y-%m-%d").map_err(|_| Error::InvalidEntry {
                    field: "birthdate".into(),
                    value: value.into(),
                    reason: "not an ISO date",
                })?;
                self.birthdate = Some(date);
                self.age = None;
            }
            Attribute::Age => {
                let age = value
                    .parse::<u32>()
                    .ok()
                    .filter(|a| *a > 0)
                    .ok_or_else(|| Error::InvalidEntry {
                        field: "age".into(),
                        value: value.into(),
                        reason: "not a positive integer",
                    })?;
                self.age = Some(age);
                self.birthdate = None;
            }
            Attribute::Birthplace => self.birthplace = value.into(),
            Attribute::Hobby => self.hobby = value.into(),
            Attribute::University => self.university = value.into(),
            Attribute::Major => self.major = value.into(),
            Attribute::WorkCity => self.work_city = value.into(),
        }
        Ok(())
    }
}

/// Value lists every profile attribute is drawn from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributePool {
    pub first_names: Vec<String>,
    pub middle_names: Vec<String>,
    pub last_names: Vec<String>,
    pub birthplaces: Vec<String>,
    pub hobbies: Vec<String>,
    pub universities: Vec<String>,
    pub majors: Vec<String>,
    pub work_cities: Vec<String>,
}

/// Field names of the pool file, in file order.
pub const POOL_FIELDS: [&str; 8] = [
    "first_names",
    "middle_names",
    "last_names",
    "birthplaces",
    "hobbies",
    "universities",
    "majors",
    "work_cities",
];

impl AttributePool {
    /// The pool shipped with the crate.
    pub fn builtin() -> AttributePool {
        AttributePool::from_json_str(BUILTIN_POOL).expect("shipped pool is valid")
    }

    pub fn from_json_str(text: &str) -> Result<AttributePool> {
        let doc: Value = serde_json::from_str(text)?;
        let obj = doc.as_object().ok_or_else(|| Error::BadField {
            field: "<root>".into(),
            detail: "expected a JSON object".into(),
        })?;
        if let Some(extra) = obj.keys().find(|k| !POOL_FIELDS.contains(&k.as_str())) {
            return Err(Error::BadField {
                field: extra.clone(),
                detail: "unknown pool field".into(),
            });
        }
        let mut lists: BTreeMap<&str, Vec<String>> = BTreeMap::new();
        for field in POOL_FIELDS {
            let raw = obj
                .get(field)
                .ok_or_else(|| Error::MissingField { field: field.into() })?;
            let arr = raw.as_array().ok_or_else(|| Error::BadField {
                field: field.into(),
                detail: "expected an array of strings".into(),
            })?;
            let mut values = Vec::with_capacity(arr.len());
            for v in arr {
                let s = v.as_str().ok_or_else(|| Error::BadField {
                    field: field.into(),
                    detail: format!("non-string entry {v}"),
                })?;
                values.push(s.to_string());
            }
            lists.insert(field, values);
        }
        let mut take = |f: &str| lists.remove(f).unwrap_or_default();
        let pool = AttributePool {
            first_names: take("first_names"),
            middle_names: take("middle_names"),
            last_names: take("last_names"),
            birthplaces: take("birthplaces"),
            hobbies: take("hobbies"),
            universities: take("universities"),
            majors: take("majors"),
            work_cities: take("work_cities"),
        };
        pool.validate()?;
        Ok(pool)
    }

    pub fn field(&self, name: &str) -> Option<&[String]> {
        Some(match name {
            "first_names" => &self.first_names,
            "middle_names" => &self.middle_names,
            "last_names" => &self.last_names,
            "birthplaces" => &self.birthplaces,
            "hobbies" => &self.hobbies,
            "universities" => &self.universities,
            "majors" => &self.majors,
            "work_cities" => &self.work_cities,
            _ => return None,
        })
    }

    /// Pool backing a pooled attribute.
    pub fn values(&self, attribute: Attribute) -> Option<&[String]> {
        match attribute {
            Attribute::Birthplace => Some(&self.birthplaces),
            Attribute::Hobby => Some(&self.hobbies),
            Attribute::University => Some(&self.universities),
            Attribute::Major => Some(&self.majors),
            Attribute::WorkCity => Some(&self.work_cities),
            Attribute::Birthdate | Attribute::Age => None,
        }
    }

    pub fn name_capacity(&self) -> usize {
        self.first_names.len() * self.middle_names.len() * self.last_names.len()
    }

    pub fn validate(&self) -> Result<()> {
        for field in POOL_FIELDS {
            let values = self.field(field).unwrap_or_default();
            if values.is_empty() {
                return Err(Error::EmptyList { field: field.into() });
            }
            let mut seen = HashSet::with_capacity(values.len());
            for v in values {
                if v.trim().is_empty() {
                    return Err(invalid(field, v, "blank entry"));
                }
                if v.contains('\n') || v.contains('\r') {
                    return Err(invalid(field, v, "contains a newline"));
                }
                if v.contains("Bio [") {
                    return Err(invalid(field, v, "contains the citation marker"));
                }
                if !seen.insert(v.as_str()) {
                    return Err(Error::DuplicateEntry {
                        field: field.into(),
                        value: v.clone(),
                    });
                }
            }
        }
        Ok(())
    }
}

fn invalid(field: &str, value: &str, reason: &'static str) -> Error {
    Error::InvalidEntry {
        field: field.into(),
        value: value.into(),
        reason,
    }
}

pub fn load_pool(path: impl AsRef<Path>) -> Result<AttributePool> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    AttributePool::from_json_str(&text)
}

fn pick<'a, R: Rng + ?Sized>(rng: &mut R, values: &'a [String]) -> &'a String {
    &values[rng.random_range(0..values.len())]
}

/// One uniform draw for a pooled attribute.
pub fn sample_value<R: Rng + ?Sized>(pool: &AttributePool, attribute: Attribute, rng: &mut R) -> Result<String> {
    match attribute {
        Attribute::Birthdate => Ok(sample_birthdate(rng).format("%Y-%m-%d").to_string()),
        Attribute::Age => Err(Error::AttributeAbsent(attribute)),
        _ => Ok(pick(rng, pool.values(attribute).unwrap_or_default()).clone()),
    }
}

pub fn birthdate_bounds() -> (NaiveDate, NaiveDate) {
    let (y0, m0, d0) = BIRTHDATE_MIN;
    let (y1, m1, d1) = BIRTHDATE_MAX;
    (
        NaiveDate::from_ymd_opt(y0, m0, d0).expect("valid"),
        NaiveDate::from_ymd_opt(y1, m1, d1).expect("valid"),
    )
}

pub fn sample_birthdate<R: Rng + ?Sized>(rng: &mut R) -> NaiveDate {
    let (lo, hi) = birthdate_bounds();
    let span = (hi - lo).num_days();
    lo + chrono::Days::new(rng.random_range(0..=span) as u64)
}

pub fn sample_name<R: Rng + ?Sized>(
    pool: &AttributePool,
    rng: &mut R,
    taken_names: &HashSet<String>,
) -> Result<FullName> {
    let capacity = pool.name_capacity();
    if taken_names.len() >= capacity {
        return Err(Error::NameSpaceExhausted {
            taken: taken_names.len(),
            capacity,
        });
    }
    loop {
        let name = FullName {
            first: pick(rng, &pool.first_names).clone(),
            middle: pick(rng, &pool.middle_names).clone(),
            last: pick(rng, &pool.last_names).clone(),
        };
        if !taken_names.contains(&name.to_string()) {
            return Ok(name);
        }
    }
}

/// Draw one person with a name outside `taken_names`.
///
/// Attributes are drawn independently and uniformly, in a fixed order
/// (name, birth field, birthplace, hobby, university, major, work city).
pub fn sample_profile<R: Rng + ?Sized>(
    pool: &AttributePool,
    rng: &mut R,
    mode: BirthMode,
    taken_names: &HashSet<String>,
) -> Result<PersonProfile> {
    if let BirthMode::Age { min, max } = mode {
        if min == 0 || min > max {
            return Err(Error::InvalidAgeRange { min, max });
        }
    }
    let name = sample_name(pool, rng, taken_names)?;
    let (birthdate, age) = match mode {
        BirthMode::Birthdate => (Some(sample_birthdate(rng)), None),
        BirthMode::Age { min, max } => (None, Some(rng.random_range(min..=max))),
    };
    Ok(PersonProfile {
        name,
        birthdate,
        age,
        birthplace: pick(rng, &pool.birthplaces).clone(),
        hobby: pick(rng, &pool.hobbies).clone(),
        university: pick(rng, &pool.universities).clone(),
        major: pick(rng, &pool.majors).clone(),
        work_city: pick(rng, &pool.work_cities).clone(),
    })
}
