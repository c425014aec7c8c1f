use std::collections::HashMap;
use std::sync::Arc;

use super::{Location, ModelError, Vehicle};

/// Square matrix of travel seconds between registered location ids.
#[derive(Debug, Clone, PartialEq)]
pub struct TravelMatrix {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    seconds: Vec<f64>,
}

impl TravelMatrix {
    pub fn new(ids: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self, ModelError> {
        let n = ids.len();
        if rows.len() != n {
            return Err(ModelError::BadMatrix(format!(
                "{} ids but {} rows",
                n,
                rows.len()
            )));
        }
        let mut index = HashMap::with_capacity(n);
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(ModelError::BadMatrix(format!("duplicate id {id:?}")));
            }
        }
        let mut seconds = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(ModelError::BadMatrix(format!(
                    "row {} has {} entries, expected {n}",
                    i + 1,
                    row.len()
                )));
            }
            seconds.extend(row);
        }
        let m = Self {
            ids,
            index,
            seconds,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let n = self.ids.len();
        for i in 0..n {
            for j in 0..n {
                let v = self.seconds[i * n + j];
                if !(v.is_finite() && v >= 0.0) {
                    return Err(ModelError::BadMatrix(format!(
                        "entry ({}, {}) = {v} is not a finite non-negative number",
                        self.ids[i], self.ids[j]
                    )));
                }
                if i == j && v != 0.0 {
                    return Err(ModelError::BadMatrix(format!(
                        "diagonal entry for {} is {v}, expected 0",
                        self.ids[i]
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.seconds[i * self.ids.len() + j]
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum TravelModel {
    /// Straight-line distance divided by the vehicle's speed.
    #[default]
    Euclidean,
    /// Fixed seconds between registered location ids; vehicle speed is ignored.
    Matrix(Arc<TravelMatrix>),
}

impl TravelModel {
    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            TravelModel::Euclidean => Ok(()),
            TravelModel::Matrix(m) => m.validate(),
        }
    }

    /// Matrix index of a location, or an error if it is not registered.
    pub fn index_of(&self, loc: &Location) -> Result<Option<usize>, ModelError> {
        match self {
            TravelModel::Euclidean => Ok(None),
            TravelModel::Matrix(m) => loc
                .id
                .as_deref()
                .and_then(|id| m.index_of(id))
                .map(Some)
                .ok_or_else(|| ModelError::UnknownLocation(loc.id.clone())),
        }
    }
}

/// Seconds for `vehicle` to travel from `a` to `b`.
pub fn travel_time(
    a: &Location,
    b: &Location,
    model: &TravelModel,
    vehicle: &Vehicle,
) -> Result<f64, ModelError> {
    match model {
        TravelModel::Euclidean => Ok(a.point.distance(&b.point) / vehicle.speed),
        TravelModel::Matrix(m) => {
            if a == b {
                return Ok(0.0);
            }
            let i = model.index_of(a)?.expect("matrix index");
            let j = model.index_of(b)?.expect("matrix index");
            Ok(m.get(i, j))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v() -> Vehicle {
        Vehicle::new("v", 0.0, 0.0, 10.0)
    }

    #[test]
    fn identity_is_zero() {
        let o = Location::at(0.0, 0.0);
        assert_eq!(travel_time(&o, &o, &TravelModel::Euclidean, &v()).unwrap(), 0.0);
        let m = TravelMatrix::new(vec!["a".into()], vec![vec![0.0]]).unwrap();
        let model = TravelModel::Matrix(Arc::new(m));
        assert_eq!(travel_time(&o, &o, &model, &v()).unwrap(), 0.0);
    }

    #[test]
    fn euclidean_at_ten_meters_per_second() {
        let t = travel_time(
            &Location::at(0.0, 0.0),
            &Location::at(600.0, 0.0),
            &TravelModel::Euclidean,
            &v(),
        )
        .unwrap();
        assert_eq!(t, 60.0);
    }

    #[test]
    fn matrix_lookup_and_unknown_ids() {
        let m = TravelMatrix::new(
            vec!["a".into(), "b".into()],
            vec![vec![0.0, 42.0], vec![40.0, 0.0]],
        )
        .unwrap();
        let model = TravelModel::Matrix(Arc::new(m));
        let a = Location::with_id(0.0, 0.0, "a");
        let b = Location::with_id(5.0, 0.0, "b");
        assert_eq!(travel_time(&a, &b, &model, &v()).unwrap(), 42.0);
        assert_eq!(travel_time(&b, &a, &model, &v()).unwrap(), 40.0);
        let c = Location::with_id(1.0, 1.0, "c");
        assert!(matches!(
            travel_time(&a, &c, &model, &v()),
            Err(ModelError::UnknownLocation(Some(_)))
        ));
        assert!(travel_time(&a, &Location::at(3.0, 3.0), &model, &v()).is_err());
    }

    #[test]
    fn matrix_rejects_bad_entries() {
        let bad_diag = TravelMatrix::new(vec!["a".into()], vec![vec![1.0]]);
        assert!(bad_diag.is_err());
        let negative = TravelMatrix::new(
            vec!["a".into(), "b".into()],
            vec![vec![0.0, -1.0], vec![1.0, 0.0]],
        );
        assert!(negative.is_err());
        let ragged = TravelMatrix::new(vec!["a".into(), "b".into()], vec![vec![0.0], vec![1.0, 0.0]]);
        assert!(ragged.is_err());
    }
}
