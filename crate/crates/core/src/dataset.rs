use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::points::Points;

/// Which file columns play the X, Y and Z roles.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnRoleMap {
    pub x_cols: Vec<String>,
    pub y_cols: Vec<String>,
    pub z_cols: Vec<String>,
    /// Z holds level codes rather than continuous values.
    #[serde(default)]
    pub z_discrete: bool,
}

impl ColumnRoleMap {
    pub fn new(x_cols: Vec<String>, y_cols: Vec<String>, z_cols: Vec<String>) -> Result<Self> {
        let roles = ColumnRoleMap { x_cols, y_cols, z_cols, z_discrete: false };
        roles.validate()?;
        Ok(roles)
    }

    /// Default names `x0.., y0.., z0..`.
    pub fn default_names(p: usize, q: usize, r: usize) -> Self {
        let names = |prefix: &str, k: usize| (0..k).map(|i| format!("{prefix}{i}")).collect();
        ColumnRoleMap { x_cols: names("x", p), y_cols: names("y", q), z_cols: names("z", r), z_discrete: false }
    }

    pub fn validate(&self) -> Result<()> {
        for (role, cols) in [("x", &self.x_cols), ("y", &self.y_cols), ("z", &self.z_cols)] {
            if cols.is_empty() {
                return Err(Error::input(format!("role {role} has no columns")));
            }
        }
        let mut all: Vec<&String> = self.x_cols.iter().chain(&self.y_cols).chain(&self.z_cols).collect();
        all.sort();
        if let Some(w) = all.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::input(format!("column {} is assigned to more than one role", w[0])));
        }
        Ok(())
    }

    /// Parses `x=a,b;y=c;z=d[;zkind=discrete]`.
    pub fn parse(s: &str) -> Result<Self> {
        let mut roles = ColumnRoleMap { x_cols: vec![], y_cols: vec![], z_cols: vec![], z_discrete: false };
        for part in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) =
                part.split_once('=').ok_or_else(|| Error::input(format!("role entry '{part}' is not key=value")))?;
            let cols = || value.split(',').map(|c| c.trim().to_owned()).filter(|c| !c.is_empty()).collect();
            match key.trim() {
                "x" => roles.x_cols = cols(),
                "y" => roles.y_cols = cols(),
                "z" => roles.z_cols = cols(),
                "zkind" => match value.trim() {
                    "discrete" => roles.z_discrete = true,
                    "continuous" => roles.z_discrete = false,
                    other => return Err(Error::input(format!("unknown zkind '{other}'"))),
                },
                other => return Err(Error::input(format!("unknown role '{other}'"))),
            }
        }
        roles.validate()?;
        Ok(roles)
    }
}

impl std::fmt::Display for ColumnRoleMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "x={};y={};z={}", self.x_cols.join(","), self.y_cols.join(","), self.z_cols.join(","))?;
        if self.z_discrete {
            write!(f, ";zkind=discrete")?;
        }
        Ok(())
    }
}

/// Aligned samples `(X_i, Y_i, Z_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Points,
    y: Points,
    z: Points,
    roles: ColumnRoleMap,
}

impl Dataset {
    pub fn new(x: Points, y: Points, z: Points) -> Result<Self> {
        let roles = ColumnRoleMap::default_names(x.dim(), y.dim(), z.dim());
        Dataset::with_roles(x, y, z, roles)
    }

    pub fn with_roles(x: Points, y: Points, z: Points, roles: ColumnRoleMap) -> Result<Self> {
        let n = x.len();
        if y.len() != n || z.len() != n {
            return Err(Error::input(format!(
                "role blocks have different row counts: x={}, y={}, z={}",
                n,
                y.len(),
                z.len()
            )));
        }
        if n == 0 {
            return Err(Error::input("dataset has no rows"));
        }
        roles.validate()?;
        if roles.x_cols.len() != x.dim() || roles.y_cols.len() != y.dim() || roles.z_cols.len() != z.dim() {
            return Err(Error::input("column names do not match block dimensions"));
        }
        Ok(Dataset { x, y, z, roles })
    }

    /// Marks Z as discrete level codes.
    pub fn discrete_z(mut self) -> Self {
        self.roles.z_discrete = true;
        self
    }

    pub fn x(&self) -> &Points {
        &self.x
    }

    pub fn y(&self) -> &Points {
        &self.y
    }

    pub fn z(&self) -> &Points {
        &self.z
    }

    pub fn roles(&self) -> &ColumnRoleMap {
        &self.roles
    }

    pub fn is_z_discrete(&self) -> bool {
        self.roles.z_discrete
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Reorders all three blocks by `index`.
    pub fn permute_rows(&self, index: &[usize]) -> Dataset {
        Dataset { x: self.x.select(index), y: self.y.select(index), z: self.z.select(index), roles: self.roles.clone() }
    }

    /// Replaces the Y rows by `Y[index]`, leaving X and Z in place.
    pub fn permute_y(&self, index: &[usize]) -> Dataset {
        Dataset { x: self.x.clone(), y: self.y.select(index), z: self.z.clone(), roles: self.roles.clone() }
    }
}
