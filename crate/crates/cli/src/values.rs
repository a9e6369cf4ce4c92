//! Parsers for the structured config values (profiles, domains, points).

use radgas::domain3d::{ConvexDomain, SphereGrid};
use radgas::slab::BoundaryProfile;
use radgas::three_level::C0Spec;
use radgas::Vec3;

use crate::config::ConfigError;

fn bad(key: &str, value: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::BadValue { key: key.into(), value: value.into(), msg: msg.into() }
}

fn reals(key: &str, value: &str, list: &str) -> Result<Vec<f64>, ConfigError> {
    list.split(',')
        .map(|s| s.trim().parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| bad(key, value, format!("`{s}` is not a real number"))))
        .collect()
}

fn split_tag(value: &str) -> (&str, &str) {
    value.split_once(':').unwrap_or((value, ""))
}

/// `zero`, `constant:c`, `planck:T`, `polynomial:c0,c1,...` or
/// `tabulated:FILE` (lines `mu value`, `mu,value` also accepted).
pub fn boundary_profile(key: &str, value: &str, epsilon0: f64) -> Result<BoundaryProfile, ConfigError> {
    let (tag, rest) = split_tag(value);
    let one = |rest: &str| -> Result<f64, ConfigError> {
        match reals(key, value, rest)?.as_slice() {
            [v] => Ok(*v),
            _ => Err(bad(key, value, "expected exactly one number")),
        }
    };
    let profile = match tag {
        "zero" => BoundaryProfile::Zero,
        "constant" => BoundaryProfile::Constant(one(rest)?),
        "planck" => BoundaryProfile::Planck { t: one(rest)?, epsilon0 },
        "polynomial" => BoundaryProfile::Polynomial(reals(key, value, rest)?),
        "tabulated" => {
            let text = std::fs::read_to_string(rest).map_err(|e| bad(key, value, e.to_string()))?;
            let (mut mu, mut values) = (Vec::new(), Vec::new());
            for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
                let joined = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect::<Vec<_>>().join(",");
                let nums = reals(key, value, &joined)?;
                if nums.len() != 2 {
                    return Err(bad(key, value, format!("tabulated line `{line}` needs two numbers")));
                }
                mu.push(nums[0]);
                values.push(nums[1]);
            }
            BoundaryProfile::Tabulated { mu, values }
        }
        _ => return Err(bad(key, value, "expected zero | constant:c | planck:T | polynomial:c0,.. | tabulated:FILE")),
    };
    profile.validate().map_err(|e| bad(key, value, e.to_string()))?;
    let nonnegative = match &profile {
        BoundaryProfile::Constant(c) => *c >= 0.0,
        BoundaryProfile::Tabulated { values, .. } => values.iter().all(|v| *v >= 0.0),
        BoundaryProfile::Polynomial(_) => (0..=100).all(|i| profile.eval(i as f64 / 100.0) >= 0.0),
        _ => true,
    };
    if !nonnegative {
        return Err(bad(key, value, "incoming intensity must be nonnegative"));
    }
    Ok(profile)
}

/// `ball:cx,cy,cz,r` or `box:x0,y0,z0,x1,y1,z1`.
pub fn domain(key: &str, value: &str) -> Result<ConvexDomain, ConfigError> {
    let (tag, rest) = split_tag(value);
    let v = reals(key, value, rest)?;
    let d = match (tag, v.as_slice()) {
        ("ball", [x, y, z, r]) => ConvexDomain::ball(Vec3::new(*x, *y, *z), *r),
        ("box", [a, b, c, d, e, f]) => ConvexDomain::cuboid(Vec3::new(*a, *b, *c), Vec3::new(*d, *e, *f)),
        _ => return Err(bad(key, value, "expected ball:cx,cy,cz,r or box:x0,y0,z0,x1,y1,z1")),
    };
    d.map_err(|e| bad(key, value, e.to_string()))
}

/// Incoming angular profile on the sphere: `zero`, `constant:c`,
/// `one-sided:c` (c for n₁ > 0), `linear:a,b` (a + b n₁).
pub fn sphere_profile(key: &str, value: &str, sphere: &SphereGrid) -> Result<Vec<f64>, ConfigError> {
    let (tag, rest) = split_tag(value);
    let f: Vec<f64> = match (tag, reals(key, value, rest).unwrap_or_default().as_slice()) {
        ("zero", _) => vec![0.0; sphere.len()],
        ("constant", [c]) => vec![*c; sphere.len()],
        ("one-sided", [c]) => sphere.tabulate(|n| if n.x > 0.0 { *c } else { 0.0 }),
        ("linear", [a, b]) => sphere.tabulate(|n| a + b * n.x),
        _ => return Err(bad(key, value, "expected zero | constant:c | one-sided:c | linear:a,b")),
    };
    if f.iter().any(|v| *v < 0.0) {
        return Err(bad(key, value, "profile must be nonnegative on the sphere"));
    }
    Ok(f)
}

/// `x,y,z;x,y,z;...`
pub fn points(key: &str, value: &str) -> Result<Vec<Vec3>, ConfigError> {
    value
        .split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|p| match reals(key, value, p)?.as_slice() {
            [x, y, z] => Ok(Vec3::new(*x, *y, *z)),
            _ => Err(bad(key, value, format!("point `{p}` needs three coordinates"))),
        })
        .collect()
}

/// A number, or `from-mass:m0`.
pub fn c0_spec(key: &str, value: &str) -> Result<C0Spec, ConfigError> {
    if let Some(m) = value.strip_prefix("from-mass:") {
        let m0 = m.trim().parse().map_err(|_| bad(key, value, "from-mass needs a number"))?;
        return Ok(C0Spec::FromMass { m0 });
    }
    value.trim().parse().map(C0Spec::Value).map_err(|_| bad(key, value, "expected a number or from-mass:m0"))
}

/// `none` or a number.
pub fn optional_real(key: &str, value: &str) -> Result<Option<f64>, ConfigError> {
    if value == "none" {
        return Ok(None);
    }
    value.trim().parse().map(Some).map_err(|_| bad(key, value, "expected `none` or a number"))
}

pub fn vec3(key: &str, value: &str) -> Result<Vec3, ConfigError> {
    match reals(key, value, value)?.as_slice() {
        [x, y, z] => Ok(Vec3::new(*x, *y, *z)),
        _ => Err(bad(key, value, "expected x,y,z")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_profiles() {
        assert_eq!(boundary_profile("j0", "constant:0.5", 1.0).unwrap(), BoundaryProfile::Constant(0.5));
        assert_eq!(boundary_profile("j0", "polynomial:0,1", 1.0).unwrap(), BoundaryProfile::Polynomial(vec![0.0, 1.0]));
        assert!(boundary_profile("j0", "constant:-1", 1.0).is_err());
        assert!(boundary_profile("j0", "wavy:1", 1.0).is_err());
    }

    #[test]
    fn parses_points_and_domains() {
        assert_eq!(points("samples", "0.5,0,0; 1,2,3").unwrap().len(), 2);
        assert!(points("samples", "0.5,0").is_err());
        assert!(domain("domain", "ball:0,0,0,1").is_ok());
        assert!(domain("domain", "box:0,0,0,1,1").is_err());
        assert_eq!(c0_spec("c0", "from-mass:2").unwrap(), C0Spec::FromMass { m0: 2.0 });
    }
}
