//! Built-in reference systems with closed-form polar dynamics.
//!
//! Every entry has the rotation-invariant shape
//!
//! ```text
//! Ẋ = [[L(a), −1], [1, L(a)]] X + c(a) |X|² X + d(a) |X|⁴ X
//! ```
//!
//! so in polar coordinates `θ̇ = 1` and `ṙ = r (L + c r² + d r⁴)`. Expanding
//! `|X|² X` and `|X|⁴ X` gives the coefficient tables
//!
//! ```text
//! σ30¹ = σ12¹ = σ21² = σ03² = c
//! σ50¹ = σ14¹ = σ41² = σ05² = d,   σ32¹ = σ23² = 2d
//! ```

use crate::field::{ParamCurve, ParamField, SignedPower};

pub struct AtlasEntry {
    pub name: &'static str,
    /// Builds the family; the argument is the exponent `β` and is ignored by
    /// every entry except `infinity`.
    pub builder: fn(f64) -> ParamField,
    pub citation: &'static str,
}

pub fn entries() -> Vec<AtlasEntry> {
    vec![
        AtlasEntry {
            name: "multi2",
            builder: |_| multi2(),
            citation: "two nested cycles (stable r = 2a^(1/2)/3^(1/2), unstable r = 2a^(1/2)) \
                       emerge at a degenerate supercritical point of second kind; \
                       L = a^3, c = -a^2, d = 3a/16; polar rdot = a r (a^2 - a r^2 + 3r^4/16)",
        },
        AtlasEntry {
            name: "semistable2",
            builder: |_| semistable2(),
            citation: "one semistable cycle r = a^(1/2) emerges at a degenerate supercritical \
                       point of second kind; L = a^3, c = -2a^2, d = a; \
                       polar rdot = a r (r^2 - a)^2",
        },
        AtlasEntry {
            name: "persist1",
            builder: |_| persist1(),
            citation: "first kind: the stable cycle r = 1 persists through the critical value; \
                       L = a, c = -a; polar rdot = a r (1 - r^2)",
        },
        AtlasEntry {
            name: "persist-semi",
            builder: |_| persist_semi(),
            citation: "first kind: the semistable cycle r = 1 persists through the critical \
                       value; L = a, c = -2a, d = a; polar rdot = a r (1 - r^2)^2",
        },
        AtlasEntry {
            name: "infinity",
            builder: infinity,
            citation: "first kind with a cycle r = a^(-beta/2) arriving from infinity; \
                       L = a, c = -a sign(a)|a|^beta = -|a|^(1+beta); \
                       polar rdot = a r (1 - sign(a)|a|^beta r^2)",
        },
        AtlasEntry {
            name: "cubic-std",
            builder: |_| cubic_std(),
            citation: "reference system, not one of the degenerate examples: non-degenerate \
                       supercritical point; L = a, c = -1; polar rdot = r (a - r^2)",
        },
    ]
}

pub fn by_name(name: &str) -> Option<AtlasEntry> {
    entries().into_iter().find(|e| e.name == name)
}

fn rotation_family(linear: ParamCurve, cubic: ParamCurve, quintic: Option<ParamCurve>) -> ParamField {
    let degree = if quintic.is_some() { 5 } else { 3 };
    let mut vf = ParamField::new(degree, 0.0).expect("valid degree");
    let mut put = |m, k, l, c: ParamCurve| vf.insert(m, k, l, c).expect("valid atlas term");
    put(1, 1, 0, linear.clone());
    put(1, 0, 1, ParamCurve::constant(-1.0));
    put(2, 1, 0, ParamCurve::constant(1.0));
    put(2, 0, 1, linear);

    for (m, k, l) in [(1, 3, 0), (1, 1, 2), (2, 2, 1), (2, 0, 3)] {
        put(m, k, l, cubic.clone());
    }
    if let Some(d) = quintic {
        let twice = ParamCurve {
            poly: d.poly.iter().map(|(&p, &c)| (p, 2.0 * c)).collect(),
            signed_power: d.signed_power.map(|sp| SignedPower { c: 2.0 * sp.c, ..sp }),
        };
        for (m, k, l) in [(1, 5, 0), (1, 1, 4), (2, 4, 1), (2, 0, 5)] {
            put(m, k, l, d.clone());
        }
        put(1, 3, 2, twice.clone());
        put(2, 2, 3, twice);
    }
    vf
}

/// `L = a³`, `c = −a²`, `d = 3a/16`.
pub fn multi2() -> ParamField {
    rotation_family(
        ParamCurve::monomial(3, 1.0),
        ParamCurve::monomial(2, -1.0),
        Some(ParamCurve::monomial(1, 3.0 / 16.0)),
    )
}

/// `L = a³`, `c = −2a²`, `d = a`.
pub fn semistable2() -> ParamField {
    rotation_family(
        ParamCurve::monomial(3, 1.0),
        ParamCurve::monomial(2, -2.0),
        Some(ParamCurve::monomial(1, 1.0)),
    )
}

/// `L = a`, `c = −a`.
pub fn persist1() -> ParamField {
    rotation_family(ParamCurve::monomial(1, 1.0), ParamCurve::monomial(1, -1.0), None)
}

/// `L = a`, `c = −2a`, `d = a`.
pub fn persist_semi() -> ParamField {
    rotation_family(
        ParamCurve::monomial(1, 1.0),
        ParamCurve::monomial(1, -2.0),
        Some(ParamCurve::monomial(1, 1.0)),
    )
}

/// `L = a`, `c = −a · sign(a)|a|^β = −|a|^(1+β)`.
pub fn infinity(beta: f64) -> ParamField {
    rotation_family(
        ParamCurve::monomial(1, 1.0),
        ParamCurve::signed(SignedPower::even(1.0 + beta, -1.0)),
        None,
    )
}

/// `L = a`, `c = −1`.
pub fn cubic_std() -> ParamField {
    rotation_family(ParamCurve::monomial(1, 1.0), ParamCurve::constant(-1.0), None)
}

/// Closed-form polar radial rate `ṙ / r` of an atlas entry, used as an oracle.
pub fn polar_rate(name: &str, beta: f64, a: f64, r: f64) -> Option<f64> {
    let r2 = r * r;
    let v = match name {
        "multi2" => a * (a * a - a * r2 + 3.0 / 16.0 * r2 * r2),
        "semistable2" => a * (r2 - a).powi(2),
        "persist1" => a * (1.0 - r2),
        "persist-semi" => a * (1.0 - r2).powi(2),
        "infinity" => a * (1.0 - a.signum() * a.abs().powf(beta) * r2),
        "cubic-std" => a - r2,
        _ => return None,
    };
    Some(v)
}
