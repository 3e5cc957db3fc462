//! Built-in example systems, stored in the system file format.

use std::fmt;
use std::str::FromStr;

use crate::system::{parse_system, SystemDefinition};

const MOTIVATING_RECT: &str = "\
# four states, four inputs; u3 and u4 drive the same row
system motivating_rect
states: x1 x2 x3 x4
inputs: u1 u2 u3 u4
operating_point: 0 0 0 0
f:
  x2
  x3
  x4
  0
g u1:
  0
  1
  0
  0
g u2:
  0
  1
  1
  0
g u3:
  0
  0
  0
  1
g u4:
  0
  0
  0
  1
output y:
  x1
  x3
  x4
";

const MOTIVATING_SQUARE: &str = "\
system motivating_square
states: x1 x2 x3 x4
inputs: u1 u2 u3
operating_point: 0 0 0 0
f:
  x2
  x3
  x4
  0
g u1:
  0
  1
  0
  0
g u2:
  0
  1
  1
  0
g u3:
  0
  0
  0
  1
output y:
  x1
  x3
  x4
";

const EXAMPLE1: &str = "\
# u1 and u2 can each be dropped, but not both
system example1
states: x1 x2 x3 x4
inputs: u1 u2 u3
operating_point: 0 0 0 0
f:
  x2
  x4
  x4
  0
g u1:
  0
  0
  1
  0
g u2:
  0
  1
  0
  0
g u3:
  0
  0
  0
  1
output y:
  x1
  x3
  x4
";

/// Rigid body with body-frame forces and torques. Attitude is roll, pitch
/// and yaw with `R = Rz(psi) Ry(theta) Rx(phi)`. The mass and inertia are
/// not tied to any vehicle: m = 1 kg, J = diag(0.01, 0.01, 0.02) kg m^2.
const RIGID_BODY: &str = "\
system rigid_body
params: m=1 g=9.81 Jx=0.01 Jy=0.01 Jz=0.02
states: p1 p2 p3 v1 v2 v3 phi theta psi w1 w2 w3
inputs: f1 f2 f3 tau1 tau2 tau3
operating_point: 0 0 0 0 0 0 0 0 0 0 0 0
box: ±10 ±10 ±10 ±2 ±2 ±2 ±3 ±1.2 ±3 ±2 ±2 ±2
input_point: 0 0 9.81 0 0 0
input_box: ±10 ±10 ±10 ±1 ±1 ±1
f:
  v1
  v2
  v3
  0
  0
  -g
  w1 + sin(phi)*tan(theta)*w2 + cos(phi)*tan(theta)*w3
  cos(phi)*w2 - sin(phi)*w3
  sin(phi)*cos(theta)^-1*w2 + cos(phi)*cos(theta)^-1*w3
  -(Jz - Jy)/Jx*w2*w3
  -(Jx - Jz)/Jy*w1*w3
  -(Jy - Jx)/Jz*w1*w2
g f1:
  0
  0
  0
  cos(psi)*cos(theta)/m
  sin(psi)*cos(theta)/m
  -sin(theta)/m
  0
  0
  0
  0
  0
  0
g f2:
  0
  0
  0
  (cos(psi)*sin(theta)*sin(phi) - sin(psi)*cos(phi))/m
  (sin(psi)*sin(theta)*sin(phi) + cos(psi)*cos(phi))/m
  cos(theta)*sin(phi)/m
  0
  0
  0
  0
  0
  0
g f3:
  0
  0
  0
  (cos(psi)*sin(theta)*cos(phi) + sin(psi)*sin(phi))/m
  (sin(psi)*sin(theta)*cos(phi) - cos(psi)*sin(phi))/m
  cos(theta)*cos(phi)/m
  0
  0
  0
  0
  0
  0
g tau1:
  0
  0
  0
  0
  0
  0
  0
  0
  0
  1/Jx
  0
  0
g tau2:
  0
  0
  0
  0
  0
  0
  0
  0
  0
  0
  1/Jy
  0
g tau3:
  0
  0
  0
  0
  0
  0
  0
  0
  0
  0
  0
  1/Jz
output y:
  p1
  p2
  p3
  phi
  theta
  psi
";

/// First-order omnidirectional base: forward speed v1, yaw rate v2 and
/// lateral speed v3 in the body frame.
const MECANUM: &str = "\
system mecanum
states: x y theta
inputs: v1 v2 v3
operating_point: 0 0 0
box: ±2 ±2 ±3
input_point: 1 0 0
input_box: ±1.5 ±1 ±1
f:
  0
  0
  0
g v1:
  cos(theta)
  sin(theta)
  0
g v2:
  0
  0
  1
g v3:
  -sin(theta)
  cos(theta)
  0
output y:
  x
  y
  theta
";

/// Reference meld of the rigid body on `ℓ = (2,2,2,0,0,0)`: row number,
/// removed forces, dropped pose channels (one-based) and the expression
/// whose zero set the decoupling determinant must share.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MeldRow {
    pub number: usize,
    pub a: &'static [usize],
    pub o: &'static [usize],
    pub exclusion: &'static str,
}

impl MeldRow {
    pub fn mode(&self) -> &'static str {
        match self.a.len() {
            0 => "FM",
            1 => "DF",
            _ => "QM",
        }
    }

    pub fn label(&self) -> String {
        if self.a.is_empty() {
            "FM".to_string()
        } else {
            format!("{}#{}", self.mode(), self.number)
        }
    }
}

const C_EULER: &str = "f1_d0*cos(theta) + f3_d0*cos(phi)*sin(theta) + f2_d0*sin(phi)*sin(theta)";

/// Melds of the rigid body under two integrators on each force.
pub const RIGID_BODY_MELDS: [MeldRow; 18] = [
    MeldRow {
        number: 1,
        a: &[],
        o: &[],
        exclusion: "1",
    },
    MeldRow {
        number: 2,
        a: &[1],
        o: &[5],
        exclusion: "-f3_d0*cos(phi) - f2_d0*sin(phi)",
    },
    MeldRow {
        number: 3,
        a: &[1],
        o: &[6],
        exclusion: "f2_d0*cos(phi) - f3_d0*sin(phi)",
    },
    MeldRow {
        number: 4,
        a: &[2],
        o: &[4],
        exclusion: "f3_d0",
    },
    MeldRow {
        number: 5,
        a: &[2],
        o: &[6],
        exclusion: "f3_d0*sin(theta) + f1_d0*cos(phi)*cos(theta)",
    },
    MeldRow {
        number: 6,
        a: &[2],
        o: &[5],
        exclusion: "f1_d0*sin(phi)",
    },
    MeldRow {
        number: 7,
        a: &[3],
        o: &[5],
        exclusion: "f1_d0*cos(phi)",
    },
    MeldRow {
        number: 8,
        a: &[3],
        o: &[4],
        exclusion: "f2_d0",
    },
    MeldRow {
        number: 9,
        a: &[3],
        o: &[6],
        exclusion: "f2_d0*sin(theta) + f1_d0*cos(theta)*sin(phi)",
    },
    MeldRow {
        number: 10,
        a: &[1, 2],
        o: &[4, 6],
        exclusion: "-f3_d0^2*sin(phi) - f2_d0*f3_d0*cos(phi)",
    },
    MeldRow {
        number: 11,
        a: &[2, 3],
        o: &[4, 6],
        exclusion: "f1_d0*(f2_d0*cos(phi) - f3_d0*sin(phi))",
    },
    MeldRow {
        number: 12,
        a: &[1, 3],
        o: &[4, 6],
        exclusion: "f2_d0*(f2_d0*cos(phi) - f3_d0*sin(phi))",
    },
    MeldRow {
        number: 13,
        a: &[1, 2],
        o: &[4, 5],
        exclusion: "f3_d0*(f3_d0*cos(phi) + f2_d0*sin(phi))",
    },
    MeldRow {
        number: 14,
        a: &[1, 3],
        o: &[4, 5],
        exclusion: "-f2_d0*(f3_d0*cos(phi) + f2_d0*sin(phi))",
    },
    MeldRow {
        number: 15,
        a: &[2, 3],
        o: &[4, 5],
        exclusion: "f1_d0*(f3_d0*cos(phi) + f2_d0*sin(phi))",
    },
    MeldRow {
        number: 16,
        a: &[1, 2],
        o: &[5, 6],
        exclusion: "f3_d0*(C)",
    },
    MeldRow {
        number: 17,
        a: &[1, 3],
        o: &[5, 6],
        exclusion: "f2_d0*(C)",
    },
    MeldRow {
        number: 18,
        a: &[2, 3],
        o: &[5, 6],
        exclusion: "f1_d0*(C)",
    },
];

impl MeldRow {
    /// Exclusion expression with the shared Euler factor substituted.
    pub fn exclusion_text(&self) -> String {
        self.exclusion.replace('C', C_EULER)
    }
}

/// `(A, O, label)` triples for the rigid-body melds.
pub fn rigid_body_labels() -> crate::negotiation::LabelTable {
    RIGID_BODY_MELDS
        .iter()
        .map(|r| {
            (
                crate::system::IndexSet::from_one_based(r.a, 6).unwrap(),
                crate::system::IndexSet::from_one_based(r.o, 6).unwrap(),
                r.label(),
            )
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Builtin {
    MotivatingRect,
    MotivatingSquare,
    Example1,
    RigidBody,
    Mecanum,
}

impl Builtin {
    pub const ALL: [Builtin; 5] = [
        Builtin::MotivatingRect,
        Builtin::MotivatingSquare,
        Builtin::Example1,
        Builtin::RigidBody,
        Builtin::Mecanum,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Builtin::MotivatingRect => "motivating_rect",
            Builtin::MotivatingSquare => "motivating_square",
            Builtin::Example1 => "example1",
            Builtin::RigidBody => "rigid_body",
            Builtin::Mecanum => "mecanum",
        }
    }

    /// The system file text.
    pub fn source(self) -> &'static str {
        match self {
            Builtin::MotivatingRect => MOTIVATING_RECT,
            Builtin::MotivatingSquare => MOTIVATING_SQUARE,
            Builtin::Example1 => EXAMPLE1,
            Builtin::RigidBody => RIGID_BODY,
            Builtin::Mecanum => MECANUM,
        }
    }

    pub fn system(self) -> SystemDefinition {
        parse_system(self.source()).expect("built-in system files are valid")
    }

    /// Vertex labels used when rendering graphs of this system.
    pub fn labels(self) -> crate::negotiation::LabelTable {
        match self {
            Builtin::RigidBody => rigid_body_labels(),
            _ => Vec::new(),
        }
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Builtin {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Builtin::ALL
            .into_iter()
            .find(|b| b.id() == s)
            .ok_or_else(|| format!("unknown builtin `{s}`"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::render_system;

    #[test]
    fn builtins_parse_and_round_trip() {
        for b in Builtin::ALL {
            let sys = b.system();
            let again = parse_system(&render_system(&sys)).unwrap();
            assert_eq!(again, sys, "{b}");
        }
    }
}
