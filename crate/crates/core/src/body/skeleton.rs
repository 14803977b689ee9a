use serde::{Deserialize, Serialize};

use super::SparseRows;
use crate::error::{Error, Result};
use crate::geom::{Mat3, Vec3};

/// Joint tree with rest positions. Parents always precede their children.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Skeleton {
    pub parents: Vec<Option<usize>>,
    pub rest_joints: Vec<Vec3>,
}

/// World-space joint rotations and posed joint positions.
///
/// Joint `j` moves a rest point `x` to `rotations[j] * (x - rest_j) + translations[j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct WorldTransforms {
    pub rotations: Vec<Mat3>,
    pub translations: Vec<Vec3>,
}

/// Validates a parent array: single root at index 0, every other parent earlier in the list.
pub fn validate_parents(parents: &[Option<usize>]) -> Result<()> {
    if parents.is_empty() {
        return Err(Error::InvalidBody("skeleton has no joints".into()));
    }
    if parents[0].is_some() {
        return Err(Error::InvalidBody("joint 0 must be the root".into()));
    }
    for (j, p) in parents.iter().enumerate().skip(1) {
        match p {
            None => return Err(Error::InvalidBody(format!("joint {j} is a second root"))),
            Some(p) if *p >= j => {
                return Err(Error::InvalidBody(format!(
                    "joint {j} has parent {p}; parents must precede children"
                )))
            }
            _ => {}
        }
    }
    Ok(())
}

impl Skeleton {
    pub fn new(parents: Vec<Option<usize>>, rest_joints: Vec<Vec3>) -> Result<Self> {
        validate_parents(&parents)?;
        if rest_joints.len() != parents.len() {
            return Err(Error::dim("rest joint count", parents.len(), rest_joints.len()));
        }
        Ok(Skeleton {
            parents,
            rest_joints,
        })
    }

    pub fn len(&self) -> usize {
        self.parents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parents.is_empty()
    }

    /// Forward kinematics of per-joint local rotations about the rest joints.
    ///
    /// The root keeps its rest position; apply a global motion with
    /// [`WorldTransforms::apply_global`].
    pub fn forward(&self, local: &[Mat3]) -> Result<WorldTransforms> {
        if local.len() != self.len() {
            return Err(Error::dim("joint rotation count", self.len(), local.len()));
        }
        let mut rotations = Vec::with_capacity(self.len());
        let mut translations = Vec::with_capacity(self.len());
        for (j, parent) in self.parents.iter().enumerate() {
            match parent {
                None => {
                    rotations.push(local[j]);
                    translations.push(self.rest_joints[j]);
                }
                Some(p) => {
                    let ap = rotations[*p];
                    let tj = translations[*p] + ap * (self.rest_joints[j] - self.rest_joints[*p]);
                    rotations.push(ap * local[j]);
                    translations.push(tj);
                }
            }
        }
        Ok(WorldTransforms {
            rotations,
            translations,
        })
    }
}

impl WorldTransforms {
    /// Left-compose a rigid motion `x -> rot * x + trans`.
    pub fn apply_global(&mut self, rot: &Mat3, trans: &Vec3) {
        for (a, t) in self.rotations.iter_mut().zip(self.translations.iter_mut()) {
            *a = rot * *a;
            *t = rot * *t + trans;
        }
    }
}

/// Linear blend skinning of `rest_vertices` (rows of `weights` index joints).
pub fn linear_blend_skin(
    rest_vertices: &[Vec3],
    rest_joints: &[Vec3],
    weights: &SparseRows,
    world: &WorldTransforms,
) -> Result<Vec<Vec3>> {
    if weights.nrows() != rest_vertices.len() {
        return Err(Error::dim("skin weight rows", rest_vertices.len(), weights.nrows()));
    }
    if weights.ncols() != rest_joints.len() || world.rotations.len() != rest_joints.len() {
        return Err(Error::dim("skin weight columns", rest_joints.len(), weights.ncols()));
    }
    Ok(rest_vertices
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let mut v = Vec3::zeros();
            for (j, w) in weights.row(i) {
                v += (world.rotations[j] * (x - rest_joints[j]) + world.translations[j]) * w;
            }
            v
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Rotation3;

    fn chain() -> Skeleton {
        Skeleton::new(
            vec![None, Some(0), Some(1)],
            vec![Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0), Vec3::new(2.0, 0.0, 0.0)],
        )
        .unwrap()
    }

    #[test]
    fn parent_validation() {
        assert!(validate_parents(&[None, Some(0), Some(0)]).is_ok());
        assert!(validate_parents(&[Some(0)]).is_err());
        assert!(validate_parents(&[None, None]).is_err());
        assert!(validate_parents(&[None, Some(2), Some(0)]).is_err());
    }

    #[test]
    fn identity_forward_keeps_rest() {
        let s = chain();
        let w = s.forward(&[Mat3::identity(); 3]).unwrap();
        assert_eq!(w.translations, s.rest_joints);
    }

    #[test]
    fn rotating_middle_joint_moves_child() {
        let s = chain();
        let rz = Rotation3::from_axis_angle(&Vec3::z_axis(), std::f64::consts::FRAC_PI_2).into_inner();
        let w = s.forward(&[Mat3::identity(), rz, Mat3::identity()]).unwrap();
        assert!((w.translations[2] - Vec3::new(1.0, 1.0, 0.0)).norm() < 1e-12);
    }
}
