use super::net::DualBranchNet;
use super::params::Params;
use super::Real;
use crate::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 0.99;

/// `teacher <- alpha * teacher + (1 - alpha) * student`, element-wise.
pub fn ema_update_params<F: Real>(teacher: &mut Params<F>, student: &Params<F>, alpha: f64) -> Result<()> {
    if !teacher.same_layout(student) {
        return Err(Error::InvalidState("teacher and student parameter layouts differ".into()));
    }
    let a = F::lit(alpha);
    let b = F::lit(1.0 - alpha);
    for (t, &s) in teacher.as_mut_slice().iter_mut().zip(student.as_slice()) {
        *t = a * *t + b * s;
    }
    Ok(())
}

/// A student network and its exponential-moving-average teacher.
#[derive(Clone, Debug)]
pub struct TeacherStudentPair<F> {
    pub student: DualBranchNet<F>,
    pub teacher: DualBranchNet<F>,
    alpha: f64,
}

impl<F: Real> TeacherStudentPair<F> {
    /// The teacher starts as an exact copy of the student.
    pub fn new(student: DualBranchNet<F>, alpha: f64) -> Result<Self> {
        Self::check_alpha(alpha)?;
        Ok(Self {
            teacher: student.clone(),
            student,
            alpha,
        })
    }

    pub fn from_parts(student: DualBranchNet<F>, teacher: DualBranchNet<F>, alpha: f64) -> Result<Self> {
        Self::check_alpha(alpha)?;
        if !student.params().same_layout(teacher.params()) {
            return Err(Error::InvalidState("teacher and student parameter layouts differ".into()));
        }
        Ok(Self { student, teacher, alpha })
    }

    fn check_alpha(alpha: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidConfig(format!("EMA decay {alpha} not in [0, 1]")));
        }
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn ema_update(&mut self) -> Result<()> {
        ema_update_params(self.teacher.params_mut(), self.student.params(), self.alpha)
    }
}
