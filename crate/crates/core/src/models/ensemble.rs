use super::{ModelError, SenseModel};
use crate::corpus::PrepInstance;
use crate::nn::argmax;
use crate::scalar::Scalar;

/// Plurality vote over member distributions. Ties go to the label with the
/// highest summed probability, then to the lowest index.
pub fn vote(member_probs: &[Vec<f64>]) -> Option<usize> {
    let n = member_probs.first()?.len();
    let mut votes = vec![0usize; n];
    let mut mass = vec![0.0f64; n];
    for probs in member_probs {
        votes[argmax(probs)?] += 1;
        for (m, p) in mass.iter_mut().zip(probs) {
            *m += p;
        }
    }
    let mut best = 0;
    for k in 1..n {
        if votes[k] > votes[best] || (votes[k] == votes[best] && mass[k] > mass[best]) {
            best = k;
        }
    }
    Some(best)
}

/// Sense models trained with different seeds on the same data.
#[derive(Clone, Debug)]
pub struct Ensemble<T> {
    members: Vec<SenseModel<T>>,
}

impl<T: Scalar> Ensemble<T> {
    pub fn new(members: Vec<SenseModel<T>>) -> Result<Self, ModelError> {
        let first = members.first().ok_or(ModelError::EmptyEnsemble)?;
        for m in &members[1..] {
            if m.spec.variant != first.spec.variant {
                return Err(ModelError::InconsistentEnsemble("variant"));
            }
            if m.inventory != first.inventory {
                return Err(ModelError::InconsistentEnsemble("sense inventory"));
            }
        }
        Ok(Self { members })
    }

    pub fn members(&self) -> &[SenseModel<T>] {
        &self.members
    }

    pub fn predict(&self, inst: &PrepInstance) -> Result<&str, ModelError> {
        let mut probs = Vec::with_capacity(self.members.len());
        let mut labels: Option<&[String]> = None;
        for m in &self.members {
            let (p, l) = m.sense_forward(inst)?;
            if labels.is_some_and(|prev| prev != l) {
                return Err(ModelError::InconsistentEnsemble("label order"));
            }
            labels = Some(l);
            probs.push(p.into_iter().map(T::as_f64).collect());
        }
        let labels = labels.ok_or(ModelError::EmptyEnsemble)?;
        Ok(&labels[vote(&probs).ok_or(ModelError::EmptyEnsemble)?])
    }
}
