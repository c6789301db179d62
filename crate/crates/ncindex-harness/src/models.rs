//! Model construction from a [`ModelSpec`] and parsing of operator-word descriptions.

use ncindex::cocycle::UnitalElem;
use ncindex::models::{CircleModel, FlatResidues, GridField, ModelInstance, RandomEvenModel, TorusModel};
use ncindex::BlockOperator;

use crate::config::{ModelKind, ModelSpec};
use crate::error::{HarnessError, Result};

pub enum Built {
    Matrix(ModelInstance),
    Torus(TorusModel),
    Circle(CircleModel),
}

pub fn build(spec: &ModelSpec, seed: u64) -> Result<Built> {
    Ok(match spec.id {
        ModelKind::Random => Built::Matrix(RandomEvenModel::sample(seed, spec.max_dim).build()?),
        ModelKind::Constructed => Built::Matrix(RandomEvenModel::with_index(seed, spec.plus, spec.minus, spec.index)?.build()?),
        ModelKind::Torus => Built::Torus(TorusModel::commutative(spec.cutoff)?),
        ModelKind::Circle => Built::Circle(CircleModel::new(spec.cutoff)?),
    })
}

/// Product of the factors named in `word` (separated by spaces or `*`), each one of
/// `1`, `gamma`, `p`, `2p-1`, `a`, `[D,p]`, `[D,a]`, for a matrix model whose second
/// generator is `a`.
pub fn matrix_word(inst: &ModelInstance, word: &str) -> Result<BlockOperator> {
    let t = &inst.triple;
    let one = BlockOperator::identity(&t.algebra);
    let a = t.generators.get(1).cloned().unwrap_or_else(|| inst.p.clone());
    let mut acc = one.clone();
    for tok in tokens(word) {
        let f = match tok {
            "1" => one.clone(),
            "gamma" => t.gamma.clone(),
            "p" => inst.p.clone(),
            "2p-1" => &inst.p.scale_re(2.0) - &one,
            "a" => a.clone(),
            "[D,p]" => t.commutator(&inst.p),
            "[D,a]" => t.commutator(&a),
            other => return Err(unknown_factor(other)),
        };
        acc = &acc * &f;
    }
    Ok(acc)
}

fn tokens(word: &str) -> impl Iterator<Item = &str> {
    word.split(|c: char| c.is_whitespace() || c == '*').filter(|s| !s.is_empty())
}

fn unknown_factor(tok: &str) -> HarnessError {
    HarnessError::Config(format!("unknown word factor `{tok}`"))
}

/// Mean trace of the symbol of a word on a flat model with projection field `p`: `1` and
/// `P+` are ungraded, `gamma`, `gamma p` and `gamma (2p-1) [D,p] [D,p]` are graded words.
pub fn flat_word_mean(data: &FlatResidues, p: &GridField, word: &str) -> Result<num_complex::Complex64> {
    let toks: Vec<&str> = tokens(word).collect();
    let one = p.unit_like();
    let rank = p.rank as f64;
    let c = |x: f64| num_complex::Complex64::new(x, 0.0);
    Ok(match toks.as_slice() {
        ["1"] => c(2.0 * rank),
        ["P+"] => c(rank),
        ["gamma"] => data.heat_coefficient(&[one]),
        ["gamma", "p"] => data.heat_coefficient(std::slice::from_ref(p)),
        ["gamma", "2p-1", "[D,p]", "[D,p]"] => {
            let tpm = p.scale_re(2.0).sub(&one);
            data.heat_coefficient(&[tpm, p.clone(), p.clone()])
        }
        _ => return Err(HarnessError::Config(format!("unsupported word `{word}` for a flat model"))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn words_multiply_in_order() {
        let spec = ModelSpec::default();
        let Built::Matrix(inst) = build(&spec, 3).unwrap() else { panic!() };
        let w = matrix_word(&inst, "gamma * p").unwrap();
        let direct = &inst.triple.gamma * &inst.p;
        assert_eq!((&w - &direct).fro_max(), 0.0);
        assert!(matrix_word(&inst, "gamma q").is_err());
    }
}
