use crate::error::{Error, Result};
use crate::space::TupleSpace;
use crate::wiring::FiniteSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Input,
    Output,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgVariable {
    pub name: String,
    pub carrier: FiniteSet,
    pub role: Role,
}

impl AgVariable {
    pub fn new(name: impl Into<String>, carrier: FiniteSet, role: Role) -> Self {
        AgVariable { name: name.into(), carrier, role }
    }
}

/// An assume-guarantee pair over named finite variables. Both sets are stored
/// as membership flags indexed by the joint tuple (first variable most
/// significant).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgContract {
    variables: Vec<AgVariable>,
    space: TupleSpace,
    assumption: Vec<bool>,
    guarantee: Vec<bool>,
}

impl AgContract {
    pub fn new(variables: Vec<AgVariable>, assumption: Vec<bool>, guarantee: Vec<bool>) -> Result<Self> {
        for (i, v) in variables.iter().enumerate() {
            if variables[..i].iter().any(|w| w.name == v.name) {
                return Err(Error::Value(format!("variable {} declared twice", v.name)));
            }
        }
        let space = TupleSpace::new(variables.iter().map(|v| v.carrier.len()).collect());
        for set in [&assumption, &guarantee] {
            if set.len() != space.size() {
                return Err(Error::Dimension { expected: space.size(), got: set.len() });
            }
        }
        Ok(AgContract { variables, space, assumption, guarantee })
    }

    pub fn from_predicates(
        variables: Vec<AgVariable>,
        assume: impl Fn(&[usize]) -> bool,
        guarantee: impl Fn(&[usize]) -> bool,
    ) -> Result<Self> {
        let space = TupleSpace::new(variables.iter().map(|v| v.carrier.len()).collect());
        let a = space.iter().map(|v| assume(&v)).collect();
        let g = space.iter().map(|v| guarantee(&v)).collect();
        Self::new(variables, a, g)
    }

    pub fn variables(&self) -> &[AgVariable] {
        &self.variables
    }

    pub fn space(&self) -> &TupleSpace {
        &self.space
    }

    pub fn assumption(&self) -> &[bool] {
        &self.assumption
    }

    pub fn guarantee(&self) -> &[bool] {
        &self.guarantee
    }

    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn assumes(&self, v: &[usize]) -> Result<bool> {
        Ok(self.assumption[self.space.encode(v)?])
    }

    pub fn guarantees(&self, v: &[usize]) -> Result<bool> {
        Ok(self.guarantee[self.space.encode(v)?])
    }

    /// The largest assumption that only constrains input variables and is
    /// contained in the stored one: a valuation is kept when every choice of
    /// the output variables keeps it inside the assumption.
    pub fn input_scoped_assumption(&self) -> Vec<bool> {
        let outputs: Vec<usize> =
            (0..self.variables.len()).filter(|&i| self.variables[i].role == Role::Output).collect();
        let out_space = TupleSpace::new(outputs.iter().map(|&i| self.variables[i].carrier.len()).collect());
        self.space
            .iter()
            .map(|v| {
                out_space.iter().all(|w| {
                    let mut u = v.clone();
                    for (&i, x) in outputs.iter().zip(w) {
                        u[i] = x;
                    }
                    self.assumption[self.space.encode(&u).expect("in range")]
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgComposition {
    pub contract: AgContract,
    /// The composite assumption is non-empty.
    pub compatible: bool,
}

/// Composition of assume-guarantee contracts along identified variables.
///
/// `binding` pairs a variable of `c1` with a variable of `c2`; a bound pair
/// becomes one variable named after `c1`'s side, an output if either side
/// outputs it. All other variables of both contracts remain in scope, `c1`'s
/// first. `G = G₁ ∧ G₂` and `A` is the largest set with `A ∧ G₂ ⇒ A₁` and
/// `A ∧ G₁ ⇒ A₂`, taken pointwise over the joint valuation.
pub fn ag_compose(c1: &AgContract, c2: &AgContract, binding: &[(&str, &str)]) -> Result<AgComposition> {
    let mut from2: Vec<Option<usize>> = vec![None; c2.variables.len()];
    let mut variables = c1.variables.clone();
    for &(n1, n2) in binding {
        let i = c1.variable_index(n1).ok_or_else(|| Error::Value(format!("binding names unknown variable {n1}")))?;
        let j = c2.variable_index(n2).ok_or_else(|| Error::Value(format!("binding names unknown variable {n2}")))?;
        if from2[j].is_some() {
            return Err(Error::Value(format!("variable {n2} bound twice")));
        }
        if c1.variables[i].carrier != c2.variables[j].carrier {
            return Err(Error::Type(format!("{n1} and {n2} range over different carriers")));
        }
        if c2.variables[j].role == Role::Output {
            variables[i].role = Role::Output;
        }
        from2[j] = Some(i);
    }
    for (j, v) in c2.variables.iter().enumerate() {
        if from2[j].is_none() {
            if variables.iter().any(|w| w.name == v.name) {
                return Err(Error::Value(format!("unbound variable {} appears in both contracts", v.name)));
            }
            from2[j] = Some(variables.len());
            variables.push(v.clone());
        }
    }
    let n1 = c1.variables.len();
    let space = TupleSpace::new(variables.iter().map(|v| v.carrier.len()).collect());
    let mut assumption = Vec::with_capacity(space.size());
    let mut guarantee = Vec::with_capacity(space.size());
    for v in space.iter() {
        let i1 = c1.space.encode(&v[..n1]).expect("prefix in range");
        let v2: Vec<usize> = from2.iter().map(|k| v[k.expect("all mapped")]).collect();
        let i2 = c2.space.encode(&v2).expect("in range");
        let (a1, g1, a2, g2) = (c1.assumption[i1], c1.guarantee[i1], c2.assumption[i2], c2.guarantee[i2]);
        guarantee.push(g1 && g2);
        assumption.push((!g2 || a1) && (!g1 || a2));
    }
    let compatible = assumption.iter().any(|&a| a);
    Ok(AgComposition { contract: AgContract::new(variables, assumption, guarantee)?, compatible })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bools() -> FiniteSet {
        FiniteSet::new("Bool", ["0", "1"])
    }

    #[test]
    fn full_contracts_compose_to_full() {
        let v = |n: &str| vec![AgVariable::new(n, bools(), Role::Input)];
        let c1 = AgContract::from_predicates(v("a"), |_| true, |_| true).unwrap();
        let c2 = AgContract::from_predicates(v("b"), |_| true, |_| true).unwrap();
        let r = ag_compose(&c1, &c2, &[]).unwrap();
        assert!(r.compatible);
        assert!(r.contract.assumption().iter().all(|&a| a));
        assert!(r.contract.guarantee().iter().all(|&g| g));
        assert_eq!(r.contract.variables().len(), 2);
    }

    #[test]
    fn incompatible_pair() {
        // c2 guarantees x = 1 while c1 assumes x = 0; c1 guarantees y = 1 while c2 assumes y = 0
        let x_in = AgVariable::new("x", bools(), Role::Input);
        let y_out = AgVariable::new("y", bools(), Role::Output);
        let c1 = AgContract::from_predicates(vec![x_in.clone(), y_out.clone()], |v| v[0] == 0, |v| v[1] == 1).unwrap();
        let c2 = AgContract::from_predicates(
            vec![AgVariable::new("y", bools(), Role::Input), AgVariable::new("x", bools(), Role::Output)],
            |v| v[0] == 0,
            |v| v[1] == 1,
        )
        .unwrap();
        let r = ag_compose(&c1, &c2, &[("x", "x"), ("y", "y")]).unwrap();
        // only valuations where both guarantees fail survive
        let surviving: Vec<Vec<usize>> = r.contract.space().iter().filter(|v| r.contract.assumes(v).unwrap()).collect();
        assert_eq!(surviving, vec![vec![0, 0]]);
        assert!(r.compatible);
    }

    #[test]
    fn unknown_binding_rejected() {
        let c =
            AgContract::from_predicates(vec![AgVariable::new("a", bools(), Role::Input)], |_| true, |_| true).unwrap();
        assert!(ag_compose(&c, &c, &[("a", "zz")]).is_err());
        assert!(ag_compose(&c, &c, &[]).is_err());
    }

    #[test]
    fn input_scoped_drops_output_dependence() {
        let vars = vec![AgVariable::new("u", bools(), Role::Input), AgVariable::new("x", bools(), Role::Output)];
        let c = AgContract::from_predicates(vars, |v| v[0] == 1 || v[1] == 0, |_| true).unwrap();
        assert_eq!(c.input_scoped_assumption(), vec![false, false, true, true]);
    }
}
