use super::{Func, Node, ScalarExpr};

impl ScalarExpr {
    /// Exact partial derivative with respect to coordinate `i`.
    pub fn partial(&self, i: usize) -> ScalarExpr {
        if !self.may_depend_on(i) {
            return ScalarExpr::zero();
        }
        match self.node() {
            Node::Const(_) => ScalarExpr::zero(),
            Node::Var(j) => {
                if *j == i {
                    ScalarExpr::one()
                } else {
                    ScalarExpr::zero()
                }
            }
            Node::Sum(ts) => ScalarExpr::sum(ts.iter().map(|t| t.partial(i))),
            Node::Product(fs) => {
                let mut terms = Vec::with_capacity(fs.len());
                for (k, f) in fs.iter().enumerate() {
                    let df = f.partial(i);
                    if df.is_zero() {
                        continue;
                    }
                    let mut factors = fs.clone();
                    factors[k] = df;
                    terms.push(ScalarExpr::product(factors));
                }
                ScalarExpr::sum(terms)
            }
            Node::Pow(b, n) => {
                let db = b.partial(i);
                let lowered = match n.checked_sub(1) {
                    Some(m) => ScalarExpr::pow(b.clone(), m),
                    None => ScalarExpr::pow(b.clone(), *n) * b.recip(),
                };
                ScalarExpr::product([ScalarExpr::int(*n), lowered, db])
            }
            Node::Func(f, a) => {
                let da = a.partial(i);
                let outer = match f {
                    Func::Sin => a.clone().cos(),
                    Func::Cos => -a.clone().sin(),
                    Func::Tan => ScalarExpr::pow(a.clone().cos(), -2),
                    Func::Exp => self.clone(),
                    Func::Log => a.recip(),
                    Func::Sqrt => ScalarExpr::product([ScalarExpr::rational(1, 2), self.recip()]),
                    Func::Sinh => ScalarExpr::func(Func::Cosh, a.clone()),
                    Func::Cosh => ScalarExpr::func(Func::Sinh, a.clone()),
                };
                outer * da
            }
        }
    }
}
