//! Change of variables that turns a parity block into a systematic one.
//!
//! For the first parity, `y_s = f_s` except at the pivot where
//! `y_pivot = Σ f_i = p1`. For the second parity, `y_s = f_s·B_s` and
//! `y_pivot = p2`. Both are invertible row transformations of `f`.

use super::scheme_a::PIVOT;
use super::{SchemeId, SchemeInstance};
use crate::code::{CodedStripe, Stripe};
use crate::error::{Error, Result};
use crate::matrix::Mat;
use crate::repair::Parity;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParityViewpoint {
    pub parity: Parity,
    /// Source block replaced by the parity.
    pub pivot: usize,
    /// `y = f·transform`.
    pub transform: Mat,
    pub inverse: Mat,
    /// Generator of every coded block in `y` coordinates (`M × N` each).
    pub block_generators: Vec<Mat>,
    /// Coefficients of the other parity in `y` coordinates, one per `y_s`.
    pub other_parity: Vec<Mat>,
    /// `B_i` for the first parity, `B_i⁻¹` for the second.
    pub primed: Vec<Mat>,
}

impl ParityViewpoint {
    pub fn to_view(&self, stripe: &Stripe) -> Result<Mat> {
        stripe.as_row().matmul(&self.transform)
    }

    pub fn from_view(&self, y: &Mat) -> Result<Vec<Mat>> {
        let f = y.matmul(&self.inverse)?;
        let n = self.block_generators.first().map_or(1, Mat::cols);
        Ok(f.as_slice()
            .chunks(n)
            .map(|c| Mat::row_vector(f.field(), c.to_vec()))
            .collect())
    }

    /// Coded blocks computed from `y` alone.
    pub fn reencode(&self, y: &Mat) -> Result<CodedStripe> {
        let blocks = self
            .block_generators
            .iter()
            .map(|g| y.matmul(g))
            .collect::<Result<Vec<_>>>()?;
        Ok(CodedStripe { blocks })
    }
}

pub fn parity_viewpoint(inst: &SchemeInstance, parity: Parity) -> Result<ParityViewpoint> {
    if inst.id != SchemeId::A {
        return Err(Error::NotApplicable(format!(
            "parity viewpoint needs scheme A, got scheme {}",
            inst.id
        )));
    }
    if !inst.coeffs.a_is_identity() {
        return Err(Error::NotApplicable("first parity coefficients are not identity".into()));
    }
    let k = inst.params.k;
    let n = inst.params.block_symbols;
    let field = inst.params.field;
    let b = inst.coeffs.b();
    let eye = Mat::identity(field, n);
    let primed: Vec<Mat> = match parity {
        Parity::First => b.to_vec(),
        Parity::Second => b.iter().map(Mat::inverse).collect::<Result<_>>()?,
    };
    // coefficient of f_i in y_s
    let coef = |i: usize| -> &Mat {
        match parity {
            Parity::First => &eye,
            Parity::Second => &b[i],
        }
    };
    let m = k * n;
    let mut transform = Mat::zeros(field, m, m);
    for i in 0..k {
        let c = coef(i);
        for s in [i, PIVOT] {
            for r in 0..n {
                for col in 0..n {
                    transform.set_raw(i * n + r, s * n + col, c.raw(r, col));
                }
            }
        }
    }
    let inverse = transform.inverse()?;
    let block_generators: Vec<Mat> = (0..k + 2)
        .map(|blk| inverse.matmul(&inst.coeffs.block_generator(blk)))
        .collect::<Result<_>>()?;
    let other = match parity {
        Parity::First => k + 1,
        Parity::Second => k,
    };
    let other_parity = (0..k)
        .map(|s| block_generators[other].row_block(s * n, n))
        .collect();
    Ok(ParityViewpoint {
        parity,
        pivot: PIVOT,
        transform,
        inverse,
        block_generators,
        other_parity,
        primed,
    })
}
