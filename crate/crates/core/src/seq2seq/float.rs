use std::fmt::Debug;
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

/// Scalar type the network is generic over: `f32` for training, `f64` for
/// gradient checking.
pub trait Float:
    num_traits::Float
    + num_traits::FromPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Default
    + Debug
    + Send
    + Sync
    + 'static
{
    /// `c = alpha·a·b + beta·c` on strided row/column views.
    ///
    /// # Safety
    /// Every index `(i, p)` of `a` (`m×k`), `(p, j)` of `b` (`k×n`) and
    /// `(i, j)` of `c` (`m×n`) reached through the strides must be in bounds.
    #[allow(clippy::too_many_arguments)]
    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    );

    fn of(x: f64) -> Self {
        <Self as num_traits::FromPrimitive>::from_f64(x).expect("finite literal")
    }

    fn f64(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Float for f32 {
    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: f32,
        a: *const f32,
        rsa: isize,
        csa: isize,
        b: *const f32,
        rsb: isize,
        csb: isize,
        beta: f32,
        c: *mut f32,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::sgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc);
    }
}

impl Float for f64 {
    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: f64,
        a: *const f64,
        rsa: isize,
        csa: isize,
        b: *const f64,
        rsb: isize,
        csb: isize,
        beta: f64,
        c: *mut f64,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::dgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc);
    }
}

/// A strided 2-D view into a slice: element `(i, j)` lives at `i·rs + j·cs`.
#[derive(Clone, Copy)]
pub(crate) struct View {
    pub rows: usize,
    pub cols: usize,
    pub rs: usize,
    pub cs: usize,
}

impl View {
    pub fn rowmajor(rows: usize, cols: usize) -> Self {
        View {
            rows,
            cols,
            rs: cols,
            cs: 1,
        }
    }

    /// Row-major `rows×cols` block whose rows are `stride` apart.
    pub fn strided(rows: usize, cols: usize, stride: usize) -> Self {
        View {
            rows,
            cols,
            rs: stride,
            cs: 1,
        }
    }

    pub fn t(self) -> Self {
        View {
            rows: self.cols,
            cols: self.rows,
            rs: self.cs,
            cs: self.rs,
        }
    }

    fn extent(&self) -> usize {
        if self.rows == 0 || self.cols == 0 {
            0
        } else {
            (self.rows - 1) * self.rs + (self.cols - 1) * self.cs + 1
        }
    }
}

/// `c = alpha·a·b + beta·c` with bounds checked against the views.
pub(crate) fn gemm<F: Float>(alpha: F, a: &[F], va: View, b: &[F], vb: View, beta: F, c: &mut [F], vc: View) {
    assert_eq!(va.cols, vb.rows, "inner dimensions");
    assert_eq!((va.rows, vb.cols), (vc.rows, vc.cols), "output shape");
    assert!(va.extent() <= a.len() && vb.extent() <= b.len() && vc.extent() <= c.len());
    if vc.rows == 0 || vc.cols == 0 {
        return;
    }
    // SAFETY: extents checked above.
    unsafe {
        F::gemm_raw(
            va.rows,
            va.cols,
            vb.cols,
            alpha,
            a.as_ptr(),
            va.rs as isize,
            va.cs as isize,
            b.as_ptr(),
            vb.rs as isize,
            vb.cs as isize,
            beta,
            c.as_mut_ptr(),
            vc.rs as isize,
            vc.cs as isize,
        );
    }
}

/// Dense row-major product `c (m×n) [+]= op(a) · op(b)`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn matmul<F: Float>(
    a: &[F],
    trans_a: bool,
    b: &[F],
    trans_b: bool,
    c: &mut [F],
    m: usize,
    k: usize,
    n: usize,
    accumulate: bool,
) {
    let va = if trans_a {
        View::rowmajor(k, m).t()
    } else {
        View::rowmajor(m, k)
    };
    let vb = if trans_b {
        View::rowmajor(n, k).t()
    } else {
        View::rowmajor(k, n)
    };
    let beta = if accumulate { F::one() } else { F::zero() };
    gemm(F::one(), a, va, b, vb, beta, c, View::rowmajor(m, n));
}
