//! Second-order kernels on `[-1, 1]` and their moment functionals
//! `∫ uⁱ Kʲ(u) du`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};

/// Number of Simpson panels used for every moment integral.
pub const QUADRATURE_PANELS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelFamily {
    Epanechnikov,
    Box,
    Custom,
}

impl FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "epanechnikov" => Ok(Self::Epanechnikov),
            "box" | "uniform" => Ok(Self::Box),
            other => Err(invalid(format!(
                "unknown kernel '{other}' (expected 'epanechnikov' or 'box')"
            ))),
        }
    }
}

type KernelFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A symmetric probability density supported on `[-1, 1]`.
#[derive(Clone)]
pub struct Kernel {
    family: KernelFamily,
    custom: Option<KernelFn>,
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Kernel").field("family", &self.family).finish()
    }
}

impl Default for Kernel {
    fn default() -> Self {
        Self::epanechnikov()
    }
}

impl Kernel {
    /// `¾(1 − u²)` on `[-1, 1]`.
    pub fn epanechnikov() -> Self {
        Self {
            family: KernelFamily::Epanechnikov,
            custom: None,
        }
    }

    /// `½` on `[-1, 1]`.
    pub fn uniform_box() -> Self {
        Self {
            family: KernelFamily::Box,
            custom: None,
        }
    }

    pub fn from_family(family: KernelFamily) -> Result<Self> {
        match family {
            KernelFamily::Epanechnikov => Ok(Self::epanechnikov()),
            KernelFamily::Box => Ok(Self::uniform_box()),
            KernelFamily::Custom => Err(invalid("custom kernels need a function; use Kernel::custom")),
        }
    }

    /// Wraps a user-supplied function, rejecting it unless it is a symmetric,
    /// nonnegative density that vanishes outside `[-1, 1]`.
    ///
    /// Values outside the support are forced to zero at evaluation time, but
    /// a function that is visibly nonzero there is still rejected.
    pub fn custom<F>(f: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let probe = 2001;
        for k in 0..probe {
            let u = -1.0 + 2.0 * k as f64 / (probe - 1) as f64;
            let (a, b) = (f(u), f(-u));
            if !a.is_finite() || a < 0.0 {
                return Err(invalid(format!("kernel value {a} at u={u} is not a nonnegative real")));
            }
            if (a - b).abs() > 1e-12 * (1.0 + a.abs()) {
                return Err(invalid(format!("kernel is not symmetric at u={u}")));
            }
        }
        for &u in &[1.0 + 1e-9, 1.01, 1.5, 2.0, 10.0] {
            if f(u) != 0.0 || f(-u) != 0.0 {
                return Err(invalid(format!("kernel is nonzero outside [-1, 1] at |u|={u}")));
            }
        }
        let kernel = Self {
            family: KernelFamily::Custom,
            custom: Some(Arc::new(f)),
        };
        let mass = kernel.moment(0, 1)?;
        if (mass - 1.0).abs() > 1e-10 {
            return Err(invalid(format!("kernel integrates to {mass}, not 1")));
        }
        Ok(kernel)
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        if !(u.abs() <= 1.0) {
            return 0.0;
        }
        match self.family {
            KernelFamily::Epanechnikov => 0.75 * (1.0 - u * u),
            KernelFamily::Box => 0.5,
            KernelFamily::Custom => (self.custom.as_ref().expect("custom kernel has a function"))(u),
        }
    }

    /// Rescaled kernel `K(u/h)/h`.
    #[inline]
    pub fn scaled(&self, u: f64, h: f64) -> f64 {
        self.eval(u / h) / h
    }

    /// `∫₋₁¹ uⁱ Kʲ(u) du` for `0 ≤ i, j ≤ 3`.
    pub fn moment(&self, i: u32, j: u32) -> Result<f64> {
        if i > 3 || j > 3 {
            return Err(invalid(format!("moment indices ({i}, {j}) outside 0..=3")));
        }
        Ok(simpson(
            |u| u.powi(i as i32) * self.eval(u).powi(j as i32),
            -1.0,
            1.0,
            QUADRATURE_PANELS,
        ))
    }

    pub fn moments(&self) -> MomentFunctionals {
        let mut table = [[0.0; 4]; 4];
        for (i, row) in table.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = self.moment(i as u32, j as u32).expect("indices in range");
            }
        }
        MomentFunctionals { table }
    }
}

/// Table of `∫ uⁱ Kʲ(u) du`, indexed `[i][j]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentFunctionals {
    table: [[f64; 4]; 4],
}

impl MomentFunctionals {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.table[i][j]
    }

    /// The matrices `S`, `V` and vector `U` entering the bias and variance
    /// of the local linear fit.
    pub fn assemble(&self) -> LimitMatrices {
        let d = |i: usize, j: usize| self.table[i][j];
        LimitMatrices {
            s: [[1.0, 0.0], [0.0, d(2, 1)]],
            v: [[d(0, 2), d(1, 2)], [d(1, 2), d(2, 2)]],
            u: [d(2, 1), d(3, 1)],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitMatrices {
    pub s: [[f64; 2]; 2],
    pub v: [[f64; 2]; 2],
    pub u: [f64; 2],
}

/// Composite Simpson rule with `panels` (rounded up to even) subintervals.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let n = panels + panels % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + k as f64 * h);
    }
    acc * h / 3.0
}
