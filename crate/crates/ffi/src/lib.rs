//! C ABI over the wavelab core.
//!
//! Handles are opaque and owned by the caller; free them with the matching
//! `*_free`. Every function returns a [`WlStatus`]. On failure the message
//! is kept per thread and can be read with [`wl_last_error`]. Strings go out
//! through caller buffers: `needed` receives the length including the NUL,
//! and a short buffer gives `WL_STATUS_BUFFER_TOO_SMALL` without writing.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use wavelab::error::Error;
use wavelab::expr::ScalarField;
use wavelab::metric::{Covector4, MetricSpec};
use wavelab::raytrace::{hamilton_flow, PhasePoint};
use wavelab::symbolics::cases::{p_case, Coefficients, PCase};
use wavelab::symbolics::quadruple::{rho_quadruple, CovectorQuadruple};
use wavelab::symbolics::terms::{generate_terms_for_orders, to_sexpr_lines};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Signature = 4,
    SingularDenominator = 5,
    TermOverflow = 6,
    Cfl = 7,
    BlowUp = 8,
    Fit = 9,
    Config = 10,
    Io = 11,
    BufferTooSmall = 12,
    Panic = 13,
}

impl From<&Error> for WlStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Parse(_) => WlStatus::Parse,
            Error::Signature { .. } => WlStatus::Signature,
            Error::InvalidArgument(_) => WlStatus::InvalidArgument,
            Error::SingularDenominator { .. } => WlStatus::SingularDenominator,
            Error::TermOverflow { .. } => WlStatus::TermOverflow,
            Error::Cfl { .. } => WlStatus::Cfl,
            Error::BlowUp { .. } => WlStatus::BlowUp,
            Error::Fit(_) => WlStatus::Fit,
            Error::Config(_) => WlStatus::Config,
            Error::Io(_) => WlStatus::Io,
        }
    }
}

/// Opaque metric handle.
pub struct WlMetric(MetricSpec);

/// Opaque covector quadruple handle.
pub struct WlQuadruple(CovectorQuadruple);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

struct Fail(WlStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(WlStatus::from(&e), e.to_string())
    }
}

type Out = Result<(), Fail>;

fn guard(f: impl FnOnce() -> Out) -> WlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            WlStatus::Ok
        }
        Ok(Err(Fail(s, m))) => {
            set_error(m);
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            WlStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(WlStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(WlStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn expr_arg(p: *const c_char, what: &str) -> Result<ScalarField, Fail> {
    Ok(ScalarField::parse(str_arg(p, what)?).map_err(Error::from)?)
}

unsafe fn array_arg<const N: usize>(p: *const f64, what: &str) -> Result<[f64; N], Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    let mut a = [0.0; N];
    a.copy_from_slice(std::slice::from_raw_parts(p, N));
    Ok(a)
}

unsafe fn write_out<T>(p: *mut T, v: T, what: &str) -> Out {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(v);
    Ok(())
}

unsafe fn write_str(s: &str, buf: *mut c_char, cap: usize, needed: *mut usize) -> Out {
    let n = s.len() + 1;
    if !needed.is_null() {
        needed.write(n);
    }
    if buf.is_null() || cap < n {
        return Err(Fail(WlStatus::BufferTooSmall, format!("buffer of {cap} bytes, {n} needed")));
    }
    ptr::copy_nonoverlapping(s.as_ptr(), buf as *mut u8, s.len());
    buf.add(s.len()).write(0);
    Ok(())
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Copies the calling thread's last error message into `buf`.
///
/// # Safety
/// `buf` must hold `cap` bytes or be null; `needed` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn wl_last_error(buf: *mut c_char, cap: usize, needed: *mut usize) -> WlStatus {
    let msg = LAST_ERROR.with(|e| e.borrow().clone());
    match write_str(&msg, buf, cap, needed) {
        Ok(()) => WlStatus::Ok,
        Err(Fail(s, _)) => s,
    }
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn wl_metric_minkowski(out: *mut *mut WlMetric) -> WlStatus {
    guard(|| write_out(out, boxed(WlMetric(MetricSpec::minkowski())), "out"))
}

/// `e^{2 gamma} eta` with `gamma` an expression in `t, x1, x2, x3`.
///
/// # Safety
/// `gamma` must be a NUL-terminated string; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn wl_metric_conformal(gamma: *const c_char, out: *mut *mut WlMetric) -> WlStatus {
    guard(|| {
        let spec = MetricSpec::conformal_minkowski(expr_arg(gamma, "gamma")?)?;
        write_out(out, boxed(WlMetric(spec)), "out")
    })
}

/// `-beta dt^2 + k11 dx1^2 + k22 dx2^2 + k33 dx3^2`.
///
/// # Safety
/// All strings NUL-terminated; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn wl_metric_product_diagonal(
    beta: *const c_char,
    k11: *const c_char,
    k22: *const c_char,
    k33: *const c_char,
    out: *mut *mut WlMetric,
) -> WlStatus {
    guard(|| {
        let k = [expr_arg(k11, "k11")?, expr_arg(k22, "k22")?, expr_arg(k33, "k33")?];
        let spec = MetricSpec::product_diagonal(expr_arg(beta, "beta")?, k)?;
        write_out(out, boxed(WlMetric(spec)), "out")
    })
}

/// # Safety
/// `m` must come from a `wl_metric_*` constructor or be null.
#[no_mangle]
pub unsafe extern "C" fn wl_metric_free(m: *mut WlMetric) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Row-major `g_ij(x)` into `out[16]`.
///
/// # Safety
/// `x` holds 4 values, `out` 16.
#[no_mangle]
pub unsafe extern "C" fn wl_metric_g(m: *const WlMetric, x: *const f64, out: *mut f64) -> WlStatus {
    guard(|| {
        let m = m.as_ref().ok_or_else(|| null("metric"))?;
        let g = m.0.g(&array_arg::<4>(x, "x")?)?;
        if out.is_null() {
            return Err(null("out"));
        }
        for i in 0..4 {
            for j in 0..4 {
                out.add(4 * i + j).write(g[(i, j)]);
            }
        }
        Ok(())
    })
}

/// Scalar curvature at `x` in the library's sign convention.
///
/// # Safety
/// `x` holds 4 values; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn wl_metric_scalar_curvature(m: *const WlMetric, x: *const f64, out: *mut f64) -> WlStatus {
    guard(|| {
        let m = m.as_ref().ok_or_else(|| null("metric"))?;
        let r = m.0.scalar_curvature(&array_arg::<4>(x, "x")?)?;
        write_out(out, r, "out")
    })
}

/// `g^{ij} xi_i xi_j` at `x`.
///
/// # Safety
/// `x` and `xi` hold 4 values; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn wl_metric_dual_norm_sq(
    m: *const WlMetric,
    x: *const f64,
    xi: *const f64,
    out: *mut f64,
) -> WlStatus {
    guard(|| {
        let m = m.as_ref().ok_or_else(|| null("metric"))?;
        let c = Covector4::new(array_arg::<4>(x, "x")?, array_arg::<4>(xi, "xi")?);
        write_out(out, m.0.dual_norm_sq(&c)?, "out")
    })
}

/// Integrates the null bicharacteristic flow from `(x, xi)` to `s_max` with
/// step `ds`. Writes the end point to `x_out[4]`, `xi_out[4]`, the reached
/// parameter to `s_out` and the largest relative constraint defect to
/// `defect_out`. A ray that stops early is not an error; compare `s_out`.
///
/// # Safety
/// Input arrays hold 4 values; output pointers valid for writes.
#[no_mangle]
pub unsafe extern "C" fn wl_hamilton_flow(
    m: *const WlMetric,
    x: *const f64,
    xi: *const f64,
    s_max: f64,
    ds: f64,
    x_out: *mut f64,
    xi_out: *mut f64,
    s_out: *mut f64,
    defect_out: *mut f64,
) -> WlStatus {
    guard(|| {
        let m = m.as_ref().ok_or_else(|| null("metric"))?;
        let start = PhasePoint::new(array_arg::<4>(x, "x")?, array_arg::<4>(xi, "xi")?);
        let ray = hamilton_flow(&m.0, start, s_max, ds)?;
        let last = ray.last();
        if x_out.is_null() || xi_out.is_null() {
            return Err(null("x_out/xi_out"));
        }
        ptr::copy_nonoverlapping(last.point.x.as_ptr(), x_out, 4);
        ptr::copy_nonoverlapping(last.point.xi.as_ptr(), xi_out, 4);
        write_out(s_out, last.s, "s_out")?;
        write_out(defect_out, ray.max_defect(), "defect_out")
    })
}

/// The one-parameter quadruple family at `rho`.
///
/// # Safety
/// `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn wl_quadruple_rho(rho: f64, out: *mut *mut WlQuadruple) -> WlStatus {
    guard(|| write_out(out, boxed(WlQuadruple(rho_quadruple(rho)?)), "out"))
}

/// Four Minkowski covectors, row-major `xis[16]`, at the origin.
///
/// # Safety
/// `xis` holds 16 values; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn wl_quadruple_new(xis: *const f64, out: *mut *mut WlQuadruple) -> WlStatus {
    guard(|| {
        let v = array_arg::<16>(xis, "xis")?;
        let mut rows = [[0.0; 4]; 4];
        for (i, r) in rows.iter_mut().enumerate() {
            r.copy_from_slice(&v[4 * i..4 * i + 4]);
        }
        let q = CovectorQuadruple::new(&MetricSpec::minkowski(), [0.0; 4], rows)?;
        write_out(out, boxed(WlQuadruple(q)), "out")
    })
}

/// # Safety
/// `q` must come from a `wl_quadruple_*` constructor or be null.
#[no_mangle]
pub unsafe extern "C" fn wl_quadruple_free(q: *mut WlQuadruple) {
    if !q.is_null() {
        drop(Box::from_raw(q));
    }
}

/// `|sum_i c_i zeta_i|^2` for coefficients `c[4]`.
///
/// # Safety
/// `c` holds 4 values; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn wl_quadruple_norm_sq(q: *const WlQuadruple, c: *const f64, out: *mut f64) -> WlStatus {
    guard(|| {
        let q = q.as_ref().ok_or_else(|| null("quadruple"))?;
        write_out(out, q.0.norm_sq(&array_arg::<4>(c, "c")?), "out")
    })
}

/// Closed-form four-wave coefficient. `case` is `'a'`, `'b'` or `'c'`;
/// `a`, `b`, `c` are the quadratic, cubic and quartic Taylor coefficients.
///
/// # Safety
/// `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn wl_p_case(
    case: c_char,
    q: *const WlQuadruple,
    a: f64,
    b: f64,
    c: f64,
    out: *mut f64,
) -> WlStatus {
    guard(|| {
        let q = q.as_ref().ok_or_else(|| null("quadruple"))?;
        let label = (case as u8 as char).to_string();
        let case = PCase::from_label(&label)
            .ok_or_else(|| Fail(WlStatus::InvalidArgument, format!("unknown case `{label}`")))?;
        write_out(out, p_case(case, &q.0, &Coefficients { a, b, c })?, "out")
    })
}

/// Interaction terms of multi-degree `multi[4]` for the Taylor orders in
/// `orders[n_orders]`, one s-expression per line.
///
/// # Safety
/// `orders` holds `n_orders` values, `multi` 4; see the module notes for
/// `buf`, `cap`, `needed`.
#[no_mangle]
pub unsafe extern "C" fn wl_expansion_terms(
    orders: *const usize,
    n_orders: usize,
    multi: *const usize,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> WlStatus {
    guard(|| {
        if orders.is_null() && n_orders > 0 {
            return Err(null("orders"));
        }
        let ord = if n_orders == 0 { &[][..] } else { std::slice::from_raw_parts(orders, n_orders) };
        if multi.is_null() {
            return Err(null("multi"));
        }
        let mut mi = [0usize; 4];
        mi.copy_from_slice(std::slice::from_raw_parts(multi, 4));
        let terms = generate_terms_for_orders(ord, mi, wavelab::symbolics::terms::DEFAULT_TERM_CAP)?;
        write_str(&to_sexpr_lines(&terms), buf, cap, needed)
    })
}

/// Runs an experiment from config text and writes its JSON report into
/// `buf`. `pass` receives 1 when every check passed; that a check failed
/// is reported there, not through the status.
///
/// # Safety
/// `config` NUL-terminated; see the module notes for `buf`, `cap`, `needed`.
#[no_mangle]
pub unsafe extern "C" fn wl_run_experiment(
    config: *const c_char,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
    pass: *mut i32,
) -> WlStatus {
    guard(|| {
        let rep = wavelab::experiments::run_config_text(str_arg(config, "config")?)?;
        if !pass.is_null() {
            pass.write(rep.pass as i32);
        }
        write_str(&rep.to_json(), buf, cap, needed)
    })
}
