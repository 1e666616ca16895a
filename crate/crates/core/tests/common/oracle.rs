//! Dense reference pipeline. Every operator is formed as an explicit matrix
//! and every inverse is an explicit inverse; nothing is shared with the
//! library beyond the input data.

use nalgebra::{DMatrix, DVector};

pub struct OracleOutput {
    pub eta: DMatrix<f64>,
    pub psi: DVector<f64>,
    pub y_w_hat: DVector<f64>,
    pub s_h: DMatrix<f64>,
    pub beta_c: DVector<f64>,
    pub gamma_v: DMatrix<f64>,
    pub alpha: DVector<f64>,
    pub eps_pl: DMatrix<f64>,
    pub rss_pl: f64,
    pub rss_tv: f64,
    pub w: f64,
}

fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (ar, ac, br, bc) = (a.nrows(), a.ncols(), b.nrows(), b.ncols());
    DMatrix::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

fn inv(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.clone().try_inverse().expect("oracle matrix invertible")
}

/// `D = 1_T (x) (-1_{N-1}, I_{N-1})'`.
pub fn dummy_design(n: usize, t_len: usize) -> DMatrix<f64> {
    let mut e = DMatrix::zeros(n, n - 1);
    for j in 0..n - 1 {
        e[(0, j)] = -1.0;
        e[(j + 1, j)] = 1.0;
    }
    kron(&DMatrix::from_element(t_len, 1, 1.0), &e)
}

pub fn rot_h(n: usize, t_len: usize) -> f64 {
    let tau: Vec<f64> = (1..=t_len).map(|t| t as f64 / t_len as f64).collect();
    let mean = tau.iter().sum::<f64>() / t_len as f64;
    let var = tau.iter().map(|u| (u - mean).powi(2)).sum::<f64>() / (t_len as f64 - 1.0);
    var.sqrt() * ((n * t_len) as f64).powf(-0.2)
}

struct Local {
    /// `(M' W* M)^{-1} M' W*` for every grid point.
    g: Vec<DMatrix<f64>>,
    /// `S(h)`.
    s: DMatrix<f64>,
}

fn local(z: &DMatrix<f64>, n: usize, t_len: usize, h: f64, d: &DMatrix<f64>) -> Local {
    let nt = n * t_len;
    let r = z.ncols();
    let tau: Vec<f64> = (1..=t_len).map(|t| t as f64 / t_len as f64).collect();
    let mut g = Vec::new();
    let mut s = DMatrix::zeros(nt, nt);
    for (t0, &tau0) in tau.iter().enumerate() {
        let kdiag: Vec<f64> = tau
            .iter()
            .map(|u| {
                let x = (u - tau0) / h;
                (-x * x / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt()
            })
            .collect();
        let wh = kron(&DMatrix::from_diagonal(&DVector::from_vec(kdiag)), &DMatrix::identity(n, n));
        let kcal = DMatrix::identity(nt, nt) - d * inv(&(d.transpose() * &wh * d)) * d.transpose() * &wh;
        let wstar = kcal.transpose() * &wh * &kcal;
        let mut m = DMatrix::zeros(nt, 2 * r);
        for k in 0..nt {
            let dt = (tau[k / n] - tau0) / h;
            for j in 0..r {
                m[(k, j)] = z[(k, j)];
                m[(k, r + j)] = dt * z[(k, j)];
            }
        }
        let gt = inv(&(m.transpose() * &wstar * &m)) * m.transpose() * &wstar;
        for i in 0..n {
            let row = t0 * n + i;
            let mut sel = DMatrix::zeros(1, 2 * r);
            for j in 0..r {
                sel[(0, j)] = z[(row, j)];
            }
            s.set_row(row, &(sel * &gt).row(0));
        }
        g.push(gt);
    }
    Local { g, s }
}

fn curves(g: &[DMatrix<f64>], r: usize, v: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(g.len(), r);
    for (t, gt) in g.iter().enumerate() {
        let coef = gt * v;
        for j in 0..r {
            out[(t, j)] = coef[(j, 0)];
        }
    }
    out
}

/// Runs both stages, the fully time-varying fit and the statistic.
pub fn oracle(
    y: &DVector<f64>,
    x: &DMatrix<f64>,
    w_n: &DMatrix<f64>,
    n: usize,
    t_len: usize,
    varying: &[usize],
    constant: &[usize],
) -> OracleOutput {
    let nt = n * t_len;
    let p = x.ncols();
    let h = rot_h(n, t_len);
    let d = dummy_design(n, t_len);
    let w = kron(&DMatrix::identity(t_len, t_len), w_n);
    let y = DMatrix::from_column_slice(nt, 1, y.as_slice());

    // instruments (X, W X_{-1}, W^2 X_{-1})
    let x1 = x.columns(1, p - 1).into_owned();
    let wx = &w * &x1;
    let wwx = &w * &wx;
    let mut hm = DMatrix::zeros(nt, 3 * p - 2);
    hm.columns_mut(0, p).copy_from(x);
    hm.columns_mut(p, p - 1).copy_from(&wx);
    hm.columns_mut(2 * p - 1, p - 1).copy_from(&wwx);

    let y_w = &w * &y;
    let lh = local(&hm, n, t_len, h, &d);
    let b_hat = &lh.s * &y_w;
    let dtd_inv = inv(&(d.transpose() * &d));
    let psi = &dtd_inv * d.transpose() * (&y_w - &b_hat);
    let y_w_hat = &b_hat + &d * &psi;
    let eta = curves(&lh.g, 3 * p - 2, &y_w);

    let pick = |cols: &[usize]| {
        let mut m = DMatrix::zeros(nt, cols.len());
        for (k, &c) in cols.iter().enumerate() {
            m.set_column(k, &x.column(c));
        }
        m
    };
    let xv = pick(varying);
    let xc = pick(constant);
    let mut zv = DMatrix::zeros(nt, varying.len() + 1);
    zv.set_column(0, &y_w_hat.column(0));
    zv.columns_mut(1, varying.len()).copy_from(&xv);
    let ls = local(&zv, n, t_len, h, &d);
    let i_nt = DMatrix::<f64>::identity(nt, nt);
    let p_d = &d * &dtd_inv * d.transpose();
    let y_tilde = (&i_nt - &ls.s) * &y;
    let xc_tilde = (&i_nt - &ls.s) * &xc;
    let y_bar = (&i_nt - &p_d) * &y_tilde;
    let xc_bar = (&i_nt - &p_d) * &xc_tilde;
    let beta_c = inv(&(xc_bar.transpose() * &xc_bar)) * xc_bar.transpose() * &y_bar;
    let alpha = &dtd_inv * d.transpose() * (&y_tilde - &xc_tilde * &beta_c);
    let gamma_v = curves(&ls.g, varying.len() + 1, &(&y - &xc * &beta_c));
    let l = &xc_bar * inv(&(xc_bar.transpose() * &xc_bar)) * xc_bar.transpose();
    let eps_pl = (&i_nt - &l) * (&i_nt - &p_d) * (&i_nt - &ls.s) * &y;
    let rss_pl = (eps_pl.transpose() * &eps_pl)[(0, 0)];

    let mut z = DMatrix::zeros(nt, p + 1);
    z.set_column(0, &y_w_hat.column(0));
    z.columns_mut(1, p).copy_from(x);
    let ltv = local(&z, n, t_len, h, &d);
    let eps_tv = (&i_nt - &p_d) * (&i_nt - &ltv.s) * &y;
    let rss_tv = (eps_tv.transpose() * &eps_tv)[(0, 0)];
    let w_stat = nt as f64 / 2.0 * (rss_pl - rss_tv) / rss_tv;

    OracleOutput {
        eta,
        psi: psi.column(0).into_owned(),
        y_w_hat: y_w_hat.column(0).into_owned(),
        s_h: lh.s,
        beta_c: beta_c.column(0).into_owned(),
        gamma_v,
        alpha: alpha.column(0).into_owned(),
        eps_pl,
        rss_pl,
        rss_tv,
        w: w_stat,
    }
}
