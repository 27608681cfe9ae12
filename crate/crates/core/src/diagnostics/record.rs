use std::fmt::Write as _;

/// One time sample of every monitored scalar.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub energy: f64,
    pub dissipation: f64,
    pub modulated_energy: f64,
    pub mass: f64,
    pub mean_u: Vec<f64>,
    pub mean_j: Vec<f64>,
    /// Velocity moment of the configured order `alpha`.
    pub m_alpha: f64,
    pub rho_sup: f64,
    pub j_sup: f64,
    pub u_sup: f64,
    pub grad_sup: f64,
    /// `int_1^t ||grad u||_inf`.
    pub gradint: f64,
    /// `int_0^t ||grad u||_inf`.
    pub gradint0: f64,
    /// `int_0^t ||F||^2_{H^-1/2}`.
    pub force_int: f64,
    /// `int_0^t D`.
    pub dissipation_int: f64,
    /// `int_0^t e^s ||u||_inf`.
    pub exp_u_sup_int: f64,
    pub criterion_value: f64,
    pub lambda_theory: f64,
    /// `sum w |v - U|` with `U = <u0 + j0> / 2`.
    pub w1_kinetic: f64,
    /// `w1_kinetic + ||u - U||_{L^2}`.
    pub w1_upper: f64,
    /// `|<u + j>(t) - <u0 + j0>|`.
    pub momentum_drift: f64,
    /// `E(t) + int_0^t D - E(0)`.
    pub energy_residual: f64,
    /// `Emod - E + |<u0 + j0>|^2 / 4`.
    pub emod_offset: f64,
    pub eqmoy_residual: f64,
    pub strong_existence_ok: bool,
    pub bootstrap_ok: bool,
}

impl DiagnosticsRecord {
    /// Column names, in the order written by [`DiagnosticsRecord::csv_row`].
    pub fn csv_header(d: usize) -> String {
        let mut cols: Vec<String> =
            ["t", "energy", "dissipation", "modulated_energy", "mass"].iter().map(|s| s.to_string()).collect();
        cols.extend((1..=d).map(|a| format!("mean_u{a}")));
        cols.extend((1..=d).map(|a| format!("mean_j{a}")));
        cols.extend(
            [
                "m_alpha",
                "rho_sup",
                "j_sup",
                "u_sup",
                "grad_sup",
                "gradint",
                "gradint0",
                "force_int",
                "dissipation_int",
                "exp_u_sup_int",
                "criterion_value",
                "lambda_theory",
                "w1_kinetic",
                "w1_upper",
                "momentum_drift",
                "energy_residual",
                "emod_offset",
                "eqmoy_residual",
                "strong_existence_ok",
                "bootstrap_ok",
                "tstar_ok",
            ]
            .iter()
            .map(|s| s.to_string()),
        );
        cols.join(",")
    }

    pub fn csv_row(&self) -> String {
        let mut out = String::new();
        let mut put = |v: f64| {
            if !out.is_empty() {
                out.push(',');
            }
            write!(out, "{v:.17e}").expect("writing to a String cannot fail");
        };
        for v in [self.t, self.energy, self.dissipation, self.modulated_energy, self.mass] {
            put(v);
        }
        self.mean_u.iter().chain(&self.mean_j).for_each(|v| put(*v));
        for v in [
            self.m_alpha,
            self.rho_sup,
            self.j_sup,
            self.u_sup,
            self.grad_sup,
            self.gradint,
            self.gradint0,
            self.force_int,
            self.dissipation_int,
            self.exp_u_sup_int,
            self.criterion_value,
            self.lambda_theory,
            self.w1_kinetic,
            self.w1_upper,
            self.momentum_drift,
            self.energy_residual,
            self.emod_offset,
            self.eqmoy_residual,
        ] {
            put(v);
        }
        let flags = [self.strong_existence_ok, self.bootstrap_ok, self.tstar_ok()];
        for f in flags {
            out.push(',');
            out.push(if f { '1' } else { '0' });
        }
        out
    }

    /// Both conditions defining the bootstrap time hold.
    pub fn tstar_ok(&self) -> bool {
        self.strong_existence_ok && self.bootstrap_ok
    }

    /// Parse a row written by [`DiagnosticsRecord::csv_row`].
    pub fn from_csv_row(row: &str, d: usize) -> Option<Self> {
        let cells: Vec<&str> = row.trim().split(',').collect();
        if cells.len() != 5 + 2 * d + 18 + 3 {
            return None;
        }
        let nums: Vec<f64> = cells[..cells.len() - 3].iter().map(|c| c.parse().ok()).collect::<Option<_>>()?;
        let flag = |s: &str| s == "1";
        let mut it = nums.into_iter();
        let mut next = || it.next().expect("length checked above");
        let t = next();
        let energy = next();
        let dissipation = next();
        let modulated_energy = next();
        let mass = next();
        let mean_u = (0..d).map(|_| next()).collect();
        let mean_j = (0..d).map(|_| next()).collect();
        Some(Self {
            t,
            energy,
            dissipation,
            modulated_energy,
            mass,
            mean_u,
            mean_j,
            m_alpha: next(),
            rho_sup: next(),
            j_sup: next(),
            u_sup: next(),
            grad_sup: next(),
            gradint: next(),
            gradint0: next(),
            force_int: next(),
            dissipation_int: next(),
            exp_u_sup_int: next(),
            criterion_value: next(),
            lambda_theory: next(),
            w1_kinetic: next(),
            w1_upper: next(),
            momentum_drift: next(),
            energy_residual: next(),
            emod_offset: next(),
            eqmoy_residual: next(),
            strong_existence_ok: flag(cells[cells.len() - 3]),
            bootstrap_ok: flag(cells[cells.len() - 2]),
        })
    }
}
