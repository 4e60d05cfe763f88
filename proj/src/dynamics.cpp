#include "kamdnlw/dynamics.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <unsupported/Eigen/FFT>

#include "kamdnlw/spectral.hpp"

namespace kamdnlw {

namespace {

const double PI = std::numbers::pi;

bool is_power_of_two(std::size_t n) { return n >= 4 && (n & (n - 1)) == 0; }

double ipow(double b, int e) {
  double r = 1;
  for (int k = 0; k < e; ++k) r *= b;
  return r;
}

double antiderivative(const NonlinearitySpec& f, double y) {
  double F = 0;
  for (const auto& t : f.terms()) F += t.coeff * ipow(y, t.y_pow + 1) / (t.y_pow + 1);
  return F;
}

double max_abs(const std::vector<double>& a) {
  double m = 0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

class Stepper {
 public:
  Stepper(std::size_t N, double m, const NonlinearitySpec& g)
      : N_(N), m_(m), g_(g), xs_(spectral::abscissae(N)), ik_(N), k2_(N) {
    for (std::size_t s = 0; s < N; ++s) {
      const int k = spectral::wavenumber(s, N);
      const bool nyquist = 2 * k == -static_cast<int>(N);
      ik_[s] = nyquist ? cplx{} : cplx{0.0, static_cast<double>(k)};
      k2_[s] = nyquist ? 0.0 : -static_cast<double>(k) * k;
    }
  }

  void derivatives(const std::vector<double>& y, std::vector<double>& yx, std::vector<double>& yxx) {
    fft_.fwd(spec_, y);
    tmp_.resize(N_);
    for (std::size_t s = 0; s < N_; ++s) tmp_[s] = ik_[s] * spec_[s];
    fft_.inv(yx, tmp_);
    for (std::size_t s = 0; s < N_; ++s) tmp_[s] = k2_[s] * spec_[s];
    fft_.inv(yxx, tmp_);
  }

  std::vector<double> derivative(const std::vector<double>& y) {
    std::vector<double> yx, yxx;
    derivatives(y, yx, yxx);
    return yx;
  }

  void rhs(const FieldState& s, FieldState& out) {
    derivatives(s.y, yx_, yxx_);
    out.y = s.v;
    out.v.resize(N_);
    for (std::size_t n = 0; n < N_; ++n)
      out.v[n] = yxx_[n] - m_ * s.y[n] + g_.eval(xs_[n], s.y[n], yx_[n], s.v[n]);
  }

  FieldState step(const FieldState& s, double h) {
    FieldState k1, k2, k3, k4, w;
    rhs(s, k1);
    axpy(s, 0.5 * h, k1, w);
    rhs(w, k2);
    axpy(s, 0.5 * h, k2, w);
    rhs(w, k3);
    axpy(s, h, k3, w);
    rhs(w, k4);
    FieldState out = s;
    for (std::size_t n = 0; n < N_; ++n) {
      out.y[n] += h / 6.0 * (k1.y[n] + 2 * k2.y[n] + 2 * k3.y[n] + k4.y[n]);
      out.v[n] += h / 6.0 * (k1.v[n] + 2 * k2.v[n] + 2 * k3.v[n] + k4.v[n]);
    }
    return out;
  }

 private:
  static void axpy(const FieldState& a, double h, const FieldState& k, FieldState& out) {
    out.y.resize(a.y.size());
    out.v.resize(a.v.size());
    for (std::size_t n = 0; n < a.y.size(); ++n) {
      out.y[n] = a.y[n] + h * k.y[n];
      out.v[n] = a.v[n] + h * k.v[n];
    }
  }

  std::size_t N_;
  double m_;
  const NonlinearitySpec& g_;
  std::vector<double> xs_;
  std::vector<cplx> ik_;
  std::vector<double> k2_;
  Eigen::FFT<double> fft_;
  std::vector<cplx> spec_, tmp_;
  std::vector<double> yx_, yxx_;
};

double five_point(double fm2, double fm1, double fp1, double fp2, double h) {
  return (-fp2 + 8 * fp1 - 8 * fm1 + fm2) / (12 * h);
}

void require_uniform(const Trajectory& traj) {
  if (!traj.uniform || traj.times.size() < 5)
    throw std::invalid_argument("identity check needs a uniform trajectory with >= 5 samples");
  const double h = traj.times[1] - traj.times[0];
  for (std::size_t k = 1; k < traj.times.size(); ++k)
    if (std::abs(traj.times[k] - traj.times[k - 1] - h) > 1e-9 * h)
      throw std::invalid_argument("identity check needs uniformly stored times");
}

template <class Functional, class Flux>
IdentityReport identity(const Trajectory& traj, Functional functional, Flux flux) {
  require_uniform(traj);
  IdentityReport rep;
  const std::size_t n = traj.times.size();
  const double h = traj.times[1] - traj.times[0];
  std::vector<double> F(n);
  for (std::size_t k = 0; k < n; ++k) F[k] = functional(traj.states[k]);
  for (std::size_t k = 2; k + 2 < n; ++k) {
    const double num = five_point(F[k - 2], F[k - 1], F[k + 1], F[k + 2], h);
    const double fl = flux(traj.states[k]);
    rep.times.push_back(traj.times[k]);
    rep.numeric.push_back(num);
    rep.flux.push_back(fl);
    rep.max_error = std::max(rep.max_error, std::abs(num - fl));
    rep.max_flux = std::max(rep.max_flux, std::abs(fl));
  }
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double drop = F[k + 1] - F[k];
    const double allowed = 10.0 * traj.error_estimates[k + 1] * (1.0 + std::abs(F[k]));
    if (drop < -allowed) rep.monotone = false;
    rep.worst_decrease = std::min(rep.worst_decrease, drop);
  }
  return rep;
}

}  // namespace

NonlinearitySpec potential_part(const NonlinearitySpec& g) {
  std::vector<GTerm> out;
  for (const auto& t : g.terms())
    if (t.yx_pow == 0 && t.v_pow == 0 && t.x_kind == XFactor::none) out.push_back(t);
  return NonlinearitySpec::of(out);
}

Diagnostics diagnostics(const FieldState& s, const NonlinearitySpec& f, double m) {
  const std::size_t N = s.size();
  const double dx = 2 * PI / static_cast<double>(N);
  const auto yx = spectral::derivative(s.y);
  Diagnostics d;
  for (std::size_t n = 0; n < N; ++n) {
    d.energy += s.v[n] * s.v[n] + yx[n] * yx[n] + m * s.y[n] * s.y[n];
    d.M += yx[n] * s.v[n];
    d.H += 0.5 * (s.v[n] * s.v[n] + yx[n] * yx[n] + m * s.y[n] * s.y[n]) - antiderivative(f, s.y[n]);
    d.mean += s.y[n];
    d.meanvel += s.v[n];
  }
  d.energy *= dx;
  d.M *= dx;
  d.H *= dx;
  d.mean /= static_cast<double>(N);
  d.meanvel /= static_cast<double>(N);
  return d;
}

double lyapunov_M(const FieldState& state) { return diagnostics(state, NonlinearitySpec::zero(), 0).M; }

double lyapunov_H(const FieldState& state, const NonlinearitySpec& f, double m) {
  return diagnostics(state, f, m).H;
}

double flux_M(const FieldState& state, int p) {
  const auto yx = spectral::derivative(state.y);
  double s = 0;
  for (double v : yx) s += ipow(v, p + 1);
  return s * 2 * PI / static_cast<double>(state.size());
}

double flux_H(const FieldState& state, int p) {
  double s = 0;
  for (double v : state.v) s += ipow(v, p + 1);
  return s * 2 * PI / static_cast<double>(state.size());
}

Trajectory integrate(const FieldState& state0, const NonlinearitySpec& g, double m, double T,
                     double dt, const IntegrateOptions& opt) {
  const std::size_t N = state0.size();
  if (!is_power_of_two(N) || state0.v.size() != N)
    throw ConfigError("integrate: grid must be a power of two >= 4");
  if (!(T > 0) || !(dt > 0)) throw ConfigError("integrate: need T > 0 and dt > 0");
  const double dx = 2 * PI / static_cast<double>(N);
  if (dt > opt.cfl * dx * (1 + 1e-12))
    throw ConfigError("integrate: dt = " + std::to_string(dt) + " violates dt <= " +
                      std::to_string(opt.cfl) + " dx = " + std::to_string(opt.cfl * dx));
  const NonlinearitySpec f = opt.potential.empty() ? potential_part(g) : NonlinearitySpec::of(opt.potential);
  const std::size_t every = std::max<std::size_t>(1, opt.store_every);

  Stepper stepper(N, m, g);
  Trajectory traj;
  traj.mass = m;
  FieldState s = state0;
  double t = 0;
  auto store = [&](double est) {
    traj.times.push_back(t);
    traj.states.push_back(s);
    traj.diagnostics.push_back(diagnostics(s, f, m));
    traj.error_estimates.push_back(est);
  };
  store(0.0);

  double est_acc = 0;
  std::size_t count = 0;
  // uniform steps t_k = k dt, then one partial step if T is not a multiple of dt
  const double ratio = T / dt;
  const bool exact = std::abs(ratio - std::round(ratio)) <= 1e-9 * ratio;
  const auto n_full = static_cast<std::size_t>(exact ? std::round(ratio) : std::floor(ratio));
  std::size_t k_uniform = 0;
  while (t < T * (1 - 1e-14)) {
    double h = k_uniform < n_full ? dt : T - t;
    if (k_uniform >= n_full) traj.uniform = false;
    const double vmax = max_abs(s.v);
    const bool adapt = h * vmax > opt.adapt_c;
    if (adapt) {
      h = opt.adapt_c / vmax;
      traj.uniform = false;
    }
    const FieldState full = stepper.step(s, h);
    const FieldState half = stepper.step(stepper.step(s, 0.5 * h), 0.5 * h);
    double diff = 0;
    for (std::size_t n = 0; n < N; ++n)
      diff = std::max({diff, std::abs(full.y[n] - half.y[n]), std::abs(full.v[n] - half.v[n])});
    // error of the retained full step; diff / 15 would be that of the two half steps
    est_acc = std::max(est_acc, diff * 16.0 / 15.0);
    s = full;
    if (!adapt && k_uniform < n_full && traj.uniform)
      t = static_cast<double>(++k_uniform) * dt;
    else {
      t += h;
      if (!adapt && k_uniform < n_full) ++k_uniform;
    }
    ++count;

    const double vnow = max_abs(s.v);
    if (!std::isfinite(vnow) || vnow > opt.blow_up_threshold) {
      traj.blow_up = true;
      traj.blow_up_time = t;
      store(est_acc);
      break;
    }
    if (exact && traj.uniform && k_uniform == n_full) t = T;
    if (count % every == 0 || t >= T * (1 - 1e-14)) {
      store(est_acc);
      est_acc = 0;
    }
  }
  return traj;
}

IdentityReport dM_dt_identity(const Trajectory& traj, int p) {
  return identity(traj, [](const FieldState& s) { return lyapunov_M(s); },
                  [p](const FieldState& s) { return flux_M(s, p); });
}

IdentityReport dH_dt_identity(const Trajectory& traj, int p, const NonlinearitySpec& f) {
  const double m = traj.mass;
  return identity(traj, [&](const FieldState& s) { return lyapunov_H(s, f, m); },
                  [p](const FieldState& s) { return flux_H(s, p); });
}

namespace {

template <class Functional>
double centered_rate(const FieldState& state, const NonlinearitySpec& g, double m, double h,
                     Functional F) {
  Stepper st(state.size(), m, g);
  const auto p1 = st.step(state, h), p2 = st.step(p1, h);
  const auto m1 = st.step(state, -h), m2 = st.step(m1, -h);
  return five_point(F(m2), F(m1), F(p1), F(p2), h);
}

}  // namespace

double dM_dt_at(const FieldState& state, const NonlinearitySpec& g, double m, double h) {
  return centered_rate(state, g, m, h, [](const FieldState& s) { return lyapunov_M(s); });
}

double dH_dt_at(const FieldState& state, const NonlinearitySpec& g, const NonlinearitySpec& f,
                double m, double h) {
  return centered_rate(state, g, m, h, [&](const FieldState& s) { return lyapunov_H(s, f, m); });
}

BlowUpReport blow_up_certificate(const Trajectory& traj) {
  BlowUpReport rep;
  rep.flagged = traj.blow_up;
  rep.t_flag = traj.blow_up_time;
  if (traj.diagnostics.empty()) {
    rep.inconclusive = true;
    return rep;
  }
  rep.w0 = traj.diagnostics.front().meanvel;
  if (!(rep.w0 > 0)) {
    rep.inconclusive = true;
    return rep;
  }
  rep.min_margin = std::numeric_limits<double>::infinity();
  double drift = 0;
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    const double t = traj.times[k];
    if (rep.w0 * t >= 1) break;
    const double pred = rep.w0 / (1 - rep.w0 * t);
    const double obs = traj.diagnostics[k].meanvel;
    rep.times.push_back(t);
    rep.observed.push_back(obs);
    rep.predicted.push_back(pred);
    const double margin = (obs - pred) / pred;
    rep.min_margin = std::min(rep.min_margin, margin);
    // local errors accumulate additively in 1/w, so the relative slack grows like w
    if (k > 0) drift += traj.error_estimates[k] / (pred * pred);
    const double tol = 1e-9 + 10.0 * drift * pred;
    if (margin < -tol) rep.bound_holds = false;
  }
  return rep;
}

MeanAverageReport mean_average_diagnostic(const QPSolution& sol, int p, int q, std::size_t n_theta,
                                          std::size_t n_x) {
  using Eigen::Index;
  using Eigen::MatrixXd;
  const int d = sol.basis.dim();
  std::size_t points = 1;
  for (int s = 0; s < d; ++s) points *= n_theta;
  const Index B = static_cast<Index>(sol.basis.size());
  MatrixXd Ct(static_cast<Index>(points), B), St(static_cast<Index>(points), B);
  std::vector<std::size_t> idx(d);
  for (std::size_t pt = 0; pt < points; ++pt) {
    std::size_t rest = pt;
    for (int s = d - 1; s >= 0; --s) {
      idx[s] = rest % n_theta;
      rest /= n_theta;
    }
    for (Index r = 0; r < B; ++r) {
      double phase = 0, rate = 0;
      for (int s = 0; s < d; ++s) {
        phase += sol.basis[r][s] * 2 * PI * idx[s] / n_theta;
        rate += sol.basis[r][s] * sol.omega[s];
      }
      Ct(static_cast<Index>(pt), r) = std::cos(phase);
      St(static_cast<Index>(pt), r) = -rate * std::sin(phase);
    }
  }
  const auto xs = spectral::abscissae(n_x);
  MatrixXd Cx(static_cast<Index>(n_x), sol.j_max + 1), Sx(static_cast<Index>(n_x), sol.j_max + 1);
  for (std::size_t n = 0; n < n_x; ++n)
    for (int j = 0; j <= sol.j_max; ++j) {
      Cx(static_cast<Index>(n), j) = std::cos(j * xs[n]);
      Sx(static_cast<Index>(n), j) = -j * std::sin(j * xs[n]);
    }
  const MatrixXd Yx = Ct * sol.coeffs * Sx.transpose();
  const MatrixXd V = St * sol.coeffs * Cx.transpose();
  MeanAverageReport rep;
  rep.p = p;
  rep.q = q;
  rep.avg_yx_p = Yx.unaryExpr([p](double v) { return ipow(v, p); }).mean();
  rep.avg_yt_q = V.unaryExpr([q](double v) { return ipow(v, q); }).mean();
  return rep;
}

MeanAverageReport mean_average_diagnostic(const Trajectory& traj, int p, int q) {
  MeanAverageReport rep;
  rep.p = p;
  rep.q = q;
  if (traj.times.size() < 2) throw std::invalid_argument("mean_average_diagnostic: trajectory too short");
  std::vector<double> a(traj.times.size()), b(traj.times.size());
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    const auto& s = traj.states[k];
    const auto yx = spectral::derivative(s.y);
    double sa = 0, sb = 0;
    for (std::size_t n = 0; n < s.size(); ++n) {
      sa += ipow(yx[n], p);
      sb += ipow(s.v[n], q);
    }
    a[k] = sa / static_cast<double>(s.size());
    b[k] = sb / static_cast<double>(s.size());
  }
  for (std::size_t k = 0; k + 1 < traj.times.size(); ++k) {
    const double h = traj.times[k + 1] - traj.times[k];
    rep.avg_yx_p += 0.5 * h * (a[k] + a[k + 1]);
    rep.avg_yt_q += 0.5 * h * (b[k] + b[k + 1]);
  }
  const double span = traj.times.back() - traj.times.front();
  rep.avg_yx_p /= span;
  rep.avg_yt_q /= span;
  return rep;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  out << "t,energy,M,H,mean,meanvel,flag\n";
  char buf[256];
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    const auto& d = traj.diagnostics[k];
    const int flag = traj.blow_up && k + 1 == traj.times.size() ? 1 : 0;
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", traj.times[k], d.energy,
                  d.M, d.H, d.mean, d.meanvel, flag);
    out << buf;
  }
}

}  // namespace kamdnlw
