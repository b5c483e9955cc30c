#include "mouldmark/spectral_tv.hpp"

#include <algorithm>
#include <cmath>

#include "mouldmark/error.hpp"

namespace mouldmark {

std::string tv_variant_name(TvVariant variant) {
  return variant == TvVariant::Isotropic ? "isotropic" : "anisotropic";
}

TvVariant parse_tv_variant(const std::string& name) {
  if (name == "isotropic" || name == "iso") return TvVariant::Isotropic;
  if (name == "anisotropic" || name == "aniso") return TvVariant::Anisotropic;
  throw Error(ErrorCode::InvalidArgument, "unknown TV variant: " + name);
}

void TvFlowConfig::validate() const {
  if (!(std::isfinite(dt) && dt > 0)) throw Error(ErrorCode::InvalidArgument, "dt must be positive");
  if (!(std::isfinite(t_max) && t_max >= dt)) {
    throw Error(ErrorCode::InvalidArgument, "t_max must be >= dt");
  }
  if (!(inner_tol > 0 && inner_tol < 1)) {
    throw Error(ErrorCode::InvalidArgument, "inner_tol must lie in (0, 1)");
  }
  if (inner_max_iter < 1) throw Error(ErrorCode::InvalidArgument, "inner_max_iter must be >= 1");
}

int TvFlowConfig::steps() const {
  // The small offset keeps t_max = k * dt from rounding up to k + 1 steps.
  return std::max(1, static_cast<int>(std::ceil(t_max / dt - 1e-9)));
}

int ScaleSpaceStack::nonconverged_steps() const {
  return static_cast<int>(std::count_if(steps.begin(), steps.end(),
                                        [](const StepDiagnostics& d) { return !d.converged; }));
}

int ScaleSpaceStack::index_of(double t) const {
  if (frames.empty() || !std::isfinite(t)) {
    throw Error(ErrorCode::InvalidInterval, "scale outside the computed flow");
  }
  const double pos = t / dt;
  const int i = static_cast<int>(std::lround(pos));
  if (pos < -1e-9 || i < 0 || i > last_index()) {
    throw Error(ErrorCode::InvalidInterval,
                "scale " + std::to_string(t) + " outside [0, " + std::to_string(t_max()) + "]");
  }
  return i;
}

double tv_functional(const Field& u, TvVariant variant) {
  const int w = u.width(), h = u.height();
  double total = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double gx = x + 1 < w ? u(x + 1, y) - u(x, y) : 0.0;
      const double gy = y + 1 < h ? u(x, y + 1) - u(x, y) : 0.0;
      total += variant == TvVariant::Isotropic ? std::sqrt(gx * gx + gy * gy)
                                               : std::abs(gx) + std::abs(gy);
    }
  }
  return total;
}

namespace {

// out = f + div(q), div the negative adjoint of the forward-difference
// gradient with zero flux across the border. Requires qx = 0 on the last
// column and qy = 0 on the last row. Returns max |out - previous out|.
double add_divergence(const double* f, const double* qx, const double* qy, int w, int h,
                      double* out) {
  double change = 0;
  for (int y = 0; y < h; ++y) {
    const std::size_t row = static_cast<std::size_t>(y) * w;
    const double* fx = f + row;
    const double* px = qx + row;
    const double* py = qy + row;
    const double* py_up = y > 0 ? py - w : nullptr;
    double* o = out + row;
    for (int x = 0; x < w; ++x) {
      const double d = px[x] - (x > 0 ? px[x - 1] : 0.0) + py[x] - (py_up ? py_up[x] : 0.0);
      const double v = fx[x] + d;
      change = std::max(change, std::abs(v - o[x]));
      o[x] = v;
    }
  }
  return change;
}

// One row of v = f + div(s); returns the largest change against the stored row.
inline double divergence_row(const double* f, const double* sx, const double* sy, int w, int h, int y,
                             double* v) {
  const std::size_t row = static_cast<std::size_t>(y) * w;
  const double* px = sx + row;
  const double* py = sy + row;
  const double* py_up = y > 0 ? py - w : nullptr;
  double* o = v + row;
  const double* fr = f + row;
  double change = 0;
  (void)h;
  for (int x = 0; x < w; ++x) {
    const double d = px[x] - (x > 0 ? px[x - 1] : 0.0) + py[x] - (py_up ? py_up[x] : 0.0);
    const double val = fr[x] + d;
    change = std::max(change, std::abs(val - o[x]));
    o[x] = val;
  }
  return change;
}

struct IterationResult {
  double change;
  double restart;
};

// Fused iteration, row by row: v = f + div(s) (one row ahead), then
// r_new = P(s + grad(v) / 8), s = r_new + beta (r_new - r). The restart
// value is <s_old - r_new, r_new - r>; the change is max |v - v_previous|.
template <TvVariant V>
inline void project_dual(double& ax, double& ay, double lambda) {
  if constexpr (V == TvVariant::Isotropic) {
    const double n2 = ax * ax + ay * ay;
    const double k = n2 > lambda * lambda ? lambda / std::sqrt(n2) : 1.0;
    ax *= k;
    ay *= k;
  } else {
    ax = std::clamp(ax, -lambda, lambda);
    ay = std::clamp(ay, -lambda, lambda);
  }
}

// Fused iteration, row by row: v = f + div(s) (one row ahead), then
// r_new = P(s + grad(v) / 8), s = r_new + beta (r_new - r). The restart
// value is <s_old - r_new, r_new - r>; the change is max |v - v_previous|.
template <TvVariant V>
IterationResult fista_iteration(const double* f, double* s, const double* r, double* r_new, double* v,
                                int w, int h, double lambda, double beta) {
  constexpr double kStep = 1.0 / 8.0;
  const std::size_t n = static_cast<std::size_t>(w) * h;
  double* sx = s;
  double* sy = s + n;
  IterationResult res{divergence_row(f, sx, sy, w, h, 0, v), 0.0};
  for (int y = 0; y < h; ++y) {
    const bool last_row = y + 1 == h;
    if (!last_row) res.change = std::max(res.change, divergence_row(f, sx, sy, w, h, y + 1, v));
    const std::size_t row = static_cast<std::size_t>(y) * w;
    const double* vr = v + row;
    const double* vd = last_row ? vr : vr + w;  // gy = 0 on the last row
    double* px = sx + row;
    double* py = sy + row;
    const double* rx = r + row;
    const double* ry = r + n + row;
    double* nx = r_new + row;
    double* ny = r_new + n + row;
    double restart = 0;
    for (int x = 0; x < w - 1; ++x) {
      double ax = px[x] + kStep * (vr[x + 1] - vr[x]);
      double ay = last_row ? 0.0 : py[x] + kStep * (vd[x] - vr[x]);
      project_dual<V>(ax, ay, lambda);
      nx[x] = ax;
      ny[x] = ay;
      restart += (px[x] - ax) * (ax - rx[x]) + (py[x] - ay) * (ay - ry[x]);
      px[x] = ax + beta * (ax - rx[x]);
      py[x] = ay + beta * (ay - ry[x]);
    }
    {
      const int x = w - 1;
      double ax = 0.0;
      double ay = last_row ? 0.0 : py[x] + kStep * (vd[x] - vr[x]);
      project_dual<V>(ax, ay, lambda);
      nx[x] = ax;
      ny[x] = ay;
      restart += (px[x] - ax) * (ax - rx[x]) + (py[x] - ay) * (ay - ry[x]);
      px[x] = ax + beta * (ax - rx[x]);
      py[x] = ay + beta * (ay - ry[x]);
    }
    res.restart += restart;
  }
  return res;
}

}  // namespace

Field tv_prox(const Field& f, double lambda, TvVariant variant, double tol, int max_iter,
              std::vector<double>& dual, StepDiagnostics* diagnostics) {
  const int w = f.width(), h = f.height();
  const std::size_t n = f.size();
  if (dual.size() != 2 * n) dual.assign(2 * n, 0.0);
  Field out(w, h);
  if (n == 0 || lambda <= 0) {
    out = f;
    if (diagnostics) *diagnostics = {};
    return out;
  }

  // Dual problem: min_{|q| <= lambda} 1/2 |f + div q|^2, gradient -grad(f + div q),
  // Lipschitz constant 8. FISTA with gradient-based adaptive restart.
  const double* fp = f.values().data();
  std::vector<double> r = dual;
  std::vector<double> s = r;
  std::vector<double> r_new(2 * n);
  std::vector<double> v(n);
  double momentum = 1.0;
  const double stop = tol * lambda * lambda;
  StepDiagnostics diag;
  diag.converged = false;

  add_divergence(fp, s.data(), s.data() + n, w, h, v.data());
  for (int it = 1; it <= max_iter; ++it) {
    const double next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    const double beta = (momentum - 1.0) / next;
    const IterationResult res =
        variant == TvVariant::Isotropic
            ? fista_iteration<TvVariant::Isotropic>(fp, s.data(), r.data(), r_new.data(), v.data(), w, h, lambda, beta)
            : fista_iteration<TvVariant::Anisotropic>(fp, s.data(), r.data(), r_new.data(), v.data(), w, h, lambda,
                                                      beta);
    const double change = res.change;
    const double restart_test = res.restart;
    if (restart_test > 0) {
      momentum = 1.0;
      std::copy(r_new.begin(), r_new.end(), s.begin());
    } else {
      momentum = next;
    }
    std::swap(r, r_new);

    diag.iterations = it;
    diag.residual = change / (lambda * lambda);
    if (it > 1 && change <= stop) {
      diag.converged = true;
      break;
    }
  }

  add_divergence(fp, r.data(), r.data() + n, w, h, out.values().data());
  dual = std::move(r);
  if (diagnostics) *diagnostics = diag;
  return out;
}

ScaleSpaceStack tv_flow(const Field& f, const TvFlowConfig& cfg) {
  cfg.validate();
  ScaleSpaceStack stack;
  stack.dt = cfg.dt;
  stack.variant = cfg.variant;
  const int n_steps = cfg.steps();
  stack.times.reserve(n_steps + 1);
  stack.frames.reserve(n_steps + 1);
  stack.steps.reserve(n_steps);
  stack.times.push_back(0.0);
  stack.frames.push_back(f);
  std::vector<double> dual;
  for (int i = 1; i <= n_steps; ++i) {
    StepDiagnostics diag;
    Field next = tv_prox(stack.frames.back(), cfg.dt, cfg.variant, cfg.inner_tol,
                         cfg.inner_max_iter, dual, &diag);
    stack.frames.push_back(std::move(next));
    stack.times.push_back(i * cfg.dt);
    stack.steps.push_back(diag);
  }
  return stack;
}

namespace {

void check_frames(const ScaleSpaceStack& stack) {
  if (stack.frames.size() < 3) {
    throw Error(ErrorCode::TooFewFrames, "spectral response needs at least three frames");
  }
}

// phi(t_i) written into out, using second differences.
void second_difference(const ScaleSpaceStack& stack, int i, Field& out) {
  const int last = stack.last_index();
  const int c = std::clamp(i, 1, last - 1);
  const auto a = stack.frames[c - 1].values();
  const auto b = stack.frames[c].values();
  const auto d = stack.frames[c + 1].values();
  const double k = stack.times[i] / (stack.dt * stack.dt);
  auto o = out.values();
  for (std::size_t p = 0; p < o.size(); ++p) o[p] = k * (d[p] - 2.0 * b[p] + a[p]);
}

}  // namespace

SpectralResponse spectral_response(const ScaleSpaceStack& stack) {
  check_frames(stack);
  SpectralResponse out;
  out.times = stack.times;
  for (int i = 0; i <= stack.last_index(); ++i) {
    Field phi(stack.width(), stack.height());
    second_difference(stack, i, phi);
    double s = 0;
    for (double v : phi.values()) s += std::abs(v);
    out.amplitude.push_back(s);
    out.phi.push_back(std::move(phi));
  }
  return out;
}

std::vector<double> spectral_amplitude(const ScaleSpaceStack& stack) {
  check_frames(stack);
  std::vector<double> amp;
  Field phi(stack.width(), stack.height());
  for (int i = 0; i <= stack.last_index(); ++i) {
    second_difference(stack, i, phi);
    double s = 0;
    for (double v : phi.values()) s += std::abs(v);
    amp.push_back(s);
  }
  return amp;
}

Field scale_remainder(const ScaleSpaceStack& stack, int index) {
  if (stack.frames.size() < 2 || index < 0 || index > stack.last_index()) {
    throw Error(ErrorCode::InvalidInterval, "scale index outside the computed flow");
  }
  const int lo = index < stack.last_index() ? index : index - 1;
  const auto u0 = stack.frames[lo].values();
  const auto u1 = stack.frames[lo + 1].values();
  const auto u = stack.frames[index].values();
  const double k = stack.times[index] / stack.dt;
  Field out(stack.width(), stack.height());
  auto o = out.values();
  for (std::size_t p = 0; p < o.size(); ++p) o[p] = u[p] - k * (u1[p] - u0[p]);
  return out;
}

Field band_pass(const ScaleSpaceStack& stack, double t_lo, double t_hi) {
  if (!(t_lo >= 0 && t_lo < t_hi)) {
    throw Error(ErrorCode::InvalidInterval, "band requires 0 <= t_lo < t_hi");
  }
  const int lo = stack.index_of(t_lo);
  const int hi = stack.index_of(t_hi);
  if (lo >= hi) {
    throw Error(ErrorCode::InvalidInterval, "band collapses to an empty interval on the scale grid");
  }
  Field out = scale_remainder(stack, lo);
  const Field upper = scale_remainder(stack, hi);
  auto o = out.values();
  const auto u = upper.values();
  for (std::size_t p = 0; p < o.size(); ++p) o[p] -= u[p];
  return out;
}

Field band_pass(const Field& f, double t_lo, double t_hi, const TvFlowConfig& cfg) {
  cfg.validate();
  if (!(t_lo >= 0 && t_lo < t_hi && t_hi <= cfg.t_max + 1e-12)) {
    throw Error(ErrorCode::InvalidInterval, "band requires 0 <= t_lo < t_hi <= t_max");
  }
  return band_pass(tv_flow(f, cfg), t_lo, t_hi);
}

Field SpectralDecomposition::reconstruct() const {
  Field out = residual;
  auto o = out.values();
  for (const Field& b : bands) {
    const auto v = b.values();
    for (std::size_t p = 0; p < o.size(); ++p) o[p] += v[p];
  }
  return out;
}

SpectralDecomposition decompose(const ScaleSpaceStack& stack, std::span<const double> band_edges) {
  if (band_edges.empty()) throw Error(ErrorCode::InvalidInterval, "no band edges given");
  SpectralDecomposition out;
  int prev = 0;
  for (double t : band_edges) {
    if (!(t > 0)) throw Error(ErrorCode::InvalidInterval, "band edges must be positive");
    const int idx = stack.index_of(t);
    if (idx <= prev) {
      throw Error(ErrorCode::InvalidInterval,
                  "band edges must be strictly ascending on the scale grid");
    }
    out.bands.push_back(band_pass(stack, stack.times[prev], stack.times[idx]));
    out.band_edges.push_back(stack.times[idx]);
    prev = idx;
  }
  out.residual = scale_remainder(stack, prev);
  out.mean = mean(stack.frames.front());
  return out;
}

SpectralDecomposition decompose(const Field& f, std::span<const double> band_edges,
                                const TvFlowConfig& cfg) {
  return decompose(tv_flow(f, cfg), band_edges);
}

}  // namespace mouldmark
