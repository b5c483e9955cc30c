#include "mouldmark/transforms.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <thread>

#include "mouldmark/error.hpp"

namespace mouldmark {

std::string orientation_name(Orientation o) {
  return o == Orientation::Vertical ? "vertical" : "horizontal";
}

Orientation parse_orientation(const std::string& name) {
  if (name == "vertical") return Orientation::Vertical;
  if (name == "horizontal") return Orientation::Horizontal;
  throw Error(ErrorCode::InvalidArgument, "unknown orientation: " + name);
}

void RectFilterSpec::validate() const {
  if (width_px < 1 || width_px % 2 == 0) {
    throw Error(ErrorCode::InvalidArgument, "filter width must be an odd number of pixels");
  }
  if (!(height_fraction > 0 && height_fraction <= 1)) {
    throw Error(ErrorCode::InvalidArgument, "filter height fraction must lie in (0, 1]");
  }
}

namespace {

// The FFTW planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

void run_dft(int width, int height, std::vector<std::complex<double>>& data, int sign) {
  auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_2d(height, width, ptr, ptr, sign, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(plan);
}

int signed_frequency(int k, int n) { return k <= n / 2 ? k : k - n; }

}  // namespace

std::vector<std::complex<double>> fft2(const Field& f) {
  std::vector<std::complex<double>> data(f.values().begin(), f.values().end());
  if (!data.empty()) run_dft(f.width(), f.height(), data, FFTW_FORWARD);
  return data;
}

Field rect_fourier_filter(const Field& img, const RectFilterSpec& spec) {
  spec.validate();
  const int w = img.width(), h = img.height();
  if (w == 0 || h == 0) return img;
  auto spectrum = fft2(img);
  const bool vertical = spec.orientation == Orientation::Vertical;
  const int half_width = (spec.width_px - 1) / 2;
  // Line axis length: the frequency axis orthogonal to the lines.
  const double reach = spec.height_fraction * (vertical ? w : h) / 2.0;
  for (int ky = 0; ky < h; ++ky) {
    const int fy = signed_frequency(ky, h);
    for (int kx = 0; kx < w; ++kx) {
      const int fx = signed_frequency(kx, w);
      const bool keep = vertical ? (std::abs(fy) <= half_width && std::abs(fx) <= reach)
                                 : (std::abs(fx) <= half_width && std::abs(fy) <= reach);
      if (!keep && (fx != 0 || fy != 0)) {
        spectrum[static_cast<std::size_t>(ky) * w + kx] = 0.0;
      }
    }
  }
  run_dft(w, h, spectrum, FFTW_BACKWARD);
  Field out(w, h);
  const double norm = 1.0 / (static_cast<double>(w) * h);
  auto o = out.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = spectrum[i].real() * norm;
  return out;
}

std::vector<double> project(const Field& img, Orientation orientation) {
  const int w = img.width(), h = img.height();
  if (orientation == Orientation::Vertical) {
    std::vector<double> out(w, 0.0);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) out[x] += img(x, y);
    }
    return out;
  }
  std::vector<double> out(h, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) out[y] += img(x, y);
  }
  return out;
}

std::vector<double> Sinogram::column(std::size_t angle_index) const {
  std::vector<double> out(offsets_px.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = data(static_cast<int>(angle_index), static_cast<int>(k));
  }
  return out;
}

std::size_t Sinogram::nearest_angle_index(double angle_deg) const {
  std::size_t best = 0;
  double best_d = 1e300;
  for (std::size_t a = 0; a < angles_deg.size(); ++a) {
    double d = std::fmod(std::abs(angles_deg[a] - angle_deg), 180.0);
    d = std::min(d, 180.0 - d);
    if (d < best_d) {
      best_d = d;
      best = a;
    }
  }
  return best;
}

std::vector<double> angle_grid(double step_deg) {
  if (!(step_deg > 0 && step_deg <= 180)) {
    throw Error(ErrorCode::InvalidArgument, "angle step must lie in (0, 180]");
  }
  std::vector<double> out;
  for (int i = 0;; ++i) {
    const double a = i * step_deg;
    if (a >= 180.0 - 1e-9) break;
    out.push_back(a);
  }
  return out;
}

namespace {

Field pad_square(const Field& img) {
  const int n = std::max(img.width(), img.height());
  if (img.width() == n && img.height() == n) return img;
  Field out(n, n, 0.0);
  const int ox = (n - img.width()) / 2, oy = (n - img.height()) / 2;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) out(x + ox, y + oy) = img(x, y);
  }
  return out;
}

// Forward-mapped rotation: each pixel's value is split bilinearly onto the
// rotated grid, so column sums keep the total mass at every angle. Only the
// column coordinate survives the sum, which leaves a linear split in s.
// CDF of a unit-mass trapezoid: the projection of a unit pixel square onto a
// direction with |cos| = a and |sin| = b. Centred on zero.
double footprint_cdf(double s, double a, double b) {
  if (a < b) std::swap(a, b);
  const double u = s + 0.5 * (a + b);
  if (u <= 0) return 0.0;
  if (u >= a + b) return 1.0;
  if (b < 1e-12) return u / a;
  if (u <= b) return u * u / (2 * a * b);
  if (u <= a) return (u - 0.5 * b) / a;
  const double r = a + b - u;
  return 1.0 - r * r / (2 * a * b);
}

// Projects `square` and the support mask `inside` together; both outputs
// share the footprint weights.
void project_angles(const Field& square, const Field& inside, const std::vector<double>& angles_deg,
                    int margin, std::size_t a_begin, std::size_t a_end, Field& data, Field& ray_length) {
  const int n = square.width();
  const double c = (n - 1) / 2.0;
  const int len = n + 2 * margin;
  for (std::size_t a = a_begin; a < a_end; ++a) {
    const double th = angles_deg[a] * std::numbers::pi / 180.0;
    const double nx = std::cos(th), ny = std::sin(th);
    const double ax = std::abs(nx), ay = std::abs(ny);
    const double half = 0.5 * (ax + ay);
    const int col = static_cast<int>(a);
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        const double m = inside(x, y);
        if (m == 0.0) continue;
        const double v = square(x, y);
        // Bin j covers [j - 1/2, j + 1/2] in the shifted offset coordinate.
        const double pos = (x - c) * nx + (y - c) * ny + c + margin;
        const int first = static_cast<int>(std::floor(pos - half + 0.5));
        const int last = static_cast<int>(std::ceil(pos + half - 0.5));
        double below = 0.0;
        for (int j = first; j <= last; ++j) {
          const double upto = j == last ? 1.0 : footprint_cdf(j + 0.5 - pos, ax, ay);
          const double w = upto - below;
          below = upto;
          if (w > 0 && j >= 0 && j < len) {
            data(col, j) += w * v;
            ray_length(col, j) += w * m;
          }
        }
      }
    }
  }
}

}  // namespace

Sinogram radon(const Field& img, const std::vector<double>& angles_deg) {
  if (img.empty()) throw Error(ErrorCode::InvalidArgument, "radon of an empty image");
  for (double a : angles_deg) {
    if (!(a >= 0 && a < 180)) throw Error(ErrorCode::InvalidArgument, "angles must lie in [0, 180)");
  }
  const Field square = pad_square(img);
  const int n = square.width();
  const int margin = static_cast<int>(std::ceil(n * (std::numbers::sqrt2 - 1.0) / 2.0)) + 1;
  const int len = n + 2 * margin;
  const double c = (n - 1) / 2.0;

  Sinogram sino;
  sino.angles_deg = angles_deg;
  for (int j = 0; j < len; ++j) sino.offsets_px.push_back((j - margin) - c);
  sino.data = Field(static_cast<int>(angles_deg.size()), len);
  sino.ray_length = Field(static_cast<int>(angles_deg.size()), len);
  const Field inside = pad_square(Field(img.width(), img.height(), 1.0));
  const std::size_t n_angles = angles_deg.size();
  const std::size_t workers =
      std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, std::max<std::size_t>(n_angles / 8, 1));
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      project_angles(square, inside, angles_deg, margin, n_angles * w / workers, n_angles * (w + 1) / workers,
                     sino.data, sino.ray_length);
    });
  }
  pool.clear();
  return sino;
}

namespace {

AngleEstimate pick_angle(const std::vector<double>& angles, const std::vector<double>& score,
                         double low_confidence_ratio) {
  const double best_score = *std::max_element(score.begin(), score.end());
  double mean_score = 0;
  for (double s : score) mean_score += s;
  mean_score /= static_cast<double>(score.size());

  auto axis_distance = [](double a) {
    const double d = std::fmod(a, 90.0);
    return std::min(d, 90.0 - d);
  };
  std::size_t best = 0;
  bool have = false;
  const double tie = best_score * 1e-12;
  for (std::size_t a = 0; a < score.size(); ++a) {
    if (score[a] < best_score - tie) continue;
    if (!have || axis_distance(angles[a]) < axis_distance(angles[best])) {
      best = a;
      have = true;
    }
  }

  AngleEstimate est;
  est.angle_deg = angles[best];
  est.peak_to_mean = mean_score > 0 ? best_score / mean_score : 1.0;
  est.low_confidence = !(best_score > 1e-18) || est.peak_to_mean < low_confidence_ratio;
  return est;
}

}  // namespace

AngleEstimate dominant_angle(const Sinogram& sino, double low_confidence_ratio) {
  const std::size_t n_angles = sino.angles_deg.size();
  if (n_angles == 0 || sino.offsets_px.empty()) {
    throw Error(ErrorCode::InvalidArgument, "empty sinogram");
  }
  // The longest ray at 0 degrees spans the image height and at 90 the width,
  // so the minimum over angles of the longest ray is the shorter side.
  double shorter_side = 1e300;
  for (std::size_t a = 0; a < n_angles; ++a) {
    double span = 0;
    for (std::size_t k = 0; k < sino.offsets_px.size(); ++k) {
      span = std::max(span, sino.ray_length(static_cast<int>(a), static_cast<int>(k)));
    }
    shorter_side = std::min(shorter_side, span);
  }
  const double min_len = std::max(1.0, 0.5 * shorter_side);

  std::vector<double> score(n_angles, 0.0);
  for (std::size_t a = 0; a < n_angles; ++a) {
    double s1 = 0, s2 = 0;
    int count = 0;
    for (std::size_t k = 0; k < sino.offsets_px.size(); ++k) {
      const double len = sino.ray_length(static_cast<int>(a), static_cast<int>(k));
      if (len < min_len) continue;
      const double m = sino.data(static_cast<int>(a), static_cast<int>(k)) / len;
      s1 += m;
      s2 += m * m;
      ++count;
    }
    if (count > 1) {
      const double mu = s1 / count;
      score[a] = std::max(0.0, s2 / count - mu * mu);
    }
  }

  return pick_angle(sino.angles_deg, score, low_confidence_ratio);
}

std::vector<double> periodic_scores(const Sinogram& sino, double min_period_px, double max_period_px) {
  if (sino.angles_deg.empty() || sino.offsets_px.empty()) {
    throw Error(ErrorCode::InvalidArgument, "empty sinogram");
  }
  if (!(min_period_px > 0 && min_period_px <= max_period_px)) {
    throw Error(ErrorCode::InvalidArgument, "period range must satisfy 0 < min <= max");
  }
  const int len = static_cast<int>(sino.offsets_px.size());
  std::vector<int> bins;
  for (int k = 1; k <= len / 2; ++k) {
    const double period = static_cast<double>(len) / k;
    if (period >= min_period_px && period <= max_period_px) bins.push_back(k);
  }
  std::vector<double> score(sino.angles_deg.size(), 0.0);
  if (bins.empty()) return score;
  // A flat image projects to mean * ray_length; removing that envelope
  // leaves only intensity structure.
  const bool have_lengths = sino.ray_length.same_shape(sino.data);
  std::vector<double> col(len);
  for (std::size_t a = 0; a < sino.angles_deg.size(); ++a) {
    const int ai = static_cast<int>(a);
    double mass = 0, length = 0;
    for (int j = 0; j < len; ++j) {
      mass += sino.data(ai, j);
      length += have_lengths ? sino.ray_length(ai, j) : 1.0;
    }
    const double level = length > 0 ? mass / length : 0.0;
    for (int j = 0; j < len; ++j) {
      col[j] = sino.data(ai, j) - level * (have_lengths ? sino.ray_length(ai, j) : 1.0);
    }
    double best = 0;
    for (int k : bins) {
      std::complex<double> acc = 0;
      for (int j = 0; j < len; ++j) {
        acc += col[j] * std::polar(1.0, -2.0 * std::numbers::pi * k * j / len);
      }
      best = std::max(best, std::norm(acc));
    }
    score[a] = best;
  }
  return score;
}

AngleEstimate periodic_angle(const Sinogram& sino, double min_period_px, double max_period_px,
                             double low_confidence_ratio) {
  return pick_angle(sino.angles_deg, periodic_scores(sino, min_period_px, max_period_px),
                    low_confidence_ratio);
}

}  // namespace mouldmark
