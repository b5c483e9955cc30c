#pragma once

#include <span>
#include <string>
#include <vector>

#include "mouldmark/grid.hpp"

namespace mouldmark {

/// Discretisation of the total variation: Euclidean (rotation invariant)
/// or l1 (axis-aligned) gradient magnitude.
enum class TvVariant { Isotropic, Anisotropic };

std::string tv_variant_name(TvVariant variant);
TvVariant parse_tv_variant(const std::string& name);

/// Scale grid and inner solver settings for the TV flow.
///
/// Scales are in normalized contrast units: the input is expected in [0, 1]
/// and a disk of radius r and height h vanishes at t = h * r / 2.
struct TvFlowConfig {
  double dt = 0.013;
  double t_max = 1.3;
  TvVariant variant = TvVariant::Isotropic;
  /// Stop the per-step solve when the max-norm change of the iterate over one
  /// iteration drops below inner_tol * dt^2. The spectral transform divides
  /// frame differences by dt^2, so this bounds the solver noise in phi / t.
  double inner_tol = 1e-5;
  int inner_max_iter = 500;

  /// Throws Error(InvalidArgument) when the invariants are violated.
  void validate() const;
  /// Number of flow steps, ceil(t_max / dt).
  int steps() const;

  friend bool operator==(const TvFlowConfig&, const TvFlowConfig&) = default;
};

struct StepDiagnostics {
  int iterations = 0;
  /// Final max-norm iterate change divided by dt^2.
  double residual = 0.0;
  bool converged = true;
};

/// Frames u(t_i) of the TV flow on the uniform grid t_i = i * dt.
struct ScaleSpaceStack {
  double dt = 0.0;
  TvVariant variant = TvVariant::Isotropic;
  std::vector<double> times;
  std::vector<Field> frames;
  /// One entry per step (frames.size() - 1 entries).
  std::vector<StepDiagnostics> steps;

  int width() const { return frames.empty() ? 0 : frames.front().width(); }
  int height() const { return frames.empty() ? 0 : frames.front().height(); }
  int last_index() const { return static_cast<int>(frames.size()) - 1; }
  double t_max() const { return times.empty() ? 0.0 : times.back(); }
  /// Number of steps whose inner solve hit inner_max_iter.
  int nonconverged_steps() const;
  /// Nearest grid index for scale t; throws Error(InvalidInterval) when t is
  /// outside [0, t_max].
  int index_of(double t) const;
};

/// Sum over pixels of the forward-difference gradient magnitude with
/// replicate (Neumann) boundary.
double tv_functional(const Field& u, TvVariant variant);

/// Solves argmin_v 1/2 |v - f|^2 + lambda * J_TV(v) with a fast dual
/// projected-gradient iteration. The dual field (two components per pixel,
/// x then y) is read as a warm start when sized 2 * f.size() and written back.
Field tv_prox(const Field& f, double lambda, TvVariant variant, double tol, int max_iter,
              std::vector<double>& dual, StepDiagnostics* diagnostics = nullptr);

/// Implicit (iterated proximal) time stepping of the TV flow u_t = div(Du/|Du|)
/// with Neumann boundary. Frame 0 is f.
ScaleSpaceStack tv_flow(const Field& f, const TvFlowConfig& cfg);

struct SpectralResponse {
  std::vector<double> times;
  /// phi(t_i) = t_i * u_tt(t_i).
  std::vector<Field> phi;
  /// S(t_i) = sum_x |phi(t_i, x)|.
  std::vector<double> amplitude;
};

/// Central second differences in the interior, one-sided at the ends.
/// Throws Error(TooFewFrames) for stacks with fewer than three frames.
SpectralResponse spectral_response(const ScaleSpaceStack& stack);
/// S(t) only, without keeping the phi fields.
std::vector<double> spectral_amplitude(const ScaleSpaceStack& stack);

/// u(t) - t * u_t(t) at grid index i, forward difference for u_t (backward
/// at the last frame). Bands are differences of this quantity.
Field scale_remainder(const ScaleSpaceStack& stack, int index);

/// Band over [t_lo, t_hi): remainder(t_lo) - remainder(t_hi). Scales are
/// snapped to the grid; throws Error(InvalidInterval) unless
/// 0 <= t_lo < t_hi <= t_max after snapping.
Field band_pass(const ScaleSpaceStack& stack, double t_lo, double t_hi);
/// Convenience overload that runs the flow first.
Field band_pass(const Field& f, double t_lo, double t_hi, const TvFlowConfig& cfg);

struct SpectralDecomposition {
  /// Snapped upper edges t_1 < ... < t_K; band k covers [t_{k-1}, t_k) with t_0 = 0.
  std::vector<double> band_edges;
  std::vector<Field> bands;
  /// u(t_K) - t_K * u_t(t_K); holds the mean and everything beyond t_K.
  Field residual;
  double mean = 0.0;

  /// Sum of all bands plus the residual.
  Field reconstruct() const;
};

/// Throws Error(InvalidInterval) unless the edges are strictly ascending and
/// inside (0, t_max] after snapping.
SpectralDecomposition decompose(const ScaleSpaceStack& stack, std::span<const double> band_edges);
SpectralDecomposition decompose(const Field& f, std::span<const double> band_edges,
                                const TvFlowConfig& cfg);

}  // namespace mouldmark
