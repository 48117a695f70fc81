#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "psdo/expr.hpp"
#include "psdo/multi_index.hpp"
#include "psdo/weights.hpp"

namespace psdo::quantize {

using symbols::Complex;
using weights::WeightSequence;

// Complex samples on the uniform grid [-L, L)^d, N points per axis with N a
// power of two, x_n = -L + 2L*n/N. The dual grid has spacing pi/L and covers
// |xi| <= pi*N/(2L). The transform convention is
//   fhat(xi) = integral f(x) e^{-i<x,xi>} dx,
// approximated by the rectangle rule and computed with a radix-2 FFT after
// a checkerboard phase twist; with it, the discrete Parseval identity
// norm2 == spectral_norm2 holds to rounding. Instances are immutable;
// copies share storage; the spectrum is computed on first use.
class GridFunction {
 public:
  static GridFunction from_samples(int d, double L, int N,
                                   std::vector<Complex> samples);
  static GridFunction sample(
      int d, double L, int N,
      const std::function<Complex(std::span<const double>)>& f);

  int dim() const { return d_; }
  double half_width() const { return L_; }
  int points_per_axis() const { return N_; }
  size_t size() const;  // N^d
  double spacing() const { return 2.0 * L_ / N_; }
  double freq_spacing() const;  // pi / L

  const std::vector<Complex>& samples() const { return *samples_; }
  const std::vector<Complex>& spectrum() const;  // lazy, cached

  std::vector<double> axis() const;
  std::vector<double> freq_axis() const;

  double norm2() const;           // sqrt(dx^d sum |f|^2)
  double spectral_norm2() const;  // sqrt((2pi)^-d dxi^d sum |fhat|^2)

 private:
  GridFunction() = default;
  int d_ = 1;
  double L_ = 0.0;
  int N_ = 0;
  std::shared_ptr<const std::vector<Complex>> samples_;
  mutable std::shared_ptr<const std::vector<Complex>> spectrum_;
};

// Pointwise phase-space symbol for quantization; anything evaluable works,
// in particular TruncatedSum from the parametrix module.
using PhaseSymbol =
    std::function<Complex(std::span<const double>, std::span<const double>)>;

// a(x,D)f by the direct double sum
//   (2pi)^-d sum_xi a(x,xi) fhat(xi) e^{i<x,xi>} dxi^d.
// Guards: the outermost eighth of the dual grid must carry at most 1e-10 of
// the spectral peak (aliasing), and |a| must stay finite and below 1e12 on
// the sampled phase-space rectangle (overflow). The SymbolExpr overload
// routes x-independent symbols through a Fourier-multiplier fast path.
GridFunction apply_operator(const symbols::SymbolExpr& a,
                            const GridFunction& f);
GridFunction apply_operator(const PhaseSymbol& a, const GridFunction& f);

// sup over |alpha| <= K and grid x of
//   m^|alpha| |D^alpha f(x)| e^{M(m|x|)} / M_|alpha|,
// with D^alpha f computed spectrally (same aliasing guard). Nondecreasing in
// both K and m.
struct GsNorm {
  double value = 0.0;
  MultiIndex alpha;       // argmax derivative
  std::vector<double> x;  // argmax location
  int K = 0;
};
GsNorm gs_norm_estimate(const GridFunction& f, const WeightSequence& M,
                        double m, int K);

// Orthonormal oscillator eigenfunctions h_0..h_n_max on a d = 1 grid,
// generated by the three-term recurrence with per-step renormalization.
// The quantization of 1 + x^2 + xi^2 acts on them as multiplication by
// eigenvalue(n) = 2n + 2.
class HermiteBasis {
 public:
  HermiteBasis(double L, int N, int n_max);

  int n_max() const { return static_cast<int>(h_.size()) - 1; }
  double eigenvalue(int n) const;
  const GridFunction& function(int n) const;

  std::vector<Complex> coefficients(const GridFunction& f) const;
  GridFunction reconstruct(std::span<const Complex> coeff) const;

 private:
  std::vector<GridFunction> h_;
};

// Inverse of the quantized 1 + x^2 + xi^2 through the eigenexpansion:
// u = sum (v_n / (2n+2)) h_n. Requires v to be captured by the basis up to
// relative mass 1e-8, and verifies a(x,D)u = v to relative 1e-5 before
// returning; both failures throw with the measured numbers.
GridFunction spectral_solve(const GridFunction& v, const HermiteBasis& basis);

// Stretched-exponential decay fit: log y ~ log C - c * t^gamma, gamma picked
// from a 0.05-spaced scan by least-squares residual. Works on the positive
// half of a d = 1 spectrum (t = xi) or on a coefficient-magnitude sequence
// (t = n). Samples below 1e-13 of the peak are noise and dropped; the
// surviving upper envelope must span at least two decades, else
// runtime_error("insufficient dynamic range").
struct DecayFit {
  double c = 0.0;
  double gamma = 0.0;
  double rms = 0.0;
  size_t n_used = 0;
};
DecayFit decay_fit(const GridFunction& f);
DecayFit decay_fit(std::span<const double> magnitudes);

// JSON grid I/O with a base64 sample payload; round trips are bit exact.
void save_grid(const GridFunction& f, const std::string& path);
GridFunction load_grid(const std::string& path);

}  // namespace psdo::quantize
