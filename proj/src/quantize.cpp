#include "psdo/quantize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "psdo/parser.hpp"

namespace psdo::quantize {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSymbolCap = 1e12;   // |a| above this is an overflow
constexpr double kAliasTol = 1e-10;   // spectral tail allowance, outer eighth

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

// In-place unnormalized DFT, sum_n f_n e^{-2 pi i nk/N}. Twiddles come from
// std::polar per butterfly; the O(N log N) cost stays negligible at these
// sizes and the accumulated-product drift does not.
void fft_inplace(std::vector<Complex>& a) {
  const size_t n = a.size();
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * kPi / static_cast<double>(len);
    for (size_t i = 0; i < n; i += len) {
      for (size_t k = 0; k < len / 2; ++k) {
        const Complex w = std::polar(1.0, ang * static_cast<double>(k));
        const Complex u = a[i + k];
        const Complex v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
      }
    }
  }
}

// One forward pass along `axis`: with x_n = -L + n dx and xi_m = (m - N/2) dxi
// the continuum kernel factors as e^{-i x_n xi_m} =
// (-1)^{m-N/2} (-1)^n e^{-2 pi i nm/N}, and N/2 is even for every N >= 4
// handled here, so both twists are plain checkerboards.
void forward_axis(std::vector<Complex>& data, int d, int N, int axis) {
  std::vector<Complex> line(N);
  const auto run = [&](size_t start, size_t stride) {
    for (int n = 0; n < N; ++n)
      line[n] = data[start + n * stride] * ((n & 1) ? -1.0 : 1.0);
    fft_inplace(line);
    for (int m = 0; m < N; ++m)
      data[start + m * stride] = line[m] * ((m & 1) ? -1.0 : 1.0);
  };
  if (d == 1) {
    run(0, 1);
  } else if (axis == 0) {
    for (int iy = 0; iy < N; ++iy) run(iy, N);
  } else {
    for (int ix = 0; ix < N; ++ix) run(static_cast<size_t>(ix) * N, 1);
  }
}

// One inverse pass, resumming sum_m g_m e^{+i x_n xi_m} along `axis`. The
// conjugate kernel reduces to conj(fft(conj(twisted g))) with the same
// checkerboards. No normalization; callers carry the (2pi)^-d dxi^d factor.
void inverse_axis(std::vector<Complex>& data, int d, int N, int axis) {
  std::vector<Complex> line(N);
  const auto run = [&](size_t start, size_t stride) {
    for (int m = 0; m < N; ++m)
      line[m] = std::conj(data[start + m * stride] * ((m & 1) ? -1.0 : 1.0));
    fft_inplace(line);
    for (int n = 0; n < N; ++n)
      data[start + n * stride] = std::conj(line[n]) * ((n & 1) ? -1.0 : 1.0);
  };
  if (d == 1) {
    run(0, 1);
  } else if (axis == 0) {
    for (int iy = 0; iy < N; ++iy) run(iy, N);
  } else {
    for (int ix = 0; ix < N; ++ix) run(static_cast<size_t>(ix) * N, 1);
  }
}

double peak_abs(const std::vector<Complex>& v) {
  double peak = 0.0;
  for (const Complex& z : v) peak = std::max(peak, std::abs(z));
  return peak;
}

// Largest |fhat| over dual points whose index sits in the outermost eighth of
// any axis, i.e. |xi_a| >= (7/8) * xi_max somewhere.
double outer_band_abs(const std::vector<Complex>& sp, int d, int N) {
  const int lo = N / 16;            // m < lo  or  m >= N - lo is outer
  double band = 0.0;
  const size_t total = sp.size();
  for (size_t idx = 0; idx < total; ++idx) {
    size_t rest = idx;
    bool outer = false;
    for (int a = d - 1; a >= 0; --a) {
      const int m = static_cast<int>(rest % N);
      rest /= N;
      if (m < lo || m >= N - lo) outer = true;
    }
    if (outer) band = std::max(band, std::abs(sp[idx]));
  }
  return band;
}

void require_resolved_spectrum(const GridFunction& f, const char* who) {
  const auto& sp = f.spectrum();
  const double peak = peak_abs(sp);
  if (peak == 0.0) return;
  const double band = outer_band_abs(sp, f.dim(), f.points_per_axis());
  if (band > kAliasTol * peak) {
    std::ostringstream os;
    os << who << ": aliasing guard tripped, outer-band spectrum is "
       << band / peak << " of peak (allowed " << kAliasTol
       << "); refine the grid or widen it";
    throw std::runtime_error(os.str());
  }
}

void require_symbol_value(const Complex& v, std::span<const double> x,
                          std::span<const double> xi) {
  if (std::isfinite(v.real()) && std::isfinite(v.imag()) &&
      std::abs(v) <= kSymbolCap)
    return;
  std::ostringstream os;
  os << "symbol overflow: |a| = " << std::abs(v) << " at x = (";
  for (size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << "), xi = (";
  for (size_t i = 0; i < xi.size(); ++i) os << (i ? ", " : "") << xi[i];
  os << "); cap is " << kSymbolCap << ", shrink the dual rectangle";
  throw std::runtime_error(os.str());
}

// Decodes flat row-major index into per-axis indices (axis 0 slowest).
void split_index(size_t idx, int d, int N, int* out) {
  for (int a = d - 1; a >= 0; --a) {
    out[a] = static_cast<int>(idx % N);
    idx /= N;
  }
}

GridFunction multiplier_apply(const GridFunction& f,
                              const std::vector<Complex>& mult) {
  const int d = f.dim();
  const int N = f.points_per_axis();
  const double dxi = f.freq_spacing();
  const auto& sp = f.spectrum();
  std::vector<Complex> data(sp.size());
  const double scale =
      std::pow(dxi / (2.0 * kPi), d);  // (2pi)^-d dxi^d per dual point
  for (size_t i = 0; i < sp.size(); ++i) data[i] = mult[i] * sp[i] * scale;
  for (int a = 0; a < d; ++a) inverse_axis(data, d, N, a);
  return GridFunction::from_samples(d, f.half_width(), N, std::move(data));
}

// Base64, standard alphabet with padding. Used for the sample payload so a
// JSON round trip reproduces every bit of every double.
const char kB64[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string b64_encode(const uint8_t* bytes, size_t n) {
  std::string out;
  out.reserve((n + 2) / 3 * 4);
  size_t i = 0;
  for (; i + 3 <= n; i += 3) {
    const uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out.push_back(kB64[(v >> 18) & 63]);
    out.push_back(kB64[(v >> 12) & 63]);
    out.push_back(kB64[(v >> 6) & 63]);
    out.push_back(kB64[v & 63]);
  }
  if (i < n) {
    uint32_t v = bytes[i] << 16;
    if (i + 1 < n) v |= bytes[i + 1] << 8;
    out.push_back(kB64[(v >> 18) & 63]);
    out.push_back(kB64[(v >> 12) & 63]);
    out.push_back(i + 1 < n ? kB64[(v >> 6) & 63] : '=');
    out.push_back('=');
  }
  return out;
}

std::vector<uint8_t> b64_decode(const std::string& s) {
  if (s.size() % 4 != 0)
    throw std::runtime_error("base64 payload length must be a multiple of 4");
  int8_t rev[256];
  std::fill(std::begin(rev), std::end(rev), int8_t{-1});
  for (int i = 0; i < 64; ++i) rev[static_cast<uint8_t>(kB64[i])] = int8_t(i);
  std::vector<uint8_t> out;
  out.reserve(s.size() / 4 * 3);
  for (size_t i = 0; i < s.size(); i += 4) {
    uint32_t v = 0;
    int pad = 0;
    for (int k = 0; k < 4; ++k) {
      const char c = s[i + k];
      if (c == '=' && i + 4 == s.size() && k >= 2) {
        ++pad;
        v <<= 6;
        continue;
      }
      const int8_t code = rev[static_cast<uint8_t>(c)];
      if (code < 0 || pad > 0)
        throw std::runtime_error("base64 payload has an invalid character");
      v = (v << 6) | static_cast<uint32_t>(code);
    }
    out.push_back(static_cast<uint8_t>((v >> 16) & 0xff));
    if (pad < 2) out.push_back(static_cast<uint8_t>((v >> 8) & 0xff));
    if (pad < 1) out.push_back(static_cast<uint8_t>(v & 0xff));
  }
  return out;
}

// Least-squares fit of log y = b - c t^gamma for one fixed gamma.
struct StretchedFitTrial {
  double c = 0.0;
  double b = 0.0;
  double rms = std::numeric_limits<double>::infinity();
};

StretchedFitTrial fit_for_gamma(const std::vector<double>& t,
                                const std::vector<double>& logy,
                                double gamma) {
  const size_t n = t.size();
  double su = 0.0, suu = 0.0, sy = 0.0, suy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double u = -std::pow(t[i], gamma);
    su += u;
    suu += u * u;
    sy += logy[i];
    suy += u * logy[i];
  }
  const double det = suu * n - su * su;
  StretchedFitTrial out;
  if (det <= 0.0 || !std::isfinite(det)) return out;
  out.c = (suy * n - su * sy) / det;
  out.b = (sy - out.c * su) / n;
  double ss = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double r = logy[i] - (out.b - out.c * std::pow(t[i], gamma));
    ss += r * r;
  }
  out.rms = std::sqrt(ss / n);
  return out;
}

DecayFit fit_stretched(std::vector<double> t, std::vector<double> y) {
  const double peak = *std::max_element(y.begin(), y.end());
  if (!(peak > 0.0))
    throw std::runtime_error("insufficient dynamic range: data is zero");
  const double floor = 1e-13 * peak;

  // Upper envelope seen from the right, so interleaved near-zeros (parity
  // gaps in coefficient sequences) drop out instead of wrecking the fit.
  std::vector<double> ts, ys;
  double best_tail = 0.0;
  for (size_t i = y.size(); i-- > 0;) {
    if (y[i] < floor) continue;
    if (y[i] >= best_tail) {
      best_tail = y[i];
      ts.push_back(t[i]);
      ys.push_back(y[i]);
    }
  }
  std::reverse(ts.begin(), ts.end());
  std::reverse(ys.begin(), ys.end());

  double lo = peak;
  for (double v : ys) lo = std::min(lo, v);
  if (ts.size() < 8 || peak < 1e2 * lo)
    throw std::runtime_error(
        "insufficient dynamic range: need two decades of decay above the "
        "noise floor");

  std::vector<double> logy(ys.size());
  for (size_t i = 0; i < ys.size(); ++i) logy[i] = std::log(ys[i]);

  DecayFit best;
  best.rms = std::numeric_limits<double>::infinity();
  for (int k = 2; k <= 80; ++k) {
    const double gamma = 0.05 * k;
    const StretchedFitTrial trial = fit_for_gamma(ts, logy, gamma);
    if (trial.rms < best.rms) {
      best.c = trial.c;
      best.gamma = gamma;
      best.rms = trial.rms;
    }
  }
  best.n_used = ts.size();
  if (!std::isfinite(best.rms))
    throw std::runtime_error("decay fit failed: degenerate sample set");
  return best;
}

}  // namespace

GridFunction GridFunction::from_samples(int d, double L, int N,
                                        std::vector<Complex> samples) {
  if (d != 1 && d != 2)
    throw std::invalid_argument("grid dimension must be 1 or 2");
  if (!(L > 0.0)) throw std::invalid_argument("grid half-width must be > 0");
  if (!is_pow2(N) || N < 4)
    throw std::invalid_argument(
        "points per axis must be a power of two, at least 4");
  if (N > (d == 1 ? 4096 : 256))
    throw std::invalid_argument("grid is larger than this tool is meant for");
  size_t expect = 1;
  for (int a = 0; a < d; ++a) expect *= static_cast<size_t>(N);
  if (samples.size() != expect)
    throw std::invalid_argument("sample count does not match the grid");
  for (const Complex& z : samples)
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
      throw std::invalid_argument("grid samples must be finite");
  GridFunction g;
  g.d_ = d;
  g.L_ = L;
  g.N_ = N;
  g.samples_ =
      std::make_shared<const std::vector<Complex>>(std::move(samples));
  return g;
}

GridFunction GridFunction::sample(
    int d, double L, int N,
    const std::function<Complex(std::span<const double>)>& f) {
  if (d != 1 && d != 2)
    throw std::invalid_argument("grid dimension must be 1 or 2");
  if (!is_pow2(N) || N < 4)
    throw std::invalid_argument(
        "points per axis must be a power of two, at least 4");
  const double dx = 2.0 * L / N;
  size_t total = 1;
  for (int a = 0; a < d; ++a) total *= static_cast<size_t>(N);
  std::vector<Complex> vals(total);
  int idx[2];
  double pt[2];
  for (size_t i = 0; i < total; ++i) {
    split_index(i, d, N, idx);
    for (int a = 0; a < d; ++a) pt[a] = -L + idx[a] * dx;
    vals[i] = f(std::span<const double>(pt, static_cast<size_t>(d)));
  }
  return from_samples(d, L, N, std::move(vals));
}

size_t GridFunction::size() const { return samples_->size(); }

double GridFunction::freq_spacing() const { return kPi / L_; }

const std::vector<Complex>& GridFunction::spectrum() const {
  if (!spectrum_) {
    auto data = std::make_shared<std::vector<Complex>>(*samples_);
    for (int a = 0; a < d_; ++a) forward_axis(*data, d_, N_, a);
    const double vol = std::pow(spacing(), d_);
    for (Complex& z : *data) z *= vol;
    spectrum_ = std::move(data);
  }
  return *spectrum_;
}

std::vector<double> GridFunction::axis() const {
  std::vector<double> xs(N_);
  const double dx = spacing();
  for (int n = 0; n < N_; ++n) xs[n] = -L_ + n * dx;
  return xs;
}

std::vector<double> GridFunction::freq_axis() const {
  std::vector<double> ks(N_);
  const double dxi = freq_spacing();
  for (int m = 0; m < N_; ++m) ks[m] = (m - N_ / 2) * dxi;
  return ks;
}

double GridFunction::norm2() const {
  double s = 0.0;
  for (const Complex& z : *samples_) s += std::norm(z);
  return std::sqrt(s * std::pow(spacing(), d_));
}

double GridFunction::spectral_norm2() const {
  const auto& sp = spectrum();
  double s = 0.0;
  for (const Complex& z : sp) s += std::norm(z);
  return std::sqrt(s * std::pow(freq_spacing() / (2.0 * kPi), d_));
}

GridFunction apply_operator(const PhaseSymbol& a, const GridFunction& f) {
  if (!a) throw std::invalid_argument("apply_operator: empty symbol");
  require_resolved_spectrum(f, "apply_operator");

  const int d = f.dim();
  const int N = f.points_per_axis();
  const auto& sp = f.spectrum();
  const std::vector<double> xs = f.axis();
  const std::vector<double> ks = f.freq_axis();
  const double scale = std::pow(f.freq_spacing() / (2.0 * kPi), d);

  std::vector<Complex> weighted(sp.size());
  for (size_t m = 0; m < sp.size(); ++m) weighted[m] = sp[m] * scale;

  std::vector<Complex> out(f.size());
  int xi_idx[2], ki_idx[2];
  double x[2], xi[2];
  for (size_t i = 0; i < out.size(); ++i) {
    split_index(i, d, N, xi_idx);
    for (int c = 0; c < d; ++c) x[c] = xs[xi_idx[c]];
    const std::span<const double> xsp(x, static_cast<size_t>(d));
    Complex acc = 0.0;
    for (size_t m = 0; m < weighted.size(); ++m) {
      split_index(m, d, N, ki_idx);
      double phase = 0.0;
      for (int c = 0; c < d; ++c) {
        xi[c] = ks[ki_idx[c]];
        phase += x[c] * xi[c];
      }
      const std::span<const double> ksp(xi, static_cast<size_t>(d));
      const Complex av = a(xsp, ksp);
      require_symbol_value(av, xsp, ksp);
      acc += av * weighted[m] * std::polar(1.0, phase);
    }
    out[i] = acc;
  }
  return GridFunction::from_samples(d, f.half_width(), N, std::move(out));
}

GridFunction apply_operator(const symbols::SymbolExpr& a,
                            const GridFunction& f) {
  if (!a.valid()) throw std::invalid_argument("apply_operator: empty symbol");
  if (a.dim() != f.dim())
    throw std::invalid_argument(
        "apply_operator: symbol and grid dimensions differ");

  if (!a.depends_on_x()) {
    // Fourier multiplier: tabulate a(xi) once and resum by FFT.
    require_resolved_spectrum(f, "apply_operator");
    const int d = f.dim();
    const int N = f.points_per_axis();
    const std::vector<double> ks = f.freq_axis();
    std::vector<Complex> mult(f.size());
    const double x0[2] = {0.0, 0.0};
    int ki_idx[2];
    double xi[2];
    for (size_t m = 0; m < mult.size(); ++m) {
      split_index(m, d, N, ki_idx);
      for (int c = 0; c < d; ++c) xi[c] = ks[ki_idx[c]];
      const std::span<const double> xsp(x0, static_cast<size_t>(d));
      const std::span<const double> ksp(xi, static_cast<size_t>(d));
      const Complex av = a.eval(xsp, ksp);
      require_symbol_value(av, xsp, ksp);
      mult[m] = av;
    }
    return multiplier_apply(f, mult);
  }

  return apply_operator(
      PhaseSymbol([&a](std::span<const double> x, std::span<const double> xi) {
        return a.eval(x, xi);
      }),
      f);
}

GsNorm gs_norm_estimate(const GridFunction& f, const WeightSequence& M,
                        double m, int K) {
  if (!(m > 0.0)) throw std::invalid_argument("scale m must be > 0");
  if (K < 0 || K > 8)
    throw std::invalid_argument("derivative order cap K must be in [0, 8]");
  if (K > M.max_index())
    throw std::invalid_argument("weight sequence is shorter than K");

  GsNorm best;
  best.K = K;
  best.alpha.assign(f.dim(), 0);
  best.x.assign(f.dim(), 0.0);

  double peak = 0.0;
  for (const Complex& z : f.samples()) peak = std::max(peak, std::abs(z));
  if (peak == 0.0) return best;
  if (K > 0) require_resolved_spectrum(f, "gs_norm_estimate");

  const int d = f.dim();
  const int N = f.points_per_axis();
  const std::vector<double> xs = f.axis();
  const std::vector<double> ks = f.freq_axis();

  int idx[2];
  double pt[2];
  std::vector<double> growth_at(f.size());
  for (size_t i = 0; i < growth_at.size(); ++i) {
    split_index(i, d, N, idx);
    double r2 = 0.0;
    for (int c = 0; c < d; ++c) r2 += xs[idx[c]] * xs[idx[c]];
    const double r = m * std::sqrt(r2);
    growth_at[i] = r > 0.0 ? weights::associated_function(M, r).value : 0.0;
  }

  for (int k = 0; k <= K; ++k) {
    const double weight_logM = M.log_at(k);
    for (const MultiIndex& alpha : indices_of_order(d, k)) {
      // D^alpha f: multiplier xi^alpha on the spectrum (D = -i d/dx).
      std::vector<Complex> deriv;
      if (k == 0) {
        deriv = f.samples();
      } else {
        std::vector<Complex> mult(f.size());
        for (size_t mm = 0; mm < mult.size(); ++mm) {
          split_index(mm, d, N, idx);
          double v = 1.0;
          for (int c = 0; c < d; ++c)
            v *= std::pow(ks[idx[c]], alpha[static_cast<size_t>(c)]);
          mult[mm] = v;
        }
        deriv = multiplier_apply(f, mult).samples();
      }
      for (size_t i = 0; i < deriv.size(); ++i) {
        const double val =
            std::exp(k * std::log(m) + growth_at[i] - weight_logM) *
            std::abs(deriv[i]);
        if (val > best.value) {
          best.value = val;
          best.alpha = alpha;
          split_index(i, d, N, idx);
          for (int c = 0; c < d; ++c) pt[c] = xs[idx[c]];
          best.x.assign(pt, pt + d);
        }
      }
    }
  }
  return best;
}

HermiteBasis::HermiteBasis(double L, int N, int n_max) {
  if (n_max < 0) throw std::invalid_argument("n_max must be >= 0");
  if (n_max > 256) throw std::invalid_argument("n_max is unreasonably large");
  GridFunction probe = GridFunction::from_samples(
      1, L, N, std::vector<Complex>(static_cast<size_t>(N)));
  const std::vector<double> xs = probe.axis();
  const double dx = probe.spacing();

  const auto grid_normalize = [&](std::vector<Complex>& v) {
    double s = 0.0;
    for (const Complex& z : v) s += std::norm(z);
    s = std::sqrt(s * dx);
    if (!(s > 0.0))
      throw std::runtime_error("oscillator basis collapsed on this grid");
    for (Complex& z : v) z /= s;
  };

  std::vector<Complex> prev, cur(static_cast<size_t>(N));
  for (int n = 0; n < N; ++n)
    cur[n] = std::pow(kPi, -0.25) * std::exp(-0.5 * xs[n] * xs[n]);
  grid_normalize(cur);
  h_.push_back(GridFunction::from_samples(1, L, N, cur));

  for (int n = 1; n <= n_max; ++n) {
    std::vector<Complex> next(static_cast<size_t>(N));
    const double a = std::sqrt(2.0 / n);
    const double b = n > 1 ? std::sqrt(static_cast<double>(n - 1) / n) : 0.0;
    for (int i = 0; i < N; ++i) {
      next[i] = a * xs[i] * cur[i];
      if (n > 1) next[i] -= b * prev[i];
    }
    grid_normalize(next);
    prev = std::move(cur);
    cur = next;
    h_.push_back(GridFunction::from_samples(1, L, N, std::move(next)));
  }
}

double HermiteBasis::eigenvalue(int n) const {
  if (n < 0 || n > n_max()) throw std::out_of_range("basis index");
  return 2.0 * n + 2.0;
}

const GridFunction& HermiteBasis::function(int n) const {
  if (n < 0 || n > n_max()) throw std::out_of_range("basis index");
  return h_[static_cast<size_t>(n)];
}

std::vector<Complex> HermiteBasis::coefficients(const GridFunction& f) const {
  if (f.dim() != 1 || f.points_per_axis() != h_[0].points_per_axis() ||
      f.half_width() != h_[0].half_width())
    throw std::invalid_argument("grid does not match the basis");
  const double dx = f.spacing();
  std::vector<Complex> c(h_.size());
  for (size_t n = 0; n < h_.size(); ++n) {
    const auto& hv = h_[n].samples();
    const auto& fv = f.samples();
    Complex s = 0.0;
    for (size_t i = 0; i < fv.size(); ++i) s += std::conj(hv[i]) * fv[i];
    c[n] = s * dx;
  }
  return c;
}

GridFunction HermiteBasis::reconstruct(std::span<const Complex> coeff) const {
  if (coeff.size() > h_.size())
    throw std::invalid_argument("more coefficients than basis functions");
  const int N = h_[0].points_per_axis();
  std::vector<Complex> acc(static_cast<size_t>(N));
  for (size_t n = 0; n < coeff.size(); ++n) {
    const auto& hv = h_[n].samples();
    for (int i = 0; i < N; ++i) acc[i] += coeff[n] * hv[i];
  }
  return GridFunction::from_samples(1, h_[0].half_width(), N, std::move(acc));
}

GridFunction spectral_solve(const GridFunction& v, const HermiteBasis& basis) {
  const double vnorm = v.norm2();
  if (vnorm == 0.0) {
    return GridFunction::from_samples(
        v.dim(), v.half_width(), v.points_per_axis(),
        std::vector<Complex>(v.size()));
  }

  std::vector<Complex> c = basis.coefficients(v);
  double mass = 0.0;
  for (const Complex& z : c) mass += std::norm(z);
  const double fraction = mass / (vnorm * vnorm);
  if (fraction < 1.0 - 1e-8) {
    std::ostringstream os;
    os << "spectral_solve: basis captures only " << fraction
       << " of the input mass (need 1 - 1e-8); enlarge n_max or the grid";
    throw std::runtime_error(os.str());
  }

  for (size_t n = 0; n < c.size(); ++n)
    c[n] /= basis.eigenvalue(static_cast<int>(n));
  GridFunction u = basis.reconstruct(c);

  static const symbols::SymbolExpr osc =
      symbols::parse_symbol("1 + x1^2 + k1^2", 1);
  const GridFunction check = apply_operator(osc, u);
  double err = 0.0;
  {
    const auto& av = check.samples();
    const auto& vv = v.samples();
    double s = 0.0;
    for (size_t i = 0; i < vv.size(); ++i) s += std::norm(av[i] - vv[i]);
    err = std::sqrt(s * v.spacing()) / vnorm;
  }
  if (err > 1e-5) {
    std::ostringstream os;
    os << "spectral_solve: inverse verification failed, relative residual "
       << err << " (allowed 1e-5)";
    throw std::runtime_error(os.str());
  }
  return u;
}

DecayFit decay_fit(const GridFunction& f) {
  if (f.dim() != 1)
    throw std::invalid_argument("decay_fit reads d = 1 spectra only");
  const auto& sp = f.spectrum();
  const int N = f.points_per_axis();
  const std::vector<double> ks = f.freq_axis();
  std::vector<double> t, y;
  for (int m = N / 2; m < N; ++m) {
    t.push_back(ks[m]);
    y.push_back(std::abs(sp[m]));
  }
  return fit_stretched(std::move(t), std::move(y));
}

DecayFit decay_fit(std::span<const double> magnitudes) {
  if (magnitudes.size() < 8)
    throw std::invalid_argument("decay_fit needs at least 8 magnitudes");
  std::vector<double> t(magnitudes.size()), y(magnitudes.begin(),
                                              magnitudes.end());
  for (size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i);
  for (double v : y)
    if (!(v >= 0.0) || !std::isfinite(v))
      throw std::invalid_argument("magnitudes must be finite and >= 0");
  return fit_stretched(std::move(t), std::move(y));
}

void save_grid(const GridFunction& f, const std::string& path) {
  const auto& vals = f.samples();
  static_assert(sizeof(Complex) == 2 * sizeof(double));
  const auto* bytes = reinterpret_cast<const uint8_t*>(vals.data());
  nlohmann::json j;
  j["d"] = f.dim();
  j["L"] = f.half_width();
  j["N"] = f.points_per_axis();
  j["layout"] = "complex128 interleaved re,im; row major, axis 0 slowest";
  j["samples"] = b64_encode(bytes, vals.size() * sizeof(Complex));
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

GridFunction load_grid(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  if (!j.contains("d") || !j.contains("L") || !j.contains("N") ||
      !j.contains("samples"))
    throw std::runtime_error(path + ": missing grid fields");
  const int d = j.at("d").get<int>();
  const double L = j.at("L").get<double>();
  const int N = j.at("N").get<int>();
  const std::vector<uint8_t> bytes =
      b64_decode(j.at("samples").get<std::string>());
  if (bytes.size() % sizeof(Complex) != 0)
    throw std::runtime_error(path + ": sample payload is misaligned");
  std::vector<Complex> vals(bytes.size() / sizeof(Complex));
  std::memcpy(vals.data(), bytes.data(), bytes.size());
  return GridFunction::from_samples(d, L, N, std::move(vals));
}

}  // namespace psdo::quantize
