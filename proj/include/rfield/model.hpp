#pragma once
// Field models: a marginal law, a dependence structure and an optional
// bounded per-cell scale modulation, plus the sampler that realizes them on
// 2^m x 2^n grids.
//
// Cells are addressed 0-based (row, col); cell (row, col) is X_{row+1, col+1}.

#include "rfield/marginal.hpp"
#include "rfield/rng.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace rfield {

// ---------------------------------------------------------------------------
// Modulation

struct Modulation {
  enum class Kind { none, checkerboard, radial };
  Kind kind = Kind::none;
  double lo = 1.0;
  double hi = 1.0;

  static Modulation none() { return {}; }
  static Modulation checkerboard(double c_lo, double c_hi) { return {Kind::checkerboard, c_lo, c_hi}; }
  static Modulation radial(double c_lo, double c_hi) { return {Kind::radial, c_lo, c_hi}; }

  void validate() const {
    if (kind == Kind::none) return;
    if (!(lo > 0.0) || !(hi >= lo) || !std::isfinite(hi))
      throw std::invalid_argument("Modulation: bounds must satisfy 0 < c_lo <= c_hi < inf");
  }

  /// Scale factor of cell (row, col).
  double scale_at(std::size_t row, std::size_t col) const {
    switch (kind) {
      case Kind::none: return 1.0;
      case Kind::checkerboard: return ((row + col) % 2 == 0) ? lo : hi;
      case Kind::radial: {
        const double r = std::hypot(static_cast<double>(row), static_cast<double>(col));
        return hi - (hi - lo) / (1.0 + r);
      }
    }
    return 1.0;
  }

  /// Largest scale factor over the cells [0, rows) x [0, cols).
  double max_scale(std::size_t rows, std::size_t cols) const {
    if (rows == 0 || cols == 0) return 0.0;
    switch (kind) {
      case Kind::none: return 1.0;
      case Kind::checkerboard: return rows * cols > 1 ? hi : lo;
      case Kind::radial: return scale_at(rows - 1, cols - 1);
    }
    return 1.0;
  }

  /// Upper bound c_hi valid for every cell.
  double upper_bound() const { return kind == Kind::none ? 1.0 : hi; }

  std::string name() const {
    std::ostringstream os;
    os.precision(17);
    switch (kind) {
      case Kind::none: return "none";
      case Kind::checkerboard: os << "checkerboard(" << lo << "," << hi << ")"; break;
      case Kind::radial: os << "radial(" << lo << "," << hi << ")"; break;
    }
    return os.str();
  }

  /// Parses "none", "checkerboard(c_lo,c_hi)" or "radial(c_lo,c_hi)".
  static Modulation parse(const std::string& text) {
    std::string s;
    for (char ch : text)
      if (!std::isspace(static_cast<unsigned char>(ch))) s.push_back(ch);
    if (s == "none" || s.empty()) return none();
    const auto open = s.find('(');
    const auto comma = s.find(',');
    const auto close = s.find(')');
    if (open == std::string::npos || comma == std::string::npos || close != s.size() - 1 || comma < open)
      throw std::invalid_argument("Modulation: expected none, checkerboard(c_lo,c_hi) or radial(c_lo,c_hi), got '" + text + "'");
    const std::string head = s.substr(0, open);
    double a = 0.0, b = 0.0;
    try {
      a = std::stod(s.substr(open + 1, comma - open - 1));
      b = std::stod(s.substr(comma + 1, close - comma - 1));
    } catch (const std::exception&) {
      throw std::invalid_argument("Modulation: bounds in '" + text + "' are not numbers");
    }
    Modulation m;
    if (head == "checkerboard")
      m = checkerboard(a, b);
    else if (head == "radial")
      m = radial(a, b);
    else
      throw std::invalid_argument("Modulation: unknown preset '" + head + "'");
    m.validate();
    return m;
  }
};

// ---------------------------------------------------------------------------
// Dependence

struct DependenceSpec {
  enum class Kind { iid, pairwise_walsh, gaussian_copula_negative, moving_average };
  Kind kind = Kind::iid;
  int generators = 2;        // pairwise_walsh
  double correlation = 0.0;  // gaussian_copula_negative, <= 0
  int radius = 1;            // gaussian_copula_negative, Chebyshev radius
  int window = 2;            // moving_average, square window side

  static DependenceSpec iid() { return {}; }
  static DependenceSpec pairwise_walsh(int g) {
    DependenceSpec d;
    d.kind = Kind::pairwise_walsh;
    d.generators = g;
    return d;
  }
  static DependenceSpec gaussian_copula_negative(double rho, int radius) {
    DependenceSpec d;
    d.kind = Kind::gaussian_copula_negative;
    d.correlation = rho;
    d.radius = radius;
    return d;
  }
  static DependenceSpec moving_average(int w) {
    DependenceSpec d;
    d.kind = Kind::moving_average;
    d.window = w;
    return d;
  }

  /// Cells per Walsh tile.
  std::uint64_t tile_size() const { return (std::uint64_t{1} << generators) - 1; }

  /// Most negative correlation for which the radius-r correlation function is
  /// positive semidefinite on the infinite lattice.
  static double min_copula_correlation(int radius) {
    const double w = 2.0 * radius + 1.0;
    return -1.0 / (w * w - 1.0);
  }

  void validate() const {
    switch (kind) {
      case Kind::iid: break;
      case Kind::pairwise_walsh:
        if (generators < 1 || generators > 30)
          throw std::invalid_argument("DependenceSpec: PairwiseWalsh generator count must lie in [1, 30]");
        break;
      case Kind::gaussian_copula_negative:
        if (radius < 1) throw std::invalid_argument("DependenceSpec: copula neighborhood radius must be >= 1");
        if (!(correlation <= 0.0)) throw std::invalid_argument("DependenceSpec: copula correlation must be <= 0");
        if (correlation < min_copula_correlation(radius))
          throw std::invalid_argument("DependenceSpec: GaussianCopulaNegative correlation matrix is not positive semidefinite "
                                      "(need correlation >= " + std::to_string(min_copula_correlation(radius)) + ")");
        break;
      case Kind::moving_average:
        if (window < 1) throw std::invalid_argument("DependenceSpec: moving-average window must be >= 1");
        break;
    }
  }

  std::string name() const {
    switch (kind) {
      case Kind::iid: return "iid";
      case Kind::pairwise_walsh: return "pairwise_walsh";
      case Kind::gaussian_copula_negative: return "gaussian_copula_negative";
      case Kind::moving_average: return "moving_average";
    }
    return "iid";
  }
};

// ---------------------------------------------------------------------------
// Model and sample

struct FieldModel {
  MarginalSpec marginal;
  DependenceSpec dependence;
  Modulation modulation;

  void validate() const {
    marginal.validate();
    dependence.validate();
    modulation.validate();
  }
};

struct FieldSample {
  int m_exp = 0;
  int n_exp = 0;
  std::vector<double> values;  // row-major, rows = 2^m_exp, cols = 2^n_exp
  std::uint64_t master_seed = 0;
  std::uint64_t replicate = 0;

  std::size_t rows() const { return std::size_t{1} << m_exp; }
  std::size_t cols() const { return std::size_t{1} << n_exp; }
  double at(std::size_t row, std::size_t col) const { return values[row * cols() + col]; }
};

/// Exact law of one cell, including its modulation factor.
inline MarginalLaw cell_law(const FieldModel& model, std::size_t row, std::size_t col) {
  const MarginalLaw base(model.marginal);
  const double c = model.modulation.scale_at(row, col);
  return c == 1.0 ? base : base.scaled(c);
}

/// P(X_cell > x).
inline double tail_prob(const FieldModel& model, std::size_t row, std::size_t col, double x) {
  return cell_law(model, row, col).upper_tail(x);
}

/// E(|X_cell|^r 1(|X_cell| <= a)).
inline double truncated_moment(const FieldModel& model, std::size_t row, std::size_t col, double r, double a) {
  if (!(r > 0.0) || !(a > 0.0)) throw std::invalid_argument("truncated_moment: r and a must be positive");
  return cell_law(model, row, col).abs_truncated_moment(r, a);
}

/// Cells grouped by modulation factor, so per-cell laws are built once per
/// distinct factor.
struct CellClasses {
  std::vector<MarginalLaw> laws;     // one per distinct factor
  std::vector<double> scales;        // distinct factors, ascending
  std::vector<std::uint32_t> index;  // row-major cell -> class
  std::size_t rows = 0, cols = 0;

  const MarginalLaw& at(std::size_t row, std::size_t col) const { return laws[index[row * cols + col]]; }
};

inline CellClasses cell_classes(const FieldModel& model, std::size_t rows, std::size_t cols) {
  CellClasses out;
  out.rows = rows;
  out.cols = cols;
  out.index.resize(rows * cols);
  std::vector<double> per_cell(rows * cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) per_cell[i * cols + j] = model.modulation.scale_at(i, j);
  out.scales = per_cell;
  std::sort(out.scales.begin(), out.scales.end());
  out.scales.erase(std::unique(out.scales.begin(), out.scales.end()), out.scales.end());
  for (std::size_t k = 0; k < per_cell.size(); ++k)
    out.index[k] = static_cast<std::uint32_t>(std::lower_bound(out.scales.begin(), out.scales.end(), per_cell[k]) - out.scales.begin());
  const MarginalLaw base(model.marginal);
  for (double c : out.scales) out.laws.push_back(c == 1.0 ? base : base.scaled(c));
  return out;
}

// ---------------------------------------------------------------------------
// Pairwise Walsh construction

/// Combines the generator words of a tile into the word of the cell at
/// position pos (1 <= pos < 2^g). The top bit of the result equals the
/// product of the generator signs in pos, where a set top bit means +1.
inline std::uint64_t walsh_cell_word(std::span<const std::uint64_t> generators, std::uint64_t pos) {
  std::uint64_t w = 0;
  for (std::size_t b = 0; b < generators.size(); ++b)
    if (pos & (std::uint64_t{1} << b)) w ^= generators[b];
  if (std::popcount(pos) % 2 == 0) w = ~w;
  return w;
}

/// Product of the generator signs selected by pos.
inline int walsh_cell_sign(std::span<const int> signs, std::uint64_t pos) {
  int v = 1;
  for (std::size_t b = 0; b < signs.size(); ++b)
    if (pos & (std::uint64_t{1} << b)) v *= signs[b];
  return v;
}

namespace detail {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

inline double clamp_unit(double u) {
  constexpr double lo = 0x1.0p-60;
  const double hi = std::nextafter(1.0, 0.0);
  return std::clamp(u, lo, hi);
}

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwDeleter {
  void operator()(fftw_complex* p) const { fftw_free(p); }
};

/// Stationary Gaussian field with unit variance and correlation `rho` between
/// distinct cells within Chebyshev distance `radius`, sampled exactly by
/// circulant embedding on a torus large enough that wrapped distances never
/// create spurious neighbors.
inline std::vector<double> circulant_gaussian(std::size_t rows, std::size_t cols, double rho, int radius, std::uint64_t seed,
                                              std::uint64_t replicate) {
  const std::size_t r = static_cast<std::size_t>(radius);
  const std::size_t mr = std::max(rows + r, 2 * r + 1);
  const std::size_t mc = std::max(cols + r, 2 * r + 1);
  const std::size_t total = mr * mc;
  std::unique_ptr<fftw_complex[], FftwDeleter> buf(fftw_alloc_complex(total));
  if (!buf) throw std::bad_alloc();

  fftw_plan plan;
  {
    std::lock_guard lock(fftw_planner_mutex());
    plan = fftw_plan_dft_2d(static_cast<int>(mr), static_cast<int>(mc), buf.get(), buf.get(), FFTW_FORWARD, FFTW_ESTIMATE);
  }
  struct PlanGuard {
    fftw_plan p;
    ~PlanGuard() {
      std::lock_guard lock(fftw_planner_mutex());
      fftw_destroy_plan(p);
    }
  } guard{plan};

  // Eigenvalues of the block-circulant covariance.
  for (std::size_t i = 0; i < mr; ++i) {
    const std::size_t di = std::min(i, mr - i);
    for (std::size_t j = 0; j < mc; ++j) {
      const std::size_t dj = std::min(j, mc - j);
      double c = 0.0;
      if (di == 0 && dj == 0)
        c = 1.0;
      else if (di <= r && dj <= r)
        c = rho;
      buf[i * mc + j][0] = c;
      buf[i * mc + j][1] = 0.0;
    }
  }
  fftw_execute(plan);
  std::vector<double> eig(total);
  double max_eig = 0.0;
  for (std::size_t k = 0; k < total; ++k) {
    eig[k] = buf[k][0];
    max_eig = std::max(max_eig, eig[k]);
  }
  for (double& e : eig) {
    if (e < -1e-9 * max_eig) throw std::invalid_argument("DependenceSpec: copula covariance is not positive semidefinite");
    e = std::max(e, 0.0);
  }

  const double norm = 1.0 / static_cast<double>(total);
  for (std::size_t k = 0; k < total; ++k) {
    CounterStream rng(derive_key(seed, replicate, stream_tag::gaussian_noise, k));
    const double amp = std::sqrt(eig[k] * norm);
    buf[k][0] = amp * rng.next_normal();
    buf[k][1] = amp * rng.next_normal();
  }
  fftw_execute(plan);

  std::vector<double> out(rows * cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) out[i * cols + j] = buf[i * mc + j][0];
  return out;
}

/// Normalized sums of i.i.d. normals over w x w windows (w-dependent field).
inline std::vector<double> moving_average_gaussian(std::size_t rows, std::size_t cols, int window, std::uint64_t seed,
                                                   std::uint64_t replicate) {
  const std::size_t w = static_cast<std::size_t>(window);
  const std::size_t nr = rows + w - 1, nc = cols + w - 1;
  std::vector<double> pre((nr + 1) * (nc + 1), 0.0);
  for (std::size_t i = 0; i < nr; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < nc; ++j) {
      CounterStream rng(derive_key(seed, replicate, stream_tag::gaussian_noise, i * nc + j));
      row += rng.next_normal();
      pre[(i + 1) * (nc + 1) + j + 1] = pre[i * (nc + 1) + j + 1] + row;
    }
  }
  auto rect = [&](std::size_t r0, std::size_t c0, std::size_t r1, std::size_t c1) {
    return pre[r1 * (nc + 1) + c1] - pre[r0 * (nc + 1) + c1] - pre[r1 * (nc + 1) + c0] + pre[r0 * (nc + 1) + c0];
  };
  std::vector<double> out(rows * cols);
  const double inv = 1.0 / static_cast<double>(w);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) out[i * cols + j] = rect(i, j, i + w, j + w) * inv;
  return out;
}

}  // namespace detail

/// Samples one realization on a 2^m_exp x 2^n_exp grid. Deterministic in all
/// arguments; each cell's randomness is keyed by (seed, replicate, index).
inline FieldSample sample_field(const FieldModel& model, int m_exp, int n_exp, std::uint64_t master_seed,
                                std::uint64_t replicate) {
  if (m_exp < 0 || n_exp < 0 || m_exp + n_exp > 40) throw std::invalid_argument("sample_field: grid exponents out of range");
  model.validate();
  const MarginalLaw law(model.marginal);

  FieldSample out;
  out.m_exp = m_exp;
  out.n_exp = n_exp;
  out.master_seed = master_seed;
  out.replicate = replicate;
  const std::size_t rows = out.rows(), cols = out.cols(), count = rows * cols;
  out.values.resize(count);

  std::vector<double> unit(count);
  const auto& dep = model.dependence;
  switch (dep.kind) {
    case DependenceSpec::Kind::iid:
      for (std::size_t k = 0; k < count; ++k)
        unit[k] = word_to_unit(CounterStream(derive_key(master_seed, replicate, stream_tag::cell, k)).word_at(0));
      break;
    case DependenceSpec::Kind::pairwise_walsh: {
      const std::uint64_t tile = dep.tile_size();
      std::vector<std::uint64_t> gens(static_cast<std::size_t>(dep.generators));
      std::uint64_t current_tile = ~std::uint64_t{0};
      for (std::size_t k = 0; k < count; ++k) {
        const std::uint64_t t = k / tile;
        if (t != current_tile) {
          const CounterStream rng(derive_key(master_seed, replicate, stream_tag::walsh_tile, t));
          for (std::size_t b = 0; b < gens.size(); ++b) gens[b] = rng.word_at(b);
          current_tile = t;
        }
        unit[k] = word_to_unit(walsh_cell_word(gens, k % tile + 1));
      }
      break;
    }
    case DependenceSpec::Kind::gaussian_copula_negative: {
      const auto z = detail::circulant_gaussian(rows, cols, dep.correlation, dep.radius, master_seed, replicate);
      for (std::size_t k = 0; k < count; ++k) unit[k] = detail::clamp_unit(detail::normal_cdf(z[k]));
      break;
    }
    case DependenceSpec::Kind::moving_average: {
      const auto z = detail::moving_average_gaussian(rows, cols, dep.window, master_seed, replicate);
      for (std::size_t k = 0; k < count; ++k) unit[k] = detail::clamp_unit(detail::normal_cdf(z[k]));
      break;
    }
  }

  const bool modulated = model.modulation.kind != Modulation::Kind::none;
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) {
      const std::size_t k = i * cols + j;
      const double v = law.quantile(unit[k]);
      out.values[k] = modulated ? model.modulation.scale_at(i, j) * v : v;
    }
  return out;
}

// ---------------------------------------------------------------------------
// Dominating law

/// Grid of |x| values adapted to the atoms, support edges and tails of laws.
inline std::vector<double> adaptive_abs_grid(std::span<const MarginalLaw> laws, int per_decade = 16) {
  std::vector<double> pts{0.0};
  double min_pos = kInf, max_bp = 0.0;
  for (const auto& law : laws)
    for (double b : law.abs_breakpoints()) {
      pts.push_back(b);
      if (b > 0.0) {
        pts.push_back(b * (1.0 - 1e-9));
        min_pos = std::min(min_pos, b);
      }
      max_bp = std::max(max_bp, b);
    }
  const double lo = (std::isfinite(min_pos) ? min_pos : 1.0) * 1e-3;
  double hi = std::max(max_bp, 1.0);
  auto sup_tail = [&](double x) {
    double s = 0.0;
    for (const auto& law : laws) s = std::max(s, law.abs_tail(x));
    return s;
  };
  while (sup_tail(hi) > 1e-15 && hi < 1e15) hi *= 2.0;
  const double step = std::pow(10.0, 1.0 / per_decade);
  for (double x = lo; x <= hi * (1.0 + 1e-12); x *= step) pts.push_back(x);
  pts.push_back(hi);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

/// Nonnegative law with tail sup_l P(|X_l| > x), tabulated on an adaptive grid
/// (or the supplied one) with log-log interpolation between knots.
inline MarginalSpec dominator_model(std::span<const MarginalLaw> laws, std::vector<double> grid = {}) {
  if (laws.empty()) throw std::invalid_argument("dominator_model: empty family");
  if (grid.empty()) grid = adaptive_abs_grid(laws);
  if (grid.front() != 0.0) grid.insert(grid.begin(), 0.0);
  std::vector<double> tails(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    double s = 0.0;
    for (const auto& law : laws) s = std::max(s, law.abs_tail(grid[k]));
    tails[k] = s;
  }
  for (std::size_t k = 1; k < tails.size(); ++k) tails[k] = std::min(tails[k], tails[k - 1]);
  // Knot values are lifted by a relative 1e-12 so that rounding in the
  // log-log interpolation cannot dip below the supremum.
  for (double& t : tails) t = std::min(1.0, t * (1.0 + 1e-12));
  auto sup_at = [&](double x) {
    double s = 0.0;
    for (const auto& law : laws) s = std::max(s, law.abs_tail(x));
    return s;
  };
  // Where the log-log chord undershoots the supremum inside a segment (tails
  // concave in log-log scale), hold the left value and drop just before the
  // next knot instead. The final segment sets the extrapolated slope, so
  // there the slope is flattened until the chord clears the supremum.
  {
    std::vector<double> gx{grid.front()}, gt{tails.front()};
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
      const double x0 = grid[k], x1 = grid[k + 1], t0 = tails[k];
      double t1 = tails[k + 1];
      bool hold = false;
      if (x0 > 0.0 && t1 > 0.0 && t1 < t0) {
        const bool last = k + 2 == grid.size();
        double slope = std::log(t1 / t0) / std::log(x1 / x0);
        for (double f : {1e-6, 1e-3, 1.0 / 16, 0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875, 15.0 / 16}) {
          const double y = x0 * std::pow(x1 / x0, f);
          const double s = sup_at(y);
          if (t0 * std::pow(y / x0, slope) >= s) continue;
          if (!last) {
            hold = true;
            break;
          }
          slope = std::log(s * (1.0 + 1e-12) / t0) / std::log(y / x0);
        }
        if (last) t1 = std::min(t0, t0 * std::pow(x1 / x0, slope));
      }
      if (hold) {
        gx.push_back(x1 - std::min(1e-9 * x1, 0.5 * (x1 - x0)));
        gt.push_back(t0);
      }
      gx.push_back(x1);
      gt.push_back(t1);
    }
    grid = std::move(gx);
    tails = std::move(gt);
  }
  // The tail must end at zero or on a decaying power law.
  const std::size_t n = grid.size();
  const bool decaying = n >= 3 && grid[n - 2] > 0.0 && tails[n - 1] > 0.0 && tails[n - 1] < tails[n - 2];
  if (tails.back() > 0.0 && !decaying) {
    grid.push_back(2.0 * grid.back());
    tails.push_back(0.0);
  }
  return MarginalSpec::tabulated(std::move(grid), std::move(tails));
}

inline MarginalSpec dominator_model(std::span<const MarginalSpec> specs) {
  std::vector<MarginalLaw> laws;
  laws.reserve(specs.size());
  for (const auto& s : specs) laws.emplace_back(s);
  return dominator_model(std::span<const MarginalLaw>(laws));
}

}  // namespace rfield
