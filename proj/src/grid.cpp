// Copyright 2026 The kslab Authors
// SPDX-License-Identifier: Apache-2.0

#include "ksl/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace ksl {

namespace {

// Visit every cell with its integer coordinates.
template <class F>
void for_each_cell(const Grid& g, F&& fn) {
  std::size_t idx = 0;
  for (int k = 0; k < g.cells(2); ++k)
    for (int j = 0; j < g.cells(1); ++j)
      for (int i = 0; i < g.cells(0); ++i, ++idx) fn(idx, std::array<int, 3>{i, j, k});
}

// Index of the neighbour one step along `axis` with mirrored ghosts.
inline std::size_t neighbor(const Grid& g, std::size_t idx, const std::array<int, 3>& c,
                            int axis, int dir) {
  int next = c[axis] + dir;
  if (next < 0 || next >= g.cells(axis)) return idx;
  return dir > 0 ? idx + g.stride(axis) : idx - g.stride(axis);
}

void check_same_grid(const Grid& a, const Grid& b) {
  if (!(a == b)) fail(ErrorCode::InvalidArgument, "fields live on different grids");
}

}  // namespace

Grid build_grid(int dim, std::span<const double> extents, std::span<const int> cells) {
  require(dim >= 1 && dim <= 3, "grid dimension must be 1, 2 or 3");
  require(extents.size() >= static_cast<std::size_t>(dim) &&
              cells.size() >= static_cast<std::size_t>(dim),
          "grid needs one extent and one cell count per axis");
  Grid g;
  g.dim_ = dim;
  g.volume_ = 1.0;
  g.cell_volume_ = 1.0;
  for (int a = 0; a < dim; ++a) {
    if (!(extents[a] > 0.0) || !std::isfinite(extents[a])) {
      std::ostringstream os;
      os << "grid extent on axis " << a << " must be positive, got " << extents[a];
      fail(ErrorCode::InvalidArgument, os.str());
    }
    if (cells[a] < 4) {
      std::ostringstream os;
      os << "grid needs at least 4 cells per axis, axis " << a << " has " << cells[a];
      fail(ErrorCode::InvalidArgument, os.str());
    }
    g.extent_[a] = extents[a];
    g.cells_[a] = cells[a];
    g.h_[a] = extents[a] / cells[a];
    g.volume_ *= extents[a];
    g.cell_volume_ *= g.h_[a];
  }
  g.stride_[0] = 1;
  g.stride_[1] = static_cast<std::size_t>(g.cells_[0]);
  g.stride_[2] = g.stride_[1] * static_cast<std::size_t>(g.cells_[1]);
  g.size_ = g.stride_[2] * static_cast<std::size_t>(g.cells_[2]);
  return g;
}

Grid build_grid(int dim, std::initializer_list<double> extents,
                std::initializer_list<int> cells) {
  return build_grid(dim, std::span<const double>(extents.begin(), extents.size()),
                    std::span<const int>(cells.begin(), cells.size()));
}

double Grid::min_spacing() const {
  double m = h_[0];
  for (int a = 1; a < dim_; ++a) m = std::min(m, h_[a]);
  return m;
}

double Grid::max_extent() const {
  double m = extent_[0];
  for (int a = 1; a < dim_; ++a) m = std::max(m, extent_[a]);
  return m;
}

std::array<int, 3> Grid::unravel(std::size_t idx) const {
  std::array<int, 3> c{};
  c[0] = static_cast<int>(idx % stride_[1]);
  c[1] = static_cast<int>((idx / stride_[1]) % cells_[1]);
  c[2] = static_cast<int>(idx / stride_[2]);
  return c;
}

Point Grid::center(std::size_t idx) const {
  auto c = unravel(idx);
  Point p{0.0, 0.0, 0.0};
  for (int a = 0; a < dim_; ++a) p[a] = (c[a] + 0.5) * h_[a];
  return p;
}

// ---------------------------------------------------------------- Field

Field::Field(const Grid& g, std::vector<double> v) : grid(g), values(std::move(v)) {
  require(values.size() == g.size(), "field value count does not match grid");
}

Field Field::sample(const Grid& g, const std::function<double(const Point&)>& f) {
  Field out(g);
  for (std::size_t i = 0; i < g.size(); ++i) out.values[i] = f(g.center(i));
  return out;
}

double Field::min() const { return *std::min_element(values.begin(), values.end()); }
double Field::max() const { return *std::max_element(values.begin(), values.end()); }

double Field::max_abs() const {
  double m = 0.0;
  for (double x : values) m = std::max(m, std::abs(x));
  return m;
}

bool Field::all_finite() const {
  return std::all_of(values.begin(), values.end(), [](double x) { return std::isfinite(x); });
}

Field& Field::operator+=(const Field& o) {
  check_same_grid(grid, o.grid);
  for (std::size_t i = 0; i < values.size(); ++i) values[i] += o.values[i];
  return *this;
}

Field& Field::operator-=(const Field& o) {
  check_same_grid(grid, o.grid);
  for (std::size_t i = 0; i < values.size(); ++i) values[i] -= o.values[i];
  return *this;
}

Field& Field::operator*=(double s) {
  for (double& x : values) x *= s;
  return *this;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(double s, Field a) { return a *= s; }

Field hadamard(const Field& a, const Field& b) {
  check_same_grid(a.grid, b.grid);
  Field out(a.grid);
  for (std::size_t i = 0; i < a.size(); ++i) out.values[i] = a.values[i] * b.values[i];
  return out;
}

Field map(const Field& a, const std::function<double(double)>& f) {
  Field out(a.grid);
  for (std::size_t i = 0; i < a.size(); ++i) out.values[i] = f(a.values[i]);
  return out;
}

// ---------------------------------------------------------------- FaceVector

FaceVector::FaceVector(const Grid& g) : grid(g) {
  for (int a = 0; a < g.dim(); ++a) comp[a].assign(g.size() / g.cells(a) * (g.cells(a) + 1), 0.0);
}

std::size_t FaceVector::face_index(int axis, int i0, int i1, int i2) const {
  std::array<int, 3> n{grid.cells(0), grid.cells(1), grid.cells(2)};
  n[axis] += 1;
  return static_cast<std::size_t>(i0) +
         static_cast<std::size_t>(n[0]) * (static_cast<std::size_t>(i1) +
                                           static_cast<std::size_t>(n[1]) * i2);
}

// ---------------------------------------------------------------- quadrature

double integrate(const Field& f) {
  double s = 0.0;
  for (double x : f.values) s += x;
  return s * f.grid.cell_volume();
}

double inner(const Field& f, const Field& g) {
  check_same_grid(f.grid, g.grid);
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += f.values[i] * g.values[i];
  return s * f.grid.cell_volume();
}

double lp_norm(const Field& f, double p) {
  require(p >= 1.0, "lp_norm requires p >= 1");
  if (std::isinf(p)) return f.max_abs();
  double s = 0.0;
  if (p == 2.0) {
    for (double x : f.values) s += x * x;
  } else {
    for (double x : f.values) s += std::pow(std::abs(x), p);
  }
  return std::pow(s * f.grid.cell_volume(), 1.0 / p);
}

// ---------------------------------------------------------------- operators

VectorField gradient(const Field& f) {
  const Grid& g = f.grid;
  VectorField out(g.dim(), Field(g));
  for_each_cell(g, [&](std::size_t idx, const std::array<int, 3>& c) {
    for (int a = 0; a < g.dim(); ++a) {
      double fp = f.values[neighbor(g, idx, c, a, +1)];
      double fm = f.values[neighbor(g, idx, c, a, -1)];
      out[a].values[idx] = (fp - fm) / (2.0 * g.spacing(a));
    }
  });
  return out;
}

FaceVector face_gradient(const Field& f) {
  const Grid& g = f.grid;
  FaceVector out(g);
  for_each_cell(g, [&](std::size_t idx, const std::array<int, 3>& c) {
    for (int a = 0; a < g.dim(); ++a) {
      if (c[a] == 0) continue;
      std::array<int, 3> fc = c;  // face between cell c-1 and c along a
      double d = (f.values[idx] - f.values[idx - g.stride(a)]) / g.spacing(a);
      out.comp[a][out.face_index(a, fc[0], fc[1], fc[2])] = d;
    }
  });
  return out;
}

Field divergence(const FaceVector& flux) {
  const Grid& g = flux.grid;
  Field out(g);
  for_each_cell(g, [&](std::size_t idx, const std::array<int, 3>& c) {
    double s = 0.0;
    for (int a = 0; a < g.dim(); ++a) {
      std::array<int, 3> hi = c;
      hi[a] += 1;
      double fl = flux.comp[a][flux.face_index(a, c[0], c[1], c[2])];
      double fr = flux.comp[a][flux.face_index(a, hi[0], hi[1], hi[2])];
      s += (fr - fl) / g.spacing(a);
    }
    out.values[idx] = s;
  });
  return out;
}

Field laplacian(const Field& f) {
  const Grid& g = f.grid;
  Field out(g);
  for_each_cell(g, [&](std::size_t idx, const std::array<int, 3>& c) {
    double s = 0.0;
    double fc = f.values[idx];
    for (int a = 0; a < g.dim(); ++a) {
      double fp = f.values[neighbor(g, idx, c, a, +1)];
      double fm = f.values[neighbor(g, idx, c, a, -1)];
      s += ((fp - fc) - (fc - fm)) / (g.spacing(a) * g.spacing(a));
    }
    out.values[idx] = s;
  });
  return out;
}

double face_inner(const FaceVector& a, const FaceVector& b) {
  check_same_grid(a.grid, b.grid);
  double s = 0.0;
  for (int k = 0; k < a.grid.dim(); ++k)
    for (std::size_t i = 0; i < a.comp[k].size(); ++i) s += a.comp[k][i] * b.comp[k][i];
  return s * a.grid.cell_volume();
}

Field grad_sq(const Field& f) {
  const Grid& g = f.grid;
  Field out(g);
  for_each_cell(g, [&](std::size_t idx, const std::array<int, 3>& c) {
    double s = 0.0;
    double fc = f.values[idx];
    for (int a = 0; a < g.dim(); ++a) {
      double dp = (f.values[neighbor(g, idx, c, a, +1)] - fc) / g.spacing(a);
      double dm = (fc - f.values[neighbor(g, idx, c, a, -1)]) / g.spacing(a);
      s += 0.5 * (dp * dp + dm * dm);
    }
    out.values[idx] = s;
  });
  return out;
}

Field centered_grad_sq(const Field& f) {
  auto gr = gradient(f);
  Field out(f.grid);
  for (const Field& c : gr)
    for (std::size_t i = 0; i < out.size(); ++i) out.values[i] += c.values[i] * c.values[i];
  return out;
}

Field hessian_sq(const Field& f) {
  const Grid& g = f.grid;
  Field out(g);
  for_each_cell(g, [&](std::size_t idx, const std::array<int, 3>& c) {
    double s = 0.0;
    double fc = f.values[idx];
    for (int a = 0; a < g.dim(); ++a) {
      double fp = f.values[neighbor(g, idx, c, a, +1)];
      double fm = f.values[neighbor(g, idx, c, a, -1)];
      double d2 = (fp - 2.0 * fc + fm) / (g.spacing(a) * g.spacing(a));
      s += d2 * d2;
      for (int b = a + 1; b < g.dim(); ++b) {
        auto corner = [&](int da, int db) {
          std::array<int, 3> cc = c;
          std::size_t i1 = neighbor(g, idx, cc, a, da);
          cc[a] = std::clamp(c[a] + da, 0, g.cells(a) - 1);
          return f.values[neighbor(g, i1, cc, b, db)];
        };
        double mixed = (corner(1, 1) - corner(1, -1) - corner(-1, 1) + corner(-1, -1)) /
                       (4.0 * g.spacing(a) * g.spacing(b));
        s += 2.0 * mixed * mixed;
      }
    }
    out.values[idx] = s;
  });
  return out;
}

// ---------------------------------------------------------------- spectrum

NeumannBasis1D::NeumannBasis1D(int cells, double extent)
    : n_(cells), h_(extent / cells), lambda_(cells), modes_(static_cast<std::size_t>(cells) * cells) {
  const double pi = std::numbers::pi;
  for (int j = 0; j < n_; ++j) {
    double s = std::sin(j * pi / (2.0 * n_));
    lambda_[j] = 4.0 / (h_ * h_) * s * s;
    double norm = j == 0 ? 1.0 / std::sqrt(extent) : std::sqrt(2.0 / extent);
    for (int i = 0; i < n_; ++i)
      modes_[static_cast<std::size_t>(j) * n_ + i] = norm * std::cos(j * pi * (i + 0.5) / n_);
  }
}

double mode_eigenvalue(const Grid& g, const std::array<int, 3>& index) {
  const double pi = std::numbers::pi;
  double lam = 0.0;
  for (int a = 0; a < g.dim(); ++a) {
    double s = std::sin(index[a] * pi / (2.0 * g.cells(a)));
    lam += 4.0 / (g.spacing(a) * g.spacing(a)) * s * s;
  }
  return lam;
}

Field mode_field(const Grid& g, const std::array<int, 3>& index) {
  const double pi = std::numbers::pi;
  std::array<std::vector<double>, 3> axis;
  for (int a = 0; a < 3; ++a) {
    axis[a].assign(g.cells(a), 1.0);
    if (a >= g.dim()) continue;
    double norm = index[a] == 0 ? 1.0 / std::sqrt(g.extent(a)) : std::sqrt(2.0 / g.extent(a));
    for (int i = 0; i < g.cells(a); ++i)
      axis[a][i] = norm * std::cos(index[a] * pi * (i + 0.5) / g.cells(a));
  }
  Field out(g);
  for_each_cell(g, [&](std::size_t idx, const std::array<int, 3>& c) {
    out.values[idx] = axis[0][c[0]] * axis[1][c[1]] * axis[2][c[2]];
  });
  return out;
}

std::vector<std::array<int, 3>> sorted_mode_indices(const Grid& g) {
  std::vector<std::pair<double, std::array<int, 3>>> all;
  all.reserve(g.size());
  for_each_cell(g, [&](std::size_t, const std::array<int, 3>& c) {
    all.emplace_back(mode_eigenvalue(g, c), c);
  });
  // Lexicographic tie-break on (j2, j1, j0) keeps the first axis varying fastest.
  std::stable_sort(all.begin(), all.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::array<int, 3>> out;
  out.reserve(all.size());
  for (auto& e : all) out.push_back(e.second);
  return out;
}

std::vector<EigenPair> neumann_eigenpairs(const Grid& g, std::size_t k) {
  if (k > g.size()) {
    std::ostringstream os;
    os << "requested " << k << " eigenpairs but the grid has " << g.size() << " cells";
    fail(ErrorCode::InvalidArgument, os.str());
  }
  auto order = sorted_mode_indices(g);
  std::vector<EigenPair> out;
  out.reserve(k);
  for (std::size_t j = 0; j < k; ++j)
    out.push_back(EigenPair{mode_eigenvalue(g, order[j]), order[j], mode_field(g, order[j])});
  return out;
}

double first_positive_eigenvalue(const Grid& g) {
  double lam = std::numeric_limits<double>::infinity();
  for (int a = 0; a < g.dim(); ++a) {
    std::array<int, 3> idx{0, 0, 0};
    idx[a] = 1;
    lam = std::min(lam, mode_eigenvalue(g, idx));
  }
  return lam;
}

double poincare_constant(const Grid& g) { return 1.0 / first_positive_eigenvalue(g); }

double embedding_ratio(const Field& w) {
  Field gs = grad_sq(w);
  double num = 0.0;
  for (double x : gs.values) num += x * x;
  num *= w.grid.cell_volume();
  Field lap = laplacian(w);
  double den = inner(w, w) + inner(lap, lap);
  return den > 0.0 ? num / den : 0.0;
}

std::vector<double> embedding_constant_trace(const Grid& g, int samples, std::uint64_t seed) {
  require(g.dim() == 3, "the W22-W14 embedding estimate is defined for 3D grids only");
  require(samples >= 1, "embedding estimate needs at least one sample");
  auto pairs = neumann_eigenpairs(g, std::min<std::size_t>(20, g.size()));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> running;
  running.reserve(samples);
  double best = 0.0;
  for (int s = 0; s < samples; ++s) {
    Field w(g);
    for (const auto& p : pairs) {
      double c = normal(rng);
      for (std::size_t i = 0; i < w.size(); ++i) w.values[i] += c * p.field.values[i];
    }
    best = std::max(best, embedding_ratio(w));
    running.push_back(best);
  }
  return running;
}

double embedding_constant_estimate(const Grid& g, int samples, std::uint64_t seed) {
  return embedding_constant_trace(g, samples, seed).back();
}

DomainConstants domain_constants(const Grid& g, int samples, std::uint64_t seed) {
  DomainConstants dc;
  dc.lambda1 = first_positive_eigenvalue(g);
  dc.c_p = 1.0 / dc.lambda1;
  if (g.dim() == 3 && samples > 0) dc.c_omega = embedding_constant_estimate(g, samples, seed);
  return dc;
}

}  // namespace ksl
