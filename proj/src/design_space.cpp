/*
 * Copyright 2026 The hmlse Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "hmlse/design_space.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <set>
#include <stdexcept>

#include "hmlse/errors.hpp"
#include "hmlse/random.hpp"

namespace hmlse {

DesignSpace::DesignSpace(std::vector<VariableSpec> variables) {
  if (variables.empty()) throw ContractError("design space needs at least one variable");
  std::set<std::string> names;
  for (auto& v : variables) {
    if (!names.insert(v.name).second) throw ContractError("duplicate variable name '" + v.name + "'");
    if (v.kind == VariableKind::binary) {
      v.lower = 0.0;
      v.upper = 1.0;
    } else if (!(v.lower < v.upper)) {
      throw ContractError("variable '" + v.name + "' needs lower < upper");
    }
  }
  std::stable_partition(variables.begin(), variables.end(),
                        [](const VariableSpec& v) { return v.kind == VariableKind::continuous; });
  variables_ = std::move(variables);
  n_continuous_ = static_cast<int>(std::count_if(variables_.begin(), variables_.end(), [](const auto& v) {
    return v.kind == VariableKind::continuous;
  }));
  n_binary_ = static_cast<int>(variables_.size()) - n_continuous_;
  if (n_binary_ > 16) throw ContractError("too many binary variables");
}

int DesignSpace::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < variables_.size(); ++i)
    if (variables_[i].name == name) return static_cast<int>(i);
  throw ContractError("unknown variable '" + name + "'");
}

DesignSpace DesignSpace::building() {
  using K = VariableKind;
  return DesignSpace({
      {"wall_insulation", K::continuous, 0.0, 0.5},
      {"roof_insulation", K::continuous, 0.0, 0.5},
      {"ground_insulation", K::continuous, 0.0, 0.1},
      {"window_size", K::continuous, 0.2, 1.0},
      {"overhang_length", K::continuous, 0.0, 1.0},
      {"window_opening", K::continuous, 0.0, 1.0},
      {"roof_emissivity", K::continuous, 0.4, 1.0},
      {"triple_glazing", K::binary, 0.0, 1.0},
  });
}

InputPoint to_unit(const DesignSpace& space, const Eigen::Ref<const Eigen::VectorXd>& native) {
  if (native.size() != space.dimension())
    throw ContractError("native vector has " + std::to_string(native.size()) + " entries, expected " +
                        std::to_string(space.dimension()));
  InputPoint p;
  p.continuous.resize(space.n_continuous());
  p.binary.resize(space.n_binary());
  const auto& vars = space.variables();
  for (int i = 0; i < space.n_continuous(); ++i) {
    const auto& v = vars[i];
    const double x = native[i];
    if (!(x >= v.lower && x <= v.upper)) throw RangeError(v.name, x);
    p.continuous[i] = (x - v.lower) / (v.upper - v.lower);
  }
  for (int j = 0; j < space.n_binary(); ++j) {
    const int i = space.n_continuous() + j;
    const double x = native[i];
    if (x != 0.0 && x != 1.0) throw RangeError(vars[i].name, x);
    p.binary[j] = static_cast<int>(x);
  }
  return p;
}

Eigen::VectorXd to_native(const DesignSpace& space, const InputPoint& point) {
  return to_native(space, pack(point));
}

Eigen::VectorXd to_native(const DesignSpace& space, const Eigen::Ref<const Eigen::RowVectorXd>& packed) {
  if (packed.size() != space.dimension()) throw ContractError("point dimension mismatch");
  Eigen::VectorXd out(space.dimension());
  const auto& vars = space.variables();
  for (int i = 0; i < space.n_continuous(); ++i)
    out[i] = vars[i].lower + packed[i] * (vars[i].upper - vars[i].lower);
  for (int i = space.n_continuous(); i < space.dimension(); ++i) out[i] = packed[i];
  return out;
}

Eigen::RowVectorXd pack(const InputPoint& point) {
  Eigen::RowVectorXd row(point.continuous.size() + point.binary.size());
  row << point.continuous.transpose(), point.binary.cast<double>().transpose();
  return row;
}

PointMatrix pack(const std::vector<InputPoint>& points) {
  if (points.empty()) return PointMatrix(0, 0);
  const auto nc = points.front().continuous.size();
  const auto nb = points.front().binary.size();
  PointMatrix m(static_cast<Eigen::Index>(points.size()), nc + nb);
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].continuous.size() != nc || points[i].binary.size() != nb)
      throw ContractError("inconsistent point dimensions");
    m.row(static_cast<Eigen::Index>(i)) = pack(points[i]);
  }
  return m;
}

InputPoint unpack(const DesignSpace& space, const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  if (row.size() != space.dimension()) throw ContractError("point dimension mismatch");
  InputPoint p;
  p.continuous = row.head(space.n_continuous()).transpose();
  p.binary = row.tail(space.n_binary()).transpose().cast<int>();
  return p;
}

std::vector<InputPoint> unpack_rows(const DesignSpace& space, const PointMatrix& rows) {
  std::vector<InputPoint> out;
  out.reserve(static_cast<std::size_t>(rows.rows()));
  for (Eigen::Index i = 0; i < rows.rows(); ++i) out.push_back(unpack(space, rows.row(i)));
  return out;
}

namespace {

std::vector<int> permutation(int n, Rng& rng) {
  std::vector<int> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), 0);
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

}  // namespace

Eigen::VectorXi slice_levels(const DesignSpace& space, int slice) {
  Eigen::VectorXi levels(space.n_binary());
  for (int j = 0; j < space.n_binary(); ++j) levels[j] = (slice >> j) & 1;
  return levels;
}

std::vector<InputPoint> latin_hypercube(const DesignSpace& space, int n, std::uint64_t seed,
                                        const std::optional<Eigen::VectorXi>& binary_levels) {
  if (n < 1) throw ContractError("latin_hypercube needs n >= 1");
  if (binary_levels && binary_levels->size() != space.n_binary())
    throw ContractError("binary level vector has wrong length");
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<InputPoint> pts(static_cast<std::size_t>(n));
  for (auto& p : pts) {
    p.continuous.resize(space.n_continuous());
    p.binary.resize(space.n_binary());
  }
  for (int d = 0; d < space.n_continuous(); ++d) {
    const auto perm = permutation(n, rng);
    for (int i = 0; i < n; ++i) pts[i].continuous[d] = (perm[i] + unif(rng)) / n;
  }
  for (int j = 0; j < space.n_binary(); ++j) {
    if (binary_levels) {
      for (auto& p : pts) p.binary[j] = (*binary_levels)[j];
    } else {
      const auto perm = permutation(n, rng);
      for (int i = 0; i < n; ++i) pts[i].binary[j] = (2 * perm[i]) / n;
    }
  }
  return pts;
}

std::vector<InputPoint> sliced_latin_hypercube(const DesignSpace& space, int n_per_slice,
                                               std::uint64_t seed) {
  if (space.n_binary() == 0)
    throw ContractError("sliced_latin_hypercube needs a binary variable; use latin_hypercube");
  if (n_per_slice < 1) throw ContractError("sliced_latin_hypercube needs n_per_slice >= 1");
  const int t = space.n_slices();
  const int m = n_per_slice;
  const int total = m * t;
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  std::vector<InputPoint> pts(static_cast<std::size_t>(total));
  for (int s = 0; s < t; ++s) {
    const auto levels = slice_levels(space, s);
    for (int i = 0; i < m; ++i) {
      auto& p = pts[static_cast<std::size_t>(s * m + i)];
      p.continuous.resize(space.n_continuous());
      p.binary = levels;
    }
  }
  for (int d = 0; d < space.n_continuous(); ++d) {
    // Coarse stratum of each point within its slice.
    std::vector<std::vector<int>> coarse(static_cast<std::size_t>(t));
    for (int s = 0; s < t; ++s) coarse[s] = permutation(m, rng);
    // Within every coarse stratum, hand the t fine sub-strata out to the slices.
    std::vector<std::vector<int>> fine(static_cast<std::size_t>(m));
    for (int c = 0; c < m; ++c) fine[c] = permutation(t, rng);
    for (int s = 0; s < t; ++s) {
      for (int i = 0; i < m; ++i) {
        const int c = coarse[s][i];
        const int stratum = c * t + fine[c][s];
        pts[static_cast<std::size_t>(s * m + i)].continuous[d] = (stratum + unif(rng)) / total;
      }
    }
  }
  return pts;
}

std::vector<Job> replicate_design(const std::vector<InputPoint>& points, int k) {
  if (k < 1) throw ContractError("replicate_design needs k >= 1");
  std::vector<Job> jobs;
  jobs.reserve(points.size() * static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < points.size(); ++i)
    for (int r = 0; r < k; ++r) jobs.push_back({points[i], static_cast<int>(i), r});
  return jobs;
}

CandidateSet make_candidate_set(const DesignSpace& space, int n, std::uint64_t seed) {
  if (n < 1) throw ContractError("candidate count must be positive");
  const int t = space.n_slices();
  std::vector<InputPoint> all;
  all.reserve(static_cast<std::size_t>(n));
  for (int s = 0; s < t; ++s) {
    const int size = n / t + (s < n % t ? 1 : 0);
    if (size == 0) continue;
    auto block = latin_hypercube(space, size, derive_seed(seed, {static_cast<std::uint64_t>(s)}),
                                 slice_levels(space, s));
    std::move(block.begin(), block.end(), std::back_inserter(all));
  }
  PointMatrix m = pack(all);

  // Exact-duplicate removal, keeping first occurrence so ids stay in generation order.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(m.rows()));
  std::iota(order.begin(), order.end(), 0);
  auto row_less = [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      if (m(a, c) != m(b, c)) return m(a, c) < m(b, c);
    return a < b;
  };
  std::sort(order.begin(), order.end(), row_less);
  std::vector<char> keep(static_cast<std::size_t>(m.rows()), 1);
  for (std::size_t i = 1; i < order.size(); ++i)
    if (m.row(order[i]) == m.row(order[i - 1])) keep[static_cast<std::size_t>(order[i])] = 0;
  const auto kept = std::count(keep.begin(), keep.end(), 1);
  if (kept == m.rows()) return {std::move(m)};
  CandidateSet out{PointMatrix(kept, m.cols())};
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    if (keep[static_cast<std::size_t>(i)]) out.points.row(r++) = m.row(i);
  return out;
}

void write_design_csv(std::ostream& out, const DesignSpace& space, const std::vector<Job>& jobs) {
  out << "id,rep";
  for (int d = 0; d < space.dimension(); ++d) out << ",x" << d + 1;
  out << '\n';
  char buf[32];
  for (const auto& job : jobs) {
    const auto native = to_native(space, job.point);
    out << job.point_index << ',' << job.replicate;
    for (int d = 0; d < native.size(); ++d) {
      std::snprintf(buf, sizeof buf, "%.17g", native[d]);
      out << ',' << buf;
    }
    out << '\n';
  }
}

}  // namespace hmlse
