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

#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hmlse {

enum class VariableKind { continuous, binary };

struct VariableSpec {
  std::string name;
  VariableKind kind = VariableKind::continuous;
  double lower = 0.0;  // native units; binaries use {0,1}
  double upper = 1.0;
};

/// Ordered mixed input space. Continuous variables always precede binary ones.
class DesignSpace {
 public:
  DesignSpace() = default;
  /// Variables may be supplied in any order; they are stored in canonical
  /// order (continuous first, relative order otherwise preserved).
  explicit DesignSpace(std::vector<VariableSpec> variables);

  const std::vector<VariableSpec>& variables() const noexcept { return variables_; }
  int n_continuous() const noexcept { return n_continuous_; }
  int n_binary() const noexcept { return n_binary_; }
  int dimension() const noexcept { return n_continuous_ + n_binary_; }
  /// Number of binary-level crossings (2^n_binary).
  int n_slices() const noexcept { return 1 << n_binary_; }
  int index_of(const std::string& name) const;

  /// The eight-variable building space (insulation, glazing, ...).
  static DesignSpace building();

 private:
  std::vector<VariableSpec> variables_;
  int n_continuous_ = 0;
  int n_binary_ = 0;
};

struct InputPoint {
  Eigen::VectorXd continuous;  // unit-scaled
  Eigen::VectorXi binary;      // 0/1 flags

  friend bool operator==(const InputPoint& a, const InputPoint& b) {
    return a.continuous == b.continuous && a.binary == b.binary;
  }
};

/// Rows are points; columns are continuous coordinates followed by binary
/// flags stored as 0.0/1.0. This is the layout every kernel routine takes.
using PointMatrix = Eigen::MatrixXd;

InputPoint to_unit(const DesignSpace& space, const Eigen::Ref<const Eigen::VectorXd>& native);
Eigen::VectorXd to_native(const DesignSpace& space, const InputPoint& point);
Eigen::VectorXd to_native(const DesignSpace& space, const Eigen::Ref<const Eigen::RowVectorXd>& packed);

PointMatrix pack(const std::vector<InputPoint>& points);
Eigen::RowVectorXd pack(const InputPoint& point);
InputPoint unpack(const DesignSpace& space, const Eigen::Ref<const Eigen::RowVectorXd>& row);
std::vector<InputPoint> unpack_rows(const DesignSpace& space, const PointMatrix& rows);

/// Random Latin hypercube of n points in the continuous dimensions. Binary
/// coordinates are fixed to `binary_levels` when given, otherwise balanced
/// over their levels at random.
std::vector<InputPoint> latin_hypercube(const DesignSpace& space, int n, std::uint64_t seed,
                                        const std::optional<Eigen::VectorXi>& binary_levels = {});

/// Sliced Latin hypercube: n_per_slice points for every crossing of the
/// binary levels. Each slice is a Latin hypercube with n_per_slice strata
/// and the union is one with n_per_slice * n_slices strata.
std::vector<InputPoint> sliced_latin_hypercube(const DesignSpace& space, int n_per_slice,
                                               std::uint64_t seed);

/// Binary levels of slice s (bit i of s is binary variable i).
Eigen::VectorXi slice_levels(const DesignSpace& space, int slice);

struct Job {
  InputPoint point;
  int point_index = 0;
  int replicate = 0;
};

/// Each point repeated k times, point-major, replicate ids 0..k-1.
std::vector<Job> replicate_design(const std::vector<InputPoint>& points, int k);

/// Fixed candidate pool for a run. Row index is the candidate id.
struct CandidateSet {
  PointMatrix points;
  std::size_t size() const noexcept { return static_cast<std::size_t>(points.rows()); }
};

/// One Latin hypercube of (n / n_slices) points per binary-level crossing,
/// concatenated; exact duplicates are removed.
CandidateSet make_candidate_set(const DesignSpace& space, int n, std::uint64_t seed);

/// Writes `id,rep,x1,...,xD` with native-unit coordinates.
void write_design_csv(std::ostream& out, const DesignSpace& space, const std::vector<Job>& jobs);

}  // namespace hmlse
