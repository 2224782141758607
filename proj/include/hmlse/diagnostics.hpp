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
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hmlse/classifier.hpp"
#include "hmlse/design_space.hpp"
#include "hmlse/hetgp.hpp"
#include "hmlse/matcher.hpp"

namespace hmlse {

// ---------------------------------------------------------------------------
// Emulator validation

/// Two-sided normal coverage of mean +- k sd.
inline constexpr double kNominalTwoSd = 0.9545;

struct CoverageReport {
  int n_validation = 0;
  int n_within = 0;
  double fraction = 0.0;
  double nominal = kNominalTwoSd;
};

/// Counts single-replicate responses within mean +- k_sd * sqrt(var + delta^2(x)).
CoverageReport interval_coverage(const HetGpEmulator& em, const PointMatrix& inputs, const Eigen::VectorXd& responses,
                                 double k_sd = 2.0, double nominal = kNominalTwoSd);

/// Mean of (p - y)^2; the two-category ranked probability score.
double rps_binary(const Eigen::VectorXd& probs, const std::vector<int>& outcomes);

/// Predictive event probability E[sigmoid(f)] with f ~ N(mean, variance).
double predictive_probability(const Prediction& logit_pred);
Eigen::VectorXd predictive_probabilities(const ClassifierEmulator& em, const PointMatrix& inputs);

struct RpsReference {
  double quantile_95 = 0.0;
  double mean = 0.0;
  int n_samples = 0;
};

/// Reference distribution of the score under the emulator: each sample draws
/// latent logits independently from the predictive at every input, then
/// Bernoulli outcomes, and scores them against the predictive probabilities.
RpsReference rps_reference(const ClassifierEmulator& em, const PointMatrix& inputs, int n_samples,
                           std::uint64_t seed);

struct RpsReport {
  double observed_score = 0.0;
  double reference_quantile_95 = 0.0;
  bool pass = false;
};

RpsReport rps_report(const ClassifierEmulator& em, const PointMatrix& inputs, const std::vector<int>& outcomes,
                     int n_samples, std::uint64_t seed);

/// Empirical quantile with linear interpolation between order statistics.
double empirical_quantile(std::vector<double> values, double q);

// ---------------------------------------------------------------------------
// NROY-space summaries

inline constexpr double kDepthFloorLog10 = -10.0;

/// Minimum implausibility and NROY optical depth over a 2D projection.
/// Cells are stored row-major with index cell_i * cells_j + cell_j. Empty
/// cells have count 0 and NaN min_impl / depth_log10.
struct ProjectionGrid {
  int var_i = 0, var_j = 0;
  int cells_i = 0, cells_j = 0;
  std::vector<std::int64_t> count;
  std::vector<std::int64_t> nroy;
  std::vector<double> min_impl;     // capped to [-3, 3]
  std::vector<double> depth_log10;  // log10 NROY proportion, floored at -10
  bool empty(int ci, int cj) const { return count[static_cast<std::size_t>(ci * cells_j + cj)] == 0; }
};

/// Cell of a unit-scale coordinate along variable `var` (binary axes have 2).
int cell_of(const DesignSpace& space, int var, double unit_value, int resolution);
int cells_along(const DesignSpace& space, int var, int resolution);

std::vector<ProjectionGrid> projection_grids(const DesignSpace& space, const PointMatrix& candidates,
                                             const CandidateStatuses& status, int resolution = 20);

struct NroyHistogram {
  int var = 0;
  std::vector<double> edges;          // native units, bins + 1
  std::vector<std::int64_t> count;
  std::vector<std::int64_t> nroy;
  std::vector<double> relative;       // proportion / max proportion, in [0, 1]
  double scale = 0.0;                 // max proportion; absolute = relative * scale
};

std::vector<NroyHistogram> nroy_histograms(const DesignSpace& space, const PointMatrix& candidates,
                                           const CandidateStatuses& status, int bins = 20);

/// Long-format CSV: var_i,var_j,cell_i,cell_j,min_impl,depth_log10,count.
void write_grids_csv(std::ostream& out, const DesignSpace& space, const std::vector<ProjectionGrid>& grids);

/// CSV: var,bin,lower,upper,count,nroy,relative,absolute.
void write_histograms_csv(std::ostream& out, const DesignSpace& space, const std::vector<NroyHistogram>& hists);

}  // namespace hmlse
