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

#include <set>
#include <sstream>

#include "doctest.h"

#include "hmlse/design_space.hpp"
#include "hmlse/errors.hpp"

using namespace hmlse;

namespace {

// Stratum index of a unit value among n equal strata.
int stratum(double u, int n) { return std::min(static_cast<int>(u * n), n - 1); }

bool is_latin(const std::vector<InputPoint>& pts, int dim) {
  const int n = static_cast<int>(pts.size());
  std::set<int> seen;
  for (const auto& p : pts) seen.insert(stratum(p.continuous[dim], n));
  return static_cast<int>(seen.size()) == n;
}

}  // namespace

TEST_SUITE("design_space") {
  TEST_CASE("building space puts seven continuous variables before the glazing flag") {
    const auto s = DesignSpace::building();
    CHECK(s.n_continuous() == 7);
    CHECK(s.n_binary() == 1);
    CHECK(s.n_slices() == 2);
    CHECK(s.variables().back().name == "triple_glazing");
    CHECK(s.index_of("window_size") == 3);
    CHECK_THROWS_AS(s.index_of("nope"), ContractError);
  }

  TEST_CASE("canonical order moves binaries last") {
    const DesignSpace s({{"b", VariableKind::binary}, {"a", VariableKind::continuous, -1.0, 2.0}});
    CHECK(s.variables()[0].name == "a");
    CHECK(s.variables()[1].name == "b");
    CHECK_THROWS_AS(DesignSpace({{"a", VariableKind::continuous, 1.0, 1.0}}), ContractError);
    CHECK_THROWS_AS(DesignSpace({{"a", VariableKind::binary}, {"a", VariableKind::binary}}), ContractError);
  }

  TEST_CASE("unit and native scales round-trip and reject out-of-range values") {
    const auto s = DesignSpace::building();
    Eigen::VectorXd x(8);
    x << 0.25, 0.1, 0.05, 0.6, 0.5, 0.2, 0.7, 1.0;
    const auto u = to_unit(s, x);
    CHECK(u.continuous[0] == doctest::Approx(0.5));
    CHECK(u.continuous[3] == doctest::Approx(0.5));
    CHECK(u.binary[0] == 1);
    CHECK((to_native(s, u) - x).cwiseAbs().maxCoeff() < 1e-15);
    x[3] = 1.5;
    CHECK_THROWS_AS(to_unit(s, x), RangeError);
    x[3] = 0.6;
    x[7] = 0.5;
    CHECK_THROWS_AS(to_unit(s, x), RangeError);
  }

  TEST_CASE("latin hypercube fills every stratum once per dimension") {
    const auto s = DesignSpace::building();
    const auto pts = latin_hypercube(s, 37, 11);
    REQUIRE(pts.size() == 37);
    for (int d = 0; d < 7; ++d) CHECK(is_latin(pts, d));
    int ones = 0;
    for (const auto& p : pts) ones += p.binary[0];
    CHECK((ones == 18 || ones == 19));
  }

  TEST_CASE("sliced latin hypercube: each slice and the union are latin") {
    const auto s = DesignSpace::building();
    const int m = 125;
    const auto pts = sliced_latin_hypercube(s, m, 5);
    REQUIRE(pts.size() == 250);
    for (int d = 0; d < 7; ++d) {
      CHECK(is_latin(pts, d));
      for (int slice = 0; slice < 2; ++slice) {
        std::vector<InputPoint> part(pts.begin() + slice * m, pts.begin() + (slice + 1) * m);
        for (const auto& p : part) CHECK(p.binary[0] == slice);
        CHECK(is_latin(part, d));
      }
    }
  }

  TEST_CASE("designs are deterministic in the seed") {
    const auto s = DesignSpace::building();
    CHECK(pack(sliced_latin_hypercube(s, 10, 3)) == pack(sliced_latin_hypercube(s, 10, 3)));
    CHECK(pack(sliced_latin_hypercube(s, 10, 3)) != pack(sliced_latin_hypercube(s, 10, 4)));
    const auto a = make_candidate_set(s, 1000, 9);
    const auto b = make_candidate_set(s, 1000, 9);
    CHECK(a.size() == 1000);
    CHECK(a.points == b.points);
  }

  TEST_CASE("replicated design and csv export") {
    const auto s = DesignSpace::building();
    const auto pts = latin_hypercube(s, 3, 1);
    const auto jobs = replicate_design(pts, 2);
    REQUIRE(jobs.size() == 6);
    CHECK(jobs[0].point_index == 0);
    CHECK(jobs[1].point_index == 0);
    CHECK(jobs[1].replicate == 1);
    CHECK(jobs[5].point_index == 2);
    std::ostringstream out;
    write_design_csv(out, s, jobs);
    const std::string text = out.str();
    CHECK(text.rfind("id,rep,x1,x2,x3,x4,x5,x6,x7,x8\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 7);
  }
}
