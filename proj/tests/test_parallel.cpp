// Copyright Contributors to the viewvote Project
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <numeric>
#include <stdexcept>
#include <vector>

#include "viewvote/parallel.hpp"

using namespace viewvote;

TEST_SUITE("parallel") {

TEST_CASE("parallel_for touches every index exactly once") {
  for (int workers : {1, 2, 8}) {
    std::vector<std::atomic<int>> hits(500);
    parallel_for(hits.size(), workers,
                 [&](std::size_t i) { hits[i].fetch_add(1); });
    for (const auto& h : hits) CHECK(h.load() == 1);
  }
}

TEST_CASE("parallel_for propagates the first exception") {
  CHECK_THROWS_AS(parallel_for(100, 4,
                               [](std::size_t i) {
                                 if (i == 37)
                                   throw std::runtime_error("boom");
                               }),
                  std::runtime_error);
}

TEST_CASE("ordered_produce_consume consumes strictly in order") {
  for (int workers : {1, 3, 8}) {
    std::vector<std::size_t> seen;
    ordered_produce_consume<std::size_t>(
        400, workers, [](std::size_t i) { return i * i; },
        [&](std::size_t i, std::size_t&& value) {
          CHECK(value == i * i);
          seen.push_back(i);
        });
    REQUIRE(seen.size() == 400);
    for (std::size_t i = 0; i < seen.size(); ++i) CHECK(seen[i] == i);
  }
}

TEST_CASE("ordered_produce_consume propagates producer exceptions") {
  CHECK_THROWS_AS(ordered_produce_consume<int>(
                      200, 4,
                      [](std::size_t i) -> int {
                        if (i == 150) throw std::runtime_error("producer");
                        return 0;
                      },
                      [](std::size_t, int&&) {}),
                  std::runtime_error);
}

TEST_CASE("ordered_produce_consume propagates consumer exceptions") {
  CHECK_THROWS_AS(ordered_produce_consume<int>(
                      200, 4, [](std::size_t) { return 1; },
                      [](std::size_t i, int&&) {
                        if (i == 10) throw std::runtime_error("consumer");
                      }),
                  std::runtime_error);
}

}  // TEST_SUITE
