#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "ldmatrix/parallel.hpp"
#include "ldmatrix/rng.hpp"

using namespace ldmatrix;

namespace {
constexpr std::uint64_t kOp = RngStream::op_label("ldmatrix.test_op");
constexpr std::uint64_t kOtherOp = RngStream::op_label("ldmatrix.other_op");
}  // namespace

TEST_CASE("rng: identical keys replay the identical sequence") {
  RngStream a(42, kOp, 7);
  RngStream b(42, kOp, 7);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("rng: distinct path or op indices decorrelate streams") {
  RngStream base(42, kOp, 0);
  RngStream path(42, kOp, 1);
  RngStream op(42, kOtherOp, 0);
  RngStream seed(43, kOp, 0);
  const std::uint64_t v = base.next_u64();
  CHECK(v != path.next_u64());
  CHECK(v != op.next_u64());
  CHECK(v != seed.next_u64());
  static_assert(kOp != kOtherOp);
}

TEST_CASE("rng: uniform01 stays inside the open interval with mean 1/2") {
  RngStream s(1, kOp, 0);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform01();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  // SE of the mean is 1/sqrt(12 n) ~ 9.1e-4.
  CHECK(std::abs(sum / n - 0.5) < 3.0 * 9.2e-4);
}

TEST_CASE("rng: normal moments match N(0,1) within 4 SE") {
  RngStream s(2, kOp, 0);
  const int n = 100000;
  double m1 = 0.0, m2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = s.normal();
    m1 += z;
    m2 += z * z;
  }
  m1 /= n;
  m2 /= n;
  CHECK(std::abs(m1) < 4.0 / std::sqrt(static_cast<double>(n)));
  CHECK(std::abs(m2 - 1.0) < 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("rng: exponential has unit mean within 4 SE") {
  RngStream s(3, kOp, 0);
  const int n = 100000;
  double m1 = 0.0;
  for (int i = 0; i < n; ++i) m1 += s.exponential();
  m1 /= n;
  CHECK(std::abs(m1 - 1.0) < 4.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("rng: categorical frequencies follow the weights") {
  RngStream s(4, kOp, 0);
  const double w[3] = {0.5, 0.3, 0.2};
  std::vector<int> counts(3, 0);
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[s.categorical(w, 3, 1.0)];
  for (int j = 0; j < 3; ++j) {
    const double p_hat = static_cast<double>(counts[j]) / n;
    const double se = std::sqrt(w[j] * (1.0 - w[j]) / n);
    CHECK(std::abs(p_hat - w[j]) < 4.0 * se);
  }
}

TEST_CASE("rng: parallel_for_index result is independent of worker count") {
  std::vector<double> one(64), four(64);
  set_worker_threads(1);
  parallel_for_index(64, [&](std::size_t i) {
    RngStream s(9, kOp, i);
    one[i] = s.uniform01() + s.normal();
  });
  set_worker_threads(4);
  parallel_for_index(64, [&](std::size_t i) {
    RngStream s(9, kOp, i);
    four[i] = s.uniform01() + s.normal();
  });
  set_worker_threads(1);
  for (int i = 0; i < 64; ++i) CHECK(one[i] == four[i]);
}

TEST_CASE("rng: parallel_for_index rethrows the first worker exception") {
  set_worker_threads(4);
  CHECK_THROWS_AS(parallel_for_index(16,
                                     [&](std::size_t i) {
                                       if (i == 5)
                                         throw std::runtime_error("boom");
                                     }),
                  std::runtime_error);
  set_worker_threads(1);
}
