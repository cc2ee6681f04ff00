#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "msem/ann.hpp"
#include "msem/errors.hpp"
#include "msem/rng.hpp"

using namespace msem;
namespace fs = std::filesystem;

namespace {

using VecSet = std::vector<std::pair<uint64_t, std::vector<double>>>;

VecSet random_vectors(int64_t n, int64_t dim, uint64_t seed) {
  Rng rng(seed);
  VecSet out;
  out.reserve(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    std::vector<double> v(static_cast<size_t>(dim));
    for (auto& x : v) x = rng.normal(0.0, 1.0);
    out.emplace_back(static_cast<uint64_t>(i), std::move(v));
  }
  return out;
}

fs::path temp_path(const std::string& stem) {
  static int counter = 0;
  return fs::temp_directory_path() /
         (stem + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++) + ".annx");
}

// Slow second opinion for brute_force_topk: full sort of normalized dots.
SearchResult oracle_topk(const VecSet& vectors, const std::vector<double>& query, int64_t k) {
  auto norm = [](const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
  };
  double qn = norm(query);
  std::vector<Neighbor> all;
  for (const auto& [id, v] : vectors) {
    double dot = 0;
    for (size_t i = 0; i < v.size(); ++i) dot += v[i] * query[i];
    all.push_back({id, dot / (qn * norm(v))});
  }
  std::sort(all.begin(), all.end(), [](const Neighbor& a, const Neighbor& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
  if (static_cast<int64_t>(all.size()) > k) all.resize(static_cast<size_t>(k));
  return all;
}

}  // namespace

TEST_CASE("single-leaf index returns exact results") {
  VecSet vecs = random_vectors(20, 8, 1);
  AnnIndex idx = AnnIndex::build(vecs, /*num_trees=*/1, /*leaf_capacity=*/32, /*seed=*/7);
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> q(8);
    for (auto& x : q) x = rng.normal(0, 1);
    SearchResult got = idx.query_topk(q, 5);
    SearchResult want = brute_force_topk(vecs, q, 5);
    REQUIRE(got.size() == want.size());
    for (size_t i = 0; i < got.size(); ++i) {
      REQUIRE(got[i].id == want[i].id);
      // index scores use f32-stored vectors; brute force stays in doubles
      REQUIRE(got[i].score == doctest::Approx(want[i].score).epsilon(1e-6));
    }
  }
}

TEST_CASE("stored vectors are unit-normalized; every id in every tree exactly once") {
  VecSet vecs = random_vectors(200, 16, 3);
  AnnIndex idx = AnnIndex::build(vecs, 4, 8, 11);
  for (int64_t pos = 0; pos < idx.size(); ++pos) {
    const float* v = idx.vector_at(pos);
    double n = 0;
    for (int64_t j = 0; j < idx.dim(); ++j) n += double(v[j]) * double(v[j]);
    CHECK(std::abs(std::sqrt(n) - 1.0) < 1e-6);
  }
  for (uint32_t t = 0; t < idx.num_trees(); ++t) {
    std::vector<uint64_t> seen;
    for (const auto& leaf : idx.tree_leaves(t)) {
      CHECK(leaf.size() <= 8);
      seen.insert(seen.end(), leaf.begin(), leaf.end());
    }
    std::sort(seen.begin(), seen.end());
    REQUIRE(seen.size() == 200);
    CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
  }
}

TEST_CASE("build rejects duplicate ids, zero vectors, empty input, ragged dims") {
  CHECK_THROWS_AS(AnnIndex::build({}, 1, 8, 1), DataError);
  VecSet dup = {{1, {1, 0}}, {1, {0, 1}}};
  CHECK_THROWS_AS(AnnIndex::build(dup, 1, 8, 1), DataError);
  VecSet zero = {{1, {0, 0}}};
  CHECK_THROWS_AS(AnnIndex::build(zero, 1, 8, 1), DataError);
  VecSet ragged = {{1, {1, 0}}, {2, {1, 0, 0}}};
  CHECK_THROWS_AS(AnnIndex::build(ragged, 1, 8, 1), ShapeError);
}

TEST_CASE("query contract: dim mismatch and zero query are errors; k clamps") {
  VecSet vecs = random_vectors(10, 4, 5);
  AnnIndex idx = AnnIndex::build(vecs, 2, 4, 5);
  CHECK_THROWS_AS(idx.query_topk({1, 2, 3}, 2), ContractError);
  CHECK_THROWS_AS(idx.query_topk({0, 0, 0, 0}, 2), DataError);
  CHECK_THROWS_AS(idx.query_topk({1, 0, 0, 0}, 0), ContractError);
  SearchResult all = idx.query_topk({1, 0, 0, 0}, 100);
  CHECK(all.size() == 10);  // k larger than the set returns everything
}

TEST_CASE("self-query: an indexed vector comes back first with score 1") {
  VecSet vecs = random_vectors(100, 12, 6);
  AnnIndex idx = AnnIndex::build(vecs, 8, 8, 6);
  for (uint64_t probe : {0ULL, 17ULL, 99ULL}) {
    SearchResult got = idx.query_topk(vecs[probe].second, 3);
    REQUIRE(!got.empty());
    CHECK(got[0].id == probe);
    CHECK(got[0].score == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("k >= N with full budget equals brute force") {
  VecSet vecs = random_vectors(60, 8, 7);
  AnnIndex idx = AnnIndex::build(vecs, 4, 8, 7);
  Rng rng(8);
  std::vector<double> q(8);
  for (auto& x : q) x = rng.normal(0, 1);
  SearchResult got = idx.query_topk(q, 60, /*search_budget=*/60 * 4);
  SearchResult want = brute_force_topk(vecs, q, 60);
  REQUIRE(got.size() == want.size());
  for (size_t i = 0; i < got.size(); ++i) REQUIRE(got[i].id == want[i].id);
}

TEST_CASE("brute_force_topk agrees with a full-sort oracle; ties break by id") {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    VecSet vecs = random_vectors(30, 6, 100 + static_cast<uint64_t>(trial));
    std::vector<double> q(6);
    for (auto& x : q) x = rng.normal(0, 1);
    SearchResult got = brute_force_topk(vecs, q, 10);
    SearchResult want = oracle_topk(vecs, q, 10);
    REQUIRE(got.size() == want.size());
    for (size_t i = 0; i < got.size(); ++i) REQUIRE(got[i].id == want[i].id);
  }
  // duplicate vectors force exact ties: ascending id order
  VecSet ties = {{5, {1, 0}}, {2, {1, 0}}, {9, {1, 0}}, {1, {0, 1}}};
  SearchResult r = brute_force_topk(ties, {1, 0}, 3);
  REQUIRE(r.size() == 3);
  CHECK(r[0].id == 2);
  CHECK(r[1].id == 5);
  CHECK(r[2].id == 9);
}

TEST_CASE("recall_at_k: hand values") {
  SearchResult a = {{1, .9}, {2, .8}, {3, .7}};
  SearchResult b = {{1, .9}, {4, .8}, {3, .7}};
  CHECK(recall_at_k(a, b, 3) == doctest::Approx(2.0 / 3.0));
  CHECK(recall_at_k(a, a, 3) == doctest::Approx(1.0));
  CHECK(recall_at_k({}, b, 3) == doctest::Approx(0.0));
}

TEST_CASE("build is deterministic: same inputs give byte-identical files") {
  VecSet vecs = random_vectors(300, 16, 10);
  fs::path p1 = temp_path("ann_det_a"), p2 = temp_path("ann_det_b");
  AnnIndex::build(vecs, 4, 16, 42).save(p1.string());
  AnnIndex::build(vecs, 4, 16, 42).save(p2.string());
  std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
  std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(!b1.empty());
  CHECK(b1 == b2);
  fs::remove(p1);
  fs::remove(p2);
}

TEST_CASE("save/load round trip answers queries identically") {
  VecSet vecs = random_vectors(500, 24, 11);
  AnnIndex idx = AnnIndex::build(vecs, 8, 16, 13);
  fs::path path = temp_path("ann_roundtrip");
  idx.save(path.string());
  AnnIndex loaded = AnnIndex::load(path.string());
  CHECK(loaded.size() == idx.size());
  CHECK(loaded.dim() == idx.dim());
  CHECK(loaded.num_trees() == idx.num_trees());
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> q(24);
    for (auto& x : q) x = rng.normal(0, 1);
    SearchResult a = idx.query_topk(q, 7);
    SearchResult b = loaded.query_topk(q, 7);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
      REQUIRE(a[i].id == b[i].id);
      REQUIRE(a[i].score == b[i].score);
    }
  }
  fs::remove(path);
}

TEST_CASE("index files: corrupt inputs raise the precise error class") {
  VecSet vecs = random_vectors(20, 4, 14);
  fs::path path = temp_path("ann_err");
  AnnIndex::build(vecs, 2, 8, 14).save(path.string());
  std::ifstream in(path, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();

  SUBCASE("bad magic") {
    std::string bad = bytes;
    bad[0] = 'Z';
    std::ofstream(path, std::ios::binary) << bad;
    CHECK_THROWS_AS(AnnIndex::load(path.string()), MagicError);
  }
  SUBCASE("bad version") {
    std::string bad = bytes;
    bad[4] = char(250);
    std::ofstream(path, std::ios::binary) << bad;
    CHECK_THROWS_AS(AnnIndex::load(path.string()), VersionError);
  }
  SUBCASE("truncated") {
    std::ofstream(path, std::ios::binary) << bytes.substr(0, bytes.size() - 9);
    CHECK_THROWS_AS(AnnIndex::load(path.string()), TruncatedError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(AnnIndex::load(path.string() + ".nope"), IoError);
  }
  fs::remove(path);
}

TEST_CASE("recall on 10k random vectors grows monotonically with the budget") {
  // Isotropic Gaussian data at d=64 is the worst case for space-partitioning
  // search: hyperplane margins carry almost no locality signal, so tight
  // budgets give low recall no matter the forest shape. The properties
  // guaranteed here are monotone improvement and exhaustive-budget exactness.
  VecSet vecs = random_vectors(10000, 64, 21);
  AnnIndex idx = AnnIndex::build(vecs, 16, 32, 21);
  Rng rng(22);
  const int kQueries = 30;
  std::vector<std::vector<double>> queries;
  std::vector<SearchResult> exact;
  for (int trial = 0; trial < kQueries; ++trial) {
    std::vector<double> q(64);
    for (auto& x : q) x = rng.normal(0, 1);
    exact.push_back(brute_force_topk(vecs, q, 10));
    queries.push_back(std::move(q));
  }
  double prev = -1.0;
  for (int64_t budget : {800, 3000, 8000, 10000}) {
    double total = 0;
    for (int i = 0; i < kQueries; ++i)
      total += recall_at_k(idx.query_topk(queries[static_cast<size_t>(i)], 10, budget),
                           exact[static_cast<size_t>(i)], 10);
    double mean = total / kQueries;
    INFO("budget " << budget << " recall " << mean);
    CHECK(mean >= prev);
    prev = mean;
  }
  CHECK(prev == doctest::Approx(1.0));  // full budget degenerates to brute force
}

TEST_CASE("recall does not degrade with more trees") {
  VecSet vecs = random_vectors(3000, 32, 23);
  AnnIndex small = AnnIndex::build(vecs, 2, 16, 23);
  AnnIndex big = AnnIndex::build(vecs, 16, 16, 23);
  Rng rng(24);
  double r_small = 0, r_big = 0;
  const int kQueries = 40;
  for (int trial = 0; trial < kQueries; ++trial) {
    std::vector<double> q(32);
    for (auto& x : q) x = rng.normal(0, 1);
    SearchResult exact = brute_force_topk(vecs, q, 10);
    r_small += recall_at_k(small.query_topk(q, 10, 400), exact, 10);
    r_big += recall_at_k(big.query_topk(q, 10, 400), exact, 10);
  }
  INFO("2 trees: " << r_small / kQueries << ", 16 trees: " << r_big / kQueries);
  CHECK(r_big >= r_small);
}
