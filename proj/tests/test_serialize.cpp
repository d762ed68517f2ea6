#include <doctest.h>

#include <filesystem>
#include <random>

#include "fixtures.hpp"
#include "nahm/dirac.hpp"
#include "nahm/serialize.hpp"

using namespace nahm;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("nahmlab_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("SHA-256 test vectors") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("17 significant digits round-trip doubles") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const double x = u(rng);
    CHECK(std::stod(fmt17(x)) == x);
  }
  CHECK(fmt17(0.1) == "0.10000000000000001");
}

TEST_CASE("matrix, triple and model round trips") {
  std::mt19937_64 rng(2);
  const auto ms = random_model_solution(rng, 4, Lattice3::cubic());
  const ModelSolution back = model_from_json_unchecked(Json::parse(to_json(ms).dump()));
  for (int i = 0; i < 3; ++i) {
    CHECK(back.gamma[i] == ms.gamma[i]);
    CHECK(back.nn[i] == ms.nn[i]);
  }
  const Json plain = Json::parse("[[1, 0], [0, 2]]");
  const CMatrix m = matrix_from_json(plain);
  CHECK(m(1, 1) == cplx(2, 0));
  CHECK(m(0, 1) == cplx(0, 0));
  CHECK_THROWS(matrix_from_json(Json::parse("[[1, 0], [0]]")));
}

TEST_CASE("curve files are bit-identical after a round trip") {
  const auto c = fixture::tanh_curve({2.0}, {0.3}, 5, 51);
  const auto dir = scratch("curve");
  save_curve(*c, dir / "c.json");
  const NahmCurve back = load_curve(dir / "c.json");
  CHECK(back.grid == c->grid);
  for (std::size_t k = 0; k < c->a.size(); ++k)
    for (int i = 0; i < 3; ++i) CHECK(back.a[k][i] == c->a[k][i]);
  CHECK(curve_hash(back) == curve_hash(*c));
  save_curve(back, dir / "d.json");
  CHECK(read_text(dir / "c.json") == read_text(dir / "d.json"));
}

TEST_CASE("kernel cache stores, verifies and rejects corrupted entries") {
  const auto c = fixture::tanh_curve({2.0}, {0.3}, 8, 321);
  TotalKernelOptions opt;
  opt.policy.convexity_shortcut = false;
  const auto tk = total_kernel(c, DualTorusPoint{}, Lattice3::cubic(), CliffordModel::standard(), opt);
  REQUIRE(tk.dim == 1);
  const auto dir = scratch("cache");
  const KernelCache cache(dir);
  const std::string key = KernelCache::key(curve_hash(*c), tk.xi, "defaults");
  CHECK_FALSE(cache.load(key).has_value());
  cache.store(key, tk);
  const auto back = cache.load(key);
  REQUIRE(back.has_value());
  CHECK(back->dim == tk.dim);
  const auto& km = back->modes.at({0, 0, 0});
  const auto& k0 = tk.modes.at({0, 0, 0});
  CHECK(km.basis[0] == k0.basis[0]);
  CHECK(km.weights == k0.weights);
  CHECK(std::abs(l2_product(km, 0, km, 0, true) - l2_product(k0, 0, k0, 0, true)) == 0.0);
  CHECK(KernelCache::key(curve_hash(*c), tk.xi, "other") != key);

  // flip one payload byte
  std::filesystem::path file;
  for (const auto& e : std::filesystem::directory_iterator(dir)) file = e.path();
  std::string raw = read_text(file);
  raw[raw.size() - 5] = raw[raw.size() - 5] == '1' ? '2' : '1';
  write_text(file, raw);
  CHECK_FALSE(cache.load(key).has_value());
}
