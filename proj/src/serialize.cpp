#include "nahm/serialize.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace nahm {

Json to_json(const CMatrix& m) {
  Json rows = Json::array();
  for (int i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(std::move(row));
  }
  return rows;
}

CMatrix matrix_from_json(const Json& j) {
  if (!j.is_array()) throw std::invalid_argument("matrix must be an array of rows");
  const auto r = static_cast<Eigen::Index>(j.size());
  if (r == 0) return CMatrix(0, 0);
  const auto c = static_cast<Eigen::Index>(j[0].size());
  CMatrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    if (!j[i].is_array() || static_cast<Eigen::Index>(j[i].size()) != c)
      throw std::invalid_argument("matrix rows have different lengths");
    for (Eigen::Index k = 0; k < c; ++k) {
      const Json& e = j[i][k];
      if (e.is_number()) m(i, k) = e.get<double>();
      else if (e.is_array() && e.size() == 2) m(i, k) = cplx(e[0].get<double>(), e[1].get<double>());
      else throw std::invalid_argument("matrix entries must be [re, im] pairs");
    }
  }
  return m;
}

Json to_json(const Triple& t) { return Json::array({to_json(t[0]), to_json(t[1]), to_json(t[2])}); }

Triple triple_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("expected a triple of matrices");
  return {matrix_from_json(j[0]), matrix_from_json(j[1]), matrix_from_json(j[2])};
}

Json to_json(const ModelSolution& ms) { return {{"gamma", to_json(ms.gamma)}, {"n", to_json(ms.nn)}}; }

ModelSolution model_from_json_unchecked(const Json& j) {
  ModelSolution ms;
  ms.gamma = triple_from_json(j.at("gamma"));
  if (j.contains("n")) ms.nn = triple_from_json(j.at("n"));
  else {
    const int r = static_cast<int>(ms.gamma[0].rows());
    ms.nn = zero_triple(r);
  }
  return ms;
}

Json to_json(const NahmCurve& c) {
  Json samples = Json::array();
  for (const auto& a : c.a) samples.push_back(to_json(a));
  return {{"format", "nahm-curve/1"}, {"grid", c.grid}, {"a", samples}, {"minus", to_json(c.minus)},
          {"plus", to_json(c.plus)}};
}

NahmCurve curve_from_json(const Json& j) {
  if (j.value("format", "") != "nahm-curve/1") throw std::invalid_argument("not a curve document");
  NahmCurve c;
  c.grid = j.at("grid").get<std::vector<double>>();
  for (const auto& s : j.at("a")) c.a.push_back(triple_from_json(s));
  c.minus = model_from_json_unchecked(j.at("minus"));
  c.plus = model_from_json_unchecked(j.at("plus"));
  if (c.grid.size() != c.a.size() || c.grid.size() < 2) throw std::invalid_argument("curve: grid/sample mismatch");
  for (std::size_t k = 0; k + 1 < c.grid.size(); ++k)
    if (!(c.grid[k + 1] > c.grid[k])) throw std::invalid_argument("curve: grid not strictly increasing");
  return c;
}

void write_text(const std::filesystem::path& p, const std::string& s) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  const auto tmp = std::filesystem::path(p.string() + ".tmp");
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << s;
  }
  std::filesystem::rename(tmp, p);
}

std::string read_text(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

void save_curve(const NahmCurve& c, const std::filesystem::path& p) { write_text(p, to_json(c).dump(1) + "\n"); }

NahmCurve load_curve(const std::filesystem::path& p) { return curve_from_json(Json::parse(read_text(p))); }

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, data.data(), data.size()) != 1 || EVP_DigestFinal_ex(ctx, md, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("sha256 failed");
  }
  EVP_MD_CTX_free(ctx);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return os.str();
}

std::string curve_hash(const NahmCurve& c) { return sha256_hex(to_json(c).dump()); }

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

Json vec_json(const CVector& v) {
  Json a = Json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back({v[i].real(), v[i].imag()});
  return a;
}

CVector vec_from(const Json& j) {
  CVector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = cplx(j[i][0], j[i][1]);
  return v;
}

Json tail_json(const ExpTail& t) {
  return {{"t_end", t.t_end},
          {"rates", std::vector<double>(t.rates.data(), t.rates.data() + t.rates.size())},
          {"vecs", to_json(t.vecs)},
          {"coeff", vec_json(t.coeff)}};
}

ExpTail tail_from(const Json& j) {
  ExpTail t;
  t.t_end = j.at("t_end");
  const auto r = j.at("rates").get<std::vector<double>>();
  t.rates = Eigen::Map<const Eigen::VectorXd>(r.data(), static_cast<Eigen::Index>(r.size()));
  t.vecs = matrix_from_json(j.at("vecs"));
  if (t.vecs.size() == 0) t.vecs.resize(0, t.rates.size());
  t.coeff = vec_from(j.at("coeff"));
  return t;
}

}  // namespace

Json to_json(const ModeKernel& k) {
  Json basis = Json::array(), tm = Json::array(), tp = Json::array();
  for (const auto& b : k.basis) basis.push_back(to_json(b));
  for (const auto& t : k.tail_minus) tm.push_back(tail_json(t));
  for (const auto& t : k.tail_plus) tp.push_back(tail_json(t));
  return {{"n", k.n},
          {"dim", k.dim},
          {"t", k.t},
          {"basis", basis},
          {"tail_minus", tm},
          {"tail_plus", tp},
          {"principal_sines",
           std::vector<double>(k.principal_sines.data(), k.principal_sines.data() + k.principal_sines.size())},
          {"uncertain", k.uncertain},
          {"gram_defect", k.gram_defect},
          {"volume", k.volume}};
}

ModeKernel mode_kernel_from_json(const Json& j) {
  ModeKernel k;
  k.n = j.at("n").get<ModeIndex>();
  k.dim = j.at("dim");
  k.t = j.at("t").get<std::vector<double>>();
  if (!k.t.empty()) k.weights = quadrature_weights(k.t);
  for (const auto& b : j.at("basis")) k.basis.push_back(matrix_from_json(b));
  for (const auto& t : j.at("tail_minus")) k.tail_minus.push_back(tail_from(t));
  for (const auto& t : j.at("tail_plus")) k.tail_plus.push_back(tail_from(t));
  const auto ps = j.at("principal_sines").get<std::vector<double>>();
  k.principal_sines = Eigen::Map<const Eigen::VectorXd>(ps.data(), static_cast<Eigen::Index>(ps.size()));
  k.uncertain = j.at("uncertain");
  k.gram_defect = j.at("gram_defect");
  k.volume = j.at("volume");
  return k;
}

Json to_json(const TotalKernel& k) {
  Json modes = Json::array();
  for (const auto& [n, mk] : k.modes) modes.push_back(to_json(mk));
  return {{"xi", {k.xi.coeffs[0], k.xi.coeffs[1], k.xi.coeffs[2]}},
          {"modes", modes},
          {"dim", k.dim},
          {"flipped_dim", k.flipped_dim},
          {"modes_examined", k.modes_examined},
          {"modes_shortcut", k.modes_shortcut},
          {"cutoff", k.cutoff},
          {"certified", k.certified},
          {"uncertain", k.uncertain},
          {"warnings", k.warnings}};
}

TotalKernel total_kernel_from_json(const Json& j) {
  TotalKernel k;
  const auto xi = j.at("xi").get<std::vector<double>>();
  k.xi.coeffs = Eigen::Vector3d(xi.at(0), xi.at(1), xi.at(2));
  for (const auto& m : j.at("modes")) {
    ModeKernel mk = mode_kernel_from_json(m);
    k.modes.emplace(mk.n, std::move(mk));
  }
  k.dim = j.at("dim");
  k.flipped_dim = j.at("flipped_dim");
  k.modes_examined = j.at("modes_examined");
  k.modes_shortcut = j.at("modes_shortcut");
  k.cutoff = j.at("cutoff");
  k.certified = j.at("certified");
  k.uncertain = j.at("uncertain");
  k.warnings = j.at("warnings").get<std::vector<std::string>>();
  return k;
}

namespace {
constexpr const char* kMagic = "NAHMKC1";
}

std::string KernelCache::key(const std::string& curve_hash, const DualTorusPoint& xi, const std::string& tolerances) {
  std::ostringstream os;
  os << curve_hash << '|' << fmt17(xi.coeffs[0]) << ',' << fmt17(xi.coeffs[1]) << ',' << fmt17(xi.coeffs[2]) << '|'
     << tolerances;
  return sha256_hex(os.str());
}

std::optional<TotalKernel> KernelCache::load(const std::string& key) const {
  const auto p = dir_ / (key + ".kc");
  if (!std::filesystem::exists(p)) return std::nullopt;
  const std::string s = read_text(p);
  const auto a = s.find('\n');
  const auto b = a == std::string::npos ? a : s.find('\n', a + 1);
  if (b == std::string::npos || s.substr(0, a) != kMagic) return std::nullopt;
  const std::string sum = s.substr(a + 1, b - a - 1);
  const std::string payload = s.substr(b + 1);
  if (sha256_hex(payload) != sum) return std::nullopt;  // corrupted entry: recompute
  return total_kernel_from_json(Json::parse(payload));
}

void KernelCache::store(const std::string& key, const TotalKernel& k) const {
  const std::string payload = to_json(k).dump();
  write_text(dir_ / (key + ".kc"), std::string(kMagic) + "\n" + sha256_hex(payload) + "\n" + payload);
}

}  // namespace nahm
