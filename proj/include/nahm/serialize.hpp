#pragma once

#include <filesystem>
#include <json.hpp>
#include <optional>
#include <string>

#include "nahm/dirac.hpp"

namespace nahm {

using Json = nlohmann::json;

// Matrices are nested arrays of [re, im] pairs, row by row.
Json to_json(const CMatrix& m);
CMatrix matrix_from_json(const Json& j);
Json to_json(const Triple& t);
Triple triple_from_json(const Json& j);
Json to_json(const ModelSolution& ms);
ModelSolution model_from_json_unchecked(const Json& j);

Json to_json(const NahmCurve& c);
NahmCurve curve_from_json(const Json& j);
void save_curve(const NahmCurve& c, const std::filesystem::path& p);
NahmCurve load_curve(const std::filesystem::path& p);

std::string sha256_hex(const std::string& data);
// Hash of the canonical curve document.
std::string curve_hash(const NahmCurve& c);

// 17 significant digits.
std::string fmt17(double x);

Json to_json(const ModeKernel& k);
ModeKernel mode_kernel_from_json(const Json& j);
Json to_json(const TotalKernel& k);
TotalKernel total_kernel_from_json(const Json& j);

// On-disk kernel cache: "<magic>\n<sha256 of payload>\n<payload>".
class KernelCache {
 public:
  explicit KernelCache(std::filesystem::path dir) : dir_(std::move(dir)) {}
  static std::string key(const std::string& curve_hash, const DualTorusPoint& xi, const std::string& tolerances);
  std::optional<TotalKernel> load(const std::string& key) const;
  void store(const std::string& key, const TotalKernel& k) const;
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
};

void write_text(const std::filesystem::path& p, const std::string& s);
std::string read_text(const std::filesystem::path& p);

}  // namespace nahm
