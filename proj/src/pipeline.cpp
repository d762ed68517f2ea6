#include "nahm/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <sstream>

#include "nahm/parallel.hpp"

namespace nahm {

namespace {

constexpr const char* kVersion = "nahmlab 0.1.0";

Json manifest_ref(const PipelineConfig& cfg) { return {{"config_hash", cfg.hash()}, {"version", kVersion}}; }

Json xi_json(const DualTorusPoint& p) { return Json::array({p.coeffs[0], p.coeffs[1], p.coeffs[2]}); }

Json violations_json(const std::vector<Violation>& v, const std::string& side) {
  Json a = Json::array();
  for (const auto& x : v) a.push_back({{"side", side}, {"identity", x.identity}, {"residual", x.residual}});
  return a;
}

std::shared_ptr<const NahmCurve> load_curve_for(const PipelineConfig& cfg,
                                                const std::optional<std::filesystem::path>& file) {
  const auto p = file ? *file : cfg.output_dir / "curve.json";
  if (!std::filesystem::exists(p)) throw ValidationError({{"curve file missing (run solve first): " + p.string(), 0}});
  return std::make_shared<const NahmCurve>(load_curve(p));
}

TotalKernelOptions kernel_options(const PipelineConfig& cfg) {
  TotalKernelOptions o;
  o.policy.margin = cfg.transform.mode_margin;
  o.policy.extra_shells = cfg.transform.extra_shells;
  o.policy.convexity_shortcut = cfg.transform.convexity_shortcut;
  o.policy.gap_min = cfg.transform.gap_min;
  o.kernel.angle_tol = cfg.transform.angle_tol;
  o.kernel.angle_uncertain = cfg.transform.angle_uncertain;
  o.threads = 1;
  return o;
}

std::string tolerance_key(const TotalKernelOptions& o) {
  std::ostringstream os;
  os << fmt17(o.policy.margin) << ',' << o.policy.extra_shells << ',' << o.policy.convexity_shortcut << ','
     << fmt17(o.policy.gap_min) << ',' << fmt17(o.kernel.angle_tol) << ',' << fmt17(o.kernel.angle_uncertain);
  return os.str();
}

struct SampleOutcome {
  bool singular = false;
  std::string note;
  std::shared_ptr<const TotalKernel> kernel;
  MonopoleSample sample;
};

SampleOutcome compute_sample(const PipelineConfig& cfg, std::shared_ptr<const NahmCurve> curve,
                             const std::string& chash, const DualTorusPoint& xi) {
  SampleOutcome out;
  const TotalKernelOptions opt = kernel_options(cfg);
  const CliffordModel cm = CliffordModel::standard();
  const KernelCache cache(cfg.output_dir / "cache");
  const std::string key = KernelCache::key(chash, xi, tolerance_key(opt));
  std::optional<TotalKernel> tk;
  if (cfg.cache) tk = cache.load(key);
  if (!tk) {
    try {
      tk = total_kernel(curve, xi, cfg.lattice(), cm, opt);
    } catch (const GapError& e) {
      out.singular = true;
      out.note = e.what();
      return out;
    }
    if (cfg.cache) cache.store(key, *tk);
  }
  out.kernel = std::make_shared<const TotalKernel>(std::move(*tk));
  out.sample = higgs_field(out.kernel, key.substr(0, 16));
  return out;
}

std::string join_doubles(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + fmt17(v[i]);
  return s;
}

Json weights_json(const Su2WeightVector& w) { return w.weights; }

}  // namespace

std::string PipelineConfig::hash() const { return sha256_hex(source.dump()); }

PipelineConfig config_from_json(const Json& j) {
  PipelineConfig c;
  std::vector<Violation> bad;
  try {
    c.source = j;
    if (j.contains("lattice")) {
      const auto rows = j.at("lattice").get<std::vector<std::vector<double>>>();
      if (rows.size() != 3) throw std::invalid_argument("lattice must be 3x3");
      for (int i = 0; i < 3; ++i) {
        if (rows[i].size() != 3) throw std::invalid_argument("lattice must be 3x3");
        for (int k = 0; k < 3; ++k) c.lattice_rows(i, k) = rows[i][k];
      }
    }
    c.minus = model_from_json_unchecked(j.at("minus"));
    c.plus = model_from_json_unchecked(j.at("plus"));
    if (j.contains("solver")) {
      const Json& s = j["solver"];
      c.solver.T = s.value("T", c.solver.T);
      c.solver.grid_n = s.value("grid_n", c.solver.grid_n);
      c.solver.tol = s.value("tol", c.solver.tol);
      c.solver.max_iter = s.value("max_iter", c.solver.max_iter);
      c.solver.perturbation = s.value("perturbation", c.solver.perturbation);
      c.solver.interp_tol = s.value("interp_tol", c.solver.interp_tol);
    }
    if (j.contains("transform")) {
      const Json& s = j["transform"];
      c.transform.mode_margin = s.value("mode_margin", c.transform.mode_margin);
      if (s.contains("xi_grid")) c.transform.xi_grid = s["xi_grid"].get<std::array<int, 3>>();
      c.transform.gap_min = s.value("gap_min", c.transform.gap_min);
      c.transform.angle_tol = s.value("angle_tol", c.transform.angle_tol);
      c.transform.angle_uncertain = s.value("angle_uncertain", c.transform.angle_uncertain);
      c.transform.extra_shells = s.value("extra_shells", c.transform.extra_shells);
      c.transform.convexity_shortcut = s.value("convexity_shortcut", c.transform.convexity_shortcut);
      if (s.contains("d0") && !s["d0"].is_null()) c.transform.d0 = s["d0"].get<double>();
      c.transform.radii = s.value("radii", c.transform.radii);
    }
    c.output_dir = j.value("output_dir", std::string("out"));
    c.threads = j.value("threads", 1);
    c.cache = j.value("cache", true);
    c.seed = j.value("seed", 1ULL);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError({{std::string("malformed config: ") + e.what(), 0}});
  } catch (const std::invalid_argument& e) {
    throw ValidationError({{std::string("malformed config: ") + e.what(), 0}});
  }
  auto need = [&](bool ok, const std::string& what) {
    if (!ok) bad.push_back({what, 0});
  };
  need(c.solver.tol > 0 && c.solver.interp_tol > 0, "solver tolerances must be positive");
  need(c.transform.gap_min > 0 && c.transform.angle_tol > 0 && c.transform.angle_uncertain >= c.transform.angle_tol,
       "transform tolerances must be positive and ordered");
  need(c.solver.T > 0, "solver.T must be positive");
  need(c.solver.grid_n >= 3, "solver.grid_n must be at least 3");
  need(c.transform.xi_grid[0] >= 3 && c.transform.xi_grid[1] >= 3 && c.transform.xi_grid[2] >= 3,
       "transform.xi_grid sizes must be at least 3");
  need(c.transform.radii >= 3, "transform.radii must be at least 3");
  need(c.threads >= 1, "threads must be at least 1");
  const auto r = c.minus.gamma[0].rows();
  bool square = true;
  for (const ModelSolution* ms : {&c.minus, &c.plus})
    for (int i = 0; i < 3; ++i)
      square = square && ms->gamma[i].rows() == r && ms->gamma[i].cols() == r && ms->nn[i].rows() == r &&
               ms->nn[i].cols() == r;
  need(square && r > 0, "all matrices must be square with a common rank");
  if (std::abs(c.lattice_rows.determinant()) <= 1e-12) bad.push_back({"lattice basis is singular", 0});
  if (!bad.empty()) throw ValidationError(std::move(bad));
  return c;
}

PipelineConfig load_config(const std::filesystem::path& p) {
  if (!std::filesystem::is_regular_file(p)) throw ValidationError({{"config file not found: " + p.string(), 0}});
  Json j;
  try {
    j = Json::parse(read_text(p));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError({{std::string("config is not valid JSON: ") + e.what(), 0}});
  }
  return config_from_json(j);
}

void update_manifest(const PipelineConfig& cfg, const std::string& stage, int exit_code, double seconds) {
  const auto p = cfg.output_dir / "manifest.json";
  Json m = Json::object();
  if (std::filesystem::exists(p)) {
    try {
      m = Json::parse(read_text(p));
    } catch (...) {
      m = Json::object();
    }
  }
  if (m.value("config_hash", "") != cfg.hash()) m = Json::object();  // new configuration, new manifest
  m["config_hash"] = cfg.hash();
  m["version"] = kVersion;
  m["seed"] = cfg.seed;
  m["stages"][stage] = {{"exit_code", exit_code},
                        {"status", exit_code == 0 ? "ok" : "failed"},
                        {"seconds", seconds}};
  write_text(p, m.dump(2) + "\n");
}

// ---------------------------------------------------------------- validate

CommandResult cmd_validate(const PipelineConfig& cfg) {
  CommandResult res;
  Json rep = {{"manifest", manifest_ref(cfg)}, {"command", "validate"}};
  const auto vm = model_violations(cfg.minus.gamma, cfg.minus.nn);
  const auto vp = model_violations(cfg.plus.gamma, cfg.plus.nn);
  if (!vm.empty() || !vp.empty()) {
    Json all = violations_json(vm, "minus");
    for (auto& x : violations_json(vp, "plus")) all.push_back(x);
    rep["valid"] = false;
    rep["violations"] = all;
    std::ostringstream os;
    os << "invalid model solution:";
    for (const auto& x : all) os << "\n  " << x["side"].get<std::string>() << ": " << x["identity"].get<std::string>()
                                 << " (residual " << x["residual"].get<double>() << ")";
    res.summary = os.str();
    res.exit_code = kExitValidation;
    res.report = rep;
    write_text(cfg.output_dir / "validate.json", rep.dump(2) + "\n");
    return res;
  }
  const Lattice3 l = cfg.lattice();
  SingularitySet sing;
  try {
    sing = singularity_set(cfg.plus, cfg.minus, l);
  } catch (const ValidationError& e) {
    rep["valid"] = false;
    rep["violations"] = violations_json(e.violations(), "spectrum");
    res.summary = e.what();
    res.exit_code = kExitValidation;
    res.report = rep;
    write_text(cfg.output_dir / "validate.json", rep.dump(2) + "\n");
    return res;
  }
  std::optional<ComplexCoords> cc;
  try {
    cc.emplace(l);
  } catch (const InvalidLattice&) {
  }
  const DualLattice3 dl = dual_lattice(l);
  Json pts = Json::array();
  std::ostringstream os;
  os << "valid; Sing = {";
  for (std::size_t i = 0; i < sing.points.size(); ++i) {
    const auto& p = sing.points[i];
    Json e = {{"xi", xi_json(p.xi)},
              {"multiplicity_plus", p.mult_plus},
              {"multiplicity_minus", p.mult_minus},
              {"weights_plus", weights_json(p.w_plus)},
              {"weights_minus", weights_json(p.w_minus)}};
    if (cc) {
      const Eigen::Vector3d cov = dl.covector(p.xi.coeffs);
      const auto gp = graded_from_model(twist(cfg.plus, cov), *cc);
      const auto gm = graded_from_model(twist(cfg.minus, cov), *cc);
      const auto [wp, wm] = predicted_weights(gp, gm, *cc, &p.rho_plus, &p.rho_minus);
      e["algebraic"] = {{"weights_plus", weights_json(wp)}, {"weights_minus", weights_json(wm)}, {"agree", true}};
    }
    pts.push_back(e);
    os << (i ? ", " : "") << "(" << p.xi.coeffs[0] << "," << p.xi.coeffs[1] << "," << p.xi.coeffs[2] << "): +"
       << p.w_plus.str() << " -" << p.w_minus.str();
  }
  os << "}";
  rep["valid"] = true;
  rep["rank"] = cfg.plus.rank();
  rep["singular_points"] = pts;
  rep["complex_split"] = cc.has_value();
  res.report = rep;
  res.summary = os.str();
  write_text(cfg.output_dir / "validate.json", rep.dump(2) + "\n");
  return res;
}

// ---------------------------------------------------------------- solve

CommandResult cmd_solve(const PipelineConfig& cfg) {
  CommandResult res;
  Json rep = {{"manifest", manifest_ref(cfg)}, {"command", "solve"}};
  ModelSolution minus, plus;
  try {
    minus = validate_model_solution(cfg.minus.gamma, cfg.minus.nn);
    plus = validate_model_solution(cfg.plus.gamma, cfg.plus.nn);
  } catch (const ValidationError& e) {
    rep["violations"] = violations_json(e.violations(), "model");
    res.report = rep;
    res.summary = e.what();
    res.exit_code = kExitValidation;
    write_text(cfg.output_dir / "solve.json", rep.dump(2) + "\n");
    return res;
  }
  HeteroclinicOptions opt;
  opt.max_iter = cfg.solver.max_iter;
  opt.perturbation = cfg.solver.perturbation;
  opt.interp_tol = cfg.solver.interp_tol;
  opt.seed = cfg.seed;
  HeteroclinicResult hr;
  try {
    hr = solve_heteroclinic(minus, plus, cfg.solver.T, cfg.solver.grid_n, cfg.solver.tol, opt);
  } catch (const std::invalid_argument& e) {
    rep["violations"] = Json::array({{{"identity", e.what()}, {"residual", 0}}});
    res.report = rep;
    res.summary = e.what();
    res.exit_code = kExitValidation;
    write_text(cfg.output_dir / "solve.json", rep.dump(2) + "\n");
    return res;
  }
  rep["found"] = hr.found;
  rep["reason"] = hr.reason;
  rep["iterations"] = hr.iterations;
  rep["residual_history"] = hr.residual_history;
  rep["collocation_residual"] = hr.collocation_residual;
  rep["interpolant_residual"] = hr.interpolant_residual;
  rep["boundary_split"] = {
      {"minus", {{"stable", hr.split_minus.stable}, {"unstable", hr.split_minus.unstable}, {"center", hr.split_minus.center}}},
      {"plus", {{"stable", hr.split_plus.stable}, {"unstable", hr.split_plus.unstable}, {"center", hr.split_plus.center}}}};
  if (!hr.found) {
    res.exit_code = kExitNoSolution;
    res.summary = "no solution: " + hr.reason;
    res.report = rep;
    write_text(cfg.output_dir / "solve.json", rep.dump(2) + "\n");
    return res;
  }
  const NahmCurve& c = *hr.curve;
  save_curve(c, cfg.output_dir / "curve.json");
  const auto prof = asd_residual(c);
  std::ostringstream csv;
  csv << "t,asd_residual\n";
  for (std::size_t k = 0; k < prof.size(); ++k) csv << fmt17(c.grid[k]) << ',' << fmt17(prof[k]) << '\n';
  write_text(cfg.output_dir / "residual.csv", csv.str());
  const double energy = curvature_energy(c, cfg.lattice(), cfg.solver.interp_tol);
  const double index = energy / (8 * std::numbers::pi * std::numbers::pi);
  const AsymptoticReport af = asymptotic_fit(c);
  auto fit_json = [](const AsymptoticFit& f) {
    return Json{{"center_exponent", f.center_exponent}, {"center_exact", f.center_exact},
                {"perp_rate", f.perp_rate},             {"perp_exact", f.perp_exact},
                {"nonconstant_residual", f.nonconstant_residual}};
  };
  rep["curve_file"] = "curve.json";
  rep["curve_hash"] = curve_hash(c);
  rep["max_asd_residual"] = *std::max_element(prof.begin(), prof.end());
  rep["tail_mismatch"] = c.tail_mismatch();
  rep["energy"] = energy;
  rep["energy_over_8pi2"] = index;
  rep["integrality_gap"] = std::abs(index - std::round(index));
  rep["asymptotics"] = {{"minus", fit_json(af.minus)}, {"plus", fit_json(af.plus)}};
  res.report = rep;
  std::ostringstream os;
  os << "solved: residual " << hr.collocation_residual << ", energy/8pi^2 = " << index;
  res.summary = os.str();
  write_text(cfg.output_dir / "solve.json", rep.dump(2) + "\n");
  return res;
}

// ---------------------------------------------------------------- transform

CommandResult cmd_transform(const PipelineConfig& cfg, const std::optional<std::filesystem::path>& curve_file) {
  CommandResult res;
  Json rep = {{"manifest", manifest_ref(cfg)}, {"command", "transform"}};
  const auto curve = load_curve_for(cfg, curve_file);
  const std::string chash = curve_hash(*curve);
  const Lattice3 l = cfg.lattice();
  const DualLattice3 dl = dual_lattice(l);
  std::array<int, 3> dims = cfg.transform.xi_grid;
  for (auto& d : dims) d <<= cfg.refine;
  const std::size_t total = static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  auto site = [&](std::size_t idx) {
    const int i = static_cast<int>(idx % dims[0]);
    const int j = static_cast<int>((idx / dims[0]) % dims[1]);
    const int k = static_cast<int>(idx / (static_cast<std::size_t>(dims[0]) * dims[1]));
    return std::array<int, 3>{i, j, k};
  };
  std::vector<SampleOutcome> samples(total);
  parallel_for(total, cfg.threads, [&](std::size_t idx) {
    const auto s = site(idx);
    const DualTorusPoint xi =
        reduce_coefficients(Eigen::Vector3d(double(s[0]) / dims[0], double(s[1]) / dims[1], double(s[2]) / dims[2]));
    samples[idx] = compute_sample(cfg, curve, chash, xi);
    if (samples[idx].singular) samples[idx].sample.xi = xi;
  });

  std::ostringstream csv;
  csv << "xi1,xi2,xi3,rank,phi_norm,certified,singular,warning,eigenvalues\n";
  std::map<int, int> ranks;
  int uncertified = 0, singular = 0;
  for (std::size_t idx = 0; idx < total; ++idx) {
    const auto& o = samples[idx];
    const auto s = site(idx);
    const Eigen::Vector3d xi(double(s[0]) / dims[0], double(s[1]) / dims[1], double(s[2]) / dims[2]);
    csv << fmt17(xi[0]) << ',' << fmt17(xi[1]) << ',' << fmt17(xi[2]) << ',';
    if (o.singular) {
      ++singular;
      csv << ",,0,1,\"" << o.note << "\",\n";
      continue;
    }
    const TotalKernel& tk = *o.kernel;
    ranks[tk.dim]++;
    if (!tk.certified) ++uncertified;
    std::string warn;
    for (const auto& w : tk.warnings) warn += (warn.empty() ? "" : "; ") + w;
    csv << tk.dim << ',' << fmt17(higgs_norm(o.sample.phi)) << ',' << (tk.certified ? 1 : 0) << ",0,\"" << warn
        << "\"," << join_doubles(higgs_eigenvalues(o.sample.phi)) << '\n';
  }
  write_text(cfg.output_dir / "samples.csv", csv.str());

  // links and Bogomolny residual (coordinate grid must be orthogonal with equal spacing)
  const Eigen::Matrix3d& g = dl.gram();
  std::array<double, 3> hs;
  for (int mu = 0; mu < 3; ++mu) hs[mu] = std::sqrt(g(mu, mu)) / dims[mu];
  const bool cubic = std::abs(g(0, 1)) + std::abs(g(0, 2)) + std::abs(g(1, 2)) < 1e-12 &&
                     std::abs(hs[0] - hs[1]) < 1e-12 && std::abs(hs[0] - hs[2]) < 1e-12;
  LatticeMonopole lm;
  lm.resize(dims, hs[0]);
  int rejected = 0, links = 0;
  for (std::size_t idx = 0; idx < total; ++idx) {
    const auto& o = samples[idx];
    lm.valid[idx] = !o.singular;
    if (o.singular) continue;
    lm.phi[idx] = o.sample.phi;
    const auto s = site(idx);
    for (int mu = 0; mu < 3; ++mu) {
      auto t = s;
      ModeIndex wrap{0, 0, 0};
      if (++t[mu] == dims[mu]) {
        t[mu] = 0;
        wrap[mu] = 1;
      }
      const std::size_t tidx = static_cast<std::size_t>(lm.index(t[0], t[1], t[2]));
      if (samples[tidx].singular || samples[tidx].kernel->dim != o.kernel->dim) {
        lm.valid[idx] = false;
        continue;
      }
      try {
        lm.links[mu][idx] = connection_links(*o.kernel, *samples[tidx].kernel, wrap).u;
        ++links;
      } catch (const NumericalError&) {
        ++rejected;
        lm.valid[idx] = false;
      }
    }
  }
  Json bog;
  if (!cubic) {
    bog = {{"available", false}, {"reason", "dual grid is not orthogonal with equal spacing"}};
  } else if (auto r = bogomolny_residual_max(lm)) {
    bog = {{"available", true}, {"h", lm.h}, {"planes", r->plane}, {"max", r->max()}};
  } else {
    bog = {{"available", false}, {"reason", "no interior site with a valid stencil"}};
  }
  Json rank_json = Json::object();
  for (const auto& [r, n] : ranks) rank_json[std::to_string(r)] = n;
  rep["curve_hash"] = chash;
  rep["grid"] = dims;
  rep["samples"] = total;
  rep["singular_samples"] = singular;
  rep["uncertified_samples"] = uncertified;
  rep["rank_counts"] = rank_json;
  rep["links"] = links;
  rep["rejected_links"] = rejected;
  rep["bogomolny"] = bog;
  rep["samples_file"] = "samples.csv";
  res.report = rep;
  write_text(cfg.output_dir / "transform.json", rep.dump(2) + "\n");
  std::ostringstream os;
  os << "transform: " << total << " samples, ranks {";
  bool first = true;
  for (const auto& [r, n] : ranks) {
    os << (first ? "" : ", ") << r << ": " << n;
    first = false;
  }
  os << "}, " << singular << " singular, " << uncertified << " uncertified";
  res.summary = os.str();
  if (uncertified > 0) res.exit_code = kExitCertification;
  return res;
}

// ---------------------------------------------------------------- weights

CommandResult cmd_weights(const PipelineConfig& cfg, const Eigen::Vector3d& point,
                          const std::optional<std::filesystem::path>& curve_file) {
  CommandResult res;
  Json rep = {{"manifest", manifest_ref(cfg)}, {"command", "weights"}};
  const Lattice3 l = cfg.lattice();
  const DualLattice3 dl = dual_lattice(l);
  const ModelSolution plus = validate_model_solution(cfg.plus.gamma, cfg.plus.nn);
  const ModelSolution minus = validate_model_solution(cfg.minus.gamma, cfg.minus.nn);
  const SingularitySet sing = singularity_set(plus, minus, l);
  const DualTorusPoint p = reduce_coefficients(point);
  const SingularPoint* sp = nullptr;
  double nearest_other = 1e300;
  for (const auto& q : sing.points) {
    const double d = torus_distance(q.xi, p, dl);
    if (d <= 1e-6) sp = &q;
    else nearest_other = std::min(nearest_other, d);
  }
  if (!sp) throw ValidationError({{"p ∉ Sing", 0}});
  // the nearest lattice translate of p itself also counts
  for (int k = 0; k < 3; ++k) nearest_other = std::min(nearest_other, dl.basis().row(k).norm());
  const double d0 = cfg.transform.d0.value_or(0.25 * nearest_other);
  Su2WeightVector wp = sp->w_plus, wm = sp->w_minus;
  try {
    const ComplexCoords cc(l);
    const Eigen::Vector3d cov = dl.covector(p.coeffs);
    const auto pr = predicted_weights(graded_from_model(twist(plus, cov), cc), graded_from_model(twist(minus, cov), cc),
                                      cc, &sp->rho_plus, &sp->rho_minus);
    wp = pr.first;
    wm = pr.second;
  } catch (const InvalidLattice&) {
  }
  const auto curve = load_curve_for(cfg, curve_file);
  const std::string chash = curve_hash(*curve);
  const std::vector<Eigen::Vector3d> dirs = {Eigen::Vector3d(0.6, 0.48, 0.64).normalized(),
                                             Eigen::Vector3d(-0.48, 0.8, -0.36).normalized(),
                                             Eigen::Vector3d(0.1, -0.6, 0.79).normalized()};
  const int nr = cfg.transform.radii;
  std::vector<RaySamples> rays(dirs.size());
  Json ray_json = Json::array();
  std::ostringstream csv;
  csv << "ray,R,rank,phi_norm,phi_norm_times_R,eigenvalues\n";
  std::vector<SampleOutcome> outcomes(dirs.size() * nr);
  parallel_for(outcomes.size(), cfg.threads, [&](std::size_t idx) {
    const std::size_t a = idx / nr;
    const int j = static_cast<int>(idx % nr);
    const double R = d0 * std::ldexp(1.0, -j);
    const DualTorusPoint xi = reduce(dl.covector(p.coeffs) + R * dirs[a], dl);
    outcomes[idx] = compute_sample(cfg, curve, chash, xi);
  });
  bool band_ok = true;
  for (std::size_t a = 0; a < dirs.size(); ++a) {
    rays[a].direction = dirs[a];
    double lo = 1e300, hi = 0.0;
    for (int j = 0; j < nr; ++j) {
      const double R = d0 * std::ldexp(1.0, -j);
      const auto& o = outcomes[a * nr + j];
      if (o.singular) throw NumericalError("ray sample hit a singular point: " + o.note);
      rays[a].radius.push_back(R);
      const auto ev = higgs_eigenvalues(o.sample.phi);
      rays[a].eigenvalues.push_back(ev);
      const double pn = higgs_norm(o.sample.phi);
      lo = std::min(lo, pn * R);
      hi = std::max(hi, pn * R);
      csv << a << ',' << fmt17(R) << ',' << o.sample.rank << ',' << fmt17(pn) << ',' << fmt17(pn * R) << ','
          << join_doubles(ev) << '\n';
    }
    const bool ok = lo > 0 && hi <= 3 * lo;
    band_ok = band_ok && ok;
    ray_json.push_back({{"direction", {dirs[a][0], dirs[a][1], dirs[a][2]}}, {"phi_R_min", lo}, {"phi_R_max", hi},
                        {"band_ok", ok}});
  }
  write_text(cfg.output_dir / "weights_rays.csv", csv.str());
  WeightReport wr = fit_singularity_weights(p, rays, wp, wm);
  if (outcomes.front().sample.rank == 0) {
    wr.winding = 0;  // trivial bundle near p: det is constant
  } else {
    wr.notes.push_back("determinant winding needs holomorphic frames on the end slices; not computed");
    wr.flagged = true;
  }
  rep["point"] = xi_json(p);
  rep["d0"] = d0;
  rep["predicted_plus"] = weights_json(wp);
  rep["predicted_minus"] = weights_json(wm);
  rep["fitted_raw"] = wr.fitted_raw;
  rep["fitted"] = wr.fitted;
  rep["spread"] = wr.spread;
  rep["fit_residuals"] = wr.residuals;
  rep["k_plus"] = wr.k_plus;
  rep["k_minus"] = wr.k_minus;
  rep["winding"] = wr.winding ? Json(*wr.winding) : Json(nullptr);
  rep["higgs_band"] = {{"rays", ray_json}, {"ok", band_ok}};
  rep["notes"] = wr.notes;
  rep["status"] = wr.status();
  res.report = rep;
  write_text(cfg.output_dir / "weights.json", rep.dump(2) + "\n");
  res.summary = "weights at (" + fmt17(p.coeffs[0]) + "," + fmt17(p.coeffs[1]) + "," + fmt17(p.coeffs[2]) +
                "): " + wr.status() + "; predicted +" + wp.str() + " -" + wm.str();
  for (const auto& n : wr.notes) res.summary += "\n  " + n;
  res.exit_code = wr.status() == "PASS" ? kExitOk : kExitCertification;
  return res;
}

// ---------------------------------------------------------------- report

CommandResult cmd_report(const PipelineConfig& cfg) {
  CommandResult res;
  Json rep = {{"manifest", manifest_ref(cfg)}, {"command", "report"}};
  std::ostringstream os;
  os << "report for config " << cfg.hash().substr(0, 12);
  for (const char* stage : {"validate", "solve", "transform", "weights"}) {
    const auto p = cfg.output_dir / (std::string(stage) + ".json");
    if (!std::filesystem::exists(p)) {
      rep["stages"][stage] = nullptr;
      os << "\n  " << stage << ": not run";
      continue;
    }
    Json s = Json::parse(read_text(p));
    const bool same = s.contains("manifest") && s["manifest"].value("config_hash", "") == cfg.hash();
    rep["stages"][stage] = s;
    os << "\n  " << stage << ": " << (same ? "present" : "stale (different config)");
  }
  const auto mp = cfg.output_dir / "manifest.json";
  if (std::filesystem::exists(mp)) rep["run_manifest"] = Json::parse(read_text(mp));
  write_text(cfg.output_dir / "report.json", rep.dump(2) + "\n");
  res.report = rep;
  res.summary = os.str();
  return res;
}

}  // namespace nahm
